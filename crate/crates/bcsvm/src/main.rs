fn main() { std::process::exit(bcsvm::cli::run()) }
