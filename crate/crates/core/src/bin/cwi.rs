fn main() { std::process::exit(cwi::cli::run()) }
