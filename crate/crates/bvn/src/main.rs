fn main() { std::process::exit(bvn::cli::main_with(std::env::args().collect())); }
