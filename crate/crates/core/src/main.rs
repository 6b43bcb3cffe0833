fn main() {
    std::process::exit(cwi_transfer::cli::run(std::env::args_os()));
}
