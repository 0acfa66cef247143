fn main() {
    std::process::exit(powersharing::cli::run(std::env::args_os()));
}
