fn main() {
    std::process::exit(volterra_feller::cli::run(std::env::args_os()));
}
