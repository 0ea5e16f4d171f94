fn main() {
    std::process::exit(transport_spectra::cli::run(std::env::args_os()));
}
