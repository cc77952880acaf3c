fn main() {
    std::process::exit(perturbopt::cli::dispatch(std::env::args_os()));
}
