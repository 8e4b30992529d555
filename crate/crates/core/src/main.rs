fn main() {
    std::process::exit(omc_core::cli::dispatch(std::env::args_os()));
}
