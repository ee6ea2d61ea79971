fn main() {
    std::process::exit(fdwave::cli::dispatch(std::env::args_os()));
}
