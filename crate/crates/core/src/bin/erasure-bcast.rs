fn main() {
    std::process::exit(erasure_bcast::cli::dispatch(std::env::args_os()));
}
