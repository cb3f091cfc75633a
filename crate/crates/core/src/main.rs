fn main() {
    std::process::exit(memsyn::io::cli::dispatch(std::env::args_os()));
}
