fn main() {
    std::process::exit(zenoctl_cli::run(std::env::args_os()));
}
