fn main() {
    std::process::exit(wulff_cli::run(std::env::args_os()));
}
