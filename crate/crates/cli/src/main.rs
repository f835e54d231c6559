fn main() {
    std::process::exit(purefilter_cli::run(std::env::args_os()));
}
