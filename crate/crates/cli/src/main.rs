fn main() {
    std::process::exit(ppt_cli::run());
}
