fn main() {
    std::process::exit(medevent::cli::run(std::env::args_os()));
}
