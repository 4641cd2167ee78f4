fn main() {
    std::process::exit(selfservo::cli::run(std::env::args_os()));
}
