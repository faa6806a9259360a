fn main() {
    env_logger::init();
    std::process::exit(singular_plap::cli::run(std::env::args_os()));
}
