fn main() {
    std::process::exit(tractforge::config::cli_main());
}
