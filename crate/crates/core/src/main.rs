fn main() {
    std::process::exit(greybox::cli::cli_main(std::env::args_os()));
}
