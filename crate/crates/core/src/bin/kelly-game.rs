fn main() {
    std::process::exit(kelly_game::cli::main_with_args(std::env::args_os()));
}
