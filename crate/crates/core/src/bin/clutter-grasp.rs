fn main() {
    std::process::exit(clutter_grasp::cli::run(std::env::args_os()));
}
