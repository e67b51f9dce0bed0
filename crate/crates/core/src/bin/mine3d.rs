fn main() {
    std::process::exit(mine3d::cli::run(std::env::args_os()));
}
