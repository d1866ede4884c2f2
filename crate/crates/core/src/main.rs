fn main() {
    std::process::exit(coriolis_sphere::cli::main_with_args(std::env::args_os()));
}
