fn main() {
    std::process::exit(cdr_solver::cli::run(std::env::args_os()));
}
