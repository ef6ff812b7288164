fn main() {
    std::process::exit(fair_kcenter::cli::run(std::env::args_os()));
}
