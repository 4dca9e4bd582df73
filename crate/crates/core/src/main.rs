fn main() {
    std::process::exit(graph_poisson::cli::run_from(std::env::args_os()));
}
