fn main() {
    std::process::exit(counter_gnn::cli::run(std::env::args_os()));
}
