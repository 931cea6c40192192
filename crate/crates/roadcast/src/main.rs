fn main() {
    std::process::exit(roadcast::cli::run_cli());
}
