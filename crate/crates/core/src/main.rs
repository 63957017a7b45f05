fn main() {
    let status = synthsieve::harness::run_cli(std::env::args_os());
    std::process::exit(status.code());
}
