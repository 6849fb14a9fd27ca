fn main() {
    std::process::exit(mco_ce_cli::run(std::env::args_os()));
}
