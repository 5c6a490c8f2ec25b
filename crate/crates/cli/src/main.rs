fn main() {
    std::process::exit(ellstab_cli::run_command(std::env::args_os().skip(1)));
}
