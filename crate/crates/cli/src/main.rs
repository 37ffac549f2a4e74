use std::process::exit;

fn main() {
    exit(contrack_cli::run(std::env::args_os()));
}
