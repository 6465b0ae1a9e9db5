//! Command-line entry point; see [`capcert::cli`].

fn main() {
    std::process::exit(capcert::cli::main_with_args(std::env::args_os()));
}
