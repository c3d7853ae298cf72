//! Thin command-line wrapper around [`maxwell_adi::cli`].

fn main() {
    std::process::exit(maxwell_adi::cli::run(std::env::args_os()));
}
