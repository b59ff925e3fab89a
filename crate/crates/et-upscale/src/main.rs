fn main() {
    std::process::exit(et_upscale::cli::run(std::env::args_os()));
}
