fn main() {
    std::process::exit(lek::run(std::env::args_os()));
}
