fn main() {
    std::process::exit(qig::run(std::env::args_os()));
}
