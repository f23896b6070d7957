fn main() {
    eprintln!("holosum: no command given");
    std::process::exit(2);
}
