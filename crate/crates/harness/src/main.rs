fn main() {
    std::process::exit(gazepriv::cli_main());
}
