//! Drive the command-line front end in-process on a scenario file.

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/one_dim.json").to_string());
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    for cmd in ["qp", "tail", "validate"] {
        println!("$ brisk {cmd} {path}");
        let code = brisk::cli::run(["brisk", cmd, path.as_str()], &mut out, &mut err);
        println!("(exit {code})\n");
    }
}
