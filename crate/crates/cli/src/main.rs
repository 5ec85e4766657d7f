use std::io::{self, IsTerminal, Read, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let mut stdin = Vec::new();
    if spki_cli::wants_stdin(&argv) && !io::stdin().is_terminal() {
        let _ = io::stdin().read_to_end(&mut stdin);
    }
    let (status, out, err) = spki_cli::run_cli(&argv, &stdin);
    let _ = io::stdout().write_all(&out);
    let _ = io::stderr().write_all(&err);
    ExitCode::from(status as u8)
}
