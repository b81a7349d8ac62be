use std::io::Write;

fn main() {
    let outcome = pvdb_cli::run(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(&outcome.stdout);
    let _ = stdout.flush();
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.exit);
}
