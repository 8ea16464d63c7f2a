use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = loudloss::cli::run(std::env::args_os(), &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Ok(()), Err(err)) => {
            eprintln!("loudloss: writing output: {err}");
            ExitCode::from(1)
        }
        (Err(err), _) => {
            eprintln!("loudloss: {}", err.line());
            ExitCode::from(err.code as u8)
        }
    }
}
