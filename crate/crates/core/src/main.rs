use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match hotelling::cli::run_args(std::env::args_os()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = stdout.write_all(out.stdout.as_bytes());
            ExitCode::from(out.exit_code as u8)
        }
        Err((code, message)) => {
            if code == hotelling::cli::EXIT_OK {
                print!("{message}");
            } else {
                eprint!("{message}");
            }
            ExitCode::from(code as u8)
        }
    }
}
