use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = skysheaf_cli::run(std::env::args_os());
    if outcome.code == 2 {
        let msg = outcome.report.get("error").or_else(|| outcome.report.get("message"));
        if let Some(msg) = msg.and_then(|m| m.as_str()) {
            eprintln!("skysheaf: {}", msg.trim_end());
        }
    } else if let Some(msg) = outcome.report.get("message").and_then(|m| m.as_str()) {
        // help and version text
        print!("{msg}");
        return ExitCode::SUCCESS;
    }
    if outcome.code != 2 {
        let _ = std::io::stdout().write_all(outcome.render().as_bytes());
    }
    ExitCode::from(outcome.code as u8)
}
