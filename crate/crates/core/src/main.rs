use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("REDSPIDER_LOG")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match redspider::cli::run_command(args) {
        Ok(out) => {
            let to_file = std::env::args().any(|a| a == "--out");
            if !to_file {
                print!("{}", out.output);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
