use std::process::ExitCode;

use nifty_core::config::{self, Command, USAGE};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match config::parse_args(&argv) {
        Ok(Command::Help) => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        Ok(Command::Serve(cfg)) => cfg,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::FAILURE;
        }
    };
    let server = match config::bind(&cfg) {
        Ok(server) => server,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let port = server.local_addr().map_or(cfg.port, |a| a.port());
    println!("serving {} on http://{}:{}/", cfg.handler, cfg.host, port);
    server.run()
}
