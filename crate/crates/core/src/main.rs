use std::process::ExitCode;

use beltrami_lab::cli::{run, RunConfig};
use clap::Parser;

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(report) => {
            for c in &report.checks {
                let mark = if c.pass { "ok  " } else { "FAIL" };
                println!("{mark} {} = {:e} ({} {:e})", c.name, c.value, c.relation, c.expected);
            }
            println!(
                "{}: {}/{} checks pass, report in {}",
                report.subcommand,
                report.checks.iter().filter(|c| c.pass).count(),
                report.checks.len(),
                config.out_dir.join(format!("{}.json", report.subcommand)).display()
            );
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
