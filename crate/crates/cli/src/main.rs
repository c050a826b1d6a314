use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use erqm_cli::config::{parse_override, RunConfig};
use erqm_cli::experiments::{
    provenance, run_euclidean_report, run_table1, run_table2, run_table3, run_table4, Report,
};

#[derive(Parser)]
#[command(name = "erqm", version, about = "Semigroup scattering tables and Euclidean checks")]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key=value` override, repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact-oracle extraction errors.
    Table1,
    /// Iterated S-matrix convergence in n.
    Table2,
    /// Scalar Chebyshev accuracy.
    Table3,
    /// Sharp T from the iterated propagator.
    Table4,
    /// Free-field Euclidean report.
    Euclid,
    /// Every table in turn.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides: Result<Vec<_>, _> = cli.overrides.iter().map(|s| parse_override(s)).collect();
    let cfg = overrides.and_then(|o| RunConfig::from_file(cli.config.as_deref(), &o));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let runners: Vec<(&str, fn(&RunConfig) -> Report)> = match cli.command {
        Command::Table1 => vec![("table1", run_table1)],
        Command::Table2 => vec![("table2", run_table2)],
        Command::Table3 => vec![("table3", run_table3)],
        Command::Table4 => vec![("table4", run_table4)],
        Command::Euclid => vec![("euclid", run_euclidean_report)],
        Command::All => vec![
            ("table1", run_table1),
            ("table2", run_table2),
            ("table3", run_table3),
            ("table4", run_table4),
            ("euclid", run_euclidean_report),
        ],
    };
    let mut ok = true;
    for (name, run) in runners {
        let report = run(&cfg);
        match report.table.write(&out, &provenance(&cfg, name)) {
            Ok(path) => println!("wrote {}", path.display()),
            Err(e) => {
                eprintln!("cannot write {name}: {e}");
                ok = false;
            }
        }
        for c in &report.checks {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                println!("{mark} {}", c.name);
            } else {
                println!("{mark} {} ({})", c.name, c.detail);
            }
        }
        if let Some(e) = &report.table.error {
            eprintln!("{name} stopped early: {e}");
        }
        ok &= report.passed();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
