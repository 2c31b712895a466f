use btq_cli::config::{read_settings, Output, RunConfig};
use clap::Parser;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status: 0 when every asserted tolerance holds, 1 on a numerical
/// failure, 2 on a usage error.
#[derive(Parser, Debug)]
#[command(name = "btq", version, about)]
struct Cli {
    /// verify | transport | coeff | trace | approx | oracle
    command: Option<String>,
    /// Flat key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// scaling:<s>, scaling<n>:<s>, segment:<tau0>,<tau1>, file:<path>, or a
    /// regression path name; `;power:<k>` reparametrizes.
    #[arg(long)]
    path: Option<String>,
    /// Row-major a,b,c,d.
    #[arg(long, allow_hyphen_values = true)]
    map: Option<String>,
    /// Modulus, e.g. 0+1i.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Path parameter for `transport`.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    pmin: Option<String>,
    #[arg(long)]
    pmax: Option<String>,
    /// Comma-separated levels; takes precedence over --pmin/--pmax.
    #[arg(long)]
    plist: Option<String>,
    /// Fixed torus grid size per axis.
    #[arg(long)]
    grid: Option<String>,
    /// RK4 steps along paths.
    #[arg(long)]
    steps: Option<String>,
    /// Replaces the tolerance of every asserted threshold check.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Report file; defaults to `<command>-report.<json|csv>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn settings(cli: Cli) -> anyhow::Result<BTreeMap<String, String>> {
    let mut s = match &cli.config {
        Some(p) => read_settings(&std::fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("command", cli.command),
        ("path", cli.path),
        ("map", cli.map),
        ("tau", cli.tau),
        ("t", cli.t),
        ("pmin", cli.pmin),
        ("pmax", cli.pmax),
        ("plist", cli.plist),
        ("grid", cli.grid),
        ("steps", cli.steps),
        ("tol", cli.tol),
        ("seed", cli.seed),
        ("out", cli.out.map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.insert(k.to_string(), v);
        }
    }
    if cli.json {
        s.insert("output".into(), "json".into());
    }
    if cli.csv {
        s.insert("output".into(), "csv".into());
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match settings(cli).and_then(RunConfig::from_settings) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match btq_cli::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let (text, ext) = match cfg.output {
        Output::Json => (Ok(report.json_string()), "json"),
        Output::Csv => (report.csv_string(), "csv"),
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}-report.{ext}", report.command)));
    if let Err(e) = text.and_then(|t| std::fs::write(&out, t).map_err(Into::into)) {
        eprintln!("error: writing {}: {e:#}", out.display());
        return ExitCode::from(1);
    }
    println!("{} -> {}", report.summary_line(), out.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
