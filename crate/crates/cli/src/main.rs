//! `newsprop`: validate inputs, run the window grid, simulate bundles.
//!
//! Exit status: 0 when every requested artifact was produced, 1 on any
//! error (including strict-mode rejections and a run where every cell
//! failed), 2 on usage errors, 3 when a run wrote its outputs but some
//! cells failed.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use newsprop_core::pipeline::{
    cmd_run, cmd_simulate, cmd_validate, parse_modes, parse_polarities, parse_windows, RunConfig,
};
use newsprop_core::SimConfig;

#[derive(Parser)]
#[command(
    name = "newsprop",
    version,
    about = "News sentiment event study along supply chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load every input file and list rejected rows.
    Validate(Flags),
    /// Build panels, fit each (mode, polarity, window) cell and write reports.
    Run(Flags),
    /// Write a synthetic bundle and its expected coefficients.
    Simulate(Flags),
}

#[derive(Args)]
struct Flags {
    /// Firm registry (firm_id,market_id,sector_code,country).
    #[arg(long)]
    firms: Option<PathBuf>,
    /// Daily closes (firm_id,date,close).
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Daily index values (market_id,date,value).
    #[arg(long)]
    indices: Option<PathBuf>,
    /// Sentiment-scored news (news_id,date,firm_id,p_pos,p_neu,p_neg).
    #[arg(long)]
    news: Option<PathBuf>,
    /// Supply-chain edges (year,supplier_id,client_id).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// own, supplier, client, a comma list, or all.
    #[arg(long)]
    mode: Option<String>,
    /// positive, negative, or both.
    #[arg(long)]
    polarity: Option<String>,
    /// Comma-separated window lengths in trading days.
    #[arg(long)]
    windows: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heteroskedasticity-robust (HC1) standard errors.
    #[arg(long)]
    robust_se: bool,
    /// Treat any rejected input row as fatal.
    #[arg(long)]
    strict: bool,
    /// Also write each cell's panel.
    #[arg(long)]
    export_panel: bool,
    /// Simulation seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// key = value file. For `simulate` it holds simulation parameters,
    /// otherwise run settings. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn run_config(&self, with_file: bool) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if with_file {
            if let Some(path) = &self.config {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                cfg.apply_kv(&text)
                    .with_context(|| format!("in {}", path.display()))?;
            }
        }
        macro_rules! over {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                }
            };
        }
        over!(firms);
        over!(prices);
        over!(indices);
        over!(news);
        over!(edges);
        over!(seed);
        if let Some(v) = &self.mode {
            cfg.modes = parse_modes(v).map_err(|e| anyhow!("--mode: {e}"))?;
        }
        if let Some(v) = &self.polarity {
            cfg.polarities = parse_polarities(v).map_err(|e| anyhow!("--polarity: {e}"))?;
        }
        if let Some(v) = &self.windows {
            cfg.windows = parse_windows(v).map_err(|e| anyhow!("--windows: {e}"))?;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        cfg.robust_se |= self.robust_se;
        cfg.strict |= self.strict;
        cfg.export_panel |= self.export_panel;
        Ok(cfg)
    }

    fn sim_config(&self) -> Result<SimConfig> {
        let Some(path) = &self.config else {
            return Ok(SimConfig::default());
        };
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        SimConfig::from_kv(&text).with_context(|| format!("in {}", path.display()))
    }
}

fn validate(flags: &Flags) -> Result<ExitCode> {
    let cfg = flags.run_config(true)?;
    let report = cmd_validate(&cfg)?;
    print!("{}", report.render());
    Ok(if cfg.strict && report.n_rejected() > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn run(flags: &Flags) -> Result<ExitCode> {
    let cfg = flags.run_config(true)?;
    let report = cmd_run(&cfg)?;
    let rejected = report.validation.n_rejected();
    if rejected > 0 {
        eprintln!("warning: {rejected} input rows rejected; run `newsprop validate` for details");
    }
    for c in &report.cells {
        if let Err(e) = &c.fit {
            eprintln!("cell {}/{}/w={} failed: {e}", c.mode, c.polarity, c.w);
        }
    }
    let failed = report.n_failed();
    println!(
        "{} of {} cells fitted; outputs in {}",
        report.cells.len() - failed,
        report.cells.len(),
        cfg.out.display()
    );
    Ok(match failed {
        0 => ExitCode::SUCCESS,
        n if n == report.cells.len() => ExitCode::FAILURE,
        _ => ExitCode::from(3),
    })
}

fn simulate(flags: &Flags) -> Result<ExitCode> {
    let sim = flags.sim_config()?;
    let cfg = flags.run_config(false)?;
    cfg.validate()?;
    let written = cmd_simulate(&sim, &cfg)?;
    println!("wrote {} files to {}", written.len(), cfg.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(f) => validate(f),
        Command::Run(f) => run(f),
        Command::Simulate(f) => simulate(f),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
