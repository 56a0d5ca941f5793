//! Batch commands behind the command-line tool: validate inputs, run the
//! window grid, simulate a bundle.
//!
//! Every output file is written atomically, and the bytes depend only on
//! the inputs and the configuration, never on the worker count.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{GraphError, SupplyChainGraph};
use crate::ingest::{write_atomic, IngestError, Ingested, RowRejection};
use crate::market::SeriesStore;
use crate::panel::{
    build_panel, panel_csv, panel_summary, DataStores, DropReason, Mode, PanelSummary,
};
use crate::registry::FirmRegistry;
use crate::regress::{fit, fits_csv, Covariance, FitResult};
use crate::report::{
    coefficient_table, effect_plot_data, effects_csv, hist_csv, histogram, BinRule,
};
use crate::sentiment::{mention_histogram, NewsStore, Polarity};
use crate::sim::{expected_csv, simulate, SimConfig, SimError};
use crate::DEFAULT_WINDOWS;

pub const CELLS_HEADER: &str =
    "mode,polarity,w,status,n_obs,n_events,n_firms,unknown_firm,missing_attributes,price_window,index_window,no_snapshot,error";
pub const NETWORK_HEADER: &str = "year,n_firms,n_links,max_indegree,max_outdegree";

/// Width of the sentiment-probability histograms.
pub const PROB_BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{file}: {count} rejected rows in strict mode")]
    Strict { file: String, count: usize },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub firms: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub indices: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub modes: Vec<Mode>,
    pub polarities: Vec<Polarity>,
    pub windows: Vec<u32>,
    pub out: PathBuf,
    pub robust_se: bool,
    pub strict: bool,
    pub export_panel: bool,
    /// Only read by `simulate`.
    pub seed: Option<u64>,
    /// Worker cap; 0 means one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            firms: None,
            prices: None,
            indices: None,
            news: None,
            edges: None,
            modes: vec![Mode::Own],
            polarities: vec![Polarity::Positive],
            windows: DEFAULT_WINDOWS.to_vec(),
            out: PathBuf::from("out"),
            robust_se: false,
            strict: false,
            export_panel: false,
            seed: None,
            threads: 0,
        }
    }
}

/// `own,supplier` or `all`.
pub fn parse_modes(s: &str) -> Result<Vec<Mode>, String> {
    if s.trim() == "all" {
        return Ok(Mode::ALL.to_vec());
    }
    parse_list(s)
}

/// `positive,negative` or `both`.
pub fn parse_polarities(s: &str) -> Result<Vec<Polarity>, String> {
    if s.trim() == "both" {
        return Ok(Polarity::BOTH.to_vec());
    }
    parse_list(s)
}

pub fn parse_windows(s: &str) -> Result<Vec<u32>, String> {
    parse_list(s)
}

fn parse_list<T: FromStr + PartialEq>(s: &str) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v = part.parse().map_err(|_| format!("cannot parse `{part}`"))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("bad boolean `{v}` for {key}")),
    }
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), PipelineError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| format!("bad number `{v}` for {key}"))
        };
        match key {
            "firms" => self.firms = Some(v.into()),
            "prices" => self.prices = Some(v.into()),
            "indices" => self.indices = Some(v.into()),
            "news" => self.news = Some(v.into()),
            "edges" => self.edges = Some(v.into()),
            "mode" => self.modes = parse_modes(v)?,
            "polarity" => self.polarities = parse_polarities(v)?,
            "windows" => self.windows = parse_windows(v)?,
            "out" => self.out = v.into(),
            "robust_se" | "robust-se" => self.robust_se = parse_bool(key, v)?,
            "strict" => self.strict = parse_bool(key, v)?,
            "export_panel" | "export-panel" => self.export_panel = parse_bool(key, v)?,
            "seed" => self.seed = Some(num(v)?),
            "threads" => self.threads = num(v)? as usize,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if self.windows.is_empty() {
            return bad("no windows requested");
        }
        if self.windows.contains(&0) {
            return bad("windows must be positive");
        }
        let distinct: HashSet<_> = self.windows.iter().collect();
        if distinct.len() != self.windows.len() {
            return bad("windows must be distinct");
        }
        if self.modes.is_empty() || self.polarities.is_empty() {
            return bad("no mode or polarity requested");
        }
        Ok(())
    }

    fn covariance(&self) -> Covariance {
        if self.robust_se {
            Covariance::Hc1
        } else {
            Covariance::Homoskedastic
        }
    }

    fn path(&self, name: &str, p: &Option<PathBuf>) -> Result<PathBuf, PipelineError> {
        p.clone()
            .ok_or_else(|| PipelineError::Config(format!("missing --{name}")))
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| PipelineError::Threads(e.to_string()))
    }
}

/// Per-file rejection listing from an audit-mode load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub files: Vec<(String, Vec<RowRejection>)>,
}

impl ValidationReport {
    pub fn n_rejected(&self) -> usize {
        self.files.iter().map(|(_, r)| r.len()).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (file, rej) in &self.files {
            let _ = writeln!(out, "{file}: {} rejected", rej.len());
            for r in rej {
                let _ = writeln!(out, "  {r}");
            }
        }
        let _ = writeln!(out, "total: {} rejected", self.n_rejected());
        out
    }
}

fn audit<T>(report: &mut ValidationReport, file: &Path, loaded: Ingested<T>) -> T {
    report
        .files
        .push((file.display().to_string(), loaded.rejected));
    loaded.value
}

/// Loads every input, collecting rejected rows. An edge file is accepted or
/// rejected whole, so a bad edge row shows up as one rejection.
pub fn load_audited(cfg: &RunConfig) -> Result<(DataStores, ValidationReport), PipelineError> {
    let mut report = ValidationReport::default();
    let firms_p = cfg.path("firms", &cfg.firms)?;
    let prices_p = cfg.path("prices", &cfg.prices)?;
    let indices_p = cfg.path("indices", &cfg.indices)?;
    let news_p = cfg.path("news", &cfg.news)?;
    let edges_p = cfg.path("edges", &cfg.edges)?;
    let firms = audit(&mut report, &firms_p, FirmRegistry::load(&firms_p)?);
    let prices = audit(&mut report, &prices_p, SeriesStore::load_prices(&prices_p)?);
    let indices = audit(
        &mut report,
        &indices_p,
        SeriesStore::load_indices(&indices_p)?,
    );
    let news = audit(&mut report, &news_p, NewsStore::load(&news_p)?);
    let graph = match SupplyChainGraph::load(&edges_p) {
        Ok(g) => {
            report
                .files
                .push((edges_p.display().to_string(), Vec::new()));
            g
        }
        Err(GraphError::Ingest(e)) => return Err(e.into()),
        Err(e) => {
            let row = match &e {
                GraphError::Malformed { row, .. } | GraphError::SelfLoop { row, .. } => *row,
                _ => 0,
            };
            report.files.push((
                edges_p.display().to_string(),
                vec![RowRejection {
                    row,
                    reason: format!("file rejected: {e}"),
                }],
            ));
            SupplyChainGraph::default()
        }
    };
    Ok((
        DataStores {
            firms,
            prices,
            indices,
            news,
            graph,
        },
        report,
    ))
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidationReport, PipelineError> {
    Ok(load_audited(cfg)?.1)
}

/// One (mode, polarity, window) cell of a run.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub mode: Mode,
    pub polarity: Polarity,
    pub w: u32,
    pub summary: PanelSummary,
    pub fit: Result<FitResult, String>,
    pub panel_export: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub validation: ValidationReport,
    pub cells: Vec<CellOutcome>,
    pub written: Vec<PathBuf>,
}

impl RunReport {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.fit.is_err()).count()
    }
}

pub fn run_cells(stores: &DataStores, cfg: &RunConfig) -> Vec<CellOutcome> {
    let mut cells = Vec::new();
    for &mode in &cfg.modes {
        for &polarity in &cfg.polarities {
            for &w in &cfg.windows {
                cells.push((mode, polarity, w));
            }
        }
    }
    cells.sort();
    let covariance = cfg.covariance();
    cells
        .into_par_iter()
        .map(
            |(mode, polarity, w)| match build_panel(stores, mode, polarity, w) {
                Ok(panel) => CellOutcome {
                    mode,
                    polarity,
                    w,
                    summary: panel_summary(&panel),
                    fit: fit(&panel, covariance).map_err(|e| e.to_string()),
                    panel_export: cfg.export_panel.then(|| panel_csv(&panel.observations)),
                },
                Err(e) => CellOutcome {
                    mode,
                    polarity,
                    w,
                    summary: PanelSummary::default(),
                    fit: Err(e.to_string()),
                    panel_export: None,
                },
            },
        )
        .collect()
}

fn cells_csv(cells: &[CellOutcome]) -> String {
    let mut out = String::from(CELLS_HEADER);
    out.push('\n');
    let reasons = [
        DropReason::UnknownFirm,
        DropReason::MissingAttributes,
        DropReason::PriceWindow,
        DropReason::IndexWindow,
        DropReason::NoSnapshot,
    ];
    for c in cells {
        let s = &c.summary;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            c.mode,
            c.polarity,
            c.w,
            if c.fit.is_ok() { "ok" } else { "failed" },
            s.n_obs,
            s.n_events,
            s.n_firms
        );
        for r in reasons {
            let _ = write!(out, ",{}", s.drop_counts.get(&r).copied().unwrap_or(0));
        }
        let msg = c
            .fit
            .as_ref()
            .err()
            .map(|e| e.replace([',', '\n'], ";"))
            .unwrap_or_default();
        let _ = writeln!(out, ",{msg}");
    }
    out
}

fn network_csv(graph: &SupplyChainGraph) -> Result<String, PipelineError> {
    let mut out = String::from(NETWORK_HEADER);
    out.push('\n');
    for year in graph.years() {
        let s = graph.network_stats(year, None)?;
        let _ = writeln!(
            out,
            "{year},{},{},{},{}",
            s.n_firms, s.n_links, s.max_indegree, s.max_outdegree
        );
    }
    Ok(out)
}

/// Coverage and sentiment distributions of the news file.
fn news_histograms(stores: &DataStores) -> Vec<(String, String)> {
    let h = mention_histogram(&stores.news, Some(stores.firms.ids()));
    let per_article: Vec<f64> = h
        .mentions_per_article
        .iter()
        .flat_map(|(&k, &n)| std::iter::repeat_n(k as f64, n))
        .collect();
    let per_firm: Vec<f64> = h.articles_per_firm.values().map(|&n| n as f64).collect();
    let mut out = Vec::new();
    for (name, values) in [
        ("hist_mentions_per_article.csv", per_article),
        ("hist_articles_per_firm.csv", per_firm),
    ] {
        let bins = histogram(&values, BinRule::IntegerCounts).expect("integer counts");
        out.push((name.to_string(), hist_csv(&bins, BinRule::IntegerCounts)));
    }
    let events = stores.news.events();
    if !events.is_empty() {
        let rule = BinRule::FixedWidth(PROB_BIN_WIDTH);
        let cols: [(&str, fn(&crate::sentiment::NewsEvent) -> f64); 3] = [
            ("hist_p_pos.csv", |e| e.p_pos),
            ("hist_p_neu.csv", |e| e.p_neu),
            ("hist_p_neg.csv", |e| e.p_neg),
        ];
        for (name, get) in cols {
            let values: Vec<f64> = events.iter().map(get).collect();
            let bins = histogram(&values, rule).expect("finite probabilities");
            out.push((name.to_string(), hist_csv(&bins, rule)));
        }
    }
    out
}

fn write_out(
    dir: &Path,
    name: &str,
    body: &str,
    written: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let path = dir.join(name);
    write_atomic(&path, body.as_bytes()).map_err(|source| PipelineError::Write {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

/// Builds and fits every requested cell and writes:
///
/// * `fits.csv`: one row per fitted cell;
/// * `effects.csv`: two plot rows per fitted cell;
/// * `table.txt`: coefficient table, one block per mode and polarity;
/// * `cells.csv`: panel size, drop counts and status of every cell;
/// * `network.csv`: per-year supply-chain statistics;
/// * `hist_*.csv`: news coverage and sentiment distributions;
/// * `panel_<mode>_<polarity>_w<w>.csv` with `export_panel`.
///
/// A failed cell is reported in `cells.csv` and skipped elsewhere.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    pool.install(|| {
        let (stores, validation) = load_audited(cfg)?;
        if let Some((file, rej)) = validation.files.iter().find(|(_, r)| !r.is_empty()) {
            if cfg.strict {
                return Err(PipelineError::Strict {
                    file: file.clone(),
                    count: rej.len(),
                });
            }
        }
        let cells = run_cells(&stores, cfg);
        let fits: Vec<FitResult> = cells
            .iter()
            .filter_map(|c| c.fit.as_ref().ok().cloned())
            .collect();
        let effects = effect_plot_data(&fits).expect("cells are distinct");

        create_dir(&cfg.out)?;
        let mut written = Vec::new();
        write_out(&cfg.out, "fits.csv", &fits_csv(&fits), &mut written)?;
        write_out(
            &cfg.out,
            "effects.csv",
            &effects_csv(&effects),
            &mut written,
        )?;
        write_out(
            &cfg.out,
            "table.txt",
            &coefficient_table(&fits),
            &mut written,
        )?;
        write_out(&cfg.out, "cells.csv", &cells_csv(&cells), &mut written)?;
        write_out(
            &cfg.out,
            "network.csv",
            &network_csv(&stores.graph)?,
            &mut written,
        )?;
        for (name, body) in news_histograms(&stores) {
            write_out(&cfg.out, &name, &body, &mut written)?;
        }
        for c in &cells {
            if let Some(body) = &c.panel_export {
                let name = format!("panel_{}_{}_w{}.csv", c.mode, c.polarity, c.w);
                write_out(&cfg.out, &name, body, &mut written)?;
            }
        }
        Ok(RunReport {
            validation,
            cells,
            written,
        })
    })
}

/// Writes the five input files plus `expected_betas.csv` and the effective
/// `sim_config.txt` into `cfg.out`.
pub fn cmd_simulate(sim: &SimConfig, cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let mut sim = sim.clone();
    if let Some(seed) = cfg.seed {
        sim.seed = seed;
    }
    let pool = cfg.pool()?;
    let bundle = pool.install(|| simulate(&sim))?;
    create_dir(&cfg.out)?;
    let mut written = Vec::new();
    for (name, body) in bundle.files() {
        write_out(&cfg.out, name, body, &mut written)?;
    }
    write_out(
        &cfg.out,
        "expected_betas.csv",
        &expected_csv(&sim, &cfg.windows),
        &mut written,
    )?;
    write_out(&cfg.out, "sim_config.txt", &sim.to_kv(), &mut written)?;
    Ok(written)
}
