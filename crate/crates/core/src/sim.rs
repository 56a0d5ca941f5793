//! Synthetic market generator with injected news effects.
//!
//! Produces a complete input bundle (firm registry, prices, indices, news and
//! supply-chain edges) whose pre- and post-disclosure effects are known, plus
//! the coefficients the regression should recover.
//!
//! # Data-generating process
//!
//! Daily log return of firm `i` on trading position `t`:
//!
//! ```text
//!   r[i,t] = m[market(i), t] + e[i,t] + drift[i,t]
//!   m ~ N(0, market_vol^2),  e ~ N(0, idio_vol^2)
//! ```
//!
//! For an event with positive probability `q` anchored at trading position
//! `p` (the news date, or the next trading date), every mentioned firm
//! receives `gamma_pre * (q - c) / L / 100` on the `L = leak_window`
//! positions `p-L .. p-1` and `gamma_post * (q - c) / E / 100` on the
//! `E = effect_window` positions `p .. p+E-1`, where `c` is
//! `sentiment_center`. Suppliers (clients) of the mentioned firms receive the
//! same two drifts with `gamma_sup` (`gamma_cli`) in place of both direct
//! coefficients. The exposed supplier/client set of an event is the one the
//! panel builder uses: the union over mentioned firms, minus the mentioned
//! firms themselves, from the snapshot in force at the event date.
//!
//! Each market index is the exponentiated mean log price of its firms.
//!
//! # Random streams
//!
//! All draws come from ChaCha8 seeded with `seed`, one stream per purpose so
//! that per-firm generation can run in parallel and still be reproducible:
//! stream 0 for the registry and events, `GRAPH_STREAM + year` for the edges
//! of each year, `MARKET_STREAM + m` for market factors and
//! `FIRM_STREAM + i` for firm `i`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{SupplyChainGraph, SupplyChainSnapshot};
use crate::ingest::{write_atomic, IngestError};
use crate::market::SeriesStore;
use crate::panel::{exposed_firms, DataStores, Mode};
use crate::registry::{FirmRecord, FirmRegistry};
use crate::sentiment::{NewsEvent, NewsStore};

const GRAPH_STREAM: u64 = 1 << 20;
const MARKET_STREAM: u64 = 1 << 32;
const FIRM_STREAM: u64 = 1 << 40;

pub const BUNDLE_FILES: [&str; 5] = [
    "firms.csv",
    "prices.csv",
    "indices.csv",
    "news.csv",
    "edges.csv",
];
pub const EXPECTED_HEADER: &str = "mode,polarity,w,beta_pre,beta_post";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_firms: usize,
    pub n_sectors: usize,
    pub n_markets: usize,
    /// Calendar days in the horizon.
    pub n_days: usize,
    pub start_date: NaiveDate,
    /// Skip Saturdays and Sundays.
    pub weekend_pattern: bool,
    /// Probability of each directed supplier -> client link, per year.
    pub edge_prob: f64,
    /// Expected events per firm over the horizon.
    pub news_rate: f64,
    /// Chance that an event also mentions a second, random firm.
    pub co_mention_prob: f64,
    /// Dirichlet parameters of (p_pos, p_neu, p_neg).
    pub sentiment_alpha: [f64; 3],
    /// Positiveness level that produces no drift.
    pub sentiment_center: f64,
    pub gamma_pre: f64,
    pub gamma_post: f64,
    pub gamma_sup: f64,
    pub gamma_cli: f64,
    pub market_vol: f64,
    pub idio_vol: f64,
    pub leak_window: u32,
    pub effect_window: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_firms: 200,
            n_sectors: 8,
            n_markets: 2,
            n_days: 730,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"),
            weekend_pattern: true,
            edge_prob: 0.01,
            news_rate: 10.0,
            co_mention_prob: 0.0,
            sentiment_alpha: [2.0, 1.0, 1.0],
            sentiment_center: 0.0,
            gamma_pre: 0.3,
            gamma_post: 0.9,
            gamma_sup: 0.09,
            gamma_cli: 0.09,
            market_vol: 0.01,
            idio_vol: 0.005,
            leak_window: 1,
            effect_window: 1,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn trading_days(&self) -> Vec<NaiveDate> {
        (0..self.n_days as u64)
            .map(|d| self.start_date + Days::new(d))
            .filter(|d| {
                !self.weekend_pattern || !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_firms == 0 || self.n_sectors == 0 || self.n_markets == 0 {
            return bad("n_firms, n_sectors and n_markets must be positive".into());
        }
        if self.n_markets > self.n_firms {
            return bad("n_markets exceeds n_firms".into());
        }
        for (name, p) in [
            ("edge_prob", self.edge_prob),
            ("co_mention_prob", self.co_mention_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(self.news_rate.is_finite() && self.news_rate >= 0.0) {
            return bad("news_rate must be non-negative".into());
        }
        if self
            .sentiment_alpha
            .iter()
            .any(|a| !(a.is_finite() && *a > 0.0))
        {
            return bad("sentiment_alpha entries must be positive".into());
        }
        for (name, v) in [("market_vol", self.market_vol), ("idio_vol", self.idio_vol)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        let gammas = [
            self.gamma_pre,
            self.gamma_post,
            self.gamma_sup,
            self.gamma_cli,
            self.sentiment_center,
        ];
        if gammas.iter().any(|g| !g.is_finite()) {
            return bad("effect coefficients must be finite".into());
        }
        if self.leak_window == 0 || self.effect_window == 0 {
            return bad("leak_window and effect_window must be at least 1".into());
        }
        let need = 4 * self.leak_window.max(self.effect_window) as usize;
        let have = self.trading_days().len();
        if have < need {
            return bad(format!(
                "calendar has {have} trading days, need at least {need}"
            ));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn from_kv(text: &str) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| SimError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}` for {key}"))
        }
        match key {
            "n_firms" => self.n_firms = p(key, value)?,
            "n_sectors" => self.n_sectors = p(key, value)?,
            "n_markets" => self.n_markets = p(key, value)?,
            "n_days" => self.n_days = p(key, value)?,
            "start_date" => self.start_date = p(key, value)?,
            "weekend_pattern" => self.weekend_pattern = p(key, value)?,
            "edge_prob" => self.edge_prob = p(key, value)?,
            "news_rate" => self.news_rate = p(key, value)?,
            "co_mention_prob" => self.co_mention_prob = p(key, value)?,
            "sentiment_alpha" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err("sentiment_alpha needs three comma-separated values".into());
                }
                for (slot, s) in self.sentiment_alpha.iter_mut().zip(parts) {
                    *slot = p(key, s)?;
                }
            }
            "sentiment_center" => self.sentiment_center = p(key, value)?,
            "gamma_pre" => self.gamma_pre = p(key, value)?,
            "gamma_post" => self.gamma_post = p(key, value)?,
            "gamma_sup" => self.gamma_sup = p(key, value)?,
            "gamma_cli" => self.gamma_cli = p(key, value)?,
            "market_vol" => self.market_vol = p(key, value)?,
            "idio_vol" => self.idio_vol = p(key, value)?,
            "leak_window" => self.leak_window = p(key, value)?,
            "effect_window" => self.effect_window = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let a = self.sentiment_alpha;
        format!(
            "n_firms = {}\nn_sectors = {}\nn_markets = {}\nn_days = {}\nstart_date = {}\n\
             weekend_pattern = {}\nedge_prob = {}\nnews_rate = {}\nco_mention_prob = {}\n\
             sentiment_alpha = {},{},{}\nsentiment_center = {}\ngamma_pre = {}\ngamma_post = {}\n\
             gamma_sup = {}\ngamma_cli = {}\nmarket_vol = {}\nidio_vol = {}\nleak_window = {}\n\
             effect_window = {}\nseed = {}\n",
            self.n_firms,
            self.n_sectors,
            self.n_markets,
            self.n_days,
            self.start_date,
            self.weekend_pattern,
            self.edge_prob,
            self.news_rate,
            self.co_mention_prob,
            a[0],
            a[1],
            a[2],
            self.sentiment_center,
            self.gamma_pre,
            self.gamma_post,
            self.gamma_sup,
            self.gamma_cli,
            self.market_vol,
            self.idio_vol,
            self.leak_window,
            self.effect_window,
            self.seed
        )
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// The five input files, rendered in their ingest layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimBundle {
    pub firms_csv: String,
    pub prices_csv: String,
    pub indices_csv: String,
    pub news_csv: String,
    pub edges_csv: String,
}

impl SimBundle {
    pub fn files(&self) -> [(&'static str, &str); 5] {
        [
            (BUNDLE_FILES[0], &self.firms_csv),
            (BUNDLE_FILES[1], &self.prices_csv),
            (BUNDLE_FILES[2], &self.indices_csv),
            (BUNDLE_FILES[3], &self.news_csv),
            (BUNDLE_FILES[4], &self.edges_csv),
        ]
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), SimError> {
        for (name, body) in self.files() {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        Ok(())
    }

    /// Parses the bundle through the regular loaders, failing on any
    /// rejected row.
    pub fn load(&self) -> Result<DataStores, SimError> {
        Ok(DataStores {
            firms: FirmRegistry::from_reader(self.firms_csv.as_bytes(), "firms.csv")?
                .strict("firms.csv")?,
            prices: SeriesStore::prices_from_reader(self.prices_csv.as_bytes(), "prices.csv")?
                .strict("prices.csv")?,
            indices: SeriesStore::indices_from_reader(self.indices_csv.as_bytes(), "indices.csv")?
                .strict("indices.csv")?,
            news: NewsStore::from_reader(self.news_csv.as_bytes(), "news.csv")?
                .strict("news.csv")?,
            graph: SupplyChainGraph::from_reader(self.edges_csv.as_bytes(), "edges.csv")?,
        })
    }
}

fn firm_id(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("F{i:0width$}")
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: &[f64; 3]) -> [f64; 3] {
    let g = alpha.map(|a| Gamma::new(a, 1.0).expect("alpha validated").sample(rng));
    let s: f64 = g.iter().sum();
    g.map(|v| v / s)
}

/// Generates a bundle. Deterministic in `config` regardless of thread count.
pub fn simulate(config: &SimConfig) -> Result<SimBundle, SimError> {
    config.validate()?;
    let cal = config.trading_days();
    let n_t = cal.len();
    let n = config.n_firms;
    let ids: Vec<String> = (0..n).map(|i| firm_id(i, n)).collect();
    let mut rng = config.rng(0);

    // registry
    let records: Vec<FirmRecord> = (0..n)
        .map(|i| FirmRecord {
            firm_id: ids[i].clone(),
            market_id: Some(format!("M{}", i % config.n_markets)),
            sector_code: Some(format!("S{:02}", rng.random_range(0..config.n_sectors))),
            country: Some("SIM".into()),
        })
        .collect();

    // one edge draw per calendar year of the horizon
    let first_year = config.start_date.year();
    let last_year = (config.start_date + Days::new(config.n_days as u64 - 1)).year();
    let snapshots: Vec<SupplyChainSnapshot> = (first_year..=last_year)
        .map(|year| {
            let mut g = config.rng(GRAPH_STREAM + (year - first_year) as u64);
            let mut snap = SupplyChainSnapshot::new(year);
            for s in 0..n {
                for c in 0..n {
                    if s != c && g.random_bool(config.edge_prob) {
                        snap.insert(&ids[s], &ids[c]);
                    }
                }
            }
            snap
        })
        // an empty year is absent from the edge file, so leave it out here too
        .filter(|s| s.n_edges() > 0)
        .collect();
    let graph = SupplyChainGraph::from_snapshots(snapshots);

    // events
    let mut drafts: Vec<(NaiveDate, usize, usize, Vec<usize>, [f64; 3])> = Vec::new();
    let poisson =
        (config.news_rate > 0.0).then(|| Poisson::new(config.news_rate).expect("rate validated"));
    for i in 0..n {
        let count = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        for k in 0..count {
            let date = config.start_date + Days::new(rng.random_range(0..config.n_days as u64));
            let probs = dirichlet(&mut rng, &config.sentiment_alpha);
            let mut mentions = vec![i];
            if n > 1 && rng.random_bool(config.co_mention_prob) {
                let other = (i + 1 + rng.random_range(0..n - 1)) % n;
                mentions.push(other);
            }
            drafts.push((date, i, k, mentions, probs));
        }
    }
    drafts.sort_by_key(|d| (d.0, d.1, d.2));
    let id_width = drafts.len().saturating_sub(1).to_string().len().max(6);
    let events: Vec<NewsEvent> = drafts
        .into_iter()
        .enumerate()
        .map(|(e, (date, _, _, mentions, p))| NewsEvent {
            news_id: format!("N{e:0id_width$}"),
            date,
            mentions: mentions.iter().map(|&m| ids[m].clone()).collect(),
            p_pos: p[0],
            p_neu: p[1],
            p_neg: p[2],
        })
        .collect();

    // injected drifts, in log units
    let index_of = |id: &str| id[1..].parse::<usize>().expect("generated id");
    let mut drift = vec![vec![0.0f64; n_t]; n];
    let registry = FirmRegistry::from_records(records.clone());
    let lookup = DataStores {
        firms: registry,
        graph,
        ..Default::default()
    };
    let (leak, eff) = (config.leak_window as usize, config.effect_window as usize);
    for ev in &events {
        let p = cal.partition_point(|d| *d < ev.date);
        if p == n_t {
            continue;
        }
        let centered = ev.p_pos - config.sentiment_center;
        let mut add = |firm: usize, g_leak: f64, g_eff: f64| {
            let row = &mut drift[firm];
            for v in &mut row[p.saturating_sub(leak)..p] {
                *v += g_leak * centered / leak as f64 / 100.0;
            }
            for v in &mut row[p..(p + eff).min(n_t)] {
                *v += g_eff * centered / eff as f64 / 100.0;
            }
        };
        for m in &ev.mentions {
            add(index_of(m), config.gamma_pre, config.gamma_post);
        }
        for (mode, g) in [
            (Mode::Supplier, config.gamma_sup),
            (Mode::Client, config.gamma_cli),
        ] {
            if g == 0.0 {
                continue;
            }
            for f in exposed_firms(&lookup, ev, mode).0 {
                add(index_of(&f), g, g);
            }
        }
    }

    let market_factors: Vec<Vec<f64>> = (0..config.n_markets)
        .map(|m| {
            let mut r = config.rng(MARKET_STREAM + m as u64);
            normal_path(&mut r, config.market_vol, n_t)
        })
        .collect();

    let log_prices: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = config.rng(FIRM_STREAM + i as u64);
            let level: f64 = r.random_range(10.0f64..100.0).ln();
            let idio = normal_path(&mut r, config.idio_vol, n_t);
            let mkt = &market_factors[i % config.n_markets];
            let mut lp = Vec::with_capacity(n_t);
            let mut acc = level;
            for t in 0..n_t {
                acc += mkt[t] + idio[t] + drift[i][t];
                lp.push(acc);
            }
            lp
        })
        .collect();

    let mut prices_csv = String::from("firm_id,date,close\n");
    for (i, lp) in log_prices.iter().enumerate() {
        for (t, v) in lp.iter().enumerate() {
            let _ = writeln!(prices_csv, "{},{},{}", ids[i], cal[t], v.exp());
        }
    }

    let mut indices_csv = String::from("market_id,date,value\n");
    for m in 0..config.n_markets {
        let members: Vec<usize> = (m..n).step_by(config.n_markets).collect();
        for t in 0..n_t {
            let mean =
                members.iter().map(|&i| log_prices[i][t]).sum::<f64>() / members.len() as f64;
            let _ = writeln!(indices_csv, "M{m},{},{}", cal[t], mean.exp());
        }
    }

    let mut firms_csv = String::from("firm_id,market_id,sector_code,country\n");
    for r in &records {
        let _ = writeln!(
            firms_csv,
            "{},{},{},{}",
            r.firm_id,
            r.market_id.as_deref().unwrap_or(""),
            r.sector_code.as_deref().unwrap_or(""),
            r.country.as_deref().unwrap_or("")
        );
    }

    let mut news_csv = String::from("news_id,date,firm_id,p_pos,p_neu,p_neg\n");
    for ev in &events {
        for m in &ev.mentions {
            let _ = writeln!(
                news_csv,
                "{},{},{},{},{},{}",
                ev.news_id, ev.date, m, ev.p_pos, ev.p_neu, ev.p_neg
            );
        }
    }

    let mut edges_csv = String::from("year,supplier_id,client_id\n");
    for year in lookup.graph.years() {
        for (s, c) in lookup.graph.snapshot(year)?.edges() {
            let _ = writeln!(edges_csv, "{year},{s},{c}");
        }
    }

    Ok(SimBundle {
        firms_csv,
        prices_csv,
        indices_csv,
        news_csv,
        edges_csv,
    })
}

fn normal_path(rng: &mut ChaCha8Rng, sd: f64, n: usize) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; n];
    }
    let dist = Normal::new(0.0, sd).expect("sd validated");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// How much a unit of cumulative injected drift moves the pre and post
/// measures at window `w`.
///
/// `k[period][source]` with `source` 0 = leak drift, 1 = effect drift.
/// Entries are in the measure's units per unit of the corresponding gamma:
/// the mean cumulative drift over the later block minus that over the
/// earlier block, divided by `w`. The drift path is enumerated position by
/// position.
pub fn overlap_factors(w: u32, leak_window: u32, effect_window: u32) -> [[f64; 2]; 2] {
    let (w, l, e) = (w as i64, leak_window as i64, effect_window as i64);
    // cumulative share of each drift reached by offset o from the anchor
    let cum_leak = |o: i64| (-l..0).filter(|&k| k <= o).count() as f64 / l as f64;
    let cum_eff = |o: i64| (0..e).filter(|&k| k <= o).count() as f64 / e as f64;
    let mean = |lo: i64, hi: i64, f: &dyn Fn(i64) -> f64| {
        (lo..=hi).map(f).sum::<f64>() / (hi - lo + 1) as f64
    };
    let blocks = [(-2 * w, -w - 1), (-w, -1), (0, w - 1)];
    let mut k = [[0.0; 2]; 2];
    for (pi, (earlier, later)) in [(blocks[0], blocks[1]), (blocks[1], blocks[2])]
        .into_iter()
        .enumerate()
    {
        let sources: [&dyn Fn(i64) -> f64; 2] = [&cum_leak, &cum_eff];
        for (si, f) in sources.into_iter().enumerate() {
            k[pi][si] = (mean(later.0, later.1, f) - mean(earlier.0, earlier.1, f)) / w as f64;
        }
    }
    k
}

/// Expected (beta_pre, beta_post) per exposure mode for positive polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedBetas {
    pub w: u32,
    pub own: (f64, f64),
    pub supplier: (f64, f64),
    pub client: (f64, f64),
}

impl ExpectedBetas {
    pub fn for_mode(&self, mode: Mode) -> (f64, f64) {
        match mode {
            Mode::Own => self.own,
            Mode::Supplier => self.supplier,
            Mode::Client => self.client,
        }
    }
}

/// Population regression coefficients implied by the configured injection.
///
/// Three effects enter:
///
/// * block overlap: the injected drift reaches the pre and post measures in
///   proportion to [`overlap_factors`];
/// * market control: each firm carries weight `1/N_m` in its own market index,
///   so the control absorbs a share `kappa/N_m` of the injected effect, with
///   `kappa = market_vol^2 / (market_vol^2 + idio_vol^2/N_m)` the slope on the
///   control;
/// * centering: with a drift proportional to `q - c` the two periods differ in
///   level by `c (c_pre - c_post)`, and without separate period dummies that
///   gap projects onto the interactions with weight `E[q]/E[q^2]`, moments
///   of the Dirichlet marginal of `p_pos`.
///
/// The result ignores Jensen terms from logging block means (exact at `w = 1`).
pub fn expected_betas(config: &SimConfig, w: u32) -> ExpectedBetas {
    let k = overlap_factors(w, config.leak_window, config.effect_window);
    let a = config.sentiment_alpha;
    let a0: f64 = a.iter().sum();
    let m1 = a[0] / a0;
    let m2 = a[0] * (a[0] + 1.0) / (a0 * (a0 + 1.0));

    // average over firms of kappa_m / N_m
    let n = config.n_firms.max(1);
    let mut shrink = 0.0;
    for m in 0..config.n_markets.max(1) {
        let size = (m..n).step_by(config.n_markets.max(1)).count();
        if size == 0 {
            continue;
        }
        let nm = size as f64;
        let mv = config.market_vol * config.market_vol;
        let iv = config.idio_vol * config.idio_vol / nm;
        let kappa = if mv + iv > 0.0 { mv / (mv + iv) } else { 0.0 };
        shrink += size as f64 / n as f64 * kappa / nm;
    }

    let solve = |g_leak: f64, g_eff: f64| -> (f64, f64) {
        let c_pre = (k[0][0] * g_leak + k[0][1] * g_eff) * (1.0 - shrink);
        let c_post = (k[1][0] * g_leak + k[1][1] * g_eff) * (1.0 - shrink);
        let delta = -config.sentiment_center * (c_pre - c_post) / 2.0;
        (c_pre + delta * m1 / m2, c_post - delta * m1 / m2)
    };
    ExpectedBetas {
        w,
        own: solve(config.gamma_pre, config.gamma_post),
        supplier: solve(config.gamma_sup, config.gamma_sup),
        client: solve(config.gamma_cli, config.gamma_cli),
    }
}

/// Sidecar with the expected coefficients for each window and mode.
pub fn expected_csv(config: &SimConfig, windows: &[u32]) -> String {
    let mut out = String::from(EXPECTED_HEADER);
    out.push('\n');
    for mode in Mode::ALL {
        for &w in windows {
            let (pre, post) = expected_betas(config, w).for_mode(mode);
            let _ = writeln!(out, "{mode},positive,{w},{pre},{post}");
        }
    }
    out
}

/// Firms exposed to each event, for tests that enumerate expected panel sizes.
pub fn exposure_counts(stores: &DataStores, mode: Mode) -> Vec<(String, BTreeSet<String>)> {
    stores
        .news
        .events()
        .iter()
        .map(|ev| (ev.news_id.clone(), exposed_firms(stores, ev, mode).0))
        .collect()
}
