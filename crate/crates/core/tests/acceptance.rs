//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use newsprop_core::graph::SupplyChainSnapshot;
use newsprop_core::market::block_ranges;
use newsprop_core::pipeline::{cmd_run, cmd_simulate, RunConfig};
use newsprop_core::regress::fit_observations;
use newsprop_core::sim::expected_betas;
use newsprop_core::*;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "window arithmetic oracle",
            budget: Duration::from_secs(1),
            run: c1_window_arithmetic,
        },
        Criterion {
            id: 2,
            name: "estimator equivalence",
            budget: Duration::from_secs(30),
            run: c2_estimator_equivalence,
        },
        Criterion {
            id: 3,
            name: "difference-test oracle",
            budget: Duration::from_secs(30),
            run: c3_difference_test,
        },
        Criterion {
            id: 4,
            name: "simulator recovery (direct)",
            budget: Duration::from_secs(300),
            run: c4_direct_recovery,
        },
        Criterion {
            id: 5,
            name: "simulator recovery (indirect)",
            budget: Duration::from_secs(300),
            run: c5_indirect_recovery,
        },
        Criterion {
            id: 6,
            name: "size control",
            budget: Duration::from_secs(300),
            run: c6_size_control,
        },
        Criterion {
            id: 7,
            name: "panel-construction counts",
            budget: Duration::from_secs(60),
            run: c7_panel_counts,
        },
        Criterion {
            id: 8,
            name: "network statistics",
            budget: Duration::from_secs(60),
            run: c8_network_stats,
        },
        Criterion {
            id: 9,
            name: "determinism",
            budget: Duration::from_secs(120),
            run: c9_determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = t.elapsed();
        if outcome.is_ok() && elapsed > c.budget {
            outcome = Err(format!("took {elapsed:.2?}, budget {:?}", c.budget));
        }
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {}: {} ({detail}; {elapsed:.2?})",
                c.id, c.name
            ),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {} ({why}; {elapsed:.2?})", c.id, c.name);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

// ---------------------------------------------------------------- 1

fn c1_window_arithmetic() -> Outcome {
    // June 2021 trading days around a Friday news date, weekends skipped
    let days = [1, 2, 3, 4, 7, 8, 9, 10, 11, 14, 15, 16, 17, 18];
    let closes = [
        100.0, 101.0, 102.0, 101.0, 103.0, 104.0, 106.0, 105.0, 108.0, 110.0, 109.0, 111.0, 112.0,
        113.0,
    ];
    let index = [
        49.0, 49.5, 50.0, 50.5, 51.0, 51.5, 51.0, 52.0, 53.0, 52.5, 54.0, 54.5, 55.0, 55.5,
    ];
    let dates: Vec<NaiveDate> = days.iter().map(|&x| d(2021, 6, x)).collect();
    let price =
        DailySeries::new("F", dates.iter().copied().zip(closes)).map_err(|e| e.to_string())?;
    let idx = DailySeries::new("M", dates.iter().copied().zip(index)).map_err(|e| e.to_string())?;
    let news = d(2021, 6, 11);
    let w = 3;

    let p = price.anchor_position(news).map_err(|e| e.to_string())?;
    let members = |r: std::ops::Range<usize>| dates[r].iter().map(|x| x.day()).collect::<Vec<_>>();
    let (a, b) = block_ranges(p, w, Period::Pre).ok_or("no pre blocks")?;
    let (b2, c) = block_ranges(p, w, Period::Post).ok_or("no post blocks")?;
    ensure(members(a.clone()) == [3, 4, 7], || {
        format!("A = {:?}", members(a))
    })?;
    ensure(members(b.clone()) == [8, 9, 10], || {
        format!("B = {:?}", members(b))
    })?;
    ensure(members(b2.clone()) == [8, 9, 10], || {
        format!("B (post) = {:?}", members(b2))
    })?;
    ensure(members(c.clone()) == [11, 14, 15], || {
        format!("C = {:?}", members(c))
    })?;

    // ln(105/102)/3*100, ln(109/105)/3*100 and the index analogues
    let want = [
        (
            Period::Pre,
            0.966_251_229_108_406_3,
            0.653_615_712_945_877_8,
        ),
        (
            Period::Post,
            1.246_251_069_054_013_6,
            1.061_660_862_903_305_5,
        ),
    ];
    for (period, y, x) in want {
        let got = price
            .window_change(news, w as u32, period)
            .map_err(|e| e.to_string())?
            .ok_or("missing")?;
        ensure((got.value - y).abs() < 1e-9, || {
            format!("{period} y = {} want {y}", got.value)
        })?;
        ensure(!got.shifted && got.anchor == news, || "anchor moved".into())?;
        let gx = idx
            .window_change(news, w as u32, period)
            .map_err(|e| e.to_string())?
            .ok_or("missing")?;
        ensure((gx.value - x).abs() < 1e-9, || {
            format!("{period} x = {} want {x}", gx.value)
        })?;
    }

    // a Saturday release anchors on Monday the 14th
    let sat = price
        .window_change(d(2021, 6, 12), 1, Period::Post)
        .map_err(|e| e.to_string())?
        .ok_or("missing")?;
    ensure(sat.shifted && sat.anchor == d(2021, 6, 14), || {
        format!("weekend anchor {}", sat.anchor)
    })?;
    ensure(
        (sat.value - (110.0f64 / 108.0).ln() * 100.0).abs() < 1e-9,
        || "weekend value".into(),
    )?;

    // same numbers through the panel builder
    let stores = DataStores {
        firms: FirmRegistry::from_records([FirmRecord {
            firm_id: "F".into(),
            market_id: Some("M".into()),
            sector_code: Some("S".into()),
            country: None,
        }]),
        prices: SeriesStore::from_series([price]),
        indices: SeriesStore::from_series([idx]),
        news: NewsStore::from_events(vec![NewsEvent {
            news_id: "n".into(),
            date: news,
            mentions: vec!["F".into()],
            p_pos: 0.7,
            p_neu: 0.2,
            p_neg: 0.1,
        }]),
        graph: SupplyChainGraph::default(),
    };
    let panel =
        build_panel(&stores, Mode::Own, Polarity::Positive, 3).map_err(|e| e.to_string())?;
    ensure(panel.observations.len() == 2, || "panel size".into())?;
    for (o, (_, y, x)) in panel.observations.iter().zip(want) {
        ensure(
            (o.y - y).abs() < 1e-9 && (o.market_x - x).abs() < 1e-9,
            || "panel values".into(),
        )?;
    }
    Ok("blocks A/B/C and four hand values match".into())
}

// ---------------------------------------------------------------- 2 and 3

fn random_panel(seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pairs = rng.random_range(25..=500);
    let n_groups = rng.random_range(1..=20);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let effects: Vec<f64> = (0..n_groups)
        .map(|_| noise.sample(&mut rng) * 3.0)
        .collect();
    let date = d(2020, 1, 1);
    let mut obs = Vec::new();
    for k in 0..n_pairs {
        let g = rng.random_range(0..n_groups);
        let q: f64 = rng.random();
        let lone = rng.random_bool(0.05);
        for period in Period::BOTH {
            if lone && period == Period::Post {
                continue;
            }
            let x = noise.sample(&mut rng);
            let scale = 0.5 + q; // heteroskedastic so HC1 differs from plain
            let beta = if period == Period::Pre { 0.3 } else { 0.9 };
            obs.push(Observation {
                firm_id: format!("f{k}"),
                news_id: format!("n{k}"),
                w: 1,
                period,
                y: beta * q + 0.8 * x + effects[g] + scale * noise.sample(&mut rng),
                news_value: q,
                market_x: x,
                sector: format!("s{g}"),
                market: "m".into(),
                news_date: date,
                anchor: date,
            });
        }
    }
    obs
}

/// Least squares with one dummy per sector and no intercept, solved by
/// Householder QR of the full design.
/// Returns (beta, homoskedastic cov, HC1 cov) for the first three columns.
fn dummy_ls(
    obs: &[Observation],
    cols: [fn(&Observation) -> f64; 3],
) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let groups: BTreeSet<&str> = obs.iter().map(|o| o.sector.as_str()).collect();
    let gidx: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let n = obs.len();
    let k = 3 + groups.len();
    let mut a = DMatrix::<f64>::zeros(n, k);
    let mut y = DVector::<f64>::zeros(n);
    for (i, o) in obs.iter().enumerate() {
        for (j, f) in cols.iter().enumerate() {
            a[(i, j)] = f(o);
        }
        a[(i, 3 + gidx[o.sector.as_str()])] = 1.0;
        y[i] = o.y;
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let beta = r
        .solve_upper_triangular(&(qr.q().transpose() * &y))
        .unwrap();
    let r_inv = r.try_inverse().unwrap();
    let xtx_inv = &r_inv * r_inv.transpose();
    let e = &y - &a * &beta;
    let dof = (n - k) as f64;
    let sigma2 = e.norm_squared() / dof;
    let plain = &xtx_inv * sigma2;
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let row = a.row(i).transpose();
        meat += &row * row.transpose() * (e[i] * e[i]);
    }
    let hc1 = &xtx_inv * meat * &xtx_inv * (n as f64 / dof);
    (beta.iter().take(3).copied().collect(), plain, hc1)
}

const STANDARD: [fn(&Observation) -> f64; 3] = [
    |o| o.pre() * o.news_value,
    |o| o.post() * o.news_value,
    |o| o.market_x,
];
const REPARAM: [fn(&Observation) -> f64; 3] = [
    |o| o.news_value,
    |o| o.post() * o.news_value,
    |o| o.market_x,
];

fn c2_estimator_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let obs = random_panel(seed);
        for (covariance, pick) in [(Covariance::Homoskedastic, 0), (Covariance::Hc1, 1)] {
            let f = fit_observations(&obs, Mode::Own, Polarity::Positive, 1, covariance)
                .map_err(|e| format!("panel {seed}: {e}"))?;
            let (beta, plain, hc1) = dummy_ls(&obs, STANDARD);
            let cov = if pick == 0 { plain } else { hc1 };
            let got = [
                f.beta_pre,
                f.beta_post,
                f.beta_x,
                f.se_pre,
                f.se_post,
                f.se_x,
            ];
            let want = [
                beta[0],
                beta[1],
                beta[2],
                cov[(0, 0)].sqrt(),
                cov[(1, 1)].sqrt(),
                cov[(2, 2)].sqrt(),
            ];
            for (g, w) in got.iter().zip(want) {
                worst = worst.max((g - w).abs() / w.abs().max(1.0));
                ensure(close(*g, w, 1e-8), || {
                    format!("panel {seed} {covariance:?}: {g} vs {w}")
                })?;
            }
        }
    }
    Ok(format!(
        "100 panels, plain and HC1, max rel diff {worst:.1e}"
    ))
}

fn c3_difference_test() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let obs = random_panel(seed);
        for (covariance, pick) in [(Covariance::Homoskedastic, 0), (Covariance::Hc1, 1)] {
            let f = fit_observations(&obs, Mode::Own, Polarity::Positive, 1, covariance)
                .map_err(|e| format!("panel {seed}: {e}"))?;
            let (beta, plain, hc1) = dummy_ls(&obs, REPARAM);
            let cov = if pick == 0 { plain } else { hc1 };
            for (g, w) in [(f.diff, beta[1]), (f.diff_se, cov[(1, 1)].sqrt())] {
                worst = worst.max((g - w).abs() / w.abs().max(1.0));
                ensure(close(g, w, 1e-10), || {
                    format!("panel {seed} {covariance:?}: {g} vs {w}")
                })?;
            }
        }
    }
    Ok(format!(
        "100 panels, plain and HC1, max rel diff {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- 4 and 5

const RECOVERY_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;

fn recovery_config(seed: u64) -> SimConfig {
    SimConfig {
        n_firms: 400,
        n_sectors: 10,
        n_markets: 2,
        n_days: 730,
        news_rate: 15.0,
        edge_prob: 0.0075,
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
        seed,
        ..SimConfig::default()
    }
}

struct RecoveryRun {
    own: FitResult,
    supplier: FitResult,
    n_events: usize,
}

fn recovery_runs() -> Result<&'static [RecoveryRun], String> {
    use std::sync::OnceLock;
    static RUNS: OnceLock<Result<Vec<RecoveryRun>, String>> = OnceLock::new();
    RUNS.get_or_init(|| {
        RECOVERY_SEEDS
            .map(|seed| {
                let stores = simulate(&recovery_config(seed))
                    .and_then(|b| b.load())
                    .map_err(|e| e.to_string())?;
                let fit_mode = |mode| {
                    let panel = build_panel(&stores, mode, Polarity::Positive, 1)
                        .map_err(|e| e.to_string())?;
                    fit(&panel, Covariance::Homoskedastic).map_err(|e| e.to_string())
                };
                let own = fit_mode(Mode::Own)?;
                Ok(RecoveryRun {
                    n_events: own.n_obs / 2,
                    own,
                    supplier: fit_mode(Mode::Supplier)?,
                })
            })
            .collect()
    })
    .as_ref()
    .map(Vec::as_slice)
    .map_err(Clone::clone)
}

fn c4_direct_recovery() -> Outcome {
    let runs = recovery_runs()?;
    let exp = expected_betas(&recovery_config(1), 1);
    let (e_pre, e_post) = exp.own;
    let mut both = 0;
    let (mut pre_ok, mut post_ok) = (0, 0);
    let mut worst_z = 0.0f64;
    for (seed, r) in RECOVERY_SEEDS.zip(runs) {
        ensure(r.n_events >= 5000, || {
            format!("seed {seed}: only {} events", r.n_events)
        })?;
        let f = &r.own;
        ensure(f.beta_post > f.beta_pre && f.beta_pre > 0.0, || {
            format!(
                "seed {seed}: ordering fails, pre {} post {}",
                f.beta_pre, f.beta_post
            )
        })?;
        let z_pre = (f.beta_pre - e_pre) / f.se_pre;
        let z_post = (f.beta_post - e_post) / f.se_post;
        worst_z = worst_z.max(z_pre.abs()).max(z_post.abs());
        pre_ok += (z_pre.abs() <= 2.0) as usize;
        post_ok += (z_post.abs() <= 2.0) as usize;
        both += (z_pre.abs() <= 2.0 && z_post.abs() <= 2.0) as usize;
    }
    let detail = format!(
        "both within 2 SE in {both}/20 (pre {pre_ok}/20, post {post_ok}/20), max |z| {worst_z:.2}, expected ({e_pre:.4}, {e_post:.4}), ordering 20/20"
    );
    ensure(both >= 19, || detail.clone())?;
    Ok(detail)
}

fn c5_indirect_recovery() -> Outcome {
    let runs = recovery_runs()?;
    let cfg = recovery_config(1);
    ensure(
        (cfg.gamma_sup - cfg.gamma_post / 10.0).abs() < 1e-15,
        || "gamma_sup is not gamma_post/10".into(),
    )?;
    let (_, e_post) = expected_betas(&cfg, 1).supplier;
    let mut ok = 0;
    let mut worst_ratio = 0.0f64;
    for r in runs {
        let f = &r.supplier;
        let z = (f.beta_post - e_post) / f.se_post;
        let ratio = f.beta_post / r.own.beta_post;
        worst_ratio = worst_ratio.max(ratio);
        ok += (z.abs() <= 2.0 && ratio < 0.2) as usize;
    }
    let detail = format!(
        "{ok}/20 within 2 SE of {e_post:.4} and below 20% of direct, max ratio {worst_ratio:.3}, same runs as criterion 4"
    );
    ensure(ok >= 19, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 6

fn c6_size_control() -> Outcome {
    use rayon::prelude::*;
    let results: Vec<Result<bool, String>> = (1..=100u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = SimConfig {
                n_firms: 200,
                n_sectors: 8,
                n_markets: 2,
                n_days: 730,
                news_rate: 10.0,
                edge_prob: 0.01,
                gamma_pre: 0.0,
                gamma_post: 0.0,
                gamma_sup: 0.0,
                gamma_cli: 0.0,
                seed,
                ..SimConfig::default()
            };
            let stores = simulate(&cfg)
                .and_then(|b| b.load())
                .map_err(|e| e.to_string())?;
            let panel = build_panel(&stores, Mode::Own, Polarity::Positive, 1)
                .map_err(|e| e.to_string())?;
            let f = fit(&panel, Covariance::Homoskedastic).map_err(|e| e.to_string())?;
            Ok(f.t_pre().abs() < 3.0 && f.t_post().abs() < 3.0)
        })
        .collect();
    let mut ok = 0;
    for r in results {
        ok += r? as usize;
    }
    let detail = format!("|t| < 3 for both coefficients in {ok}/100 seeds");
    ensure(ok >= 95, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- 7

struct RawBundle {
    firms: HashMap<String, (String, String)>,
    prices: HashMap<String, Vec<NaiveDate>>,
    indices: HashMap<String, Vec<NaiveDate>>,
    events: Vec<(NaiveDate, Vec<String>)>,
    edges: BTreeMap<i32, Vec<(String, String)>>,
}

fn csv_rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
}

fn raw_bundle(b: &SimBundle) -> RawBundle {
    let mut raw = RawBundle {
        firms: HashMap::new(),
        prices: HashMap::new(),
        indices: HashMap::new(),
        events: Vec::new(),
        edges: BTreeMap::new(),
    };
    for r in csv_rows(&b.firms_csv) {
        raw.firms.insert(r[0].into(), (r[1].into(), r[2].into()));
    }
    for r in csv_rows(&b.prices_csv) {
        raw.prices
            .entry(r[0].into())
            .or_default()
            .push(r[1].parse().unwrap());
    }
    for r in csv_rows(&b.indices_csv) {
        raw.indices
            .entry(r[0].into())
            .or_default()
            .push(r[1].parse().unwrap());
    }
    let mut by_id: BTreeMap<&str, (NaiveDate, Vec<String>)> = BTreeMap::new();
    for r in csv_rows(&b.news_csv) {
        by_id
            .entry(r[0])
            .or_insert((r[1].parse().unwrap(), Vec::new()))
            .1
            .push(r[2].into());
    }
    raw.events = by_id.into_values().collect();
    for r in csv_rows(&b.edges_csv) {
        raw.edges
            .entry(r[0].parse().unwrap())
            .or_default()
            .push((r[1].into(), r[2].into()));
    }
    raw
}

fn covers(dates: Option<&Vec<NaiveDate>>, news: NaiveDate, w: usize) -> bool {
    let Some(dates) = dates else { return false };
    let Some(p) = dates.iter().position(|x| *x >= news) else {
        return false;
    };
    p >= 2 * w && p + w <= dates.len()
}

/// Number of (event, exposed firm) pairs with complete data, by enumeration.
fn brute_pairs(raw: &RawBundle, mode: Mode, w: usize) -> usize {
    let mut count = 0;
    for (date, mentions) in &raw.events {
        let known: Vec<&String> = mentions
            .iter()
            .filter(|m| raw.firms.contains_key(*m))
            .collect();
        let exposed: BTreeSet<&String> = match mode {
            Mode::Own => known.into_iter().collect(),
            _ => {
                let Some((_, edges)) = raw.edges.range(..=date.year()).next_back() else {
                    continue;
                };
                let mut set = BTreeSet::new();
                for j in known {
                    for (s, c) in edges {
                        let hit = match mode {
                            Mode::Supplier => (c == j).then_some(s),
                            _ => (s == j).then_some(c),
                        };
                        if let Some(i) = hit {
                            if !mentions.contains(i) {
                                set.insert(i);
                            }
                        }
                    }
                }
                set
            }
        };
        for i in exposed {
            let Some((market, sector)) = raw.firms.get(i) else {
                continue;
            };
            if market.is_empty() || sector.is_empty() {
                continue;
            }
            if covers(raw.prices.get(i), *date, w) && covers(raw.indices.get(market), *date, w) {
                count += 1;
            }
        }
    }
    count
}

fn c7_panel_counts() -> Outcome {
    let mut checked = 0;
    let mut total_pairs = 0;
    for seed in 1..=10 {
        let cfg = SimConfig {
            n_firms: 20,
            n_sectors: 3,
            n_markets: 2,
            n_days: 500,
            news_rate: 3.0,
            edge_prob: 0.15,
            co_mention_prob: 0.3,
            start_date: d(2015, 10, 1),
            seed,
            ..SimConfig::default()
        };
        let mut bundle = simulate(&cfg).map_err(|e| e.to_string())?;
        // one firm missing from the registry, one without a sector
        bundle.firms_csv = bundle
            .firms_csv
            .lines()
            .filter(|l| !l.starts_with("F00,"))
            .map(|l| {
                if l.starts_with("F01,") {
                    "F01,M1,,SIM".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        let stores = bundle.load().map_err(|e| e.to_string())?;
        ensure(stores.news.len() <= 100, || {
            format!("seed {seed}: {} events", stores.news.len())
        })?;
        let raw = raw_bundle(&bundle);
        for mode in Mode::ALL {
            for w in [1u32, 3, 10, 30, 120] {
                let want = brute_pairs(&raw, mode, w as usize);
                for polarity in Polarity::BOTH {
                    let panel =
                        build_panel(&stores, mode, polarity, w).map_err(|e| e.to_string())?;
                    let n = panel.observations.len();
                    ensure(n == 2 * want, || {
                        format!("seed {seed} {mode} w={w}: {n} rows, want 2 x {want}")
                    })?;
                }
                total_pairs += want;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} (bundle, mode, window) cells, {total_pairs} complete pairs"
    ))
}

// ---------------------------------------------------------------- 8

fn c8_network_stats() -> Outcome {
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n_nodes = rng.random_range(2..=600);
        let n_draws = rng.random_range(0..=10_000);
        let mut edges = Vec::new();
        for _ in 0..n_draws {
            let s = rng.random_range(0..n_nodes);
            let c = rng.random_range(0..n_nodes);
            if s != c {
                edges.push((format!("f{s}"), format!("f{c}")));
            }
        }
        let mut snap = SupplyChainSnapshot::new(2016);
        for (s, c) in &edges {
            snap.insert(s, c);
        }
        let graph = SupplyChainGraph::from_snapshots([snap]);
        let filter: HashSet<String> = (0..n_nodes)
            .filter(|_| rng.random_bool(0.6))
            .map(|i| format!("f{i}"))
            .collect();

        for filt in [None, Some(&filter)] {
            let got = graph.network_stats(2016, filt).map_err(|e| e.to_string())?;
            // recount with plain vectors
            let keep = |f: &String| filt.is_none_or(|set| set.contains(f));
            let mut distinct: Vec<&(String, String)> = edges.iter().collect();
            distinct.sort();
            distinct.dedup();
            let kept: Vec<_> = distinct
                .iter()
                .filter(|(s, c)| keep(s) && keep(c))
                .collect();
            let mut nodes: BTreeSet<&String> = kept.iter().flat_map(|(s, c)| [s, c]).collect();
            if filt.is_some() {
                nodes.extend(
                    distinct
                        .iter()
                        .flat_map(|(s, c)| [s, c])
                        .filter(|f| keep(f)),
                );
            }
            let max_in = nodes
                .iter()
                .map(|f| kept.iter().filter(|(_, c)| c == *f).count())
                .max()
                .unwrap_or(0);
            let max_out = nodes
                .iter()
                .map(|f| kept.iter().filter(|(s, _)| s == *f).count())
                .max()
                .unwrap_or(0);
            let want = NetworkStats {
                n_firms: nodes.len(),
                n_links: kept.len(),
                max_indegree: max_in,
                max_outdegree: max_out,
            };
            ensure(got == want, || format!("graph {seed}: {got:?} vs {want:?}"))?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} graph/filter combinations with up to 10^4 edges"
    ))
}

// ---------------------------------------------------------------- 9

fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn c9_determinism() -> Outcome {
    let sim = SimConfig {
        n_firms: 80,
        n_days: 900,
        news_rate: 6.0,
        edge_prob: 0.04,
        co_mention_prob: 0.2,
        seed: 42,
        ..SimConfig::default()
    };
    let mut outputs = Vec::new();
    for threads in [1usize, 8, 1, 8] {
        let root = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = root.path().join("data");
        let out = root.path().join("out");
        let windows = vec![1, 2, 3, 4, 5, 30, 180];
        let sim_cfg = RunConfig {
            out: data.clone(),
            threads,
            windows: windows.clone(),
            ..RunConfig::default()
        };
        cmd_simulate(&sim, &sim_cfg).map_err(|e| e.to_string())?;
        let run_cfg = RunConfig {
            firms: Some(data.join("firms.csv")),
            prices: Some(data.join("prices.csv")),
            indices: Some(data.join("indices.csv")),
            news: Some(data.join("news.csv")),
            edges: Some(data.join("edges.csv")),
            modes: Mode::ALL.to_vec(),
            polarities: Polarity::BOTH.to_vec(),
            windows,
            out: out.clone(),
            export_panel: true,
            threads,
            ..RunConfig::default()
        };
        let report = cmd_run(&run_cfg).map_err(|e| e.to_string())?;
        ensure(report.n_failed() == 0, || {
            format!("{} failed cells", report.n_failed())
        })?;
        outputs.push((dir_bytes(&data), dir_bytes(&out)));
    }
    let first = &outputs[0];
    for (i, o) in outputs.iter().enumerate().skip(1) {
        ensure(o.0 == first.0, || {
            format!("simulate output differs in run {i}")
        })?;
        for (name, bytes) in &first.1 {
            ensure(o.1.get(name) == Some(bytes), || {
                format!("{name} differs in run {i}")
            })?;
        }
        ensure(o.1.len() == first.1.len(), || "file sets differ".into())?;
    }
    Ok(format!(
        "{} simulate files and {} run files identical over 2 runs x threads 1/8",
        first.0.len(),
        first.1.len()
    ))
}
