//! Regression sample assembly.
//!
//! Each (event, exposed firm) pair yields one pre and one post observation
//! for a given window. Exposure is the mentioned firm itself (own mode) or
//! the suppliers / clients of the mentioned firms in the supply-chain
//! snapshot in force at the event date.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::SupplyChainGraph;
use crate::market::{market_control, Period, SeriesStore};
use crate::registry::FirmRegistry;
use crate::sentiment::{NewsEvent, NewsStore, Polarity};

pub const PANEL_HEADER: &str = "firm_id,news_id,w,period,y,news_value,market_x,sector,market";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Own,
    Supplier,
    Client,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Own, Mode::Supplier, Mode::Client];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Own => "own",
            Mode::Supplier => "supplier",
            Mode::Client => "client",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "own" => Ok(Mode::Own),
            "supplier" => Ok(Mode::Supplier),
            "client" => Ok(Mode::Client),
            _ => Err(format!("unknown mode `{s}` (expected own|supplier|client)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PanelError {
    #[error("window length must be at least 1")]
    ZeroWindow,
}

/// Everything the panel builder reads. Read-only during a build.
#[derive(Debug, Clone, Default)]
pub struct DataStores {
    pub firms: FirmRegistry,
    pub prices: SeriesStore,
    pub indices: SeriesStore,
    pub news: NewsStore,
    pub graph: SupplyChainGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub firm_id: String,
    pub news_id: String,
    pub w: u32,
    pub period: Period,
    /// Windowed percent-per-day change of the firm's price.
    pub y: f64,
    /// Selected sentiment probability of the article.
    pub news_value: f64,
    /// Same windowed change on the firm's market index.
    pub market_x: f64,
    pub sector: String,
    pub market: String,
    pub news_date: NaiveDate,
    /// Trading date the windows are anchored on (news date or next trading day).
    pub anchor: NaiveDate,
}

impl Observation {
    pub fn pre(&self) -> f64 {
        (self.period == Period::Pre) as u8 as f64
    }

    pub fn post(&self) -> f64 {
        (self.period == Period::Post) as u8 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    UnknownFirm,
    MissingAttributes,
    PriceWindow,
    IndexWindow,
    NoSnapshot,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::UnknownFirm => "unknown-firm",
            DropReason::MissingAttributes => "missing-attributes",
            DropReason::PriceWindow => "price-window",
            DropReason::IndexWindow => "index-window",
            DropReason::NoSnapshot => "no-snapshot",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An (event, firm) pair left out of the panel, and why.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AuditRecord {
    pub news_id: String,
    pub firm_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub mode: Mode,
    pub polarity: Polarity,
    pub w: u32,
    /// Sorted by (news_id, firm_id, period).
    pub observations: Vec<Observation>,
    pub audit: Vec<AuditRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PanelSummary {
    pub n_obs: usize,
    pub n_events: usize,
    pub n_firms: usize,
    pub drop_counts: BTreeMap<DropReason, usize>,
}

/// Builds the balanced pre/post sample for one (mode, polarity, window).
///
/// A pair is kept only when both periods have complete price and index
/// windows. In supplier/client mode the exposed set of an event is the union
/// over its mentioned firms, minus every firm the article itself mentions.
pub fn build_panel(
    stores: &DataStores,
    mode: Mode,
    polarity: Polarity,
    w: u32,
) -> Result<Panel, PanelError> {
    if w == 0 {
        return Err(PanelError::ZeroWindow);
    }
    let per_event: Vec<(Vec<Observation>, Vec<AuditRecord>)> = stores
        .news
        .events()
        .par_iter()
        .map(|ev| event_rows(stores, ev, mode, polarity, w))
        .collect();

    let mut observations = Vec::new();
    let mut audit = Vec::new();
    for (obs, aud) in per_event {
        observations.extend(obs);
        audit.extend(aud);
    }
    observations.sort_by(|a, b| {
        (&a.news_id, &a.firm_id, a.period).cmp(&(&b.news_id, &b.firm_id, b.period))
    });
    audit.sort();
    Ok(Panel {
        mode,
        polarity,
        w,
        observations,
        audit,
    })
}

/// Firms exposed to `ev` under `mode`, plus audit records for mentions that
/// could not be resolved.
pub fn exposed_firms(
    stores: &DataStores,
    ev: &NewsEvent,
    mode: Mode,
) -> (BTreeSet<String>, Vec<AuditRecord>) {
    let mut audit = Vec::new();
    let mut known = Vec::new();
    for m in &ev.mentions {
        if stores.firms.contains(m) {
            known.push(m.as_str());
        } else {
            audit.push(AuditRecord {
                news_id: ev.news_id.clone(),
                firm_id: m.clone(),
                reason: DropReason::UnknownFirm,
            });
        }
    }
    if mode == Mode::Own {
        return (known.into_iter().map(str::to_string).collect(), audit);
    }
    let Some(snap) = stores.graph.snapshot_at(ev.date.year()) else {
        audit.extend(known.iter().map(|m| AuditRecord {
            news_id: ev.news_id.clone(),
            firm_id: m.to_string(),
            reason: DropReason::NoSnapshot,
        }));
        return (BTreeSet::new(), audit);
    };
    let mentioned: HashSet<&str> = ev.mentions.iter().map(String::as_str).collect();
    let mut exposed = BTreeSet::new();
    for j in known {
        let neighbours: Box<dyn Iterator<Item = &str>> = match mode {
            Mode::Supplier => Box::new(snap.suppliers_of(j)),
            Mode::Client => Box::new(snap.clients_of(j)),
            Mode::Own => unreachable!(),
        };
        exposed.extend(
            neighbours
                .filter(|i| !mentioned.contains(i))
                .map(str::to_string),
        );
    }
    (exposed, audit)
}

fn event_rows(
    stores: &DataStores,
    ev: &NewsEvent,
    mode: Mode,
    polarity: Polarity,
    w: u32,
) -> (Vec<Observation>, Vec<AuditRecord>) {
    let (exposed, mut audit) = exposed_firms(stores, ev, mode);
    let news_value = ev.news_value(polarity);
    let mut rows = Vec::with_capacity(exposed.len() * 2);
    for firm in exposed {
        match pair_rows(stores, ev, &firm, news_value, w) {
            Ok(pair) => rows.extend(pair),
            Err(reason) => audit.push(AuditRecord {
                news_id: ev.news_id.clone(),
                firm_id: firm,
                reason,
            }),
        }
    }
    (rows, audit)
}

fn pair_rows(
    stores: &DataStores,
    ev: &NewsEvent,
    firm: &str,
    news_value: f64,
    w: u32,
) -> Result<[Observation; 2], DropReason> {
    let rec = stores.firms.get(firm).ok_or(DropReason::UnknownFirm)?;
    let (Some(market), Some(sector)) = (&rec.market_id, &rec.sector_code) else {
        return Err(DropReason::MissingAttributes);
    };
    let prices = stores.prices.get(firm).ok_or(DropReason::PriceWindow)?;
    let index = stores.indices.get(market).ok_or(DropReason::IndexWindow)?;

    let make = |period: Period| -> Result<Observation, DropReason> {
        let change = prices
            .window_change(ev.date, w, period)
            .ok()
            .flatten()
            .ok_or(DropReason::PriceWindow)?;
        let x = market_control(index, ev.date, w, period)
            .ok()
            .flatten()
            .ok_or(DropReason::IndexWindow)?;
        Ok(Observation {
            firm_id: firm.to_string(),
            news_id: ev.news_id.clone(),
            w,
            period,
            y: change.value,
            news_value,
            market_x: x,
            sector: sector.clone(),
            market: market.clone(),
            news_date: ev.date,
            anchor: change.anchor,
        })
    };
    Ok([make(Period::Pre)?, make(Period::Post)?])
}

pub fn panel_summary(panel: &Panel) -> PanelSummary {
    let events: HashSet<&str> = panel
        .observations
        .iter()
        .map(|o| o.news_id.as_str())
        .collect();
    let firms: HashSet<&str> = panel
        .observations
        .iter()
        .map(|o| o.firm_id.as_str())
        .collect();
    let mut drop_counts = BTreeMap::new();
    for a in &panel.audit {
        *drop_counts.entry(a.reason).or_default() += 1;
    }
    PanelSummary {
        n_obs: panel.observations.len(),
        n_events: events.len(),
        n_firms: firms.len(),
        drop_counts,
    }
}

/// Renders observations in the panel export layout.
pub fn panel_csv(observations: &[Observation]) -> String {
    let mut out = String::with_capacity(64 * (observations.len() + 1));
    out.push_str(PANEL_HEADER);
    out.push('\n');
    for o in observations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            o.firm_id, o.news_id, o.w, o.period, o.y, o.news_value, o.market_x, o.sector, o.market
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SupplyChainSnapshot;
    use crate::market::DailySeries;
    use crate::registry::FirmRecord;

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, 1, 4).unwrap() + chrono::Days::new(i)
    }

    fn series(id: &str, n: u64, f: impl Fn(u64) -> f64) -> DailySeries {
        DailySeries::new(id, (0..n).map(|i| (day(i), f(i)))).unwrap()
    }

    fn firm(id: &str, market: Option<&str>, sector: Option<&str>) -> FirmRecord {
        FirmRecord {
            firm_id: id.into(),
            market_id: market.map(Into::into),
            sector_code: sector.map(Into::into),
            country: None,
        }
    }

    fn event(id: &str, d: u64, mentions: &[&str], p_pos: f64) -> NewsEvent {
        NewsEvent {
            news_id: id.into(),
            date: day(d),
            mentions: mentions.iter().map(|s| s.to_string()).collect(),
            p_pos,
            p_neu: 0.0,
            p_neg: 1.0 - p_pos,
        }
    }

    /// Firms A..E in market M, sector S, with 40 days of prices each.
    /// Edges (2016): A->J, B->J, J->C.
    fn stores(events: Vec<NewsEvent>) -> DataStores {
        let ids = ["A", "B", "C", "J", "K"];
        let mut snap = SupplyChainSnapshot::new(2016);
        snap.insert("A", "J");
        snap.insert("B", "J");
        snap.insert("J", "C");
        snap.insert("K", "J");
        DataStores {
            firms: FirmRegistry::from_records(
                ids.iter()
                    .map(|i| firm(i, Some("M"), Some("S")))
                    .chain([firm("NOMKT", None, Some("S"))]),
            ),
            prices: SeriesStore::from_series(
                ids.iter()
                    .enumerate()
                    .map(|(k, i)| series(i, 40, move |t| 10.0 + k as f64 + (t as f64 * 0.7).sin())),
            ),
            indices: SeriesStore::from_series([series("M", 40, |t| 100.0 + t as f64)]),
            news: NewsStore::from_events(events),
            graph: SupplyChainGraph::from_snapshots([snap]),
        }
    }

    #[test]
    fn no_events_empty_panel() {
        let p = build_panel(&stores(vec![]), Mode::Own, Polarity::Positive, 1).unwrap();
        assert!(p.observations.is_empty());
        assert_eq!(panel_summary(&p), PanelSummary::default());
    }

    #[test]
    fn own_mode_pair() {
        let s = stores(vec![event("n1", 10, &["J"], 0.8)]);
        let p = build_panel(&s, Mode::Own, Polarity::Positive, 2).unwrap();
        assert_eq!(p.observations.len(), 2);
        assert_eq!(p.observations[0].period, Period::Pre);
        assert_eq!(p.observations[1].period, Period::Post);
        assert!(p
            .observations
            .iter()
            .all(|o| o.news_value == 0.8 && o.firm_id == "J"));
        let expect = s
            .prices
            .get("J")
            .unwrap()
            .window_change(day(10), 2, Period::Post)
            .unwrap()
            .unwrap();
        assert_eq!(p.observations[1].y, expect.value);
        let sum = panel_summary(&p);
        assert_eq!((sum.n_obs, sum.n_events, sum.n_firms), (2, 1, 1));
    }

    #[test]
    fn supplier_fan_out_excludes_co_mentions() {
        let s = stores(vec![event("n1", 10, &["J"], 0.8)]);
        let p = build_panel(&s, Mode::Supplier, Polarity::Positive, 1).unwrap();
        let firms: BTreeSet<&str> = p.observations.iter().map(|o| o.firm_id.as_str()).collect();
        assert_eq!(p.observations.len(), 6);
        assert_eq!(firms, BTreeSet::from(["A", "B", "K"]));

        let s = stores(vec![event("n1", 10, &["J", "A"], 0.8)]);
        let p = build_panel(&s, Mode::Supplier, Polarity::Positive, 1).unwrap();
        assert_eq!(p.observations.len(), 4);
        assert!(p.observations.iter().all(|o| o.firm_id != "A"));

        let p = build_panel(&s, Mode::Client, Polarity::Positive, 1).unwrap();
        assert!(p.observations.iter().all(|o| o.firm_id == "C"));
        assert_eq!(p.observations.len(), 2);
    }

    #[test]
    fn shared_supplier_counted_once_per_event() {
        // K supplies both J and C; an article mentioning both exposes K once
        let mut s = stores(vec![event("n1", 10, &["J", "C"], 0.5)]);
        let mut snap = SupplyChainSnapshot::new(2016);
        snap.insert("K", "J");
        snap.insert("K", "C");
        s.graph = SupplyChainGraph::from_snapshots([snap]);
        let p = build_panel(&s, Mode::Supplier, Polarity::Positive, 1).unwrap();
        assert_eq!(p.observations.len(), 2);
    }

    #[test]
    fn drops_are_audited_and_balanced() {
        let s = stores(vec![
            event("n1", 10, &["J"], 0.8),
            event("n2", 12, &["A"], 0.2),
            event("n3", 38, &["B"], 0.4), // post window runs off the end at w = 3
            event("n4", 12, &["ZZ"], 0.4),
            event("n5", 12, &["NOMKT"], 0.4),
        ]);
        let p = build_panel(&s, Mode::Own, Polarity::Positive, 3).unwrap();
        let sum = panel_summary(&p);
        assert_eq!(sum.n_obs, 4);
        assert_eq!(sum.drop_counts[&DropReason::PriceWindow], 1);
        assert_eq!(sum.drop_counts[&DropReason::UnknownFirm], 1);
        assert_eq!(sum.drop_counts[&DropReason::MissingAttributes], 1);
        assert!(p.observations.iter().all(|o| o.news_id != "n3"));
    }

    #[test]
    fn missing_index_and_snapshot() {
        let mut s = stores(vec![event("n1", 10, &["J"], 0.8)]);
        s.indices = SeriesStore::default();
        let p = build_panel(&s, Mode::Own, Polarity::Positive, 1).unwrap();
        assert_eq!(panel_summary(&p).drop_counts[&DropReason::IndexWindow], 1);

        let mut s = stores(vec![event("n1", 10, &["J"], 0.8)]);
        s.graph = SupplyChainGraph::from_snapshots([SupplyChainSnapshot::new(2017)]);
        let p = build_panel(&s, Mode::Supplier, Polarity::Positive, 1).unwrap();
        assert!(p.observations.is_empty());
        assert_eq!(p.audit[0].reason, DropReason::NoSnapshot);
    }

    #[test]
    fn polarity_changes_only_news_value() {
        let s = stores(vec![
            event("n1", 10, &["J"], 0.8),
            event("n2", 14, &["A", "B"], 0.3),
        ]);
        let pos = build_panel(&s, Mode::Own, Polarity::Positive, 2).unwrap();
        let neg = build_panel(&s, Mode::Own, Polarity::Negative, 2).unwrap();
        assert_eq!(pos.observations.len(), neg.observations.len());
        for (a, b) in pos.observations.iter().zip(&neg.observations) {
            assert_eq!((a.y, a.market_x, &a.firm_id), (b.y, b.market_x, &b.firm_id));
            assert!((a.news_value + b.news_value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_window_rejected() {
        assert_eq!(
            build_panel(&stores(vec![]), Mode::Own, Polarity::Positive, 0).err(),
            Some(PanelError::ZeroWindow)
        );
    }

    #[test]
    fn csv_export_layout() {
        let s = stores(vec![event("n1", 10, &["J"], 0.8)]);
        let p = build_panel(&s, Mode::Own, Polarity::Positive, 1).unwrap();
        let text = panel_csv(&p.observations);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], PANEL_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("J,n1,1,pre,"));
        assert!(lines[2].ends_with(",S,M"));
    }
}
