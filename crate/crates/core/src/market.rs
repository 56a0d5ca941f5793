//! Daily close series on trading calendars and the windowed pre/post
//! percentage-change measures.
//!
//! A series only holds dates with a quote. Weekends, holidays and missing
//! quotes have no entry, so "trading position" is simply the index into the
//! series and every window counts positions rather than calendar days.
//!
//! For an anchor position `p` and window `w` three blocks of positions are
//! used:
//!
//! ```text
//!   A = [p-2w, p-w-1]   B = [p-w, p-1]   C = [p, p+w-1]
//!   pre  = (ln mean(B) - ln mean(A)) / w * 100
//!   post = (ln mean(C) - ln mean(B)) / w * 100
//! ```
//!
//! Means are arithmetic means of closes, logged afterwards.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::ingest::{self, IngestError, Ingested, RowRejection};

pub const PRICE_HEADER: [&str; 3] = ["firm_id", "date", "close"];
pub const INDEX_HEADER: [&str; 3] = ["market_id", "date", "value"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarketError {
    #[error("series `{id}` has no trading date on or after {date}")]
    AnchorOutOfRange { id: String, date: NaiveDate },
    #[error("series `{0}` is empty")]
    EmptySeries(String),
    #[error("window length must be at least 1")]
    ZeroWindow,
    #[error("series `{id}`: {reason}")]
    InvalidSeries { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Pre,
    Post,
}

impl Period {
    pub const BOTH: [Period; 2] = [Period::Pre, Period::Post];

    pub fn as_str(self) -> &'static str {
        match self {
            Period::Pre => "pre",
            Period::Post => "post",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(Period::Pre),
            "post" => Ok(Period::Post),
            _ => Err(format!("unknown period `{s}`")),
        }
    }
}

/// Daily closes (or index values) for one firm or market.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    id: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

/// Per-firm close prices.
pub type PriceSeries = DailySeries;
/// Per-market index levels.
pub type IndexSeries = DailySeries;

/// One windowed percent-per-day change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowChange {
    pub value: f64,
    pub period: Period,
    pub w: u32,
    /// Trading date the windows are anchored on.
    pub anchor: NaiveDate,
    /// True when the news date was not itself a trading date.
    pub shifted: bool,
}

impl DailySeries {
    /// Builds a series from date-ascending points. Dates must be strictly
    /// increasing and values positive and finite.
    pub fn new(
        id: impl Into<String>,
        points: impl IntoIterator<Item = (NaiveDate, f64)>,
    ) -> Result<Self, MarketError> {
        let id = id.into();
        let (dates, values): (Vec<_>, Vec<_>) = points.into_iter().unzip();
        if let Some(i) = dates.windows(2).position(|d| d[0] >= d[1]) {
            return Err(MarketError::InvalidSeries {
                id,
                reason: format!("dates not strictly increasing at {}", dates[i + 1]),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(MarketError::InvalidSeries {
                id,
                reason: format!("non-positive value {v}"),
            });
        }
        Ok(DailySeries { id, dates, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Position of `news_date` if it is a trading date, otherwise of the first
    /// trading date after it.
    pub fn anchor_position(&self, news_date: NaiveDate) -> Result<usize, MarketError> {
        if self.dates.is_empty() {
            return Err(MarketError::EmptySeries(self.id.clone()));
        }
        let p = self.dates.partition_point(|d| *d < news_date);
        if p == self.dates.len() {
            return Err(MarketError::AnchorOutOfRange {
                id: self.id.clone(),
                date: news_date,
            });
        }
        Ok(p)
    }

    fn block_mean(&self, r: Range<usize>) -> f64 {
        let n = r.len() as f64;
        self.values[r].iter().sum::<f64>() / n
    }

    /// Windowed change for `period`, or `None` when a required block runs off
    /// either end of the series.
    pub fn window_change(
        &self,
        news_date: NaiveDate,
        w: u32,
        period: Period,
    ) -> Result<Option<WindowChange>, MarketError> {
        if w == 0 {
            return Err(MarketError::ZeroWindow);
        }
        let p = self.anchor_position(news_date)?;
        let w_us = w as usize;
        let Some(value) = self.change_at(p, w_us, period) else {
            return Ok(None);
        };
        let anchor = self.dates[p];
        Ok(Some(WindowChange {
            value,
            period,
            w,
            anchor,
            shifted: anchor != news_date,
        }))
    }

    /// Raw change at an anchor position.
    pub fn change_at(&self, p: usize, w: usize, period: Period) -> Option<f64> {
        let (earlier, later) = block_ranges(p, w, period)?;
        if later.end > self.values.len() {
            return None;
        }
        let v = (self.block_mean(later).ln() - self.block_mean(earlier).ln()) / w as f64 * 100.0;
        v.is_finite().then_some(v)
    }
}

/// Market-trend control: the same windowed change computed on the market
/// index, anchored at the same calendar date on the index's own calendar.
pub fn market_control(
    index: &IndexSeries,
    news_date: NaiveDate,
    w: u32,
    period: Period,
) -> Result<Option<f64>, MarketError> {
    Ok(index.window_change(news_date, w, period)?.map(|c| c.value))
}

/// The (earlier, later) position blocks compared for `period`.
/// `None` when the earlier block would start before position 0.
pub fn block_ranges(p: usize, w: usize, period: Period) -> Option<(Range<usize>, Range<usize>)> {
    match period {
        Period::Pre => {
            let a = p.checked_sub(2 * w)?;
            Some((a..a + w, p - w..p))
        }
        Period::Post => {
            let b = p.checked_sub(w)?;
            Some((b..p, p..p + w))
        }
    }
}

/// Series keyed by firm or market id.
#[derive(Debug, Clone, Default)]
pub struct SeriesStore {
    series: HashMap<String, DailySeries>,
}

impl SeriesStore {
    pub fn from_series(series: impl IntoIterator<Item = DailySeries>) -> Self {
        SeriesStore {
            series: series.into_iter().map(|s| (s.id.clone(), s)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&DailySeries> {
        self.series.get(id)
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn load_prices(path: &Path) -> Result<Ingested<Self>, IngestError> {
        Self::prices_from_reader(ingest::open(path)?, &path.display().to_string())
    }

    pub fn load_indices(path: &Path) -> Result<Ingested<Self>, IngestError> {
        Self::indices_from_reader(ingest::open(path)?, &path.display().to_string())
    }

    pub fn prices_from_reader<R: Read>(
        reader: R,
        file: &str,
    ) -> Result<Ingested<Self>, IngestError> {
        Self::from_reader(reader, file, &PRICE_HEADER)
    }

    pub fn indices_from_reader<R: Read>(
        reader: R,
        file: &str,
    ) -> Result<Ingested<Self>, IngestError> {
        Self::from_reader(reader, file, &INDEX_HEADER)
    }

    /// Rows may come in any order. Bad rows and repeated (id, date) pairs are
    /// rejected; the first occurrence of a pair is kept.
    fn from_reader<R: Read>(
        reader: R,
        file: &str,
        header: &[&str; 3],
    ) -> Result<Ingested<Self>, IngestError> {
        let table = ingest::read_table(reader, file, header)?;
        let mut points: HashMap<String, Vec<(NaiveDate, f64)>> = HashMap::new();
        let mut seen: HashMap<(String, NaiveDate), usize> = HashMap::new();
        let mut rejected = Vec::new();
        for (row, fields) in table.rows {
            let parsed = parse_point(&fields, header[2]);
            let (id, date, value) = match parsed {
                Ok(p) => p,
                Err(reason) => {
                    rejected.push(RowRejection { row, reason });
                    continue;
                }
            };
            match seen.entry((id.clone(), date)) {
                Entry::Occupied(first) => rejected.push(RowRejection {
                    row,
                    reason: format!(
                        "duplicate ({id}, {date}); first seen on row {}",
                        first.get()
                    ),
                }),
                Entry::Vacant(slot) => {
                    slot.insert(row);
                    points.entry(id).or_default().push((date, value));
                }
            }
        }
        let series = points
            .into_iter()
            .map(|(id, mut pts)| {
                pts.sort_by_key(|p| p.0);
                let (dates, values) = pts.into_iter().unzip();
                (id.clone(), DailySeries { id, dates, values })
            })
            .collect();
        Ok(Ingested {
            value: SeriesStore { series },
            rejected,
        })
    }
}

fn parse_point(fields: &[String], value_name: &str) -> Result<(String, NaiveDate, f64), String> {
    if fields.len() != 3 {
        return Err(format!("expected 3 columns, found {}", fields.len()));
    }
    if fields[0].is_empty() {
        return Err("empty id".into());
    }
    let date = ingest::parse_date(&fields[1]).ok_or_else(|| format!("bad date `{}`", fields[1]))?;
    let v = ingest::parse_f64(&fields[2], value_name)?;
    if v <= 0.0 {
        return Err(format!("{value_name} {v} is not positive"));
    }
    Ok((fields[0].clone(), date, v))
}
