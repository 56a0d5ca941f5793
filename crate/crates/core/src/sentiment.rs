//! News events with their sentiment probability triples.
//!
//! Sentiment scores are produced upstream by a three-label financial
//! classifier; this module only ingests and validates them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::ingest::{self, IngestError, Ingested, RowRejection};

pub const NEWS_HEADER: [&str; 6] = ["news_id", "date", "firm_id", "p_pos", "p_neu", "p_neg"];

/// Allowed deviation of p_pos + p_neu + p_neg from 1 before renormalizing.
pub const SIMPLEX_TOLERANCE: f64 = 1e-3;

/// Rows of one article must agree on the probabilities to this precision.
const SAME_ARTICLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Positive, Polarity::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" | "pos" => Ok(Polarity::Positive),
            "negative" | "neg" => Ok(Polarity::Negative),
            _ => Err(format!(
                "unknown polarity `{s}` (expected positive|negative)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsEvent {
    pub news_id: String,
    pub date: NaiveDate,
    /// Mentioned firms in file order, without repeats.
    pub mentions: Vec<String>,
    pub p_pos: f64,
    pub p_neu: f64,
    pub p_neg: f64,
}

impl NewsEvent {
    pub fn news_value(&self, polarity: Polarity) -> f64 {
        match polarity {
            Polarity::Positive => self.p_pos,
            Polarity::Negative => self.p_neg,
        }
    }

    pub fn mentions(&self, firm: &str) -> bool {
        self.mentions.iter().any(|m| m == firm)
    }
}

#[derive(Debug, Clone, Default)]
pub struct NewsStore {
    events: Vec<NewsEvent>,
    by_id: HashMap<String, usize>,
    by_firm: HashMap<String, Vec<usize>>,
}

impl NewsStore {
    /// Builds a store from already-validated events; ordering is normalized
    /// to (date, news_id).
    pub fn from_events(mut events: Vec<NewsEvent>) -> Self {
        events.sort_by(|a, b| (a.date, &a.news_id).cmp(&(b.date, &b.news_id)));
        let mut by_id = HashMap::with_capacity(events.len());
        let mut by_firm: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, ev) in events.iter().enumerate() {
            by_id.insert(ev.news_id.clone(), i);
            for m in &ev.mentions {
                by_firm.entry(m.clone()).or_default().push(i);
            }
        }
        NewsStore {
            events,
            by_id,
            by_firm,
        }
    }

    pub fn load(path: &Path) -> Result<Ingested<Self>, IngestError> {
        Self::from_reader(ingest::open(path)?, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, file: &str) -> Result<Ingested<Self>, IngestError> {
        let table = ingest::read_table(reader, file, &NEWS_HEADER)?;
        let mut rejected = Vec::new();
        let mut order: Vec<String> = Vec::new();
        let mut drafts: HashMap<String, Draft> = HashMap::new();

        for (row, fields) in table.rows {
            let parsed = match parse_row(&fields) {
                Ok(p) => p,
                Err(reason) => {
                    rejected.push(RowRejection { row, reason });
                    continue;
                }
            };
            let draft = match drafts.get_mut(&parsed.news_id) {
                Some(d) => d,
                None => {
                    order.push(parsed.news_id.clone());
                    drafts.entry(parsed.news_id.clone()).or_insert(Draft {
                        date: parsed.date,
                        probs: parsed.probs,
                        rows: Vec::new(),
                        seen: HashSet::new(),
                    })
                }
            };
            if parsed.date != draft.date {
                rejected.push(RowRejection {
                    row,
                    reason: format!(
                        "article {} dated {} on an earlier row, {} here",
                        parsed.news_id, draft.date, parsed.date
                    ),
                });
                continue;
            }
            let same = parsed
                .probs
                .iter()
                .zip(&draft.probs)
                .all(|(a, b)| (a - b).abs() <= SAME_ARTICLE_TOLERANCE);
            if !same {
                rejected.push(RowRejection {
                    row,
                    reason: format!(
                        "article {} carries different probabilities on different rows",
                        parsed.news_id
                    ),
                });
                continue;
            }
            if !draft.seen.insert(parsed.firm_id.clone()) {
                rejected.push(RowRejection {
                    row,
                    reason: format!(
                        "firm {} mentioned twice in article {}",
                        parsed.firm_id, parsed.news_id
                    ),
                });
                continue;
            }
            draft.rows.push((row, parsed.firm_id));
        }

        let mut events = Vec::with_capacity(order.len());
        for news_id in order {
            let draft = drafts.remove(&news_id).expect("draft exists for every id");
            if draft.rows.is_empty() {
                continue;
            }
            let sum: f64 = draft.probs.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                for (row, _) in &draft.rows {
                    rejected.push(RowRejection {
                        row: *row,
                        reason: format!("probabilities of article {news_id} sum to {sum}, not 1"),
                    });
                }
                continue;
            }
            let [p_pos, p_neu, p_neg] = draft.probs.map(|p| p / sum);
            events.push(NewsEvent {
                news_id,
                date: draft.date,
                mentions: draft.rows.into_iter().map(|(_, f)| f).collect(),
                p_pos,
                p_neu,
                p_neg,
            });
        }
        rejected.sort_by_key(|r| r.row);
        Ok(Ingested {
            value: NewsStore::from_events(events),
            rejected,
        })
    }

    /// Events ordered by (date, news_id).
    pub fn events(&self) -> &[NewsEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, news_id: &str) -> Option<&NewsEvent> {
        self.by_id.get(news_id).map(|&i| &self.events[i])
    }

    /// Events mentioning `firm`, in date order.
    pub fn events_for(&self, firm: &str) -> impl Iterator<Item = &NewsEvent> {
        self.by_firm
            .get(firm)
            .into_iter()
            .flat_map(move |ix| ix.iter().map(move |&i| &self.events[i]))
    }

    pub fn mentioned_firms(&self) -> impl Iterator<Item = &str> {
        self.by_firm.keys().map(String::as_str)
    }
}

struct Draft {
    date: NaiveDate,
    probs: [f64; 3],
    rows: Vec<(usize, String)>,
    seen: HashSet<String>,
}

struct ParsedRow {
    news_id: String,
    date: NaiveDate,
    firm_id: String,
    probs: [f64; 3],
}

fn parse_row(fields: &[String]) -> Result<ParsedRow, String> {
    if fields.len() != NEWS_HEADER.len() {
        return Err(format!("expected 6 columns, found {}", fields.len()));
    }
    if fields[0].is_empty() {
        return Err("empty news_id".into());
    }
    let date = ingest::parse_date(&fields[1]).ok_or_else(|| format!("bad date `{}`", fields[1]))?;
    if fields[2].is_empty() {
        return Err("empty firm_id (article mentions no firm)".into());
    }
    let mut probs = [0.0; 3];
    for (k, name) in ["p_pos", "p_neu", "p_neg"].iter().enumerate() {
        let p = ingest::parse_f64(&fields[3 + k], name)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("{name} {p} outside [0, 1]"));
        }
        probs[k] = p;
    }
    Ok(ParsedRow {
        news_id: fields[0].clone(),
        date,
        firm_id: fields[2].clone(),
        probs,
    })
}

/// Mention counts behind the two news-coverage distributions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MentionHistogram {
    /// number of firms mentioned -> number of articles
    pub mentions_per_article: BTreeMap<usize, usize>,
    /// firm -> number of articles mentioning it
    pub articles_per_firm: BTreeMap<String, usize>,
}

/// Counts mentions per article and articles per firm. Firms listed in
/// `registry` but never mentioned appear with a zero count.
pub fn mention_histogram<'a>(
    store: &NewsStore,
    registry: Option<impl IntoIterator<Item = &'a str>>,
) -> MentionHistogram {
    let mut h = MentionHistogram::default();
    if let Some(firms) = registry {
        for f in firms {
            h.articles_per_firm.insert(f.to_string(), 0);
        }
    }
    for ev in store.events() {
        *h.mentions_per_article.entry(ev.mentions.len()).or_default() += 1;
        for m in &ev.mentions {
            *h.articles_per_firm.entry(m.clone()).or_default() += 1;
        }
    }
    h
}
