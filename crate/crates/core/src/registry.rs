//! Firm registry: listing market and sector of every firm.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::ingest::{self, IngestError, Ingested, RowRejection};

pub const FIRM_HEADER: [&str; 4] = ["firm_id", "market_id", "sector_code", "country"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmRecord {
    pub firm_id: String,
    /// Empty in the file means unknown.
    pub market_id: Option<String>,
    pub sector_code: Option<String>,
    pub country: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FirmRegistry {
    firms: BTreeMap<String, FirmRecord>,
}

impl FirmRegistry {
    pub fn from_records(records: impl IntoIterator<Item = FirmRecord>) -> Self {
        FirmRegistry {
            firms: records
                .into_iter()
                .map(|r| (r.firm_id.clone(), r))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Ingested<Self>, IngestError> {
        Self::from_reader(ingest::open(path)?, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, file: &str) -> Result<Ingested<Self>, IngestError> {
        let table = ingest::read_table(reader, file, &FIRM_HEADER)?;
        let mut firms = BTreeMap::new();
        let mut first_row = BTreeMap::new();
        let mut rejected = Vec::new();
        let opt = |s: &String| (!s.is_empty()).then(|| s.clone());
        for (row, f) in table.rows {
            if f.len() != FIRM_HEADER.len() {
                rejected.push(RowRejection {
                    row,
                    reason: format!("expected 4 columns, found {}", f.len()),
                });
                continue;
            }
            if f[0].is_empty() {
                rejected.push(RowRejection {
                    row,
                    reason: "empty firm_id".into(),
                });
                continue;
            }
            if let Some(first) = first_row.get(&f[0]) {
                rejected.push(RowRejection {
                    row,
                    reason: format!("duplicate firm {}; first seen on row {first}", f[0]),
                });
                continue;
            }
            first_row.insert(f[0].clone(), row);
            firms.insert(
                f[0].clone(),
                FirmRecord {
                    firm_id: f[0].clone(),
                    market_id: opt(&f[1]),
                    sector_code: opt(&f[2]),
                    country: opt(&f[3]),
                },
            );
        }
        Ok(Ingested {
            value: FirmRegistry { firms },
            rejected,
        })
    }

    pub fn get(&self, firm: &str) -> Option<&FirmRecord> {
        self.firms.get(firm)
    }

    pub fn contains(&self, firm: &str) -> bool {
        self.firms.contains_key(firm)
    }

    /// Firm ids in sorted order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.firms.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }
}
