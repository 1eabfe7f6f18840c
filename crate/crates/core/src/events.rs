//! BIP registry, named BIP sets and binary monthly event signals.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeseries::month_key;

pub const ALL_BIPS: &str = "All BIPs";
pub const ALL_ECONOMY: &str = "All Economy-Related BIPs";
pub const MAJOR_ECONOMY: &str = "Major Economy-Related BIPs";
pub const ECONOMY_EXCEPT_MAJOR: &str = "All Economy-Related BIPs (Except the major ones)";
pub const FISCAL_LIKE: &str = "Fiscal-Like BIPs";
pub const MONETARY_LIKE: &str = "Monetary-Like BIPs";
pub const PURELY_TOKENOMIC: &str = "Purely Tokenomic BIPs";

/// Sets used by the main causality matrices, in column order.
pub const CAUSALITY_SETS: [&str; 4] = [ALL_BIPS, ALL_ECONOMY, MAJOR_ECONOMY, ECONOMY_EXCEPT_MAJOR];
/// Policy-taxonomy sets, in column order.
pub const TAXONOMY_SETS: [&str; 3] = [FISCAL_LIKE, MONETARY_LIKE, PURELY_TOKENOMIC];

const SUPPLY_LIQUIDITY: &[u32] = &[9, 42, 100, 101, 102, 103, 104, 105, 106, 107, 109, 152, 331];
const TRANSACTIONS: &[u32] = &[
    11, 13, 16, 65, 66, 68, 78, 79, 112, 115, 116, 118, 125, 127, 129, 134, 146, 174, 322, 324,
    330, 352, 370, 373,
];
const FINANCIAL_INSTRUMENTS: &[u32] = &[197, 199, 300, 345];
const SECURITY_PRIVACY: &[u32] = &[30, 50, 53, 54, 151, 351];
const HD_WALLETS: &[u32] = &[32, 39, 43, 44, 49, 84, 88, 175];
const SEGWIT: &[u32] = &[91, 141, 148, 173];
const TAPROOT: &[u32] = &[326, 327, 341, 343, 371];
const SIMPLIFY_POPULARIZE: &[u32] = &[1, 21, 47, 61, 70, 72, 75, 111, 380];

/// The eight economy-related category lists with their registry tags.
pub const ECONOMY_CATEGORIES: [(&str, &[u32]); 8] = [
    ("supply-liquidity", SUPPLY_LIQUIDITY),
    ("transactions", TRANSACTIONS),
    ("financial-instruments", FINANCIAL_INSTRUMENTS),
    ("security-privacy", SECURITY_PRIVACY),
    ("hd-wallets", HD_WALLETS),
    ("segwit", SEGWIT),
    ("taproot", TAPROOT),
    ("simplify-popularize", SIMPLIFY_POPULARIZE),
];

/// The five major economy-related BIPs and their dates.
pub const MAJOR_BIPS: [(u32, (i32, u32, u32)); 5] = [
    (32, (2012, 2, 11)),
    (42, (2014, 4, 1)),
    (50, (2013, 3, 20)),
    (141, (2015, 12, 21)),
    (341, (2020, 1, 19)),
];

const FISCAL: &[u32] = &[78, 199];
const MONETARY: &[u32] = &[
    11, 13, 16, 30, 42, 53, 54, 65, 66, 68, 75, 100, 101, 102, 103, 104, 105, 106, 107, 109, 112,
    115, 118, 125, 127, 141, 146, 152, 173, 174, 197, 300, 331, 345, 370, 371, 373,
];
const TOKENOMIC: &[u32] = &[
    1, 9, 21, 32, 39, 44, 47, 61, 70, 72, 79, 88, 91, 111, 129, 148, 175, 322, 324, 327, 330, 341,
    343, 351, 352, 380,
];

const BUNDLED_REGISTRY: &str = include_str!("../data/bip_registry.csv");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BipRecord {
    pub number: u32,
    pub date: NaiveDate,
    pub kind: String,
    pub status: String,
    pub categories: BTreeSet<String>,
    /// Where the date came from, when the file records it.
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Registry {
    records: BTreeMap<u32, BipRecord>,
}

impl Registry {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, number: u32) -> Option<&BipRecord> {
        self.records.get(&number)
    }

    pub fn contains(&self, number: u32) -> bool {
        self.records.contains_key(&number)
    }

    /// Records in ascending BIP number.
    pub fn iter(&self) -> impl Iterator<Item = &BipRecord> {
        self.records.values()
    }

    pub fn numbers(&self) -> BTreeSet<u32> {
        self.records.keys().copied().collect()
    }

    /// Numbers carrying the given category tag.
    pub fn tagged(&self, tag: &str) -> BTreeSet<u32> {
        self.iter()
            .filter(|r| r.categories.contains(tag))
            .map(|r| r.number)
            .collect()
    }
}

/// The registry shipped with the crate.
pub fn bundled_registry() -> Registry {
    parse_registry(BUNDLED_REGISTRY, Path::new("bip_registry.csv"))
        .expect("bundled registry is well-formed")
}

/// SHA-256 of the bundled registry file.
pub fn bundled_registry_sha256() -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(BUNDLED_REGISTRY.as_bytes()))
}

pub fn load_registry(path: &Path) -> Result<Registry> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_registry(&text, path)
}

/// Parses registry CSV text. `source` is only used in error messages.
pub fn parse_registry(text: &str, source: &Path) -> Result<Registry> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line: line as usize,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let required = ["number", "date", "kind", "status", "categories"];
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name).ok_or_else(|| parse_err(1, format!("missing column `{name}`")))?;
    }
    let provenance_idx = col("provenance");

    let mut records = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<&str> {
            match row.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(parse_err(line, format!("missing `{name}` field"))),
            }
        };
        let number: u32 = field(idx[0], "number")?
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| parse_err(line, "BIP number must be a positive integer".into()))?;
        let date_text = field(idx[1], "date")?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("invalid date `{date_text}`: {e}")))?;
        let categories = row
            .get(idx[4])
            .unwrap_or("")
            .split('|')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        let record = BipRecord {
            number,
            date,
            kind: row.get(idx[2]).unwrap_or("").to_string(),
            status: row.get(idx[3]).unwrap_or("").to_string(),
            categories,
            provenance: provenance_idx
                .and_then(|i| row.get(i))
                .filter(|s| !s.is_empty())
                .map(String::from),
        };
        if records.insert(number, record).is_some() {
            return Err(Error::DuplicateBip(number));
        }
    }
    Ok(Registry { records })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BipSet {
    pub name: String,
    pub members: BTreeSet<u32>,
}

impl BipSet {
    pub fn new(name: impl Into<String>, members: impl IntoIterator<Item = u32>) -> Self {
        BipSet {
            name: name.into(),
            members: members.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn economy_related() -> BTreeSet<u32> {
    ECONOMY_CATEGORIES
        .iter()
        .flat_map(|(_, list)| list.iter().copied())
        .collect()
}

/// The seven named sets. Every referenced number must exist in `registry`.
pub fn builtin_sets(registry: &Registry) -> Result<Vec<BipSet>> {
    let economy = economy_related();
    let major: BTreeSet<u32> = MAJOR_BIPS.iter().map(|(n, _)| *n).collect();
    let sets = vec![
        BipSet::new(ALL_BIPS, registry.numbers()),
        BipSet::new(ALL_ECONOMY, economy.iter().copied()),
        BipSet::new(MAJOR_ECONOMY, major.iter().copied()),
        BipSet::new(ECONOMY_EXCEPT_MAJOR, economy.difference(&major).copied()),
        BipSet::new(FISCAL_LIKE, FISCAL.iter().copied()),
        BipSet::new(MONETARY_LIKE, MONETARY.iter().copied()),
        BipSet::new(PURELY_TOKENOMIC, TOKENOMIC.iter().copied()),
    ];
    let missing: BTreeSet<u32> = sets
        .iter()
        .flat_map(|s| s.members.iter().copied())
        .filter(|n| !registry.contains(*n))
        .collect();
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(u32::to_string).collect();
        return Err(Error::Integrity(format!(
            "registry is missing BIPs referenced by the built-in sets: {}",
            list.join(", ")
        )));
    }
    Ok(sets)
}

/// Looks a built-in set up by name.
pub fn find_set<'a>(sets: &'a [BipSet], name: &str) -> Option<&'a BipSet> {
    sets.iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventSignal {
    pub name: String,
    pub months: Vec<NaiveDate>,
    /// 1.0 in months with at least one member BIP, else 0.0.
    pub values: Vec<f64>,
    /// Members whose month falls outside the grid.
    pub ignored_outside_grid: usize,
}

impl EventSignal {
    pub fn ones(&self) -> usize {
        self.values.iter().filter(|v| **v == 1.0).count()
    }
}

/// Binary monthly signal of `set` on `grid`. Members missing from the
/// registry are counted as ignored.
pub fn build_signal(set: &BipSet, registry: &Registry, grid: &[NaiveDate]) -> EventSignal {
    let months: Vec<NaiveDate> = grid.iter().map(|d| month_key(*d)).collect();
    let position: BTreeMap<NaiveDate, usize> =
        months.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut values = vec![0.0; months.len()];
    let mut ignored = 0;
    for number in &set.members {
        match registry
            .get(*number)
            .and_then(|r| position.get(&month_key(r.date)))
        {
            Some(&i) => values[i] = 1.0,
            None => ignored += 1,
        }
    }
    EventSignal {
        name: set.name.clone(),
        months,
        values,
        ignored_outside_grid: ignored,
    }
}
