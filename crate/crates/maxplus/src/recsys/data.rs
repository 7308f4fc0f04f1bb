//! MovieLens ratings ingestion.
//!
//! Reads the two distributed file layouts: tab-separated `u.data`
//! (`user\titem\trating\ttimestamp`) and `::`-separated `ratings.dat`
//! (`user::item::rating::timestamp`). External ids are mapped to contiguous
//! 0-based indices in order of first appearance.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One rating record, with external ids as distributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Rating {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: f64,
    pub timestamp: i64,
}

/// File layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Ml100k,
    Ml1m,
}

impl DatasetFormat {
    pub fn name(self) -> &'static str {
        match self {
            DatasetFormat::Ml100k => "ml100k",
            DatasetFormat::Ml1m => "ml1m",
        }
    }

    fn separator(self) -> &'static str {
        match self {
            DatasetFormat::Ml100k => "\t",
            DatasetFormat::Ml1m => "::",
        }
    }

    /// Documented totals (records, users, items) of the distributed archive;
    /// items is `None` where the official count is approximate.
    fn expected_totals(self) -> (usize, usize, Option<usize>) {
        match self {
            DatasetFormat::Ml100k => (100_000, 943, Some(1682)),
            DatasetFormat::Ml1m => (1_000_209, 6040, None),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml100k" | "ml-100k" | "100k" => Ok(DatasetFormat::Ml100k),
            "ml1m" | "ml-1m" | "1m" => Ok(DatasetFormat::Ml1m),
            other => Err(Error::invalid(format!(
                "unknown dataset format {other:?} (expected ml100k or ml1m)"
            ))),
        }
    }
}

/// A ratings table with contiguous user/item index maps.
#[derive(Debug, Clone, Default)]
pub struct RatingsDataset {
    /// Records in file order, duplicates of a (user, item) pair removed
    /// (first occurrence wins).
    pub records: Vec<Rating>,
    pub num_users: usize,
    pub num_items: usize,
    /// Internal index -> external id.
    pub user_ids: Vec<u32>,
    pub item_ids: Vec<u32>,
    user_index: HashMap<u32, usize>,
    item_index: HashMap<u32, usize>,
    /// Non-fatal ingestion findings (count mismatches, dropped duplicates).
    pub warnings: Vec<String>,
}

impl RatingsDataset {
    pub fn user_index(&self, external: u32) -> Option<usize> {
        self.user_index.get(&external).copied()
    }

    pub fn item_index(&self, external: u32) -> Option<usize> {
        self.item_index.get(&external).copied()
    }

    fn intern_user(&mut self, external: u32) -> usize {
        *self.user_index.entry(external).or_insert_with(|| {
            self.user_ids.push(external);
            self.user_ids.len() - 1
        })
    }

    fn intern_item(&mut self, external: u32) -> usize {
        *self.item_index.entry(external).or_insert_with(|| {
            self.item_ids.push(external);
            self.item_ids.len() - 1
        })
    }
}

/// Parse a ratings stream in the given format.
pub fn read_movielens(r: impl Read, format: DatasetFormat) -> Result<RatingsDataset> {
    let reader = BufReader::new(r);
    let sep = format.separator();
    let mut ds = RatingsDataset::default();
    let mut seen = std::collections::HashSet::new();
    let mut duplicates = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split(sep).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno + 1,
                format!("expected 4 {sep:?}-separated fields, found {}", fields.len()),
            ));
        }
        let user_id: u32 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad user id {:?}", fields[0])))?;
        let item_id: u32 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad item id {:?}", fields[1])))?;
        let rating: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad rating {:?}", fields[2])))?;
        let timestamp: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad timestamp {:?}", fields[3])))?;

        if !seen.insert((user_id, item_id)) {
            duplicates += 1;
            continue;
        }
        ds.intern_user(user_id);
        ds.intern_item(item_id);
        ds.records.push(Rating {
            user_id,
            item_id,
            rating,
            timestamp,
        });
    }

    ds.num_users = ds.user_ids.len();
    ds.num_items = ds.item_ids.len();
    if duplicates > 0 {
        ds.warnings
            .push(format!("dropped {duplicates} duplicate (user, item) pairs"));
    }
    let (exp_records, exp_users, exp_items) = format.expected_totals();
    if !ds.records.is_empty() {
        if ds.records.len() != exp_records {
            ds.warnings.push(format!(
                "{format}: expected {exp_records} records, found {}",
                ds.records.len()
            ));
        }
        if ds.num_users != exp_users {
            ds.warnings.push(format!(
                "{format}: expected {exp_users} users, found {}",
                ds.num_users
            ));
        }
        if let Some(exp) = exp_items {
            if ds.num_items != exp {
                ds.warnings.push(format!(
                    "{format}: expected {exp} items, found {}",
                    ds.num_items
                ));
            }
        }
    }
    Ok(ds)
}

/// Load a ratings file (`u.data` for ml100k, `ratings.dat` for ml1m).
pub fn load_movielens(path: impl AsRef<Path>, format: DatasetFormat) -> Result<RatingsDataset> {
    read_movielens(std::fs::File::open(path)?, format)
}

/// Write records back in the given format (external ids, file order).
pub fn write_movielens(
    ds: &RatingsDataset,
    mut w: impl Write,
    format: DatasetFormat,
) -> Result<()> {
    let sep = format.separator();
    for rec in &ds.records {
        writeln!(
            w,
            "{}{sep}{}{sep}{}{sep}{}",
            rec.user_id, rec.item_id, rec.rating, rec.timestamp
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ml100k_lines() {
        let text = "1\t242\t3\t881250949\n1\t302\t3\t891717742\n2\t242\t5\t881250950\n";
        let ds = read_movielens(text.as_bytes(), DatasetFormat::Ml100k).unwrap();
        assert_eq!(ds.records.len(), 3);
        assert_eq!(ds.num_users, 2);
        assert_eq!(ds.num_items, 2);
        assert_eq!(ds.user_index(1), Some(0));
        assert_eq!(ds.item_index(302), Some(1));
        // Tiny file: totals differ from the documented dataset, warned only.
        assert!(!ds.warnings.is_empty());
    }

    #[test]
    fn parses_ml1m_lines() {
        let text = "1::1193::5::978300760\n";
        let ds = read_movielens(text.as_bytes(), DatasetFormat::Ml1m).unwrap();
        assert_eq!(
            ds.records[0],
            Rating {
                user_id: 1,
                item_id: 1193,
                rating: 5.0,
                timestamp: 978300760
            }
        );
    }

    #[test]
    fn empty_input_gives_empty_dataset() {
        let ds = read_movielens("".as_bytes(), DatasetFormat::Ml100k).unwrap();
        assert!(ds.records.is_empty());
        assert_eq!(ds.num_users, 0);
        assert_eq!(ds.num_items, 0);
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = "1\t242\t3\t881250949\n1\t302\tx\t891717742\n";
        match read_movielens(text.as_bytes(), DatasetFormat::Ml100k) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
    }

    #[test]
    fn duplicates_dropped_with_warning() {
        let text = "1\t2\t3\t10\n1\t2\t4\t11\n";
        let ds = read_movielens(text.as_bytes(), DatasetFormat::Ml100k).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].rating, 3.0);
        assert!(ds.warnings.iter().any(|w| w.contains("duplicate")));
    }

    #[test]
    fn round_trip_preserves_records() {
        let text = "7::11::4::100\n7::12::5::101\n8::11::1::102\n";
        let ds = read_movielens(text.as_bytes(), DatasetFormat::Ml1m).unwrap();
        let mut buf = Vec::new();
        write_movielens(&ds, &mut buf, DatasetFormat::Ml1m).unwrap();
        let back = read_movielens(buf.as_slice(), DatasetFormat::Ml1m).unwrap();
        assert_eq!(ds.records, back.records);
    }
}
