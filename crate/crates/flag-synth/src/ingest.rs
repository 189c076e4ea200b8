//! Parsing interaction logs and attribute tables, and turning them into
//! profile-size distributions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read};

use crate::distribution::ProfileSizeDistribution;
use crate::error::{Error, Result};

/// A parsed interaction log: `(entity, counterpart)` pairs in input order.
///
/// Which column is "entity" and which "counterpart" is the parser's
/// convention (users on the left for the `::`-delimited ratings format);
/// [`Pivot`] decides at profile-building time whose activity is counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDataset {
    pairs: Vec<(String, String)>,
}

/// Which side of an interaction owns the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    /// Count interactions per left-hand entity (e.g. ratings per user).
    User,
    /// Count interactions per right-hand entity (e.g. ratings per item).
    Item,
}

impl InteractionDataset {
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Self {
        InteractionDataset { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Collapse repeated `(entity, counterpart)` pairs to one interaction,
    /// keeping first-occurrence order.
    pub fn dedup(&mut self) {
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        self.pairs.retain(|pair| seen.insert(pair.clone()));
    }
}

/// A binary attribute per entity (`true` = flagged).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeTable {
    entries: BTreeMap<String, bool>,
    attribute: String,
}

impl AttributeTable {
    pub fn new<I>(entries: I, attribute: &str) -> Self
    where
        I: IntoIterator<Item = (String, bool)>,
    {
        AttributeTable { entries: entries.into_iter().collect(), attribute: attribute.to_string() }
    }

    /// Human-readable name of the flagged condition (e.g. `gender=F`).
    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn get(&self, id: &str) -> Option<bool> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flagged_count(&self) -> u64 {
        self.entries.values().filter(|&&f| f).count() as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> + '_ {
        self.entries.iter().map(|(id, &f)| (id.as_str(), f))
    }
}

/// Feed non-empty lines to `f` with 1-based line numbers. Lines are
/// decoded lossily, so stray non-UTF-8 bytes (common in older catalog
/// files) degrade to replacement characters instead of failing the parse.
fn for_each_line<R: BufRead>(
    mut reader: R,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.is_empty() {
            continue;
        }
        f(line_no, &String::from_utf8_lossy(&buf))?;
    }
}

fn split_fixed<'a>(line: &'a str, n: usize, line_no: usize, what: &str) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split("::").collect();
    if parts.len() != n {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {n} `::`-separated fields in a {what} row, got {}", parts.len()),
        });
    }
    Ok(parts)
}

/// Parse a `::`-delimited ratings log (`UserID::MovieID::Rating::Timestamp`).
pub fn parse_movielens_ratings<R: BufRead>(reader: R) -> Result<InteractionDataset> {
    let mut pairs = Vec::new();
    for_each_line(reader, |line_no, line| {
        let parts = split_fixed(line, 4, line_no, "ratings")?;
        let (user, item) = (parts[0], parts[1]);
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty user or item id".into() });
        }
        pairs.push((user.to_string(), item.to_string()));
        Ok(())
    })?;
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(InteractionDataset { pairs })
}

/// Parse a `::`-delimited user table
/// (`UserID::Gender::Age::Occupation::Zip`); the flag marks `F` rows.
pub fn parse_movielens_users<R: BufRead>(reader: R) -> Result<AttributeTable> {
    let mut entries = BTreeMap::new();
    for_each_line(reader, |line_no, line| {
        let parts = split_fixed(line, 5, line_no, "users")?;
        let id = parts[0];
        if id.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty user id".into() });
        }
        let flag = match parts[1] {
            "F" => true,
            "M" => false,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("gender must be M or F, got {other:?}"),
                })
            }
        };
        if entries.insert(id.to_string(), flag).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate user id {id:?}"),
            });
        }
        Ok(())
    })?;
    Ok(AttributeTable { entries, attribute: "gender=F".into() })
}

/// Parse a `::`-delimited movie table (`MovieID::Title::Genre|Genre|...`);
/// the flag marks rows whose genre list contains `genre` exactly.
pub fn parse_movielens_movies<R: BufRead>(reader: R, genre: &str) -> Result<AttributeTable> {
    let mut entries = BTreeMap::new();
    for_each_line(reader, |line_no, line| {
        let parts = split_fixed(line, 3, line_no, "movies")?;
        let id = parts[0];
        if id.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty movie id".into() });
        }
        let flag = parts[2].split('|').any(|g| g == genre);
        if entries.insert(id.to_string(), flag).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate movie id {id:?}"),
            });
        }
        Ok(())
    })?;
    Ok(AttributeTable { entries, attribute: format!("genre={genre}") })
}

/// Column layout of a delimited interaction log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvFormat {
    pub delimiter: u8,
    /// 0-based column holding the profile-owning entity.
    pub entity_col: usize,
    /// 0-based column holding the counterpart.
    pub counterpart_col: usize,
    pub has_header: bool,
}

impl Default for CsvFormat {
    fn default() -> Self {
        CsvFormat { delimiter: b',', entity_col: 0, counterpart_col: 1, has_header: true }
    }
}

/// Parse a delimited interaction log. Row numbers in errors are 1-based
/// data rows (the header, when present, is row 0).
pub fn parse_generic_interactions<R: Read>(
    reader: R,
    format: &CsvFormat,
) -> Result<InteractionDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(format.has_header)
        .flexible(true)
        .from_reader(reader);
    let mut pairs = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { line: row, message: e.to_string() })?;
        let field = |col: usize, role: &str| -> Result<&str> {
            let value = record.get(col).ok_or_else(|| Error::Parse {
                line: row,
                message: format!("no column {col} ({role}); row has {} fields", record.len()),
            })?;
            if value.is_empty() {
                return Err(Error::Parse { line: row, message: format!("empty {role} id") });
            }
            Ok(value)
        };
        let entity = field(format.entity_col, "entity")?;
        let counterpart = field(format.counterpart_col, "counterpart")?;
        pairs.push((entity.to_string(), counterpart.to_string()));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(InteractionDataset { pairs })
}

/// Parse a two-column attribute CSV (with header): entity id, then a flag.
/// Accepted flag spellings: `true`/`false`, `1`/`0`, `B`/`A` (the labels
/// this tool generates), case-insensitive. The attribute name is taken
/// from the header.
pub fn parse_attribute_csv<R: Read>(reader: R) -> Result<AttributeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let attribute = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 0, message: e.to_string() })?
        .get(1)
        .unwrap_or("flag")
        .to_string();
    let mut entries = BTreeMap::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { line: row, message: e.to_string() })?;
        let id = record
            .get(0)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::Parse { line: row, message: "empty entity id".into() })?;
        let raw = record
            .get(1)
            .ok_or_else(|| Error::Parse { line: row, message: "missing flag column".into() })?;
        let flag = match raw.to_ascii_lowercase().as_str() {
            "true" | "1" | "b" => true,
            "false" | "0" | "a" => false,
            other => {
                return Err(Error::Parse {
                    line: row,
                    message: format!("flag must be true/false, 1/0, or B/A, got {other:?}"),
                })
            }
        };
        if entries.insert(id.to_string(), flag).is_some() {
            return Err(Error::Parse { line: row, message: format!("duplicate entity id {id:?}") });
        }
    }
    Ok(AttributeTable { entries, attribute })
}

/// Serialize an attribute table as `entity_id,<attribute>` CSV with
/// `true`/`false` flags, rows ascending by entity id.
pub fn write_attribute_csv<W: std::io::Write>(table: &AttributeTable, mut w: W) -> Result<()> {
    writeln!(w, "entity_id,{}", table.attribute)?;
    for (id, flag) in &table.entries {
        writeln!(w, "{id},{flag}")?;
    }
    Ok(())
}

/// Count interactions per entity and build the size distribution.
///
/// Entities with more than `max_size` interactions are removed entirely
/// (not truncated): the cap is a population filter, not a clip.
pub fn build_profiles(
    dataset: &InteractionDataset,
    pivot: Pivot,
    max_size: Option<u32>,
) -> Result<ProfileSizeDistribution> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if max_size == Some(0) {
        return Err(Error::InvalidParameter("max size must be at least 1".into()));
    }
    let mut sizes: BTreeMap<&str, u64> = BTreeMap::new();
    for (user, item) in dataset.pairs() {
        let key = match pivot {
            Pivot::User => user,
            Pivot::Item => item,
        };
        *sizes.entry(key).or_insert(0) += 1;
    }
    let mut entity_sizes = Vec::with_capacity(sizes.len());
    for (id, size) in sizes {
        let size = u32::try_from(size).map_err(|_| {
            Error::InvalidParameter(format!("entity {id:?} has {size} interactions, beyond u32"))
        })?;
        if max_size.is_none_or(|cap| size <= cap) {
            entity_sizes.push((id.to_string(), size));
        }
    }
    ProfileSizeDistribution::from_entity_sizes(entity_sizes)
}
