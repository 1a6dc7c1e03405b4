//! Line-oriented certificate records.
//!
//! ```text
//! dslab-cert v1 <kind>
//! key value
//! key value
//! ```
//!
//! Keys may repeat; order is preserved. Rationals are written `num/den`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rat::{self, Rational};

pub const HEADER: &str = "dslab-cert v1";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self { kind: kind.to_string(), fields: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_rat(&mut self, key: &str, value: &Rational) -> &mut Self {
        self.push(key, rat::fmt(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fields.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("{} record lacks `{key}`", self.kind)))
    }

    pub fn rational(&self, key: &str) -> Result<Rational> {
        rat::parse(self.require(key)?)
    }

    pub fn biguint(&self, key: &str) -> Result<BigUint> {
        parse_biguint(self.require(key)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER} {}\n", self.kind);
        for (k, v) in &self.fields {
            let _ = writeln!(s, "{k} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty certificate".into()))?;
        let kind = header
            .strip_prefix(HEADER)
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .ok_or_else(|| Error::Parse(format!("bad certificate header {header:?}")))?;
        let mut rec = Record::new(kind);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            rec.fields.push((k.to_string(), v.to_string()));
        }
        Ok(rec)
    }
}

pub fn parse_biguint(s: &str) -> Result<BigUint> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a non-negative integer: {s:?}")))
}

/// One named pass/fail line of a verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), ok, detail: detail.into() }
    }
}

pub fn all_ok(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.ok)
}

/// Hex SHA-256 of a canonical input description.
pub fn content_hash(input: &str) -> String {
    hex::encode(Sha256::digest(input.as_bytes()))
}

/// Write through a temporary sibling file and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
