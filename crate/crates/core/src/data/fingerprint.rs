use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{DataPoint, Dataset, Value};

const MISSING: u8 = 0x00;
const TAG_REAL: u8 = 0x01;
const TAG_TEXT: u8 = 0x02;
const ESCAPE: u8 = 0x1B;
const SEPARATOR: u8 = 0x1F;

/// Content fingerprint of a row's features (the target is not part of it).
///
/// Equality compares the retained canonical bytes as well as the digest, so
/// two fingerprints are equal exactly when the canonical encodings are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub digest: u128,
    pub canonical: Vec<u8>,
}

impl Fingerprint {
    pub fn hex(&self) -> String {
        format!("{:032x}", self.digest)
    }
}

fn render_real(v: f64, rounding: Option<u32>) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    match rounding {
        None => format!("{v}"),
        Some(places) => {
            let s = format!("{v:.prec$}", prec = places as usize);
            // rounding can produce "-0.000"
            match s.strip_prefix('-') {
                Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
                _ => s,
            }
        }
    }
}

fn push_escaped(out: &mut Vec<u8>, bytes: &[u8]) {
    for &b in bytes {
        if b == SEPARATOR || b == ESCAPE {
            out.push(ESCAPE);
        }
        out.push(b);
    }
}

/// Canonical byte encoding of a feature vector.
///
/// Reals use the shortest round-trip decimal rendering (or a fixed number of
/// decimal places when `rounding` is set) with `-0.0` folded into `0.0`; text
/// is byte-exact. Values are joined by a reserved separator byte.
pub fn canonical_bytes(features: &[Value], rounding: Option<u32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(features.len() * 8);
    for (i, value) in features.iter().enumerate() {
        if i > 0 {
            out.push(SEPARATOR);
        }
        match value {
            Value::Missing => out.push(MISSING),
            Value::Real(v) => {
                out.push(TAG_REAL);
                out.extend_from_slice(render_real(*v, rounding).as_bytes());
            }
            Value::Text(s) => {
                out.push(TAG_TEXT);
                push_escaped(&mut out, s.as_bytes());
            }
        }
    }
    out
}

pub fn fingerprint_row(point: &DataPoint, rounding: Option<u32>) -> Fingerprint {
    fingerprint_values(&point.features, rounding)
}

pub(crate) fn fingerprint_values(features: &[Value], rounding: Option<u32>) -> Fingerprint {
    let canonical = canonical_bytes(features, rounding);
    let hash = Sha256::digest(&canonical);
    let mut head = [0u8; 16];
    head.copy_from_slice(&hash[..16]);
    Fingerprint {
        digest: u128::from_be_bytes(head),
        canonical,
    }
}

/// Partitions all rows into classes of identical canonical features.
///
/// Rows are bucketed by digest and then confirmed by full byte comparison,
/// so a digest collision can never merge distinct rows. Every row appears in
/// exactly one group; groups are ordered by their smallest row id and each
/// group lists ids ascending.
pub fn group_identical_rows(
    dataset: &Dataset,
    rounding: Option<u32>,
) -> Vec<(Fingerprint, Vec<usize>)> {
    let mut buckets: HashMap<u128, Vec<usize>> = HashMap::new();
    let mut groups: Vec<(Fingerprint, Vec<usize>)> = Vec::new();
    for row in dataset.rows() {
        let fp = fingerprint_row(row, rounding);
        let candidates = buckets.entry(fp.digest).or_default();
        match candidates
            .iter()
            .copied()
            .find(|&g| groups[g].0.canonical == fp.canonical)
        {
            Some(g) => groups[g].1.push(row.row_id),
            None => {
                candidates.push(groups.len());
                groups.push((fp, vec![row.row_id]));
            }
        }
    }
    groups
}

/// Maximal groups (size >= 2) of rows sharing identical canonical features.
pub fn duplicate_census(dataset: &Dataset, rounding: Option<u32>) -> Vec<Vec<usize>> {
    group_identical_rows(dataset, rounding)
        .into_iter()
        .map(|(_, rows)| rows)
        .filter(|rows| rows.len() >= 2)
        .collect()
}
