//! Transaction records, CSV ingestion, and the restaurant/cardholder indexes.
//!
//! File format (UTF-8, comma separated, header required):
//!
//! ```text
//! merchant_id,merchant_name,zip5,timestamp,cardholder_id,auth_amount_cents,settle_amount_cents
//! ```
//!
//! Timestamps are merchant-local `YYYY-MM-DDTHH:MM`. Amounts are integer cents.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = [
    "merchant_id",
    "merchant_name",
    "zip5",
    "timestamp",
    "cardholder_id",
    "auth_amount_cents",
    "settle_amount_cents",
];

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// A five-digit US ZIP code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Zip5([u8; 5]);

impl Zip5 {
    pub fn digits(&self) -> [u8; 5] {
        self.0
    }

    pub fn from_digits(digits: [u8; 5]) -> Option<Self> {
        digits.iter().all(|d| *d < 10).then_some(Zip5(digits))
    }
}

impl FromStr for Zip5 {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() != 5 || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(format!("bad zip {s:?}"));
        }
        let mut digits = [0u8; 5];
        for (d, b) in digits.iter_mut().zip(bytes) {
            *d = b - b'0';
        }
        Ok(Zip5(digits))
    }
}

impl TryFrom<String> for Zip5 {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Zip5> for String {
    fn from(z: Zip5) -> String {
        z.to_string()
    }
}

impl fmt::Display for Zip5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// One card payment at a restaurant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub merchant_id: String,
    pub merchant_name: String,
    pub zip5: Zip5,
    pub timestamp: NaiveDateTime,
    pub cardholder_id: String,
    pub auth_cents: u64,
    pub settle_cents: u64,
}

impl Transaction {
    /// Settlement minus authorization. Ingest guarantees this is nonnegative.
    pub fn tip_cents(&self) -> u64 {
        self.settle_cents.saturating_sub(self.auth_cents)
    }

    fn to_record(&self) -> [String; 7] {
        [
            self.merchant_id.clone(),
            self.merchant_name.clone(),
            self.zip5.to_string(),
            self.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            self.cardholder_id.clone(),
            self.auth_cents.to_string(),
            self.settle_cents.to_string(),
        ]
    }
}

/// A row that failed validation during lenient ingest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// The first malformed row aborts ingestion.
    Strict,
    /// Malformed rows are collected in the reject report.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct Ingest {
    pub transactions: Vec<Transaction>,
    pub rejects: Vec<Reject>,
}

impl Ingest {
    /// Reject report: one `line_no<TAB>reason` per rejected row.
    pub fn reject_report(&self) -> String {
        let mut out = String::new();
        for r in &self.rejects {
            out.push_str(&format!("{}\t{}\n", r.line, r.reason));
        }
        out
    }
}

fn validate(fields: &csv::StringRecord) -> std::result::Result<Transaction, String> {
    if fields.len() != HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            HEADER.len(),
            fields.len()
        ));
    }
    let merchant_id = fields[0].trim();
    if merchant_id.is_empty() {
        return Err("empty merchant_id".into());
    }
    let zip5: Zip5 = fields[2].trim().parse()?;
    let timestamp = NaiveDateTime::parse_from_str(fields[3].trim(), TIMESTAMP_FORMAT)
        .map_err(|_| format!("bad timestamp {:?}", &fields[3]))?;
    let cardholder_id = fields[4].trim();
    if cardholder_id.is_empty() {
        return Err("empty cardholder_id".into());
    }
    let auth_cents: u64 = fields[5]
        .trim()
        .parse()
        .map_err(|_| format!("bad auth amount {:?}", &fields[5]))?;
    let settle_cents: u64 = fields[6]
        .trim()
        .parse()
        .map_err(|_| format!("bad settle amount {:?}", &fields[6]))?;
    if settle_cents < auth_cents {
        return Err("negative tip".into());
    }
    Ok(Transaction {
        merchant_id: merchant_id.to_string(),
        merchant_name: fields[1].to_string(),
        zip5,
        timestamp,
        cardholder_id: cardholder_id.to_string(),
        auth_cents,
        settle_cents,
    })
}

/// Parse transactions from any reader. Rows come back in input order.
pub fn read_transactions<R: Read>(reader: R, mode: IngestMode) -> Result<Ingest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::data(format!("bad header: {e}")))?
        .clone();
    if header.iter().map(str::trim).ne(HEADER.iter().copied()) {
        return Err(Error::data(format!(
            "bad header: expected `{}`",
            HEADER.join(",")
        )));
    }

    let mut out = Ingest::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        let outcome = match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                validate(&record).map_err(|reason| (line, reason))
            }
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                Err((line, format!("unreadable row: {e}")))
            }
        };
        match outcome {
            Ok(t) => out.transactions.push(t),
            Err((line, reason)) => match mode {
                IngestMode::Strict => return Err(Error::Malformed { line, reason }),
                IngestMode::Lenient => out.rejects.push(Reject { line, reason }),
            },
        }
    }
    Ok(out)
}

pub fn parse_transactions(path: &Path, mode: IngestMode) -> Result<Ingest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_transactions(std::io::BufReader::new(file), mode)
}

/// Write transactions in the canonical file form.
pub fn write_transactions<W: Write>(writer: W, txns: &[Transaction]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let io_err = |e: csv::Error| Error::data(format!("csv write: {e}"));
    wtr.write_record(HEADER).map_err(io_err)?;
    for t in txns {
        wtr.write_record(t.to_record()).map_err(io_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::data(format!("csv flush: {e}")))?;
    Ok(())
}

pub fn save_transactions(path: &Path, txns: &[Transaction]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_transactions(std::io::BufWriter::new(file), txns)
}

/// Canonical single-row serialization (no header, no trailing newline).
pub fn canonical_row(t: &Transaction) -> String {
    let mut buf = Vec::new();
    {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        wtr.write_record(t.to_record()).expect("in-memory write");
        wtr.flush().expect("in-memory flush");
    }
    let mut s = String::from_utf8(buf).expect("utf-8 fields");
    s.pop();
    s
}

/// Drop every merchant whose name appears under at least `min_zips` distinct
/// ZIP codes. Returns the kept transactions and the excluded names.
pub fn exclude_chains(txns: Vec<Transaction>, min_zips: usize) -> (Vec<Transaction>, Vec<String>) {
    let mut zips: BTreeMap<&str, BTreeSet<Zip5>> = BTreeMap::new();
    for t in &txns {
        zips.entry(t.merchant_name.as_str())
            .or_default()
            .insert(t.zip5);
    }
    let chains: BTreeSet<String> = zips
        .into_iter()
        .filter(|(_, z)| z.len() >= min_zips)
        .map(|(n, _)| n.to_string())
        .collect();
    let kept = txns
        .into_iter()
        .filter(|t| !chains.contains(&t.merchant_name))
        .collect();
    (kept, chains.into_iter().collect())
}

#[derive(Debug, Clone)]
pub struct RestaurantEntry {
    pub id: String,
    pub name: String,
    pub zip5: Zip5,
    /// Positions into [`TxnIndex::transactions`], chronological.
    pub txns: Vec<usize>,
}

/// Restaurant buckets plus the dual cardholder index, both with a total,
/// input-order independent ordering.
#[derive(Debug, Clone, Default)]
pub struct TxnIndex {
    transactions: Vec<Transaction>,
    restaurants: BTreeMap<String, RestaurantEntry>,
    cardholders: BTreeMap<String, Vec<usize>>,
}

fn restaurant_order(a: &Transaction, b: &Transaction) -> Ordering {
    a.timestamp
        .cmp(&b.timestamp)
        .then_with(|| a.cardholder_id.cmp(&b.cardholder_id))
        .then_with(|| a.auth_cents.cmp(&b.auth_cents))
        .then_with(|| a.settle_cents.cmp(&b.settle_cents))
        .then_with(|| a.merchant_name.cmp(&b.merchant_name))
        .then_with(|| a.zip5.cmp(&b.zip5))
}

fn cardholder_order(a: &Transaction, b: &Transaction) -> Ordering {
    a.timestamp
        .cmp(&b.timestamp)
        .then_with(|| a.merchant_id.cmp(&b.merchant_id))
        .then_with(|| a.auth_cents.cmp(&b.auth_cents))
        .then_with(|| a.settle_cents.cmp(&b.settle_cents))
        .then_with(|| a.merchant_name.cmp(&b.merchant_name))
        .then_with(|| a.zip5.cmp(&b.zip5))
}

pub fn build_index(txns: Vec<Transaction>) -> TxnIndex {
    let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut cardholders: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, t) in txns.iter().enumerate() {
        buckets.entry(t.merchant_id.clone()).or_default().push(i);
        cardholders.entry(t.cardholder_id.clone()).or_default().push(i);
    }
    let restaurants = buckets
        .into_iter()
        .map(|(id, mut idx)| {
            idx.sort_by(|&a, &b| restaurant_order(&txns[a], &txns[b]));
            let first = &txns[idx[0]];
            let entry = RestaurantEntry {
                id: id.clone(),
                name: first.merchant_name.clone(),
                zip5: first.zip5,
                txns: idx,
            };
            (id, entry)
        })
        .collect();
    for idx in cardholders.values_mut() {
        idx.sort_by(|&a, &b| cardholder_order(&txns[a], &txns[b]));
    }
    TxnIndex {
        transactions: txns,
        restaurants,
        cardholders,
    }
}

impl TxnIndex {
    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn is_empty(&self) -> bool {
        self.restaurants.is_empty()
    }

    pub fn n_restaurants(&self) -> usize {
        self.restaurants.len()
    }

    /// Restaurants in ascending id order.
    pub fn restaurants(&self) -> impl Iterator<Item = &RestaurantEntry> {
        self.restaurants.values()
    }

    pub fn restaurant(&self, id: &str) -> Option<&RestaurantEntry> {
        self.restaurants.get(id)
    }

    pub fn restaurant_txns<'a>(
        &'a self,
        entry: &'a RestaurantEntry,
    ) -> impl Iterator<Item = &'a Transaction> + 'a {
        entry.txns.iter().map(move |&i| &self.transactions[i])
    }

    /// Cardholders in ascending id order with their chronological transactions.
    pub fn cardholders(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.cardholders.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn cardholder_txns(&self, id: &str) -> Option<&[usize]> {
        self.cardholders.get(id).map(Vec::as_slice)
    }

    /// Number of distinct restaurants each cardholder visits anywhere.
    pub fn cardholder_tallies(&self) -> BTreeMap<&str, usize> {
        self.cardholders
            .iter()
            .map(|(c, idx)| {
                let distinct: BTreeSet<&str> = idx
                    .iter()
                    .map(|&i| self.transactions[i].merchant_id.as_str())
                    .collect();
                (c.as_str(), distinct.len())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).unwrap()
    }

    fn txn(m: &str, c: &str, t: &str, auth: u64, settle: u64) -> Transaction {
        Transaction {
            merchant_id: m.into(),
            merchant_name: format!("{m} KITCHEN"),
            zip5: "90210".parse().unwrap(),
            timestamp: ts(t),
            cardholder_id: c.into(),
            auth_cents: auth,
            settle_cents: settle,
        }
    }

    const GOOD: &str = "merchant_id,merchant_name,zip5,timestamp,cardholder_id,auth_amount_cents,settle_amount_cents
R1,\"Peking Wok #2, LLC\",02139,2024-03-01T12:30,C1,1500,1800
R1,\"Peking Wok #2, LLC\",02139,2024-03-01T13:00,C2,2000,2000
R2,Joe's Place,90210,2024-03-02T20:15,C1,4200,5000
";

    #[test]
    fn well_formed_file_ingests_every_row() {
        let ing = read_transactions(GOOD.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(ing.transactions.len(), 3);
        assert!(ing.rejects.is_empty());
        assert_eq!(ing.transactions[0].merchant_name, "Peking Wok #2, LLC");
        assert_eq!(ing.transactions[0].tip_cents(), 300);
    }

    #[test]
    fn negative_tip_is_rejected() {
        let data = format!("{}R3,X,12345,2024-03-02T20:15,C1,4200,4000\n", GOOD);
        let ing = read_transactions(data.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(ing.transactions.len(), 3);
        assert_eq!(
            ing.rejects,
            vec![Reject {
                line: 5,
                reason: "negative tip".into()
            }]
        );
        assert_eq!(ing.reject_report(), "5\tnegative tip\n");

        let err = read_transactions(data.as_bytes(), IngestMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 5, ref reason } if reason == "negative tip"));
    }

    #[test]
    fn bad_header_is_an_error() {
        let err = read_transactions("a,b,c\n1,2,3\n".as_bytes(), IngestMode::Lenient).unwrap_err();
        assert!(err.to_string().contains("bad header"));
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = parse_transactions(Path::new("/nonexistent/tx.csv"), IngestMode::Lenient);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn malformed_fields_are_named() {
        let data = "merchant_id,merchant_name,zip5,timestamp,cardholder_id,auth_amount_cents,settle_amount_cents
R1,A,1234,2024-03-01T12:30,C1,1,1
R1,A,12345,2024-03-01 12:30,C1,1,1
R1,A,12345,2024-03-01T12:30,C1,-5,1
R1,A,12345
";
        let ing = read_transactions(data.as_bytes(), IngestMode::Lenient).unwrap();
        let reasons: Vec<_> = ing.rejects.iter().map(|r| (r.line, r.reason.as_str())).collect();
        assert_eq!(reasons[0], (2, "bad zip \"1234\""));
        assert!(reasons[1].1.starts_with("bad timestamp"));
        assert!(reasons[2].1.starts_with("bad auth amount"));
        assert_eq!(reasons[3], (5, "expected 7 fields, found 3"));
    }

    #[test]
    fn canonical_rows_round_trip() {
        let ing = read_transactions(GOOD.as_bytes(), IngestMode::Strict).unwrap();
        let mut buf = Vec::new();
        write_transactions(&mut buf, &ing.transactions).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), GOOD);
        assert_eq!(
            canonical_row(&ing.transactions[0]),
            "R1,\"Peking Wok #2, LLC\",02139,2024-03-01T12:30,C1,1500,1800"
        );
    }

    #[test]
    fn empty_input_gives_empty_index() {
        let idx = build_index(Vec::new());
        assert!(idx.is_empty());
        assert_eq!(idx.cardholders().count(), 0);
    }

    #[test]
    fn bucket_order_is_chronological() {
        let t1 = txn("R1", "C1", "2024-03-02T10:00", 100, 100);
        let t2 = txn("R1", "C2", "2024-03-01T10:00", 100, 100);
        let idx = build_index(vec![t1.clone(), t2.clone()]);
        let r = idx.restaurant("R1").unwrap();
        let got: Vec<_> = idx.restaurant_txns(r).cloned().collect();
        assert_eq!(got, vec![t2, t1]);
    }

    #[test]
    fn ties_break_on_cardholder_then_amount() {
        let a = txn("R1", "C2", "2024-03-01T10:00", 100, 100);
        let b = txn("R1", "C1", "2024-03-01T10:00", 300, 300);
        let c = txn("R1", "C1", "2024-03-01T10:00", 200, 200);
        let idx = build_index(vec![a.clone(), b.clone(), c.clone()]);
        let r = idx.restaurant("R1").unwrap();
        let got: Vec<_> = idx.restaurant_txns(r).cloned().collect();
        assert_eq!(got, vec![c, b, a]);
    }

    #[test]
    fn cardholder_index_and_tallies() {
        let idx = build_index(vec![
            txn("R1", "C1", "2024-03-01T10:00", 1, 1),
            txn("R2", "C1", "2024-03-02T10:00", 1, 1),
            txn("R1", "C1", "2024-03-03T10:00", 1, 1),
            txn("R1", "C2", "2024-03-03T10:00", 1, 1),
        ]);
        let c1: Vec<_> = idx
            .cardholder_txns("C1")
            .unwrap()
            .iter()
            .map(|&i| idx.transactions()[i].merchant_id.as_str())
            .collect();
        assert_eq!(c1, ["R1", "R2", "R1"]);
        let tallies = idx.cardholder_tallies();
        assert_eq!(tallies["C1"], 2);
        assert_eq!(tallies["C2"], 1);
    }

    #[test]
    fn chain_exclusion_drops_wide_names() {
        let mut txns = Vec::new();
        for z in 0..3 {
            let mut t = txn(&format!("M{z}"), "C1", "2024-03-01T10:00", 1, 1);
            t.merchant_name = "BURGER BARN".into();
            t.zip5 = format!("1000{z}").parse().unwrap();
            txns.push(t);
        }
        txns.push(txn("R9", "C1", "2024-03-01T10:00", 1, 1));
        let (kept, chains) = exclude_chains(txns.clone(), 3);
        assert_eq!(chains, vec!["BURGER BARN".to_string()]);
        assert_eq!(kept.len(), 1);
        let (kept, chains) = exclude_chains(txns, 4);
        assert!(chains.is_empty());
        assert_eq!(kept.len(), 4);
    }
}
