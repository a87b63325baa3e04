use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::stats::{
    deciles, hourly_capacity, Deciles, loyalty_deciles, party_features, revisit_deciles, select_k_aic, temporal_dists,
    tip_series, zip_feature, DEFAULT_K_MAX, MAX_PARTY,
};
use crate::txn::{RestaurantEntry, TxnIndex};

/// Block names and widths, in concatenation order.
pub const STAT_BLOCKS: [(&str, usize); 11] = [
    ("price_deciles", 9),
    ("tip_deciles", 9),
    ("capacity_deciles", 9),
    ("revisit_deciles", 9),
    ("loyalty_deciles", 9),
    ("dow_dist", 7),
    ("weekday_hour_dist", 24),
    ("weekend_hour_dist", 24),
    ("party_prop", 6),
    ("party_price", 6),
    ("zip_onehot", 50),
];

pub const STAT_DIM: usize = 162;

/// The eleven statistical blocks of one restaurant.
#[derive(Debug, Clone, PartialEq)]
pub struct StatFeatureBlock {
    pub price_deciles: [f64; 9],
    pub tip_deciles: [f64; 9],
    pub capacity_deciles: [f64; 9],
    pub revisit_deciles: [f64; 9],
    pub loyalty_deciles: [f64; 9],
    pub dow_dist: [f64; 7],
    pub weekday_hour_dist: [f64; 24],
    pub weekend_hour_dist: [f64; 24],
    pub party_prop: [f64; MAX_PARTY],
    pub party_price: [f64; MAX_PARTY],
    pub zip_onehot: [f64; 50],
    /// Mixture components chosen by AIC; 0 when there were no amounts.
    pub party_k: usize,
    /// Names of blocks computed from no qualifying transactions.
    pub flags: BTreeSet<String>,
}

impl Default for StatFeatureBlock {
    fn default() -> Self {
        StatFeatureBlock {
            price_deciles: [0.0; 9],
            tip_deciles: [0.0; 9],
            capacity_deciles: [0.0; 9],
            revisit_deciles: [0.0; 9],
            loyalty_deciles: [0.0; 9],
            dow_dist: [0.0; 7],
            weekday_hour_dist: [0.0; 24],
            weekend_hour_dist: [0.0; 24],
            party_prop: [0.0; MAX_PARTY],
            party_price: [0.0; MAX_PARTY],
            zip_onehot: [0.0; 50],
            party_k: 0,
            flags: BTreeSet::new(),
        }
    }
}

impl StatFeatureBlock {
    pub fn block(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "price_deciles" => &self.price_deciles,
            "tip_deciles" => &self.tip_deciles,
            "capacity_deciles" => &self.capacity_deciles,
            "revisit_deciles" => &self.revisit_deciles,
            "loyalty_deciles" => &self.loyalty_deciles,
            "dow_dist" => &self.dow_dist,
            "weekday_hour_dist" => &self.weekday_hour_dist,
            "weekend_hour_dist" => &self.weekend_hour_dist,
            "party_prop" => &self.party_prop,
            "party_price" => &self.party_price,
            "zip_onehot" => &self.zip_onehot,
            _ => return None,
        })
    }

    fn block_mut(&mut self, name: &str) -> &mut [f64] {
        match name {
            "price_deciles" => &mut self.price_deciles,
            "tip_deciles" => &mut self.tip_deciles,
            "capacity_deciles" => &mut self.capacity_deciles,
            "revisit_deciles" => &mut self.revisit_deciles,
            "loyalty_deciles" => &mut self.loyalty_deciles,
            "dow_dist" => &mut self.dow_dist,
            "weekday_hour_dist" => &mut self.weekday_hour_dist,
            "weekend_hour_dist" => &mut self.weekend_hour_dist,
            "party_prop" => &mut self.party_prop,
            "party_price" => &mut self.party_price,
            "zip_onehot" => &mut self.zip_onehot,
            other => unreachable!("unknown block {other}"),
        }
    }

    /// All blocks concatenated in [`STAT_BLOCKS`] order.
    pub fn to_vec(&self) -> Vec<f64> {
        STAT_BLOCKS
            .iter()
            .flat_map(|(name, _)| self.block(name).expect("known block").iter().copied())
            .collect()
    }

    /// Inverse of [`to_vec`](Self::to_vec).
    pub fn from_values(values: &[f64], party_k: usize, flags: BTreeSet<String>) -> Result<Self> {
        if values.len() != STAT_DIM {
            return Err(Error::data(format!("expected {STAT_DIM} values, found {}", values.len())));
        }
        let mut out = StatFeatureBlock {
            party_k,
            flags,
            ..Default::default()
        };
        let mut at = 0;
        for (name, width) in STAT_BLOCKS {
            out.block_mut(name).copy_from_slice(&values[at..at + width]);
            at += width;
        }
        Ok(out)
    }
}

/// Column names after `restaurant_id`, `party_k` and `flags`.
pub fn stat_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(STAT_DIM);
    for prefix in ["price", "tip", "capacity", "revisit", "loyalty"] {
        cols.extend((1..=9).map(|i| format!("{prefix}_d{i}")));
    }
    cols.extend(["mon", "tue", "wed", "thu", "fri", "sat", "sun"].map(|d| format!("dow_{d}")));
    cols.extend((0..24).map(|h| format!("weekday_h{h:02}")));
    cols.extend((0..24).map(|h| format!("weekend_h{h:02}")));
    cols.extend((1..=MAX_PARTY).map(|i| format!("party_prop_{i}")));
    cols.extend((1..=MAX_PARTY).map(|i| format!("party_price_{i}")));
    for pos in 0..5 {
        cols.extend((0..10).map(|d| format!("zip{pos}_{d}")));
    }
    cols
}

/// Statistical features of one restaurant. `tallies` is the global
/// distinct-restaurant count per cardholder; `seed` is the stage seed and
/// the mixture fit draws from a sub-seed keyed by restaurant id.
pub fn extract_restaurant(
    index: &TxnIndex,
    entry: &RestaurantEntry,
    tallies: &BTreeMap<&str, usize>,
    seed: u64,
) -> StatFeatureBlock {
    let txns: Vec<_> = index.restaurant_txns(entry).collect();
    let amounts: Vec<f64> = txns.iter().map(|t| t.auth_cents as f64).collect();
    let mut f = StatFeatureBlock {
        zip_onehot: zip_feature(&entry.zip5),
        ..Default::default()
    };

    let put = |f: &mut StatFeatureBlock, name: &str, d: Deciles| {
        f.block_mut(name).copy_from_slice(&d.values);
        if d.empty {
            f.flags.insert(name.to_string());
        }
    };
    put(&mut f, "price_deciles", deciles(&amounts));
    put(&mut f, "tip_deciles", deciles(&tip_series(txns.iter().copied())));
    put(&mut f, "capacity_deciles", deciles(&hourly_capacity(txns.iter().copied())));
    put(&mut f, "revisit_deciles", revisit_deciles(txns.iter().copied()));
    put(&mut f, "loyalty_deciles", loyalty_deciles(txns.iter().copied(), tallies));

    let temporal = temporal_dists(txns.iter().copied());
    f.dow_dist = temporal.dow;
    f.weekday_hour_dist = temporal.weekday_hour;
    f.weekend_hour_dist = temporal.weekend_hour;
    if txns.is_empty() {
        for name in ["dow_dist", "weekday_hour_dist", "weekend_hour_dist"] {
            f.flags.insert(name.to_string());
        }
    }

    match select_k_aic(&amounts, DEFAULT_K_MAX, derive_seed(seed, &entry.id)) {
        Ok(model) => {
            let party = party_features(&model, &amounts);
            f.party_prop = party.prop;
            f.party_price = party.price;
            f.party_k = model.k;
        }
        Err(_) => {
            for name in ["party_prop", "party_price"] {
                f.flags.insert(name.to_string());
            }
        }
    }
    f
}

/// Features for every restaurant, in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatTable {
    pub rows: Vec<(String, StatFeatureBlock)>,
}

impl StatTable {
    pub fn get(&self, id: &str) -> Option<&StatFeatureBlock> {
        self.rows
            .binary_search_by(|(k, _)| k.as_str().cmp(id))
            .ok()
            .map(|i| &self.rows[i].1)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("restaurant_id\tparty_k\tflags");
        for c in stat_columns() {
            out.push('\t');
            out.push_str(&c);
        }
        out.push('\n');
        for (id, f) in &self.rows {
            let flags = if f.flags.is_empty() {
                "-".to_string()
            } else {
                f.flags.iter().cloned().collect::<Vec<_>>().join(",")
            };
            out.push_str(&format!("{id}\t{}\t{flags}", f.party_k));
            for v in f.to_vec() {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::data("empty feature file"))?;
        let expected = format!("restaurant_id\tparty_k\tflags\t{}", stat_columns().join("\t"));
        if header != expected {
            return Err(Error::Malformed {
                line: 1,
                reason: "bad feature header".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = |why: String| Error::Malformed {
                line: i as u64 + 2,
                reason: why,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != STAT_DIM + 3 {
                return Err(bad(format!("expected {} columns, found {}", STAT_DIM + 3, cols.len())));
            }
            let party_k = cols[1].parse().map_err(|_| bad(format!("bad party_k {:?}", cols[1])))?;
            let flags = match cols[2] {
                "-" => BTreeSet::new(),
                s => s.split(',').map(str::to_string).collect(),
            };
            let values = cols[3..]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push((cols[0].to_string(), StatFeatureBlock::from_values(&values, party_k, flags)?));
        }
        if rows.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::data("feature rows must be sorted by unique restaurant id"));
        }
        Ok(StatTable { rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        StatTable::parse_tsv(&text)
    }
}

pub fn extract_all(index: &TxnIndex, seed: u64) -> StatTable {
    let tallies = index.cardholder_tallies();
    let entries: Vec<&RestaurantEntry> = index.restaurants().collect();
    let rows = entries
        .par_iter()
        .map(|e| (e.id.clone(), extract_restaurant(index, e, &tallies, seed)))
        .collect();
    StatTable { rows }
}
