use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, Timelike};

use crate::stats::{deciles, Deciles, GmmModel};
use crate::txn::{Transaction, Zip5};

pub const MAX_PARTY: usize = 6;

/// Settled minus authorized amount, per transaction.
pub fn tip_series<'a>(txns: impl IntoIterator<Item = &'a Transaction>) -> Vec<f64> {
    txns.into_iter().map(|t| t.tip_cents() as f64).collect()
}

/// Transaction counts per (date, hour) bucket that saw at least one
/// transaction, in chronological bucket order.
pub fn hourly_capacity<'a>(txns: impl IntoIterator<Item = &'a Transaction>) -> Vec<f64> {
    let mut buckets: BTreeMap<(NaiveDate, u32), u64> = BTreeMap::new();
    for t in txns {
        *buckets.entry((t.timestamp.date(), t.timestamp.hour())).or_default() += 1;
    }
    buckets.into_values().map(|c| c as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Temporal {
    /// Monday first.
    pub dow: [f64; 7],
    pub weekday_hour: [f64; 24],
    pub weekend_hour: [f64; 24],
}

impl Temporal {
    pub fn weekend_share(&self) -> f64 {
        self.dow[5] + self.dow[6]
    }
}

fn normalized<const N: usize>(counts: [u64; N]) -> [f64; N] {
    let total: u64 = counts.iter().sum();
    let mut out = [0.0; N];
    if total > 0 {
        for (o, c) in out.iter_mut().zip(counts) {
            *o = c as f64 / total as f64;
        }
    }
    out
}

/// Day-of-week histogram and hour-of-day histograms split into weekdays and
/// weekends (Saturday, Sunday). Each is normalized or all zero.
pub fn temporal_dists<'a>(txns: impl IntoIterator<Item = &'a Transaction>) -> Temporal {
    let mut dow = [0u64; 7];
    let mut wd = [0u64; 24];
    let mut we = [0u64; 24];
    for t in txns {
        let d = t.timestamp.weekday().num_days_from_monday() as usize;
        dow[d] += 1;
        let h = t.timestamp.hour() as usize;
        if d >= 5 {
            we[h] += 1;
        } else {
            wd[h] += 1;
        }
    }
    Temporal {
        dow: normalized(dow),
        weekday_hour: normalized(wd),
        weekend_hour: normalized(we),
    }
}

/// Visits per distinct cardholder, ordered by cardholder id.
pub fn revisit_counts<'a>(txns: impl IntoIterator<Item = &'a Transaction>) -> Vec<f64> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in txns {
        *counts.entry(t.cardholder_id.as_str()).or_default() += 1;
    }
    counts.into_values().map(|c| c as f64).collect()
}

pub fn revisit_deciles<'a>(txns: impl IntoIterator<Item = &'a Transaction>) -> Deciles {
    deciles(&revisit_counts(txns))
}

/// Deciles, over this restaurant's distinct customers, of the number of
/// distinct restaurants each of them visits anywhere.
pub fn loyalty_deciles<'a>(
    txns: impl IntoIterator<Item = &'a Transaction>,
    tallies: &BTreeMap<&str, usize>,
) -> Deciles {
    let customers: BTreeSet<&str> = txns.into_iter().map(|t| t.cardholder_id.as_str()).collect();
    let v: Vec<f64> = customers
        .iter()
        .map(|c| tallies.get(c).copied().unwrap_or(1) as f64)
        .collect();
    deciles(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartyFeatures {
    pub prop: [f64; MAX_PARTY],
    pub price: [f64; MAX_PARTY],
}

/// Hard-assign each amount to its most responsible component; component
/// `i` (by ascending mean) stands for party size `i + 1`.
pub fn party_features(model: &GmmModel, x: &[f64]) -> PartyFeatures {
    let mut count = [0usize; MAX_PARTY];
    let mut sum = [0.0; MAX_PARTY];
    for &v in x {
        let j = model.assign(v).min(MAX_PARTY - 1);
        count[j] += 1;
        sum[j] += v;
    }
    let mut prop = [0.0; MAX_PARTY];
    let mut price = [0.0; MAX_PARTY];
    if !x.is_empty() {
        for j in 0..MAX_PARTY {
            if count[j] > 0 {
                prop[j] = count[j] as f64 / x.len() as f64;
                price[j] = sum[j] / count[j] as f64;
            }
        }
    }
    PartyFeatures { prop, price }
}

/// Positional one-hot: digit `d` at position `i` sets index `10 i + d`.
pub fn zip_feature(zip: &Zip5) -> [f64; 50] {
    let mut out = [0.0; 50];
    for (i, d) in zip.digits().iter().enumerate() {
        out[10 * i + *d as usize] = 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::gmm_fit;
    use chrono::NaiveDateTime;

    fn tx(ts: &str, card: &str, auth: u64, settle: u64) -> Transaction {
        Transaction {
            merchant_id: "R1".into(),
            merchant_name: "Test".into(),
            zip5: "02139".parse().unwrap(),
            timestamp: NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M").unwrap(),
            cardholder_id: card.into(),
            auth_cents: auth,
            settle_cents: settle,
        }
    }

    #[test]
    fn tips() {
        let t = [tx("2024-03-04T12:00", "C1", 1000, 1180), tx("2024-03-04T12:00", "C1", 500, 500)];
        assert_eq!(tip_series(&t), vec![180.0, 0.0]);
    }

    #[test]
    fn capacity_counts_active_hours() {
        let one = [tx("2024-03-04T12:00", "C1", 1, 1)];
        assert_eq!(hourly_capacity(&one), vec![1.0]);
        let t = [
            tx("2024-03-04T12:05", "C1", 1, 1),
            tx("2024-03-04T12:40", "C2", 1, 1),
            tx("2024-03-04T12:59", "C3", 1, 1),
            tx("2024-03-05T12:10", "C1", 1, 1),
        ];
        assert_eq!(hourly_capacity(&t), vec![3.0, 1.0]);
    }

    #[test]
    fn monday_noon() {
        // 2024-03-04 is a Monday
        let t = [tx("2024-03-04T12:00", "C1", 1, 1), tx("2024-03-11T12:30", "C2", 1, 1)];
        let d = temporal_dists(&t);
        let mut e = [0.0; 7];
        e[0] = 1.0;
        assert_eq!(d.dow, e);
        assert_eq!(d.weekday_hour[12], 1.0);
        assert_eq!(d.weekday_hour.iter().sum::<f64>(), 1.0);
        assert_eq!(d.weekend_hour, [0.0; 24]);
        assert_eq!(d.weekend_share(), 0.0);
    }

    #[test]
    fn revisits() {
        let once: Vec<_> = (0..5).map(|i| tx("2024-03-04T12:00", &format!("C{i}"), 1, 1)).collect();
        assert_eq!(revisit_deciles(&once).values, [1.0; 9]);
        let regular: Vec<_> = (0..7).map(|_| tx("2024-03-04T12:00", "C1", 1, 1)).collect();
        assert_eq!(revisit_deciles(&regular).values, [7.0; 9]);
    }

    #[test]
    fn loyalty_uses_global_tallies() {
        let t = [tx("2024-03-04T12:00", "C1", 1, 1), tx("2024-03-04T12:00", "C2", 1, 1)];
        let tallies: BTreeMap<&str, usize> = [("C1", 3), ("C2", 3)].into_iter().collect();
        assert_eq!(loyalty_deciles(&t, &tallies).values, [3.0; 9]);
    }

    #[test]
    fn one_component_party() {
        let x = [900.0, 1000.0, 1100.0, 1000.0];
        let m = gmm_fit(&x, 1, 0).unwrap();
        let p = party_features(&m, &x);
        assert_eq!(p.prop, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.price[0], 1000.0);
        assert_eq!(&p.price[1..], &[0.0; 5]);
    }

    #[test]
    fn zip_one_hot() {
        let ones = |z: &str| -> Vec<usize> {
            zip_feature(&z.parse().unwrap())
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == 1.0)
                .map(|(i, _)| i)
                .collect()
        };
        assert_eq!(ones("00000"), vec![0, 10, 20, 30, 40]);
        assert_eq!(ones("90210"), vec![9, 10, 22, 31, 40]);
        assert_eq!(zip_feature(&"55555".parse().unwrap()).iter().sum::<f64>(), 5.0);
    }
}
