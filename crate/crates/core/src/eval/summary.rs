use std::fmt::Write;

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::stats::{median, StatFeatureBlock, StatTable};

/// Aggregate statistics of one cuisine.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub cuisine: CuisineClass,
    pub restaurants: usize,
    pub median_price: f64,
    pub median_tip: f64,
    pub mean_capacity: f64,
    pub p90_revisits: f64,
    pub median_loyalty: f64,
    pub expense_per_person: f64,
    pub pct_single: f64,
    pub pct_weekend: f64,
    /// Set when no restaurant carries this cuisine; the numbers are then 0.
    pub empty: bool,
}

/// Average bill per diner implied by the party-size decomposition:
/// component `i` stands for `i + 1` diners.
pub fn expense_per_person(f: &StatFeatureBlock) -> f64 {
    f.party_prop
        .iter()
        .zip(&f.party_price)
        .enumerate()
        .map(|(i, (p, price))| p * price / (i + 1) as f64)
        .sum()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Per-cuisine summary. Restaurant-level values are each restaurant's own
/// median (price, tip, capacity, loyalty) or 90th percentile (revisits);
/// "median" columns take the median across restaurants and the rest the mean.
pub fn cuisine_summary(labels: &[(String, CuisineClass)], stats: &StatTable) -> Result<Vec<SummaryRow>> {
    let mut groups: Vec<Vec<&StatFeatureBlock>> = vec![Vec::new(); CuisineClass::COUNT];
    for (id, c) in labels {
        let f = stats
            .get(id)
            .ok_or_else(|| Error::data(format!("summary: no statistical features for {id}")))?;
        groups[c.code()].push(f);
    }
    Ok(CuisineClass::ALL
        .iter()
        .map(|&cuisine| {
            let g = &groups[cuisine.code()];
            let col = |f: &dyn Fn(&StatFeatureBlock) -> f64| -> Vec<f64> { g.iter().map(|r| f(r)).collect() };
            SummaryRow {
                cuisine,
                restaurants: g.len(),
                median_price: median(&col(&|r| r.price_deciles[4])),
                median_tip: median(&col(&|r| r.tip_deciles[4])),
                mean_capacity: mean(&col(&|r| r.capacity_deciles[4])),
                p90_revisits: mean(&col(&|r| r.revisit_deciles[8])),
                median_loyalty: median(&col(&|r| r.loyalty_deciles[4])),
                expense_per_person: mean(&col(&expense_per_person)),
                pct_single: 100.0 * mean(&col(&|r| r.party_prop[0])),
                pct_weekend: 100.0 * mean(&col(&|r| r.dow_dist[5] + r.dow_dist[6])),
                empty: g.is_empty(),
            }
        })
        .collect())
}

const COLUMNS: [&str; 11] = [
    "cuisine",
    "restaurants",
    "median_price",
    "median_tip",
    "mean_capacity",
    "p90_revisits",
    "median_loyalty",
    "expense_per_person",
    "pct_single_diner",
    "pct_weekend",
    "empty",
];

fn values(r: &SummaryRow) -> [f64; 8] {
    [
        r.median_price,
        r.median_tip,
        r.mean_capacity,
        r.p90_revisits,
        r.median_loyalty,
        r.expense_per_person,
        r.pct_single,
        r.pct_weekend,
    ]
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{}\t{}", r.cuisine, r.restaurants);
        for v in values(r) {
            let _ = write!(out, "\t{v}");
        }
        let _ = writeln!(out, "\t{}", if r.empty { "yes" } else { "no" });
    }
    out
}

pub fn summary_text(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<16}{:>6}{:>9}{:>8}{:>9}{:>9}{:>9}{:>10}{:>9}{:>9}\n",
        "cuisine", "n", "price", "tip", "capacity", "revisit", "loyalty", "per-head", "single%", "weekend%"
    );
    for r in rows {
        let v = values(r);
        let _ = write!(out, "{:<16}{:>6}", r.cuisine.name(), r.restaurants);
        if r.empty {
            out.push_str("  (no restaurants)\n");
            continue;
        }
        let _ = writeln!(
            out,
            "{:>9.2}{:>8.2}{:>9.2}{:>9.2}{:>9.2}{:>10.2}{:>9.1}{:>9.1}",
            v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(scale: f64) -> StatFeatureBlock {
        let mut f = StatFeatureBlock::default();
        for i in 0..9 {
            f.price_deciles[i] = scale * (i + 1) as f64;
            f.tip_deciles[i] = 0.1 * scale * i as f64;
            f.capacity_deciles[i] = i as f64;
            f.revisit_deciles[i] = 1.0 + i as f64;
            f.loyalty_deciles[i] = 2.0 * i as f64;
        }
        f.dow_dist = [0.1, 0.1, 0.1, 0.1, 0.2, 0.25, 0.15];
        f.party_prop[0] = 0.5;
        f.party_prop[1] = 0.5;
        f.party_price[0] = 10.0 * scale;
        f.party_price[1] = 30.0 * scale;
        f
    }

    fn table(rows: Vec<(&str, StatFeatureBlock)>) -> StatTable {
        StatTable {
            rows: rows.into_iter().map(|(id, f)| (id.to_string(), f)).collect(),
        }
    }

    #[test]
    fn single_restaurant_row_is_its_own_stats() {
        let stats = table(vec![("a", block(1.0))]);
        let rows = cuisine_summary(&[("a".into(), CuisineClass::Bar)], &stats).unwrap();
        let bar = &rows[CuisineClass::Bar.code()];
        assert!(!bar.empty);
        assert_eq!(bar.median_price, 5.0);
        assert_eq!(bar.median_tip, 0.4);
        assert_eq!(bar.mean_capacity, 4.0);
        assert_eq!(bar.p90_revisits, 9.0);
        assert_eq!(bar.median_loyalty, 8.0);
        assert_eq!(bar.expense_per_person, 0.5 * 10.0 + 0.5 * 15.0);
        assert_eq!(bar.pct_single, 50.0);
        assert!((bar.pct_weekend - 40.0).abs() < 1e-12);
        assert!(rows.iter().filter(|r| r.cuisine != CuisineClass::Bar).all(|r| r.empty));
    }

    #[test]
    fn medians_and_means_across_restaurants() {
        let stats = table(vec![("a", block(1.0)), ("b", block(2.0)), ("c", block(4.0))]);
        let labels: Vec<(String, CuisineClass)> =
            ["a", "b", "c"].iter().map(|id| (id.to_string(), CuisineClass::European)).collect();
        let eu = &cuisine_summary(&labels, &stats).unwrap()[CuisineClass::European.code()];
        assert_eq!(eu.restaurants, 3);
        assert_eq!(eu.median_price, 10.0);
        assert_eq!(eu.expense_per_person, 12.5 * 7.0 / 3.0);
    }

    #[test]
    fn unknown_restaurant_and_renderings() {
        let stats = table(vec![("a", block(1.0))]);
        assert!(cuisine_summary(&[("zz".into(), CuisineClass::Bar)], &stats).is_err());
        let rows = cuisine_summary(&[("a".into(), CuisineClass::Bar)], &stats).unwrap();
        let tsv = summary_tsv(&rows);
        assert_eq!(tsv.lines().count(), 11);
        assert!(tsv.lines().all(|l| l.split('\t').count() == 11));
        assert!(summary_text(&rows).contains("(no restaurants)"));
        assert!(rows.iter().all(|r| (0.0..=100.0).contains(&r.pct_weekend)));
    }
}
