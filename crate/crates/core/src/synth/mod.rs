//! Seeded synthetic transaction logs with planted cuisine signals.
//!
//! Seeds: the world (restaurants, names, customers) draws from
//! `derive_seed(seed, "synth.world")`, the transaction stream from
//! `derive_seed(seed, "synth.period.<period>")`. Keeping `seed` and changing
//! `period` replays the same restaurants and customers over a fresh stream.

mod names;
mod params;
mod vectors;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Gamma, Normal, Poisson};

pub use names::{flavor_words, NameModel, FILLER_WORDS};
pub use params::{default_cuisines, CuisineParams, SynthConfig};
pub use vectors::name_vectors;

use crate::cuisine::CuisineClass;
use crate::error::Result;
use crate::seed::derive_seed;
use crate::txn::{Transaction, Zip5};
use crate::weak::{LabelSet, LabelSource, Taxonomy};

/// A generated restaurant and its hidden parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRestaurant {
    pub id: String,
    pub name: String,
    pub zip5: Zip5,
    pub cuisine: CuisineClass,
    pub style: usize,
    pub region: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SynthOutput {
    /// Sorted by timestamp, then merchant, cardholder and amounts.
    pub transactions: Vec<Transaction>,
    /// Party size of each transaction, aligned with `transactions`.
    pub party_sizes: Vec<u8>,
    pub restaurants: Vec<SynthRestaurant>,
    pub truth: LabelSet,
}

impl SynthOutput {
    /// `restaurant_id<TAB>cuisine`, sorted by id.
    pub fn truth_tsv(&self) -> String {
        let mut out = String::new();
        for (id, l) in self.truth.iter() {
            let _ = writeln!(out, "{id}\t{}", l.class);
        }
        out
    }

    /// `txn_index<TAB>restaurant_id<TAB>party_size`, aligned with the
    /// transaction file's data rows (0-based).
    pub fn party_tsv(&self) -> String {
        let mut out = String::from("txn_index\trestaurant_id\tparty_size\n");
        for (i, (t, p)) in self.transactions.iter().zip(&self.party_sizes).enumerate() {
            let _ = writeln!(out, "{i}\t{}\t{p}", t.merchant_id);
        }
        out
    }
}

struct Profile {
    cuisine: CuisineClass,
    price_mu: f64,
    price_sigma: f64,
    tip_rate: f64,
    tip_noise: f64,
    days: WeightedIndex<f64>,
    weekday_hours: WeightedIndex<f64>,
    weekend_hours: WeightedIndex<f64>,
    party: WeightedIndex<f64>,
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn blend(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    normalize(a)
        .iter()
        .zip(normalize(b))
        .map(|(x, y)| (1.0 - lambda) * x + lambda * y)
        .collect()
}

fn weighted(w: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(w).expect("validated weights")
}

fn pick(w: &[f64], rng: &mut ChaCha8Rng) -> usize {
    weighted(w).sample(rng)
}

struct World {
    restaurants: Vec<SynthRestaurant>,
    profiles: Vec<Profile>,
    popularity: Vec<f64>,
    /// Customer id, home region, cuisine preference, activity multiplier.
    customers: Vec<(String, usize, [f64; 10], f64)>,
}

fn build_world(cfg: &SynthConfig, start: NaiveDate, taxonomy: &Taxonomy) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth.world"));
    let names = NameModel::new(cfg.p_kw, cfg.p_flavor, taxonomy);

    let mut prefixes: Vec<u16> = Vec::new();
    while prefixes.len() < cfg.n_regions {
        let p = rng.random_range(100..1000u16);
        if !prefixes.contains(&p) {
            prefixes.push(p);
        }
    }
    let fixed_zip: Option<Zip5> = cfg.fixed_zip.as_ref().map(|z| z.parse().expect("validated zip"));

    let day_weekday: Vec<usize> = (0..cfg.days)
        .map(|d| (start + Duration::days(d as i64)).weekday().num_days_from_monday() as usize)
        .collect();

    let mut restaurants = Vec::with_capacity(cfg.n_restaurants);
    let mut profiles = Vec::with_capacity(cfg.n_restaurants);
    let mut popularity = Vec::with_capacity(cfg.n_restaurants);
    let mut used_names = std::collections::BTreeSet::new();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 0..cfg.n_restaurants {
        let cuisine = CuisineClass::ALL[pick(&cfg.cuisine_mix, &mut rng)];
        let p = &cfg.cuisines[cuisine.code()];
        let style = rng.random_range(0..p.style_price_shift.len());
        let region = rng.random_range(0..cfg.n_regions);
        let zip5 = fixed_zip.unwrap_or_else(|| {
            let z = prefixes[region] as u32 * 100 + rng.random_range(0..100u32);
            format!("{z:05}").parse().expect("five digits")
        });
        let mut name = names.name_for(cuisine, &mut rng);
        for _ in 0..50 {
            if !used_names.contains(&name) {
                break;
            }
            name = names.name_for(cuisine, &mut rng);
        }
        let mut suffix = 2;
        let base = name.clone();
        while used_names.contains(&name) {
            name = format!("{base} {}", FILLER_WORDS[suffix % FILLER_WORDS.len()].to_lowercase());
            suffix += 1;
        }
        used_names.insert(name.clone());

        let other = &cfg.cuisines[rng.random_range(0..CuisineClass::COUNT)];
        let lambda = rng.random::<f64>() * cfg.profile_blend;
        let dow = blend(&p.dow, &other.dow, lambda);
        let day_w: Vec<f64> = day_weekday.iter().map(|&d| dow[d]).collect();
        profiles.push(Profile {
            cuisine,
            price_mu: p.price_mu + p.style_price_shift[style] + cfg.price_jitter * unit.sample(&mut rng),
            price_sigma: p.price_sigma,
            tip_rate: p.tip_rate,
            tip_noise: p.tip_noise,
            days: weighted(&day_w),
            weekday_hours: weighted(&blend(&p.weekday_hours, &other.weekday_hours, lambda)),
            weekend_hours: weighted(&blend(&p.weekend_hours, &other.weekend_hours, lambda)),
            party: weighted(&blend(&p.party, &other.party, lambda)),
        });
        popularity.push(p.appeal * (0.5 * unit.sample(&mut rng)).exp());
        restaurants.push(SynthRestaurant {
            id: format!("R{:05}", i + 1),
            name,
            zip5,
            cuisine,
            style,
            region,
        });
    }

    // Preferences lean toward cuisines with more (and more appealing) places.
    let mut base = [0.0; 10];
    for (r, pop) in restaurants.iter().zip(&popularity) {
        base[r.cuisine.code()] += pop;
    }
    let total: f64 = base.iter().sum();
    let mut customers = Vec::with_capacity(cfg.n_customers);
    if total > 0.0 {
        let alpha = base.map(|b| (cfg.dirichlet_a * 10.0 * b / total).max(1e-3));
        let dirichlet = Dirichlet::new(alpha).expect("positive concentration");
        let activity = Gamma::new(2.0, 0.5).expect("gamma");
        for i in 0..cfg.n_customers {
            let home = rng.random_range(0..cfg.n_regions);
            let mut pref: [f64; 10] = dirichlet.sample(&mut rng);
            for (p, b) in pref.iter_mut().zip(&base) {
                if *b == 0.0 || !p.is_finite() {
                    *p = 0.0;
                }
            }
            if pref.iter().sum::<f64>() <= 0.0 {
                pref = base;
            }
            customers.push((format!("C{:06}", i + 1), home, pref, activity.sample(&mut rng)));
        }
    }
    World {
        restaurants,
        profiles,
        popularity,
        customers,
    }
}

/// Generate transactions and ground truth. Deterministic in `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    generate_with(cfg, &Taxonomy::bundled())
}

pub fn generate_with(cfg: &SynthConfig, taxonomy: &Taxonomy) -> Result<SynthOutput> {
    cfg.validate()?;
    let start = cfg.start()?;
    let world = build_world(cfg, start, taxonomy);
    let mut truth = LabelSet::new();
    for r in &world.restaurants {
        truth.insert(&r.id, r.cuisine, LabelSource::Truth);
    }
    if world.restaurants.is_empty() {
        return Ok(SynthOutput {
            restaurants: world.restaurants,
            truth,
            ..Default::default()
        });
    }

    // Candidate pools per (cuisine, region) and per cuisine.
    let mut by_cuisine: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut by_region: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, r) in world.restaurants.iter().enumerate() {
        by_cuisine.entry(r.cuisine.code()).or_default().push(i);
        by_region.entry((r.cuisine.code(), r.region)).or_default().push(i);
    }
    let pool = |ids: &Vec<usize>| {
        let w: Vec<f64> = ids.iter().map(|&i| world.popularity[i]).collect();
        (ids.clone(), weighted(&w))
    };
    let cuisine_pool: BTreeMap<usize, (Vec<usize>, WeightedIndex<f64>)> =
        by_cuisine.iter().map(|(k, v)| (*k, pool(v))).collect();
    let region_pool: BTreeMap<(usize, usize), (Vec<usize>, WeightedIndex<f64>)> =
        by_region.iter().map(|(k, v)| (*k, pool(v))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("synth.period.{}", cfg.period)));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows: Vec<(Transaction, u8)> = Vec::new();
    for (cid, home, pref, activity) in &world.customers {
        let lambda = cfg.visits_mean * activity;
        let n = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(&mut rng) as usize
        } else {
            0
        };
        let pref_w = WeightedIndex::new(pref).expect("nonzero preference");
        let mut history: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for _ in 0..n {
            let c = pref_w.sample(&mut rng);
            let seen = history.entry(c).or_default();
            let ri = if !seen.is_empty() && rng.random::<f64>() < cfg.cuisines[c].revisit {
                *seen.choose(&mut rng).expect("nonempty")
            } else {
                let (ids, w) = match region_pool.get(&(c, *home)) {
                    Some(p) if rng.random::<f64>() < cfg.home_bias => p,
                    _ => &cuisine_pool[&c],
                };
                ids[w.sample(&mut rng)]
            };
            if !seen.contains(&ri) {
                seen.push(ri);
            }
            let r = &world.restaurants[ri];
            let p = &world.profiles[ri];
            debug_assert_eq!(p.cuisine, r.cuisine);
            let date = start + Duration::days(p.days.sample(&mut rng) as i64);
            let hour = if date.weekday().num_days_from_monday() >= 5 {
                p.weekend_hours.sample(&mut rng)
            } else {
                p.weekday_hours.sample(&mut rng)
            };
            let minute = rng.random_range(0..60u32);
            let time = NaiveTime::from_hms_opt(hour as u32, minute, 0).expect("valid time");
            let party = p.party.sample(&mut rng) + 1;
            let per_person = (p.price_mu + p.price_sigma * unit.sample(&mut rng)).exp();
            let auth = ((party as f64 * per_person).round() as u64).max(1);
            let tip = p.tip_rate + p.tip_noise * unit.sample(&mut rng);
            let settle = ((auth as f64 * (1.0 + tip)).round() as u64).max(auth);
            rows.push((
                Transaction {
                    merchant_id: r.id.clone(),
                    merchant_name: r.name.clone(),
                    zip5: r.zip5,
                    timestamp: date.and_time(time),
                    cardholder_id: cid.clone(),
                    auth_cents: auth,
                    settle_cents: settle,
                },
                party as u8,
            ));
        }
    }
    rows.sort_by(|(a, pa), (b, pb)| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.merchant_id.cmp(&b.merchant_id))
            .then_with(|| a.cardholder_id.cmp(&b.cardholder_id))
            .then_with(|| a.auth_cents.cmp(&b.auth_cents))
            .then_with(|| a.settle_cents.cmp(&b.settle_cents))
            .then_with(|| pa.cmp(pb))
    });
    let (transactions, party_sizes) = rows.into_iter().unzip();
    Ok(SynthOutput {
        transactions,
        party_sizes,
        restaurants: world.restaurants,
        truth,
    })
}
