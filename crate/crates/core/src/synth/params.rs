use serde::{Deserialize, Serialize};

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};

/// Generator behaviour for one cuisine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuisineParams {
    /// Per-person price, log-normal in log-cents.
    pub price_mu: f64,
    pub price_sigma: f64,
    /// Restaurants draw one style uniformly; each shifts `price_mu`.
    pub style_price_shift: Vec<f64>,
    /// Tip as a fraction of the authorized amount; 0 means cash tips.
    pub tip_rate: f64,
    pub tip_noise: f64,
    pub weekday_hours: [f64; 24],
    pub weekend_hours: [f64; 24],
    /// Monday first.
    pub dow: [f64; 7],
    /// Party sizes 1 to 6.
    pub party: [f64; 6],
    /// Relative traffic per restaurant.
    pub appeal: f64,
    /// Chance a visit returns to a restaurant of this cuisine the customer
    /// has already been to.
    pub revisit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_restaurants: usize,
    pub n_customers: usize,
    pub days: u32,
    /// First day of the observation window, `YYYY-MM-DD`.
    pub start_date: String,
    /// Chance a name carries a seed keyword of its cuisine.
    pub p_kw: f64,
    /// Chance each other name token is a cuisine-flavored word rather than
    /// a generic one.
    pub p_flavor: f64,
    /// Dirichlet concentration of customer cuisine preferences.
    pub dirichlet_a: f64,
    /// Mean visits per customer over the window (Poisson).
    pub visits_mean: f64,
    /// Chance a first visit stays in the customer's home region.
    pub home_bias: f64,
    pub n_regions: usize,
    /// Every restaurant gets this ZIP instead of a regional one.
    pub fixed_zip: Option<String>,
    /// Per-restaurant spread of `price_mu` around its cuisine value.
    pub price_jitter: f64,
    /// Upper bound of the weight each restaurant gives to a second,
    /// randomly chosen cuisine profile for hours, days and party sizes.
    pub profile_blend: f64,
    /// Restaurant share per cuisine, by class code.
    pub cuisine_mix: [f64; 10],
    /// One entry per cuisine, by class code.
    pub cuisines: Vec<CuisineParams>,
    /// Width of the stand-in pretrained name vectors.
    pub name_vector_dim: usize,
    /// Seeds the world: restaurants, names and customers.
    pub seed: u64,
    /// Seeds the transaction stream; a new period replays the same world.
    pub period: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_restaurants: 200,
            n_customers: 2000,
            days: 60,
            start_date: "2024-01-01".into(),
            p_kw: 0.4,
            p_flavor: 0.5,
            dirichlet_a: 0.3,
            visits_mean: 30.0,
            home_bias: 0.7,
            n_regions: 8,
            fixed_zip: None,
            price_jitter: 0.15,
            profile_blend: 0.3,
            cuisine_mix: [0.14, 0.12, 0.06, 0.05, 0.06, 0.14, 0.09, 0.16, 0.09, 0.09],
            cuisines: default_cuisines(false),
            name_vector_dim: 100,
            seed: 0,
            period: 0,
        }
    }
}

impl SynthConfig {
    /// 500 restaurants, 5000 customers, 90 days, balanced cuisines with
    /// tighter per-cuisine profiles.
    pub fn strongly_separated() -> Self {
        SynthConfig {
            n_restaurants: 500,
            n_customers: 5000,
            days: 90,
            p_kw: 0.4,
            cuisine_mix: [0.1; 10],
            cuisines: default_cuisines(true),
            price_jitter: 0.08,
            profile_blend: 0.1,
            seed: 7,
            ..Default::default()
        }
    }

    pub fn start(&self) -> Result<chrono::NaiveDate> {
        chrono::NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|e| Error::config(format!("synth.start_date {:?}: {e}", self.start_date)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if !(0.0..=1.0).contains(&self.p_kw) {
            return bad(format!("synth.p_kw must be in [0,1], got {}", self.p_kw));
        }
        if !(0.0..=1.0).contains(&self.p_flavor) {
            return bad(format!("synth.p_flavor must be in [0,1], got {}", self.p_flavor));
        }
        if !(0.0..=1.0).contains(&self.home_bias) {
            return bad(format!("synth.home_bias must be in [0,1], got {}", self.home_bias));
        }
        if !(self.dirichlet_a > 0.0) {
            return bad("synth.dirichlet_a must be > 0".into());
        }
        if !(self.visits_mean > 0.0) {
            return bad("synth.visits_mean must be > 0".into());
        }
        if self.days == 0 {
            return bad("synth.days must be >= 1".into());
        }
        if self.n_regions == 0 || self.n_regions > 1000 {
            return bad("synth.n_regions must be in 1..=1000".into());
        }
        if let Some(z) = &self.fixed_zip {
            z.parse::<crate::txn::Zip5>().map_err(|e| Error::config(format!("synth.fixed_zip: {e}")))?;
        }
        if !(self.price_jitter >= 0.0) || !(0.0..=1.0).contains(&self.profile_blend) {
            return bad("synth.price_jitter must be >= 0 and synth.profile_blend in [0,1]".into());
        }
        if self.name_vector_dim == 0 {
            return bad("synth.name_vector_dim must be >= 1".into());
        }
        check_weights("synth.cuisine_mix", &self.cuisine_mix)?;
        if self.cuisines.len() != CuisineClass::COUNT {
            return bad(format!("synth.cuisines needs {} entries, got {}", CuisineClass::COUNT, self.cuisines.len()));
        }
        for (c, p) in CuisineClass::ALL.iter().zip(&self.cuisines) {
            let at = |f: &str| format!("synth.cuisines[{}].{f}", c.code());
            check_weights(&at("weekday_hours"), &p.weekday_hours)?;
            check_weights(&at("weekend_hours"), &p.weekend_hours)?;
            check_weights(&at("dow"), &p.dow)?;
            check_weights(&at("party"), &p.party)?;
            if !(0.0..=0.5).contains(&p.tip_rate) {
                return bad(format!("{} must be in [0,0.5], got {}", at("tip_rate"), p.tip_rate));
            }
            if !(p.tip_noise >= 0.0) || !(p.price_sigma >= 0.0) || !p.price_mu.is_finite() {
                return bad(format!("{}: price and tip noise must be finite and >= 0", at("")));
            }
            if p.style_price_shift.is_empty() || p.style_price_shift.iter().any(|s| !s.is_finite()) {
                return bad(format!("{} needs at least one finite entry", at("style_price_shift")));
            }
            if !(p.appeal > 0.0) || !(0.0..=1.0).contains(&p.revisit) {
                return bad(format!("{}: appeal must be > 0 and revisit in [0,1]", at("")));
            }
        }
        self.start()?;
        Ok(())
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::config(format!("{name}: weights must be finite and >= 0")));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::config(format!("{name}: weights are all zero")));
    }
    Ok(())
}

/// Sum of Gaussian bumps `(center hour, width, weight)` on the 24-hour
/// circle, plus a small floor so every hour is possible.
fn hours(bumps: &[(f64, f64, f64)], sharp: bool) -> [f64; 24] {
    let mut out = [0.0; 24];
    let scale = if sharp { 0.6 } else { 1.0 };
    for (h, o) in out.iter_mut().enumerate() {
        let mut v = 0.01;
        for &(c, w, a) in bumps {
            let d = (h as f64 - c).abs();
            let d = d.min(24.0 - d);
            let w = w * scale;
            v += a * (-0.5 * d * d / (w * w)).exp();
        }
        *o = v;
    }
    out
}

const LUNCH: f64 = 12.5;
const DINNER: f64 = 19.0;
const NIGHT: f64 = 22.5;
const MORNING: f64 = 8.5;
const AFTERNOON: f64 = 15.5;

const PARTY_SOLO: [f64; 6] = [0.46, 0.30, 0.11, 0.07, 0.04, 0.02];
const PARTY_GROUP: [f64; 6] = [0.36, 0.30, 0.15, 0.11, 0.05, 0.03];
const DOW_FLAT: [f64; 7] = [1.0, 1.0, 1.0, 1.0, 1.15, 1.2, 1.05];
const DOW_WEEKEND: [f64; 7] = [0.8, 0.8, 0.9, 1.0, 1.45, 1.8, 1.3];

/// Default per-cuisine table, qualitatively following the usual ordering
/// of US restaurant segments: European priciest, dessert cheapest, bars
/// late and weekend-heavy, Asian cuisines with larger parties.
pub fn default_cuisines(sharp: bool) -> Vec<CuisineParams> {
    let sigma = if sharp { 0.22 } else { 0.45 };
    let row = |cents: f64,
               tip: f64,
               wd: &[(f64, f64, f64)],
               we: &[(f64, f64, f64)],
               dow: [f64; 7],
               party: [f64; 6],
               appeal: f64,
               revisit: f64| CuisineParams {
        price_mu: f64::ln(cents),
        price_sigma: sigma,
        style_price_shift: vec![-0.15, 0.15],
        tip_rate: tip,
        tip_noise: if tip > 0.0 { 0.03 } else { 0.0 },
        weekday_hours: hours(wd, sharp),
        weekend_hours: hours(we, sharp),
        dow,
        party,
        appeal,
        revisit,
    };
    vec![
        // LatinAmerican
        row(
            1150.0,
            0.0,
            &[(LUNCH, 1.5, 1.0), (DINNER, 1.8, 1.0)],
            &[(13.0, 2.0, 1.0), (DINNER, 2.0, 0.9)],
            DOW_FLAT,
            PARTY_SOLO,
            1.0,
            0.35,
        ),
        // European
        row(
            2900.0,
            0.18,
            &[(LUNCH, 1.2, 0.4), (19.5, 1.5, 2.0)],
            &[(11.0, 1.5, 0.8), (19.5, 1.5, 2.0)],
            DOW_WEEKEND,
            PARTY_SOLO,
            0.9,
            0.2,
        ),
        // MMA
        row(
            1100.0,
            0.0,
            &[(LUNCH, 1.3, 1.4), (DINNER, 1.5, 0.7)],
            &[(13.5, 1.5, 1.0), (DINNER, 1.5, 0.8)],
            [1.0, 1.05, 1.05, 1.05, 1.1, 1.0, 0.9],
            PARTY_SOLO,
            0.85,
            0.25,
        ),
        // SouthAsian
        row(
            1700.0,
            0.12,
            &[(12.0, 1.0, 1.2), (19.5, 1.3, 1.2)],
            &[(12.5, 1.5, 1.3), (19.5, 1.3, 1.2)],
            DOW_FLAT,
            PARTY_GROUP,
            0.85,
            0.25,
        ),
        // SouthEastAsian
        row(
            1500.0,
            0.12,
            &[(LUNCH, 1.3, 1.0), (AFTERNOON, 1.0, 0.3), (18.5, 1.3, 1.0)],
            &[(LUNCH, 1.5, 1.0), (18.5, 1.5, 1.0)],
            [1.0, 1.0, 1.0, 1.0, 1.1, 1.1, 0.95],
            [0.30, 0.32, 0.16, 0.12, 0.06, 0.04],
            0.8,
            0.25,
        ),
        // EastAsian
        row(
            1350.0,
            0.0,
            &[(11.5, 1.0, 1.0), (18.0, 1.2, 1.3), (NIGHT, 1.0, 0.2)],
            &[(12.0, 1.3, 1.0), (18.0, 1.5, 1.3)],
            DOW_FLAT,
            PARTY_GROUP,
            0.85,
            0.25,
        ),
        // GrillSteak
        row(
            1600.0,
            0.15,
            &[(LUNCH, 1.2, 0.6), (18.5, 1.5, 1.6)],
            &[(13.0, 1.5, 0.8), (18.5, 1.8, 1.6)],
            [0.9, 0.9, 0.95, 1.0, 1.3, 1.4, 1.1],
            PARTY_SOLO,
            1.3,
            0.4,
        ),
        // Fastfood
        row(
            950.0,
            0.0,
            &[(LUNCH, 1.0, 1.6), (AFTERNOON, 1.5, 0.4), (18.0, 1.2, 0.7), (NIGHT, 1.0, 0.2)],
            &[(12.5, 1.5, 1.3), (18.0, 1.5, 0.8)],
            DOW_FLAT,
            PARTY_SOLO,
            1.1,
            0.3,
        ),
        // Bar
        row(
            1550.0,
            0.2,
            &[(18.0, 1.2, 0.6), (NIGHT, 1.5, 2.0)],
            &[(15.0, 1.5, 0.5), (NIGHT, 1.8, 2.2)],
            [0.7, 0.75, 0.85, 1.05, 1.6, 1.9, 1.0],
            PARTY_SOLO,
            1.4,
            0.6,
        ),
        // Dessert
        row(
            800.0,
            0.0,
            &[(MORNING, 1.3, 1.0), (AFTERNOON, 1.5, 1.3), (20.5, 1.0, 0.3)],
            &[(10.0, 1.5, 1.1), (AFTERNOON, 1.5, 1.4)],
            [0.9, 0.9, 0.95, 1.0, 1.1, 1.3, 1.2],
            [0.50, 0.28, 0.11, 0.06, 0.03, 0.02],
            1.1,
            0.55,
        ),
    ]
}
