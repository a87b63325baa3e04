use rand::seq::IndexedRandom;
use rand::Rng;

use crate::cuisine::CuisineClass;
use crate::weak::Taxonomy;

/// Generic name words, shared by every cuisine.
pub const FILLER_WORDS: [&str; 30] = [
    "GOLDEN", "ROYAL", "LUCKY", "HAPPY", "CORNER", "HOUSE", "PLACE", "KITCHEN", "TABLE", "CITY",
    "STAR", "SUN", "MOON", "RIVER", "PARK", "MAIN", "STREET", "FAMILY", "OLD", "NEW", "BLUE",
    "RED", "GREEN", "SILVER", "LITTLE", "BIG", "EXPRESS", "SPOT", "TOWN", "VILLAGE",
];

/// Words that lean toward one cuisine without being seed keywords.
pub fn flavor_words(c: CuisineClass) -> &'static [&'static str] {
    match c {
        CuisineClass::LatinAmerican => &["FIESTA", "AMIGOS", "CASA", "SOL", "MARIACHI", "PUEBLO", "ALAMO", "JALISCO"],
        CuisineClass::European => &["VILLA", "BELLA", "NONNA", "CHATEAU", "TRAVIATA", "BAVARIA", "LUIGI", "MARCO"],
        CuisineClass::MMA => &["OASIS", "SAHARA", "CEDAR", "NILE", "AEGEAN", "PHOENICIA", "SULTAN", "BAZAAR"],
        CuisineClass::SouthAsian => &["TAJ", "SPICE", "GANGA", "MAHAL", "RAJ", "NAMASTE", "CHUTNEY", "SAFFRON"],
        CuisineClass::SouthEastAsian => &["ORCHID", "MEKONG", "JASMINE", "BASIL", "COCONUT", "MANGO", "TAMARIND", "PANDAN"],
        CuisineClass::EastAsian => &["DRAGON", "JADE", "PANDA", "BAMBOO", "LOTUS", "PAGODA", "SAKURA", "FORTUNE"],
        CuisineClass::GrillSteak => &["RANCH", "PRIME", "LONGHORN", "CATTLE", "HICKORY", "OAK", "EMBER", "PIT"],
        CuisineClass::Fastfood => &["SPEEDY", "CRUNCH", "DASH", "BUN", "MELT", "CHEESY", "JUMBO", "SNACK"],
        CuisineClass::Bar => &["ANCHOR", "CROWN", "TAP", "DRAFT", "HOPS", "BARREL", "SHAMROCK", "OWL"],
        CuisineClass::Dessert => &["SUGAR", "SPRINKLE", "HONEY", "VELVET", "CREAM", "MAPLE", "COOKIE", "FROST"],
    }
}

/// Restaurant name model: 1 to 4 tokens, title case.
#[derive(Debug, Clone)]
pub struct NameModel {
    pub p_kw: f64,
    pub p_flavor: f64,
    keywords: Vec<Vec<String>>,
}

const LENGTH_WEIGHTS: [f64; 4] = [0.1, 0.45, 0.35, 0.1];

fn title(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    for (i, ch) in word.chars().enumerate() {
        if i == 0 {
            out.extend(ch.to_uppercase());
        } else {
            out.extend(ch.to_lowercase());
        }
    }
    out
}

impl NameModel {
    pub fn new(p_kw: f64, p_flavor: f64, taxonomy: &Taxonomy) -> Self {
        let keywords = CuisineClass::ALL
            .iter()
            .map(|c| taxonomy.keywords(*c).iter().cloned().collect())
            .collect();
        NameModel { p_kw, p_flavor, keywords }
    }

    /// Uppercase tokens of a fresh name.
    pub fn tokens_for<R: Rng>(&self, cuisine: CuisineClass, rng: &mut R) -> Vec<String> {
        let u = rng.random::<f64>();
        let mut len = LENGTH_WEIGHTS.len();
        let mut acc = 0.0;
        for (i, w) in LENGTH_WEIGHTS.iter().enumerate() {
            acc += w;
            if u < acc {
                len = i + 1;
                break;
            }
        }
        let keyword_at = if rng.random::<f64>() < self.p_kw {
            Some(rng.random_range(0..len))
        } else {
            None
        };
        (0..len)
            .map(|i| {
                if Some(i) == keyword_at {
                    self.keywords[cuisine.code()].choose(rng).expect("nonempty").clone()
                } else if rng.random::<f64>() < self.p_flavor {
                    flavor_words(cuisine).choose(rng).expect("nonempty").to_string()
                } else {
                    FILLER_WORDS.choose(rng).expect("nonempty").to_string()
                }
            })
            .collect()
    }

    pub fn name_for<R: Rng>(&self, cuisine: CuisineClass, rng: &mut R) -> String {
        self.tokens_for(cuisine, rng)
            .iter()
            .map(|t| title(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
