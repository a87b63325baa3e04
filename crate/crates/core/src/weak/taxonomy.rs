use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::weak::tokenize_name;

/// Seed keywords per cuisine class.
///
/// This bundled list is a stand-in assembled for this project: uppercase
/// single tokens, at least fifteen per class, pairwise disjoint.
const BUNDLED: [(CuisineClass, &str); 10] = [
    (
        CuisineClass::LatinAmerican,
        "MEXICAN,TAQUERIA,TACO,TACOS,BURRITO,CANTINA,CUBAN,BRAZILIAN,COLOMBIAN,PERUVIAN,\
         CHURRASCARIA,PUPUSERIA,EMPANADA,TAMALE,TORTILLA,AZTECA,HACIENDA,MEXICO,LATINO,CEVICHE,ARGENTINE",
    ),
    (
        CuisineClass::European,
        "ITALIAN,FRENCH,GERMAN,POLISH,IRISH,BISTRO,BRASSERIE,TRATTORIA,OSTERIA,RISTORANTE,\
         CUCINA,PASTA,CREPERIE,FONDUE,PIEROGI,SCHNITZEL,TUSCAN,NAPOLI,PARIS,ROMA,TAPAS,SPANISH",
    ),
    (
        CuisineClass::MMA,
        "GREEK,TURKISH,LEBANESE,PERSIAN,AFGHAN,MOROCCAN,ETHIOPIAN,ERITREAN,MEDITERRANEAN,\
         FALAFEL,SHAWARMA,GYRO,GYROS,KEBAB,KABOB,HUMMUS,HALAL,PITA,MEZZE,SAUDI,ARABIAN,ISTANBUL,BEIRUT,ATHENS",
    ),
    (
        CuisineClass::SouthAsian,
        "INDIAN,PAKISTANI,NEPALESE,BANGLADESHI,TANDOOR,TANDOORI,CURRY,MASALA,BIRYANI,DOSA,\
         TIKKA,NAAN,BOMBAY,DELHI,PUNJAB,PUNJABI,HIMALAYAN,MUMBAI,KATHMANDU,MAHARAJA,CHAAT",
    ),
    (
        CuisineClass::SouthEastAsian,
        "THAI,VIETNAMESE,INDONESIAN,MALAYSIAN,FILIPINO,PHO,BANH,SAIGON,BANGKOK,SIAM,SATAY,\
         LAKSA,HANOI,PHUKET,BALI,RENDANG,LEMONGRASS,MANILA",
    ),
    (
        CuisineClass::EastAsian,
        "CHINESE,JAPANESE,KOREAN,MONGOLIAN,PEKING,SUSHI,RAMEN,HIBACHI,TERIYAKI,DUMPLING,\
         SZECHUAN,HUNAN,CANTON,TOKYO,SEOUL,BULGOGI,KIMCHI,DIMSUM,TEPPANYAKI,SHANGHAI,UDON,IZAKAYA",
    ),
    (
        CuisineClass::GrillSteak,
        "GRILL,GRILLE,STEAKHOUSE,STEAK,STEAKS,CHOPHOUSE,BBQ,BARBECUE,SMOKEHOUSE,ROTISSERIE,\
         BRISKET,RIBS,ROADHOUSE,CARVERY,BROILER,SIRLOIN,SMOKERY,CHARCOAL",
    ),
    (
        CuisineClass::Fastfood,
        "SANDWICH,SANDWICHES,BURGER,BURGERS,PIZZA,PIZZERIA,SUBS,DELI,HOTDOG,HOTDOGS,WINGS,\
         CHICKEN,FRIES,HOAGIE,SLICE,DRIVEIN,WRAPS",
    ),
    (
        CuisineClass::Bar,
        "BAR,PUB,TAVERN,INN,SALOON,LOUNGE,TAPROOM,BREWPUB,BREWERY,ALEHOUSE,SPEAKEASY,\
         BIERGARTEN,TAPHOUSE,COCKTAIL,COCKTAILS,NIGHTCLUB,BREWING,DISTILLERY,WINERY",
    ),
    (
        CuisineClass::Dessert,
        "CREAMERY,GELATO,GELATERIA,CAFE,COFFEE,BAKERY,JUICE,DONUT,DONUTS,CUPCAKE,CUPCAKES,\
         PASTRY,PATISSERIE,FROYO,YOGURT,SMOOTHIE,SWEETS,CANDY,DESSERT,DESSERTS,ESPRESSO,BOBA,ICECREAM",
    ),
];

/// Cuisine class -> seed keywords, with a reverse lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    keywords: BTreeMap<CuisineClass, BTreeSet<String>>,
    lookup: HashMap<String, CuisineClass>,
}

impl Taxonomy {
    /// Validate and build. Every class needs at least one keyword, keyword
    /// sets must be pairwise disjoint, and each keyword must be a single
    /// normalized token.
    pub fn new(keywords: BTreeMap<CuisineClass, BTreeSet<String>>) -> Result<Self> {
        let mut lookup = HashMap::new();
        for class in CuisineClass::ALL {
            let set = keywords
                .get(&class)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::config(format!("taxonomy: class {class} has no keywords")))?;
            for kw in set {
                if tokenize_name(kw) != [kw.as_str()] {
                    return Err(Error::config(format!(
                        "taxonomy: keyword {kw:?} is not a normalized token"
                    )));
                }
                if let Some(prev) = lookup.insert(kw.clone(), class) {
                    return Err(Error::config(format!(
                        "taxonomy: keyword {kw} listed under both {prev} and {class}"
                    )));
                }
            }
        }
        Ok(Taxonomy { keywords, lookup })
    }

    pub fn bundled() -> Self {
        let keywords = BUNDLED
            .iter()
            .map(|(c, list)| {
                let set = list
                    .split(',')
                    .map(|k| k.trim().to_string())
                    .filter(|k| !k.is_empty())
                    .collect();
                (*c, set)
            })
            .collect();
        Taxonomy::new(keywords).expect("bundled taxonomy is valid")
    }

    /// Parse the `CUISINE<TAB>kw1,kw2,...` text format. Blank lines and
    /// lines starting with `//` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut keywords: BTreeMap<CuisineClass, BTreeSet<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with("//") {
                continue;
            }
            let (class, list) = line.split_once('\t').ok_or_else(|| {
                Error::config(format!("taxonomy line {}: expected CUISINE<TAB>keywords", i + 1))
            })?;
            let class: CuisineClass = class
                .parse()
                .map_err(|e| Error::config(format!("taxonomy line {}: {e}", i + 1)))?;
            keywords.entry(class).or_default().extend(
                list.split(',')
                    .map(|k| k.trim().to_uppercase())
                    .filter(|k| !k.is_empty()),
            );
        }
        Taxonomy::new(keywords)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Taxonomy::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (class, set) in &self.keywords {
            let list: Vec<&str> = set.iter().map(String::as_str).collect();
            out.push_str(&format!("{}\t{}\n", class, list.join(",")));
        }
        out
    }

    pub fn class_of(&self, token: &str) -> Option<CuisineClass> {
        self.lookup.get(token).copied()
    }

    pub fn keywords(&self, class: CuisineClass) -> &BTreeSet<String> {
        &self.keywords[&class]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.lookup.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    /// A copy with one more keyword, validated like any other taxonomy.
    pub fn with_keyword(&self, class: CuisineClass, keyword: &str) -> Result<Self> {
        let mut keywords = self.keywords.clone();
        keywords
            .entry(class)
            .or_default()
            .insert(keyword.to_uppercase());
        Taxonomy::new(keywords)
    }
}
