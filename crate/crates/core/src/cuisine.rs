use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The ten cuisine classes. Integer codes are stable and follow declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CuisineClass {
    LatinAmerican,
    European,
    /// Middle Eastern, Mediterranean and African.
    MMA,
    SouthAsian,
    SouthEastAsian,
    EastAsian,
    GrillSteak,
    Fastfood,
    Bar,
    Dessert,
}

impl CuisineClass {
    pub const COUNT: usize = 10;

    pub const ALL: [CuisineClass; 10] = [
        CuisineClass::LatinAmerican,
        CuisineClass::European,
        CuisineClass::MMA,
        CuisineClass::SouthAsian,
        CuisineClass::SouthEastAsian,
        CuisineClass::EastAsian,
        CuisineClass::GrillSteak,
        CuisineClass::Fastfood,
        CuisineClass::Bar,
        CuisineClass::Dessert,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CuisineClass::LatinAmerican => "LatinAmerican",
            CuisineClass::European => "European",
            CuisineClass::MMA => "MMA",
            CuisineClass::SouthAsian => "SouthAsian",
            CuisineClass::SouthEastAsian => "SouthEastAsian",
            CuisineClass::EastAsian => "EastAsian",
            CuisineClass::GrillSteak => "GrillSteak",
            CuisineClass::Fastfood => "Fastfood",
            CuisineClass::Bar => "Bar",
            CuisineClass::Dessert => "Dessert",
        }
    }

    /// Artificial token appended to labeled documents when sprinkling.
    pub fn sprinkle_token(self) -> String {
        format!("#{}", self.name().to_uppercase())
    }
}

impl fmt::Display for CuisineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CuisineClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| format!("unknown cuisine class {wanted:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_declaration_order() {
        for (i, c) in CuisineClass::ALL.iter().enumerate() {
            assert_eq!(c.code(), i);
            assert_eq!(CuisineClass::from_code(i), Some(*c));
        }
        assert_eq!(CuisineClass::from_code(10), None);
    }

    #[test]
    fn parse_is_case_insensitive() {
        assert_eq!("eastasian".parse(), Ok(CuisineClass::EastAsian));
        assert_eq!("MMA".parse(), Ok(CuisineClass::MMA));
        assert!("Circassian".parse::<CuisineClass>().is_err());
    }

    #[test]
    fn sprinkle_token_shape() {
        assert_eq!(CuisineClass::EastAsian.sprinkle_token(), "#EASTASIAN");
    }
}
