use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

const CORPORATE_SUFFIXES: [&str; 4] = ["LLC", "INC", "CO", "CORP"];

/// Split a merchant name into uppercase word tokens.
///
/// Diacritics are folded (`É` -> `E`), apostrophes are deleted so that
/// possessives stay one token, digits are removed, and any other
/// non-letter character separates tokens. Corporate suffixes and tokens
/// shorter than two characters are dropped.
pub fn tokenize_name(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, tokens: &mut Vec<String>| {
        if cur.chars().count() >= 2 && !CORPORATE_SUFFIXES.contains(&cur.as_str()) {
            tokens.push(std::mem::take(cur));
        } else {
            cur.clear();
        }
    };
    for ch in name.nfd().filter(|c| !is_combining_mark(*c)) {
        match ch {
            '\'' | '\u{2019}' | '`' => {}
            c if c.is_numeric() => {}
            c if c.is_alphabetic() => cur.extend(c.to_uppercase()),
            _ => flush(&mut cur, &mut tokens),
        }
    }
    flush(&mut cur, &mut tokens);
    tokens
}
