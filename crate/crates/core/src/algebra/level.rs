use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::monomial::{Monomial, PartyObservable, PARTY_LETTERS};
use crate::error::{Error, Result};
use crate::MAX_PARTIES;

/// Per-party word lengths, indexed by party.
pub type Pattern = [u8; MAX_PARTIES];

/// A set of operator patterns defining a level of the moment hierarchy,
/// e.g. `1+AB+AC` or `1+A^2+AB+AC+BC`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSpec {
    /// The `1` token: identity plus every single-party generator.
    level_one: bool,
    patterns: BTreeSet<Pattern>,
}

impl LevelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidLevel {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let mut spec = Self {
            level_one: false,
            patterns: BTreeSet::from([[0; MAX_PARTIES]]),
        };
        for raw in text.split('+') {
            let token = raw.trim();
            if token.is_empty() {
                return Err(invalid("empty token"));
            }
            if token == "1" {
                spec.level_one = true;
                continue;
            }
            let mut pattern = [0u8; MAX_PARTIES];
            let mut chars = token.chars().peekable();
            while let Some(c) = chars.next() {
                let party = PARTY_LETTERS
                    .iter()
                    .position(|&p| p == c)
                    .ok_or_else(|| invalid(&format!("unknown party letter `{c}`")))?;
                let mut power = 1u32;
                if chars.peek() == Some(&'^') {
                    chars.next();
                    let mut digits = String::new();
                    while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                        digits.push(*d);
                        chars.next();
                    }
                    power = digits
                        .parse()
                        .ok()
                        .filter(|&p| p >= 1 && p <= 16)
                        .ok_or_else(|| invalid("malformed exponent"))?;
                }
                pattern[party] = pattern[party]
                    .checked_add(power as u8)
                    .ok_or_else(|| invalid("exponent too large"))?;
            }
            spec.patterns.insert(pattern);
        }
        Ok(spec)
    }

    pub fn includes_level_one(&self) -> bool {
        self.level_one
    }

    /// Explicit patterns, always including the identity pattern.
    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter()
    }

    /// Deterministically ordered monomial list: identity first, then graded
    /// lexicographic, without duplicates.
    pub fn enumerate_monomials(&self, n_parties: usize, n_settings: usize) -> Result<Vec<Monomial>> {
        if n_parties > MAX_PARTIES {
            return Err(Error::TooManyParties(n_parties));
        }
        let mut patterns: Vec<Pattern> = self.patterns.iter().copied().collect();
        if self.level_one {
            for p in 0..n_parties {
                let mut single = [0u8; MAX_PARTIES];
                single[p] = 1;
                patterns.push(single);
            }
        }
        let mut out = BTreeSet::new();
        for pattern in &patterns {
            if let Some(party) = (n_parties..MAX_PARTIES).find(|&p| pattern[p] > 0) {
                return Err(Error::PartyOutOfRange { party, n_parties });
            }
            let per_party: Vec<Vec<Vec<u8>>> = (0..n_parties)
                .map(|p| reduced_words(pattern[p] as usize, n_settings))
                .collect();
            let mut word = Vec::new();
            collect_products(&per_party, 0, &mut word, n_parties, &mut out)?;
        }
        Ok(out.into_iter().collect())
    }
}

/// Words of the given length over `n_settings` letters with no two adjacent
/// letters equal.
fn reduced_words(len: usize, n_settings: usize) -> Vec<Vec<u8>> {
    let mut words = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &words {
            for s in 0..n_settings as u8 {
                if w.last() != Some(&s) {
                    let mut w2 = w.clone();
                    w2.push(s);
                    next.push(w2);
                }
            }
        }
        words = next;
    }
    words
}

fn collect_products(
    per_party: &[Vec<Vec<u8>>],
    party: usize,
    word: &mut Vec<PartyObservable>,
    n_parties: usize,
    out: &mut BTreeSet<Monomial>,
) -> Result<()> {
    if party == per_party.len() {
        out.insert(Monomial::canonicalize(word, n_parties)?);
        return Ok(());
    }
    for w in &per_party[party] {
        let before = word.len();
        word.extend(w.iter().map(|&s| PartyObservable::new(party as u8, s)));
        collect_products(per_party, party + 1, word, n_parties, out)?;
        word.truncate(before);
    }
    Ok(())
}

impl fmt::Display for LevelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut tokens = Vec::new();
        if self.level_one {
            tokens.push("1".to_string());
        }
        let degree = |p: &Pattern| p.iter().map(|&x| u32::from(x)).sum::<u32>();
        let mut ordered: Vec<&Pattern> = self.patterns.iter().filter(|p| degree(p) > 0).collect();
        ordered.sort_by(|a, b| degree(a).cmp(&degree(b)).then(b.cmp(a)));
        for pattern in ordered {
            let mut token = String::new();
            for (p, &len) in pattern.iter().enumerate() {
                match len {
                    0 => {}
                    1 => token.push(PARTY_LETTERS[p]),
                    k => token.push_str(&format!("{}^{k}", PARTY_LETTERS[p])),
                }
            }
            tokens.push(token);
        }
        if tokens.is_empty() {
            tokens.push("1".into());
        }
        write!(f, "{}", tokens.join("+"))
    }
}

impl FromStr for LevelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

pub fn parse_level_spec(text: &str) -> Result<LevelSpec> {
    LevelSpec::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(text: &str, n: usize) -> usize {
        LevelSpec::parse(text).unwrap().enumerate_monomials(n, 2).unwrap().len()
    }

    #[test]
    fn hand_enumerated_counts() {
        assert_eq!(count("1", 3), 7);
        assert_eq!(count("1", 2), 5);
        assert_eq!(count("1+AB", 2), 9);
        assert_eq!(count("1+AB+AC", 3), 15);
        assert_eq!(count("1+AB+AC+BC", 3), 19);
        assert_eq!(count("1+A^2+AB+AC+BC", 3), 21);
    }

    #[test]
    fn level_one_order() {
        let ms = LevelSpec::parse("1").unwrap().enumerate_monomials(3, 2).unwrap();
        let names: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "A1", "A2", "B1", "B2", "C1", "C2"]);
    }

    #[test]
    fn squared_party_words() {
        let ms = LevelSpec::parse("A^2").unwrap().enumerate_monomials(3, 2).unwrap();
        let names: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "A1*A2", "A2*A1"]);
    }

    #[test]
    fn display_round_trip() {
        for text in ["1+AB+AC", "1+A^2+AB+AC+BC", "1"] {
            let spec = LevelSpec::parse(text).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(LevelSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn errors() {
        assert!(LevelSpec::parse("1+AZ").is_err());
        assert!(LevelSpec::parse("1+A^").is_err());
        assert!(LevelSpec::parse("1+A^x").is_err());
        assert!(LevelSpec::parse("1++AB").is_err());
        let spec = LevelSpec::parse("1+AD").unwrap();
        assert!(spec.enumerate_monomials(3, 2).is_err());
    }
}
