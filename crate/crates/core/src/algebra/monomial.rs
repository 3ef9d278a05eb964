use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::MAX_PARTIES;

/// Letters used to print parties: A, B, C, ...
pub const PARTY_LETTERS: [char; MAX_PARTIES] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H'];

/// A dichotomic observable `X_s` of one party. Settings are stored zero-based
/// and printed one-based (`A1` is party 0, setting 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyObservable {
    pub party: u8,
    pub setting: u8,
}

impl PartyObservable {
    pub const fn new(party: u8, setting: u8) -> Self {
        Self { party, setting }
    }
}

impl fmt::Display for PartyObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = PARTY_LETTERS.get(self.party as usize).copied().unwrap_or('?');
        write!(f, "{}{}", letter, self.setting + 1)
    }
}

/// Canonical word in the algebra of party-local involutions.
///
/// Letters are grouped by ascending party; within a party no two adjacent
/// letters repeat. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    n_parties: u8,
    letters: Vec<PartyObservable>,
}

impl Monomial {
    pub fn identity(n_parties: usize) -> Self {
        Self {
            n_parties: n_parties as u8,
            letters: Vec::new(),
        }
    }

    /// Canonical form of an arbitrary word.
    pub fn canonicalize(word: &[PartyObservable], n_parties: usize) -> Result<Self> {
        if n_parties > MAX_PARTIES {
            return Err(Error::TooManyParties(n_parties));
        }
        if let Some(bad) = word.iter().find(|l| l.party as usize >= n_parties) {
            return Err(Error::PartyOutOfRange {
                party: bad.party as usize,
                n_parties,
            });
        }
        let mut sorted = word.to_vec();
        // Stable: within-party order is the operator order.
        sorted.sort_by_key(|l| l.party);
        let mut letters: Vec<PartyObservable> = Vec::with_capacity(sorted.len());
        for l in sorted {
            if letters.last() == Some(&l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Ok(Self {
            n_parties: n_parties as u8,
            letters,
        })
    }

    /// Single generator `X_setting` of `party`.
    pub fn generator(n_parties: usize, party: usize, setting: usize) -> Result<Self> {
        Self::canonicalize(&[PartyObservable::new(party as u8, setting as u8)], n_parties)
    }

    /// Product of one generator per listed `(party, setting)`.
    pub fn product_of(n_parties: usize, factors: &[(usize, usize)]) -> Result<Self> {
        let word: Vec<_> = factors
            .iter()
            .map(|&(p, s)| PartyObservable::new(p as u8, s as u8))
            .collect();
        Self::canonicalize(&word, n_parties)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties as usize
    }

    pub fn letters(&self) -> &[PartyObservable] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Total word length.
    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    /// Word restricted to one party.
    pub fn party_word(&self, party: usize) -> impl Iterator<Item = u8> + '_ {
        self.letters
            .iter()
            .filter(move |l| l.party as usize == party)
            .map(|l| l.setting)
    }

    /// Length of the word of every party.
    pub fn party_lengths(&self) -> Vec<usize> {
        let mut lengths = vec![0; self.n_parties()];
        for l in &self.letters {
            lengths[l.party as usize] += 1;
        }
        lengths
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n_parties != other.n_parties {
            return Err(Error::PartyCountMismatch {
                left: self.n_parties(),
                right: other.n_parties(),
            });
        }
        let mut word = self.letters.clone();
        word.extend_from_slice(&other.letters);
        Self::canonicalize(&word, self.n_parties())
    }

    /// Adjoint: reverses every within-party word.
    pub fn adjoint(&self) -> Self {
        let mut letters = Vec::with_capacity(self.letters.len());
        let mut start = 0;
        while start < self.letters.len() {
            let party = self.letters[start].party;
            let mut end = start;
            while end < self.letters.len() && self.letters[end].party == party {
                end += 1;
            }
            letters.extend(self.letters[start..end].iter().rev());
            start = end;
        }
        Self {
            n_parties: self.n_parties,
            letters,
        }
    }

    /// Representative of `{m, m^dagger}` used when moments are taken real.
    pub fn symmetric_key(&self) -> Self {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    /// Per-party setting when every party appears at most once, as needed
    /// to read the monomial as a correlator.
    pub fn correlator_settings(&self) -> Option<Vec<Option<usize>>> {
        let mut settings = vec![None; self.n_parties()];
        for l in &self.letters {
            let slot = &mut settings[l.party as usize];
            if slot.is_some() {
                return None;
            }
            *slot = Some(l.setting as usize);
        }
        Some(settings)
    }

    /// Applies a relabelling of generators, returning the sign it introduces.
    pub fn relabel<F>(&self, map: F) -> Result<(Self, i8)>
    where
        F: Fn(PartyObservable) -> (PartyObservable, i8),
    {
        let mut sign = 1i8;
        let word: Vec<_> = self
            .letters
            .iter()
            .map(|&l| {
                let (image, s) = map(l);
                sign *= s;
                image
            })
            .collect();
        Ok((Self::canonicalize(&word, self.n_parties())?, sign))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: identity first, then by length, then letters.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_parties
            .cmp(&other.n_parties)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `"1"` or `"A1*B2*C2"` (the `*` separators are optional).
pub fn parse_monomial(text: &str, n_parties: usize) -> Result<Monomial> {
    let trimmed = text.trim();
    if trimmed == "1" || trimmed.is_empty() {
        return Ok(Monomial::identity(n_parties));
    }
    let mut word = Vec::new();
    let mut chars = trimmed.chars().filter(|c| *c != '*' && !c.is_whitespace()).peekable();
    while let Some(c) = chars.next() {
        let party = PARTY_LETTERS
            .iter()
            .position(|&p| p == c.to_ascii_uppercase())
            .ok_or_else(|| Error::InvalidMonomial(text.to_string()))?;
        let mut digits = String::new();
        while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
            digits.push(*d);
            chars.next();
        }
        let setting: usize = digits
            .parse()
            .map_err(|_| Error::InvalidMonomial(text.to_string()))?;
        if setting == 0 {
            return Err(Error::InvalidMonomial(text.to_string()));
        }
        word.push(PartyObservable::new(party as u8, (setting - 1) as u8));
    }
    Monomial::canonicalize(&word, n_parties)
}

impl FromStr for Monomial {
    type Err = Error;

    /// Parses with the party count inferred from the highest party letter.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .chars()
            .filter_map(|c| PARTY_LETTERS.iter().position(|&p| p == c))
            .max()
            .map_or(1, |p| p + 1);
        parse_monomial(s, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(p: u8, s: u8) -> PartyObservable {
        PartyObservable::new(p, s)
    }

    #[test]
    fn involution_cancels() {
        let m = Monomial::canonicalize(&[obs(0, 0), obs(0, 0)], 3).unwrap();
        assert!(m.is_identity());
    }

    #[test]
    fn parties_commute() {
        let m = Monomial::canonicalize(&[obs(1, 0), obs(0, 0)], 3).unwrap();
        assert_eq!(m.to_string(), "A1*B1");
    }

    #[test]
    fn inner_cancellation() {
        let m = Monomial::canonicalize(&[obs(0, 0), obs(0, 1), obs(0, 1), obs(1, 1)], 3).unwrap();
        assert_eq!(m.to_string(), "A1*B2");
    }

    #[test]
    fn products() {
        let a1 = Monomial::generator(3, 0, 0).unwrap();
        assert!(a1.multiply(&a1).unwrap().is_identity());
        let a1b1 = Monomial::product_of(3, &[(0, 0), (1, 0)]).unwrap();
        let c1 = Monomial::generator(3, 2, 0).unwrap();
        assert_eq!(a1b1.multiply(&c1).unwrap().to_string(), "A1*B1*C1");
        let a1a2 = Monomial::product_of(3, &[(0, 0), (0, 1)]).unwrap();
        let a2a1 = Monomial::product_of(3, &[(0, 1), (0, 0)]).unwrap();
        assert!(a1a2.multiply(&a2a1).unwrap().is_identity());
        assert_eq!(a1a2.adjoint(), a2a1);
    }

    #[test]
    fn mismatched_party_count() {
        let a = Monomial::generator(2, 0, 0).unwrap();
        let b = Monomial::generator(3, 0, 0).unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::PartyCountMismatch { .. })));
    }

    #[test]
    fn party_out_of_range() {
        assert!(Monomial::canonicalize(&[obs(3, 0)], 3).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let m = parse_monomial("A1*A2*C2", 3).unwrap();
        assert_eq!(m.to_string(), "A1*A2*C2");
        assert_eq!(parse_monomial("C1 B2", 3).unwrap().to_string(), "B2*C1");
        assert!(parse_monomial("Z1", 3).is_err());
        assert!(parse_monomial("A0", 3).is_err());
        assert_eq!("A1*B1*C1".parse::<Monomial>().unwrap().n_parties(), 3);
    }

    #[test]
    fn correlator_settings() {
        let m = parse_monomial("A2*C1", 3).unwrap();
        assert_eq!(m.correlator_settings(), Some(vec![Some(1), None, Some(0)]));
        assert_eq!(parse_monomial("A1*A2", 3).unwrap().correlator_settings(), None);
    }
}
