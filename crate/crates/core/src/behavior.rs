//! Conditional probability tables `P(outcomes | settings)`.
//!
//! Storage is dense with a fixed enumeration order: the setting tuple is the
//! major index and the outcome tuple the minor one, both in mixed radix with
//! party 0 most significant. Outcome 0 is `+`, outcome 1 is `-`; setting 0 is
//! the first measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MAX_PARTIES;

pub const NS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    n: usize,
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    table: Vec<f64>,
}

/// Two-party behavior `P(ab|xy)`.
pub type BipartiteBehavior = Behavior;

fn radix_len(radix: &[usize]) -> usize {
    radix.iter().product()
}

fn encode(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (&d, &r)| acc * r + d)
}

fn decode(mut index: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, &r) in out.iter_mut().zip(radix).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

/// All tuples of a mixed radix in enumeration order.
pub fn tuples(radix: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..radix_len(radix)).map(move |i| decode(i, radix))
}

/// A failed validity check.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Negative {
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        value: f64,
    },
    Normalization {
        settings: Vec<usize>,
        total: f64,
    },
    /// Marginal of the other parties changes with `party`'s setting.
    Signalling {
        party: usize,
        settings: Vec<usize>,
        alternative: usize,
        deviation: f64,
    },
}

impl Behavior {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        let n = settings.len();
        if n == 0 || n > MAX_PARTIES {
            return Err(Error::TooManyParties(n));
        }
        if outcomes.len() != n {
            return Err(Error::ShapeMismatch("settings and outcomes lengths differ".into()));
        }
        if settings.iter().chain(&outcomes).any(|&k| k == 0) {
            return Err(Error::ShapeMismatch("empty setting or outcome set".into()));
        }
        let expected = radix_len(&settings) * radix_len(&outcomes);
        if table.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "table has {} entries, expected {expected}",
                table.len()
            )));
        }
        if table.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite probability".into()));
        }
        Ok(Self {
            n,
            settings,
            outcomes,
            table,
        })
    }

    /// Binary-outcome behavior with two settings per party, built from a
    /// probability function.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(&[usize], &[usize]) -> f64,
    {
        Self::from_fn_shaped(vec![2; n], vec![2; n], f)
    }

    pub fn from_fn_shaped<F>(settings: Vec<usize>, outcomes: Vec<usize>, f: F) -> Result<Self>
    where
        F: Fn(&[usize], &[usize]) -> f64,
    {
        let mut table = Vec::with_capacity(radix_len(&settings) * radix_len(&outcomes));
        for x in tuples(&settings) {
            for a in tuples(&outcomes) {
                table.push(f(&x, &a));
            }
        }
        Self::new(settings, outcomes, table)
    }

    pub fn uniform(n: usize) -> Self {
        let p = 1.0 / (1u32 << n) as f64;
        Self::from_fn(n, |_, _| p).expect("valid shape")
    }

    /// Deterministic behavior: `response[party][setting]` is the outcome.
    pub fn deterministic(response: &[Vec<usize>]) -> Result<Self> {
        let settings: Vec<usize> = response.iter().map(Vec::len).collect();
        let outcomes = vec![2; response.len()];
        Self::from_fn_shaped(settings, outcomes, |x, a| {
            let hit = x.iter().enumerate().all(|(p, &s)| response[p][s] == a[p]);
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn n_setting_tuples(&self) -> usize {
        radix_len(&self.settings)
    }

    pub fn n_outcome_tuples(&self) -> usize {
        radix_len(&self.outcomes)
    }

    pub fn index(&self, settings: &[usize], outcomes: &[usize]) -> usize {
        encode(settings, &self.settings) * self.n_outcome_tuples() + encode(outcomes, &self.outcomes)
    }

    pub fn prob(&self, settings: &[usize], outcomes: &[usize]) -> f64 {
        self.table[self.index(settings, outcomes)]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.settings == other.settings && self.outcomes == other.outcomes
    }

    /// Expectation of the product of the outcomes (`+1` for outcome 0,
    /// `-1` for outcome 1) of the parties with a setting; other parties are
    /// summed out at their first setting.
    pub fn correlator(&self, settings: &[Option<usize>]) -> Result<f64> {
        if settings.len() != self.n {
            return Err(Error::PartyCountMismatch {
                left: settings.len(),
                right: self.n,
            });
        }
        let mut x = vec![0; self.n];
        for (p, s) in settings.iter().enumerate() {
            if let Some(s) = *s {
                if s >= self.settings[p] {
                    return Err(Error::SettingOutOfRange {
                        setting: s,
                        n_settings: self.settings[p],
                    });
                }
                if self.outcomes[p] != 2 {
                    return Err(Error::ShapeMismatch(format!(
                        "party {p} is not binary-valued"
                    )));
                }
                x[p] = s;
            }
        }
        let base = encode(&x, &self.settings) * self.n_outcome_tuples();
        let mut terms = Vec::with_capacity(self.n_outcome_tuples());
        for (i, a) in tuples(&self.outcomes).enumerate() {
            let parity = a
                .iter()
                .zip(settings)
                .filter(|(&o, s)| s.is_some() && o == 1)
                .count();
            let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(sign * self.table[base + i]);
        }
        Ok(<f64 as crate::scalar::Coefficient>::sum_all(terms))
    }

    /// Marginal on the listed parties (in the given order), summing the
    /// others out at their first setting.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&p) = keep.iter().find(|&&p| p >= self.n) {
            return Err(Error::PartyOutOfRange {
                party: p,
                n_parties: self.n,
            });
        }
        let settings: Vec<usize> = keep.iter().map(|&p| self.settings[p]).collect();
        let outcomes: Vec<usize> = keep.iter().map(|&p| self.outcomes[p]).collect();
        Self::from_fn_shaped(settings, outcomes, |xs, as_| {
            let mut x = vec![0; self.n];
            for (i, &p) in keep.iter().enumerate() {
                x[p] = xs[i];
            }
            tuples(&self.outcomes)
                .filter(|a| keep.iter().enumerate().all(|(i, &p)| a[p] == as_[i]))
                .map(|a| self.prob(&x, &a))
                .sum()
        })
    }

    /// Positivity, normalisation and no-signalling checks.
    pub fn violations(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for x in tuples(&self.settings) {
            let mut total = 0.0;
            for a in tuples(&self.outcomes) {
                let v = self.prob(&x, &a);
                total += v;
                if v < -tol {
                    out.push(Violation::Negative {
                        settings: x.clone(),
                        outcomes: a,
                        value: v,
                    });
                }
            }
            if (total - 1.0).abs() > tol {
                out.push(Violation::Normalization {
                    settings: x.clone(),
                    total,
                });
            }
        }
        for party in 0..self.n {
            for x in tuples(&self.settings).filter(|x| x[party] == 0) {
                for alt in 1..self.settings[party] {
                    let mut x_alt = x.clone();
                    x_alt[party] = alt;
                    let mut deviation: f64 = 0.0;
                    for a in tuples(&self.outcomes).filter(|a| a[party] == 0) {
                        let mut a = a.clone();
                        let mut lhs = 0.0;
                        let mut rhs = 0.0;
                        for o in 0..self.outcomes[party] {
                            a[party] = o;
                            lhs += self.prob(&x, &a);
                            rhs += self.prob(&x_alt, &a);
                        }
                        deviation = deviation.max((lhs - rhs).abs());
                    }
                    if deviation > tol {
                        out.push(Violation::Signalling {
                            party,
                            settings: x.clone(),
                            alternative: alt,
                            deviation,
                        });
                    }
                }
            }
        }
        out
    }

    /// Convex combination of equally shaped behaviors.
    pub fn mix(behaviors: &[Behavior], weights: &[f64]) -> Result<Self> {
        if behaviors.is_empty() || behaviors.len() != weights.len() {
            return Err(Error::ShapeMismatch(
                "need one weight per behavior and at least one behavior".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidWeights("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        let first = &behaviors[0];
        if behaviors.iter().any(|b| !b.same_shape(first)) {
            return Err(Error::ShapeMismatch("behaviors differ in shape".into()));
        }
        let table = (0..first.table.len())
            .map(|i| behaviors.iter().zip(weights).map(|(b, w)| w * b.table[i]).sum())
            .collect();
        Self::new(first.settings.clone(), first.outcomes.clone(), table)
    }

    pub fn max_abs_difference(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("behaviors differ in shape".into()));
        }
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("behavior serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: Behavior = serde_json::from_value(value.clone())
            .map_err(|e| Error::Invalid(format!("behavior JSON: {e}")))?;
        if raw.n != raw.settings.len() {
            return Err(Error::ShapeMismatch("field n disagrees with settings".into()));
        }
        Self::new(raw.settings, raw.outcomes, raw.table)
    }
}

/// Convex combination; see [`Behavior::mix`].
pub fn mix_behaviors(behaviors: &[Behavior], weights: &[f64]) -> Result<Behavior> {
    Behavior::mix(behaviors, weights)
}
