//! Numeric program for the three-party guessing probability of the second
//! settings in terms of the Mermin value.
//!
//! The amplitudes are parametrised as `alpha = cos t / sqrt 2`,
//! `beta = sin t / sqrt 6`, which enforces `2 alpha^2 + 6 beta^2 = 1`. With
//! `s = sin^2 t` the Mermin value is linear in `s` for fixed angles, so its
//! maximum over `theta1` is convex in `s`. At `s = 1` that maximum is 2, hence
//! for a target in `[2, 4]` the feasible amplitudes form `s <= s1(theta2)`
//! and the objective, a sinusoid in `2t`, is maximised in closed form on that
//! set. Only the outer search over `theta2` is numeric.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Search settings. Defaults: 48 seeds in `theta2`, 96 in `theta1`, step
/// refinement down to `1e-9`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Global222Config {
    pub angle_grid: usize,
    pub inner_grid: usize,
    pub seeds: usize,
    pub min_step: f64,
}

impl Default for Global222Config {
    fn default() -> Self {
        Self {
            angle_grid: 48,
            inner_grid: 96,
            seeds: 4,
            min_step: 1e-9,
        }
    }
}

/// Maximiser returned by [`global222_conjecture`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Global222Point {
    pub value: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// The objective `(1 + 24 cos(3 theta2 / 2) alpha beta + 2 cos(3 theta2)
/// alpha^2 + 30 beta^2) / 8`.
pub fn global222_objective(alpha: f64, beta: f64, theta2: f64) -> f64 {
    (1.0 + 24.0 * (1.5 * theta2).cos() * alpha * beta + 2.0 * (3.0 * theta2).cos() * alpha * alpha
        + 30.0 * beta * beta)
        / 8.0
}

/// The constraint function giving the Mermin value.
pub fn global222_mermin(alpha: f64, beta: f64, theta1: f64, theta2: f64) -> f64 {
    (2.0 * (3.0 * theta1).cos() - 6.0 * (theta1 + 2.0 * theta2).cos()) * alpha * alpha
        - 12.0 * (theta1 - theta2).cos() * beta * beta
}

fn amplitudes(t: f64) -> (f64, f64) {
    (t.cos() / 2f64.sqrt(), t.sin() / 6f64.sqrt())
}

/// Mermin value as a function of `s = sin^2 t`.
fn mermin_s(s: f64, theta1: f64, theta2: f64) -> f64 {
    (1.0 - s) / 2.0 * (2.0 * (3.0 * theta1).cos() - 6.0 * (theta1 + 2.0 * theta2).cos())
        - 2.0 * s * (theta1 - theta2).cos()
}

/// Golden-section maximisation on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

struct Search<'a> {
    target: f64,
    config: &'a Global222Config,
}

impl Search<'_> {
    /// `max over theta1` of the Mermin value, with its argument.
    fn max_over_theta1(&self, s: f64, theta2: f64) -> (f64, f64) {
        let n = self.config.inner_grid.max(8);
        let h = TAU / n as f64;
        let f = |x: f64| mermin_s(s, x, theta2);
        let best = (0..n)
            .map(|i| i as f64 * h)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap_or(0.0);
        golden_max(f, best - h, best + h, 1e-13)
    }

    /// Largest `s` for which the target is reachable, or the shortfall when
    /// even `s = 0` cannot reach it.
    fn s_limit(&self, theta2: f64) -> std::result::Result<f64, f64> {
        let m0 = self.max_over_theta1(0.0, theta2).1;
        if m0 < self.target - 1e-14 {
            return Err(self.target - m0);
        }
        if self.max_over_theta1(1.0, theta2).1 >= self.target {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = (lo + hi) / 2.0;
            if self.max_over_theta1(mid, theta2).1 >= self.target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Best `t` in `[0, t1] U [pi - t1, pi]` for fixed `theta2`.
    fn best_t(&self, theta2: f64, s1: f64) -> (f64, f64) {
        let t1 = s1.clamp(0.0, 1.0).sqrt().asin();
        // objective = k + p sin 2t + q cos 2t
        let c3 = (3.0 * theta2).cos();
        let p = 2.0 * 3f64.sqrt() * (1.5 * theta2).cos();
        let q = c3 / 2.0 - 2.5;
        let g = |t: f64| {
            let (a, b) = amplitudes(t);
            global222_objective(a, b, theta2)
        };
        let peak = 0.5 * p.atan2(q);
        let mut candidates = vec![0.0, t1, PI - t1, PI];
        for k in -1..=2 {
            let t = peak + k as f64 * PI;
            if (0.0..=t1).contains(&t) || (PI - t1..=PI).contains(&t) {
                candidates.push(t);
            }
        }
        candidates
            .into_iter()
            .map(|t| (t, g(t)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty")
    }

    /// Outer score: the constrained maximum when `theta2` is feasible,
    /// otherwise a penalty below every feasible value.
    fn score(&self, theta2: f64) -> (f64, f64) {
        match self.s_limit(theta2) {
            Ok(s1) => {
                let (t, v) = self.best_t(theta2, s1);
                (v, t)
            }
            Err(deficit) => (-1.0 - deficit, f64::NAN),
        }
    }

    fn refine(&self, mut x: f64) -> (f64, f64, f64) {
        let mut step = TAU / self.config.angle_grid.max(1) as f64 / 2.0;
        let (mut best, mut t) = self.score(x);
        while step > self.config.min_step {
            let mut moved = false;
            for cand in [x + step, x - step] {
                let (v, tc) = self.score(cand);
                if v > best {
                    best = v;
                    t = tc;
                    x = cand;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        (x, best, t)
    }
}

/// Maximises the program at Mermin value `m` in `[2, 4]`.
pub fn global222_conjecture(m: f64, config: &Global222Config) -> Result<Global222Point> {
    if !(2.0 - 1e-12..=4.0 + 1e-12).contains(&m) {
        return Err(Error::OutOfDomain {
            name: "M",
            value: m,
            domain: "[2, 4]".into(),
        });
    }
    let search = Search {
        target: m.clamp(2.0, 4.0),
        config,
    };
    let n = config.angle_grid.max(1);
    let mut seeds: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = i as f64 * TAU / n as f64;
            (x, search.score(x).0)
        })
        .collect();
    seeds.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut best: Option<(f64, f64, f64)> = None;
    for &(x, _) in seeds.iter().take(config.seeds.max(1)) {
        let r = search.refine(x);
        if best.map_or(true, |b| r.1 > b.1) {
            best = Some(r);
        }
    }
    let (theta2, value, t) = best.expect("at least one seed");
    if !(value >= 0.0) {
        return Err(Error::Infeasible(format!("no amplitudes and angles reach M = {m}")));
    }
    let (alpha, beta) = amplitudes(t);
    let theta1 = solve_theta1(alpha, beta, theta2, search.target, config);
    Ok(Global222Point {
        value,
        alpha,
        beta,
        theta1,
        theta2: theta2.rem_euclid(TAU),
    })
}

/// An angle `theta1` at which the constraint holds, found by bracketing
/// around the maximiser of the constraint function.
fn solve_theta1(alpha: f64, beta: f64, theta2: f64, target: f64, config: &Global222Config) -> f64 {
    let f = |x: f64| global222_mermin(alpha, beta, x, theta2) - target;
    let n = config.inner_grid.max(8);
    let h = TAU / n as f64;
    let top = (0..n)
        .map(|i| i as f64 * h)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(0.0);
    let (peak, fp) = golden_max(f, top - h, top + h, 1e-13);
    if fp <= 0.0 {
        return peak.rem_euclid(TAU);
    }
    // Walk down from the peak until the sign changes, then bisect.
    let mut lo = peak;
    let mut hi = peak;
    for i in 1..=n {
        hi = peak + i as f64 * h;
        if f(hi) <= 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..80 {
        let mid = (lo + hi) / 2.0;
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ((lo + hi) / 2.0).rem_euclid(TAU)
}
