use std::f64::consts::{FRAC_PI_4, SQRT_2};

use dirk::algebra::{evaluate_on_behavior, Monomial, PartyObservable, Polynomial, StandardExpression};
use dirk::behavior::Behavior;
use dirk::bounds::{
    f_curve, local_gp_bound, nparty_bound, ns_two_party_bound, svetlichny_local_bound, two_party_gp_bound,
    NPartyParams,
};
use dirk::nosignalling::{check_no_signalling, deterministic_vertices, is_local_bipartite, RECONSTRUCTION_TOLERANCE};
use dirk::quantum::{QuantumStrategy, QubitObservable};
use num_complex::Complex;
use proptest::prelude::*;

const N: usize = 3;

fn word() -> impl Strategy<Value = Vec<PartyObservable>> {
    proptest::collection::vec((0..N as u8, 0..2u8), 0..12)
        .prop_map(|w| w.into_iter().map(|(p, s)| PartyObservable::new(p, s)).collect())
}

fn monomial() -> impl Strategy<Value = Monomial> {
    word().prop_map(|w| Monomial::canonicalize(&w, N).unwrap())
}

fn polynomial() -> impl Strategy<Value = Polynomial<f64>> {
    proptest::collection::vec((monomial(), -3i32..=3), 0..5).prop_map(|terms| {
        let mut p = Polynomial::zero(N);
        for (m, c) in terms {
            p.add_term(m, f64::from(c));
        }
        p
    })
}

fn observable() -> impl Strategy<Value = QubitObservable<f64>> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| {
        let (x, y, z) = (t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
        QubitObservable::new([
            [Complex::new(z, 0.0), Complex::new(x, -y)],
            [Complex::new(x, y), Complex::new(-z, 0.0)],
        ])
        .unwrap()
    })
}

fn strategy() -> impl Strategy<Value = QuantumStrategy<f64>> {
    (
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << N),
        proptest::collection::vec((observable(), observable()), N),
    )
        .prop_filter_map("nonzero state", |(amps, obs)| {
            let state = amps.into_iter().map(|(r, i)| Complex::new(r, i)).collect();
            QuantumStrategy::normalized(state, obs.into_iter().map(|(a, b)| [a, b]).collect()).ok()
        })
}

fn close(a: &Polynomial<f64>, b: &Polynomial<f64>) -> bool {
    a.max_abs_difference(b).0 <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonicalize_is_idempotent(w in word()) {
        let once = Monomial::canonicalize(&w, N).unwrap();
        let twice = Monomial::canonicalize(once.letters(), N).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn multiply_is_associative(a in monomial(), b in monomial(), c in monomial()) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        let id = Monomial::identity(N);
        prop_assert_eq!(a.multiply(&id).unwrap(), a.clone());
        prop_assert_eq!(id.multiply(&a).unwrap(), a);
    }

    #[test]
    fn adjoint_reverses_products(a in monomial(), b in monomial()) {
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        let ab = a.multiply(&b).unwrap();
        prop_assert_eq!(ab.adjoint(), b.adjoint().multiply(&a.adjoint()).unwrap());
        prop_assert!(a.multiply(&a.adjoint()).unwrap().is_identity());
    }

    #[test]
    fn polynomial_products(p in polynomial(), q in polynomial(), r in polynomial()) {
        let left = p.try_mul(&q).unwrap().try_mul(&r).unwrap();
        let right = p.try_mul(&q.try_mul(&r).unwrap()).unwrap();
        prop_assert!(close(&left, &right));
        prop_assert!(close(&p.try_mul(&q).unwrap().adjoint(), &q.adjoint().try_mul(&p.adjoint()).unwrap()));
        let distributed = p.try_mul(&q).unwrap().try_add(&p.try_mul(&r).unwrap()).unwrap();
        prop_assert!(close(&p.try_mul(&q.try_add(&r).unwrap()).unwrap(), &distributed));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simulator_matches_behavior(s in strategy()) {
        let b = s.behavior();
        prop_assert!(b.violations(1e-12).is_empty());
        prop_assert!(check_no_signalling(&b).is_empty());
        for e in [StandardExpression::Mermin, StandardExpression::MerminPrime, StandardExpression::Svetlichny] {
            let expr = e.build::<f64>().unwrap();
            let direct = s.expectation(&expr).unwrap();
            prop_assert!((direct - evaluate_on_behavior(&expr, &b).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn evaluation_is_linear(
        s in strategy(),
        t in strategy(),
        w in 0.0f64..1.0,
        a in -2.0f64..2.0,
        c in -2.0f64..2.0,
    ) {
        let m = StandardExpression::Mermin.build::<f64>().unwrap();
        let mp = StandardExpression::MerminPrime.build::<f64>().unwrap();
        let (bs, bt) = (s.behavior(), t.behavior());
        let mixed = Behavior::mix(&[bs.clone(), bt.clone()], &[w, 1.0 - w]).unwrap();
        let expr = m.scale(a).try_add(&mp.scale(c)).unwrap();
        let value = |b: &Behavior| evaluate_on_behavior(&expr, b).unwrap();
        prop_assert!((value(&mixed) - (w * value(&bs) + (1.0 - w) * value(&bt))).abs() <= 1e-10);
        let split = a * evaluate_on_behavior(&m, &bs).unwrap() + c * evaluate_on_behavior(&mp, &bs).unwrap();
        prop_assert!((value(&bs) - split).abs() <= 1e-10);
    }

    #[test]
    fn local_bound_depends_on_radius(r in 0.0f64..4.0, a in 0.0f64..std::f64::consts::TAU, b in 0.0f64..std::f64::consts::TAU) {
        let at = |t: f64| local_gp_bound(r * t.cos(), r * t.sin()).unwrap().raw;
        prop_assert!((at(a) - at(b)).abs() <= 1e-12);
    }

    #[test]
    fn ns_two_party_is_symmetric(m in -4.0f64..4.0, mp in -4.0f64..4.0) {
        prop_assert_eq!(ns_two_party_bound(m, mp).unwrap(), ns_two_party_bound(mp, m).unwrap());
    }

    #[test]
    fn local_mixtures_are_certified(raw in proptest::collection::vec(0.0f64..1.0, 16)) {
        let shape = Behavior::uniform(2);
        let vertices = deterministic_vertices(&shape).unwrap();
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-3);
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let b = Behavior::mix(&vertices.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>(), &weights).unwrap();
        let cert = is_local_bipartite(&b).unwrap();
        prop_assert!(cert.local);
        prop_assert!(cert.reconstruction_error <= RECONSTRUCTION_TOLERANCE);
    }
}

fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

#[test]
fn bounds_are_nonincreasing() {
    let f: Vec<f64> = grid(2.0 * SQRT_2, 4.0, 2000).iter().map(|&x| f_curve(x).unwrap()).collect();
    assert!(nonincreasing(&f));
    let t: Vec<f64> = grid(2.0, 4.0, 2000).iter().map(|&x| two_party_gp_bound(x).unwrap().raw).collect();
    assert!(nonincreasing(&t));
    let s: Vec<f64> = grid(4.0, 4.0 * SQRT_2, 2000)
        .iter()
        .map(|&x| svetlichny_local_bound(x).unwrap().raw)
        .collect();
    assert!(nonincreasing(&s));
    for n in 3..=5 {
        let p = NPartyParams::<f64>::new(n).unwrap();
        let v: Vec<f64> = grid(p.local, p.quantum, 2000)
            .iter()
            .map(|&x| nparty_bound(n, x).unwrap().raw)
            .collect();
        assert!(nonincreasing(&v), "n = {n}");
    }
}

#[test]
fn branches_meet() {
    let x = 2.0 + SQRT_2;
    let eps = 1e-13;
    assert!((f_curve(x - eps).unwrap() - f_curve(x + eps).unwrap()).abs() <= 1e-12);
    let t = |m: f64| two_party_gp_bound(m).unwrap().raw;
    assert!((t(3.0 - eps) - t(3.0 + eps)).abs() <= 1e-12);
    for n in 3..=5 {
        let p = NPartyParams::<f64>::new(n).unwrap();
        let th = p.threshold;
        assert!((p.curve(th) - p.interpolation(th)).abs() <= 1e-12, "n = {n}");
        assert!((p.curve(th) - p.threshold_value()).abs() <= 1e-12);
    }
    // The tangent through the violator point sits at theta = pi/4.
    assert!((2.0 * (1.0 + FRAC_PI_4.sin()) - x).abs() < 1e-15);
}

#[test]
fn three_party_conjecture_is_the_two_party_bound() {
    for m in grid(2.0, 4.0, 400) {
        let a = nparty_bound(3, m).unwrap().raw;
        let b = two_party_gp_bound(m).unwrap().raw;
        assert!((a - b).abs() <= 1e-12, "{m}: {a} vs {b}");
    }
}

#[test]
fn mermin_n_shape() {
    for n in 2..=6 {
        let p = StandardExpression::MerminN(n).build::<f64>().unwrap();
        assert_eq!(p.len(), 1 << (n - 1), "n = {n}");
        assert!(p.terms().values().all(|c| c.abs() == 1.0));
    }
}
