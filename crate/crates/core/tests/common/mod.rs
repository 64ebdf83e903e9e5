//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod invariants;

use std::sync::OnceLock;

use bottomup::distributions::AlternativeDensity;
use bottomup::objectives::{projected_fh, Coefficients, ExchangeableKind, Projected};
use bottomup::procedures_bu::calibrate;
use bottomup::procedures_classical::LocalTestSuite;
use bottomup::{ObjectiveSpec, ThresholdTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHA: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A p-value family where each coordinate is null or strongly non-null with
/// probability 1/2, with occasional exact ties and values at α.
pub fn family<R: Rng>(r: &mut R, k: usize) -> Vec<f64> {
    let alt = AlternativeDensity::normal_shift(-2.5).unwrap();
    let mut p: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = r.gen_range(f64::MIN_POSITIVE..1.0);
            if r.gen_bool(0.5) {
                alt.sample(u)
            } else {
                u
            }
        })
        .collect();
    for i in 1..k {
        if r.gen_bool(0.05) {
            p[i] = p[r.gen_range(0..i)];
        }
        if r.gen_bool(0.02) {
            p[i] = ALPHA * r.gen_range(1..=k) as f64 / k as f64;
        }
    }
    p
}

/// `p` and a coordinatewise smaller copy.
pub fn dominated_pair<R: Rng>(r: &mut R, k: usize) -> (Vec<f64>, Vec<f64>) {
    let p = family(r, k);
    let smaller = p
        .iter()
        .map(|&x| {
            if r.gen_bool(0.5) {
                x * r.gen_range(0.0..1.0)
            } else {
                x
            }
        })
        .collect();
    (p, smaller)
}

/// True if `a ≥ b` coordinatewise.
pub fn dominates(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x || !y)
}

pub fn mix_objective() -> ObjectiveSpec {
    ObjectiveSpec::normal(ExchangeableKind::Mix, -3.10).unwrap()
}

/// Mix objective at θ = −3.10 calibrated for K = 10 with B = 10⁵.
pub fn mix_table_k10() -> &'static ThresholdTable {
    static TABLE: OnceLock<ThresholdTable> = OnceLock::new();
    TABLE.get_or_init(|| calibrate(&mix_objective(), 10, ALPHA, 100_000, 2024).unwrap())
}

pub fn mix_coefficients() -> Projected {
    projected_fh(&mix_objective()).unwrap()
}

/// Coefficients with `f` multiplied by a constant.
pub struct Scaled<C>(pub C, pub f64);

impl<C: Coefficients> Coefficients for Scaled<C> {
    fn fh(&self, u: f64) -> (f64, f64) {
        let (f, h) = self.0.fh(u);
        (self.1 * f, h)
    }
}

/// Scores of every subset of an ascending `q` (indexed by bitmask), from the
/// explicit closed-testing formula `Σ_k a_k Π_{J ⊊ I, k ∈ J} φ_J`.
pub fn direct_scores<C: Coefficients>(q: &[f64], t: &[f64], alpha: f64, c: &C) -> Vec<f64> {
    let n = q.len();
    assert!(n <= 12);
    let full = 1usize << n;
    let mut score = vec![0.0; full];
    let mut phi = vec![false; full];
    for mask in 1..full {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if members.len() == 1 {
            let u = q[members[0]];
            score[mask] = c.f(u) * c.h(u);
            phi[mask] = u <= alpha;
            continue;
        }
        let h_prod: f64 = members.iter().map(|&i| c.h(q[i])).product();
        let mut s = 0.0;
        for &k in &members {
            let bit = 1 << k;
            let mut all = true;
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                if sub & bit != 0 && !phi[sub] {
                    all = false;
                    break;
                }
                sub = (sub - 1) & mask;
            }
            if all {
                s += c.f(q[k]) * h_prod;
            }
        }
        score[mask] = s;
        phi[mask] = t.get(members.len() - 2).is_some_and(|&tl| s > tl);
    }
    score
}

/// `Π_{J ⊊ [n], k ∈ J} φ_{|J|}(q_J)` for every `k`, by enumeration.
pub fn brute_sub_products<S: LocalTestSuite>(suite: &S, q: &[f64]) -> Vec<bool> {
    let n = q.len();
    let full = (1usize << n) - 1;
    let mut out = vec![true; n];
    for mask in 1..full {
        let sub: Vec<f64> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| q[i])
            .collect();
        if !suite.test(&sub) {
            for (i, o) in out.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *o = false;
                }
            }
        }
    }
    out
}

/// Proptest strategy for [`family`]-like vectors: each coordinate null or
/// non-null with probability 1/2.
pub fn family_strategy(k: usize) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    use proptest::prelude::*;
    prop::collection::vec((any::<bool>(), 1e-12f64..1.0), k).prop_map(|v| {
        let alt = AlternativeDensity::normal_shift(-2.5).unwrap();
        v.into_iter()
            .map(|(is_alt, u)| if is_alt { alt.sample(u) } else { u })
            .collect()
    })
}

/// A family together with a coordinatewise smaller copy.
pub fn dominated_strategy(
    k: usize,
) -> impl proptest::strategy::Strategy<Value = (Vec<f64>, Vec<f64>)> {
    use proptest::prelude::*;
    (
        family_strategy(k),
        prop::collection::vec(prop::option::of(0.0f64..1.0), k),
    )
        .prop_map(|(p, shrink)| {
            let smaller = p
                .iter()
                .zip(&shrink)
                .map(|(&x, s)| s.map_or(x, |s| x * s))
                .collect();
            (p, smaller)
        })
}
