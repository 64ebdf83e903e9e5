//! Classical competitors, local test suites, brute-force closed testing and
//! the last-step improvement of symmetric monotone suites.

use rayon::prelude::*;

use crate::decision::{DecisionVector, SortedPValues};
use crate::distributions::normal_quantile;
use crate::error::{Error, Result};
use crate::objectives::{projected_fh, Coefficients, ObjectiveSpec, Projected};
use crate::procedures_bu::{
    check_calibration_args, draw_sorted_uniforms, order_statistic, BuProcedure,
};
use crate::rng::domain;
use crate::thresholds::{fingerprint, ThresholdTable};

/// Largest family the brute-force closure will enumerate.
pub const BRUTE_FORCE_MAX_K: usize = 12;

/// A family of intersection tests `φ_ℓ`, one per subset size.
pub trait LocalTestSuite: Sync {
    /// `φ_ℓ` on an ascending vector of length `ℓ ≥ 1`.
    fn test(&self, sorted: &[f64]) -> bool;

    fn name(&self) -> &str;

    fn is_symmetric(&self) -> bool {
        true
    }

    fn is_monotone(&self) -> bool {
        true
    }
}

/// Simes: reject if some `q_(i) ≤ iα/ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimesSuite {
    pub alpha: f64,
}

/// Bonferroni: reject if `min ≤ α/ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonferroniSuite {
    pub alpha: f64,
}

/// Rejects every intersection of size at least two; singletons use `p ≤ α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialSuite {
    pub alpha: f64,
}

#[inline]
fn simes_crit(i: usize, l: usize, alpha: f64) -> f64 {
    // i/l first so the last critical value is exactly α
    alpha * (i as f64 / l as f64)
}

/// Simes local test of an ascending vector.
pub fn simes_local(q: &[f64], alpha: f64) -> bool {
    let l = q.len();
    q.iter()
        .enumerate()
        .any(|(i, &v)| v <= simes_crit(i + 1, l, alpha))
}

impl LocalTestSuite for SimesSuite {
    fn test(&self, sorted: &[f64]) -> bool {
        simes_local(sorted, self.alpha)
    }

    fn name(&self) -> &str {
        "simes"
    }
}

impl LocalTestSuite for BonferroniSuite {
    fn test(&self, sorted: &[f64]) -> bool {
        !sorted.is_empty() && sorted[0] <= self.alpha / sorted.len() as f64
    }

    fn name(&self) -> &str {
        "bonferroni"
    }
}

impl LocalTestSuite for TrivialSuite {
    fn test(&self, sorted: &[f64]) -> bool {
        match sorted.len() {
            0 => false,
            1 => sorted[0] <= self.alpha,
            _ => true,
        }
    }

    fn name(&self) -> &str {
        "trivial"
    }
}

impl LocalTestSuite for BuProcedure {
    fn test(&self, sorted: &[f64]) -> bool {
        self.local_test(sorted)
    }

    fn name(&self) -> &str {
        "bu"
    }
}

/// Reject `p_k ≤ α/K`.
pub fn bonferroni(p: &[f64], alpha: f64) -> DecisionVector {
    let level = alpha / p.len() as f64;
    DecisionVector::new(p.iter().map(|&v| v <= level).collect())
}

/// Holm's step-down procedure.
pub fn holm(p: &[f64], alpha: f64) -> DecisionVector {
    let s = SortedPValues::new(p);
    let n = p.len();
    let mut flags = vec![false; n];
    for (r, &q) in s.sorted.iter().enumerate() {
        if q > alpha / (n - r) as f64 {
            break;
        }
        flags[r] = true;
    }
    s.unsort(&flags)
}

/// Hommel's procedure in its classical step-up form.
///
/// Let `j` be the largest size with `p_(K−j+k) > kα/j` for all `k ≤ j`.
/// Without such `j` everything is rejected; otherwise `p_i ≤ α/j` is.
pub fn hommel(p: &[f64], alpha: f64) -> DecisionVector {
    let n = p.len();
    let s = SortedPValues::new(p);
    let q = &s.sorted;
    let j = (1..=n)
        .rev()
        .find(|&j| (1..=j).all(|k| q[n - j + k - 1] > simes_crit(k, j, alpha)));
    match j {
        None => DecisionVector::new(vec![true; n]),
        Some(j) => {
            let level = simes_crit(1, j, alpha);
            DecisionVector::new(p.iter().map(|&v| v <= level).collect())
        }
    }
}

/// Gou's Hybrid-0: scan `i = 1..K`; at the first `i` with
/// `p_(K−i+1) ≤ (i+1)α/(2i)`, reject every `p_j ≤ α/i` and stop.
pub fn gou_hybrid0(p: &[f64], alpha: f64) -> DecisionVector {
    let n = p.len();
    let s = SortedPValues::new(p);
    for i in 1..=n {
        let crit = (i + 1) as f64 / (2 * i) as f64 * alpha;
        if s.sorted[n - i] <= crit {
            let level = alpha / i as f64;
            return DecisionVector::new(p.iter().map(|&v| v <= level).collect());
        }
    }
    DecisionVector::none(n)
}

/// Closed testing by explicit enumeration of every intersection.
pub fn closed_testing_bruteforce<S: LocalTestSuite + ?Sized>(
    suite: &S,
    p: &[f64],
) -> Result<DecisionVector> {
    let n = p.len();
    if n > BRUTE_FORCE_MAX_K {
        return Err(Error::TooLarge {
            k: n,
            max: BRUTE_FORCE_MAX_K,
        });
    }
    let mut keep = vec![true; n];
    let mut sub = Vec::with_capacity(n);
    for mask in 1u32..(1 << n) {
        sub.clear();
        sub.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| p[i]));
        sub.sort_by(f64::total_cmp);
        if !suite.test(&sub) {
            for (i, k) in keep.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *k = false;
                }
            }
        }
    }
    Ok(DecisionVector::new(keep))
}

/// Closed Stouffer test for two hypotheses.
pub fn closed_stouffer2(p1: f64, p2: f64, alpha: f64) -> DecisionVector {
    let z = |p: f64| normal_quantile(p.clamp(1e-300, 1.0 - 1e-16)).expect("clamped into (0,1)");
    let global = z(p1) + z(p2) <= std::f64::consts::SQRT_2 * z(alpha);
    DecisionVector::new(vec![global && p1 <= alpha, global && p2 <= alpha])
}

/// `SubProd_k` for every coordinate of an ascending vector: the product of
/// `φ_ℓ` over the hardest size-`ℓ` subset containing `q_k`, `ℓ < K`.
pub fn sub_products<S: LocalTestSuite + ?Sized>(suite: &S, q: &[f64]) -> Vec<bool> {
    let n = q.len();
    if n == 1 {
        // empty product
        return vec![true];
    }
    let mut out = vec![false; n];
    let mut sub: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        sub.clear();
        sub.push(q[k]);
        let mut ok = suite.test(&sub);
        // others in descending order
        let mut others = (0..n).rev().filter(|&i| i != k);
        for _ in 2..n {
            if !ok {
                break;
            }
            let v = q[others.next().expect("n-1 others")];
            let pos = sub.partition_point(|&x| x <= v);
            sub.insert(pos, v);
            ok = suite.test(&sub);
        }
        out[k] = ok;
    }
    out
}

/// `S(q) = Σ_k a_k(q) · SubProd_k(q)` on an ascending vector.
fn last_step_score<C: Coefficients>(c: &C, q: &[f64], sub: &[bool]) -> f64 {
    let mut h_prod = 1.0;
    let mut sum = 0.0;
    for (&u, &keep) in q.iter().zip(sub) {
        let (f, h) = c.fh(u);
        h_prod *= h;
        if keep {
            sum += f;
        }
    }
    h_prod * sum
}

/// A symmetric monotone suite with its complete-null test replaced by the
/// objective-optimal last step.
#[derive(Debug, Clone)]
pub struct LastStepProcedure<S> {
    suite: S,
    coeffs: Projected,
    table: ThresholdTable,
}

/// Calibrates the last-step test on top of `suite`'s proper-subset tests.
pub fn last_step_improve<S: LocalTestSuite>(
    suite: S,
    obj: &ObjectiveSpec,
    k: usize,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<LastStepProcedure<S>> {
    if !(suite.is_symmetric() && suite.is_monotone()) {
        return Err(Error::UnsupportedSuite);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let coeffs = projected_fh(obj)?;
    let rank = check_calibration_args(alpha, b)?;
    let scores: Vec<f64> = (0..b)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(k),
            |q, i| {
                draw_sorted_uniforms(seed, domain::LAST_STEP_CALIBRATION, k, i, q);
                last_step_score(&coeffs, q, &sub_products(&suite, q))
            },
        )
        .collect();
    let t = order_statistic(scores, rank);
    let name = suite.name().to_string();
    let table = ThresholdTable {
        alpha,
        k,
        b,
        seed,
        objective: obj.clone(),
        fingerprint: fingerprint(obj, alpha, Some(&name)),
        suite: Some(name),
        thresholds: vec![t],
    };
    Ok(LastStepProcedure {
        suite,
        coeffs,
        table,
    })
}

/// Improved Hommel: Simes sub-tests plus the last step.
pub fn improved_hommel(
    obj: &ObjectiveSpec,
    k: usize,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<LastStepProcedure<SimesSuite>> {
    last_step_improve(SimesSuite { alpha }, obj, k, alpha, b, seed)
}

impl<S: LocalTestSuite> LastStepProcedure<S> {
    pub fn table(&self) -> &ThresholdTable {
        &self.table
    }

    pub fn threshold(&self) -> f64 {
        self.table.thresholds[0]
    }

    pub fn suite(&self) -> &S {
        &self.suite
    }

    /// Last-step score of `p` in any order.
    pub fn score(&self, p: &[f64]) -> f64 {
        let s = SortedPValues::new(p);
        last_step_score(
            &self.coeffs,
            &s.sorted,
            &sub_products(&self.suite, &s.sorted),
        )
    }

    pub fn apply(&self, p: &[f64]) -> Result<DecisionVector> {
        if p.len() != self.table.k {
            return Err(Error::LengthMismatch {
                expected: self.table.k,
                got: p.len(),
            });
        }
        let s = SortedPValues::new(p);
        let sub = sub_products(&self.suite, &s.sorted);
        let global = last_step_score(&self.coeffs, &s.sorted, &sub) > self.threshold();
        let flags: Vec<bool> = sub.iter().map(|&x| x && global).collect();
        Ok(s.unsort(&flags))
    }
}

impl LastStepProcedure<SimesSuite> {
    /// Rebuilds an improved-Hommel procedure from a stored table.
    pub fn from_table(table: ThresholdTable) -> Result<Self> {
        if table.suite.as_deref() != Some("simes") {
            return Err(Error::InvalidConfig(
                "only last-step tables over the simes suite can be loaded".into(),
            ));
        }
        table.check_fingerprint(&table.objective)?;
        let coeffs = projected_fh(&table.objective)?;
        Ok(Self {
            suite: SimesSuite { alpha: table.alpha },
            coeffs,
            table,
        })
    }
}
