//! Exact power of bottom-up and improved-Hommel procedures for K ≤ 3 when the
//! alternative density is piecewise constant.
//!
//! Every score is constant on the cells of a product lattice built from the
//! density breakpoints, α, α/2 and the refined boundaries found so far, so
//! calibration and power reduce to finite sums over cells. Score atoms make
//! the strict rule `s > t` conservative; here each level exhausts α exactly by
//! admitting the part of the tied cells whose smallest coordinate lies below a
//! boundary `b`, found by bisection on the exact tied null mass.

use crate::decision::{DecisionVector, SortedPValues};
use crate::distributions::AlternativeDensity;
use crate::error::{Error, Result};
use crate::objectives::{Coefficients, ExchangeableKind, Projected};
use crate::procedures_classical::{sub_products, SimesSuite};

const MAX_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSetup {
    pub k: usize,
    pub alpha: f64,
    pub density: AlternativeDensity,
    pub kind: ExchangeableKind,
}

impl PiecewiseSetup {
    /// K = 3, α = 0.05, the 3 / 1.4 / c density and the single-alternative objective.
    pub fn s3() -> Self {
        Self {
            k: 3,
            alpha: 0.05,
            density: AlternativeDensity::PiecewiseConstant(
                crate::distributions::PiecewiseDensity::s3(),
            ),
            kind: ExchangeableKind::Single,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactProcedure {
    Bu,
    Ih,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub procedure: ExactProcedure,
    /// Subset sizes whose tests were calibrated exactly.
    pub levels: Vec<usize>,
    /// Critical score atom per calibrated level.
    pub critical_scores: Vec<f64>,
    /// Refined smallest-coordinate boundary per calibrated level.
    pub boundaries: Vec<f64>,
    /// Single-alternative power `Σ_k ∫ g(p_k) D_k(p) dp`, the 1/K factor dropped
    /// as in the objective coefficients.
    pub tpr: f64,
    /// Power per false null with one false null placed uniformly, `tpr / K`.
    pub tpr_per_hypothesis: f64,
    /// Null mass of the complete-null rejection region.
    pub null_level: f64,
    /// The exactly calibrated procedure.
    pub model: ExactModel,
}

/// Decision rule of an exactly calibrated procedure.
#[derive(Debug, Clone)]
pub struct ExactModel {
    engine: Engine,
}

impl ExactModel {
    pub fn decide(&self, p: &[f64]) -> Result<DecisionVector> {
        if p.len() != self.engine.k {
            return Err(Error::LengthMismatch {
                expected: self.engine.k,
                got: p.len(),
            });
        }
        let s = SortedPValues::new(p);
        Ok(s.unsort(&self.engine.decide(&s.sorted)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RefinedTest {
    critical: f64,
    boundary: f64,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl RefinedTest {
    fn rejects(&self, score: f64, min: f64) -> bool {
        if same(score, self.critical) {
            min < self.boundary
        } else {
            score > self.critical
        }
    }
}

#[derive(Debug, Clone)]
struct Engine {
    k: usize,
    alpha: f64,
    procedure: ExactProcedure,
    coeffs: Projected,
    /// `tests[ℓ]` is the exact test of size `ℓ` once calibrated.
    tests: Vec<Option<RefinedTest>>,
}

impl Engine {
    fn phi(&self, q: &[f64]) -> bool {
        let l = q.len();
        if l == 1 {
            return q[0] <= self.alpha;
        }
        let uses_simes = self.procedure == ExactProcedure::Ih && l < self.k;
        if uses_simes {
            return crate::procedures_classical::simes_local(q, self.alpha);
        }
        let test = self.tests[l].expect("lower levels are calibrated first");
        test.rejects(self.score(q), q[0])
    }

    fn score(&self, q: &[f64]) -> f64 {
        match self.procedure {
            ExactProcedure::Bu => self.bu_score(q),
            ExactProcedure::Ih => {
                let sub = sub_products(&SimesSuite { alpha: self.alpha }, q);
                let mut h_prod = 1.0;
                let mut sum = 0.0;
                for (&u, &keep) in q.iter().zip(&sub) {
                    let (f, h) = self.coeffs.fh(u);
                    h_prod *= h;
                    if keep {
                        sum += f;
                    }
                }
                h_prod * sum
            }
        }
    }

    fn bu_score(&self, q: &[f64]) -> f64 {
        if q.len() == 1 {
            let (f, h) = self.coeffs.fh(q[0]);
            return f * h;
        }
        let a1 = q
            .iter()
            .fold(self.coeffs.f(q[0]), |acc, &u| acc * self.coeffs.h(u));
        let mut without_second = q.to_vec();
        without_second.remove(1);
        let mut s = 0.0;
        if self.phi(&without_second) {
            s += a1;
        }
        if self.phi(&q[1..]) {
            s += self.coeffs.h(q[0]) * self.bu_score(&q[1..]);
        }
        s
    }

    /// Decisions for an ascending family.
    fn decide(&self, q: &[f64]) -> Vec<bool> {
        let n = q.len();
        match self.procedure {
            ExactProcedure::Bu => {
                let mut out = vec![false; n];
                for r in 0..n {
                    if !self.phi(&q[r..]) {
                        break;
                    }
                    out[r] = true;
                }
                out
            }
            ExactProcedure::Ih => {
                let global = self.phi(q);
                let sub = sub_products(&SimesSuite { alpha: self.alpha }, q);
                sub.into_iter().map(|s| s && global).collect()
            }
        }
    }
}

/// All cells of the `dim`-fold product lattice over `axis`, as (lo, hi) per coordinate.
fn cells(axis: &[f64], dim: usize) -> Vec<Vec<(f64, f64)>> {
    let intervals: Vec<(f64, f64)> = axis.windows(2).map(|w| (w[0], w[1])).collect();
    let mut out: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|c| {
                intervals.iter().map(move |iv| {
                    let mut c = c.clone();
                    c.push(*iv);
                    c
                })
            })
            .collect();
    }
    out
}

fn volume(cell: &[(f64, f64)]) -> f64 {
    cell.iter().map(|(lo, hi)| hi - lo).product()
}

fn midpoint(cell: &[(f64, f64)]) -> Vec<f64> {
    cell.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
}

/// Null mass of the part of `cell` whose smallest coordinate is below `b`.
fn mass_below(cell: &[(f64, f64)], b: f64) -> f64 {
    let above: f64 = cell
        .iter()
        .map(|&(lo, hi)| (hi - lo.max(b)).max(0.0))
        .product();
    volume(cell) - above
}

fn insert_breakpoint(axis: &mut Vec<f64>, b: f64) {
    if !axis.contains(&b) {
        axis.push(b);
        axis.sort_by(f64::total_cmp);
    }
}

fn calibrate_level(engine: &Engine, axis: &[f64], level: usize) -> RefinedTest {
    let mut scored: Vec<(f64, Vec<(f64, f64)>)> = cells(axis, level)
        .into_iter()
        .map(|c| {
            let q = SortedPValues::new(&midpoint(&c)).sorted;
            (engine.score(&q), c)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let alpha = engine.alpha;
    let mut above = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let atom = scored[i].0;
        if atom <= 0.0 || same(atom, 0.0) {
            break;
        }
        let mut j = i;
        let mut mass = 0.0;
        while j < scored.len() && same(scored[j].0, atom) {
            mass += volume(&scored[j].1);
            j += 1;
        }
        if above + mass >= alpha {
            let need = alpha - above;
            let tied = &scored[i..j];
            let tied_mass = |b: f64| tied.iter().map(|(_, c)| mass_below(c, b)).sum::<f64>();
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if tied_mass(mid) < need {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return RefinedTest {
                critical: atom,
                boundary: 0.5 * (lo + hi),
            };
        }
        above += mass;
        i = j;
    }
    // Every positive-score cell fits under α.
    RefinedTest {
        critical: 0.0,
        boundary: 0.0,
    }
}

/// Exact calibration and power of a bottom-up or improved-Hommel procedure.
pub fn exact_power_piecewise(
    setup: &PiecewiseSetup,
    procedure: ExactProcedure,
) -> Result<ExactResult> {
    let pw = match &setup.density {
        AlternativeDensity::PiecewiseConstant(pw) => pw.clone(),
        AlternativeDensity::NormalShift { .. } => return Err(Error::NonPiecewise),
    };
    let k = setup.k;
    if k > MAX_K {
        return Err(Error::TooLarge { k, max: MAX_K });
    }
    if k < 2 {
        return Err(Error::InvalidConfig(
            "exact integration needs K >= 2".into(),
        ));
    }
    let alpha = setup.alpha;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let mut axis: Vec<f64> = pw.breakpoints().to_vec();
    insert_breakpoint(&mut axis, alpha);
    insert_breakpoint(&mut axis, alpha / 2.0);

    let mut engine = Engine {
        k,
        alpha,
        procedure,
        coeffs: Projected {
            kind: setup.kind,
            density: setup.density.clone(),
        },
        tests: vec![None; k + 1],
    };
    let levels: Vec<usize> = match procedure {
        ExactProcedure::Bu => (2..=k).collect(),
        ExactProcedure::Ih => vec![k],
    };
    let mut critical_scores = Vec::new();
    let mut boundaries = Vec::new();
    for &l in &levels {
        let t = calibrate_level(&engine, &axis, l);
        engine.tests[l] = Some(t);
        critical_scores.push(t.critical);
        boundaries.push(t.boundary);
        if t.boundary > 0.0 {
            insert_breakpoint(&mut axis, t.boundary);
        }
    }

    let mut tpr = 0.0;
    let mut null_level = 0.0;
    for cell in cells(&axis, k) {
        let x = midpoint(&cell);
        let vol = volume(&cell);
        let s = SortedPValues::new(&x);
        if engine.phi(&s.sorted) {
            null_level += vol;
        }
        let d = s.unsort(&engine.decide(&s.sorted));
        for i in 0..k {
            if d[i] {
                tpr += vol * pw.eval(x[i]);
            }
        }
    }
    Ok(ExactResult {
        procedure,
        levels,
        critical_scores,
        boundaries,
        tpr,
        tpr_per_hypothesis: tpr / k as f64,
        null_level,
        model: ExactModel { engine },
    })
}
