//! The bottom-up engine: score recursion, threshold calibration and
//! step-down application.
//!
//! For an ascending vector `q` the level-`k` score obeys
//!
//! ```text
//! s_k(q) = φ_{k-1}(q_1, q_3, …, q_k) · a_1^k(q)
//!        + h(q_1) · φ_{k-1}(q_2, …, q_k) · s_{k-1}(q_2, …, q_k)
//! ```
//!
//! with `φ_1(q) = I(q ≤ α)` and `φ_k = I(s_k > t_k)` above. Evaluated over the
//! sets `{m} ∪ {last l−1}` this needs `K(K+1)/2` score nodes for a whole
//! family. Level-1 scores carry the `h` factor, `s_1(u) = f(u)·h(u)`.

use rayon::prelude::*;

use crate::decision::{DecisionVector, SortedPValues};
use crate::error::{Error, Result};
use crate::objectives::{projected_fh, Coefficients, ObjectiveSpec, Projected, LOG_SPACE_ABOVE};
use crate::rng::{self, domain};
use crate::thresholds::{fingerprint, ThresholdTable};

/// Smallest calibration sample accepted.
pub const MIN_CALIBRATION_B: usize = 1000;

/// Every suffix score of one sorted family.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreStack {
    k: usize,
    alpha: f64,
    /// Node scores, level by level; level `l` holds `K − l + 1` nodes.
    nodes: Vec<f64>,
    passes: Vec<bool>,
    /// Score-node evaluations performed.
    pub node_evaluations: usize,
}

#[inline]
fn level_offset(k: usize, level: usize) -> usize {
    // Σ_{j<level} (k − j + 1)
    (level - 1) * (k + 1) - (level - 1) * level / 2
}

impl ScoreStack {
    fn index(&self, level: usize, m: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.k && m < self.k - level + 1);
        level_offset(self.k, level) + m
    }

    /// Score of the node `{q_m} ∪ {last level−1 values}` (0-based `m`).
    pub fn node(&self, level: usize, m: usize) -> f64 {
        self.nodes[self.index(level, m)]
    }

    /// Score of the suffix `q_r, …, q_K` (0-based `r`).
    pub fn suffix_score(&self, r: usize) -> f64 {
        self.node(self.k - r, r)
    }

    /// Local test of the suffix starting at 0-based `r`.
    pub fn suffix_flag(&self, r: usize) -> bool {
        self.passes[self.index(self.k - r, r)]
    }

    /// Suffix scores `s_K(q_1..q_K), s_{K−1}(q_2..q_K), …, s_1(q_K)`.
    pub fn scores(&self) -> Vec<f64> {
        (0..self.k).map(|r| self.suffix_score(r)).collect()
    }

    /// Local test flags aligned with [`ScoreStack::scores`].
    pub fn local_flags(&self) -> Vec<bool> {
        (0..self.k).map(|r| self.suffix_flag(r)).collect()
    }

    pub fn top(&self) -> f64 {
        self.suffix_score(0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Step-down decisions in sorted order.
    pub fn step_down(&self) -> Vec<bool> {
        let run = (0..self.k).take_while(|&r| self.suffix_flag(r)).count();
        (0..self.k).map(|r| r < run).collect()
    }
}

/// Reusable buffers for the score recursion.
#[derive(Debug, Default, Clone)]
pub(crate) struct Workspace {
    s: Vec<f64>,
    a1: Vec<f64>,
    pass: Vec<bool>,
    h: Vec<f64>,
}

/// Runs the recursion on `q`; returns the top score.
///
/// `t[j]` is `t_{j+2}`; entries up to `t_{K−1}` are read, and `t_K` too when
/// present, to fill the top-level flag.
pub(crate) fn fill_scores<C: Coefficients>(
    q: &[f64],
    t: &[f64],
    alpha: f64,
    c: &C,
    ws: &mut Workspace,
) -> f64 {
    let n = q.len();
    let total = n * (n + 1) / 2;
    ws.s.clear();
    ws.s.resize(total, 0.0);
    ws.a1.clear();
    ws.a1.resize(total, 0.0);
    ws.pass.clear();
    ws.pass.resize(total, false);
    ws.h.clear();
    let log_mode = n > LOG_SPACE_ABOVE;

    for (m, &u) in q.iter().enumerate() {
        let (f, h) = c.fh(u);
        ws.h.push(h);
        let a = f * h;
        ws.a1[m] = if log_mode { a.ln() } else { a };
        ws.s[m] = a;
        ws.pass[m] = u <= alpha;
    }

    for level in 2..=n {
        let prev = level_offset(n, level - 1);
        let cur = level_offset(n, level);
        // 0-based index of the second element shared by every node here.
        let j = n - level + 1;
        let hj = ws.h[j];
        let tl = t.get(level - 2).copied();
        let drop_first_pass = ws.pass[prev + j];
        let drop_first_score = ws.s[prev + j];
        for m in 0..=(n - level) {
            let a1 = if log_mode {
                ws.a1[prev + m] + hj.ln()
            } else {
                ws.a1[prev + m] * hj
            };
            ws.a1[cur + m] = a1;
            let mut s = 0.0;
            if ws.pass[prev + m] {
                s += if log_mode { a1.exp() } else { a1 };
            }
            if drop_first_pass {
                s += ws.h[m] * drop_first_score;
            }
            ws.s[cur + m] = s;
            ws.pass[cur + m] = tl.is_some_and(|t| s > t);
        }
    }
    ws.s[total - 1]
}

/// All suffix scores of an ascending family.
///
/// `thresholds[j]` is `t_{j+2}`; at least `t_2, …, t_{K−1}` are required.
pub fn compute_scores<C: Coefficients>(
    p: &SortedPValues,
    thresholds: &[f64],
    alpha: f64,
    c: &C,
) -> Result<ScoreStack> {
    let k = p.len();
    if k >= 2 && thresholds.len() < k - 2 {
        return Err(Error::MissingThreshold(thresholds.len() + 2));
    }
    let mut ws = Workspace::default();
    fill_scores(&p.sorted, thresholds, alpha, c, &mut ws);
    Ok(ScoreStack {
        k,
        alpha,
        node_evaluations: ws.s.len(),
        nodes: ws.s,
        passes: ws.pass,
    })
}

/// Rank of the conformal order statistic, `⌈(1−α)(B+1)⌉`.
pub fn conformal_rank(alpha: f64, b: usize) -> Result<usize> {
    let raw = (1.0 - alpha) * (b as f64 + 1.0);
    // Guard against 0.95·1000 landing a hair above an integer.
    let rank = (raw - 1e-9).ceil().max(1.0) as usize;
    if rank > b {
        return Err(Error::CalibrationInfeasible { rank, b });
    }
    Ok(rank)
}

pub(crate) fn check_calibration_args(alpha: f64, b: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let rank = conformal_rank(alpha, b)?;
    if b < MIN_CALIBRATION_B {
        return Err(Error::TooFewSamples {
            b,
            min: MIN_CALIBRATION_B,
        });
    }
    Ok(rank)
}

/// `rank`-th smallest (1-based) of `scores`.
pub(crate) fn order_statistic(mut scores: Vec<f64>, rank: usize) -> f64 {
    let (_, t, _) = scores.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *t
}

/// Fills `buf` with `k` sorted uniforms from stream `(seed, domain, k, b)`.
pub(crate) fn draw_sorted_uniforms(seed: u64, dom: u64, k: usize, b: usize, buf: &mut Vec<f64>) {
    let mut r = rng::stream(seed, dom, k as u64, b as u64);
    buf.clear();
    buf.extend((0..k).map(|_| rng::open01(&mut r)));
    buf.sort_by(f64::total_cmp);
}

/// Thresholds `t_2, …, t_K` for arbitrary projected coefficients.
pub fn calibrate_coefficients<C: Coefficients>(
    c: &C,
    k: usize,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let rank = check_calibration_args(alpha, b)?;
    let mut t: Vec<f64> = Vec::with_capacity(k.saturating_sub(1));
    for level in 2..=k {
        let fixed = &t;
        let scores: Vec<f64> = (0..b)
            .into_par_iter()
            .map_init(
                || (Workspace::default(), Vec::with_capacity(level)),
                |(ws, q), i| {
                    draw_sorted_uniforms(seed, domain::BU_CALIBRATION, level, i, q);
                    fill_scores(q, fixed, alpha, c, ws)
                },
            )
            .collect();
        let tk = order_statistic(scores, rank);
        t.push(tk);
    }
    Ok(t)
}

/// Calibrates a bottom-up threshold table for an exchangeable objective.
pub fn calibrate(
    obj: &ObjectiveSpec,
    k: usize,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<ThresholdTable> {
    let c = projected_fh(obj)?;
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let thresholds = calibrate_coefficients(&c, k, alpha, b, seed)?;
    Ok(ThresholdTable {
        alpha,
        k,
        b,
        seed,
        objective: obj.clone(),
        suite: None,
        thresholds,
        fingerprint: fingerprint(obj, alpha, None),
    })
}

/// Applies precomputed thresholds with arbitrary coefficients.
pub fn apply_coefficients<C: Coefficients>(
    p: &[f64],
    thresholds: &[f64],
    alpha: f64,
    c: &C,
) -> Result<DecisionVector> {
    let k = p.len();
    if k == 0 {
        return Ok(DecisionVector::none(0));
    }
    if thresholds.len() < k - 1 {
        return Err(Error::MissingThreshold(thresholds.len() + 2));
    }
    let sorted = SortedPValues::new(p);
    let stack = compute_scores(&sorted, thresholds, alpha, c)?;
    Ok(sorted.unsort(&stack.step_down()))
}

/// Bottom-up step-down decisions for `p`.
pub fn apply_bu(p: &[f64], tt: &ThresholdTable, obj: &ObjectiveSpec) -> Result<DecisionVector> {
    BuProcedure::new(tt.clone(), obj)?.apply(p)
}

/// A calibrated bottom-up procedure ready to apply.
#[derive(Debug, Clone)]
pub struct BuProcedure {
    table: ThresholdTable,
    coeffs: Projected,
}

impl BuProcedure {
    pub fn new(table: ThresholdTable, obj: &ObjectiveSpec) -> Result<Self> {
        if table.suite.is_some() {
            return Err(Error::InvalidConfig(
                "table belongs to a last-step procedure".into(),
            ));
        }
        table.check_fingerprint(obj)?;
        let coeffs = projected_fh(obj)?;
        Ok(Self { table, coeffs })
    }

    pub fn from_table(table: ThresholdTable) -> Result<Self> {
        let obj = table.objective.clone();
        Self::new(table, &obj)
    }

    pub fn table(&self) -> &ThresholdTable {
        &self.table
    }

    pub fn coefficients(&self) -> &Projected {
        &self.coeffs
    }

    pub fn apply(&self, p: &[f64]) -> Result<DecisionVector> {
        if p.len() != self.table.k {
            return Err(Error::LengthMismatch {
                expected: self.table.k,
                got: p.len(),
            });
        }
        apply_coefficients(p, &self.table.thresholds, self.table.alpha, &self.coeffs)
    }

    pub fn scores(&self, p: &[f64]) -> Result<ScoreStack> {
        compute_scores(
            &SortedPValues::new(p),
            &self.table.thresholds,
            self.table.alpha,
            &self.coeffs,
        )
    }

    /// The procedure's local test of an arbitrary subset, `φ_ℓ(q)`.
    pub fn local_test(&self, sorted: &[f64]) -> bool {
        bu_local_test(
            sorted,
            &self.table.thresholds,
            self.table.alpha,
            &self.coeffs,
        )
    }
}

/// `φ_ℓ` of the bottom-up suite on an ascending `ℓ`-vector.
pub fn bu_local_test<C: Coefficients>(sorted: &[f64], t: &[f64], alpha: f64, c: &C) -> bool {
    match sorted.len() {
        0 => false,
        1 => sorted[0] <= alpha,
        l => {
            let mut ws = Workspace::default();
            fill_scores(sorted, t, alpha, c, &mut ws) > t[l - 2]
        }
    }
}

/// K = 2 optimal score `a_1(p)·I(p_1 ≤ α) + a_2(p)·I(p_2 ≤ α)`.
pub fn omt2_score<A1, A2>(p1: f64, p2: f64, a1: &A1, a2: &A2, alpha: f64) -> f64
where
    A1: Fn(f64, f64) -> f64,
    A2: Fn(f64, f64) -> f64,
{
    let mut s = 0.0;
    if p1 <= alpha {
        s += a1(p1, p2);
    }
    if p2 <= alpha {
        s += a2(p1, p2);
    }
    s
}

/// Threshold of the K = 2 optimal procedure for (possibly asymmetric) coefficients.
pub fn omt2_calibrate<A1, A2>(a1: &A1, a2: &A2, alpha: f64, b: usize, seed: u64) -> Result<f64>
where
    A1: Fn(f64, f64) -> f64 + Sync,
    A2: Fn(f64, f64) -> f64 + Sync,
{
    let rank = check_calibration_args(alpha, b)?;
    let scores: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, domain::OMT2_CALIBRATION, 2, i as u64);
            let p1 = rng::open01(&mut r);
            let p2 = rng::open01(&mut r);
            omt2_score(p1, p2, a1, a2, alpha)
        })
        .collect();
    Ok(order_statistic(scores, rank))
}

/// Decisions `D_k = I(p_k ≤ α)·I(s(p) > t_2)`.
pub fn omt2_apply<A1, A2>(p1: f64, p2: f64, a1: &A1, a2: &A2, alpha: f64, t2: f64) -> DecisionVector
where
    A1: Fn(f64, f64) -> f64,
    A2: Fn(f64, f64) -> f64,
{
    let global = omt2_score(p1, p2, a1, a2, alpha) > t2;
    DecisionVector::new(vec![global && p1 <= alpha, global && p2 <= alpha])
}

/// Non-exchangeable bottom-up procedure for three hypotheses.
///
/// Pair and triple calibrations draw from the same streams as
/// [`calibrate`], so identical per-hypothesis pairs reproduce the
/// exchangeable thresholds.
#[derive(Debug, Clone)]
pub struct GeneralBu3 {
    pub alpha: f64,
    per: [Projected; 3],
    /// Thresholds of the pairs {1,2}, {1,3}, {2,3}.
    pub t_pairs: [f64; 3],
    pub t_triple: f64,
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn pair_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => unreachable!("pairs of three hypotheses"),
    }
}

impl GeneralBu3 {
    fn pair_score(&self, i: usize, j: usize, ui: f64, uj: f64) -> f64 {
        let (fi, hi) = self.per[i].fh(ui);
        let (fj, hj) = self.per[j].fh(uj);
        let mut s = 0.0;
        if ui <= self.alpha {
            s += fi * hi * hj;
        }
        if uj <= self.alpha {
            s += fj * hi * hj;
        }
        s
    }

    fn pair_test(&self, i: usize, j: usize, ui: f64, uj: f64) -> bool {
        self.pair_score(i, j, ui, uj) > self.t_pairs[pair_index(i, j)]
    }

    /// Triple score `h_1h_2h_3 · Σ_i f_i φ_1(u_i) φ_{ij} φ_{ik}`.
    pub fn triple_score(&self, u: &[f64; 3]) -> f64 {
        let fh: Vec<(f64, f64)> = (0..3).map(|i| self.per[i].fh(u[i])).collect();
        let h: f64 = fh.iter().map(|x| x.1).product();
        let mut sum = 0.0;
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            if u[i] <= self.alpha
                && self.pair_test(i, j, u[i], u[j])
                && self.pair_test(i, k, u[i], u[k])
            {
                sum += fh[i].0;
            }
        }
        h * sum
    }

    pub fn calibrate(obj: &ObjectiveSpec, alpha: f64, b: usize, seed: u64) -> Result<Self> {
        let per = match obj {
            ObjectiveSpec::General(per) if per.len() == 3 => {
                [per[0].clone(), per[1].clone(), per[2].clone()]
            }
            ObjectiveSpec::General(per) => {
                return Err(Error::InvalidObjective(format!(
                    "general K = 3 procedure needs 3 hypotheses, got {}",
                    per.len()
                )))
            }
            ObjectiveSpec::Exchangeable { .. } => {
                return Err(Error::InvalidObjective(
                    "general K = 3 procedure needs a general objective".into(),
                ))
            }
        };
        let rank = check_calibration_args(alpha, b)?;
        let mut proc = Self {
            alpha,
            per,
            t_pairs: [0.0; 3],
            t_triple: 0.0,
        };
        for (idx, &(i, j)) in PAIRS.iter().enumerate() {
            let this = &proc;
            let scores: Vec<f64> = (0..b)
                .into_par_iter()
                .map_init(Vec::new, |q, r| {
                    draw_sorted_uniforms(seed, domain::BU_CALIBRATION, 2, r, q);
                    this.pair_score(i, j, q[0], q[1])
                })
                .collect();
            proc.t_pairs[idx] = order_statistic(scores, rank);
        }
        let this = &proc;
        let scores: Vec<f64> = (0..b)
            .into_par_iter()
            .map_init(Vec::new, |q, r| {
                draw_sorted_uniforms(seed, domain::BU_CALIBRATION, 3, r, q);
                this.triple_score(&[q[0], q[1], q[2]])
            })
            .collect();
        proc.t_triple = order_statistic(scores, rank);
        Ok(proc)
    }

    pub fn apply(&self, p: &[f64]) -> Result<DecisionVector> {
        if p.len() != 3 {
            return Err(Error::LengthMismatch {
                expected: 3,
                got: p.len(),
            });
        }
        let u = [p[0], p[1], p[2]];
        let global = self.triple_score(&u) > self.t_triple;
        let d = (0..3)
            .map(|k| {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                global
                    && u[k] <= self.alpha
                    && self.pair_test(k, i, u[k], u[i])
                    && self.pair_test(k, j, u[k], u[j])
            })
            .collect();
        Ok(DecisionVector::new(d))
    }
}

/// Calibrates the non-exchangeable K = 3 procedure.
pub fn bu_general_k3(obj: &ObjectiveSpec, alpha: f64, b: usize, seed: u64) -> Result<GeneralBu3> {
    GeneralBu3::calibrate(obj, alpha, b, seed)
}
