//! Standard normal primitives and alternative p-value densities.
//!
//! The normal CDF uses the musl `erfc` (via `libm`), accurate to about one
//! ulp. The quantile starts from the Boost-derived `erfc_inv` in `statrs` and
//! takes one Newton step against that CDF. A p-value under a normal shift alternative is `p = Φ(X)` with
//! `X ~ N(θ, 1)`, so its density on (0,1) is `exp(θ·Φ⁻¹(p) − θ²/2)`.

use std::f64::consts::SQRT_2;

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Smallest p-value fed to density evaluation in the scoring hot path.
///
/// Densities diverge at 0; this keeps every coefficient finite.
pub const P_FLOOR: f64 = 1e-300;

/// Clamp applied to ingested p-values that are exactly 0 or 1.
pub const INGEST_CLAMP: f64 = 1e-15;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile. Errors outside the open unit interval.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain {
            value: u,
            domain: "(0, 1)",
        });
    }
    Ok(quantile_unchecked(u))
}

#[inline]
pub(crate) fn quantile_unchecked(u: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * u);
    if !x.is_finite() {
        return x;
    }
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density < 1e-300 {
        return x;
    }
    x - (normal_cdf(x) - u) / density
}

/// A piecewise-constant density on [0,1] with half-open cells `[b_i, b_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidDensity(msg.to_string()));
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return bad("need one value per interval");
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if breakpoints
            .windows(2)
            .any(|w| w[0] >= w[1] || w[0].is_nan())
        {
            return bad("breakpoints must be strictly ascending");
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("values must be positive and finite");
        }
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        cumulative.push(0.0);
        for (i, v) in values.iter().enumerate() {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + v * (breakpoints[i + 1] - breakpoints[i]));
        }
        let total = *cumulative.last().unwrap();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!(
                "density integrates to {total}, not 1"
            )));
        }
        Ok(Self {
            breakpoints,
            values,
            cumulative,
        })
    }

    /// The three-level density 3 / 1.4 / c with cuts at 0.03 and 0.05.
    pub fn s3() -> Self {
        let c = (1.0 - 3.0 * 0.03 - 1.4 * 0.02) / 0.95;
        Self::new(vec![0.0, 0.03, 0.05, 1.0], vec![3.0, 1.4, c])
            .expect("preset density is normalized")
    }

    /// The uniform density as a single cell.
    pub fn uniform() -> Self {
        Self::new(vec![0.0, 1.0], vec![1.0]).expect("uniform is normalized")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cell(&self, p: f64) -> usize {
        // Index of the cell [b_i, b_{i+1}) holding p.
        let i = self.breakpoints.partition_point(|b| *b <= p);
        i.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.values[self.cell(p)]
    }

    pub fn cdf(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let i = self.cell(p);
        self.cumulative[i] + self.values[i] * (p - self.breakpoints[i])
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let i = self
            .cumulative
            .partition_point(|c| *c <= u)
            .saturating_sub(1)
            .min(self.values.len() - 1);
        let p = self.breakpoints[i] + (u - self.cumulative[i]) / self.values[i];
        p.clamp(0.0, 1.0)
    }
}

/// Density of a p-value under the alternative.
#[derive(Debug, Clone, PartialEq)]
pub enum AlternativeDensity {
    NormalShift { theta: f64 },
    PiecewiseConstant(PiecewiseDensity),
}

impl AlternativeDensity {
    pub fn normal_shift(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta <= 0.0) {
            return Err(Error::InvalidDensity(format!(
                "normal shift needs a finite theta <= 0, got {theta}"
            )));
        }
        Ok(Self::NormalShift { theta })
    }

    /// Density at `p`, which must lie in (0,1).
    pub fn eval(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                value: p,
                domain: "(0, 1)",
            });
        }
        Ok(self.eval_unchecked(p))
    }

    /// Density at `p`, clamped into `[P_FLOOR, 1 - ε]` first.
    #[inline]
    pub fn eval_unchecked(&self, p: f64) -> f64 {
        match self {
            Self::NormalShift { theta } => {
                if *theta == 0.0 {
                    return 1.0;
                }
                let p = p.clamp(P_FLOOR, 1.0 - f64::EPSILON / 2.0);
                let z = quantile_unchecked(p);
                (theta * z - 0.5 * theta * theta).exp()
            }
            Self::PiecewiseConstant(pw) => pw.eval(p),
        }
    }

    /// Inverse-CDF transform of a uniform variate into a draw with this density.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Self::NormalShift { theta } => {
                if *theta == 0.0 {
                    return u;
                }
                normal_cdf(quantile_unchecked(u) + theta)
            }
            Self::PiecewiseConstant(pw) => pw.inverse_cdf(u),
        }
    }

    /// Probability that a p-value drawn from this density is at most `p`.
    pub fn cdf(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        match self {
            Self::NormalShift { theta } => normal_cdf(quantile_unchecked(p) - theta),
            Self::PiecewiseConstant(pw) => pw.cdf(p),
        }
    }
}

/// Inputs to the regime solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSpec {
    pub alpha: f64,
    pub k: usize,
    pub target_bonferroni_power: f64,
}

/// Shift θ at which Bonferroni at level α/K has the target one-sided power.
///
/// A target equal to α/K gives θ = 0.
pub fn solve_theta(spec: RegimeSpec) -> Result<f64> {
    let RegimeSpec {
        alpha,
        k,
        target_bonferroni_power: target,
    } = spec;
    if !(alpha > 0.0 && alpha < 1.0) || k == 0 {
        return Err(Error::InvalidConfig(format!(
            "regime needs alpha in (0,1) and K >= 1, got alpha = {alpha}, K = {k}"
        )));
    }
    let level = alpha / k as f64;
    if !(target >= level && target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target power {target} must lie in [{level}, 1)"
        )));
    }
    let theta = quantile_unchecked(level) - quantile_unchecked(target);
    Ok(theta.min(0.0))
}
