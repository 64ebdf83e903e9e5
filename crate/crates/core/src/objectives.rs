//! Power objectives and their projected coefficient functions.
//!
//! An exchangeable objective factors its coefficients as
//! `a_k(u) = f(u_k) · Π_i h(u_i)`:
//!
//! | kind    | f(u)          | h(u)        |
//! |---------|---------------|-------------|
//! | Single  | g(u)          | 1           |
//! | Mix     | 2g(u)/(1+g(u))| (1+g(u))/2  |
//! | Average | 1             | g(u)        |
//!
//! Positive constant factors are dropped; thresholds are score quantiles, so
//! rescaling every coefficient leaves decisions unchanged.

use serde::{Deserialize, Serialize};

use crate::distributions::{AlternativeDensity, PiecewiseDensity};
use crate::error::{Error, Result};

/// Prefix length above which coefficient products are accumulated in logs.
pub const LOG_SPACE_ABOVE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeableKind {
    Single,
    Mix,
    Average,
}

impl ExchangeableKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Single => "single",
            Self::Mix => "mix",
            Self::Average => "average",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single" | "pi1" => Ok(Self::Single),
            "mix" | "pimix" => Ok(Self::Mix),
            "average" | "avg" | "piavg" => Ok(Self::Average),
            other => Err(Error::InvalidObjective(format!("unknown kind '{other}'"))),
        }
    }
}

/// Projected `(f, h)` pair evaluated from one density.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub kind: ExchangeableKind,
    pub density: AlternativeDensity,
}

/// Anything that can produce projected coefficient values `(f(u), h(u))`.
pub trait Coefficients: Sync {
    fn fh(&self, u: f64) -> (f64, f64);

    fn f(&self, u: f64) -> f64 {
        self.fh(u).0
    }

    fn h(&self, u: f64) -> f64 {
        self.fh(u).1
    }
}

impl Coefficients for Projected {
    #[inline]
    fn fh(&self, u: f64) -> (f64, f64) {
        let g = self.density.eval_unchecked(u);
        match self.kind {
            ExchangeableKind::Single => (g, 1.0),
            ExchangeableKind::Mix => (2.0 * g / (1.0 + g), 0.5 * (1.0 + g)),
            ExchangeableKind::Average => (1.0, g),
        }
    }
}

impl<C: Coefficients + ?Sized> Coefficients for &C {
    fn fh(&self, u: f64) -> (f64, f64) {
        (**self).fh(u)
    }
}

/// A power objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectiveRepr", into = "ObjectiveRepr")]
pub enum ObjectiveSpec {
    Exchangeable {
        kind: ExchangeableKind,
        density: AlternativeDensity,
    },
    /// One projected pair per hypothesis, in hypothesis order.
    General(Vec<Projected>),
}

impl ObjectiveSpec {
    pub fn normal(kind: ExchangeableKind, theta: f64) -> Result<Self> {
        Ok(Self::Exchangeable {
            kind,
            density: AlternativeDensity::normal_shift(theta)?,
        })
    }

    pub fn general_normal(kind: ExchangeableKind, thetas: &[f64]) -> Result<Self> {
        let per = thetas
            .iter()
            .map(|&t| {
                Ok(Projected {
                    kind,
                    density: AlternativeDensity::normal_shift(t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::General(per))
    }

    pub fn is_exchangeable(&self) -> bool {
        matches!(self, Self::Exchangeable { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Exchangeable { kind, .. } => kind.name(),
            Self::General(_) => "general",
        }
    }
}

/// The `(f, h)` pair of an exchangeable objective.
pub fn projected_fh(obj: &ObjectiveSpec) -> Result<Projected> {
    match obj {
        ObjectiveSpec::Exchangeable { kind, density } => Ok(Projected {
            kind: *kind,
            density: density.clone(),
        }),
        ObjectiveSpec::General(_) => Err(Error::UnsupportedObjective),
    }
}

/// `f(min) · Π h(p_i)` over an ascending prefix.
pub fn coefficient_a1<C: Coefficients>(c: &C, sorted_prefix: &[f64]) -> f64 {
    assert!(!sorted_prefix.is_empty(), "prefix must be nonempty");
    let f0 = c.f(sorted_prefix[0]);
    if sorted_prefix.len() > LOG_SPACE_ABOVE {
        let log_h: f64 = sorted_prefix.iter().map(|&u| c.h(u).ln()).sum();
        (f0.ln() + log_h).exp()
    } else {
        sorted_prefix.iter().fold(f0, |acc, &u| acc * c.h(u))
    }
}

/// Coefficients `a_k^{(I)}` of a general objective restricted to `subset_indices`.
///
/// `subset_indices` are 0-based hypothesis indices; `p_subset[k]` belongs to
/// hypothesis `subset_indices[k]`.
pub fn general_coefficients(
    obj: &ObjectiveSpec,
    subset_indices: &[usize],
    p_subset: &[f64],
) -> Result<Vec<f64>> {
    let per = match obj {
        ObjectiveSpec::General(per) => per,
        ObjectiveSpec::Exchangeable { .. } => {
            return Err(Error::InvalidObjective(
                "general coefficients need a general objective".into(),
            ))
        }
    };
    if subset_indices.len() != p_subset.len() {
        return Err(Error::LengthMismatch {
            expected: subset_indices.len(),
            got: p_subset.len(),
        });
    }
    let k = per.len();
    let mut fs = Vec::with_capacity(p_subset.len());
    let mut h_prod = 1.0;
    for (&j, &u) in subset_indices.iter().zip(p_subset) {
        let pair = per.get(j).ok_or(Error::IndexOutOfRange { index: j, k })?;
        let (f, h) = pair.fh(u);
        fs.push(f);
        h_prod *= h;
    }
    Ok(fs.into_iter().map(|f| f * h_prod).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PiecewiseRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// Config / JSON form of an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    piecewise: Option<PiecewiseRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_hypothesis: Option<Vec<ObjectiveRepr>>,
}

fn density_repr(d: &AlternativeDensity) -> (Option<f64>, Option<PiecewiseRepr>) {
    match d {
        AlternativeDensity::NormalShift { theta } => (Some(*theta), None),
        AlternativeDensity::PiecewiseConstant(pw) => (
            None,
            Some(PiecewiseRepr {
                breakpoints: pw.breakpoints().to_vec(),
                values: pw.values().to_vec(),
            }),
        ),
    }
}

fn density_from(theta: Option<f64>, pw: Option<PiecewiseRepr>) -> Result<AlternativeDensity> {
    match (theta, pw) {
        (Some(t), None) => AlternativeDensity::normal_shift(t),
        (None, Some(p)) => Ok(AlternativeDensity::PiecewiseConstant(
            PiecewiseDensity::new(p.breakpoints, p.values)?,
        )),
        _ => Err(Error::InvalidObjective(
            "give exactly one of theta or piecewise".into(),
        )),
    }
}

impl From<ObjectiveSpec> for ObjectiveRepr {
    fn from(obj: ObjectiveSpec) -> Self {
        match obj {
            ObjectiveSpec::Exchangeable { kind, density } => {
                let (theta, piecewise) = density_repr(&density);
                Self {
                    kind: kind.name().into(),
                    theta,
                    piecewise,
                    per_hypothesis: None,
                }
            }
            ObjectiveSpec::General(per) => Self {
                kind: "general".into(),
                theta: None,
                piecewise: None,
                per_hypothesis: Some(
                    per.into_iter()
                        .map(|p| {
                            ObjectiveRepr::from(ObjectiveSpec::Exchangeable {
                                kind: p.kind,
                                density: p.density,
                            })
                        })
                        .collect(),
                ),
            },
        }
    }
}

impl TryFrom<ObjectiveRepr> for ObjectiveSpec {
    type Error = Error;

    fn try_from(r: ObjectiveRepr) -> Result<Self> {
        if r.kind == "general" {
            let per = r.per_hypothesis.ok_or_else(|| {
                Error::InvalidObjective("general objective needs per_hypothesis".into())
            })?;
            if per.is_empty() {
                return Err(Error::InvalidObjective("per_hypothesis is empty".into()));
            }
            let per = per
                .into_iter()
                .map(|p| match ObjectiveSpec::try_from(p)? {
                    ObjectiveSpec::Exchangeable { kind, density } => {
                        Ok(Projected { kind, density })
                    }
                    ObjectiveSpec::General(_) => Err(Error::InvalidObjective(
                        "nested general objectives are not allowed".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::General(per));
        }
        if r.per_hypothesis.is_some() {
            return Err(Error::InvalidObjective(
                "per_hypothesis only applies to kind = general".into(),
            ));
        }
        Ok(Self::Exchangeable {
            kind: ExchangeableKind::parse(&r.kind)?,
            density: density_from(r.theta, r.piecewise)?,
        })
    }
}
