//! Procedure descriptors (`name[:theta]`) and a uniform way to apply them.

use std::fmt;
use std::str::FromStr;

use crate::decision::DecisionVector;
use crate::error::{Error, Result};
use crate::objectives::{ExchangeableKind, ObjectiveSpec};
use crate::procedures_bu::{calibrate, BuProcedure};
use crate::procedures_classical::{
    bonferroni, gou_hybrid0, holm, hommel, improved_hommel, LastStepProcedure, SimesSuite,
};

/// What to build, before any calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcedureSpec {
    Bonferroni,
    Holm,
    Hommel,
    Gou,
    Bu { kind: ExchangeableKind, theta: f64 },
    Ih { kind: ExchangeableKind, theta: f64 },
}

fn kind_suffix(kind: ExchangeableKind) -> &'static str {
    match kind {
        ExchangeableKind::Single => "single",
        ExchangeableKind::Mix => "mix",
        ExchangeableKind::Average => "avg",
    }
}

impl FromStr for ProcedureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, theta) = match s.split_once(':') {
            Some((n, t)) => {
                let theta: f64 = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad theta in '{s}'")))?;
                (n.trim(), Some(theta))
            }
            None => (s, None),
        };
        let needs_theta = |kind_str: &str, ctor: fn(ExchangeableKind, f64) -> ProcedureSpec| {
            let kind = ExchangeableKind::parse(kind_str)?;
            let theta = theta.ok_or_else(|| {
                Error::InvalidConfig(format!("'{name}' needs a design theta, e.g. {name}:-3.10"))
            })?;
            if !(theta.is_finite() && theta <= 0.0) {
                return Err(Error::InvalidConfig(format!("theta must be <= 0 in '{s}'")));
            }
            Ok(ctor(kind, theta))
        };
        let simple = |spec| {
            if theta.is_some() {
                Err(Error::InvalidConfig(format!("'{name}' takes no theta")))
            } else {
                Ok(spec)
            }
        };
        match name {
            "bonferroni" => simple(Self::Bonferroni),
            "holm" => simple(Self::Holm),
            "hommel" => simple(Self::Hommel),
            "gou" => simple(Self::Gou),
            _ => {
                if let Some(k) = name.strip_prefix("bu-") {
                    needs_theta(k, |kind, theta| Self::Bu { kind, theta })
                } else if let Some(k) = name.strip_prefix("ih-") {
                    needs_theta(k, |kind, theta| Self::Ih { kind, theta })
                } else {
                    Err(Error::InvalidConfig(format!("unknown procedure '{name}'")))
                }
            }
        }
    }
}

impl fmt::Display for ProcedureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bonferroni => write!(f, "bonferroni"),
            Self::Holm => write!(f, "holm"),
            Self::Hommel => write!(f, "hommel"),
            Self::Gou => write!(f, "gou"),
            Self::Bu { kind, theta } => write!(f, "bu-{}:{theta:.2}", kind_suffix(*kind)),
            Self::Ih { kind, theta } => write!(f, "ih-{}:{theta:.2}", kind_suffix(*kind)),
        }
    }
}

impl ProcedureSpec {
    pub fn needs_calibration(&self) -> bool {
        matches!(self, Self::Bu { .. } | Self::Ih { .. })
    }

    /// Builds the procedure, calibrating thresholds when needed.
    pub fn build(&self, k: usize, alpha: f64, b: usize, seed: u64) -> Result<Procedure> {
        let label = self.to_string();
        let kind = match self {
            Self::Bonferroni => ProcedureKind::Bonferroni,
            Self::Holm => ProcedureKind::Holm,
            Self::Hommel => ProcedureKind::Hommel,
            Self::Gou => ProcedureKind::Gou,
            Self::Bu { kind, theta } => {
                let obj = ObjectiveSpec::normal(*kind, *theta)?;
                let table = calibrate(&obj, k, alpha, b, seed)?;
                ProcedureKind::Bu(BuProcedure::new(table, &obj)?)
            }
            Self::Ih { kind, theta } => {
                let obj = ObjectiveSpec::normal(*kind, *theta)?;
                ProcedureKind::Ih(improved_hommel(&obj, k, alpha, b, seed)?)
            }
        };
        Ok(Procedure { label, alpha, kind })
    }
}

#[derive(Debug, Clone)]
enum ProcedureKind {
    Bonferroni,
    Holm,
    Hommel,
    Gou,
    Bu(BuProcedure),
    Ih(LastStepProcedure<SimesSuite>),
}

/// A ready-to-apply multiple testing procedure.
#[derive(Debug, Clone)]
pub struct Procedure {
    label: String,
    alpha: f64,
    kind: ProcedureKind,
}

impl Procedure {
    pub fn classical(spec: ProcedureSpec, alpha: f64) -> Result<Self> {
        if spec.needs_calibration() {
            return Err(Error::InvalidConfig(format!("{spec} needs calibration")));
        }
        spec.build(0, alpha, 0, 0)
    }

    pub fn from_bu(label: impl Into<String>, bu: BuProcedure) -> Self {
        Self {
            label: label.into(),
            alpha: bu.table().alpha,
            kind: ProcedureKind::Bu(bu),
        }
    }

    pub fn from_ih(label: impl Into<String>, ih: LastStepProcedure<SimesSuite>) -> Self {
        Self {
            label: label.into(),
            alpha: ih.table().alpha,
            kind: ProcedureKind::Ih(ih),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Family size the procedure was calibrated for, if fixed.
    pub fn k(&self) -> Option<usize> {
        match &self.kind {
            ProcedureKind::Bu(b) => Some(b.table().k),
            ProcedureKind::Ih(i) => Some(i.table().k),
            _ => None,
        }
    }

    pub fn apply(&self, p: &[f64]) -> Result<DecisionVector> {
        let a = self.alpha;
        match &self.kind {
            ProcedureKind::Bonferroni => Ok(bonferroni(p, a)),
            ProcedureKind::Holm => Ok(holm(p, a)),
            ProcedureKind::Hommel => Ok(hommel(p, a)),
            ProcedureKind::Gou => Ok(gou_hybrid0(p, a)),
            ProcedureKind::Bu(b) => b.apply(p),
            ProcedureKind::Ih(i) => i.apply(p),
        }
    }
}
