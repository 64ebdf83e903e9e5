//! Calibrated threshold tables and their JSON form.
//!
//! Reals are written with 17 significant digits so a table read back
//! reproduces the calibrated values bit for bit.

use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;

/// Thresholds `t_2, …, t_K` (or only `t_K` for a last-step table).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub alpha: f64,
    pub k: usize,
    pub b: usize,
    pub seed: u64,
    pub objective: ObjectiveSpec,
    /// Sub-test family of a last-step table; `None` for bottom-up tables.
    pub suite: Option<String>,
    pub thresholds: Vec<f64>,
    pub fingerprint: String,
}

/// Hash of everything a table's validity depends on.
pub fn fingerprint(objective: &ObjectiveSpec, alpha: f64, suite: Option<&str>) -> String {
    let obj = serde_json::to_string(objective).expect("objective serializes");
    let text = format!(
        "alpha={alpha:.16e};suite={};objective={obj}",
        suite.unwrap_or("bu")
    );
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(SerializeDerive, Deserialize)]
struct TableRepr {
    alpha: f64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "B")]
    b: usize,
    seed: u64,
    objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    suite: Option<String>,
    thresholds: Vec<f64>,
    fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<serde_json::Value>,
}

impl ThresholdTable {
    /// Threshold `t_k` for `2 <= k <= K` of a bottom-up table.
    pub fn t(&self, k: usize) -> Option<f64> {
        if self.suite.is_some() {
            return (k == self.k).then(|| self.thresholds[0]);
        }
        k.checked_sub(2)
            .and_then(|i| self.thresholds.get(i).copied())
    }

    /// Checks the table against the objective and level it is applied with.
    pub fn check_fingerprint(&self, objective: &ObjectiveSpec) -> Result<()> {
        if fingerprint(objective, self.alpha, self.suite.as_deref()) != self.fingerprint {
            return Err(Error::FingerprintMismatch);
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let expected = if self.suite.is_some() {
            1
        } else {
            self.k.saturating_sub(1)
        };
        if self.k == 0 || self.thresholds.len() != expected {
            return Err(Error::Parse(format!(
                "K = {} needs {expected} thresholds, found {}",
                self.k,
                self.thresholds.len()
            )));
        }
        if self
            .thresholds
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(Error::Parse("thresholds must be finite and >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parse(format!("alpha = {} out of range", self.alpha)));
        }
        if fingerprint(&self.objective, self.alpha, self.suite.as_deref()) != self.fingerprint {
            return Err(Error::Parse(
                "fingerprint does not match the stored objective".into(),
            ));
        }
        Ok(())
    }

    /// JSON text; `generator` is appended as a trailing provenance field.
    pub fn to_json(&self, generator: Option<serde_json::Value>) -> String {
        let repr = TableRepr {
            alpha: self.alpha,
            k: self.k,
            b: self.b,
            seed: self.seed,
            objective: self.objective.clone(),
            suite: self.suite.clone(),
            thresholds: self.thresholds.clone(),
            fingerprint: self.fingerprint.clone(),
            generator,
        };
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits::default());
        repr.serialize(&mut ser).expect("in-memory serialization");
        out.push(b'\n');
        String::from_utf8(out).expect("json is utf-8")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TableRepr =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let table = Self {
            alpha: repr.alpha,
            k: repr.k,
            b: repr.b,
            seed: repr.seed,
            objective: repr.objective,
            suite: repr.suite,
            thresholds: repr.thresholds,
            fingerprint: repr.fingerprint,
        };
        table.validate()?;
        Ok(table)
    }
}

/// Pretty JSON with every float written as `{:.16e}`.
#[derive(Default)]
pub struct SigDigits(PrettyFormatter<'static>);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serialize any value with the 17-digit formatter.
pub fn to_json_sig<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits::default());
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf-8")
}
