use super::format::{fmt_sig, CSV_DIGITS};
use crate::error::{Error, Result};
use crate::procedure::Procedure;

/// Lattice over which decisions are tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    /// Points per free axis, at least 2; endpoints included.
    pub resolution: usize,
    pub lo: f64,
    pub hi: f64,
    /// Axis (0-based) held at a fixed value.
    pub fixed: Option<(usize, f64)>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            resolution: 200,
            lo: 0.0,
            hi: 0.5,
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub p: [f64; 3],
    pub d: [bool; 3],
    pub n_reject: usize,
}

/// Decisions of a K = 3 procedure on a regular lattice.
pub fn region_grid(procedure: &Procedure, cfg: &RegionConfig) -> Result<Vec<RegionRecord>> {
    let n = cfg.resolution;
    if n < 2 {
        return Err(Error::InvalidConfig("resolution must be at least 2".into()));
    }
    if !(0.0 <= cfg.lo && cfg.lo < cfg.hi && cfg.hi <= 1.0) {
        return Err(Error::InvalidConfig(
            "window must satisfy 0 <= lo < hi <= 1".into(),
        ));
    }
    if let Some((axis, v)) = cfg.fixed {
        if axis > 2 || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig(
                "fixed axis must be p1..p3 with a value in [0,1]".into(),
            ));
        }
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| cfg.lo + (cfg.hi - cfg.lo) * i as f64 / (n - 1) as f64)
        .collect();
    let values = |axis: usize| -> Vec<f64> {
        match cfg.fixed {
            Some((a, v)) if a == axis => vec![v],
            _ => grid.clone(),
        }
    };
    let (v0, v1, v2) = (values(0), values(1), values(2));
    let mut out = Vec::with_capacity(v0.len() * v1.len() * v2.len());
    for &a in &v0 {
        for &b in &v1 {
            for &c in &v2 {
                let p = [a, b, c];
                let d = procedure.apply(&p)?;
                let d = [d[0], d[1], d[2]];
                out.push(RegionRecord {
                    p,
                    d,
                    n_reject: d.iter().filter(|x| **x).count(),
                });
            }
        }
    }
    Ok(out)
}

pub const REGION_HEADER: &str = "procedure,p1,p2,p3,d1,d2,d3,n_reject";

pub fn region_csv(procedure: &str, records: &[RegionRecord]) -> String {
    let mut out = String::from(REGION_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{procedure},{},{},{},{},{},{},{}\n",
            fmt_sig(r.p[0], CSV_DIGITS),
            fmt_sig(r.p[1], CSV_DIGITS),
            fmt_sig(r.p[2], CSV_DIGITS),
            r.d[0] as u8,
            r.d[1] as u8,
            r.d[2] as u8,
            r.n_reject
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedure::ProcedureSpec;

    #[test]
    fn gou_grid() {
        let g = Procedure::classical(ProcedureSpec::Gou, 0.05).unwrap();
        let cfg = RegionConfig {
            resolution: 20,
            fixed: Some((2, 0.03)),
            ..Default::default()
        };
        let recs = region_grid(&g, &cfg).unwrap();
        assert_eq!(recs.len(), 400);
        assert!(recs
            .iter()
            .filter(|r| r.p.iter().all(|&v| v > 0.05))
            .all(|r| r.n_reject == 0));
        let csv = region_csv("gou", &recs);
        assert_eq!(csv.lines().count(), 401);
        assert!(region_grid(
            &g,
            &RegionConfig {
                resolution: 1,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn grid_is_permutation_consistent() {
        let h = Procedure::classical(ProcedureSpec::Hommel, 0.05).unwrap();
        let cfg = RegionConfig {
            resolution: 12,
            hi: 0.1,
            ..Default::default()
        };
        let recs = region_grid(&h, &cfg).unwrap();
        let n = 12;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let a = &recs[(i * n + j) * n + l];
                    let b = &recs[(j * n + i) * n + l];
                    assert_eq!((a.d[0], a.d[1], a.d[2]), (b.d[1], b.d[0], b.d[2]));
                }
            }
        }
    }
}
