use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use super::format::{fmt_sig, CSV_DIGITS};
use crate::distributions::AlternativeDensity;
use crate::error::{Error, Result};
use crate::procedure::Procedure;
use crate::rng::{self, domain};

/// Jackknife blocks for the TPR standard error.
const JACKKNIFE_BLOCKS: usize = 100;

/// How many hypotheses are false in each replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K1Setting {
    /// The first `k1` hypotheses are false.
    Fixed(usize),
    /// Each hypothesis is false independently with this probability.
    Mix(f64),
}

impl K1Setting {
    fn stream_tag(&self, k: usize) -> u64 {
        match self {
            Self::Fixed(k1) => *k1 as u64,
            Self::Mix(p) => (k as u64 + 1) ^ (p.to_bits() << 8),
        }
    }

    /// Parses a list such as `0..10,mix` or `1,3,mix:0.3`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let bad = || Error::InvalidConfig(format!("bad K1 range '{part}'"));
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b
                    .trim()
                    .trim_start_matches('=')
                    .parse()
                    .map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend((a..=b).map(Self::Fixed));
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("empty K1 setting list".into()));
        }
        Ok(out)
    }
}

impl FromStr for K1Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "mix" {
            return Ok(Self::Mix(0.5));
        }
        if let Some(p) = s.strip_prefix("mix:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad mix probability '{s}'")))?;
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidConfig(
                    "mix probability must lie in (0,1)".into(),
                ));
            }
            return Ok(Self::Mix(p));
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("bad K1 setting '{s}'")))
    }
}

impl fmt::Display for K1Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(k1) => write!(f, "{k1}"),
            Self::Mix(p) if *p == 0.5 => write!(f, "mix"),
            Self::Mix(p) => write!(f, "mix:{p}"),
        }
    }
}

/// One simulation campaign cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub k: usize,
    pub alpha: f64,
    pub theta_true: f64,
    pub k1: K1Setting,
    pub reps: usize,
    pub seed: u64,
}

/// Per-procedure outcome of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRow {
    pub procedure: String,
    pub k: usize,
    pub k1_setting: String,
    pub theta_true: f64,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub fwer: f64,
    pub fwer_se: f64,
    /// Absent when no hypothesis was ever false.
    pub tpr: Option<f64>,
    pub tpr_se: Option<f64>,
    pub true_rejections: u64,
    pub false_nulls: u64,
    pub fwer_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub rows: Vec<SimulationRow>,
}

impl SimulationResult {
    pub fn row(&self, procedure: &str) -> Option<&SimulationRow> {
        self.rows.iter().find(|r| r.procedure == procedure)
    }
}

#[derive(Clone, Default)]
struct Block {
    false_nulls: u64,
    true_rej: Vec<u64>,
    fwer: Vec<u64>,
}

/// Runs every procedure on the same simulated p-value families.
///
/// Replicate `r` draws from its own stream, and blocks are summed with
/// integer counters, so the result does not depend on the worker count.
pub fn run_simulation(
    cfg: &SimulationConfig,
    procedures: &[Procedure],
) -> Result<SimulationResult> {
    let k = cfg.k;
    if k == 0 || cfg.reps == 0 {
        return Err(Error::InvalidConfig("K and reps must be positive".into()));
    }
    if let K1Setting::Fixed(k1) = cfg.k1 {
        if k1 > k {
            return Err(Error::InvalidConfig(format!("K1 = {k1} exceeds K = {k}")));
        }
    }
    for p in procedures {
        if let Some(pk) = p.k() {
            if pk != k {
                return Err(Error::InvalidConfig(format!(
                    "{} was calibrated for K = {pk}, simulation uses K = {k}",
                    p.label()
                )));
            }
        }
    }
    let alt = AlternativeDensity::normal_shift(cfg.theta_true)?;
    let n_proc = procedures.len();
    let blocks = JACKKNIFE_BLOCKS.min(cfg.reps);
    let tag = cfg.k1.stream_tag(k);

    let results: Vec<Result<Block>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let start = blk * cfg.reps / blocks;
            let end = (blk + 1) * cfg.reps / blocks;
            let mut acc = Block {
                false_nulls: 0,
                true_rej: vec![0; n_proc],
                fwer: vec![0; n_proc],
            };
            let mut p = vec![0.0; k];
            let mut is_alt = vec![false; k];
            for rep in start..end {
                let mut r = rng::stream(cfg.seed, domain::SIMULATION, tag, rep as u64);
                match cfg.k1 {
                    K1Setting::Fixed(k1) => {
                        for (i, a) in is_alt.iter_mut().enumerate() {
                            *a = i < k1;
                        }
                    }
                    K1Setting::Mix(prob) => {
                        for a in is_alt.iter_mut() {
                            *a = r.gen_bool(prob);
                        }
                    }
                }
                for i in 0..k {
                    let u = rng::open01(&mut r);
                    p[i] = if is_alt[i] { alt.sample(u) } else { u };
                }
                acc.false_nulls += is_alt.iter().filter(|a| **a).count() as u64;
                for (j, proc_) in procedures.iter().enumerate() {
                    let d = proc_.apply(&p)?;
                    let mut any_false = false;
                    for i in 0..k {
                        if d[i] {
                            if is_alt[i] {
                                acc.true_rej[j] += 1;
                            } else {
                                any_false = true;
                            }
                        }
                    }
                    acc.fwer[j] += any_false as u64;
                }
            }
            Ok(acc)
        })
        .collect();
    let blocks_acc: Vec<Block> = results.into_iter().collect::<Result<_>>()?;

    let total_false: u64 = blocks_acc.iter().map(|b| b.false_nulls).sum();
    let reps = cfg.reps as f64;
    let rows = procedures
        .iter()
        .enumerate()
        .map(|(j, proc_)| {
            let tr: u64 = blocks_acc.iter().map(|b| b.true_rej[j]).sum();
            let fw: u64 = blocks_acc.iter().map(|b| b.fwer[j]).sum();
            let fwer = fw as f64 / reps;
            let (tpr, tpr_se) = if total_false == 0 {
                (None, None)
            } else {
                let tpr = tr as f64 / total_false as f64;
                (
                    Some(tpr),
                    jackknife_ratio_se(&blocks_acc, j, tr, total_false),
                )
            };
            SimulationRow {
                procedure: proc_.label().to_string(),
                k,
                k1_setting: cfg.k1.to_string(),
                theta_true: cfg.theta_true,
                alpha: cfg.alpha,
                reps: cfg.reps,
                seed: cfg.seed,
                fwer,
                fwer_se: (fwer * (1.0 - fwer) / reps).sqrt(),
                tpr,
                tpr_se,
                true_rejections: tr,
                false_nulls: total_false,
                fwer_count: fw,
            }
        })
        .collect();
    Ok(SimulationResult { rows })
}

/// `n` p-value families from the mix model: each hypothesis is false with
/// probability `prob` and then drawn from the normal shift `theta`.
pub fn mix_families(k: usize, theta: f64, prob: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "mix probability {prob} must lie in (0,1)"
        )));
    }
    let alt = AlternativeDensity::normal_shift(theta)?;
    Ok((0..n)
        .map(|i| {
            let mut r = rng::stream(seed, domain::DATASET, k as u64, i as u64);
            (0..k)
                .map(|_| {
                    let is_alt = r.gen_bool(prob);
                    let u = rng::open01(&mut r);
                    if is_alt {
                        alt.sample(u)
                    } else {
                        u
                    }
                })
                .collect()
        })
        .collect())
}

/// Delete-one-block jackknife of `T/F`.
fn jackknife_ratio_se(blocks: &[Block], j: usize, t: u64, f: u64) -> Option<f64> {
    let g = blocks.len();
    if g < 2 {
        return None;
    }
    let loo: Vec<f64> = blocks
        .iter()
        .filter_map(|b| {
            let ff = f - b.false_nulls;
            (ff > 0).then(|| (t - b.true_rej[j]) as f64 / ff as f64)
        })
        .collect();
    if loo.len() < 2 {
        return None;
    }
    let n = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|x| (x - mean).powi(2)).sum();
    Some(((n - 1.0) / n * ss).sqrt())
}

pub const SIMULATION_HEADER: &str =
    "procedure,K,k1_setting,theta_true,alpha,reps,seed,fwer,fwer_se,tpr,tpr_se";

/// CSV body (header row included, no comment line).
pub fn simulation_csv(rows: &[SimulationRow]) -> String {
    let mut out = String::from(SIMULATION_HEADER);
    out.push('\n');
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| fmt_sig(v, CSV_DIGITS));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.procedure,
            r.k,
            r.k1_setting,
            fmt_sig(r.theta_true, CSV_DIGITS),
            fmt_sig(r.alpha, CSV_DIGITS),
            r.reps,
            r.seed,
            fmt_sig(r.fwer, CSV_DIGITS),
            fmt_sig(r.fwer_se, CSV_DIGITS),
            opt(r.tpr),
            opt(r.tpr_se),
        ));
    }
    out
}
