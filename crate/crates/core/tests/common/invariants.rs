//! Invariant checks of the calibrated bottom-up procedure at their stated
//! sample sizes. Each returns a short summary or the first violation.

use bottomup::procedures_bu::{
    apply_coefficients, bu_local_test, calibrate_coefficients, compute_scores, BuProcedure,
};
use bottomup::procedures_classical::closed_testing_bruteforce;
use bottomup::rng::{open01, stream};
use bottomup::SortedPValues;
use rand::seq::SliceRandom;

use super::*;

pub type Check = Result<String, String>;

fn mix_procedure() -> BuProcedure {
    BuProcedure::new(mix_table_k10().clone(), &mix_objective()).unwrap()
}

pub fn monotone(pairs: usize) -> Check {
    let proc = mix_procedure();
    let mut r = rng(20);
    for _ in 0..pairs {
        let (p, smaller) = dominated_pair(&mut r, 10);
        let d = proc.apply(&p).unwrap();
        let ds = proc.apply(&smaller).unwrap();
        if !dominates(ds.as_slice(), d.as_slice()) {
            return Err(format!("p = {p:?}, p' = {smaller:?}"));
        }
    }
    Ok(format!("{pairs} dominated pairs"))
}

pub fn symmetric(vectors: usize) -> Check {
    let proc = mix_procedure();
    let mut r = rng(21);
    let mut perm: Vec<usize> = (0..10).collect();
    for _ in 0..vectors {
        let p = family(&mut r, 10);
        perm.shuffle(&mut r);
        let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let d = proc.apply(&p).unwrap();
        let dp = proc.apply(&permuted).unwrap();
        if perm.iter().enumerate().any(|(j, &i)| dp[j] != d[i]) {
            return Err(format!("p = {p:?}, permutation {perm:?}"));
        }
    }
    Ok(format!("{vectors} permuted vectors"))
}

pub fn proper_consonance(per_size: usize) -> Check {
    let c = mix_coefficients();
    let t = &mix_table_k10().thresholds;
    let mut r = rng(3);
    let mut fired = 0;
    for k in 2..=10 {
        for _ in 0..per_size {
            let q = SortedPValues::new(&family(&mut r, k)).sorted;
            if bu_local_test(&q, t, ALPHA, &c) {
                fired += 1;
                let mut without_second = q.clone();
                without_second.remove(1);
                if !bu_local_test(&without_second, t, ALPHA, &c) {
                    return Err(format!("q = {q:?}"));
                }
            }
        }
    }
    Ok(format!("{fired} rejections checked"))
}

pub fn global_rejection_rejects_smallest(vectors: usize) -> Check {
    let proc = mix_procedure();
    let mut r = rng(4);
    for _ in 0..vectors {
        let p = family(&mut r, 10);
        let s = SortedPValues::new(&p);
        if proc.local_test(&s.sorted) && !proc.apply(&p).unwrap()[s.perm[0]] {
            return Err(format!("p = {p:?}"));
        }
    }
    Ok(format!("{vectors} vectors"))
}

/// Thresholds from 4·10⁶ calibration draws keep their own sampling error
/// well inside the tolerance of the level check.
pub fn level(fresh: usize) -> Check {
    let c = mix_coefficients();
    let t = calibrate_coefficients(&c, 10, ALPHA, 4_000_000, 31).unwrap();
    let tol = ALPHA + 3.0 * (ALPHA * (1.0 - ALPHA) / fresh as f64).sqrt();
    let mut worst: f64 = 0.0;
    for k in 2..=10 {
        let mut r = stream(99, 1000 + k as u64, 0, 0);
        let mut q = vec![0.0; k];
        let mut hits = 0usize;
        for _ in 0..fresh {
            q.iter_mut().for_each(|x| *x = open01(&mut r));
            q.sort_by(f64::total_cmp);
            hits += bu_local_test(&q, &t, ALPHA, &c) as usize;
        }
        let level = hits as f64 / fresh as f64;
        if level > tol {
            return Err(format!("size {k}: level {level} > {tol}"));
        }
        worst = worst.max(level);
    }
    Ok(format!("max level {worst:.5} <= {tol:.5}"))
}

pub fn scale_invariance(vectors: usize) -> Check {
    let c = mix_coefficients();
    let base = calibrate_coefficients(&c, 10, ALPHA, 10_000, 9).unwrap();
    let scaled = calibrate_coefficients(&Scaled(&c, 2.0), 10, ALPHA, 10_000, 9).unwrap();
    if base.iter().zip(&scaled).any(|(a, b)| 2.0 * a != *b) {
        return Err(format!("thresholds {base:?} vs {scaled:?}"));
    }
    let mut r = rng(6);
    for _ in 0..vectors {
        let p = family(&mut r, 10);
        if apply_coefficients(&p, &base, ALPHA, &c).unwrap()
            != apply_coefficients(&p, &scaled, ALPHA, &Scaled(&c, 2.0)).unwrap()
        {
            return Err(format!("p = {p:?}"));
        }
    }
    Ok("c = 2, thresholds doubled bitwise".into())
}

pub fn recursion_matches_direct(per_size: usize) -> Check {
    let c = mix_coefficients();
    let t = &mix_table_k10().thresholds;
    let mut r = rng(1);
    for k in 1..=4 {
        for _ in 0..per_size {
            let s = SortedPValues::new(&family(&mut r, k));
            let direct = direct_scores(&s.sorted, t, ALPHA, &c);
            let stack = compute_scores(&s, t, ALPHA, &c).unwrap();
            for level in 1..=k {
                for m in 0..=(k - level) {
                    let mask = (1usize << m) | (((1usize << (level - 1)) - 1) << (k - level + 1));
                    let (a, b) = (stack.node(level, m), direct[mask]);
                    if (a - b).abs() > 1e-10 * b.abs().max(1.0) {
                        return Err(format!(
                            "q = {:?}, level {level}, m {m}: {a} vs {b}",
                            s.sorted
                        ));
                    }
                }
            }
        }
    }
    Ok(format!("K <= 4, {per_size} vectors per K"))
}

pub fn closure_matches_bruteforce(per_size: usize) -> Check {
    let proc = mix_procedure();
    let c = mix_coefficients();
    let t = &mix_table_k10().thresholds;
    let mut r = rng(2);
    for k in 2..=8 {
        for _ in 0..per_size {
            let p = family(&mut r, k);
            if apply_coefficients(&p, t, ALPHA, &c).unwrap()
                != closed_testing_bruteforce(&proc, &p).unwrap()
            {
                return Err(format!("p = {p:?}"));
            }
        }
    }
    Ok(format!("K = 2..8, {per_size} vectors per K"))
}

pub fn node_count() -> Check {
    let proc = mix_procedure();
    let mut r = rng(5);
    let mut most = 0;
    for _ in 0..100 {
        most = most.max(proc.scores(&family(&mut r, 10)).unwrap().node_evaluations);
    }
    if most > 55 {
        return Err(format!("{most} node evaluations at K = 10"));
    }
    Ok(format!("{most} <= 55 nodes"))
}
