use std::path::Path;

use bottomup::distributions::{solve_theta as solve_regime, AlternativeDensity, RegimeSpec};
use bottomup::evaluation::{
    compare_table, exact_power_piecewise, region_csv, region_grid, run_simulation, simulation_csv,
    ExactProcedure, K1Setting, PiecewiseSetup, RegionConfig, SimulationConfig,
};
use bottomup::procedure::{Procedure, ProcedureSpec};
use bottomup::procedures_bu::{calibrate as calibrate_bu, BuProcedure};
use bottomup::procedures_classical::{improved_hommel, LastStepProcedure};
use bottomup::thresholds::to_json_sig;
use bottomup::{ExchangeableKind, ObjectiveSpec, ThresholdTable};
use serde_json::json;

use crate::args::{
    generator, header_line, ApplyArgs, CalibrateArgs, CompareArgs, ExactArgs, RegionArgs,
    SimulateArgs, SolveThetaArgs,
};
use crate::error::CliError;
use crate::io::{read_families, read_text, write_output};

/// Largest deviation of an exact null level from α before it counts as a bug.
const EXACT_LEVEL_TOL: f64 = 1e-9;

pub fn calibrate(a: &CalibrateArgs, echo: &str) -> Result<(), CliError> {
    let obj = ObjectiveSpec::normal(ExchangeableKind::parse(&a.objective)?, a.theta)?;
    let table = match a.suite.as_str() {
        "bu" => calibrate_bu(&obj, a.k, a.alpha, a.b, a.seed)?,
        "simes" => improved_hommel(&obj, a.k, a.alpha, a.b, a.seed)?
            .table()
            .clone(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown suite '{other}', expected bu or simes"
            )))
        }
    };
    log::info!("thresholds {:?}", table.thresholds);
    write_output(a.output.as_deref(), &table.to_json(Some(generator(echo))))
}

pub fn apply(a: &ApplyArgs, echo: &str) -> Result<(), CliError> {
    let data = read_families(&a.input)?;
    let proc = match (&a.thresholds, &a.procedure) {
        (Some(path), _) => from_table_file(path, data.k, a.alpha)?,
        (None, Some(desc)) => {
            let spec: ProcedureSpec = desc.parse()?;
            spec.build(data.k, a.alpha.unwrap_or(0.05), a.b, a.seed)?
        }
        (None, None) => unreachable!("clap requires one of --thresholds and --procedure"),
    };
    let mut body = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        let mut head = vec!["family_id".to_string()];
        head.extend((1..=data.k).map(|i| format!("d{i}")));
        head.push("n_discoveries".into());
        w.write_record(&head).map_err(internal)?;
        for (id, p) in data.ids.iter().zip(&data.p) {
            let d = proc.apply(p)?;
            if d.len() != data.k {
                return Err(CliError::Internal(format!(
                    "{} decisions for K = {}",
                    d.len(),
                    data.k
                )));
            }
            let mut rec = vec![id.clone()];
            rec.extend(d.as_u8().iter().map(u8::to_string));
            rec.push(d.count().to_string());
            w.write_record(&rec).map_err(internal)?;
        }
        w.flush().map_err(internal)?;
    }
    let body = String::from_utf8(body).map_err(internal)?;
    write_output(a.output.as_deref(), &(header_line(echo) + &body))?;
    if a.summary {
        let table = compare_table(&data.p, std::slice::from_ref(&proc))?;
        write_output(None, &table.summary_csv())?;
    }
    Ok(())
}

fn from_table_file(path: &Path, k: usize, alpha: Option<f64>) -> Result<Procedure, CliError> {
    let table = ThresholdTable::from_json(&read_text(path)?)?;
    if table.k != k {
        return Err(CliError::Usage(format!(
            "table is for K = {}, input has K = {k}",
            table.k
        )));
    }
    if let Some(alpha) = alpha.filter(|&x| x != table.alpha) {
        return Err(CliError::Usage(format!(
            "--alpha {alpha} differs from the table's {}",
            table.alpha
        )));
    }
    let theta = match &table.objective {
        ObjectiveSpec::Exchangeable {
            kind,
            density: AlternativeDensity::NormalShift { theta },
        } => Some((*kind, *theta)),
        _ => None,
    };
    let kind_name = table.objective.kind_name();
    Ok(match table.suite.as_deref() {
        None => {
            let label = theta.map_or(format!("bu-{kind_name}"), |(kind, theta)| {
                ProcedureSpec::Bu { kind, theta }.to_string()
            });
            Procedure::from_bu(label, BuProcedure::from_table(table)?)
        }
        Some("simes") => {
            let label = theta.map_or(format!("ih-{kind_name}"), |(kind, theta)| {
                ProcedureSpec::Ih { kind, theta }.to_string()
            });
            Procedure::from_ih(label, LastStepProcedure::from_table(table)?)
        }
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unsupported table suite '{other}'"
            )))
        }
    })
}

fn parse_procedures(list: &str) -> Result<Vec<ProcedureSpec>, CliError> {
    let specs = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<ProcedureSpec>, _>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("no procedures given".into()));
    }
    Ok(specs)
}

fn build_all(
    specs: &[ProcedureSpec],
    k: usize,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<Vec<Procedure>, CliError> {
    specs
        .iter()
        .map(|s| {
            log::info!("building {s}");
            Ok(s.build(k, alpha, b, seed)?)
        })
        .collect()
}

pub fn simulate(a: &SimulateArgs, echo: &str) -> Result<(), CliError> {
    let settings = K1Setting::parse_list(&a.k1)?;
    if let Some(K1Setting::Fixed(k1)) = settings
        .iter()
        .find(|s| matches!(s, K1Setting::Fixed(k1) if *k1 > a.k))
    {
        return Err(CliError::Usage(format!("K1 = {k1} exceeds K = {}", a.k)));
    }
    let procs = build_all(&parse_procedures(&a.procedures)?, a.k, a.alpha, a.b, a.seed)?;
    let mut rows = Vec::new();
    for k1 in settings {
        log::info!("simulating K1 = {k1}");
        let cfg = SimulationConfig {
            k: a.k,
            alpha: a.alpha,
            theta_true: a.theta_true,
            k1,
            reps: a.reps,
            seed: a.seed,
        };
        rows.extend(run_simulation(&cfg, &procs)?.rows);
    }
    write_output(
        a.output.as_deref(),
        &(header_line(echo) + &simulation_csv(&rows)),
    )
}

pub fn region(a: &RegionArgs, echo: &str) -> Result<(), CliError> {
    if a.k != 3 {
        return Err(CliError::Usage(format!("region needs --k 3, got {}", a.k)));
    }
    let fixed = a.fix.as_deref().map(parse_fix).transpose()?;
    let proc = a
        .procedure
        .parse::<ProcedureSpec>()?
        .build(3, a.alpha, a.b, a.seed)?;
    let cfg = RegionConfig {
        resolution: a.res,
        lo: a.lo,
        hi: a.hi,
        fixed,
    };
    let records = region_grid(&proc, &cfg)?;
    write_output(
        a.output.as_deref(),
        &(header_line(echo) + &region_csv(proc.label(), &records)),
    )
}

/// Parses `p3=0.03` into a 0-based axis and value.
fn parse_fix(s: &str) -> Result<(usize, f64), CliError> {
    let bad = || CliError::Usage(format!("--fix expects p1..p3=value, got '{s}'"));
    let (name, value) = s.split_once('=').ok_or_else(bad)?;
    let axis = match name.trim() {
        "p1" => 0,
        "p2" => 1,
        "p3" => 2,
        _ => return Err(bad()),
    };
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    Ok((axis, value))
}

pub fn exact(a: &ExactArgs, echo: &str) -> Result<(), CliError> {
    let setup = match a.preset.as_str() {
        "s3" => PiecewiseSetup::s3(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown preset '{other}', expected s3"
            )))
        }
    };
    let density = match &setup.density {
        AlternativeDensity::PiecewiseConstant(pw) => {
            json!({ "breakpoints": pw.breakpoints(), "values": pw.values() })
        }
        AlternativeDensity::NormalShift { .. } => {
            return Err(CliError::Internal("preset is not piecewise".into()))
        }
    };
    let mut results = Vec::new();
    for (name, which) in [("bu", ExactProcedure::Bu), ("ih", ExactProcedure::Ih)] {
        let r = exact_power_piecewise(&setup, which)?;
        if (r.null_level - setup.alpha).abs() > EXACT_LEVEL_TOL {
            return Err(CliError::Internal(format!(
                "{name}: exact null level {} != alpha",
                r.null_level
            )));
        }
        results.push(json!({
            "procedure": name,
            "levels": r.levels,
            "critical_scores": r.critical_scores,
            "boundaries": r.boundaries,
            "tpr": r.tpr,
            "tpr_per_hypothesis": r.tpr_per_hypothesis,
            "null_level": r.null_level,
        }));
    }
    let out = json!({
        "preset": a.preset,
        "k": setup.k,
        "alpha": setup.alpha,
        "objective": setup.kind.name(),
        "density": density,
        "results": results,
        "generator": generator(echo),
    });
    write_output(a.output.as_deref(), &to_json_sig(&out))
}

pub fn solve_theta(a: &SolveThetaArgs) -> Result<(), CliError> {
    let theta = solve_regime(RegimeSpec {
        alpha: a.alpha,
        k: a.k,
        target_bonferroni_power: a.power,
    })?;
    write_output(None, &format!("{theta:.6}\n"))
}

pub fn compare(a: &CompareArgs, echo: &str) -> Result<(), CliError> {
    let data = read_families(&a.input)?;
    let procs = build_all(
        &parse_procedures(&a.procedures)?,
        data.k,
        a.alpha,
        a.b,
        a.seed,
    )?;
    let table = compare_table(&data.p, &procs)?;
    if let Some(path) = &a.crosstab {
        write_output(Some(path), &(header_line(echo) + &table.crosstab_csv()))?;
    }
    write_output(
        a.output.as_deref(),
        &(header_line(echo) + &table.summary_csv()),
    )
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}
