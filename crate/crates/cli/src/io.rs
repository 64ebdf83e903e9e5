use std::io::Write;
use std::path::Path;

use bottomup::distributions::INGEST_CLAMP;

use crate::error::CliError;

/// Writes `contents` to `path` through a temporary file in the same
/// directory, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Io(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// P-value families read from a `family_id,p1,...,pK` CSV.
#[derive(Debug)]
pub struct Families {
    pub ids: Vec<String>,
    pub p: Vec<Vec<f64>>,
    pub k: usize,
}

/// Reads families, rejecting ragged rows and values outside [0,1]. Exact 0 and
/// 1 are clamped into the open interval with a warning.
pub fn read_families(path: &Path) -> Result<Families, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let header = rdr.headers().map_err(|e| read_error(path, e))?.clone();
    if header.len() < 2 || &header[0] != "family_id" {
        return Err(bad("header must be family_id,p1,...,pK".into()));
    }
    let k = header.len() - 1;
    let (mut ids, mut p) = (Vec::new(), Vec::new());
    let mut clamped = 0usize;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| read_error(path, e))?;
        let line = rec.position().map_or(row + 2, |pos| pos.line() as usize);
        if rec.len() != k + 1 {
            return Err(bad(format!(
                "line {line} has {} p-values, expected {k}",
                rec.len() - 1
            )));
        }
        let mut family = Vec::with_capacity(k);
        for field in rec.iter().skip(1) {
            let x: f64 = field
                .parse()
                .map_err(|_| bad(format!("line {line}: '{field}' is not a number")))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(bad(format!("line {line}: p-value {field} outside [0,1]")));
            }
            if x == 0.0 || x == 1.0 {
                clamped += 1;
            }
            family.push(x.clamp(INGEST_CLAMP, 1.0 - INGEST_CLAMP));
        }
        ids.push(rec[0].to_string());
        p.push(family);
    }
    if clamped > 0 {
        log::warn!("{clamped} p-values equal to 0 or 1 clamped by {INGEST_CLAMP:e}");
    }
    Ok(Families { ids, p, k })
}

fn read_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        CliError::io(path, e)
    } else {
        CliError::Usage(format!("{}: {e}", path.display()))
    }
}
