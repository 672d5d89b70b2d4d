//! Long-format plot data from trajectory CSVs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::config::Method;
use crate::error::CliError;

/// A trajectory CSV tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotInput {
    pub method: Method,
    pub path: PathBuf,
}

impl std::str::FromStr for PlotInput {
    type Err = String;

    /// `method=path`, or a bare path whose file name contains a method token
    /// such as `bearing_pf_p15000_seed0.csv`.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((m, p)) = s.split_once('=') {
            return Ok(Self { method: m.parse()?, path: PathBuf::from(p) });
        }
        let path = PathBuf::from(s);
        let stem = path.file_stem().and_then(|x| x.to_str()).unwrap_or_default();
        let method = stem
            .split('_')
            .find_map(|tok| tok.parse::<Method>().ok())
            .ok_or_else(|| format!("cannot infer the method of `{s}`; use method=path"))?;
        Ok(Self { method, path })
    }
}

struct Table {
    steps: Vec<String>,
    truth: Vec<Vec<String>>,
    estimates: Vec<Vec<String>>,
    errors: Vec<String>,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n = header.len();
    if n < 5 || (n - 3) % 2 != 0 {
        return Err(bad(format!("unexpected header with {n} columns")));
    }
    let d = (n - 3) / 2;
    let expected = crate::output::trajectory_header(d);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad("header is not a trajectory header".into()));
    }
    let mut t = Table { steps: Vec::new(), truth: Vec::new(), estimates: Vec::new(), errors: Vec::new() };
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        t.steps.push(rec[0].to_string());
        t.truth.push((1..=d).map(|i| rec[i].to_string()).collect());
        t.estimates.push((d + 1..=2 * d).map(|i| rec[i].to_string()).collect());
        t.errors.push(rec[2 * d + 1].to_string());
    }
    if t.steps.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(t)
}

/// Row counts of the two files written by [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitCounts {
    pub plot_rows: usize,
    pub error_rows: usize,
}

/// Writes `plotdata.csv` (step, dimension, series, value) and `errors.csv`
/// (step, series, err_k for steps 1..K) into `out`.
pub fn emit(inputs: &[PlotInput], out: &Path) -> Result<EmitCounts, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input("no trajectory files given".into()));
    }
    let mut seen = BTreeSet::new();
    for i in inputs {
        if !seen.insert(i.method.name()) {
            return Err(CliError::Input(format!("method `{}` given more than once", i.method.name())));
        }
    }
    let tables = inputs.iter().map(|i| read_table(&i.path)).collect::<Result<Vec<_>, _>>()?;
    let base = &tables[0];
    for (t, i) in tables.iter().zip(inputs).skip(1) {
        if t.steps != base.steps || t.truth != base.truth {
            return Err(CliError::Input(format!("{} does not share the truth trajectory of {}", i.path.display(), inputs[0].path.display())));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut plot = csv::Writer::from_path(out.join("plotdata.csv"))?;
    plot.write_record(["step", "dimension", "series", "value"])?;
    let mut plot_rows = 0;
    let mut emit_series = |name: &str, rows: &[Vec<String>]| -> Result<(), CliError> {
        for (step, row) in base.steps.iter().zip(rows) {
            for (dim, v) in row.iter().enumerate() {
                plot.write_record([step.as_str(), &(dim + 1).to_string(), name, v.as_str()])?;
                plot_rows += 1;
            }
        }
        Ok(())
    };
    emit_series("truth", &base.truth)?;
    for (t, i) in tables.iter().zip(inputs) {
        emit_series(i.method.name(), &t.estimates)?;
    }
    plot.flush()?;

    let mut errs = csv::Writer::from_path(out.join("errors.csv"))?;
    errs.write_record(["step", "series", "err_k"])?;
    let mut error_rows = 0;
    for (t, i) in tables.iter().zip(inputs) {
        for (step, e) in t.steps.iter().zip(&t.errors).skip(1) {
            errs.write_record([step.as_str(), i.method.name(), e.as_str()])?;
            error_rows += 1;
        }
    }
    errs.flush()?;
    Ok(EmitCounts { plot_rows, error_rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_inferred_from_file_name() {
        let p: PlotInput = "out/bearing_pf_p15000_seed3.csv".parse().unwrap();
        assert_eq!(p.method, Method::Pf);
        let p: PlotInput = "ekf=some/file.csv".parse().unwrap();
        assert_eq!((p.method, p.path), (Method::Ekf, PathBuf::from("some/file.csv")));
        assert!("trajectory.csv".parse::<PlotInput>().is_err());
        assert!("kf=x.csv".parse::<PlotInput>().is_err());
    }
}
