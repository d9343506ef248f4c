//! CSV output of experiment runs.
//!
//! `trials.csv` holds one row per (sweep value, algorithm, trial) and
//! `aggregates.csv` one row per (sweep value, algorithm). Both start with a
//! `schema_version` column. Floats use Rust's shortest round-trip formatting,
//! list cells are `;`-separated, positions are written `x:y`, and an unswept
//! run leaves `sweep_field` and `sweep_value` empty. Failed trials carry
//! `status = failed` and the error in `error`, with the numeric cells empty.

use std::path::{Path, PathBuf};

use crate::channel::Point;
use crate::error::{Error, Result};
use crate::experiment::{Aggregate, Algorithm, ExperimentResults, TrialRecord};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const METADATA_FILE: &str = "run.toml";

pub const TRIALS_HEADER: [&str; 19] = [
    "schema_version",
    "algorithm",
    "sweep_field",
    "sweep_value",
    "trial",
    "status",
    "error",
    "weighted_sum_rate",
    "dl_rates",
    "ul_rates",
    "outer_iterations",
    "bsum_sweeps",
    "converged",
    "block_violations",
    "wall_time_s",
    "transmit_positions",
    "receive_positions",
    "objective_trace",
    "evaluated_trace",
];

pub const AGGREGATES_HEADER: [&str; 17] = [
    "schema_version",
    "algorithm",
    "sweep_field",
    "sweep_value",
    "n_ok",
    "n_failed",
    "mean",
    "std",
    "min",
    "p25",
    "median",
    "p75",
    "max",
    "mean_iterations",
    "median_iterations",
    "mean_wall_time_s",
    "duplex_factor",
];

/// Columns that hold timings and therefore differ between identical runs.
pub const WALL_TIME_COLUMNS: [&str; 2] = ["wall_time_s", "mean_wall_time_s"];

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn positions(ps: &[Point]) -> String {
    join(ps.iter().map(|p| format!("{}:{}", p.x, p.y)))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn trial_row(field: &str, r: &TrialRecord) -> Vec<String> {
    let mut row = vec![
        SCHEMA_VERSION.to_string(),
        r.algorithm.to_string(),
        field.to_string(),
        opt(r.sweep_value),
        r.trial.to_string(),
    ];
    match &r.outcome {
        Ok(res) => row.extend([
            "ok".to_string(),
            String::new(),
            res.weighted_sum_rate.to_string(),
            join(&res.dl_rates),
            join(&res.ul_rates),
            res.outer_iterations.to_string(),
            res.bsum_sweeps.to_string(),
            res.converged.to_string(),
            res.block_violations.to_string(),
            res.wall_time_s.to_string(),
            positions(&res.layout.transmit),
            positions(&res.layout.receive),
            join(&res.objective_trace),
            join(&res.evaluated_trace),
        ]),
        Err(msg) => {
            row.extend(["failed".to_string(), msg.clone()]);
            row.resize(TRIALS_HEADER.len(), String::new());
        }
    }
    row
}

fn aggregate_row(field: &str, a: &Aggregate, duplex_factor: f64) -> Vec<String> {
    vec![
        SCHEMA_VERSION.to_string(),
        a.algorithm.to_string(),
        field.to_string(),
        opt(a.sweep_value),
        a.n_ok.to_string(),
        a.n_failed.to_string(),
        a.mean.to_string(),
        a.std.to_string(),
        a.min.to_string(),
        a.p25.to_string(),
        a.median.to_string(),
        a.p75.to_string(),
        a.max.to_string(),
        a.mean_iterations.to_string(),
        a.median_iterations.to_string(),
        a.mean_wall_time_s.to_string(),
        if a.algorithm == Algorithm::Hd {
            duplex_factor.to_string()
        } else {
            String::new()
        },
    ]
}

/// Writes `trials.csv`, `aggregates.csv` and `run.toml` into `dir`,
/// creating it if needed. Returns the two CSV paths.
pub fn emit_csv(results: &ExperimentResults, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    if results.records.is_empty() {
        return Err(crate::error::config("no results to write"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let field = results.spec.sweep.as_ref().map(|s| s.field.name()).unwrap_or("");

    let trials_path = dir.join(TRIALS_FILE);
    let mut w = csv::Writer::from_path(&trials_path)?;
    w.write_record(TRIALS_HEADER)?;
    for r in &results.records {
        w.write_record(trial_row(field, r))?;
    }
    w.flush()?;

    let agg_path = dir.join(AGGREGATES_FILE);
    let mut w = csv::Writer::from_path(&agg_path)?;
    w.write_record(AGGREGATES_HEADER)?;
    for a in &results.aggregates {
        w.write_record(aggregate_row(field, a, results.spec.duplex_factor))?;
    }
    w.flush()?;

    std::fs::write(dir.join(METADATA_FILE), metadata(results))?;
    Ok((trials_path, agg_path))
}

fn metadata(results: &ExperimentResults) -> String {
    let spec = &results.spec;
    let mut s = format!("schema_version = {SCHEMA_VERSION}\nseed = {}\ntrials = {}\n", spec.seed, spec.trials);
    s += &format!("algorithms = [{}]\n", join(spec.algorithms.iter().map(|a| format!("\"{a}\""))).replace(';', ", "));
    if let Some(sweep) = &spec.sweep {
        s += &format!("sweep = \"{}={}\"\n", sweep.field, join(&sweep.values).replace(';', ","));
    }
    s += &format!(
        "duplex_factor = {:?}\ntheta_m = {:?}\nsigma_e2 = {:?}\nsimplified_geometry = {}\nmax_outer = {}\n",
        spec.duplex_factor, spec.theta_m, spec.sigma_e2, spec.simplified_geometry, spec.max_outer
    );
    s
}

fn parse_f64(cell: &str) -> Result<f64> {
    cell.parse().map_err(|_| Error::Parse(format!("bad number `{cell}`")))
}

fn parse_opt(cell: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_f64(cell).map(Some)
    }
}

fn parse_usize(cell: &str) -> Result<usize> {
    cell.parse().map_err(|_| Error::Parse(format!("bad count `{cell}`")))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {found:?}")));
    }
    Ok(())
}

/// Reads an `aggregates.csv` back.
pub fn read_aggregates(path: impl AsRef<Path>) -> Result<Vec<Aggregate>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &AGGREGATES_HEADER)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        if parse_usize(&row[0])? as u32 != SCHEMA_VERSION {
            return Err(Error::Parse(format!("schema version {} not supported", &row[0])));
        }
        out.push(Aggregate {
            algorithm: row[1].parse()?,
            sweep_value: parse_opt(&row[3])?,
            n_ok: parse_usize(&row[4])?,
            n_failed: parse_usize(&row[5])?,
            mean: parse_f64(&row[6])?,
            std: parse_f64(&row[7])?,
            min: parse_f64(&row[8])?,
            p25: parse_f64(&row[9])?,
            median: parse_f64(&row[10])?,
            p75: parse_f64(&row[11])?,
            max: parse_f64(&row[12])?,
            mean_iterations: parse_f64(&row[13])?,
            median_iterations: parse_f64(&row[14])?,
            mean_wall_time_s: parse_f64(&row[15])?,
        });
    }
    Ok(out)
}

/// One parsed row of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub algorithm: Algorithm,
    pub sweep_value: Option<f64>,
    pub trial: u64,
    pub ok: bool,
    pub weighted_sum_rate: Option<f64>,
    pub outer_iterations: Option<usize>,
    pub objective_trace: Vec<f64>,
    pub evaluated_trace: Vec<f64>,
}

fn parse_list(cell: &str) -> Result<Vec<f64>> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';').map(parse_f64).collect()
}

/// Reads a `trials.csv` back (the columns needed for analysis).
pub fn read_trials(path: impl AsRef<Path>) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &TRIALS_HEADER)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let ok = &row[5] == "ok";
        out.push(TrialRow {
            algorithm: row[1].parse()?,
            sweep_value: parse_opt(&row[3])?,
            trial: row[4].parse().map_err(|_| Error::Parse(format!("bad trial `{}`", &row[4])))?,
            ok,
            weighted_sum_rate: parse_opt(&row[7])?,
            outer_iterations: if ok { Some(parse_usize(&row[10])?) } else { None },
            objective_trace: parse_list(&row[17])?,
            evaluated_trace: parse_list(&row[18])?,
        });
    }
    Ok(out)
}

/// File contents with the wall-time columns blanked, for byte comparison.
pub fn without_wall_time(path: impl AsRef<Path>) -> Result<String> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let skip: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| WALL_TIME_COLUMNS.contains(h))
        .map(|(i, _)| i)
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in r.records() {
        let row = row?;
        w.write_record(row.iter().enumerate().map(|(i, c)| if skip.contains(&i) { "" } else { c }))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::experiment::{run_experiment, ExperimentSpec};

    fn run() -> ExperimentResults {
        let spec = ExperimentSpec {
            base: ScenarioConfig::default().with_users(1).with_antennas(1),
            sweep: Some("A=1,2".parse().unwrap()),
            algorithms: vec![Algorithm::FpBsum, Algorithm::Hd],
            trials: 2,
            seed: 8,
            ..Default::default()
        };
        run_experiment(&spec).unwrap()
    }

    #[test]
    fn headers_rows_and_round_trip() {
        let res = run();
        let dir = tempfile::tempdir().unwrap();
        let (trials, aggs) = emit_csv(&res, dir.path()).unwrap();
        let text = std::fs::read_to_string(&trials).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRIALS_HEADER.join(","));
        assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
        let atext = std::fs::read_to_string(&aggs).unwrap();
        assert_eq!(atext.lines().next().unwrap(), AGGREGATES_HEADER.join(","));
        assert_eq!(read_aggregates(&aggs).unwrap(), res.aggregates);
        let rows = read_trials(&trials).unwrap();
        assert_eq!(rows.len(), res.records.len());
        for (row, rec) in rows.iter().zip(&res.records) {
            let r = rec.outcome.as_ref().unwrap();
            assert_eq!(row.weighted_sum_rate, Some(r.weighted_sum_rate));
            assert_eq!(row.objective_trace, r.objective_trace);
        }
        let meta = std::fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap();
        assert!(meta.parse::<toml::Table>().unwrap()["duplex_factor"].as_float() == Some(0.5));
    }

    #[test]
    fn failures_leave_numeric_cells_empty() {
        let mut res = run();
        res.records[0].outcome = Err("boom".into());
        let dir = tempfile::tempdir().unwrap();
        let (trials, _) = emit_csv(&res, dir.path()).unwrap();
        let rows = read_trials(&trials).unwrap();
        assert!(!rows[0].ok);
        assert_eq!(rows[0].weighted_sum_rate, None);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let res = run();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        assert!(matches!(emit_csv(&res, file.join("sub")), Err(Error::Io(_))));
    }
}
