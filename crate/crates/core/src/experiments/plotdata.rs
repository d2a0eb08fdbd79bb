//! Flat CSV outputs: one row per run plus mean ± sample-std aggregates keyed by
//! the swept variable, one series per method (and per any other varying setting).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Scenario;
use super::record::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub series: String,
    pub x: f64,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single run.
    pub std: f64,
}

/// The headline metric and x-axis parameter of each scenario's plot.
pub fn default_axes(scenario: Scenario) -> (&'static str, &'static str) {
    match scenario {
        Scenario::IcaPcl => ("mean_abs_corr", "t"),
        Scenario::IcaRobustness => ("mean_abs_corr", "epsilon"),
        Scenario::IcaDimsweep => ("mean_abs_corr", "d_u"),
        Scenario::GaussianRatio => ("ratio_rmse", "t"),
        Scenario::Nuisance => ("dep_n", "d_u"),
        Scenario::Downstream => ("probe_accuracy", "epsilon"),
        Scenario::VerifyTheory => ("passed", "check"),
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups finished runs by series and `x_param`. The series label is the method
/// followed by every other parameter that varies across `records`.
pub fn aggregate(records: &[RunRecord], metric: &str, x_param: &str) -> Vec<AggregateRow> {
    let mut varying = BTreeSet::new();
    if let Some(first) = records.first() {
        for r in records {
            for (k, v) in &r.params {
                if k != x_param && first.params.get(k) != Some(v) {
                    varying.insert(k.clone());
                }
            }
        }
    }
    let mut groups: BTreeMap<(String, u64), (f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let (Some(value), Some(x)) = (r.metric(metric), r.param(x_param)) else { continue };
        let mut series = r.method.clone();
        for k in &varying {
            if let Some(v) = r.param(k) {
                series.push_str(&format!(" {k}={v}"));
            }
        }
        groups.entry((series, x.to_bits())).or_insert((x, Vec::new())).1.push(value);
    }
    let mut rows: Vec<AggregateRow> = groups
        .into_iter()
        .map(|((series, _), (x, vals))| {
            let (mean, std) = mean_std(&vals);
            AggregateRow { series, x, n: vals.len(), mean, std }
        })
        .collect();
    rows.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.total_cmp(&b.x)));
    rows
}

#[derive(Debug, Clone)]
pub struct PlotFiles {
    pub runs: PathBuf,
    pub aggregate: PathBuf,
    pub records: PathBuf,
}

/// Writes `runs.csv`, `aggregate.csv` and `records.json` (with loss traces) into `dir`.
pub fn emit_plotdata(records: &[RunRecord], dir: &Path, metric: &str, x_param: &str) -> Result<PlotFiles> {
    if records.is_empty() {
        return Err(Error::Config("plot data needs at least one record".into()));
    }
    std::fs::create_dir_all(dir)?;
    let files = PlotFiles { runs: dir.join("runs.csv"), aggregate: dir.join("aggregate.csv"), records: dir.join("records.json") };

    let params: BTreeSet<&String> = records.iter().flat_map(|r| r.params.keys()).collect();
    let metrics: BTreeSet<&String> = records.iter().flat_map(|r| r.metrics.keys()).collect();
    let mut w = csv::Writer::from_path(&files.runs)?;
    let mut header = vec!["run_id".to_string(), "scenario".into(), "method".into(), "seed".into(), "config_hash".into()];
    header.extend(params.iter().map(|p| p.to_string()));
    header.extend(metrics.iter().map(|m| m.to_string()));
    header.extend(["final_loss".into(), "wall_time_s".into(), "failed".into(), "failed_epoch".into()]);
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![i.to_string(), r.scenario.clone(), r.method.clone(), r.seed.to_string(), r.config_hash.clone()];
        row.extend(params.iter().map(|p| opt(r.param(p))));
        row.extend(metrics.iter().map(|m| opt(r.metric(m))));
        row.push(opt(r.losses.last().copied()));
        row.push(r.wall_time_s.to_string());
        row.push(u8::from(r.failed()).to_string());
        row.push(r.failure.as_ref().map_or(String::new(), |f| f.epoch.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.aggregate)?;
    w.write_record(["series", x_param, "n", &format!("{metric}_mean"), &format!("{metric}_std")])?;
    for a in aggregate(records, metric, x_param) {
        w.write_record([a.series, a.x.to_string(), a.n.to_string(), a.mean.to_string(), a.std.to_string()])?;
    }
    w.flush()?;

    std::fs::write(&files.records, serde_json::to_string_pretty(records)?)?;
    Ok(files)
}

pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, eps: f64, seed: u64, corr: f64) -> RunRecord {
        RunRecord {
            scenario: "ica_robustness".into(),
            method: method.into(),
            config_hash: "h".into(),
            seed,
            params: BTreeMap::from([("epsilon".into(), eps), ("layers".into(), 2.0)]),
            losses: vec![1.0, 0.5],
            metrics: BTreeMap::from([("mean_abs_corr".into(), corr)]),
            wall_time_s: 0.1,
            failure: None,
        }
    }

    #[test]
    fn one_record_one_row_each() {
        let dir = tempfile::tempdir().unwrap();
        let f = emit_plotdata(&[rec("dv", 0.0, 1, 0.9)], dir.path(), "mean_abs_corr", "epsilon").unwrap();
        assert_eq!(std::fs::read_to_string(f.runs).unwrap().lines().count(), 2);
        let agg = std::fs::read_to_string(f.aggregate).unwrap();
        assert_eq!(agg.lines().count(), 2);
        assert!(agg.lines().nth(1).unwrap().starts_with("dv,0,1,0.9,0"));
        assert_eq!(load_records(&f.records).unwrap(), vec![rec("dv", 0.0, 1, 0.9)]);
    }

    #[test]
    fn records_reload_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rec("dv", 0.1, 3, 0.1 + 0.2);
        r.losses = (1..50).map(|i| 1.0 / (i as f64) + 1e-17 * i as f64).collect();
        let f = emit_plotdata(std::slice::from_ref(&r), dir.path(), "mean_abs_corr", "epsilon").unwrap();
        assert_eq!(load_records(&f.records).unwrap(), vec![r]);
    }

    #[test]
    fn sample_std_over_ten_seeds() {
        let vals: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let recs: Vec<_> = vals.iter().enumerate().map(|(i, &v)| rec("lr", 0.1, i as u64, v)).collect();
        let a = aggregate(&recs, "mean_abs_corr", "epsilon");
        assert_eq!(a.len(), 1);
        let mean = 0.45;
        let want = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0).sqrt();
        assert!((a[0].std - want).abs() < 1e-12);
        assert_eq!(a[0].n, 10);
    }

    #[test]
    fn robustness_series_per_method_over_epsilon() {
        let mut recs = Vec::new();
        for m in ["lr", "gamma", "dv"] {
            for e in [0.0, 0.1, 0.3] {
                recs.push(rec(m, e, 0, 0.5));
            }
        }
        let a = aggregate(&recs, "mean_abs_corr", "epsilon");
        let series: BTreeSet<_> = a.iter().map(|r| r.series.as_str()).collect();
        assert_eq!(series, BTreeSet::from(["dv", "gamma", "lr"]));
        assert!(a.iter().all(|r| r.n == 1));
        assert_eq!(a.len(), 9);
    }

    #[test]
    fn varying_settings_split_series() {
        let mut a = rec("dv", 0.0, 0, 0.8);
        a.params.insert("layers".into(), 1.0);
        let rows = aggregate(&[a, rec("dv", 0.0, 0, 0.6)], "mean_abs_corr", "epsilon");
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().any(|r| r.series == "dv layers=1"));
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        let e = emit_plotdata(&[rec("dv", 0.0, 1, 0.9)], &file.join("sub"), "mean_abs_corr", "epsilon").unwrap_err();
        assert!(matches!(e, Error::Io(_)), "{e:?}");
    }

    #[test]
    fn empty_is_rejected() {
        assert!(emit_plotdata(&[], Path::new("."), "m", "x").is_err());
    }
}
