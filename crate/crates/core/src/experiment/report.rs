//! Report assembly: a single-threaded reduction over completed cell files.
//!
//! Files written under `<out>/report/`:
//!
//! * `rows.csv`: `ratio,task_id,edit_distance,seed,error_rate`
//! * `figure_<name>.csv`: `ratio,x,mean_error,se,n` (mean and standard
//!   error over seeds)
//! * `comparisons.csv`: each ratio against the first configured ratio, per
//!   task, by a two-sided permutation test on per-seed error rates (used in
//!   place of a mixed-effects regression)
//! * `probe.csv` and `probe_summary.csv` when the probe is enabled

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{cell_name, TASK_PREFIX};
use crate::corpus::Ratio;
use crate::error::{Error, Result};
use crate::probes::{mean_se, permutation_test, ProbeResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub ratio: Ratio,
    pub task_id: String,
    pub edit_distance: Option<usize>,
    pub seed: u64,
    pub error_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportFiles {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub rows: Vec<ReportRow>,
}

#[derive(Deserialize)]
struct TaskFile {
    error_rate: f64,
}

#[derive(Deserialize)]
struct ProbeFile {
    result: ProbeResult,
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// Rows for every completed (ratio, seed, task), in config order.
pub fn collect_rows(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        for task in &cfg.tasks {
            for &seed in &cfg.seeds {
                let p = out.join("cells").join(cell_name(ratio, seed)).join(format!("{TASK_PREFIX}{}.json", task.id));
                if !p.exists() {
                    continue;
                }
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let f: TaskFile = serde_json::from_str(&text)?;
                rows.push(ReportRow { ratio, task_id: task.id.clone(), edit_distance: task.edit_distance(), seed, error_rate: f.error_rate });
            }
        }
    }
    Ok(rows)
}

/// One table per figure with mean and standard error over the rows sharing
/// (ratio, x). `rows` must follow config order.
pub fn figure_tables(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Result<BTreeMap<String, String>> {
    let mut groups: BTreeMap<String, Vec<(Ratio, String, Vec<f64>)>> = BTreeMap::new();
    for r in rows {
        let task = cfg.task(&r.task_id)?;
        let fig = groups.entry(task.figure().to_string()).or_default();
        let x = task.x();
        match fig.iter_mut().find(|(ratio, gx, _)| *ratio == r.ratio && *gx == x) {
            Some((_, _, v)) => v.push(r.error_rate),
            None => fig.push((r.ratio, x, vec![r.error_rate])),
        }
    }
    let mut tables = BTreeMap::new();
    for (name, entries) in groups {
        let mut text = String::from("ratio,x,mean_error,se,n\n");
        for (ratio, x, values) in entries {
            let m = mean_se(&values)?;
            writeln!(text, "{ratio},{x},{},{},{}", num(m.mean), num(m.se), m.n).unwrap();
        }
        tables.insert(name, text);
    }
    Ok(tables)
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    files.push(p);
    Ok(())
}

pub fn write_report(cfg: &ExperimentConfig, out: &Path) -> Result<ReportFiles> {
    let dir = out.join("report");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    let rows = collect_rows(cfg, out)?;

    let mut text = String::from("ratio,task_id,edit_distance,seed,error_rate\n");
    for r in &rows {
        let d = r.edit_distance.map(|d| d.to_string()).unwrap_or_default();
        writeln!(text, "{},{},{d},{},{}", r.ratio, r.task_id, r.seed, num(r.error_rate)).unwrap();
    }
    write(&dir, "rows.csv", &text, &mut files)?;

    for (name, table) in figure_tables(cfg, &rows)? {
        write(&dir, &format!("figure_{name}.csv"), &table, &mut files)?;
    }

    let mut text = String::from("task_id,ratio,baseline,test,mean_diff,p_value,degenerate,n_perm\n");
    let baseline = cfg.ratios[0];
    for task in &cfg.tasks {
        let errors = |ratio: Ratio| -> Vec<f64> {
            rows.iter().filter(|r| r.task_id == task.id && r.ratio == ratio).map(|r| r.error_rate).collect()
        };
        let base = errors(baseline);
        for &ratio in &cfg.ratios[1..] {
            let other = errors(ratio);
            if base.is_empty() || other.is_empty() {
                continue;
            }
            let t = permutation_test(&other, &base, cfg.n_perm, 0)?;
            writeln!(text, "{},{ratio},{baseline},permutation,{},{},{},{}", task.id, num(t.observed), num(t.p_value), t.degenerate, t.n_perm).unwrap();
        }
    }
    write(&dir, "comparisons.csv", &text, &mut files)?;

    if cfg.probe.is_some() {
        let mut text = String::from("ratio,seed,accuracy,n_train,n_test\n");
        let mut summary = String::from("ratio,mean_accuracy,se,n\n");
        for &ratio in &cfg.ratios {
            let mut acc = Vec::new();
            for &seed in &cfg.seeds {
                let p = out.join("cells").join(cell_name(ratio, seed)).join("probe.json");
                if !p.exists() {
                    continue;
                }
                let s = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let r = serde_json::from_str::<ProbeFile>(&s)?.result;
                writeln!(text, "{ratio},{seed},{},{},{}", num(r.accuracy), r.n_train, r.n_test).unwrap();
                acc.push(r.accuracy);
            }
            if !acc.is_empty() {
                let m = mean_se(&acc)?;
                writeln!(summary, "{ratio},{},{},{}", num(m.mean), num(m.se), m.n).unwrap();
            }
        }
        write(&dir, "probe.csv", &text, &mut files)?;
        write(&dir, "probe_summary.csv", &summary, &mut files)?;
    }
    Ok(ReportFiles { dir, files, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
            "name": "t",
            "corpora": {"a": {"preset": "test_a", "preset_seed": 1, "seed": 2}},
            "languages": ["a", "a"],
            "ratios": [[100, 0], [0, 100]],
            "budgets": {"tokens": 10, "pairs": 20},
            "tasks": [
                {"id": "e1", "corpus": "a", "n": 5, "seed": 1, "figure": "ed", "task": {"kind": "edit_distance", "distance": 1}},
                {"id": "e2", "corpus": "a", "n": 5, "seed": 1, "figure": "ed", "task": {"kind": "edit_distance", "distance": 2}}
            ],
            "seeds": [1, 2]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn figure_groups_over_seeds() {
        let c = cfg();
        let r = |ratio: [u32; 2], task: &str, seed: u64, e: f64| ReportRow {
            ratio: Ratio::try_from(ratio).unwrap(),
            task_id: task.into(),
            edit_distance: None,
            seed,
            error_rate: e,
        };
        let rows = vec![r([100, 0], "e1", 1, 10.0), r([100, 0], "e1", 2, 20.0), r([100, 0], "e2", 1, 4.0), r([100, 0], "e2", 2, 6.0)];
        let t = figure_tables(&c, &rows).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t["ed"],
            "ratio,x,mean_error,se,n\n100:0,1,15.000000,5.000000,2\n100:0,2,5.000000,1.000000,2\n"
        );
        let single = figure_tables(&c, &rows[..1]).unwrap();
        assert!(single["ed"].ends_with("100:0,1,10.000000,0.000000,1\n"));
    }
}
