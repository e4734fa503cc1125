//! Long-form sweep results: one row per (grid value, seed).
//!
//! Files are resumable. Rows already present for a requested (value, seed)
//! pair are kept verbatim, only missing pairs are computed, and the file is
//! rewritten sorted by value then seed. Rerunning a finished sweep therefore
//! leaves the file byte-identical, and parallel workers never change bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::harness::RunOutcome;

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub runtime_seconds: f64,
}

/// Exact-key wrapper so grid values can index a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key(u64, u64);

fn key(value: f64, seed: u64) -> Key {
    // total order on the bit pattern of non-negative floats matches numeric order
    Key(value.to_bits(), seed)
}

/// `a, a+step, ..., b` computed as `a + i*step` and rounded to 12 decimals
/// so that e.g. 0.3 is exactly the literal 0.3.
pub fn grid(start: f64, stop: f64, step: f64) -> anyhow::Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start {
        bail!("invalid grid {start}..={stop} step {step}");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn seeds(base: u64, repeats: usize) -> Vec<u64> {
    (0..repeats as u64).map(|i| base + i).collect()
}

pub fn read_rows(path: &Path, column: &str) -> anyhow::Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let expected = header(column);
    if headers.iter().ne(expected.iter().copied()) {
        bail!(
            "{} has columns {:?}, expected {:?}; use another output path or --fresh",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            expected
        );
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let num = |i: usize| -> anyhow::Result<f64> {
            r[i].parse::<f64>()
                .with_context(|| format!("{}: bad number `{}`", path.display(), &r[i]))
        };
        rows.push(SweepRow {
            value: num(0)?,
            seed: r[1].parse().with_context(|| format!("{}: bad seed `{}`", path.display(), &r[1]))?,
            roc_auc: num(2)?,
            pr_auc: num(3)?,
            runtime_seconds: num(4)?,
        });
    }
    Ok(rows)
}

fn header(column: &str) -> [&str; 5] {
    [column, "seed", "roc_auc", "pr_auc", "runtime_seconds"]
}

pub fn write_rows(path: &Path, column: &str, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header(column))?;
    for r in rows {
        w.write_record([
            r.value.to_string(),
            r.seed.to_string(),
            r.roc_auc.to_string(),
            r.pr_auc.to_string(),
            r.runtime_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `run(value, seed)` for every grid point and seed not already in
/// `existing`, on `jobs` threads. Returns the requested rows in canonical order
/// and how many were computed.
pub fn run_grid<F>(
    values: &[f64],
    seeds: &[u64],
    existing: Vec<SweepRow>,
    jobs: usize,
    run: F,
) -> anyhow::Result<(Vec<SweepRow>, usize)>
where
    F: Fn(f64, u64) -> anyhow::Result<RunOutcome> + Sync,
{
    let mut have: BTreeMap<Key, SweepRow> = existing.into_iter().map(|r| (key(r.value, r.seed), r)).collect();
    let todo: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .filter(|&(v, s)| !have.contains_key(&key(v, s)))
        .collect();

    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::with_capacity(todo.len()));
    let failure = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(todo.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= todo.len() || failure.lock().unwrap().is_some() {
                    break;
                }
                let (value, seed) = todo[i];
                match run(value, seed) {
                    Ok(o) => done.lock().unwrap().push(SweepRow {
                        value,
                        seed,
                        roc_auc: o.roc_auc,
                        pr_auc: o.pr_auc,
                        runtime_seconds: o.runtime_seconds(),
                    }),
                    Err(e) => {
                        failure
                            .lock()
                            .unwrap()
                            .get_or_insert(e.context(format!("run value={value} seed={seed}")));
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let computed = todo.len();
    for r in done.into_inner().unwrap() {
        have.insert(key(r.value, r.seed), r);
    }
    let mut wanted: Vec<SweepRow> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| key(v, s)))
        .map(|k| have[&k].clone())
        .collect();
    wanted.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)));
    Ok((wanted, computed))
}

/// Rows grouped by grid value, in value order.
pub fn by_value(rows: &[SweepRow]) -> Vec<(f64, Vec<&SweepRow>)> {
    let mut groups: Vec<(f64, Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(v, _)| *v == r.value) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.value, vec![r])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_are_clean() {
        let g = grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(grid(0.1, 1.0, 0.1).unwrap().len(), 10);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn resume_keeps_existing_rows() {
        let fake = |v: f64, s: u64| {
            Ok(RunOutcome {
                roc_auc: v,
                pr_auc: s as f64,
                fit_seconds: 1.0,
                score_seconds: 0.0,
            })
        };
        let (rows, computed) = run_grid(&[0.5, 0.1], &[2, 1], Vec::new(), 3, fake).unwrap();
        assert_eq!(computed, 4);
        let order: Vec<(f64, u64)> = rows.iter().map(|r| (r.value, r.seed)).collect();
        assert_eq!(order, vec![(0.1, 1), (0.1, 2), (0.5, 1), (0.5, 2)]);

        let mut edited = rows.clone();
        edited[0].runtime_seconds = 99.0;
        let (again, computed) = run_grid(&[0.1, 0.5], &[1, 2], edited.clone(), 1, fake).unwrap();
        assert_eq!(computed, 0);
        assert_eq!(again, edited);
    }
}
