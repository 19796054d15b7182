//! Grid experiments: one Monte Carlo estimate per (schedule, n, K) cell.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::mc::{mc_distance_sq_detailed, MIN_TRIALS};
use crate::engine::Sampling;
use crate::error::{Error, Result};
use crate::numerics::mix_seed;
use crate::problems::{Family, ProblemSpec, DEFAULT_RADIUS};
use crate::schedules::{ProblemConstants, StepSchedule};

pub const CSV_HEADER: &str = "family,schedule,alpha,n,K,trials,mean,half_width,exited_frac,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub d: usize,
    pub n_grid: Vec<usize>,
    #[serde(rename = "K_grid")]
    pub k_grid: Vec<usize>,
    pub schedules: Vec<StepSchedule>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
}

fn default_sampling() -> Sampling {
    Sampling::WithoutReplacement
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or(DEFAULT_RADIUS)
    }

    /// Problem generated for grid size `n`.
    pub fn problem_spec(&self, n: usize) -> ProblemSpec {
        ProblemSpec {
            kind: self.family,
            n,
            d: self.d,
            mu: self.mu,
            l: self.l,
            seed: mix_seed(self.master_seed, n as u64),
            radius: self.radius(),
        }
    }

    /// Collects every problem with the config instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let constants_ok = self.mu.is_finite() && self.mu > 0.0 && self.l.is_finite() && self.l >= self.mu;
        if !(self.mu.is_finite() && self.mu > 0.0) {
            errors.push(format!("mu: must be positive and finite, got {}", self.mu));
        }
        if !self.l.is_finite() || !(self.l >= self.mu) {
            errors.push(format!("L: must be finite and at least mu, got {}", self.l));
        }
        if self.d == 0 {
            errors.push("d: must be at least 1".to_string());
        } else if self.d == 1 && constants_ok && self.l != self.mu {
            errors.push("d: a one-dimensional problem needs L = mu".to_string());
        }
        if self.n_grid.is_empty() {
            errors.push("n_grid: must not be empty".to_string());
        }
        if self.n_grid.contains(&0) {
            errors.push("n_grid: entries must be at least 1".to_string());
        }
        if self.k_grid.is_empty() {
            errors.push("K_grid: must not be empty".to_string());
        }
        if self.k_grid.contains(&0) {
            errors.push("K_grid: entries must be at least 1".to_string());
        }
        if self.trials < MIN_TRIALS {
            errors.push(format!("trials: need at least {MIN_TRIALS}, got {}", self.trials));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                errors.push(format!("radius: must be positive and finite, got {r}"));
            }
        }
        if self.schedules.is_empty() {
            errors.push("schedules: must not be empty".to_string());
        }
        for (j, schedule) in self.schedules.iter().enumerate() {
            if let Err(e) = schedule.validate() {
                errors.push(format!("schedules[{j}]: {e}"));
                continue;
            }
            if !constants_ok {
                continue;
            }
            let limit = 2.0 / self.l;
            'grid: for &n in self.n_grid.iter().filter(|&&n| n > 0) {
                for &k in self.k_grid.iter().filter(|&&k| k > 0) {
                    let Ok(consts) = ProblemConstants::new(self.mu, self.l, n) else { continue };
                    match schedule.max_step(&consts.with_epochs(k), k) {
                        Ok(step) if step > limit * (1.0 + 1e-12) => {
                            errors.push(format!(
                                "schedules[{j}]: step {step:e} at n={n}, K={k} exceeds the 2/L limit {limit:e}"
                            ));
                            break 'grid;
                        }
                        Ok(_) => {}
                        Err(e) => {
                            errors.push(format!("schedules[{j}]: {e}"));
                            break 'grid;
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: Family,
    pub schedule: String,
    pub alpha: f64,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: usize,
    pub mean: f64,
    pub half_width: f64,
    pub exited_frac: f64,
    pub seed: u64,
}

/// Seed of the cell for schedule `j` at grid point `(n, K)`.
pub fn cell_seed(master_seed: u64, schedule_index: usize, n: usize, k: usize) -> u64 {
    let s = mix_seed(master_seed, schedule_index as u64 + 1);
    mix_seed(mix_seed(s, n as u64), k as u64)
}

/// Runs every cell, ordered by schedule, then `n`, then `K`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.schedules.len() * cfg.n_grid.len() * cfg.k_grid.len());
    let problems = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let spec = cfg.problem_spec(n);
            spec.build().map(|p| {
                let x0 = p.default_start(spec.seed);
                (p, x0)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (j, schedule) in cfg.schedules.iter().enumerate() {
        for (&n, (problem, x0)) in cfg.n_grid.iter().zip(&problems) {
            for &k in &cfg.k_grid {
                let seed = cell_seed(cfg.master_seed, j, n, k);
                let summary = mc_distance_sq_detailed(problem, schedule, x0, k, cfg.trials, seed, cfg.sampling)?;
                rows.push(SweepRow {
                    family: cfg.family,
                    schedule: schedule.name().to_string(),
                    alpha: schedule.parameter(),
                    n,
                    k,
                    trials: cfg.trials,
                    mean: summary.estimate.mean,
                    half_width: summary.estimate.half_width,
                    exited_frac: summary.exited_fraction,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes rows under a `# rrsgd-core <version> master_seed=<seed>` comment line.
pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow], master_seed: u64) -> Result<()> {
    writeln!(out, "# rrsgd-core {} master_seed={master_seed}", env!("CARGO_PKG_VERSION"))?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep table, skipping `#` comment lines.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(vec![format!(
            "csv header: expected `{CSV_HEADER}`, got `{}`",
            header.join(",")
        )]));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            family: Family::Quadratic,
            mu: 1.0,
            l: 4.0,
            d: 3,
            n_grid: vec![4],
            k_grid: vec![2, 4],
            schedules: vec![StepSchedule::two_phase(3.0).unwrap()],
            trials: 30,
            master_seed: 11,
            output_path: None,
            radius: None,
            sampling: Sampling::WithoutReplacement,
        }
    }

    #[test]
    fn validation_lists_every_field() {
        let mut c = config();
        c.mu = -1.0;
        c.n_grid.clear();
        c.trials = 3;
        c.schedules.push(StepSchedule::Constant { eta: 5.0 });
        let Err(Error::Config(errs)) = c.validate() else { panic!("expected config error") };
        assert!(errs.iter().any(|e| e.starts_with("mu")));
        assert!(errs.iter().any(|e| e.starts_with("n_grid")));
        assert!(errs.iter().any(|e| e.starts_with("trials")));
        let mut c = config();
        c.schedules.push(StepSchedule::Constant { eta: 5.0 });
        let Err(Error::Config(errs)) = c.validate() else { panic!("expected config error") };
        assert!(errs.iter().any(|e| e.starts_with("schedules[1]") && e.contains("2/L")));
    }

    #[test]
    fn zero_step_rows_keep_start_distance() {
        let mut c = config();
        c.schedules = vec![StepSchedule::constant(0.0).unwrap()];
        let rows = sweep(&c).unwrap();
        let r = c.radius() / 2.0;
        for row in rows {
            assert!((row.mean - r * r).abs() < 1e-12);
            assert_eq!(row.half_width, 0.0);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let rows = sweep(&config()).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, 11).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# rrsgd-core "));
        assert_eq!(text.lines().nth(1), Some(CSV_HEADER));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn config_json_shape() {
        let json = r#"{"family":"quadratic","mu":1,"L":4,"d":3,"n_grid":[4],"K_grid":[2],
            "schedules":[{"variant":"two_phase","alpha":3}],"trials":30,"master_seed":1}"#;
        let c = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(c.k_grid, vec![2]);
        assert!(ExperimentConfig::from_json(r#"{"family":"quadratic","bogus":1}"#).is_err());
    }
}
