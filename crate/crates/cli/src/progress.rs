use std::path::Path;

use rrsgd_core::analysis::{
    check_per_epoch_bound, check_per_iteration_bound, check_quadratic_epoch_bound, BoundCheck, Verdict,
};
use rrsgd_core::numerics::mix_seed;
use rrsgd_core::{ExperimentConfig, Family};

use crate::{emit, Failure};

/// Per problem in the grid: the per-iteration bound at every `i` with `η = 1/(2L)`,
/// the per-epoch bound at `η = 1/(8nκL)` and, for quadratics, the quadratic epoch
/// bound at `η = 1/(16nκL)`; each from the default start and from `x*`.
pub fn verify(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut rows: Vec<(usize, Option<usize>, BoundCheck)> = Vec::new();
    for &n in &cfg.n_grid {
        let spec = cfg.problem_spec(n);
        let p = spec.build()?;
        let seed = mix_seed(cfg.master_seed, 0x5052_4f47 ^ n as u64);
        let nk = n as f64 * p.kappa() * p.l();
        for state in [p.default_start(spec.seed), p.x_star().clone()] {
            for i in 0..n {
                let s = mix_seed(seed, i as u64);
                rows.push((n, Some(i), check_per_iteration_bound(&p, &state, 1, i, 0.5 / p.l(), cfg.trials, s)?));
            }
            rows.push((n, None, check_per_epoch_bound(&p, &state, 1.0 / (8.0 * nk), cfg.trials, seed)?));
            if p.family() == Family::Quadratic {
                rows.push((n, None, check_quadratic_epoch_bound(&p, &state, 1.0 / (16.0 * nk), cfg.trials, seed)?));
            }
        }
    }
    emit(out, |w| {
        writeln!(
            w,
            "# rrsgd {} verify-progress-bounds master_seed={}",
            env!("CARGO_PKG_VERSION"),
            cfg.master_seed
        )?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "family", "n", "bound", "i", "eta", "trials", "lhs_mean", "lhs_std_err", "rhs_mean", "rhs_std_err", "g",
            "radius", "locality_breach", "verdict",
        ])?;
        for (n, i, c) in &rows {
            let verdict = match c.verdict {
                Verdict::Holds => "holds",
                Verdict::Inconclusive => "inconclusive",
                Verdict::Violated => "violated",
            };
            csv.write_record([
                cfg.family.to_string(),
                n.to_string(),
                c.bound.as_str().to_string(),
                i.map_or(String::new(), |i| i.to_string()),
                c.eta.to_string(),
                c.lhs.trials.to_string(),
                c.lhs.mean.to_string(),
                c.lhs.std_err.to_string(),
                c.rhs.mean.to_string(),
                c.rhs.std_err.to_string(),
                c.g.to_string(),
                c.radius.to_string(),
                c.locality_breach.to_string(),
                verdict.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let violated = rows.iter().filter(|r| r.2.verdict == Verdict::Violated).count();
    let inconclusive = rows.iter().filter(|r| r.2.verdict == Verdict::Inconclusive).count();
    eprintln!("{} checks, {violated} violated, {inconclusive} inconclusive", rows.len());
    if violated > 0 {
        return Err(Failure::violation(format!("{violated} confirmed bound violations")));
    }
    Ok(())
}
