//! Random draws of recurrence parameters, each bound compared with its oracle.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrsgd_core::recurrences::{
    chung_bound, recursion_oracle_chung_series, recursion_oracle_extended_series, recursion_oracle_variant_series,
    extended_variant_bound, variant_bound, ChungParams, VariantParams,
};
use rrsgd_core::Error;

use crate::{emit, Failure};

const REL_SLACK: f64 = 1e-12;

struct Row {
    draw: usize,
    lemma: &'static str,
    k: usize,
    oracle: f64,
    bound: f64,
}

fn variant(rng: &mut ChaCha8Rng) -> Result<VariantParams, Error> {
    let beta = rng.random_range(0.5..3.0);
    VariantParams::new(
        rng.random_range(0.5..60.0),
        beta + rng.random_range(0.05..5.0),
        beta,
        rng.random_range(0.01..4.0),
        rng.random_range(0.0..10.0),
        rng.random_range(0.0..100.0),
        rng.random_range(1..=32),
        rng.random_range(0.0..10.0),
    )
}

fn draw_rows(draw: usize, rng: &mut ChaCha8Rng, max_epochs: usize, rows: &mut Vec<Row>) -> Result<(), Error> {
    let beta = rng.random_range(0.2..3.0);
    let chung = ChungParams::new(
        rng.random_range(0.1..60.0),
        beta + rng.random_range(0.05..5.0),
        beta,
        rng.random_range(0.0..100.0),
        rng.random_range(0.0..10.0),
    )?;
    for (k, oracle) in (1..).zip(recursion_oracle_chung_series(&chung, max_epochs)) {
        rows.push(Row { draw, lemma: "chung", k, oracle, bound: chung_bound(&chung, k)? });
    }

    let two = variant(rng)?;
    for (k, oracle) in (1..).zip(recursion_oracle_variant_series(&two, max_epochs)) {
        rows.push(Row { draw, lemma: "two_parameter", k, oracle, bound: variant_bound(&two, k)? });
    }

    let base = variant(rng)?;
    let gamma = rng.random_range(0.05..base.alpha - 0.01);
    let ext = base.with_extension(rng.random_range(0.0..100.0), gamma)?;
    for (k, oracle) in (1..).zip(recursion_oracle_extended_series(&ext, max_epochs)?) {
        rows.push(Row { draw, lemma: "extended", k, oracle, bound: extended_variant_bound(&ext, k)? });
    }
    Ok(())
}

pub fn verify(draws: usize, seed: u64, max_epochs: usize, out: Option<&Path>) -> Result<(), Failure> {
    if max_epochs == 0 {
        return Err(Failure::config("--max-epochs must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(draws * 3 * max_epochs);
    for draw in 0..draws {
        draw_rows(draw, &mut rng, max_epochs, &mut rows)?;
    }
    let violations = rows
        .iter()
        .filter(|r| r.bound - r.oracle < -REL_SLACK * r.oracle.abs().max(r.bound.abs()))
        .count();
    emit(out, |w| {
        writeln!(w, "# rrsgd {} verify-recurrences seed={seed}", env!("CARGO_PKG_VERSION"))?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["draw_id", "lemma", "K", "oracle", "bound", "slack"])?;
        for r in &rows {
            csv.write_record([
                r.draw.to_string(),
                r.lemma.to_string(),
                r.k.to_string(),
                r.oracle.to_string(),
                r.bound.to_string(),
                (r.bound - r.oracle).to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    eprintln!("{} comparisons, {violations} violations", rows.len());
    if violations > 0 {
        return Err(Failure::violation(format!("{violations} bounds fell below their recursion")));
    }
    Ok(())
}
