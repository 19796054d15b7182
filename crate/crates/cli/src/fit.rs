use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;

use rrsgd_core::analysis::sweep::read_csv;
use rrsgd_core::{fit_rate, RateFit, SweepRow};

use crate::{emit, with_path, Failure};

const KEY_COLUMNS: [&str; 5] = ["family", "schedule", "alpha", "n", "K"];

#[derive(Serialize)]
struct GroupFit {
    group: BTreeMap<String, String>,
    #[serde(flatten)]
    fit: RateFit,
}

#[derive(Serialize)]
struct Skipped {
    group: BTreeMap<String, String>,
    reason: String,
}

#[derive(Serialize)]
struct FitReport {
    input: String,
    scale: String,
    group_by: Vec<String>,
    fits: Vec<GroupFit>,
    skipped: Vec<Skipped>,
}

fn column(row: &SweepRow, name: &str) -> Option<String> {
    Some(match name {
        "family" => row.family.to_string(),
        "schedule" => row.schedule.clone(),
        "alpha" => row.alpha.to_string(),
        "n" => row.n.to_string(),
        "K" => row.k.to_string(),
        "trials" => row.trials.to_string(),
        "seed" => row.seed.to_string(),
        _ => return None,
    })
}

fn scale_of(row: &SweepRow, scale: &str) -> f64 {
    if scale == "n" {
        row.n as f64
    } else {
        row.k as f64
    }
}

pub fn fit_csv(input: &Path, scale: &str, group_by: Option<Vec<String>>, out: Option<&Path>) -> Result<(), Failure> {
    if scale != "K" && scale != "n" {
        return Err(Failure::config(format!("--scale must be K or n, got `{scale}`")));
    }
    let group_by = group_by.unwrap_or_else(|| {
        KEY_COLUMNS.iter().filter(|&&c| c != scale).map(|c| c.to_string()).collect()
    });
    let file = File::open(input).map_err(|e| Failure::config(format!("{}: {e}", input.display())))?;
    let rows = with_path(input, read_csv(BufReader::new(file)))?;
    if rows.is_empty() {
        return Err(Failure::config(format!("{}: no data rows", input.display())));
    }
    for g in &group_by {
        if g == scale || column(&rows[0], g).is_none() {
            return Err(Failure::config(format!("--group-by: `{g}` is not a usable column")));
        }
    }

    let mut groups: BTreeMap<Vec<String>, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &rows {
        let key = group_by.iter().map(|g| column(row, g).unwrap_or_default()).collect();
        groups.entry(key).or_default().push((scale_of(row, scale), row.mean));
    }

    let mut report = FitReport {
        input: input.display().to_string(),
        scale: scale.to_string(),
        group_by: group_by.clone(),
        fits: Vec::new(),
        skipped: Vec::new(),
    };
    for (key, points) in groups {
        let group: BTreeMap<String, String> = group_by.iter().cloned().zip(key).collect();
        match fit_rate(&points) {
            Ok(fit) => report.fits.push(GroupFit { group, fit }),
            Err(e) => report.skipped.push(Skipped { group, reason: e.to_string() }),
        }
    }
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })
}
