use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MIN_FIT_POINTS: usize = 3;
/// Below this r², the smallest-scale point is dropped and the line refit once.
pub const REFIT_R_SQUARED: f64 = 0.95;

/// Least-squares line through `(ln scale, ln value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln scale, ln value)` pairs the line was fit on, sorted by scale.
    pub points: Vec<(f64, f64)>,
    /// Scale of the point dropped for a refit, if any.
    pub dropped_head: Option<f64>,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = points.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r_squared)
}

/// Fits `value ≈ exp(intercept)·scale^slope` on a log-log scale.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(invalid("points", format!("need at least {MIN_FIT_POINTS} points, got {}", points.len())));
    }
    if let Some(&(s, v)) = points.iter().find(|(s, v)| !(s.is_finite() && v.is_finite() && *s > 0.0 && *v > 0.0)) {
        return Err(invalid("points", format!("scale and value must be positive and finite, got ({s}, {v})")));
    }
    let mut logs: Vec<(f64, f64)> = points.iter().map(|&(s, v)| (s.ln(), v.ln())).collect();
    logs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if logs.windows(2).all(|w| w[0].0 == w[1].0) {
        return Err(invalid("points", "all scales are equal"));
    }
    let (mut slope, mut intercept, mut r_squared) = least_squares(&logs);
    let mut dropped_head = None;
    if r_squared < REFIT_R_SQUARED && logs.len() > MIN_FIT_POINTS {
        let head = logs.remove(0);
        dropped_head = Some(head.0.exp());
        (slope, intercept, r_squared) = least_squares(&logs);
    }
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: logs,
        dropped_head,
    })
}
