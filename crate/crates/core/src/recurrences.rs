//! Closed-form bounds for Chung-type recursions and their extremal sequences.
//!
//! Three recursions are covered:
//!
//! * single-index: `ξ_{k+1} ≤ e^{−α/(k₀+k+1)} ξ_k + A/(k₀+k+1)^{β+1}`;
//! * two-parameter (epoch length `n`, epoch count `K`):
//!   `ξ_1 ≤ e^{−α Σ_{i≤n} 1/(k₀+i)} ξ_0 + A₁` and, for `k ≥ 1`,
//!   `ξ_{k+1} ≤ e^{−α Σ_{i≤n} 1/(k₀+nk+i) + ε/k²} ξ_k + A₂/(k₀+n(k+1))^{β+1}`;
//! * the same with an extra source `A₃/(k₀+n(k+1))^{γ+1}`.
//!
//! The oracles run each recursion with equality. For these linear recursions
//! that sequence is the worst case, so "bound ≥ oracle" is exactly what a bound
//! has to satisfy. Exponential sums use compensated accumulation.

use std::f64::consts::{E, PI};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::numerics::{adaptive_simpson, compensated_sum, shifted_harmonic};

fn check_epochs(k: usize) -> Result<()> {
    if k < 1 {
        Err(invalid("K", "bounds are stated for K >= 1"))
    } else {
        Ok(())
    }
}

fn check_nonneg(value: f64, name: &'static str) -> Result<()> {
    ensure_finite(value, name)?;
    if value < 0.0 {
        return Err(invalid(name, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

fn check_rates(k0: f64, alpha: f64, beta: f64) -> Result<()> {
    ensure_finite(k0, "k0")?;
    ensure_finite(alpha, "alpha")?;
    ensure_finite(beta, "beta")?;
    if !(k0 > 0.0) {
        return Err(invalid("k0", format!("must be > 0, got {k0}")));
    }
    if !(beta > 0.0 && alpha > beta) {
        return Err(invalid("alpha", format!("need alpha > beta > 0 (alpha = {alpha}, beta = {beta})")));
    }
    Ok(())
}

/// Parameters of the single-index recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChungParams {
    pub k0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub xi0: f64,
}

impl ChungParams {
    /// `A = 0` and `ξ₀ = 0` are accepted as boundary cases.
    pub fn new(k0: f64, alpha: f64, beta: f64, a: f64, xi0: f64) -> Result<Self> {
        let p = Self { k0, alpha, beta, a, xi0 };
        p.validate().map(|_| p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.k0, self.alpha, self.beta)?;
        check_nonneg(self.a, "A")?;
        check_nonneg(self.xi0, "xi0")
    }

    fn tail(&self, epochs: usize) -> f64 {
        let end = self.k0 + epochs as f64;
        let lead = (self.alpha / (self.k0 + 1.0)).exp() * self.a;
        lead / ((self.alpha - self.beta) * end.powf(self.beta)) + lead / end.powf(self.beta + 1.0)
    }
}

/// `((k₀+1)/(k₀+K))^α ξ₀ + e^{α/(k₀+1)}A/((α−β)(k₀+K)^β) + e^{α/(k₀+1)}A/(k₀+K)^{β+1}`.
pub fn chung_bound(p: &ChungParams, epochs: usize) -> Result<f64> {
    p.validate()?;
    check_epochs(epochs)?;
    let ratio = (p.k0 + 1.0) / (p.k0 + epochs as f64);
    Ok(ratio.powf(p.alpha) * p.xi0 + p.tail(epochs))
}

/// As [`chung_bound`] but with the exact leading factor `exp(−α Σ_{i≤K} 1/(k₀+i))`.
pub fn chung_bound_tight(p: &ChungParams, epochs: usize) -> Result<f64> {
    p.validate()?;
    check_epochs(epochs)?;
    let decay = (-p.alpha * shifted_harmonic(p.k0, epochs)).exp();
    Ok(decay * p.xi0 + p.tail(epochs))
}

/// `ξ_1, …, ξ_K` of the single-index recursion run with equality.
pub fn recursion_oracle_chung_series(p: &ChungParams, epochs: usize) -> Vec<f64> {
    let mut xi = p.xi0;
    (0..epochs)
        .map(|k| {
            let idx = p.k0 + (k + 1) as f64;
            xi = (-p.alpha / idx).exp() * xi + p.a / idx.powf(p.beta + 1.0);
            xi
        })
        .collect()
}

/// `ξ_K` of the single-index recursion run with equality (`ξ₀` when `K = 0`).
pub fn recursion_oracle_chung(p: &ChungParams, epochs: usize) -> f64 {
    recursion_oracle_chung_series(p, epochs).last().copied().unwrap_or(p.xi0)
}

/// Extra source term of the extended two-parameter recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extension {
    pub a3: f64,
    pub gamma: f64,
}

/// Parameters of the two-parameter recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantParams {
    pub k0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub a1: f64,
    pub a2: f64,
    pub n: usize,
    pub xi0: f64,
    pub extension: Option<Extension>,
}

impl VariantParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(k0: f64, alpha: f64, beta: f64, epsilon: f64, a1: f64, a2: f64, n: usize, xi0: f64) -> Result<Self> {
        let p = Self {
            k0,
            alpha,
            beta,
            epsilon,
            a1,
            a2,
            n,
            xi0,
            extension: None,
        };
        p.validate().map(|_| p)
    }

    /// Adds the `A₃/(k₀+n(k+1))^{γ+1}` source; needs `α > γ > 0`.
    pub fn with_extension(mut self, a3: f64, gamma: f64) -> Result<Self> {
        self.extension = Some(Extension { a3, gamma });
        self.validate().map(|_| self)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.k0, self.alpha, self.beta)?;
        ensure_finite(self.epsilon, "epsilon")?;
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be > 0"));
        }
        check_nonneg(self.a1, "A1")?;
        check_nonneg(self.a2, "A2")?;
        check_nonneg(self.xi0, "xi0")?;
        if self.n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if let Some(ext) = self.extension {
            check_nonneg(ext.a3, "A3")?;
            ensure_finite(ext.gamma, "gamma")?;
            if !(ext.gamma > 0.0 && self.alpha > ext.gamma) {
                return Err(invalid(
                    "gamma",
                    format!("need alpha > gamma > 0 (alpha = {}, gamma = {})", self.alpha, ext.gamma),
                ));
            }
        }
        Ok(())
    }

    /// `c = e^{επ²/6}`, the ceiling of `Π e^{ε/(k−1)²}`.
    pub fn c(&self) -> f64 {
        (self.epsilon * PI * PI / 6.0).exp()
    }
}

/// Individual pieces of the two-parameter bound.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundTerms {
    /// `c(k₀+1)^α ξ₀/(k₀+nK)^α`
    pub initial: f64,
    /// `c(k₀+n+1)^α A₁/(k₀+nK)^α`
    pub first_epoch: f64,
    /// both `A₂` terms
    pub tail: f64,
    /// both `A₃` terms (zero without an extension)
    pub extra: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.initial + self.first_epoch + self.tail + self.extra
    }
}

/// Term-by-term two-parameter bound, including the extension if present.
pub fn variant_bound_terms(p: &VariantParams, epochs: usize) -> Result<BoundTerms> {
    p.validate()?;
    check_epochs(epochs)?;
    let n = p.n as f64;
    let end = p.k0 + n * epochs as f64;
    let c = p.c();
    let lead = c * (p.alpha / (p.k0 + n + 1.0)).exp();
    let source = |a: f64, rate: f64| lead * a / ((p.alpha - rate) * n * end.powf(rate)) + lead * a / end.powf(rate + 1.0);
    Ok(BoundTerms {
        initial: c * ((p.k0 + 1.0) / end).powf(p.alpha) * p.xi0,
        first_epoch: c * ((p.k0 + n + 1.0) / end).powf(p.alpha) * p.a1,
        tail: source(p.a2, p.beta),
        extra: p.extension.map_or(0.0, |ext| source(ext.a3, ext.gamma)),
    })
}

/// Two-parameter bound without the extension terms (any extension is ignored).
pub fn variant_bound(p: &VariantParams, epochs: usize) -> Result<f64> {
    let t = variant_bound_terms(&VariantParams { extension: None, ..*p }, epochs)?;
    Ok(t.total())
}

/// Two-parameter bound plus the `A₃` terms
/// `c e^{α/(k₀+n+1)} A₃ [1/((α−γ) n (k₀+nK)^γ) + 1/(k₀+nK)^{γ+1}]`.
pub fn extended_variant_bound(p: &VariantParams, epochs: usize) -> Result<f64> {
    if p.extension.is_none() {
        return Err(invalid("extension", "the extended bound needs A3 and gamma"));
    }
    Ok(variant_bound_terms(p, epochs)?.total())
}

fn variant_series(p: &VariantParams, epochs: usize, extension: Option<Extension>) -> Vec<f64> {
    let n = p.n as f64;
    let mut out = Vec::with_capacity(epochs);
    if epochs == 0 {
        return out;
    }
    let mut xi = (-p.alpha * shifted_harmonic(p.k0, p.n)).exp() * p.xi0 + p.a1;
    out.push(xi);
    for k in 1..epochs {
        let kf = k as f64;
        let exponent = -p.alpha * shifted_harmonic(p.k0 + n * kf, p.n) + p.epsilon / (kf * kf);
        let idx = p.k0 + n * (kf + 1.0);
        let mut source = p.a2 / idx.powf(p.beta + 1.0);
        if let Some(ext) = extension {
            source += ext.a3 / idx.powf(ext.gamma + 1.0);
        }
        xi = exponent.exp() * xi + source;
        out.push(xi);
    }
    out
}

/// `ξ_1, …, ξ_K` of the two-parameter recursion run with equality (no extension).
pub fn recursion_oracle_variant_series(p: &VariantParams, epochs: usize) -> Vec<f64> {
    variant_series(p, epochs, None)
}

pub fn recursion_oracle_variant(p: &VariantParams, epochs: usize) -> f64 {
    recursion_oracle_variant_series(p, epochs).last().copied().unwrap_or(p.xi0)
}

/// `ξ_1, …, ξ_K` of the extended recursion run with equality.
pub fn recursion_oracle_extended_series(p: &VariantParams, epochs: usize) -> Result<Vec<f64>> {
    let ext = p
        .extension
        .ok_or_else(|| invalid("extension", "the extended recursion needs A3 and gamma"))?;
    Ok(variant_series(p, epochs, Some(ext)))
}

pub fn recursion_oracle_extended(p: &VariantParams, epochs: usize) -> Result<f64> {
    Ok(recursion_oracle_extended_series(p, epochs)?.last().copied().unwrap_or(p.xi0))
}

/// `Π_{k=2}^{K} e^{ε/(k−1)²}`.
pub fn b_product(epsilon: f64, epochs: usize) -> f64 {
    compensated_sum((2..=epochs).map(|k| {
        let j = (k - 1) as f64;
        epsilon / (j * j)
    }))
    .exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    /// `lower ≤ value ≤ upper` up to a relative tolerance.
    pub fn contains(&self, value: f64, rel_tol: f64) -> bool {
        let slack = rel_tol * value.abs().max(self.lower.abs()).max(self.upper.abs());
        self.lower - slack <= value && value <= self.upper + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
}

/// Two-sided bracket for `Σ_{i=m}^{n} f(i)` from `∫_m^n f` plus one endpoint value.
///
/// The integral comes from `antiderivative` when given, otherwise from adaptive
/// Simpson quadrature at `1e-10`.
pub fn integral_bracket(
    f: &dyn Fn(f64) -> f64,
    antiderivative: Option<&dyn Fn(f64) -> f64>,
    m: i64,
    n: i64,
    direction: Monotonicity,
) -> Result<Bracket> {
    if m < 1 {
        return Err(invalid("m", "must be >= 1"));
    }
    if m >= n {
        return Err(invalid("m", format!("need m < n (m = {m}, n = {n})")));
    }
    let (lo, hi) = (m as f64, n as f64);
    let integral = match antiderivative {
        Some(big_f) => big_f(hi) - big_f(lo),
        None => adaptive_simpson(&f, lo, hi, 1e-10),
    };
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(integral.is_finite() && f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::NonFinite("integral bracket"));
    }
    Ok(match direction {
        Monotonicity::NonDecreasing => Bracket {
            lower: integral + f_lo,
            upper: integral + f_hi,
        },
        Monotonicity::NonIncreasing => Bracket {
            lower: integral + f_hi,
            upper: integral + f_lo,
        },
    })
}

fn check_product_args(k0: f64, alpha: f64, ell: usize, k: usize, n: usize) -> Result<()> {
    ensure_finite(k0, "k0")?;
    if !(k0 > 0.0) {
        return Err(invalid("k0", "must be > 0"));
    }
    check_nonneg(alpha, "alpha")?;
    if ell < 1 || k < ell {
        return Err(invalid("ell", format!("need 1 <= ell <= k (ell = {ell}, k = {k})")));
    }
    if n < 1 {
        return Err(invalid("n", "must be >= 1"));
    }
    Ok(())
}

/// `Π_{j=ℓ}^{k} exp(−α Σ_{i≤n} 1/(k₀+n(j−1)+i))`.
pub fn product_a(k0: f64, alpha: f64, ell: usize, k: usize, n: usize) -> Result<f64> {
    check_product_args(k0, alpha, ell, k, n)?;
    let offset = k0 + (n * (ell - 1)) as f64;
    Ok((-alpha * shifted_harmonic(offset, (k - ell + 1) * n)).exp())
}

/// Sandwich `e^{−α/b}(b/(k₀+nk))^α ≤ product_a ≤ (b/(k₀+nk))^α` with `b = k₀+n(ℓ−1)+1`.
pub fn product_a_bracket(k0: f64, alpha: f64, ell: usize, k: usize, n: usize) -> Result<Bracket> {
    check_product_args(k0, alpha, ell, k, n)?;
    let base = k0 + (n * (ell - 1)) as f64 + 1.0;
    let upper = (base / (k0 + (n * k) as f64)).powf(alpha);
    Ok(Bracket {
        lower: (-alpha / base).exp() * upper,
        upper,
    })
}

/// Which reading of the first-epoch constant `a₁` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum A1Form {
    /// `α²G²[(e/(α−1))(12μ⁻² + 32κ³) + eα²G²(12μ⁻¹L⁻¹ + 32κ²)]`
    #[default]
    Printed,
    /// Same without the inner `α²G²`.
    Deduplicated,
}

/// Problem quantities the explicit convergence bounds are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremSetting {
    pub mu: f64,
    pub l: f64,
    pub g: f64,
    pub n: usize,
    pub alpha: f64,
    pub a1_form: A1Form,
}

impl TheoremSetting {
    pub fn new(mu: f64, l: f64, g: f64, n: usize, alpha: f64) -> Self {
        Self {
            mu,
            l,
            g,
            n,
            alpha,
            a1_form: A1Form::Printed,
        }
    }

    pub fn with_a1_form(mut self, form: A1Form) -> Self {
        self.a1_form = form;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.mu
    }

    pub fn k0(&self) -> f64 {
        self.alpha * self.kappa()
    }

    fn validate(&self, alpha_floor: f64) -> Result<()> {
        for (v, name) in [(self.mu, "mu"), (self.l, "L"), (self.g, "G"), (self.alpha, "alpha")] {
            ensure_finite(v, name)?;
        }
        if !(self.mu > 0.0) || self.l < self.mu {
            return Err(invalid("L", "need L >= mu > 0"));
        }
        if self.g < 0.0 {
            return Err(invalid("G", "must be >= 0"));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if self.alpha <= alpha_floor {
            return Err(invalid("alpha", format!("this bound needs alpha > {alpha_floor} (got {})", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub a1: f64,
    pub a2: f64,
    pub b2: f64,
    pub b3: f64,
}

fn theorem_constants(s: &TheoremSetting) -> TheoremConstants {
    let (mu, l, g2, alpha) = (s.mu, s.l, s.g * s.g, s.alpha);
    let kappa = s.kappa();
    let n = s.n as f64;
    let inner = match s.a1_form {
        A1Form::Printed => alpha * alpha * g2,
        A1Form::Deduplicated => 1.0,
    };
    let a1 = alpha
        * alpha
        * g2
        * (E / (alpha - 1.0) * (12.0 / (mu * mu) + 32.0 * kappa.powi(3))
            + E * inner * (12.0 / (mu * l) + 32.0 * kappa * kappa));
    let a2 = 12.0 * kappa * l * g2 + (1.5 * l * g2 + 4.0 * kappa * l * g2) / n + 20.0 * kappa * l * g2 + 5.0 * mu * mu * g2 / 8.0;
    let b2 = 15.0 * l * l * g2 + 3.0 * g2 * (4.0 * kappa * l + l / (2.0 * n)).powi(2);
    let b3 = 32.0 * kappa * l * g2;
    TheoremConstants { a1, a2, b2, b3 }
}

/// Constants of the strongly convex bound; needs `α > 2`.
pub fn theorem1_constants(s: &TheoremSetting) -> Result<TheoremConstants> {
    s.validate(2.0)?;
    Ok(theorem_constants(s))
}

/// Constants of the quadratic bound; needs `α > 4`.
pub fn theorem2_constants(s: &TheoremSetting) -> Result<TheoremConstants> {
    s.validate(4.0)?;
    Ok(theorem_constants(s))
}

/// Two-parameter recursion for the strongly convex case: `ε = α`, `β = 2`,
/// `A₁ = a₁/(k₀+n)`, `A₂ = 8a₂α³n²/μ³`.
pub fn theorem1_params(s: &TheoremSetting, dist0: f64) -> Result<VariantParams> {
    let c = theorem1_constants(s)?;
    let (alpha, mu, n) = (s.alpha, s.mu, s.n as f64);
    let k0 = s.k0();
    VariantParams::new(
        k0,
        alpha,
        2.0,
        alpha,
        c.a1 / (k0 + n),
        8.0 * c.a2 * alpha.powi(3) * n * n / mu.powi(3),
        s.n,
        dist0,
    )
}

/// Upper bound on `E‖y_K − x*‖²` under the two-phase schedule.
pub fn theorem1_bound(s: &TheoremSetting, epochs: usize, dist0: f64) -> Result<f64> {
    variant_bound(&theorem1_params(s, dist0)?, epochs)
}

/// Extended recursion for the quadratic case: `A₂ = 8b₃α³n/μ³` (`β = 2`),
/// `A₃ = 16b₂α⁴n³/μ⁴` (`γ = 3`), other entries as in the strongly convex case.
pub fn theorem2_params(s: &TheoremSetting, dist0: f64) -> Result<VariantParams> {
    let c = theorem2_constants(s)?;
    let (alpha, mu, n) = (s.alpha, s.mu, s.n as f64);
    let k0 = s.k0();
    VariantParams::new(
        k0,
        alpha,
        2.0,
        alpha,
        c.a1 / (k0 + n),
        8.0 * c.b3 * alpha.powi(3) * n / mu.powi(3),
        s.n,
        dist0,
    )?
    .with_extension(16.0 * c.b2 * alpha.powi(4) * n.powi(3) / mu.powi(4), 3.0)
}

/// Upper bound on `E‖y_K − x*‖²` for quadratic costs under the two-phase schedule.
pub fn theorem2_bound(s: &TheoremSetting, epochs: usize, dist0: f64) -> Result<f64> {
    extended_variant_bound(&theorem2_params(s, dist0)?, epochs)
}
