//! Synthetic finite-sum problems `F(x) = (1/n) Σ f_i(x)` with certified
//! regularity constants.
//!
//! Two families are provided:
//!
//! * quadratic components `f_i(x) = ½ xᵀ H_i x − b_iᵀ x`, with the mean Hessian
//!   spectrum pinned to `[μ, L]` (both ends attained) and every `H_i` PSD with
//!   `λ_max(H_i) ≤ L`;
//! * log-cosh components `f_i(x) = (μ/2)‖x‖² + s_i·logcosh(a_iᵀx − t_i)`, which are
//!   `μ`-strongly convex and `(μ + s_i‖a_i‖²)`-smooth.
//!
//! Neither family has globally bounded gradients, so the Lipschitz constant `G`
//! is certified on a ball `B(x*, R)`; `R` travels with the problem.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::numerics::mix_seed;

pub const DEFAULT_RADIUS: f64 = 2.0;
pub const NEWTON_MAX_ITERATIONS: usize = 10_000;
const OPTIMUM_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "quadratic")]
    Quadratic,
    #[serde(rename = "logcosh")]
    LogCosh,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::LogCosh => "logcosh",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Family::Quadratic),
            "logcosh" => Ok(Family::LogCosh),
            other => Err(invalid("family", format!("unknown family `{other}`"))),
        }
    }
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

/// Seed-level description of a generated problem; this is what gets written to
/// disk; the matrices are regenerated from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: Family,
    pub n: usize,
    pub d: usize,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub seed: u64,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<FiniteSumProblem> {
        let problem = match self.kind {
            Family::Quadratic => make_random_quadratic(self.n, self.d, self.mu, self.l, self.seed)?,
            Family::LogCosh => make_random_logcosh(self.n, self.d, self.mu, self.l, self.seed)?,
        };
        problem.with_radius(self.radius)
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticComponent {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    top_eigenvalue: f64,
    min_eigenvalue: f64,
}

impl QuadraticComponent {
    /// `f(x) = ½ xᵀ H x − bᵀ x`. `H` must be symmetric PSD.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let d = linear.len();
        if hessian.nrows() != d || hessian.ncols() != d {
            return Err(invalid("hessian", format!("expected {d}x{d} matrix")));
        }
        if hessian.iter().chain(linear.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic component"));
        }
        let scale = hessian.amax().max(f64::MIN_POSITIVE);
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(invalid("hessian", format!("not symmetric (max asymmetry {asym:e})")));
        }
        let eig = SymmetricEigen::new(hessian.clone()).eigenvalues;
        let min_eigenvalue = eig.min();
        let top_eigenvalue = eig.max();
        if min_eigenvalue < -1e-12 * scale {
            return Err(invalid(
                "hessian",
                format!("not PSD (min eigenvalue {min_eigenvalue:e})"),
            ));
        }
        Ok(Self {
            hessian,
            linear,
            top_eigenvalue,
            min_eigenvalue,
        })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn top_eigenvalue(&self) -> f64 {
        self.top_eigenvalue
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) - self.linear.dot(x)
    }

    fn gradient_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.hessian, x, 0.0);
        *out -= &self.linear;
    }
}

#[derive(Debug, Clone)]
pub struct LogCoshComponent {
    quad_weight: f64,
    direction: DVector<f64>,
    scale: f64,
    offset: f64,
}

impl LogCoshComponent {
    /// `f(x) = (w/2)‖x‖² + s·logcosh(aᵀx − t)` with `w > 0`, `s ≥ 0`.
    pub fn new(quad_weight: f64, direction: DVector<f64>, scale: f64, offset: f64) -> Result<Self> {
        if !(quad_weight > 0.0) || !quad_weight.is_finite() {
            return Err(invalid("quad_weight", "must be positive and finite"));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(invalid("scale", "must be non-negative and finite"));
        }
        ensure_finite(offset, "log-cosh offset")?;
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("log-cosh direction"));
        }
        Ok(Self {
            quad_weight,
            direction,
            scale,
            offset,
        })
    }

    pub fn quad_weight(&self) -> f64 {
        self.quad_weight
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `w + s‖a‖²`.
    pub fn smoothness(&self) -> f64 {
        self.quad_weight + self.scale * self.direction.norm_squared()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let z = self.direction.dot(x) - self.offset;
        0.5 * self.quad_weight * x.norm_squared() + self.scale * logcosh(z)
    }

    fn gradient_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let z = self.direction.dot(x) - self.offset;
        out.copy_from(x);
        *out *= self.quad_weight;
        out.axpy(self.scale * z.tanh(), &self.direction, 1.0);
    }
}

fn logcosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone)]
pub enum Components {
    Quadratic(Vec<QuadraticComponent>),
    LogCosh(Vec<LogCoshComponent>),
}

impl Components {
    fn len(&self) -> usize {
        match self {
            Components::Quadratic(c) => c.len(),
            Components::LogCosh(c) => c.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiniteSumProblem {
    components: Components,
    d: usize,
    mu: f64,
    l: f64,
    x_star: DVector<f64>,
    f_star: f64,
    radius: f64,
    g: f64,
    mean_hessian: Option<DMatrix<f64>>,
    mean_linear: Option<DVector<f64>>,
    spec: Option<ProblemSpec>,
}

fn check_constants(mu: f64, l: f64) -> Result<()> {
    ensure_finite(mu, "mu")?;
    ensure_finite(l, "L")?;
    if !(mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    if l < mu {
        return Err(invalid("L", format!("L = {l} is below mu = {mu}")));
    }
    Ok(())
}

impl FiniteSumProblem {
    /// Assemble a quadratic problem from explicit components. The mean Hessian
    /// spectrum must lie in `[mu, L]` and every component top eigenvalue must be
    /// at most `L`.
    pub fn from_quadratics(components: Vec<QuadraticComponent>, mu: f64, l: f64) -> Result<Self> {
        check_constants(mu, l)?;
        let n = components.len();
        if n == 0 {
            return Err(invalid("n", "at least one component is required"));
        }
        let d = components[0].linear.len();
        if components.iter().any(|c| c.linear.len() != d) {
            return Err(invalid("components", "dimension mismatch"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.top_eigenvalue > l * (1.0 + 1e-9) {
                return Err(invalid(
                    "components",
                    format!("component {i} has top eigenvalue {} > L = {l}", c.top_eigenvalue),
                ));
            }
        }
        let mut h = DMatrix::zeros(d, d);
        let mut b = DVector::zeros(d);
        for c in &components {
            h += &c.hessian;
            b += &c.linear;
        }
        h /= n as f64;
        b /= n as f64;
        let spectrum = SymmetricEigen::new(h.clone()).eigenvalues;
        if spectrum.min() < mu * (1.0 - 1e-9) || spectrum.max() > l * (1.0 + 1e-9) {
            return Err(invalid(
                "components",
                format!(
                    "mean Hessian spectrum [{}, {}] is not inside [mu, L] = [{mu}, {l}]",
                    spectrum.min(),
                    spectrum.max()
                ),
            ));
        }
        let x_star = solve_spd(&h, &b)?;
        let mut problem = Self {
            components: Components::Quadratic(components),
            d,
            mu,
            l,
            x_star,
            f_star: 0.0,
            radius: DEFAULT_RADIUS,
            g: 0.0,
            mean_hessian: Some(h),
            mean_linear: Some(b),
            spec: None,
        };
        problem.finish();
        Ok(problem)
    }

    /// Assemble a log-cosh problem. Every component must have `quad_weight = mu`
    /// and smoothness at most `L`.
    pub fn from_logcosh(components: Vec<LogCoshComponent>, mu: f64, l: f64) -> Result<Self> {
        check_constants(mu, l)?;
        let n = components.len();
        if n == 0 {
            return Err(invalid("n", "at least one component is required"));
        }
        let d = components[0].direction.len();
        for (i, c) in components.iter().enumerate() {
            if c.direction.len() != d {
                return Err(invalid("components", "dimension mismatch"));
            }
            if (c.quad_weight - mu).abs() > 1e-12 * mu {
                return Err(invalid(
                    "components",
                    format!("component {i} has quad_weight {} != mu", c.quad_weight),
                ));
            }
            if c.smoothness() > l * (1.0 + 1e-12) {
                return Err(invalid(
                    "components",
                    format!("component {i} has smoothness {} > L = {l}", c.smoothness()),
                ));
            }
        }
        let mut problem = Self {
            components: Components::LogCosh(components),
            d,
            mu,
            l,
            x_star: DVector::zeros(d),
            f_star: 0.0,
            radius: DEFAULT_RADIUS,
            g: 0.0,
            mean_hessian: None,
            mean_linear: None,
            spec: None,
        };
        problem.x_star = problem.solve_optimum(OPTIMUM_TOL)?;
        problem.finish();
        Ok(problem)
    }

    fn finish(&mut self) {
        self.f_star = self.cost(&self.x_star);
        self.g = self.effective_lipschitz_g(self.radius);
    }

    /// Replace the certification radius (and recompute `G`).
    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("radius", "must be positive and finite"));
        }
        self.radius = radius;
        self.g = self.effective_lipschitz_g(radius);
        if let Some(spec) = self.spec.as_mut() {
            spec.radius = radius;
        }
        Ok(self)
    }

    pub fn family(&self) -> Family {
        match self.components {
            Components::Quadratic(_) => Family::Quadratic,
            Components::LogCosh(_) => Family::LogCosh,
        }
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.mu
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `G` certified on `B(x*, radius)`.
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn spec(&self) -> Option<&ProblemSpec> {
        self.spec.as_ref()
    }

    pub fn mean_hessian(&self) -> Option<&DMatrix<f64>> {
        self.mean_hessian.as_ref()
    }

    pub fn mean_linear(&self) -> Option<&DVector<f64>> {
        self.mean_linear.as_ref()
    }

    pub fn component_smoothness(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(match &self.components {
            Components::Quadratic(c) => c[i].top_eigenvalue,
            Components::LogCosh(c) => c[i].smoothness(),
        })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.d {
            return Err(invalid("x", format!("expected dimension {}, got {}", self.d, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x"));
        }
        Ok(())
    }

    /// Gradient of the (zero-based) `i`-th component. Panics on a bad index or
    /// dimension; use [`component_gradient`](Self::component_gradient) for checked access.
    pub fn gradient_into(&self, i: usize, x: &DVector<f64>, out: &mut DVector<f64>) {
        match &self.components {
            Components::Quadratic(c) => c[i].gradient_into(x, out),
            Components::LogCosh(c) => c[i].gradient_into(x, out),
        }
    }

    /// Gradient of component `i` (zero-based) at `x`.
    pub fn component_gradient(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_index(i)?;
        self.check_point(x)?;
        let mut out = DVector::zeros(self.d);
        self.gradient_into(i, x, &mut out);
        Ok(out)
    }

    pub fn component_value(&self, i: usize, x: &DVector<f64>) -> Result<f64> {
        self.check_index(i)?;
        self.check_point(x)?;
        Ok(match &self.components {
            Components::Quadratic(c) => c[i].value(x),
            Components::LogCosh(c) => c[i].value(x),
        })
    }

    pub fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.d);
        let mut buf = DVector::zeros(self.d);
        for i in 0..self.n() {
            self.gradient_into(i, x, &mut buf);
            acc += &buf;
        }
        acc / self.n() as f64
    }

    pub fn cost(&self, x: &DVector<f64>) -> f64 {
        let total = match &self.components {
            Components::Quadratic(c) => c.iter().map(|c| c.value(x)).collect::<crate::numerics::NeumaierSum>(),
            Components::LogCosh(c) => c.iter().map(|c| c.value(x)).collect(),
        };
        total.value() / self.n() as f64
    }

    /// `F(x) − F(x*)`.
    pub fn suboptimality(&self, x: &DVector<f64>) -> f64 {
        self.cost(x) - self.f_star
    }

    /// Minimizer of `F`: a direct solve for quadratics, damped Newton otherwise.
    pub fn solve_optimum(&self, tol: f64) -> Result<DVector<f64>> {
        if !(tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        match (&self.mean_hessian, &self.mean_linear) {
            (Some(h), Some(b)) => solve_spd(h, b),
            _ => self.newton(tol),
        }
    }

    fn newton(&self, tol: f64) -> Result<DVector<f64>> {
        let Components::LogCosh(components) = &self.components else {
            unreachable!("newton is only used for log-cosh problems");
        };
        let n = components.len() as f64;
        let mut x = DVector::zeros(self.d);
        let mut grad = self.full_gradient(&x);
        let mut value = self.cost(&x);
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let gnorm = grad.norm();
            if gnorm <= tol {
                return Ok(x);
            }
            let mut hess = DMatrix::identity(self.d, self.d) * self.mu;
            for c in components {
                let t = (c.direction.dot(&x) - c.offset).tanh();
                let w = c.scale * (1.0 - t * t) / n;
                hess.ger(w, &c.direction, &c.direction, 1.0);
            }
            let step = solve_spd(&hess, &(-&grad))?;
            let mut t = 1.0;
            loop {
                let candidate = &x + &step * t;
                let cand_value = self.cost(&candidate);
                let cand_grad = self.full_gradient(&candidate);
                if cand_value < value || cand_grad.norm() < gnorm || t < 1e-30 {
                    x = candidate;
                    value = cand_value;
                    grad = cand_grad;
                    break;
                }
                t *= 0.5;
            }
        }
        let residual = grad.norm();
        if residual <= tol {
            Ok(x)
        } else {
            Err(Error::SolveFailed {
                residual,
                tol,
                iterations: NEWTON_MAX_ITERATIONS,
            })
        }
    }

    /// Upper bound on `max_i sup_{x ∈ B(x*, R)} ‖∇f_i(x)‖`.
    pub fn effective_lipschitz_g(&self, radius: f64) -> f64 {
        match &self.components {
            Components::Quadratic(c) => c
                .iter()
                .map(|c| {
                    let mut g = DVector::zeros(self.d);
                    c.gradient_into(&self.x_star, &mut g);
                    g.norm() + radius * c.top_eigenvalue.max(0.0)
                })
                .fold(0.0, f64::max),
            Components::LogCosh(c) => {
                let reach = self.x_star.norm() + radius;
                c.iter()
                    .map(|c| c.quad_weight * reach + c.scale.abs() * c.direction.norm())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Uniform draw on the sphere of radius `R/2` around `x*`.
    pub fn default_start(&self, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5747_4152));
        let mut dir = gaussian_vector(&mut rng, self.d);
        let norm = dir.norm();
        if norm == 0.0 {
            dir[0] = 1.0;
        } else {
            dir /= norm;
        }
        &self.x_star + dir * (0.5 * self.radius)
    }
}

fn solve_spd(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = match h.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => h
            .clone()
            .lu()
            .solve(b)
            .ok_or_else(|| invalid("hessian", "singular system"))?,
    };
    // one step of iterative refinement
    let r = b - h * &x;
    let dx = match h.clone().cholesky() {
        Some(chol) => chol.solve(&r),
        None => h.clone().lu().solve(&r).unwrap_or_else(|| DVector::zeros(b.len())),
    };
    Ok(x + dx)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&g + g.transpose()) * 0.5
}

fn validate_sizes(n: usize, d: usize, mu: f64, l: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    check_constants(mu, l)
}

/// Random quadratic finite sum whose mean Hessian has spectrum exactly spanning
/// `[mu, L]`.
pub fn make_random_quadratic(n: usize, d: usize, mu: f64, l: f64, seed: u64) -> Result<FiniteSumProblem> {
    validate_sizes(n, d, mu, l)?;
    if d == 1 && l != mu {
        return Err(invalid("L", "d = 1 needs L = mu so both spectrum ends are attained"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5155_4144));

    let mut spectrum: Vec<f64> = (0..d)
        .map(|j| match j {
            0 => mu,
            j if j == d - 1 => l,
            _ => rng.random_range(mu..=l),
        })
        .collect();
    spectrum.sort_by(f64::total_cmp);
    let q = gaussian_matrix(&mut rng, d).qr().q();
    let mean_h = {
        let h = &q * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * q.transpose();
        (&h + h.transpose()) * 0.5
    };

    // perturbations live off the top eigenvector so λ_max(H_i) ≤ L stays reachable
    let top = q.column(d - 1).into_owned();
    let proj = DMatrix::identity(d, d) - &top * top.transpose();
    let raw: Vec<DMatrix<f64>> = (0..n).map(|_| gaussian_symmetric(&mut rng, d) * (0.5 * l)).collect();
    let mean_raw = raw.iter().fold(DMatrix::zeros(d, d), |acc, e| acc + e) / n as f64;
    let perturbations: Vec<DMatrix<f64>> = raw
        .into_iter()
        .map(|e| {
            let p = &proj * (e - &mean_raw) * &proj;
            (&p + p.transpose()) * 0.5
        })
        .collect();

    let admissible = |t: f64| {
        perturbations.iter().all(|e| {
            let eig = SymmetricEigen::new(&mean_h + e * t).eigenvalues;
            eig.min() >= 0.0 && eig.max() <= l * (1.0 + 1e-12)
        })
    };
    let mut t = 1.0;
    let mut halvings = 0;
    while !admissible(t) {
        t *= 0.5;
        halvings += 1;
        if halvings >= MAX_HALVINGS {
            t = 0.0;
            break;
        }
    }

    let linears: Vec<DVector<f64>> = (0..n).map(|_| gaussian_vector(&mut rng, d)).collect();
    let components = perturbations
        .iter()
        .zip(linears)
        .map(|(e, b)| {
            let h = &mean_h + e * t;
            QuadraticComponent::new((&h + h.transpose()) * 0.5, b)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut problem = FiniteSumProblem::from_quadratics(components, mu, l)?;
    problem.spec = Some(ProblemSpec {
        kind: Family::Quadratic,
        n,
        d,
        mu,
        l,
        seed,
        radius: DEFAULT_RADIUS,
    });
    Ok(problem)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random log-cosh finite sum. Component scales are normalized so the largest
/// component smoothness equals `L` exactly.
pub fn make_random_logcosh(n: usize, d: usize, mu: f64, l: f64, seed: u64) -> Result<FiniteSumProblem> {
    validate_sizes(n, d, mu, l)?;
    if !(l > mu) {
        return Err(invalid("L", "log-cosh problems need L > mu"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x4C43_4F53));
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a = gaussian_vector(&mut rng, d);
        let norm = a.norm();
        if norm == 0.0 {
            a[0] = 1.0;
        } else {
            a /= norm;
        }
        a *= rng.random_range(0.5..1.5);
        let s: f64 = rng.random_range(0.2..1.0);
        let offset: f64 = rng.random_range(-2.0..2.0);
        raw.push((a, s, offset));
    }
    let top = raw
        .iter()
        .map(|(a, s, _)| s * a.norm_squared())
        .fold(0.0, f64::max);
    let factor = (l - mu) / top;
    let components = raw
        .into_iter()
        .map(|(a, s, t)| LogCoshComponent::new(mu, a, s * factor, t))
        .collect::<Result<Vec<_>>>()?;
    let mut problem = FiniteSumProblem::from_logcosh(components, mu, l)?;
    problem.spec = Some(ProblemSpec {
        kind: Family::LogCosh,
        n,
        d,
        mu,
        l,
        seed,
        radius: DEFAULT_RADIUS,
    });
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_quadratic(h: f64, b: f64) -> QuadraticComponent {
        QuadraticComponent::new(DMatrix::from_element(1, 1, h), DVector::from_element(1, b)).unwrap()
    }

    #[test]
    fn single_scalar_component() {
        let p = make_random_quadratic(1, 1, 1.0, 1.0, 99).unwrap();
        assert_eq!(p.kappa(), 1.0);
        let h = p.mean_hessian().unwrap()[(0, 0)];
        assert!((h - 1.0).abs() < 1e-12);
        assert!(p.full_gradient(p.x_star()).norm() <= 1e-10);
    }

    #[test]
    fn shifted_parabola_optimum() {
        let p = FiniteSumProblem::from_quadratics(vec![scalar_quadratic(1.0, 3.0)], 1.0, 1.0).unwrap();
        let x = p.solve_optimum(1e-12).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_random_quadratic(0, 2, 1.0, 2.0, 1).is_err());
        assert!(make_random_quadratic(2, 0, 1.0, 2.0, 1).is_err());
        assert!(make_random_quadratic(2, 2, 2.0, 1.0, 1).is_err());
        assert!(make_random_quadratic(2, 2, f64::NAN, 1.0, 1).is_err());
        assert!(make_random_quadratic(2, 2, 1.0, f64::INFINITY, 1).is_err());
        assert!(make_random_logcosh(2, 2, 1.0, 1.0, 1).is_err());
        assert!(make_random_logcosh(2, 2, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn component_stationary_point() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let c = QuadraticComponent::new(h.clone(), b.clone()).unwrap();
        let p = FiniteSumProblem::from_quadratics(vec![c], 0.5, 3.0).unwrap();
        let x = h.lu().solve(&b).unwrap();
        assert!(p.component_gradient(0, &x).unwrap().norm() < 1e-14);
    }

    #[test]
    fn logcosh_gradient_vanishes_at_origin_without_offset() {
        let c = LogCoshComponent::new(1.0, DVector::from_vec(vec![1.0, -2.0]), 0.5, 0.0).unwrap();
        let p = FiniteSumProblem::from_logcosh(vec![c], 1.0, 4.0).unwrap();
        let g = p.component_gradient(0, &DVector::zeros(2)).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn index_out_of_range() {
        let p = make_random_quadratic(3, 2, 1.0, 2.0, 5).unwrap();
        let x = DVector::zeros(2);
        assert!(matches!(
            p.component_gradient(3, &x),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert!(p.component_gradient(0, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn logcosh_smoothness_constants() {
        let p = make_random_logcosh(4, 2, 1.0, 5.0, 3).unwrap();
        let Components::LogCosh(cs) = p.components() else { panic!() };
        let mut top: f64 = 0.0;
        for c in cs {
            let s = 1.0 + c.scale() * c.direction().norm_squared();
            assert!(s <= 5.0 + 1e-12);
            assert!(c.scale() > 0.0);
            top = top.max(s);
        }
        assert!((top - 5.0).abs() < 1e-12);
        assert!(p.full_gradient(p.x_star()).norm() <= 1e-10);
    }

    #[test]
    fn suboptimality_zero_at_optimum() {
        for p in [
            make_random_quadratic(5, 3, 1.0, 4.0, 11).unwrap(),
            make_random_logcosh(5, 3, 1.0, 4.0, 11).unwrap(),
        ] {
            assert!(p.suboptimality(p.x_star()).abs() <= 1e-12);
        }
    }

    #[test]
    fn g_shrinks_to_gradient_norm_at_optimum() {
        let p = make_random_quadratic(6, 3, 1.0, 4.0, 2).unwrap();
        let at_point = (0..6)
            .map(|i| p.component_gradient(i, p.x_star()).unwrap().norm())
            .fold(0.0, f64::max);
        assert!((p.effective_lipschitz_g(1e-300) - at_point).abs() < 1e-12);
    }

    #[test]
    fn unit_parabola_g() {
        let p = FiniteSumProblem::from_quadratics(vec![scalar_quadratic(1.0, 0.0)], 1.0, 1.0).unwrap();
        assert!((p.effective_lipschitz_g(2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trip_rebuilds_problem() {
        let p = make_random_logcosh(4, 3, 1.0, 4.0, 77).unwrap();
        let json = serde_json::to_string(p.spec().unwrap()).unwrap();
        assert!(json.contains("\"kind\":\"logcosh\""));
        assert!(json.contains("\"L\":4.0"));
        let spec: ProblemSpec = serde_json::from_str(&json).unwrap();
        let q = spec.build().unwrap();
        assert_eq!(p.x_star(), q.x_star());
    }

    #[test]
    fn default_start_sits_on_half_radius_sphere() {
        let p = make_random_quadratic(4, 3, 1.0, 4.0, 1).unwrap().with_radius(3.0).unwrap();
        let x0 = p.default_start(9);
        assert!(((&x0 - p.x_star()).norm() - 1.5).abs() < 1e-12);
    }
}
