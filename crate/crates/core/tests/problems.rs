use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rrsgd_core::problems::{make_random_logcosh, make_random_quadratic, Components, FiniteSumProblem, ProblemSpec};

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let d = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

#[test]
fn quadratic_mean_spectrum_spans_mu_to_l() {
    let p = make_random_quadratic(8, 4, 1.0, 10.0, 7).unwrap();
    let ev = jacobi_eigenvalues(p.mean_hessian().unwrap().clone());
    assert!((ev[0] - 1.0).abs() < 1e-6, "{ev:?}");
    assert!((ev[3] - 10.0).abs() < 1e-6, "{ev:?}");
    let Components::Quadratic(cs) = p.components() else { unreachable!() };
    for c in cs {
        let top = *jacobi_eigenvalues(c.hessian().clone()).last().unwrap();
        assert!(top <= 10.0 * (1.0 + 1e-9));
    }
}

#[test]
fn logcosh_component_smoothness_formula() {
    let p = make_random_logcosh(4, 2, 1.0, 5.0, 3).unwrap();
    let Components::LogCosh(cs) = p.components() else { unreachable!() };
    for c in cs {
        let direct = c.quad_weight() + c.scale() * c.direction().norm_squared();
        assert!(direct <= 5.0 * (1.0 + 1e-12));
    }
}

fn check_smooth_strongly_convex(p: &FiniteSumProblem, pairs: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mu, l) = (p.mu(), p.l());
    for _ in 0..pairs {
        let x = gaussian(&mut rng, p.d(), 2.0);
        let y = gaussian(&mut rng, p.d(), 2.0);
        let diff = &y - &x;
        let r2 = diff.norm_squared();
        // componentwise L-smoothness
        for i in 0..p.n() {
            let gx = p.component_gradient(i, &x).unwrap();
            let gy = p.component_gradient(i, &y).unwrap();
            assert!((&gy - &gx).norm() <= l * diff.norm() * (1.0 + 1e-9) + 1e-12);
        }
        // mean function is mu-strongly convex
        let gx = p.full_gradient(&x);
        let lower = p.cost(&x) + gx.dot(&diff) + 0.5 * mu * r2;
        assert!(p.cost(&y) >= lower - 1e-9 * (1.0 + p.cost(&y).abs()));
    }
}

#[test]
fn smoothness_and_strong_convexity_on_random_pairs() {
    check_smooth_strongly_convex(&make_random_quadratic(6, 3, 0.5, 4.0, 11).unwrap(), 1000, 1);
    check_smooth_strongly_convex(&make_random_logcosh(6, 3, 0.5, 4.0, 12).unwrap(), 1000, 2);
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [make_random_quadratic(5, 3, 1.0, 6.0, 1).unwrap(), make_random_logcosh(5, 3, 1.0, 6.0, 2).unwrap()] {
        for _ in 0..20 {
            let x = gaussian(&mut rng, 3, 1.0);
            for i in 0..p.n() {
                let g = p.component_gradient(i, &x).unwrap();
                let h = 1e-6;
                for j in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (p.component_value(i, &xp).unwrap() - p.component_value(i, &xm).unwrap()) / (2.0 * h);
                    assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "i={i} j={j}: {fd} vs {}", g[j]);
                }
            }
        }
    }
}

#[test]
fn optimum_residuals() {
    let q = make_random_quadratic(7, 4, 1.0, 8.0, 9).unwrap();
    let r = q.mean_hessian().unwrap() * q.x_star() - q.mean_linear().unwrap();
    assert!(r.norm() <= 1e-10);
    let lc = make_random_logcosh(7, 4, 1.0, 8.0, 9).unwrap();
    assert!(lc.full_gradient(lc.x_star()).norm() <= 1e-10);
    assert!(lc.x_star().norm() > 0.0);
}

#[test]
fn lipschitz_g_covers_sampled_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for p in [make_random_quadratic(5, 3, 1.0, 4.0, 4).unwrap(), make_random_logcosh(5, 3, 1.0, 4.0, 4).unwrap()] {
        let g = p.g();
        for _ in 0..10_000 {
            let dir = gaussian(&mut rng, 3, 1.0).normalize();
            let radius = p.radius() * rng.random::<f64>().cbrt();
            let x = p.x_star() + dir * radius;
            for i in 0..p.n() {
                assert!(p.component_gradient(i, &x).unwrap().norm() <= g * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn spec_roundtrip_rebuilds_same_problem() {
    let spec = ProblemSpec {
        kind: rrsgd_core::Family::LogCosh,
        n: 5,
        d: 3,
        mu: 1.0,
        l: 4.0,
        seed: 8,
        radius: 3.0,
    };
    let json = serde_json::to_string(&spec).unwrap();
    assert!(json.contains("\"L\":4.0") && json.contains("\"kind\":\"logcosh\""));
    let back: ProblemSpec = serde_json::from_str(&json).unwrap();
    let (a, b) = (spec.build().unwrap(), back.build().unwrap());
    assert_eq!(a.x_star(), b.x_star());
    assert_eq!(a.radius(), 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), n in 1usize..6, d in 2usize..5) {
        let a = make_random_quadratic(n, d, 1.0, 3.0, seed).unwrap();
        let b = make_random_quadratic(n, d, 1.0, 3.0, seed).unwrap();
        prop_assert_eq!(a.mean_hessian(), b.mean_hessian());
        prop_assert_eq!(a.x_star(), b.x_star());
        let a = make_random_logcosh(n, d, 1.0, 3.0, seed).unwrap();
        let b = make_random_logcosh(n, d, 1.0, 3.0, seed).unwrap();
        prop_assert_eq!(a.x_star(), b.x_star());
    }

    #[test]
    fn default_start_sits_at_half_radius(seed in any::<u64>()) {
        let p = make_random_quadratic(3, 3, 1.0, 2.0, 1).unwrap();
        let x0 = p.default_start(seed);
        prop_assert!(((&x0 - p.x_star()).norm() - p.radius() / 2.0).abs() < 1e-12);
    }
}
