use proptest::prelude::*;

use rrsgd_core::recurrences::*;

fn setting(g: f64, n: usize, alpha: f64) -> TheoremSetting {
    TheoremSetting::new(1.0, 2.0, g, n, alpha)
}

#[test]
fn theorem1_leading_order_in_k() {
    let s = setting(1.0, 8, 3.0);
    let ratio = theorem1_bound(&s, 64, 1.0).unwrap() / theorem1_bound(&s, 128, 1.0).unwrap();
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn theorem_bounds_vanish_with_g() {
    // with dist0 = 0 every source carries at least G², so the bound shrinks like G²
    for (alpha, bound) in [(3.0, theorem1_bound as fn(&TheoremSetting, usize, f64) -> _), (5.0, theorem2_bound)] {
        let coarse = bound(&setting(1e-3, 4, alpha), 16, 0.0).unwrap();
        let fine = bound(&setting(1e-6, 4, alpha), 16, 0.0).unwrap();
        assert!(coarse > 0.0);
        assert!(fine <= coarse * 1.01e-6, "{fine} vs {coarse}");
    }
}

#[test]
fn theorem_alpha_floors() {
    assert!(theorem1_constants(&setting(1.0, 4, 2.0)).is_err());
    assert!(theorem2_constants(&setting(1.0, 4, 4.0)).is_err());
    assert!(theorem2_constants(&setting(1.0, 4, 4.5)).is_ok());
}

#[test]
fn theorem_bounds_dominate_their_recursions() {
    for n in [1, 4, 8] {
        let s1 = setting(0.7, n, 3.0);
        let p1 = theorem1_params(&s1, 2.0).unwrap();
        let s2 = setting(0.7, n, 5.0);
        let p2 = theorem2_params(&s2, 2.0).unwrap();
        let o1 = recursion_oracle_variant_series(&p1, 64);
        let o2 = recursion_oracle_extended_series(&p2, 64).unwrap();
        for k in 1..=64 {
            assert!(theorem1_bound(&s1, k, 2.0).unwrap() >= o1[k - 1]);
            assert!(theorem2_bound(&s2, k, 2.0).unwrap() >= o2[k - 1]);
        }
    }
}

#[test]
fn theorem2_terms_scale_with_n() {
    let k = 32;
    let terms = |n| variant_bound_terms(&theorem2_params(&setting(1.0, n, 5.0), 0.0).unwrap(), k).unwrap();
    let (a, b) = (terms(8), terms(16));
    // A₂ ∝ n over (nK)² per n gives 1/(nK)²; A₃ ∝ n³ b₂(n) over n(nK)³ gives b₂(n)/(nK³)
    let tail_ratio = a.tail / b.tail;
    let b2 = |n| theorem2_constants(&setting(1.0, n, 5.0)).unwrap().b2;
    let extra_pred = 2.0 * b2(8) / b2(16);
    let extra_ratio = a.extra / b.extra;
    assert!((tail_ratio / 4.0 - 1.0).abs() < 0.2, "tail ratio {tail_ratio}");
    assert!((extra_ratio / extra_pred - 1.0).abs() < 0.2, "extra ratio {extra_ratio} vs {extra_pred}");
}

#[test]
fn printed_a1_is_at_least_deduplicated_when_alpha_g_large() {
    let s = setting(1.0, 4, 3.0);
    let printed = theorem1_constants(&s).unwrap().a1;
    let dedup = theorem1_constants(&s.with_a1_form(A1Form::Deduplicated)).unwrap().a1;
    assert!(printed >= dedup);
}

#[test]
fn chung_pinned_examples() {
    let p = ChungParams::new(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    assert!(chung_bound(&p, 10).unwrap() >= recursion_oracle_chung(&p, 10));
    let one_step = (-1.0f64).exp() + 0.25;
    assert!(chung_bound(&p, 1).unwrap() >= one_step);
    assert!(chung_bound_tight(&p, 10).unwrap() >= recursion_oracle_chung(&p, 10));
}

#[test]
fn variant_pinned_examples() {
    let p = VariantParams::new(2.0, 3.0, 2.0, 3.0, 0.5, 1.0, 4, 1.0).unwrap();
    assert!(variant_bound(&p, 8).unwrap() >= recursion_oracle_variant(&p, 8));
    let ext = p.with_extension(1.0, 2.5).unwrap();
    assert!(extended_variant_bound(&ext, 8).unwrap() >= recursion_oracle_extended(&ext, 8).unwrap());
    assert!(extended_variant_bound(&ext, 8).unwrap() >= variant_bound(&p, 8).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn variant_bound_dominates_oracle(
        k0 in 0.5f64..40.0,
        beta in 0.5f64..3.0,
        gap in 0.05f64..4.0,
        eps in 0.01f64..3.0,
        a1 in 0.0f64..5.0,
        a2 in 0.0f64..50.0,
        n in 1usize..24,
        xi0 in 0.0f64..5.0,
        k in 1usize..65,
    ) {
        let p = VariantParams::new(k0, beta + gap, beta, eps, a1, a2, n, xi0).unwrap();
        let bound = variant_bound(&p, k).unwrap();
        let oracle = recursion_oracle_variant(&p, k);
        prop_assert!(bound >= oracle * (1.0 - 1e-12), "{bound} < {oracle}");
    }

    #[test]
    fn b_product_stays_in_range(eps in 0.0f64..4.0, k in 1usize..10_001) {
        let b = b_product(eps, k);
        prop_assert!(b >= 1.0);
        prop_assert!(b <= (eps * std::f64::consts::PI.powi(2) / 6.0).exp() * (1.0 + 1e-12));
    }
}
