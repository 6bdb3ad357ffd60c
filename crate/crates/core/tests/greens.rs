use std::sync::Arc;

use amo_core::cf::{DigitSource, FrequencyModel, DEFAULT_Q_CAP};
use amo_core::determinant::OperatorParams;
use amo_core::greens::{
    classify_regularity, green_dense, green_entry_cramer, Endpoint, IntervalZ,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden() -> Arc<FrequencyModel> {
    Arc::new(FrequencyModel::build(&DigitSource::Periodic(vec![1]), 40, DEFAULT_Q_CAP).unwrap())
}

#[test]
fn k8_cramer_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = golden();
    for _ in 0..20 {
        let p = OperatorParams::new(rng.gen_range(1.1..5.0), g.clone(), rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0)).unwrap();
        let x1 = rng.gen_range(-50..50);
        let i = IntervalZ::with_len(x1, 8).unwrap();
        let dense = green_dense(&p, i).unwrap();
        for y in i.x1..=i.x2 {
            let l = green_entry_cramer(&p, i, y, Endpoint::Left).unwrap().value;
            let r = green_entry_cramer(&p, i, y, Endpoint::Right).unwrap().value;
            for (c, d) in [(l, dense.get(i.x1, y)), (r, dense.get(y, i.x2))] {
                assert_eq!(c.sign(), d.sign());
                assert!(((c.to_f64() - d.to_f64()) / d.to_f64()).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn dense_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = golden();
    for _ in 0..30 {
        let p = OperatorParams::new(rng.gen_range(1.1..5.0), g.clone(), rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0)).unwrap();
        let i = IntervalZ::with_len(rng.gen_range(-20..20), rng.gen_range(1..60)).unwrap();
        let Ok(dense) = green_dense(&p, i) else { continue };
        let mut amax = 0.0f64;
        for a in i.x1..=i.x2 {
            for b in i.x1..=i.x2 {
                amax = amax.max(dense.get(a, b).to_f64().abs());
            }
        }
        for a in i.x1..=i.x2 {
            for b in a..=i.x2 {
                let d = (dense.get(a, b).to_f64() - dense.get(b, a).to_f64()).abs();
                assert!(d <= 1e-10 * amax.max(1.0));
            }
        }
    }
}

#[test]
fn diagonally_dominant_three_box() {
    // λ = 1e6 at θ = 0 gives d ≈ 2λ = c on every site of a short box
    let p = OperatorParams::new(1e6, golden(), 0.0, 0.0).unwrap();
    let i = IntervalZ::new(0, 0).unwrap();
    let c0 = p.diag(0.0, 0);
    let dense = green_dense(&p, i).unwrap();
    assert!((dense.get(0, 0).to_f64() * c0 - 1.0).abs() < 0.1);

    // E = −c swamps the potential, so d ≈ c on the whole box
    let c = 1e4;
    let e = -c;
    let p = OperatorParams::new(1.1, golden(), 0.3, e).unwrap();
    let i = IntervalZ::new(0, 2).unwrap();
    let dense = green_dense(&p, i).unwrap();
    for a in 0..3 {
        let d = p.diag(0.0, a);
        assert!((dense.get(a, a).to_f64() * d - 1.0).abs() < 0.1);
    }
    let d0 = p.diag(0.0, 0);
    let d1 = p.diag(0.0, 1);
    let off = dense.get(0, 1).to_f64();
    assert!((off * d0 * d1 + 1.0).abs() < 0.1, "{}", off * d0 * d1);
}

#[test]
fn cramer_dense_agreement_500_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4a3e);
    let g = golden();
    let mut compared = 0;
    for _ in 0..500 {
        let lambda = rng.gen_range(1.05..6.0);
        let p = OperatorParams::new(lambda, g.clone(), rng.gen_range(0.0..1.0), rng.gen_range(-2.0 * lambda - 2.0..2.0 * lambda + 2.0)).unwrap();
        let k = rng.gen_range(1..=100usize);
        let i = IntervalZ::with_len(rng.gen_range(-200..200), k).unwrap();
        let y = rng.gen_range(i.x1..=i.x2);
        let l = green_entry_cramer(&p, i, y, Endpoint::Left).unwrap();
        if l.flagged {
            continue;
        }
        let r = green_entry_cramer(&p, i, y, Endpoint::Right).unwrap();
        let dense = green_dense(&p, i).unwrap();
        for (c, d) in [(l.value, dense.get(i.x1, y)), (r.value, dense.get(y, i.x2))] {
            let tol = 1e-6 * c.log_mag().abs().max(1.0);
            assert!((c.log_mag() - d.log_mag()).abs() <= tol, "k={k}: {c} vs {d}");
        }
        compared += 1;
    }
    assert!(compared > 450);
}

#[test]
fn rate_far_above_growth_is_never_regular() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let lambda = 3.0f64;
    let g = golden();
    for _ in 0..100 {
        let p = OperatorParams::new(lambda, g.clone(), rng.gen_range(0.0..1.0), rng.gen_range(-8.0..8.0)).unwrap();
        let v = classify_regularity(&p, rng.gen_range(-100..100), 10.0 * lambda.ln(), 50, None).unwrap();
        assert!(!v.regular);
        assert!(v.margins.0.max(v.margins.1) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regularity_is_monotone_in_rate(theta in 0.0f64..1.0, e in -4.0f64..4.0, t in 0.0f64..1.5, dt in 0.0f64..1.0, k in 7usize..40) {
        let p = OperatorParams::new(2.5, golden(), theta, e).unwrap();
        let v = classify_regularity(&p, 0, t, k, None).unwrap();
        if let Some(w) = v.witness {
            let lower = classify_regularity(&p, 0, (t - dt).max(0.0), k, Some(&[w])).unwrap();
            prop_assert!(lower.regular);
            prop_assert_eq!(lower.witness, Some(w));
        }
    }
}
