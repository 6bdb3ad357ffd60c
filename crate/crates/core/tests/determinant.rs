use std::sync::Arc;

use amo_core::cf::{DigitSource, FrequencyModel, DEFAULT_Q_CAP};
use amo_core::determinant::{
    in_a_kr, pk_eval, qk_eval, qk_phase, sup_growth_profile, wrap_phase, OperatorParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn freq(block: u64) -> Arc<FrequencyModel> {
    Arc::new(FrequencyModel::build(&DigitSource::Periodic(vec![block]), 40, DEFAULT_Q_CAP).unwrap())
}

/// Dense tridiagonal matrix, Gaussian elimination with partial pivoting.
/// Returns (sign, ln|det|).
fn dense_log_det(diag: &[f64]) -> (i8, f64) {
    let n = diag.len();
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        a[i][i] = diag[i];
        if i + 1 < n {
            a[i][i + 1] = 1.0;
            a[i + 1][i] = 1.0;
        }
    }
    let mut sign = 1i8;
    let mut log = 0.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        if a[piv][c] == 0.0 {
            return (0, f64::NEG_INFINITY);
        }
        if piv != c {
            a.swap(piv, c);
            sign = -sign;
        }
        let p = a[c][c];
        if p < 0.0 {
            sign = -sign;
        }
        log += p.abs().ln();
        for r in c + 1..n {
            let f = a[r][c] / p;
            if f != 0.0 {
                for cc in c..n {
                    a[r][cc] -= f * a[c][cc];
                }
            }
        }
    }
    (sign, log)
}

fn diag_of(p: &OperatorParams, k: usize) -> Vec<f64> {
    (0..k as i64).map(|j| p.diag(0.0, j)).collect()
}

#[test]
fn k30_matches_dense_elimination() {
    let p = OperatorParams::new(3.0, freq(1), 0.123, 0.5).unwrap();
    let v = pk_eval(&p, 30, 0.0);
    let (s, l) = dense_log_det(&diag_of(&p, 30));
    assert_eq!(v.sign(), s);
    assert!((v.log_mag() - l).abs() <= 1e-9 * l.abs());
}

#[test]
fn dense_oracle_equivalence_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let g = freq(1);
    let s = freq(2);
    for draw in 0..100 {
        let f = if draw % 2 == 0 { g.clone() } else { s.clone() };
        let lambda = rng.gen_range(1.05..8.0);
        let theta = rng.gen_range(0.0..1.0);
        let energy = rng.gen_range(-2.0 * lambda - 2.0..2.0 * lambda + 2.0);
        let k = rng.gen_range(1..=200usize);
        let p = OperatorParams::new(lambda, f, theta, energy).unwrap();
        let v = pk_eval(&p, k, 0.0);
        let diag = diag_of(&p, k);
        let (sign, log) = dense_log_det(&diag);
        assert!(
            (v.log_mag() - log).abs() <= 1e-6,
            "draw {draw}: k={k} recurrence {} dense {log}",
            v.log_mag()
        );
        // Hadamard-type scale of the box
        let scale: f64 = diag.iter().map(|d| (d.abs() + 2.0).ln()).sum();
        if log > scale - 8.0 * std::f64::consts::LN_10 {
            assert_eq!(v.sign(), sign, "draw {draw}");
        }
    }
}

#[test]
fn qk_round_trip_k12() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = freq(1);
    for _ in 0..10 {
        let p = OperatorParams::new(rng.gen_range(1.1..6.0), g.clone(), 0.0, rng.gen_range(-3.0..3.0)).unwrap();
        let x = (std::f64::consts::TAU * 0.3).cos();
        let q = qk_eval(&p, 12, x).unwrap();
        let ts = qk_phase(&g, 12, x).unwrap();
        let direct = pk_eval(&p.with_theta(ts).unwrap(), 12, 0.0);
        assert_eq!(q, direct);
        // and the defining relation of the back-solved phase
        let half = (11.0 * g.value() / 2.0).rem_euclid(1.0);
        assert!(((std::f64::consts::TAU * (ts + half)).cos() - x).abs() < 1e-12);
    }
}

#[test]
fn large_rate_contains_whole_grid() {
    let lambda = 4.0f64;
    let p = OperatorParams::new(lambda, freq(1), 0.0, 0.3).unwrap();
    let r = lambda.ln() + 1.0;
    for i in 0..1000 {
        let m = in_a_kr(&p, 80, r, i as f64 / 1000.0).unwrap();
        assert!(m.member, "θ = {}", i as f64 / 1000.0);
    }
}

#[test]
fn grid_maximiser_is_outside_small_rate() {
    let p = OperatorParams::new(5.0, freq(1), 0.0, 0.0).unwrap();
    let k = 50;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..(8 * k) {
        let th = i as f64 / (8 * k) as f64;
        let m = in_a_kr(&p, k, 0.1, th).unwrap();
        let logq = (k as f64 + 1.0) * 0.1 - m.margin;
        if logq > best {
            best = logq;
            arg = th;
        }
    }
    let m = in_a_kr(&p, k, 0.1, arg).unwrap();
    assert!(!m.member);
    assert!(best > (k as f64 + 1.0) / 10.0);
}

#[test]
fn growth_bound_examples() {
    for lambda in [2.0f64, 5.0] {
        let p = OperatorParams::new(lambda, freq(1), 0.0, 0.0).unwrap();
        let prof = sup_growth_profile(&p, &[50, 100, 200, 400], 4, 0.1).unwrap();
        for g in &prof {
            assert!(!g.exceeds, "λ={lambda} k={} sup={}", g.k, g.sup);
            assert!(g.sup <= lambda.ln() + 0.1);
        }
        for w in prof[1..].windows(2) {
            assert!(w[1].sup <= w[0].sup + 0.05);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn evenness_about_half_shift(k in 1usize..=100, theta in 0.0f64..1.0, lambda in 1.1f64..6.0, e in -3.0f64..3.0) {
        let g = freq(1);
        let p = OperatorParams::new(lambda, g.clone(), theta, e).unwrap();
        let mirrored = wrap_phase(-theta - g.frac_mul(k as i64 - 1));
        let a = pk_eval(&p, k, 0.0);
        let b = pk_eval(&p.with_theta(mirrored).unwrap(), k, 0.0);
        let tol = 1e-9 * a.log_mag().abs().max(1.0);
        prop_assert!((a.log_mag() - b.log_mag()).abs() <= tol, "{} vs {}", a, b);
    }

    #[test]
    fn membership_margin_sign(k in 1usize..60, theta in 0.0f64..1.0, r in 0.01f64..2.0) {
        let p = OperatorParams::new(2.0, freq(1), 0.0, 0.1).unwrap();
        let m = in_a_kr(&p, k, r, theta).unwrap();
        prop_assert_eq!(m.member, m.margin >= 0.0);
    }
}
