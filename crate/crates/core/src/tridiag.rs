//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues by the implicit QL iteration with Wilkinson-type shifts
//! (no vectors accumulated, O(n²)); eigenvectors by inverse iteration on a
//! pivoted tridiagonal factorisation, with Gram–Schmidt inside clusters of
//! close eigenvalues. Vectors are produced one cluster at a time so callers
//! can stream over a large spectrum without holding every vector.

/// Relative gap (in units of `‖T‖`) below which eigenvalues share a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

const MAX_QL_ITER: usize = 60;
const MAX_INVERSE_ITER: usize = 6;

/// `max_i |d_i| + |e_{i−1}| + |e_i|`.
pub fn tridiag_norm(d: &[f64], e: &[f64]) -> f64 {
    (0..d.len())
        .map(|i| {
            d[i].abs()
                + if i > 0 { e[i - 1].abs() } else { 0.0 }
                + if i + 1 < d.len() { e[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i+1`), ascending.
pub fn eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1), "off-diagonal length");
    let mut d = d.to_vec();
    if n <= 1 {
        return d;
    }
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= MAX_QL_ITER, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Pivoted LU of `T − σI`: `U` has two superdiagonals.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn new(d: &[f64], e: &[f64], sigma: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut lu = ShiftedLu {
            u0: vec![0.0; n],
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            mult: vec![0.0; n.saturating_sub(1)],
            swap: vec![false; n.saturating_sub(1)],
        };
        let mut diag = d[0] - sigma;
        let mut sup = if n > 1 { e[0] } else { 0.0 };
        for k in 0..n.saturating_sub(1) {
            let sub = e[k];
            let next_diag = d[k + 1] - sigma;
            let next_sup = if k + 2 < n { e[k + 1] } else { 0.0 };
            if diag.abs() >= sub.abs() {
                let pivot = if diag == 0.0 { tiny } else { diag };
                let m = sub / pivot;
                lu.u0[k] = pivot;
                lu.u1[k] = sup;
                lu.mult[k] = m;
                diag = next_diag - m * sup;
                sup = next_sup;
            } else {
                let m = diag / sub;
                lu.u0[k] = sub;
                lu.u1[k] = next_diag;
                lu.u2[k] = next_sup;
                lu.mult[k] = m;
                lu.swap[k] = true;
                diag = sup - m * next_diag;
                sup = -m * next_sup;
            }
        }
        lu.u0[n - 1] = if diag.abs() < tiny { tiny.copysign(diag) } else { diag };
        for u in lu.u0.iter_mut() {
            if u.abs() < tiny {
                *u = tiny.copysign(*u);
            }
        }
        lu
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for k in 0..n.saturating_sub(1) {
            if self.swap[k] {
                b.swap(k, k + 1);
            }
            b[k + 1] -= self.mult[k] * b[k];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * b[i + 2];
            }
            b[i] = v / self.u0[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Calls `sink(index, vector)` for every eigenvalue in `evals` (ascending),
/// with unit-norm vectors. Only one cluster of vectors is alive at a time.
pub fn for_each_eigenvector<F: FnMut(usize, &[f64])>(d: &[f64], e: &[f64], evals: &[f64], mut sink: F) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let norm = tridiag_norm(d, e).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let sep = 10.0 * f64::EPSILON * norm;
    let mut cluster: Vec<Vec<f64>> = Vec::new();
    let mut last_shift = f64::NEG_INFINITY;
    for (j, &lam) in evals.iter().enumerate() {
        let new_cluster = j == 0 || lam - evals[j - 1] > CLUSTER_TOL * norm;
        if new_cluster {
            cluster.clear();
            last_shift = f64::NEG_INFINITY;
        }
        // separate coincident shifts inside a cluster
        let shift = if lam - last_shift < sep { last_shift + sep } else { lam };
        last_shift = shift;
        let lu = ShiftedLu::new(d, e, shift, tiny);
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 1.618_033_988_75 + 0.377 * j as f64).sin())
            .collect();
        normalize(&mut x);
        for it in 0..MAX_INVERSE_ITER {
            lu.solve(&mut x);
            for prev in &cluster {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= dot * pi);
            }
            let growth = normalize(&mut x);
            if it >= 1 && growth * tiny > 1e-4 {
                break;
            }
        }
        sink(j, &x);
        if j + 1 < evals.len() && evals[j + 1] - lam <= CLUSTER_TOL * norm {
            cluster.push(x);
        }
    }
}

/// All eigenpairs, vectors as rows in eigenvalue order.
pub fn eigenpairs(d: &[f64], e: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let evals = eigenvalues(d, e);
    let mut vecs = vec![Vec::new(); evals.len()];
    for_each_eigenvector(d, e, &evals, |j, v| vecs[j] = v.to_vec());
    (evals, vecs)
}
