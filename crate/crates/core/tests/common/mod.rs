//! Reference implementations used by the integration tests. Nothing here
//! calls into the library's numerics, so agreement is evidence rather than
//! a tautology.

#![allow(dead_code)]

use rand::Rng;

/// Brute-force range of `phi . x` over `{x in [-1,1]^p : a_k . x <= b_k}` by
/// enumerating every basic solution of `p` active constraints. `None` when no
/// vertex is feasible (the region is empty).
pub fn vertex_range(phi: &[f64], cuts: &[(Vec<f64>, f64)], tol: f64) -> Option<(f64, f64)> {
    let p = phi.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        rows.push((e.clone(), 1.0));
        e[j] = -1.0;
        rows.push((e, 1.0));
    }
    rows.extend(cuts.iter().cloned());

    let mut best: Option<(f64, f64)> = None;
    for subset in combinations(rows.len(), p) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&k| rows[k].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&k| rows[k].1).collect();
        let Some(x) = solve(a, b) else { continue };
        let feasible = rows
            .iter()
            .all(|(n, off)| n.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= off + tol);
        if feasible {
            let v: f64 = phi.iter().zip(&x).map(|(u, w)| u * w).sum();
            best = Some(match best {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` for (near-)singular systems.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Lanczos approximation (g = 7, n = 9) of `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > 1e-17 * sum.abs() {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
        if k > 10_000.0 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * sum
}

/// Chi-square quantile by bisection on `P(nu / 2, x / 2)`.
pub fn chi2_quantile(nu: f64, prob: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_p(0.5 * nu, 0.5 * mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Student t CDF by composite Simpson integration of the density from 0 to `t`.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let ln_c = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln();
    let pdf = |x: f64| (ln_c - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln()).exp();
    let steps = 20_000;
    let h = t / steps as f64;
    let mut s = pdf(0.0) + pdf(t);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(i as f64 * h);
    }
    0.5 + s * h / 3.0
}

/// (height, leaf count) of one tree drawn from the branching-process prior.
pub fn prior_tree_shape<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> (u32, usize) {
    fn grow<R: Rng + ?Sized>(depth: u32, alpha: f64, beta: f64, rng: &mut R) -> (u32, usize) {
        let split = alpha * (1.0 + depth as f64).powf(-beta);
        if rng.random::<f64>() < split {
            let (hl, nl) = grow(depth + 1, alpha, beta, rng);
            let (hr, nr) = grow(depth + 1, alpha, beta, rng);
            (hl.max(hr), nl + nr)
        } else {
            (depth, 1)
        }
    }
    grow(0, alpha, beta, rng)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Standard error of the mean of an autocorrelated series by non-overlapping
/// batch means.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&x[b * size..(b + 1) * size])).collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Standard error of the mean of an independent sample.
pub fn iid_se(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// z-scores comparing the mean and variance of an MCMC trace against an
/// independent sample from the same target.
pub fn moment_z_scores(chain: &[f64], direct: &[f64], batches: usize) -> (f64, f64) {
    let (mc, md) = (mean(chain), mean(direct));
    let z_mean = (mc - md) / (batch_means_se(chain, batches).powi(2) + iid_se(direct).powi(2)).sqrt();
    let sq_c: Vec<f64> = chain.iter().map(|v| (v - mc) * (v - mc)).collect();
    let sq_d: Vec<f64> = direct.iter().map(|v| (v - md) * (v - md)).collect();
    let z_var = (mean(&sq_c) - mean(&sq_d)) / (batch_means_se(&sq_c, batches).powi(2) + iid_se(&sq_d).powi(2)).sqrt();
    (z_mean, z_var)
}
