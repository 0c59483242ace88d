//! Independent dense oracles for the acceptance suite. Everything here is
//! deliberately naive — plain loops, a hand-rolled Jacobi eigensolver and
//! Gauss-Jordan inversion — and shares no code with the implementation
//! paths it checks.
#![allow(clippy::needless_range_loop)]

/// Column means and sample standard deviations (denominator n-1), computed
/// densely in two passes. Constant columns get unit scale.
pub fn dense_mean_std(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let m = rows[0].len();
    let mut mean = vec![0.0; m];
    for r in rows {
        for (a, x) in mean.iter_mut().zip(r) {
            *a += x;
        }
    }
    for a in mean.iter_mut() {
        *a /= n as f64;
    }
    let mut std = vec![0.0; m];
    for r in rows {
        for ((a, x), mu) in std.iter_mut().zip(r).zip(&mean) {
            *a += (x - mu) * (x - mu);
        }
    }
    for a in std.iter_mut() {
        *a = (*a / (n as f64 - 1.0)).sqrt();
        if *a == 0.0 {
            *a = 1.0;
        }
    }
    (mean, std)
}

pub fn dense_preprocess(rows: &[Vec<f64>], mean: &[f64], std: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(mean)
                .zip(std)
                .map(|((x, mu), s)| (x - mu) / s)
                .collect()
        })
        .collect()
}

/// S = X^T X by triple loop.
pub fn dense_cross_product(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = rows[0].len();
    let mut s = vec![vec![0.0; m]; m];
    for r in rows {
        for i in 0..m {
            for j in 0..m {
                s[i][j] += r[i] * r[j];
            }
        }
    }
    s
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues descending and eigenvectors as columns (vecs[i][k] is
/// component i of eigenvector k), sign-fixed so the largest-magnitude
/// component of each vector is positive.
pub fn jacobi_eigen(sym: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let norm: f64 = sym
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-15 * norm.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[k][k]).collect();
    let mut vectors = vec![vec![0.0; order.len()]; n];
    for (col, &k) in order.iter().enumerate() {
        let mut max_abs = 0.0;
        let mut max_i = 0;
        for i in 0..n {
            if v[i][k].abs() > max_abs {
                max_abs = v[i][k].abs();
                max_i = i;
            }
        }
        let flip = if v[max_i][k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i][col] = flip * v[i][k];
        }
    }
    (eigenvalues, vectors)
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn gauss_jordan_inverse(mat: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = mat.len();
    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let mut inv = vec![vec![0.0; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "oracle: singular matrix");
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row][j] -= f * a[col][j];
                inv[row][j] -= f * inv[col][j];
            }
        }
    }
    inv
}

/// Dense per-row D and Q under the top-`a` oracle loadings.
pub fn dense_d_q(pre_rows: &[Vec<f64>], vectors: &[Vec<f64>], a: usize) -> Vec<(f64, f64)> {
    let n = pre_rows.len();
    let m = pre_rows[0].len();
    let scores: Vec<Vec<f64>> = pre_rows
        .iter()
        .map(|x| {
            (0..a)
                .map(|k| (0..m).map(|i| x[i] * vectors[i][k]).sum())
                .collect()
        })
        .collect();
    let mut sigma = vec![vec![0.0; a]; a];
    for t in &scores {
        for i in 0..a {
            for j in 0..a {
                sigma[i][j] += t[i] * t[j];
            }
        }
    }
    for row in sigma.iter_mut() {
        for x in row.iter_mut() {
            *x /= n as f64 - 1.0;
        }
    }
    let sigma_inv = gauss_jordan_inverse(&sigma);
    pre_rows
        .iter()
        .zip(&scores)
        .map(|(x, t)| {
            let mut d = 0.0;
            for i in 0..a {
                for j in 0..a {
                    d += t[i] * sigma_inv[i][j] * t[j];
                }
            }
            let mut q = 0.0;
            for i in 0..m {
                let recon: f64 = (0..a).map(|k| t[k] * vectors[i][k]).sum();
                let e = x[i] - recon;
                q += e * e;
            }
            (d, q)
        })
        .collect()
}

/// Angle between two unit vectors, sign-insensitive.
pub fn angle_up_to_sign(u: &[f64], w: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    dot.abs().min(1.0).acos()
}
