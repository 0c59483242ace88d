//! Step 3 (model half): preprocess count rows (center, auto-scale, weight)
//! and fit a PCA model from a chunked accumulation of the cross-product
//! matrix, so calibration never needs the full observation matrix in
//! memory.
//!
//! Fitting is two-pass: pass 1 accumulates per-column mean and variance,
//! pass 2 accumulates X'^T X' over preprocessed rows. Both accumulators
//! merge associatively and commutatively, so chunk workers can run in
//! parallel and reduce.

use nalgebra::{DMatrix, DVector};

use crate::config::ComponentPolicy;
use crate::error::{Error, Result};

/// Centering, scaling and weighting applied to every raw count row.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessParams {
    pub mean: Vec<f64>,
    /// Sample standard deviation per column; constant columns carry 1.
    pub scale: Vec<f64>,
    pub weight: Vec<f64>,
    /// Columns whose variance was zero over the calibration stream.
    pub constant_columns: Vec<usize>,
}

impl PreprocessParams {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }
}

/// Streaming per-column mean/variance (Welford update, Chan merge).
#[derive(Debug, Clone)]
pub struct MeanVarAccumulator {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MeanVarAccumulator {
    pub fn new(n_features: usize) -> Self {
        MeanVarAccumulator {
            n: 0,
            mean: vec![0.0; n_features],
            m2: vec![0.0; n_features],
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn update(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.mean.len() {
            return Err(Error::Data(format!(
                "row has {} columns, expected {}",
                row.len(),
                self.mean.len()
            )));
        }
        self.n += 1;
        let inv_n = 1.0 / self.n as f64;
        for ((m, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(row.iter()) {
            let delta = x - *m;
            *m += delta * inv_n;
            *m2 += delta * (x - *m);
        }
        Ok(())
    }

    pub fn merge(mut self, other: MeanVarAccumulator) -> Result<MeanVarAccumulator> {
        if other.mean.len() != self.mean.len() {
            return Err(Error::Data("merging accumulators of different widths".into()));
        }
        if other.n == 0 {
            return Ok(self);
        }
        if self.n == 0 {
            return Ok(other);
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.n += other.n;
        Ok(self)
    }

    /// Finalize into preprocessing parameters with config weights.
    pub fn finish(&self, weights: &[f64]) -> Result<PreprocessParams> {
        if self.n < 2 {
            return Err(Error::Data(format!(
                "calibration requires at least 2 observations, got {}",
                self.n
            )));
        }
        if weights.len() != self.mean.len() {
            return Err(Error::Config(format!(
                "{} weights for {} columns",
                weights.len(),
                self.mean.len()
            )));
        }
        let denom = (self.n - 1) as f64;
        let mut constant_columns = Vec::new();
        let scale = self
            .m2
            .iter()
            .enumerate()
            .map(|(i, &m2)| {
                let sd = (m2 / denom).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    constant_columns.push(i);
                    1.0
                }
            })
            .collect();
        Ok(PreprocessParams {
            mean: self.mean.clone(),
            scale,
            weight: weights.to_vec(),
            constant_columns,
        })
    }
}

/// Pass-1 fit over a stream of raw count row chunks.
pub fn fit_preprocess<'a, I>(chunks: I, n_features: usize, weights: &[f64]) -> Result<PreprocessParams>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = MeanVarAccumulator::new(n_features);
    for row in chunks {
        acc.update(row)?;
    }
    acc.finish(weights)
}

/// x'[m] = w[m] * (x[m] - mean[m]) / scale[m]
pub fn apply_preprocess(x: &[f64], params: &PreprocessParams) -> Result<Vec<f64>> {
    if x.len() != params.n_features() {
        return Err(Error::Data(format!(
            "row has {} columns, expected {}",
            x.len(),
            params.n_features()
        )));
    }
    Ok(x.iter()
        .zip(params.mean.iter())
        .zip(params.scale.iter())
        .zip(params.weight.iter())
        .map(|(((x, m), s), w)| w * (x - m) / s)
        .collect())
}

/// Running X'^T X' over preprocessed rows.
#[derive(Debug, Clone)]
pub struct CrossProductAccumulator {
    n: u64,
    xtx: DMatrix<f64>,
}

impl CrossProductAccumulator {
    pub fn new(n_features: usize) -> Self {
        CrossProductAccumulator {
            n: 0,
            xtx: DMatrix::zeros(n_features, n_features),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.xtx.nrows()
    }

    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    /// Add a k x M chunk of preprocessed rows: xtx += chunk^T chunk.
    pub fn accumulate(&mut self, chunk: &DMatrix<f64>) -> Result<()> {
        if chunk.ncols() != self.dim() {
            return Err(Error::Data(format!(
                "chunk has {} columns, expected {}",
                chunk.ncols(),
                self.dim()
            )));
        }
        self.xtx.gemm_tr(1.0, chunk, chunk, 1.0);
        self.n += chunk.nrows() as u64;
        Ok(())
    }

    /// Convenience over row slices.
    pub fn accumulate_rows(&mut self, rows: &[Vec<f64>]) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let m = self.dim();
        for row in rows {
            if row.len() != m {
                return Err(Error::Data(format!(
                    "row has {} columns, expected {}",
                    row.len(),
                    m
                )));
            }
        }
        let chunk = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
        self.accumulate(&chunk)
    }

    pub fn merge(mut self, other: CrossProductAccumulator) -> Result<CrossProductAccumulator> {
        if other.dim() != self.dim() {
            return Err(Error::Data("merging accumulators of different widths".into()));
        }
        self.xtx += other.xtx;
        self.n += other.n;
        Ok(self)
    }
}

/// Fitted normality model.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub preprocess: PreprocessParams,
    /// M x A loadings with orthonormal columns, eigenvalue-descending.
    pub loadings: DMatrix<f64>,
    /// Top-A eigenvalues of X'^T X', descending.
    pub eigenvalues: Vec<f64>,
    pub n_components: usize,
    /// A x A covariance of calibration scores.
    pub scores_cov: DMatrix<f64>,
    pub captured_variance_fraction: f64,
    /// trace(X'^T X'): the sum of all M eigenvalues.
    pub total_variance: f64,
    pub n_calibration: u64,
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.loadings.nrows()
    }

    /// t = x' P_A
    pub fn project(&self, x_pre: &[f64]) -> Result<DVector<f64>> {
        if x_pre.len() != self.n_features() {
            return Err(Error::Data(format!(
                "row has {} columns, expected {}",
                x_pre.len(),
                self.n_features()
            )));
        }
        let x = DVector::from_column_slice(x_pre);
        Ok(self.loadings.tr_mul(&x))
    }

    /// e = x' - t P_A^T
    pub fn residual(&self, x_pre: &[f64], t: &DVector<f64>) -> Result<DVector<f64>> {
        if x_pre.len() != self.n_features() {
            return Err(Error::Data(format!(
                "row has {} columns, expected {}",
                x_pre.len(),
                self.n_features()
            )));
        }
        if t.len() != self.n_components {
            return Err(Error::Data(format!(
                "score vector has {} components, expected {}",
                t.len(),
                self.n_components
            )));
        }
        let mut e = DVector::from_column_slice(x_pre);
        e.gemv(-1.0, &self.loadings, t, 1.0);
        Ok(e)
    }
}

/// Eigendecomposition of the accumulated cross-product, component
/// selection by policy, deterministic sign convention.
pub fn fit_pca(
    acc: &CrossProductAccumulator,
    preprocess: PreprocessParams,
    policy: &ComponentPolicy,
) -> Result<PcaModel> {
    let n = acc.n();
    if n < 2 {
        return Err(Error::Data(format!(
            "calibration requires at least 2 observations, got {}",
            n
        )));
    }
    let m = acc.dim();
    if preprocess.n_features() != m {
        return Err(Error::Data("preprocess parameters do not match accumulator width".into()));
    }

    // symmetrize before decomposing; accumulation is symmetric up to round-off
    let mut sym = acc.xtx.clone();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (sym[(i, j)] + sym[(j, i)]);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    let total_variance: f64 = (0..m).map(|i| sym[(i, i)]).sum();
    // rejects zero, negative and NaN traces alike
    let trace_is_positive = total_variance > 0.0;
    if !trace_is_positive {
        return Err(Error::Model(
            "zero total variance: all columns constant over the calibration stream".into(),
        ));
    }

    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let rank_tol = lambda_max * 1e-12;
    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > rank_tol)
        .count();

    let n_components = match policy {
        ComponentPolicy::Fixed(a) => {
            if *a > m {
                return Err(Error::Model(format!(
                    "fixed component count {} exceeds dimensionality {}",
                    a, m
                )));
            }
            if *a > rank {
                return Err(Error::Model(format!(
                    "fixed component count {} exceeds rank {} of the cross-product matrix",
                    a, rank
                )));
            }
            *a
        }
        ComponentPolicy::VarianceFraction(f) => {
            let mut cum = 0.0;
            let mut a = rank.max(1);
            for (i, &idx) in order.iter().take(rank).enumerate() {
                cum += eig.eigenvalues[idx];
                if cum / total_variance >= *f {
                    a = i + 1;
                    break;
                }
            }
            a
        }
    };

    let mut loadings = DMatrix::zeros(m, n_components);
    let mut eigenvalues = Vec::with_capacity(n_components);
    for (col, &idx) in order.iter().take(n_components).enumerate() {
        eigenvalues.push(eig.eigenvalues[idx]);
        let v = eig.eigenvectors.column(idx);
        // sign convention: the element of largest magnitude is positive
        let mut max_abs = 0.0;
        let mut max_i = 0;
        for (i, &x) in v.iter().enumerate() {
            if x.abs() > max_abs {
                max_abs = x.abs();
                max_i = i;
            }
        }
        let flip = if v[max_i] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            loadings[(i, col)] = flip * v[i];
        }
    }

    // Sigma_T = P^T (X'^T X') P / (n - 1), kept explicit rather than
    // assumed diagonal
    let pxp = loadings.tr_mul(&(acc.xtx() * &loadings));
    let mut scores_cov = pxp / (n as f64 - 1.0);
    for i in 0..n_components {
        for j in (i + 1)..n_components {
            let v = 0.5 * (scores_cov[(i, j)] + scores_cov[(j, i)]);
            scores_cov[(i, j)] = v;
            scores_cov[(j, i)] = v;
        }
    }

    let captured: f64 = eigenvalues.iter().sum();
    Ok(PcaModel {
        preprocess,
        loadings,
        eigenvalues,
        n_components,
        scores_cov,
        captured_variance_fraction: captured / total_variance,
        total_variance,
        n_calibration: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn accumulate_all(rows: &[Vec<f64>], m: usize, chunk: usize) -> CrossProductAccumulator {
        let mut acc = CrossProductAccumulator::new(m);
        for c in rows.chunks(chunk.max(1)) {
            acc.accumulate_rows(c).unwrap();
        }
        acc
    }

    #[test]
    fn mean_and_std_example() {
        let rows = [vec![1.0], vec![2.0], vec![3.0]];
        let p = fit_preprocess(rows.iter().map(|r| r.as_slice()), 1, &[1.0]).unwrap();
        assert_relative_eq!(p.mean[0], 2.0);
        assert_relative_eq!(p.scale[0], 1.0);
        assert!(p.constant_columns.is_empty());
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let rows = [vec![5.0], vec![5.0], vec![5.0]];
        let p = fit_preprocess(rows.iter().map(|r| r.as_slice()), 1, &[1.0]).unwrap();
        assert_eq!(p.mean[0], 5.0);
        assert_eq!(p.scale[0], 1.0);
        assert_eq!(p.constant_columns, vec![0]);
        assert_eq!(apply_preprocess(&[5.0], &p).unwrap(), vec![0.0]);
    }

    #[test]
    fn single_observation_is_an_error() {
        let rows = [vec![1.0]];
        assert!(fit_preprocess(rows.iter().map(|r| r.as_slice()), 1, &[1.0]).is_err());
    }

    #[test]
    fn chunked_mean_var_matches_two_pass() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        let n = 157;
        let m = 9;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..40) as f64).collect())
            .collect();
        let weights = vec![1.0; m];

        // two-pass dense reference
        let mut mean = vec![0.0; m];
        for r in &rows {
            for (a, x) in mean.iter_mut().zip(r) {
                *a += x;
            }
        }
        for a in mean.iter_mut() {
            *a /= n as f64;
        }
        let mut var = vec![0.0; m];
        for r in &rows {
            for ((a, x), mu) in var.iter_mut().zip(r).zip(&mean) {
                *a += (x - mu) * (x - mu);
            }
        }
        for a in var.iter_mut() {
            *a /= (n - 1) as f64;
        }

        for chunk in [1usize, 7, 50] {
            let mut acc = MeanVarAccumulator::new(m);
            for c in rows.chunks(chunk) {
                let mut part = MeanVarAccumulator::new(m);
                for r in c {
                    part.update(r).unwrap();
                }
                acc = acc.merge(part).unwrap();
            }
            let p = acc.finish(&weights).unwrap();
            for i in 0..m {
                assert_relative_eq!(p.mean[i], mean[i], max_relative = 1e-10);
                assert_relative_eq!(p.scale[i], var[i].sqrt(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn apply_preprocess_formula() {
        let p = PreprocessParams {
            mean: vec![2.0],
            scale: vec![1.0],
            weight: vec![10.0],
            constant_columns: vec![],
        };
        assert_eq!(apply_preprocess(&[4.0], &p).unwrap(), vec![20.0]);
        assert_eq!(apply_preprocess(&[2.0], &p).unwrap(), vec![0.0]);
        assert!(apply_preprocess(&[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn accumulator_is_associative() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let mut one = CrossProductAccumulator::new(2);
        one.accumulate_rows(&rows).unwrap();
        let mut a = CrossProductAccumulator::new(2);
        a.accumulate_rows(&rows[..1]).unwrap();
        let mut b = CrossProductAccumulator::new(2);
        b.accumulate_rows(&rows[1..]).unwrap();
        let merged = a.merge(b).unwrap();
        assert_eq!(merged.n(), one.n());
        assert_eq!(merged.xtx(), one.xtx());

        // empty chunk is the identity
        let mut c = one.clone();
        c.accumulate_rows(&[]).unwrap();
        assert_eq!(c.xtx(), one.xtx());
        assert_eq!(c.n(), one.n());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn chunked_cross_product_matches_dense() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        let (n, m) = (200, 20);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..30) as f64).collect())
            .collect();
        let chunked = accumulate_all(&rows, m, 7);
        let mut dense = vec![vec![0.0; m]; m];
        for r in &rows {
            for i in 0..m {
                for j in 0..m {
                    dense[i][j] += r[i] * r[j];
                }
            }
        }
        let mut max_diff: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                max_diff = max_diff.max((chunked.xtx()[(i, j)] - dense[i][j]).abs());
            }
        }
        assert!(max_diff <= 1e-8, "max abs diff {}", max_diff);
    }

    #[test]
    fn diagonal_cross_product_fit() {
        let mut acc = CrossProductAccumulator::new(2);
        // rows chosen so X^T X = [[2,0],[0,1]]
        let s = std::f64::consts::SQRT_2 / 2.0;
        acc.accumulate_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, s], vec![0.0, s]])
            .unwrap();
        let pre = PreprocessParams {
            mean: vec![0.0; 2],
            scale: vec![1.0; 2],
            weight: vec![1.0; 2],
            constant_columns: vec![],
        };
        let model = fit_pca(&acc, pre, &ComponentPolicy::VarianceFraction(0.6)).unwrap();
        assert_eq!(model.n_components, 1);
        assert_relative_eq!(model.eigenvalues[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(model.loadings[(0, 0)], 1.0, max_relative = 1e-12);
        assert_relative_eq!(model.loadings[(1, 0)].abs(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(model.captured_variance_fraction, 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(model.total_variance, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn fixed_component_count_beyond_dim_or_rank_errors() {
        let mut acc = CrossProductAccumulator::new(2);
        acc.accumulate_rows(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]])
            .unwrap();
        let pre = PreprocessParams {
            mean: vec![0.0; 2],
            scale: vec![1.0; 2],
            weight: vec![1.0; 2],
            constant_columns: vec![],
        };
        assert!(fit_pca(&acc, pre.clone(), &ComponentPolicy::Fixed(3)).is_err());
        // second column is identically zero: rank 1
        assert!(fit_pca(&acc, pre.clone(), &ComponentPolicy::Fixed(2)).is_err());
        assert!(fit_pca(&acc, pre, &ComponentPolicy::Fixed(1)).is_ok());
    }

    #[test]
    fn projection_of_loading_column_is_unit_vector() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let (n, m) = (50, 6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..30) as f64).collect())
            .collect();
        let acc = accumulate_all(&rows, m, 16);
        let pre = PreprocessParams {
            mean: vec![0.0; m],
            scale: vec![1.0; m],
            weight: vec![1.0; m],
            constant_columns: vec![],
        };
        let model = fit_pca(&acc, pre, &ComponentPolicy::Fixed(3)).unwrap();

        let zero = model.project(&vec![0.0; m]).unwrap();
        assert!(zero.iter().all(|&t| t == 0.0));

        for a in 0..model.n_components {
            let col: Vec<f64> = model.loadings.column(a).iter().copied().collect();
            let t = model.project(&col).unwrap();
            for b in 0..model.n_components {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(t[b], expect, epsilon = 1e-10);
            }
            // a loading column lies in the model span: residual vanishes
            let e = model.residual(&col, &t).unwrap();
            assert!(e.amax() <= 1e-10);
        }
    }

    #[test]
    fn full_rank_model_has_zero_residuals_and_trace_identity() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let (n, m) = (40, 5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..30) as f64 + 0.01).collect())
            .collect();
        let acc = accumulate_all(&rows, m, 9);
        let pre = PreprocessParams {
            mean: vec![0.0; m],
            scale: vec![1.0; m],
            weight: vec![1.0; m],
            constant_columns: vec![],
        };
        let model = fit_pca(&acc, pre, &ComponentPolicy::Fixed(m)).unwrap();
        let eig_sum: f64 = model.eigenvalues.iter().sum();
        assert_relative_eq!(eig_sum, model.total_variance, max_relative = 1e-8);
        assert_relative_eq!(model.captured_variance_fraction, 1.0, max_relative = 1e-10);
        for r in &rows {
            let t = model.project(r).unwrap();
            let e = model.residual(r, &t).unwrap();
            assert!(e.amax() <= 1e-8, "residual {}", e.amax());
        }
    }

    #[test]
    fn pythagorean_split_holds_per_row() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let (n, m) = (120, 12);
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..25) as f64).collect())
            .collect();
        let weights = vec![1.0; m];
        let pre = fit_preprocess(raw.iter().map(|r| r.as_slice()), m, &weights).unwrap();
        let rows: Vec<Vec<f64>> = raw.iter().map(|r| apply_preprocess(r, &pre).unwrap()).collect();
        let acc = accumulate_all(&rows, m, 13);
        let model = fit_pca(&acc, pre, &ComponentPolicy::VarianceFraction(0.7)).unwrap();
        for x in &rows {
            let t = model.project(x).unwrap();
            let e = model.residual(x, &t).unwrap();
            let lhs: f64 = x.iter().map(|v| v * v).sum();
            let rhs = t.norm_squared() + e.norm_squared();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn orthonormal_loadings() {
        use rand::Rng;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(13);
        let (n, m) = (80, 10);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..50) as f64).collect())
            .collect();
        let acc = accumulate_all(&rows, m, 10);
        let pre = PreprocessParams {
            mean: vec![0.0; m],
            scale: vec![1.0; m],
            weight: vec![1.0; m],
            constant_columns: vec![],
        };
        let model = fit_pca(&acc, pre, &ComponentPolicy::Fixed(4)).unwrap();
        let gram = model.loadings.tr_mul(&model.loadings);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() <= 1e-10);
            }
        }
        // deterministic sign: largest-magnitude element of each column positive
        for a in 0..4 {
            let col = model.loadings.column(a);
            let max = col.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            assert!(max > 0.0);
        }
    }
}
