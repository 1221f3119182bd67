//! Three-component PCA.
//!
//! Two solvers share one output contract: an exact eigendecomposition of the
//! covariance matrix, and a seeded randomized range finder (Halko et al.)
//! that only touches the data through matrix products.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row width above which `PcaSolver::Auto` switches to the randomized solver.
pub const EXACT_MAX_WIDTH: usize = 512;

const COMPONENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum PcaSolver {
    #[default]
    Auto,
    Exact,
    Randomized {
        oversample: usize,
        power_iters: usize,
    },
}

impl PcaSolver {
    pub const DEFAULT_RANDOMIZED: PcaSolver = PcaSolver::Randomized {
        oversample: 10,
        power_iters: 4,
    };

    fn resolve(self, width: usize) -> PcaSolver {
        match self {
            PcaSolver::Auto if width <= EXACT_MAX_WIDTH => PcaSolver::Exact,
            PcaSolver::Auto => Self::DEFAULT_RANDOMIZED,
            other => other,
        }
    }
}

/// Mean-centered top-3 principal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca3Model {
    pub mean: Vec<f64>,
    /// Orthonormal rows, by decreasing explained variance.
    pub components: [Vec<f64>; 3],
    pub explained_variance: [f64; 3],
    pub explained_variance_ratio: [f64; 3],
}

impl Pca3Model {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates of `x - mean` in the component basis.
    pub fn transform(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = x
                .iter()
                .zip(&self.mean)
                .zip(c)
                .map(|((v, m), w)| (v - m) * w)
                .sum();
        }
        out
    }

    /// Linear part only: `components * x`, without centering.
    pub fn apply_linear(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = dot(x, c);
        }
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Read-only access to a data matrix whose rows are observations.
pub(crate) trait DataMatrix: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];

    fn column_means(&self) -> Vec<f64> {
        let n = self.nrows();
        let mut mean = vec![0.0; self.ncols()];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        mean
    }

    fn covariance(&self, mean: &[f64]) -> DMatrix<f64> {
        let (n, d) = (self.nrows(), self.ncols());
        let mut cov = DMatrix::<f64>::zeros(d, d);
        let mut centered = vec![0.0; d];
        for i in 0..n {
            for ((c, v), m) in centered.iter_mut().zip(self.row(i)).zip(mean) {
                *c = v - m;
            }
            for a in 0..d {
                let ca = centered[a];
                for b in a..d {
                    cov[(a, b)] += ca * centered[b];
                }
            }
        }
        symmetrize_scale(&mut cov, n);
        cov
    }
}

fn symmetrize_scale(cov: &mut DMatrix<f64>, n: usize) {
    let d = cov.nrows();
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
}

/// Row-major dense copy of a matrix.
pub(crate) struct Dense {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Dense {
    pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(m.row(i).iter());
        }
        Dense { data, rows, cols }
    }
}

impl DataMatrix for Dense {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Hankel matrix `M[i][j] = sums[i + j]`: the convolved subsequences viewed
/// without materializing them.
pub(crate) struct Hankel<'a> {
    pub sums: &'a [f64],
    pub width: usize,
}

impl DataMatrix for Hankel<'_> {
    fn nrows(&self) -> usize {
        self.sums.len() + 1 - self.width
    }
    fn ncols(&self) -> usize {
        self.width
    }
    fn row(&self, i: usize) -> &[f64] {
        &self.sums[i..i + self.width]
    }

    fn column_means(&self) -> Vec<f64> {
        let n = self.nrows();
        let mut acc: f64 = self.sums[..n].iter().sum();
        let mut mean = Vec::with_capacity(self.width);
        mean.push(acc / n as f64);
        for j in 1..self.width {
            acc += self.sums[j + n - 1] - self.sums[j - 1];
            mean.push(acc / n as f64);
        }
        mean
    }

    /// Lagged products along each diagonal, `O(n * width + width^2)`.
    fn covariance(&self, mean: &[f64]) -> DMatrix<f64> {
        let n = self.nrows();
        let d = self.width;
        // Centering the whole sequence first keeps magnitudes small; the
        // covariance itself is invariant to the shift.
        let shift = self.sums.iter().sum::<f64>() / self.sums.len() as f64;
        let x: Vec<f64> = self.sums.iter().map(|v| v - shift).collect();
        let mu: Vec<f64> = mean.iter().map(|m| m - shift).collect();

        let first_row: Vec<f64> = (0..d)
            .into_par_iter()
            .map(|b| dot(&x[..n], &x[b..b + n]))
            .collect();
        let mut raw = DMatrix::<f64>::zeros(d, d);
        for b in 0..d {
            let mut acc = first_row[b];
            raw[(0, b)] = acc;
            for a in 1..d - b {
                // (a-1, a-1+b) -> (a, a+b)
                acc += x[a - 1 + n] * x[a - 1 + b + n] - x[a - 1] * x[a - 1 + b];
                raw[(a, a + b)] = acc;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] = raw[(a, b)] - n as f64 * mu[a] * mu[b];
            }
        }
        symmetrize_scale(&mut cov, n);
        cov
    }
}

/// Fits the top-3 principal basis of the rows of `proj`.
pub fn fit_pca3(proj: &DMatrix<f64>, seed: u64) -> Result<Pca3Model> {
    fit_pca3_with(proj, seed, PcaSolver::Auto)
}

pub fn fit_pca3_with(proj: &DMatrix<f64>, seed: u64, solver: PcaSolver) -> Result<Pca3Model> {
    fit(&Dense::from_dmatrix(proj), seed, solver)
}

pub(crate) fn fit(data: &dyn DataMatrix, seed: u64, solver: PcaSolver) -> Result<Pca3Model> {
    let (n, d) = (data.nrows(), data.ncols());
    if n < 4 || d < COMPONENTS {
        return Err(Error::InvalidParameter(format!(
            "PCA needs at least 4 rows and 3 columns, got {n}x{d}"
        )));
    }
    let mean = data.column_means();
    match solver.resolve(d) {
        PcaSolver::Exact | PcaSolver::Auto => exact(data, mean),
        PcaSolver::Randomized {
            oversample,
            power_iters,
        } => randomized(data, mean, seed, oversample, power_iters),
    }
}

fn exact(data: &dyn DataMatrix, mean: Vec<f64>) -> Result<Pca3Model> {
    let cov = data.covariance(&mean);
    let total: f64 = cov.diagonal().iter().map(|v| v.max(0.0)).sum();
    check_variance(total, &mean)?;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut components: [Vec<f64>; 3] = Default::default();
    let mut variance = [0.0; 3];
    for (k, &idx) in order.iter().take(COMPONENTS).enumerate() {
        components[k] = eig.eigenvectors.column(idx).iter().copied().collect();
        variance[k] = eig.eigenvalues[idx].max(0.0);
    }
    Ok(finish(mean, components, variance, total))
}

fn check_variance(total: f64, mean: &[f64]) -> Result<()> {
    let scale = mean.iter().map(|m| m * m).sum::<f64>().max(1.0);
    if !(total > 1e-24 * scale) {
        return Err(Error::DegenerateRank { component: 0 });
    }
    Ok(())
}

fn finish(
    mean: Vec<f64>,
    mut components: [Vec<f64>; 3],
    mut variance: [f64; 3],
    total: f64,
) -> Pca3Model {
    for c in components.iter_mut() {
        let norm = dot(c, c).sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        let pivot = c
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }
    // Keep the ratios non-increasing even if a solver returns ties out of
    // order by rounding.
    for k in 1..COMPONENTS {
        variance[k] = variance[k].min(variance[k - 1]);
    }
    let ratio = variance.map(|v| (v / total).clamp(0.0, 1.0));
    Pca3Model {
        mean,
        components,
        explained_variance: variance,
        explained_variance_ratio: ratio,
    }
}

/// `Y = (X - 1 mean^T) * omega`, with `omega` stored as `d x k`.
fn centered_times(data: &dyn DataMatrix, mean: &[f64], omega: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = (data.nrows(), omega.ncols());
    let cols: Vec<Vec<f64>> = (0..k).map(|j| omega.column(j).iter().copied().collect()).collect();
    let offsets: Vec<f64> = cols.iter().map(|c| dot(mean, c)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = data.row(i);
            cols.iter()
                .zip(&offsets)
                .map(|(c, o)| dot(r, c) - o)
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

/// `(X - 1 mean^T)^T * y`, returned as `d x k`.
fn centered_transpose_times(data: &dyn DataMatrix, mean: &[f64], y: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d, k) = (data.nrows(), data.ncols(), y.ncols());
    const CHUNK: usize = 4096;
    let partials: Vec<DMatrix<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = DMatrix::<f64>::zeros(d, k);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let r = data.row(i);
                for j in 0..k {
                    let yij = y[(i, j)];
                    if yij != 0.0 {
                        let mut col = acc.column_mut(j);
                        for (a, v) in r.iter().enumerate() {
                            col[a] += v * yij;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    // Sequential reduction in chunk order keeps the result independent of
    // the thread count.
    let mut out = DMatrix::<f64>::zeros(d, k);
    for p in partials {
        out += p;
    }
    for j in 0..k {
        let ysum: f64 = y.column(j).iter().sum();
        for a in 0..d {
            out[(a, j)] -= mean[a] * ysum;
        }
    }
    out
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn randomized(
    data: &dyn DataMatrix,
    mean: Vec<f64>,
    seed: u64,
    oversample: usize,
    power_iters: usize,
) -> Result<Pca3Model> {
    let (n, d) = (data.nrows(), data.ncols());
    let mut total = 0.0;
    for i in 0..n {
        for (v, m) in data.row(i).iter().zip(&mean) {
            total += (v - m) * (v - m);
        }
    }
    total /= n as f64;
    check_variance(total, &mean)?;

    let k = (COMPONENTS + oversample).min(d).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(d, k, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(centered_times(data, &mean, &omega));
    for _ in 0..power_iters {
        let z = orthonormalize(centered_transpose_times(data, &mean, &q));
        q = orthonormalize(centered_times(data, &mean, &z));
    }
    // B^T = X_c^T Q, shape d x k; its left singular vectors are the
    // principal directions.
    let bt = centered_transpose_times(data, &mean, &q);
    let svd = bt.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let mut components: [Vec<f64>; 3] = Default::default();
    let mut variance = [0.0; 3];
    for (c, &idx) in order.iter().take(COMPONENTS).enumerate() {
        components[c] = u.column(idx).iter().copied().collect();
        let s = svd.singular_values[idx];
        variance[c] = s * s / n as f64;
    }
    Ok(finish(mean, components, variance, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Cyclic Jacobi eigenvalue iteration on a symmetric matrix.
    fn jacobi_eigen(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let n = a.nrows();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)] * a[(p, q)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[(i, i)]).collect(), v)
    }

    /// Top-3 eigenvectors of the sample covariance by Jacobi iteration.
    fn oracle_subspace(m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows() as f64;
        let mean = m.row_mean();
        let mut c = m.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        let cov = c.transpose() * &c / n;
        let (vals, vecs) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        DMatrix::from_fn(m.ncols(), 3, |i, j| vecs[(i, order[j])])
    }

    /// Sine of the largest principal angle between two column spaces.
    fn max_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let proj = a * (a.transpose() * b);
        let resid = b - proj;
        resid.svd(false, false).singular_values.max()
    }

    fn basis(model: &Pca3Model) -> DMatrix<f64> {
        DMatrix::from_fn(model.width(), 3, |i, j| model.components[j][i])
    }

    #[test]
    fn matches_jacobi_oracle_on_random_matrix() {
        let m = random_matrix(200, 40, 11);
        let model = fit_pca3(&m, 0).unwrap();
        let oracle = oracle_subspace(&m);
        let angle = max_principal_sine(&oracle, &basis(&model));
        assert!(angle <= 1e-6, "principal angle sine {angle}");
    }

    #[test]
    fn components_orthonormal_and_ratios_ordered() {
        let m = random_matrix(150, 25, 3);
        for solver in [PcaSolver::Exact, PcaSolver::DEFAULT_RANDOMIZED] {
            let model = fit_pca3_with(&m, 5, solver).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let d = dot(&model.components[a], &model.components[b]);
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-9, "{solver:?} {a}{b} {d}");
                }
                let c = &model.components[a];
                let pivot = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!(c.contains(&pivot), "sign convention");
            }
            let r = model.explained_variance_ratio;
            assert!(r[0] >= r[1] && r[1] >= r[2] && r[2] >= 0.0 && r[0] <= 1.0);
        }
    }

    #[test]
    fn rank_one_rows() {
        let dir: Vec<f64> = (0..10).map(|j| (j as f64 * 0.7).sin() + 0.3).collect();
        let m = DMatrix::from_fn(50, 10, |i, j| 2.0 + (i as f64 - 20.0) * 0.5 * dir[j]);
        let model = fit_pca3(&m, 1).unwrap();
        let r = model.explained_variance_ratio;
        assert!((r[0] - 1.0).abs() < 1e-9 && r[1] < 1e-9 && r[2] < 1e-9, "{r:?}");
    }

    #[test]
    fn constant_rows_are_degenerate() {
        let m = DMatrix::from_element(20, 6, 3.0);
        assert!(matches!(
            fit_pca3(&m, 0),
            Err(Error::DegenerateRank { component: 0 })
        ));
        assert!(fit_pca3(&DMatrix::from_element(3, 6, 1.0), 0).is_err());
    }

    #[test]
    fn randomized_matches_exact_with_spectral_gap() {
        // low-rank signal plus small noise
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n, d) = (400, 60);
        let basis_vecs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = DMatrix::from_fn(n, d, |i, j| {
            let scale = [10.0, 5.0, 2.5];
            (0..3)
                .map(|k| scale[k] * ((i * (k + 1)) as f64 * 0.37).sin() * basis_vecs[k][j])
                .sum::<f64>()
                + 1e-3 * ((i * 31 + j * 17) % 13) as f64
        });
        let exact = fit_pca3_with(&m, 0, PcaSolver::Exact).unwrap();
        let approx = fit_pca3_with(&m, 0, PcaSolver::DEFAULT_RANDOMIZED).unwrap();
        let angle = max_principal_sine(&basis(&exact), &basis(&approx));
        assert!(angle <= 1e-6, "{angle}");
        for k in 0..3 {
            assert!(
                (exact.explained_variance_ratio[k] - approx.explained_variance_ratio[k]).abs()
                    < 1e-8
            );
        }
    }

    #[test]
    fn randomized_is_seed_deterministic() {
        let m = random_matrix(120, 30, 4);
        let a = fit_pca3_with(&m, 77, PcaSolver::DEFAULT_RANDOMIZED).unwrap();
        let b = fit_pca3_with(&m, 77, PcaSolver::DEFAULT_RANDOMIZED).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hankel_covariance_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sums: Vec<f64> = (0..500).map(|_| rng.random_range(-50.0..50.0) + 1000.0).collect();
        let width = 17;
        let h = Hankel { sums: &sums, width };
        let dense = Dense {
            data: (0..h.nrows()).flat_map(|i| h.row(i).to_vec()).collect(),
            rows: h.nrows(),
            cols: width,
        };
        let mh = h.column_means();
        let md = dense.column_means();
        for (a, b) in mh.iter().zip(&md) {
            assert!((a - b).abs() < 1e-9);
        }
        let ch = h.covariance(&mh);
        let cd = dense.covariance(&md);
        assert!((ch - cd).abs().max() < 1e-6);
    }
}
