//! Generative PCA classifier: every class is modeled by an affine subspace
//! (mean plus leading principal directions) and a sample goes to the class
//! whose subspace reconstructs it best.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::grid::FractionalOrderPair;

/// Relative eigenvalue cutoff below which a direction counts as absent.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaClassModel {
    pub class_id: i32,
    pub mean: DVector<f64>,
    /// `L x d`, orthonormal columns ordered by decreasing variance.
    pub basis: DMatrix<f64>,
    /// Sample-covariance variance along each basis column.
    pub variances: Vec<f64>,
}

impl PcaClassModel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn feature_len(&self) -> usize {
        self.mean.len()
    }

    /// `||(x - mean) - B Bᵀ (x - mean)||`
    pub fn approximation_error(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_len() {
            return Err(Error::LengthMismatch { expected: self.feature_len(), actual: x.len() });
        }
        let r = DVector::from_column_slice(x) - &self.mean;
        let coeffs = self.basis.tr_mul(&r);
        Ok((r - &self.basis * coeffs).norm())
    }
}

/// Full principal decomposition of one class, from which models of any
/// admissible dimension are cut.
#[derive(Clone, Debug)]
pub struct ClassDecomposition {
    pub class_id: i32,
    pub mean: DVector<f64>,
    /// Orthonormal directions, `L x min(L, n - 1)`.
    pub directions: DMatrix<f64>,
    pub variances: Vec<f64>,
    pub num_samples: usize,
    /// Number of directions carrying nonzero variance.
    pub rank: usize,
}

impl ClassDecomposition {
    /// Largest admissible model dimension.
    pub fn max_dim(&self) -> usize {
        self.directions.ncols()
    }

    pub fn model(&self, dim: usize) -> Result<PcaClassModel> {
        if dim == 0 || dim > self.max_dim() {
            return Err(Error::Class {
                class: self.class_id,
                reason: format!(
                    "{dim} dimensions requested, allowed 1..={} ({} samples, {} features)",
                    self.max_dim(),
                    self.num_samples,
                    self.mean.len()
                ),
            });
        }
        Ok(PcaClassModel {
            class_id: self.class_id,
            mean: self.mean.clone(),
            basis: self.directions.columns(0, dim).into_owned(),
            variances: self.variances[..dim].to_vec(),
        })
    }
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Removes the components of `v` along `cols` (twice, for stability) and
/// normalizes; `None` if nothing is left.
fn orthonormalize_against(mut v: DVector<f64>, cols: &[DVector<f64>]) -> Option<DVector<f64>> {
    let start = v.norm();
    for _ in 0..2 {
        for c in cols {
            let p = c.dot(&v);
            v.axpy(-p, c, 1.0);
        }
    }
    let n = v.norm();
    (n > 1e-8 * start.max(1.0)).then(|| v / n)
}

/// Decomposes one class given its samples (each of length `L`).
pub fn decompose_class(class_id: i32, samples: &[&[f64]]) -> Result<ClassDecomposition> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Class { class: class_id, reason: format!("needs at least 2 samples, got {n}") });
    }
    let l = samples[0].len();
    if l == 0 {
        return Err(Error::Class { class: class_id, reason: "empty feature vectors".into() });
    }
    if let Some(s) = samples.iter().find(|s| s.len() != l) {
        return Err(Error::LengthMismatch { expected: l, actual: s.len() });
    }
    let mut x = DMatrix::from_fn(l, n, |i, j| samples[j][i]);
    let mean = x.column_mean();
    for mut col in x.column_iter_mut() {
        col -= &mean;
    }
    let denom = (n - 1) as f64;

    // Eigenpairs (covariance variance, direction) in decreasing order.
    let mut pairs: Vec<(f64, DVector<f64>)> = if l <= n {
        let cov = (&x * x.transpose()) / denom;
        let eig = SymmetricEigen::new(cov);
        (0..l).map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())).collect()
    } else {
        let gram = x.tr_mul(&x);
        let eig = SymmetricEigen::new(gram);
        (0..n)
            .map(|i| {
                let lambda = eig.eigenvalues[i];
                let u = &x * eig.eigenvectors.column(i);
                let norm = u.norm();
                let u = if norm > 0.0 { u / norm } else { u };
                (lambda / denom, u)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let top = pairs.first().map_or(0.0, |p| p.0);
    let cutoff = top * RANK_TOLERANCE * l.max(n) as f64;
    let keep = l.min(n - 1);
    let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(keep);
    let mut variances = Vec::with_capacity(keep);
    if top > 0.0 {
        for (lambda, v) in pairs {
            if dirs.len() == keep || lambda <= cutoff {
                break;
            }
            if let Some(u) = orthonormalize_against(v, &dirs) {
                dirs.push(fix_sign(u));
                variances.push(lambda);
            }
        }
    }
    let rank = dirs.len();
    if rank == 0 {
        return Err(Error::Class { class: class_id, reason: "all training samples are identical (rank 0)".into() });
    }
    // Rank-deficient classes are completed with coordinate directions.
    for i in 0..l {
        if dirs.len() == keep {
            break;
        }
        let e = DVector::from_fn(l, |r, _| if r == i { 1.0 } else { 0.0 });
        if let Some(u) = orthonormalize_against(e, &dirs) {
            dirs.push(fix_sign(u));
            variances.push(0.0);
        }
    }
    Ok(ClassDecomposition {
        class_id,
        mean,
        directions: DMatrix::from_columns(&dirs),
        variances,
        num_samples: n,
        rank,
    })
}

/// Trains a `dim`-dimensional model for one class.
pub fn train_pca(class_id: i32, samples: &[&[f64]], dim: usize) -> Result<PcaClassModel> {
    decompose_class(class_id, samples)?.model(dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: i32,
    /// `(class_id, approximation error)` in model order.
    pub errors: Vec<(i32, f64)>,
}

/// Assigns `x` to the model with the smallest approximation error; ties go
/// to the lowest class id.
pub fn classify(x: &[f64], models: &[PcaClassModel]) -> Result<Classification> {
    if models.is_empty() {
        return Err(Error::InvalidInput("no class models".into()));
    }
    let errors = models
        .iter()
        .map(|m| Ok((m.class_id, m.approximation_error(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let label = errors
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|e| e.0)
        .expect("nonempty");
    Ok(Classification { label, errors })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalProtocol {
    pub train_ratio: f64,
    pub repetitions: usize,
    pub pca_dims: Vec<usize>,
    pub seed: u64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            train_ratio: 0.5,
            repetitions: 5,
            pca_dims: vec![10, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70, 80],
            seed: 0,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::InvalidProtocol(format!("train ratio {} outside (0, 1)", self.train_ratio)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidProtocol("repetitions must be at least 1".into()));
        }
        if self.pca_dims.is_empty() || self.pca_dims.contains(&0) {
            return Err(Error::InvalidProtocol("pca dims must be a nonempty list of positive integers".into()));
        }
        Ok(())
    }
}

/// Mean test error per (order setting, requested PCA dimension).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub order_grid: Vec<FractionalOrderPair>,
    pub pca_dims: Vec<usize>,
    /// `errors[d][k]` for order `d` and dimension `pca_dims[k]`.
    pub errors: Vec<Vec<f64>>,
}

impl ErrorTable {
    /// Best error over the dimension grid for each order setting.
    pub fn min_per_order(&self) -> Vec<f64> {
        self.errors.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).collect()
    }
}

/// Stratified split of signal indices: for each class (ascending id) a
/// seeded shuffle whose first `round(ratio * n_c)` entries train.
pub fn stratified_split(labels: &[i32], ratio: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut classes: Vec<i32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        let n_train = (ratio * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    (train, test)
}

/// Residual norms of `r` against `dir` prefixes of each length in `dims`.
fn nested_errors(r: &DVector<f64>, dirs: &DMatrix<f64>, dims: &[usize]) -> Vec<f64> {
    let mut res = r.clone();
    let mut out = Vec::with_capacity(dims.len());
    let mut used = 0;
    for &d in dims {
        while used < d {
            let u = dirs.column(used);
            let c = u.dot(&res);
            res.axpy(-c, &u, 1.0);
            used += 1;
        }
        out.push(res.norm());
    }
    out
}

/// Runs the split/train/test protocol over every order slice. A requested
/// dimension larger than a class admits (`min(L, n_train - 1)`) is clamped
/// to that maximum for that class.
pub fn evaluate(tensor: &FeatureTensor, protocol: &EvalProtocol) -> Result<ErrorTable> {
    protocol.validate()?;
    let labels = tensor.labels();
    let mut classes: Vec<i32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 classes, found {}", classes.len())));
    }
    let num_orders = tensor.num_orders();
    let mut sums = vec![vec![0.0; protocol.pca_dims.len()]; num_orders];
    for rep in 0..protocol.repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
        rng.set_stream(rep as u64);
        let (train, test) = stratified_split(labels, protocol.train_ratio, &mut rng);
        for &c in &classes {
            let count = train.iter().filter(|&&i| labels[i] == c).count();
            if count < 2 {
                return Err(Error::Class { class: c, reason: format!("{count} training samples after split, need 2") });
            }
        }
        if test.is_empty() {
            return Err(Error::InvalidProtocol("split leaves no test samples".into()));
        }
        let rows = (0..num_orders)
            .into_par_iter()
            .map(|d| evaluate_slice(tensor, d, &classes, &train, &test, &protocol.pca_dims))
            .collect::<Result<Vec<_>>>()?;
        for (acc, row) in sums.iter_mut().zip(rows) {
            for (a, e) in acc.iter_mut().zip(row) {
                *a += e;
            }
        }
    }
    let reps = protocol.repetitions as f64;
    Ok(ErrorTable {
        order_grid: tensor.order_grid().to_vec(),
        pca_dims: protocol.pca_dims.clone(),
        errors: sums.into_iter().map(|row| row.into_iter().map(|s| s / reps).collect()).collect(),
    })
}

fn evaluate_slice(
    tensor: &FeatureTensor,
    d: usize,
    classes: &[i32],
    train: &[usize],
    test: &[usize],
    dims: &[usize],
) -> Result<Vec<f64>> {
    let labels = tensor.labels();
    let decomps = classes
        .iter()
        .map(|&c| {
            let samples: Vec<&[f64]> =
                train.iter().filter(|&&i| labels[i] == c).map(|&i| tensor.feature(d, i)).collect();
            decompose_class(c, &samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut wrong = vec![0usize; dims.len()];
    for &i in test {
        let x = DVector::from_column_slice(tensor.feature(d, i));
        // errs[class][dim]
        let errs: Vec<Vec<f64>> = decomps
            .iter()
            .map(|dc| {
                let clamped: Vec<usize> = dims.iter().map(|&k| k.min(dc.max_dim())).collect();
                let mut order: Vec<usize> = (0..dims.len()).collect();
                order.sort_by_key(|&k| clamped[k]);
                let sorted: Vec<usize> = order.iter().map(|&k| clamped[k]).collect();
                let vals = nested_errors(&(&x - &dc.mean), &dc.directions, &sorted);
                let mut out = vec![0.0; dims.len()];
                for (pos, &k) in order.iter().enumerate() {
                    out[k] = vals[pos];
                }
                out
            })
            .collect();
        for k in 0..dims.len() {
            let mut best = 0;
            for c in 1..classes.len() {
                if errs[c][k] < errs[best][k] {
                    best = c;
                }
            }
            if classes[best] != labels[i] {
                wrong[k] += 1;
            }
        }
    }
    Ok(wrong.into_iter().map(|w| w as f64 / test.len() as f64).collect())
}
