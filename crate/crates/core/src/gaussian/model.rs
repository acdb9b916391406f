use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{map_chunks, StreamKey, CHUNK_SIZE};

/// Relative Cholesky pivot threshold below which a covariance is rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Covariance geometry of `W(t) = A B(t)`: mixing matrix, `Σ = A Aᵀ`, its
/// Cholesky factor and inverse. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    mixing: DMatrix<f64>,
    sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    log_det: f64,
}

/// Builds the model for mixing matrix `A`.
pub fn build_model(mixing: &DMatrix<f64>) -> Result<CovarianceModel> {
    CovarianceModel::from_mixing(mixing.clone())
}

impl CovarianceModel {
    pub fn from_mixing(mixing: DMatrix<f64>) -> Result<Self> {
        if !mixing.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrix is {}x{}, expected square",
                mixing.nrows(),
                mixing.ncols()
            )));
        }
        if mixing.nrows() == 0 {
            return Err(Error::DimensionMismatch("empty mixing matrix".into()));
        }
        if mixing.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("mixing matrix has non-finite entries".into()));
        }
        let sigma = &mixing * mixing.transpose();
        Self::assemble(mixing, sigma)
    }

    /// Builds the model from a covariance matrix; the mixing matrix is taken
    /// to be the Cholesky factor.
    pub fn from_covariance(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}, expected non-empty square",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("covariance has non-finite entries".into()));
        }
        let d = sigma.nrows();
        for i in 0..d {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::DomainError(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        let chol = cholesky(&sigma)?;
        Self::assemble(chol, sigma)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_mixing(DMatrix::identity(dim, dim)).expect("identity is positive definite")
    }

    fn assemble(mixing: DMatrix<f64>, mut sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        // A Aᵀ is symmetric up to rounding; make it exactly so.
        for i in 0..d {
            for j in 0..i {
                let m = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
                sigma[(i, j)] = m;
                sigma[(j, i)] = m;
            }
        }
        let chol = cholesky(&sigma)?;
        let sigma_inv = inverse_from_cholesky(&chol);
        let log_det = 2.0 * (0..d).map(|i| chol[(i, i)].ln()).sum::<f64>();
        Ok(Self { mixing, sigma, chol, sigma_inv, log_det })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Standard deviations `√Σ_ii`.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.sigma[(i, i)].sqrt()).collect()
    }

    /// Model of the sub-vector `W_F`.
    pub fn marginal(&self, indices: &[usize]) -> Result<CovarianceModel> {
        let sub = submatrix(&self.sigma, indices, indices);
        Self::from_covariance(sub)
    }

    /// Model of `√s · W`, i.e. covariance `s Σ`.
    pub fn scaled(&self, s: f64) -> Result<CovarianceModel> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::DomainError(format!("scale {s} must be positive")));
        }
        Self::from_mixing(&self.mixing * s.sqrt())
    }

    /// `xᵀ Σ⁻¹ x`, via a triangular solve against the Cholesky factor.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.whiten(x);
        y.iter().map(|v| v * v).sum()
    }

    /// `L⁻¹ x`.
    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = x[i];
            for (j, yj) in y.iter().enumerate().take(i) {
                s -= self.chol[(i, j)] * yj;
            }
            y[i] = s / self.chol[(i, i)];
        }
        y
    }

    /// `L z`.
    pub fn color(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
            let mut s = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                s += self.chol[(i, j)] * zj;
            }
            *o = s;
        }
    }

    /// `Σ⁻¹ x`.
    pub fn precision_times(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.sigma_inv * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// Row-major copy of the lower Cholesky factor, for tight loops.
    pub fn chol_rows(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                out[i * d + j] = self.chol[(i, j)];
            }
        }
        out
    }
}

/// Lower Cholesky factor, rejecting pivots at or below `1e-12 · max Σ_ii`.
pub fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = sigma.nrows();
    let max_diag = (0..d).map(|i| sigma[(i, i)]).fold(0.0f64, f64::max);
    let threshold = PIVOT_TOLERANCE * max_diag;
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut pivot = sigma[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::SingularMatrix { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn inverse_from_cholesky(l: &DMatrix<f64>) -> DMatrix<f64> {
    let d = l.nrows();
    let l_inv =
        l.solve_lower_triangular(&DMatrix::identity(d, d)).expect("Cholesky factor has a positive diagonal");
    let mut inv = l_inv.transpose() * &l_inv;
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = m;
            inv[(j, i)] = m;
        }
    }
    inv
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Centered Gaussian density `φ_Σ(x)`.
pub fn density(model: &CovarianceModel, x: &[f64]) -> f64 {
    log_density(model, x).exp()
}

/// `ln φ_Σ(x)`.
pub fn log_density(model: &CovarianceModel, x: &[f64]) -> f64 {
    let d = model.dim() as f64;
    -0.5 * (d * LN_2PI + model.log_det() + model.quadratic_form(x))
}

/// `n` i.i.d. rows from `N(0, Σ)`, generated as `L z`.
pub fn sample(model: &CovarianceModel, n: usize, seed: u64) -> DMatrix<f64> {
    GaussianVector::new(model).sample(n, seed)
}

/// A Gaussian vector `W(1) + mean_shift` with `W(1) ~ N(0, Σ)`.
#[derive(Debug, Clone)]
pub struct GaussianVector<'a> {
    pub model: &'a CovarianceModel,
    pub mean_shift: Vec<f64>,
}

impl<'a> GaussianVector<'a> {
    pub fn new(model: &'a CovarianceModel) -> Self {
        Self { model, mean_shift: vec![0.0; model.dim()] }
    }

    pub fn with_mean(model: &'a CovarianceModel, mean_shift: Vec<f64>) -> Result<Self> {
        if mean_shift.len() != model.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, model dimension {}",
                mean_shift.len(),
                model.dim()
            )));
        }
        if mean_shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("mean shift must be finite".into()));
        }
        Ok(Self { model, mean_shift })
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let centered: Vec<f64> = x.iter().zip(&self.mean_shift).map(|(a, b)| a - b).collect();
        log_density(self.model, &centered)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    pub fn sample(&self, n: usize, seed: u64) -> DMatrix<f64> {
        let d = self.model.dim();
        let key = StreamKey::new(seed, "gaussian.sample");
        let chunks = map_chunks(n, CHUNK_SIZE, |c, _start, len| {
            let mut rng = key.stream(c as u64);
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut rows = Vec::with_capacity(len * d);
            for _ in 0..len {
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                self.model.color(&z, &mut x);
                rows.extend(x.iter().zip(&self.mean_shift).map(|(a, b)| a + b));
            }
            rows
        });
        let flat: Vec<f64> = chunks.into_iter().flatten().collect();
        DMatrix::from_row_slice(n, d, &flat)
    }
}
