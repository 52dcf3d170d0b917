//! Newton mode finding for the latent posterior and the Laplace covariance.
//!
//! The Hessian of the smooth log likelihood is Σ h_t d_t d_tᵀ with
//! d_t = e_i − e_j, so Newton steps and the Laplace covariance are computed
//! through the Woodbury identity against the factorized prior Gram matrix;
//! the prior is never inverted explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauss::GramMatrix;

use super::likelihood::{smooth_grad_curv, smooth_loglik, LikTerm};

const MAX_NEWTON_ITERS: usize = 200;
const GRAD_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone)]
pub(crate) struct ModeResult {
    pub f: DVector<f64>,
    pub iterations: usize,
    pub grad_inf_norm: f64,
}

/// Columns √h_t · (e_i − e_j) for the terms with positive curvature.
fn curvature_factor(n: usize, terms: &[LikTerm], curv: &[f64]) -> DMatrix<f64> {
    let cols: Vec<usize> = (0..terms.len()).filter(|&t| curv[t] > 0.0).collect();
    let mut v = DMatrix::zeros(n, cols.len());
    for (c, &t) in cols.iter().enumerate() {
        let s = curv[t].sqrt();
        v[(terms[t].i, c)] += s;
        v[(terms[t].j, c)] -= s;
    }
    v
}

/// Factor M = I + VᵀKV = I + BᵀB with B = LᵀV against the prior's Cholesky
/// factor L. The Gram form keeps M symmetric PSD even under the enormous
/// curvature scales of near-indicator likelihoods; a tiny ridge ladder
/// absorbs the residual rounding.
pub(crate) fn stabilized_gram_cholesky(
    b: &DMatrix<f64>,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m0 = DMatrix::identity(b.ncols(), b.ncols()) + b.transpose() * b;
    let max_diag = (0..m0.nrows()).map(|i| m0[(i, i)]).fold(1.0, f64::max);
    for ridge in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
        let mut m = m0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge * max_diag;
        }
        if let Some(chol) = m.cholesky() {
            return Ok(chol);
        }
    }
    Err(Error::IllPosed(
        "curvature system lost positive definiteness".into(),
    ))
}

/// Solve (K⁻¹ + V Vᵀ)⁻¹ applied pieces via M = I + VᵀKV.
struct Woodbury<'a> {
    k: &'a DMatrix<f64>,
    v: DMatrix<f64>,
    m_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Woodbury<'a> {
    fn new(gram: &'a GramMatrix, v: DMatrix<f64>) -> Result<Self> {
        let l = gram
            .cholesky()
            .ok_or(Error::IllPosed("point-mass prior has no curvature system".into()))?
            .l();
        let m_chol = stabilized_gram_cholesky(&(l.transpose() * &v))?;
        Ok(Self {
            k: gram.entries(),
            v,
            m_chol,
        })
    }

    /// (K⁻¹ + VVᵀ)⁻¹ b = K b − K V M⁻¹ Vᵀ K b
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let kb = self.k * b;
        let t = self.m_chol.solve(&(self.v.transpose() * &kb));
        &kb - self.k * (&self.v * t)
    }

    /// (K⁻¹ + VVᵀ)⁻¹ K⁻¹ u = u − K V M⁻¹ Vᵀ u
    fn solve_prior_pull(&self, u: &DVector<f64>) -> DVector<f64> {
        let t = self.m_chol.solve(&(self.v.transpose() * u));
        u - self.k * (&self.v * t)
    }

    /// Full posterior covariance (K⁻¹ + VVᵀ)⁻¹, symmetrized.
    fn covariance(&self) -> DMatrix<f64> {
        let x = self.v.transpose() * self.k; // m × n
        let sol = self.m_chol.solve(&x);
        let mut cov = self.k - x.transpose() * sol;
        let covt = cov.transpose();
        cov += covt;
        cov *= 0.5;
        cov
    }
}

/// Log posterior up to a constant: log-likelihood minus the prior quadratic.
fn log_objective(gram: &GramMatrix, mu0: &DVector<f64>, terms: &[LikTerm], f: &DVector<f64>) -> f64 {
    let u = f - mu0;
    let quad = match gram.cholesky() {
        Some(c) => u.dot(&c.solve(&u)),
        None => 0.0,
    };
    smooth_loglik(f.as_slice(), terms) - 0.5 * quad
}

/// Find the mode of the smooth log posterior by damped Newton iterations.
///
/// Converges on a gradient infinity-norm below 1e-8 or on a vanishing step;
/// anything else after the iteration cap is reported as non-convergence.
pub(crate) fn newton_mode(
    gram: &GramMatrix,
    mu0: &DVector<f64>,
    terms: &[LikTerm],
) -> Result<ModeResult> {
    if gram.is_point_mass() {
        return Ok(ModeResult {
            f: mu0.clone(),
            iterations: 0,
            grad_inf_norm: 0.0,
        });
    }
    let n = mu0.len();
    let mut f = mu0.clone();
    let mut objective = log_objective(gram, mu0, terms, &f);
    let mut grad_inf = f64::INFINITY;

    for iter in 0..MAX_NEWTON_ITERS {
        let (grad_ll, curv) = smooth_grad_curv(f.as_slice(), terms);
        let g = DVector::from_vec(grad_ll);
        let u = &f - mu0;
        let prior_pull = gram.solve(&u)?;
        let grad_psi = &g - &prior_pull;
        grad_inf = grad_psi.amax();
        if grad_inf <= GRAD_TOL {
            return Ok(ModeResult {
                f,
                iterations: iter,
                grad_inf_norm: grad_inf,
            });
        }

        let wood = Woodbury::new(gram, curvature_factor(n, terms, &curv))?;
        let direction = wood.solve(&g) - wood.solve_prior_pull(&u);

        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..MAX_BACKTRACKS {
            let f_try = &f + &direction * step;
            let obj_try = log_objective(gram, mu0, terms, &f_try);
            if obj_try.is_finite() && obj_try > objective {
                f = f_try;
                objective = obj_try;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        let step_size = step * direction.amax();
        if !advanced || step_size <= STEP_TOL * (1.0 + f.amax()) {
            // The quadratic model cannot improve the objective further;
            // accept the current point as the mode.
            return Ok(ModeResult {
                f,
                iterations: iter + 1,
                grad_inf_norm: grad_inf,
            });
        }
    }
    Err(Error::NewtonDidNotConverge {
        iters: MAX_NEWTON_ITERS,
        grad_norm: grad_inf,
    })
}

/// Laplace covariance (K⁻¹ + W)⁻¹ at the mode, W the likelihood curvature.
pub(crate) fn laplace_covariance(
    gram: &GramMatrix,
    mode: &DVector<f64>,
    terms: &[LikTerm],
) -> Result<DMatrix<f64>> {
    let n = mode.len();
    if gram.is_point_mass() {
        return Ok(DMatrix::zeros(n, n));
    }
    let (_, curv) = smooth_grad_curv(mode.as_slice(), terms);
    let wood = Woodbury::new(gram, curvature_factor(n, terms, &curv))?;
    Ok(wood.covariance())
}
