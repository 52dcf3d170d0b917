//! Expectation propagation with rank-1 sites on latent differences.
//!
//! Each observation contributes a site exp(−½ τ̃ (dᵀf)² + ν̃ dᵀf) on the
//! difference direction d = e_winner − e_loser. Sites are refined by moment
//! matching against their cavity, damped, and folded into the global Gaussian
//! by rank-1 updates; the global moments are refreshed from scratch after
//! every sweep.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauss::GramMatrix;

use super::likelihood::{term_cavity_moments, LikTerm};

const MIN_CAVITY_PRECISION: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct EpResult {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub sweeps: usize,
}

fn site_direction(n: usize, term: &LikTerm) -> DVector<f64> {
    let mut d = DVector::zeros(n);
    d[term.i] = 1.0;
    d[term.j] = -1.0;
    d
}

/// Rebuild (μ, Σ) from the prior and the current site parameters.
fn refresh_global(
    gram: &GramMatrix,
    mu0: &DVector<f64>,
    terms: &[LikTerm],
    tau: &[f64],
    nu: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mu0.len();
    let k = gram.entries();
    let active: Vec<usize> = (0..terms.len()).filter(|&t| tau[t] > 0.0).collect();
    let cov = if active.is_empty() {
        k.clone()
    } else {
        let mut v = DMatrix::zeros(n, active.len());
        for (c, &t) in active.iter().enumerate() {
            let s = tau[t].sqrt();
            v[(terms[t].i, c)] += s;
            v[(terms[t].j, c)] -= s;
        }
        let l = gram
            .cholesky()
            .ok_or(Error::IllPosed("point-mass prior has no site system".into()))?
            .l();
        let chol = super::newton::stabilized_gram_cholesky(&(l.transpose() * &v))?;
        let x = v.transpose() * k;
        let mut cov = k - x.transpose() * chol.solve(&x);
        let covt = cov.transpose();
        cov += covt;
        cov *= 0.5;
        cov
    };
    let mut eta = gram.solve(mu0)?;
    for (t, term) in terms.iter().enumerate() {
        if nu[t] != 0.0 {
            eta[term.i] += nu[t];
            eta[term.j] -= nu[t];
        }
    }
    let mean = &cov * eta;
    Ok((mean, cov))
}

pub(crate) fn ep_fit(
    gram: &GramMatrix,
    mu0: &DVector<f64>,
    terms: &[LikTerm],
    damping: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<EpResult> {
    let n = mu0.len();
    if gram.is_point_mass() {
        return Ok(EpResult {
            mean: mu0.clone(),
            cov: DMatrix::zeros(n, n),
            sweeps: 0,
        });
    }
    if terms.is_empty() {
        return Ok(EpResult {
            mean: mu0.clone(),
            cov: gram.entries().clone(),
            sweeps: 0,
        });
    }

    let mut tau = vec![0.0; terms.len()];
    let mut nu = vec![0.0; terms.len()];
    let (mut mean, mut cov) = refresh_global(gram, mu0, terms, &tau, &nu)?;
    let mut max_delta = f64::INFINITY;

    for sweep in 0..max_sweeps {
        max_delta = 0.0;
        for (t, term) in terms.iter().enumerate() {
            let d = site_direction(n, term);
            let m_t = mean[term.i] - mean[term.j];
            let v_t = cov[(term.i, term.i)] + cov[(term.j, term.j)] - 2.0 * cov[(term.i, term.j)];
            if v_t <= 0.0 {
                continue;
            }
            let cav_prec = 1.0 / v_t - tau[t];
            if cav_prec <= MIN_CAVITY_PRECISION {
                continue;
            }
            let v_c = 1.0 / cav_prec;
            let m_c = v_c * (m_t / v_t - nu[t]);

            let (_, alpha, beta) = term_cavity_moments(&term.shape, m_c, v_c);
            let m_hat = m_c + v_c * alpha;
            let v_hat = (v_c + v_c * v_c * beta).max(1e-12 * v_c);

            // Log-concave factors keep site precisions non-negative.
            let tau_prop = (1.0 / v_hat - 1.0 / v_c).max(0.0);
            let nu_prop = m_hat / v_hat - m_c / v_c;

            let d_tau = damping * (tau_prop - tau[t]);
            let d_nu = damping * (nu_prop - nu[t]);
            max_delta = max_delta.max(d_tau.abs()).max(d_nu.abs());
            tau[t] += d_tau;
            nu[t] += d_nu;

            let denom = 1.0 + d_tau * v_t;
            if denom <= 0.0 {
                // A damped downdate overshot; fall back to a full refresh.
                let (m2, c2) = refresh_global(gram, mu0, terms, &tau, &nu)?;
                mean = m2;
                cov = c2;
                continue;
            }
            let sd = &cov * &d;
            let scale = (d_nu - d_tau * m_t) / denom;
            mean += &sd * scale;
            let down = d_tau / denom;
            cov -= &sd * (sd.transpose() * down);
        }
        let (m2, c2) = refresh_global(gram, mu0, terms, &tau, &nu)?;
        mean = m2;
        cov = c2;
        if max_delta < tol {
            return Ok(EpResult {
                mean,
                cov,
                sweeps: sweep + 1,
            });
        }
    }
    Err(Error::EpDidNotConverge {
        sweeps: max_sweeps,
        max_delta,
    })
}
