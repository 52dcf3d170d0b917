//! Elliptical slice sampling over the latent utility vector.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::{mvn_sample, GramMatrix};

const MAX_SHRINKS: usize = 1_000;

/// Run one elliptical-slice chain against the prior N(mu0, K) and an
/// arbitrary log likelihood; returns the retained draws as matrix rows.
pub(crate) fn ess_chain<L>(
    gram: &GramMatrix,
    mu0: &DVector<f64>,
    loglik: L,
    init: &DVector<f64>,
    n_samples: usize,
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>>
where
    L: Fn(&DVector<f64>) -> f64,
{
    let n = mu0.len();
    let mut ll = loglik(init);
    if !ll.is_finite() {
        return Err(Error::InfeasibleStart(
            "initial latent state has zero likelihood".into(),
        ));
    }
    let kept = n_samples - burn_in;
    let mut draws = DMatrix::zeros(kept, n);
    if gram.is_point_mass() {
        for r in 0..kept {
            draws.row_mut(r).copy_from(&mu0.transpose());
        }
        return Ok(draws);
    }

    let mut f = init.clone();
    for step in 0..n_samples {
        let nu = mvn_sample(&DVector::zeros(n), gram, rng)?;
        let log_y = ll + rng.random::<f64>().ln();
        let mut theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut lo = theta - std::f64::consts::TAU;
        let mut hi = theta;
        let centered = &f - mu0;
        for _ in 0..=MAX_SHRINKS {
            let proposal = mu0 + &centered * theta.cos() + &nu * theta.sin();
            let ll_prop = loglik(&proposal);
            if ll_prop > log_y {
                f = proposal;
                ll = ll_prop;
                break;
            }
            if theta < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            if hi - lo < 1e-14 {
                break; // θ → 0 reproduces the current state
            }
            theta = rng.random_range(lo..hi);
        }
        if step >= burn_in {
            draws.row_mut(step - burn_in).copy_from(&f.transpose());
        }
    }
    Ok(draws)
}
