//! Multivariate generalized hyperbolic vectors: normal variance-mean
//! mixtures N(mu + u beta Delta, u Delta) with generalized inverse Gaussian
//! mixing variable u.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GFamily, MixtureError, MixtureSpec};
use crate::rng::seed_rng;
use crate::special::{sample_gig_with, GIGParams, StableParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GHSpec {
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    /// Symmetric positive-definite matrix, row major.
    pub delta: Vec<Vec<f64>>,
    pub mixing: GIGParams,
}

impl GHSpec {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<(), MixtureError> {
        let n = self.mu.len();
        if self.beta.len() != n || self.delta.len() != n {
            return Err(MixtureError::DimensionMismatch {
                expected: n,
                got: self.beta.len().max(self.delta.len()),
            });
        }
        for row in &self.delta {
            if row.len() != n {
                return Err(MixtureError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let m = self.delta_matrix();
        let scale = m.amax().max(1e-300);
        for i in 0..n {
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(MixtureError::InvalidSpec(
                        "covariance matrix must be symmetric".into(),
                    ));
                }
            }
        }
        if m.cholesky().is_none() {
            return Err(MixtureError::CholeskyFailure);
        }
        Ok(())
    }

    fn delta_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.delta[i][j])
    }

    /// beta premultiplied by Delta (the mean drift per unit of mixing mass).
    fn drift(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.beta[i] * self.delta[i][j]).sum())
            .collect()
    }
}

/// n i.i.d. generalized hyperbolic draws: U ~ GIG(mixing), then Gaussian
/// with mean mu + U beta Delta and covariance U Delta.
pub fn gh_sample(spec: &GHSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, MixtureError> {
    spec.validate()?;
    let dim = spec.dim();
    let chol = spec
        .delta_matrix()
        .cholesky()
        .ok_or(MixtureError::CholeskyFailure)?;
    let lower = chol.l();
    let drift = spec.drift();
    let mut rng = seed_rng(seed);
    let us = sample_gig_with(&spec.mixing, n, &mut rng)?;
    let mut rows = Vec::with_capacity(n);
    for &u in &us {
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut row = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut gauss = 0.0;
            for j in 0..=i {
                gauss += lower[(i, j)] * z[j];
            }
            row.push(spec.mu[i] + u * drift[i] + u.sqrt() * gauss);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Affine relation between GH coordinates and the lifted mixture vector
/// Z = (U, U^{1/2} X_1, ...): GH_r = shift[r] + mix_drift[r] * Z_1 + Z_{r+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GHLinearMap {
    pub shift: Vec<f64>,
    pub mix_drift: Vec<f64>,
}

impl GHLinearMap {
    /// Frequency-domain counterpart: the GH characteristic function at t
    /// equals e^{i <t, shift>} times the mixture characteristic function at
    /// the returned point.
    pub fn pullback_frequency(&self, t: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(t.len() + 1);
        out.push(
            t.iter()
                .zip(&self.mix_drift)
                .map(|(ti, ci)| ti * ci)
                .sum(),
        );
        out.extend_from_slice(t);
        out
    }
}

/// Represent a diagonal-covariance GH vector as a mixture spec over the
/// lifted vector (U, U^{1/2} X_1, ..., U^{1/2} X_n) plus the affine map.
///
/// Works when Delta is diagonal (components conditionally independent) and
/// the GIG mixing law is one of the two cases with a flat-exponential Lévy
/// weight: gamma mixing (xi = 0, index > 0, alpha = 0) or inverse Gaussian
/// mixing (index = -1/2, alpha = 1/2).
pub fn gh_as_mixture_spec(spec: &GHSpec) -> Result<(MixtureSpec, GHLinearMap), MixtureError> {
    spec.validate()?;
    let n = spec.dim();
    let scale = spec
        .delta
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(1e-300);
    for i in 0..n {
        for j in 0..n {
            if i != j && spec.delta[i][j].abs() > 1e-12 * scale {
                return Err(MixtureError::NotRepresentable(
                    "covariance matrix must be diagonal".into(),
                ));
            }
        }
    }
    let mix = &spec.mixing;
    let (alpha, g) = if mix.xi == 0.0 && mix.lambda_idx > 0.0 {
        (
            0.0,
            GFamily::ExpDecay {
                level: mix.lambda_idx,
                rate: mix.psi / 2.0,
            },
        )
    } else if (mix.lambda_idx + 0.5).abs() < 1e-12 && mix.xi > 0.0 && mix.psi > 0.0 {
        (
            0.5,
            GFamily::ExpDecay {
                level: (mix.xi / (2.0 * std::f64::consts::PI)).sqrt(),
                rate: mix.psi / 2.0,
            },
        )
    } else {
        return Err(MixtureError::NotRepresentable(format!(
            "GIG(lambda={}, xi={}, psi={}) is not a gamma or inverse Gaussian mixing law",
            mix.lambda_idx, mix.xi, mix.psi
        )));
    };
    let components = (0..n)
        .map(|i| StableParams::new(2.0, spec.delta[i][i] / 2.0).map_err(MixtureError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let mixture = MixtureSpec::new(alpha, g, components)?;
    let map = GHLinearMap {
        shift: spec.mu.clone(),
        mix_drift: (0..n).map(|i| spec.beta[i] * spec.delta[i][i]).collect(),
    };
    Ok((mixture, map))
}
