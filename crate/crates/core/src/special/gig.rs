//! Generalized inverse Gaussian density and sampler.
//!
//! Density proportional to u^{lambda-1} exp(-(xi/u + psi u)/2) on (0, inf).
//! The normalizer comes from bessel_k when both xi and psi are positive and
//! from gamma-function closed forms on the xi = 0 / psi = 0 boundaries.
//! Sampling is ratio-of-uniforms with a mode shift; the boundary cases
//! dispatch to gamma and inverse-gamma samplers.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::bessel::bessel_k;
use super::SpecialError;
use crate::quad;
use crate::rng::seed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GIGParams {
    /// Index lambda (any real; sign restrictions apply on the boundaries).
    pub lambda_idx: f64,
    /// Coefficient of u^{-1} in the exponent (>= 0).
    pub xi: f64,
    /// Coefficient of u in the exponent (>= 0).
    pub psi: f64,
}

impl GIGParams {
    pub fn new(lambda_idx: f64, xi: f64, psi: f64) -> Result<Self, SpecialError> {
        if !(xi >= 0.0 && psi >= 0.0) || !xi.is_finite() || !psi.is_finite() || !lambda_idx.is_finite()
        {
            return Err(SpecialError::InvalidArgument(format!(
                "GIG requires xi, psi >= 0 and finite parameters, got lambda={lambda_idx}, xi={xi}, psi={psi}"
            )));
        }
        if xi.max(psi) <= 0.0 {
            return Err(SpecialError::InvalidArgument(
                "GIG requires max(xi, psi) > 0".to_string(),
            ));
        }
        // Integrability of u^{lambda-1} exp(-(xi/u + psi u)/2).
        if psi == 0.0 && lambda_idx >= 0.0 {
            return Err(SpecialError::NonIntegrable(
                "GIG with psi = 0 needs lambda < 0".to_string(),
            ));
        }
        if xi == 0.0 && lambda_idx <= 0.0 {
            return Err(SpecialError::NonIntegrable(
                "GIG with xi = 0 needs lambda > 0".to_string(),
            ));
        }
        Ok(GIGParams {
            lambda_idx,
            xi,
            psi,
        })
    }
}

/// Normalizing constant C with density C u^{lambda-1} exp(-(xi/u + psi u)/2).
pub fn gig_normalizer(p: &GIGParams) -> Result<f64, SpecialError> {
    let l = p.lambda_idx;
    if p.xi > 0.0 && p.psi > 0.0 {
        let omega = (p.xi * p.psi).sqrt();
        let k = bessel_k(l, omega)?;
        Ok((p.psi / p.xi).powf(l / 2.0) / (2.0 * k))
    } else if p.xi == 0.0 {
        // gamma(lambda, rate psi/2)
        Ok((p.psi / 2.0).powf(l) / gamma(l))
    } else {
        // inverse gamma with shape -lambda, rate xi/2
        Ok((p.xi / 2.0).powf(-l) / gamma(-l))
    }
}

pub fn gig_pdf(p: &GIGParams, u: f64) -> Result<f64, SpecialError> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    let c = gig_normalizer(p)?;
    Ok(c * ln_kernel(p, u).exp())
}

fn ln_kernel(p: &GIGParams, u: f64) -> f64 {
    (p.lambda_idx - 1.0) * u.ln() - 0.5 * (p.xi / u + p.psi * u)
}

/// Mean and variance of the GIG law by quadrature (test oracle and
/// diagnostics; not used by the sampler).
pub fn gig_moments_by_quadrature(p: &GIGParams) -> Result<(f64, f64), SpecialError> {
    let mean = quad::integrate_positive_axis(
        |u: f64| u * gig_pdf_unchecked(p, u),
        1e-10,
        4_000_000,
    )
    .converged()
    .map_err(|e| SpecialError::NonIntegrable(e.to_string()))?
    .value;
    let second = quad::integrate_positive_axis(
        |u: f64| u * u * gig_pdf_unchecked(p, u),
        1e-10,
        4_000_000,
    )
    .converged()
    .map_err(|e| SpecialError::NonIntegrable(e.to_string()))?
    .value;
    Ok((mean, second - mean * mean))
}

fn gig_pdf_unchecked(p: &GIGParams, u: f64) -> f64 {
    gig_pdf(p, u).unwrap_or(0.0)
}

/// i.i.d. GIG draws, deterministic given the seed.
pub fn sample_gig(p: &GIGParams, n: usize, seed: u64) -> Result<Vec<f64>, SpecialError> {
    let mut rng = seed_rng(seed);
    sample_gig_with(p, n, &mut rng)
}

pub(crate) fn sample_gig_with<R: Rng>(
    p: &GIGParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, SpecialError> {
    if p.xi == 0.0 {
        let g = rand_distr::Gamma::new(p.lambda_idx, 2.0 / p.psi)
            .map_err(|e| SpecialError::InvalidArgument(e.to_string()))?;
        return Ok((0..n).map(|_| g.sample(rng)).collect());
    }
    if p.psi == 0.0 {
        let g = rand_distr::Gamma::new(-p.lambda_idx, 2.0 / p.xi)
            .map_err(|e| SpecialError::InvalidArgument(e.to_string()))?;
        return Ok((0..n).map(|_| 1.0 / g.sample(rng)).collect());
    }
    let setup = RatioOfUniforms::new(p);
    Ok((0..n).map(|_| setup.draw(p, rng)).collect())
}

/// Ratio-of-uniforms box for the two-sided kernel, shifted to the mode.
struct RatioOfUniforms {
    mode: f64,
    ln_k_mode: f64,
    u_plus: f64,
    v_minus: f64,
    v_plus: f64,
}

impl RatioOfUniforms {
    fn new(p: &GIGParams) -> Self {
        let l = p.lambda_idx;
        let mode = ((l - 1.0) + ((l - 1.0) * (l - 1.0) + p.xi * p.psi).sqrt()) / p.psi;
        let ln_k_mode = ln_kernel(p, mode);
        // Critical points of (x - mode) sqrt(k(x)) solve the cubic
        //   -psi x^3 + (2(lambda-1) + psi*mode + 4) x^2
        //   + (xi - 2(lambda-1) mode) x - xi*mode = 0.
        let a3 = -p.psi;
        let a2 = 2.0 * (l - 1.0) + p.psi * mode + 4.0;
        let a1 = p.xi - 2.0 * (l - 1.0) * mode;
        let a0 = -p.xi * mode;
        let mut v_minus = 0.0f64;
        let mut v_plus = 0.0f64;
        for root in cubic_roots(a3, a2, a1, a0) {
            if root <= 0.0 || !root.is_finite() {
                continue;
            }
            // work relative to the mode kernel value to avoid overflow
            let q = (root - mode) * (0.5 * (ln_kernel(p, root) - ln_k_mode)).exp();
            v_minus = v_minus.min(q);
            v_plus = v_plus.max(q);
        }
        RatioOfUniforms {
            mode,
            ln_k_mode,
            u_plus: 1.0,
            v_minus: v_minus * (1.0 + 1e-10) - 1e-300,
            v_plus: v_plus * (1.0 + 1e-10) + 1e-300,
        }
    }

    fn draw<R: Rng>(&self, p: &GIGParams, rng: &mut R) -> f64 {
        loop {
            let a = self.u_plus * rng.random::<f64>();
            let b = self.v_minus + (self.v_plus - self.v_minus) * rng.random::<f64>();
            if a <= 0.0 {
                continue;
            }
            let x = self.mode + b / a;
            if x <= 0.0 {
                continue;
            }
            if 2.0 * a.ln() <= ln_kernel(p, x) - self.ln_k_mode {
                return x;
            }
        }
    }
}

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 (a3 != 0), trigonometric method.
fn cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let b = a2 / a3;
    let c = a1 / a3;
    let d = a0 / a3;
    // depressed cubic t^3 + pt + q with x = t - b/3
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = Vec::with_capacity(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = cbrt(-q / 2.0 + s);
        let v = cbrt(-q / 2.0 - s);
        roots.push(u + v + shift);
    } else if p.abs() < 1e-300 {
        roots.push(shift);
    } else {
        let r = (-p * p * p / 27.0).sqrt();
        let phi = (-q / (2.0 * r)).clamp(-1.0, 1.0).acos();
        let m = 2.0 * (-p / 3.0).sqrt();
        for k in 0..3 {
            roots.push(m * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift);
        }
    }
    roots
}

fn cbrt(x: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / 3.0)
}
