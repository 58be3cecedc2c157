//! The positive-mixing stable mixture family
//! Z = (V, V^{1/gamma_1} X_1, ..., V^{1/gamma_{p-1}} X_{p-1}),
//! where V is a positive infinitely divisible variable whose Laplace
//! exponent integrates (e^{sv} - 1) v^{-(alpha+1)} g(v) dv and the X_r are
//! independent symmetric stable.
//!
//! Provides the Lévy density h of Z, the characteristic function by
//! one-dimensional quadrature in v, and exact or compound-Poisson samplers
//! for V depending on the g family.

mod gh;

pub use gh::{gh_as_mixture_spec, gh_sample, GHLinearMap, GHSpec};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;
use thiserror::Error;

use crate::quad::{self, QuadError};
use crate::rng::seed_rng;
use crate::special::{
    positive_stable_draw, standard_symmetric_draw, symmetric_stable_pdf, SpecialError,
    StableParams,
};

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: spec has p = {expected}, argument has length {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("no exact mixing sampler and compound-Poisson approximation disabled: {0}")]
    UnsupportedMixing(String),
    #[error("not representable as a mixture spec: {0}")]
    NotRepresentable(String),
    #[error("covariance matrix is not positive definite")]
    CholeskyFailure,
}

/// Mixing weight function g: bounded, nonnegative, nonincreasing on (0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GFamily {
    /// g(v) = level * exp(-rate v); rate = 0 covers the stable case, rate > 0
    /// the gamma / inverse Gaussian cases.
    ExpDecay { level: f64, rate: f64 },
    /// g identically equal to level (requires alpha > 0 for integrability).
    Constant { level: f64 },
    /// Piecewise-linear nonincreasing table; zero beyond the last grid point.
    TabulatedDecreasing { grid: Vec<(f64, f64)> },
}

impl GFamily {
    pub fn value(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return self.at_zero();
        }
        match self {
            GFamily::ExpDecay { level, rate } => level * (-rate * v).exp(),
            GFamily::Constant { level } => *level,
            GFamily::TabulatedDecreasing { grid } => {
                if grid.is_empty() {
                    return 0.0;
                }
                if v <= grid[0].0 {
                    return grid[0].1;
                }
                match grid.windows(2).find(|w| v <= w[1].0) {
                    Some(w) => {
                        let t = (v - w[0].0) / (w[1].0 - w[0].0);
                        w[0].1 + t * (w[1].1 - w[0].1)
                    }
                    None => 0.0,
                }
            }
        }
    }

    /// sup g = g(0+).
    pub fn at_zero(&self) -> f64 {
        match self {
            GFamily::ExpDecay { level, .. } | GFamily::Constant { level } => *level,
            GFamily::TabulatedDecreasing { grid } => grid.first().map_or(0.0, |p| p.1),
        }
    }

    /// Upper support bound (finite only for the tabulated family).
    fn support_end(&self) -> f64 {
        match self {
            GFamily::TabulatedDecreasing { grid } => grid.last().map_or(0.0, |p| p.0),
            _ => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<(), MixtureError> {
        match self {
            GFamily::ExpDecay { level, rate } => {
                if !(*level >= 0.0) || !(*rate >= 0.0) || !level.is_finite() || !rate.is_finite() {
                    return Err(MixtureError::InvalidSpec(format!(
                        "exp-decay g needs finite level >= 0 and rate >= 0, got {level}, {rate}"
                    )));
                }
            }
            GFamily::Constant { level } => {
                if !(*level >= 0.0) || !level.is_finite() {
                    return Err(MixtureError::InvalidSpec(format!(
                        "constant g needs finite level >= 0, got {level}"
                    )));
                }
            }
            GFamily::TabulatedDecreasing { grid } => {
                if grid.is_empty() {
                    return Err(MixtureError::InvalidSpec("empty g table".into()));
                }
                for w in grid.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(MixtureError::InvalidSpec(
                            "g table abscissae must increase".into(),
                        ));
                    }
                    if w[1].1 > w[0].1 + 1e-12 {
                        return Err(MixtureError::InvalidSpec(
                            "g table must be nonincreasing".into(),
                        ));
                    }
                }
                if grid.iter().any(|p| p.1 < 0.0 || !p.1.is_finite() || !p.0.is_finite()) {
                    return Err(MixtureError::InvalidSpec(
                        "g table needs finite nonnegative values".into(),
                    ));
                }
                if grid[0].0 <= 0.0 {
                    return Err(MixtureError::InvalidSpec(
                        "g table abscissae must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Specification of the mixture family: exponent alpha, mixing weight g and
/// the stable components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub alpha: f64,
    pub g: GFamily,
    pub components: Vec<StableParams>,
}

impl MixtureSpec {
    pub fn new(
        alpha: f64,
        g: GFamily,
        components: Vec<StableParams>,
    ) -> Result<Self, MixtureError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(MixtureError::InvalidSpec(format!(
                "alpha must lie in [0,1), got {alpha}"
            )));
        }
        if components.is_empty() {
            return Err(MixtureError::InvalidSpec(
                "need at least one stable component (p >= 2)".into(),
            ));
        }
        g.validate()?;
        let spec = MixtureSpec {
            alpha,
            g,
            components,
        };
        spec.check_mixing_integrability()?;
        Ok(spec)
    }

    /// Build without the mixing-integrability quadrature check. Pointwise
    /// density formula probes stay valid; characteristic functions and
    /// samplers may fail or diverge for such specs.
    pub fn new_unchecked(alpha: f64, g: GFamily, components: Vec<StableParams>) -> Self {
        MixtureSpec {
            alpha,
            g,
            components,
        }
    }

    /// Vector dimension p (mixing coordinate plus the stable components).
    pub fn dim(&self) -> usize {
        self.components.len() + 1
    }

    /// alpha - p + 1 + sum gamma_r^{-1}: the self-decomposability statistic.
    pub fn margin(&self) -> f64 {
        self.alpha - self.dim() as f64
            + 1.0
            + self
                .components
                .iter()
                .map(|c| 1.0 / c.gamma)
                .sum::<f64>()
    }

    /// Whether every component exponent lies in [1, 2], the range where the
    /// margin criterion is an exact characterization.
    pub fn hypothesis_ok(&self) -> bool {
        self.components.iter().all(|c| c.gamma >= 1.0)
    }

    /// The sub-family with stable component `idx` removed (p decreases by 1).
    pub fn drop_component(&self, idx: usize) -> Result<MixtureSpec, MixtureError> {
        if idx >= self.components.len() || self.components.len() == 1 {
            return Err(MixtureError::InvalidSpec(format!(
                "cannot drop component {idx} of {}",
                self.components.len()
            )));
        }
        let mut components = self.components.clone();
        components.remove(idx);
        Ok(MixtureSpec {
            alpha: self.alpha,
            g: self.g.clone(),
            components,
        })
    }

    /// int_0^inf v^{-alpha} g(v)/(1+v) dv must be finite for the Laplace
    /// exponent to exist; checked by dyadic quadrature with the box-doubling
    /// divergence rule.
    fn check_mixing_integrability(&self) -> Result<f64, MixtureError> {
        if matches!(self.g, GFamily::Constant { .. } | GFamily::ExpDecay { rate: 0.0, .. })
            && self.alpha == 0.0
            && self.g.at_zero() > 0.0
        {
            return Err(MixtureError::InvalidSpec(
                "constant g with alpha = 0 is not integrable".into(),
            ));
        }
        let alpha = self.alpha;
        let g = &self.g;
        quad::integrate_positive_axis(
            |v: f64| v.powf(-alpha) * g.value(v) / (1.0 + v),
            1e-9,
            2_000_000,
        )
        .converged()
        .map(|r| r.value)
        .map_err(|e| MixtureError::InvalidSpec(format!("mixing integrability check: {e}")))
    }
}

/// Lévy density h of Z at a point y in R^p: zero off (0,inf) x R^{p-1},
/// otherwise y1^{-(alpha+1)} g(y1) prod_r f_r(y_{r+1}/y1^{1/gamma_r}) y1^{-1/gamma_r}.
pub fn mixture_levy_density(spec: &MixtureSpec, y: &[f64]) -> Result<f64, MixtureError> {
    if y.len() != spec.dim() {
        return Err(MixtureError::DimensionMismatch {
            expected: spec.dim(),
            got: y.len(),
        });
    }
    let v = y[0];
    if v <= 0.0 {
        return Ok(0.0);
    }
    let mut density = v.powf(-(spec.alpha + 1.0)) * spec.g.value(v);
    for (r, comp) in spec.components.iter().enumerate() {
        let scale_v = v.powf(1.0 / comp.gamma);
        density *= symmetric_stable_pdf(comp, y[r + 1] / scale_v)? / scale_v;
        if density == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(density)
}

/// Characteristic function of Z at t by one-dimensional quadrature of
/// (e^{i t1 v - v sum_r lambda_r |t_{r+1}|^{gamma_r}} - 1) v^{-(alpha+1)} g(v)
/// over v, with the substitution v = e^w taming the origin singularity.
pub fn mixture_char_fn(
    spec: &MixtureSpec,
    t: &[f64],
    tol: f64,
    budget: usize,
) -> Result<Complex64, MixtureError> {
    let exponent = mixture_log_char_fn(spec, t, tol, budget)?;
    Ok(exponent.exp())
}

/// log of the characteristic function (the Lévy exponent of Z at t).
pub fn mixture_log_char_fn(
    spec: &MixtureSpec,
    t: &[f64],
    tol: f64,
    budget: usize,
) -> Result<Complex64, MixtureError> {
    if t.len() != spec.dim() {
        return Err(MixtureError::DimensionMismatch {
            expected: spec.dim(),
            got: t.len(),
        });
    }
    let decay: f64 = spec
        .components
        .iter()
        .zip(&t[1..])
        .map(|(c, &ti)| c.scale * ti.abs().powf(c.gamma))
        .sum();
    let s = Complex64::new(-decay, t[0]);
    if s.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let alpha = spec.alpha;
    let g0 = spec.g.at_zero();
    if g0 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    // Below v_lo: |e^{sv} - 1| <= |s| v, so the omitted head is bounded by
    // |s| g0 v_lo^{1-alpha} / (1-alpha).
    let head_tol = tol / 8.0;
    let v_lo = (head_tol * (1.0 - alpha) / (s.norm() * g0))
        .powf(1.0 / (1.0 - alpha))
        .min(1e-3);
    let head_bound = s.norm() * g0 * v_lo.powf(1.0 - alpha) / (1.0 - alpha);

    // Upper end: exponential decay from g's rate and/or Re s; otherwise the
    // oscillatory tail is corrected by integration by parts and the constant
    // part (-1) analytically.
    let g_rate = match &spec.g {
        GFamily::ExpDecay { rate, .. } => *rate,
        GFamily::Constant { .. } => 0.0,
        GFamily::TabulatedDecreasing { .. } => 0.0,
    };
    let kappa = g_rate + decay;
    let support_end = spec.g.support_end();
    let mut tail_correction = Complex64::new(0.0, 0.0);
    let mut tail_bound = 0.0f64;
    let v_hi;
    if support_end.is_finite() {
        v_hi = support_end;
    } else if kappa > 0.0 {
        // e^{s v} g(v) is below e^{-45} past this point, but the constant
        // part (-1) g(v) decays only at g's own rate and is continued
        // separately: analytically for flat g, by a log-mapped quadrature
        // when g has a slower exponential rate than kappa.
        v_hi = (45.0 / kappa).max(v_lo * 4.0);
        if g_rate == 0.0 {
            tail_correction += tail_of_minus_one(spec, v_hi);
        } else {
            let one_end = 45.0 / g_rate;
            if one_end > v_hi {
                let g = &spec.g;
                let cont = quad::adaptive(
                    |y: f64| {
                        let v = v_hi * y.exp();
                        -(v.powf(-alpha) * g.value(v))
                    },
                    0.0,
                    (one_end / v_hi).ln(),
                    tol / 8.0,
                    budget / 8,
                );
                tail_correction += Complex64::new(cont.value, 0.0);
                tail_bound += cont.err;
            }
            tail_bound += g0 * (-45.0f64).exp() * 2.0;
        }
        tail_bound += g0 * (-45.0f64).exp();
    } else {
        // purely oscillatory tail (t alive only in the first coordinate):
        // two integration-by-parts boundary terms at v_hi, remainder bounded
        // by g0 (alpha+1) v_hi^{-(alpha+2)} / |s|^2.
        let target = tol / 8.0;
        v_hi = (g0 * (alpha + 1.0) / (target * s.norm() * s.norm()))
            .powf(1.0 / (alpha + 2.0))
            .max(v_lo * 4.0)
            .max(1.0);
        let h = g0 * v_hi.powf(-alpha - 1.0);
        let hp = -(alpha + 1.0) * g0 * v_hi.powf(-alpha - 2.0);
        let esv = (s * v_hi).exp();
        tail_correction += -esv * h / s + esv * hp / (s * s);
        tail_bound += g0 * (alpha + 1.0) * v_hi.powf(-(alpha + 2.0)) / (s.norm() * s.norm());
        tail_correction += tail_of_minus_one(spec, v_hi);
    }

    // Log space tames the v^{-alpha} singularity below v = 1; above it the
    // oscillation frequency is constant in v, so integrate there linearly.
    let g = &spec.g;
    let split = v_hi.min(1.0);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = head_bound + tail_bound;
    let mut converged = true;
    if split > v_lo {
        // in w = ln v coordinates the phase t1 e^w oscillates with frequency
        // at most |t1| * split
        let head = quad::adaptive_oscillatory(
            |w: f64| {
                let v = w.exp();
                ((s * v).exp() - Complex64::new(1.0, 0.0)) * (v.powf(-alpha) * g.value(v))
            },
            v_lo.ln(),
            split.ln(),
            t[0].abs() * split,
            tol / 4.0,
            budget / 2,
        );
        value += head.value;
        err += head.err;
        converged &= head.converged;
    }
    if v_hi > split {
        let body = quad::adaptive_oscillatory(
            |v: f64| {
                ((s * v).exp() - Complex64::new(1.0, 0.0)) * (v.powf(-alpha - 1.0) * g.value(v))
            },
            split,
            v_hi,
            t[0].abs(),
            tol / 4.0,
            budget / 2,
        );
        value += body.value;
        err += body.err;
        converged &= body.converged;
    }
    if err > tol && !converged {
        return Err(MixtureError::Quadrature(QuadError::ToleranceNotMet {
            err,
            tol,
            budget,
        }));
    }
    Ok(value + tail_correction)
}

/// Exact integral of (-1) v^{-(alpha+1)} g0 over (v_hi, inf) for flat g.
fn tail_of_minus_one(spec: &MixtureSpec, v_hi: f64) -> Complex64 {
    let g0 = spec.g.at_zero();
    Complex64::new(-g0 * v_hi.powf(-spec.alpha) / spec.alpha.max(1e-300), 0.0)
}

/// Options controlling the mixing-variable sampler.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Permit the compound-Poisson small-jump-truncation sampler when no
    /// exact sampler exists for the g family.
    pub allow_cp_approximation: bool,
    /// Bias budget for the truncation: E[sum of dropped jumps]
    /// <= g(0) eps^{1-alpha} / (1-alpha) <= this.
    pub cp_bias_tol: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            allow_cp_approximation: true,
            cp_bias_tol: 1e-4,
        }
    }
}

/// n i.i.d. rows of Z = (V, V^{1/gamma_1} X_1, ...). Column 1 is positive.
pub fn mixture_sample(
    spec: &MixtureSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, MixtureError> {
    mixture_sample_with(spec, n, seed, &SampleOptions::default())
}

pub fn mixture_sample_with(
    spec: &MixtureSpec,
    n: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<Vec<Vec<f64>>, MixtureError> {
    let mut rng = seed_rng(seed);
    let mixing = MixingSampler::for_spec(spec, opts)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let v = mixing.draw(&mut rng);
        let mut row = Vec::with_capacity(spec.dim());
        row.push(v);
        for comp in &spec.components {
            let x = comp.scale.powf(1.0 / comp.gamma) * standard_symmetric_draw(comp.gamma, &mut rng);
            row.push(v.powf(1.0 / comp.gamma) * x);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Draws of the mixing variable V alone.
pub fn sample_mixing(
    spec: &MixtureSpec,
    n: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<Vec<f64>, MixtureError> {
    let mut rng = seed_rng(seed);
    let mixing = MixingSampler::for_spec(spec, opts)?;
    Ok((0..n).map(|_| mixing.draw(&mut rng)).collect())
}

enum MixingSampler {
    /// g flat (rate 0): V = kappa^{1/alpha} V_alpha, positive stable.
    Stable { alpha: f64, unit: f64 },
    /// alpha = 0, g = g0 e^{-bv}: V ~ Gamma(g0, rate b).
    Gamma(rand_distr::Gamma<f64>),
    /// alpha = 1/2, g = g0 e^{-bv}: V inverse Gaussian.
    InverseGaussian(rand_distr::InverseGaussian<f64>),
    /// Generic compound-Poisson approximation with small jumps dropped.
    CompoundPoisson(CpApprox),
}

impl MixingSampler {
    fn for_spec(spec: &MixtureSpec, opts: &SampleOptions) -> Result<Self, MixtureError> {
        let (g0, rate) = match &spec.g {
            GFamily::ExpDecay { level, rate } => (*level, *rate),
            GFamily::Constant { level } => (*level, 0.0),
            GFamily::TabulatedDecreasing { .. } => {
                return if opts.allow_cp_approximation {
                    Ok(MixingSampler::CompoundPoisson(CpApprox::build(
                        spec,
                        opts.cp_bias_tol,
                    )?))
                } else {
                    Err(MixtureError::UnsupportedMixing(
                        "tabulated g has no exact mixing sampler".into(),
                    ))
                };
            }
        };
        if rate == 0.0 {
            // E e^{sV} = exp{-kappa (-s)^alpha}, kappa = g0 Gamma(1-alpha)/alpha
            let kappa = g0 * gamma_fn(1.0 - spec.alpha) / spec.alpha;
            return Ok(MixingSampler::Stable {
                alpha: spec.alpha,
                unit: kappa.powf(1.0 / spec.alpha),
            });
        }
        if spec.alpha == 0.0 {
            let g = rand_distr::Gamma::new(g0, 1.0 / rate)
                .map_err(|e| MixtureError::InvalidSpec(e.to_string()))?;
            return Ok(MixingSampler::Gamma(g));
        }
        if (spec.alpha - 0.5).abs() < 1e-14 {
            let pi = std::f64::consts::PI;
            let mean = pi.sqrt() * g0 / rate.sqrt();
            let shape = 2.0 * pi * g0 * g0;
            let ig = rand_distr::InverseGaussian::new(mean, shape)
                .map_err(|e| MixtureError::InvalidSpec(format!("{e:?}")))?;
            return Ok(MixingSampler::InverseGaussian(ig));
        }
        if opts.allow_cp_approximation {
            Ok(MixingSampler::CompoundPoisson(CpApprox::build(
                spec,
                opts.cp_bias_tol,
            )?))
        } else {
            Err(MixtureError::UnsupportedMixing(format!(
                "alpha = {} with exponential g has no exact sampler",
                spec.alpha
            )))
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            MixingSampler::Stable { alpha, unit } => unit * positive_stable_draw(*alpha, rng),
            MixingSampler::Gamma(g) => g.sample(rng),
            MixingSampler::InverseGaussian(ig) => ig.sample(rng),
            MixingSampler::CompoundPoisson(cp) => cp.draw(rng),
        }
    }
}

/// Compound-Poisson approximation of the subordinator with Lévy density
/// v^{-(alpha+1)} g(v): jumps below eps are dropped (bias bound
/// g(0) eps^{1-alpha}/(1-alpha)), the rest are drawn from an inverse-CDF
/// table on a log grid.
struct CpApprox {
    rate: f64,
    cum: Vec<f64>,
    log_grid: Vec<f64>,
}

impl CpApprox {
    fn build(spec: &MixtureSpec, bias_tol: f64) -> Result<Self, MixtureError> {
        let g0 = spec.g.at_zero();
        if g0 <= 0.0 {
            return Ok(CpApprox {
                rate: 0.0,
                cum: vec![],
                log_grid: vec![],
            });
        }
        let eps = (bias_tol * (1.0 - spec.alpha) / g0).powf(1.0 / (1.0 - spec.alpha));
        let support_end = spec.g.support_end();
        let v_max = if support_end.is_finite() {
            support_end
        } else {
            let g_rate = match &spec.g {
                GFamily::ExpDecay { rate, .. } => *rate,
                _ => 0.0,
            };
            if g_rate > 0.0 {
                50.0 / g_rate
            } else {
                // flat g: truncate where the remaining rate is negligible
                eps * (1e12f64).powf(1.0 / spec.alpha.max(0.05))
            }
        };
        let n_grid = 4096;
        let (ln_lo, ln_hi) = (eps.ln(), v_max.ln());
        let mut log_grid = Vec::with_capacity(n_grid);
        let mut cum = Vec::with_capacity(n_grid);
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..n_grid {
            let w = ln_lo + (ln_hi - ln_lo) * i as f64 / (n_grid - 1) as f64;
            let v = w.exp();
            // integrand in w-space: levy density times Jacobian v
            let val = v.powf(-spec.alpha) * spec.g.value(v);
            if let Some((wp, vp)) = prev {
                acc += 0.5 * (val + vp) * (w - wp);
            }
            prev = Some((w, val));
            log_grid.push(w);
            cum.push(acc);
        }
        Ok(CpApprox {
            rate: acc,
            cum,
            log_grid,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.rate <= 0.0 {
            return 0.0;
        }
        let poisson = rand_distr::Poisson::new(self.rate).expect("positive rate");
        let jumps = poisson.sample(rng) as usize;
        let mut total = 0.0;
        for _ in 0..jumps {
            let target = rng.random::<f64>() * self.rate;
            let idx = match self
                .cum
                .binary_search_by(|c| c.partial_cmp(&target).unwrap())
            {
                Ok(i) => i,
                Err(i) => i.min(self.cum.len() - 1),
            };
            let (c0, c1, w0, w1) = if idx == 0 {
                (0.0, self.cum[0].max(1e-300), self.log_grid[0], self.log_grid[0])
            } else {
                (
                    self.cum[idx - 1],
                    self.cum[idx],
                    self.log_grid[idx - 1],
                    self.log_grid[idx],
                )
            };
            let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
            total += (w0 + t * (w1 - w0)).exp();
        }
        total
    }
}

#[cfg(test)]
mod tests;
