//! Lévy triplets (drift, Gaussian form, Lévy measure): validation of the
//! measure integrability condition, the truncation split nu = nu1 + nu2 at
//! norm tau with drift recentering, and characteristic functions in both the
//! compensated and the factored (small-jump x compound-Poisson) forms.

mod integrals;
mod sample;

pub use integrals::{
    chf_integral, integrability_integral, mixture_region_integral, total_mass,
    truncated_norm_integral, ChfIntegrand,
};

/// integral of a bounded function against the measure (exact sums for
/// discrete variants, quadrature otherwise), with an error estimate.
pub fn real_measure_integral(
    measure: &LevyMeasure,
    f: &dyn Fn(&[f64]) -> f64,
    opts: &QuadOpts,
) -> Result<(f64, f64), TripletError> {
    integrals::real_integral(measure, f, &|v| v.abs().max(1.0), opts)
}
pub use sample::sample_finite_activity;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixture::{MixtureError, MixtureSpec};
use crate::quad::QuadError;
use crate::scalar_law::ScalarLaw;

#[derive(Debug, Error)]
pub enum TripletError {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("triplet fails validation: {0:?}")]
    InvalidTriplet(Vec<String>),
    #[error("truncation level must be positive, got {0}")]
    TauNonPositive(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Quadrature controls shared by the density-variant operations.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub tol: f64,
    pub budget: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            tol: 1e-7,
            budget: 8_000_000,
        }
    }
}

/// Restriction of a curve measure to a window in the scalar parameter v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VWindow {
    Full,
    /// Keep v in (lo, hi).
    Inside { lo: f64, hi: f64 },
    /// Keep v outside [lo, hi] (both tails).
    Tails { lo: f64, hi: f64 },
}

impl VWindow {
    pub(crate) fn pieces(&self) -> Vec<(f64, f64)> {
        match *self {
            VWindow::Full => vec![(0.0, f64::INFINITY)],
            VWindow::Inside { lo, hi } => vec![(lo, hi)],
            VWindow::Tails { lo, hi } => vec![(0.0, lo), (hi, f64::INFINITY)],
        }
    }
}

/// Restriction of a density measure to a region in the point norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormWindow {
    Full,
    Below { tau: f64 },
    AtLeast { tau: f64 },
}

impl NormWindow {
    pub(crate) fn contains(&self, norm: f64) -> bool {
        match *self {
            NormWindow::Full => true,
            NormWindow::Below { tau } => norm < tau,
            NormWindow::AtLeast { tau } => norm >= tau,
        }
    }
}

/// Finite atomic measure: weighted points, origin excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

/// Mass rate x law of (V^a, V^-b) for a positive scalar law V: the curve
/// pattern behind the worked bivariate fixtures. Restriction windows in v
/// express truncation splits exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCurveMeasure {
    pub law: ScalarLaw,
    pub rate: f64,
    /// Exponent a of the first coordinate V^a (a > 0).
    pub pow_first: f64,
    /// Exponent b of the second coordinate V^-b (b > 0).
    pub pow_second: f64,
    #[serde(default = "default_window")]
    pub window: VWindow,
}

fn default_window() -> VWindow {
    VWindow::Full
}

impl ScalarCurveMeasure {
    pub fn new(law: ScalarLaw, rate: f64, pow_first: f64, pow_second: f64) -> Self {
        ScalarCurveMeasure {
            law,
            rate,
            pow_first,
            pow_second,
            window: VWindow::Full,
        }
    }

    pub fn point(&self, v: f64) -> [f64; 2] {
        [v.powf(self.pow_first), v.powf(-self.pow_second)]
    }

    /// Squared norm along the curve.
    pub fn norm_sq(&self, v: f64) -> f64 {
        v.powf(2.0 * self.pow_first) + v.powf(-2.0 * self.pow_second)
    }

    /// Location of the minimal norm along the curve.
    pub fn norm_argmin(&self) -> f64 {
        (self.pow_second / self.pow_first).powf(1.0 / (2.0 * (self.pow_first + self.pow_second)))
    }
}

/// Density values on grid cells of equal volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedMeasure {
    pub cells: Vec<(Vec<f64>, f64)>,
    pub cell_volume: f64,
}

impl TabulatedMeasure {
    /// Weight carried by one cell.
    pub fn weight(&self, idx: usize) -> f64 {
        self.cells[idx].1 * self.cell_volume
    }
}

/// Lévy measure in one of four shapes: finite atomic, curve-supported via a
/// scalar law, the mixture-family density, or a tabulated density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LevyMeasure {
    Atomic(AtomicMeasure),
    ScalarCurve(ScalarCurveMeasure),
    MixtureDensity {
        spec: MixtureSpec,
        #[serde(default = "default_norm_window")]
        norm_window: NormWindow,
    },
    Tabulated(TabulatedMeasure),
}

fn default_norm_window() -> NormWindow {
    NormWindow::Full
}

impl LevyMeasure {
    pub fn dim(&self) -> Option<usize> {
        match self {
            LevyMeasure::Atomic(a) => a.atoms.first().map(|(x, _)| x.len()),
            LevyMeasure::ScalarCurve(_) => Some(2),
            LevyMeasure::MixtureDensity { spec, .. } => Some(spec.dim()),
            LevyMeasure::Tabulated(t) => t.cells.first().map(|(x, _)| x.len()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Atomic(a) => a.atoms.is_empty(),
            LevyMeasure::ScalarCurve(c) => c.rate == 0.0,
            LevyMeasure::MixtureDensity { .. } => false,
            LevyMeasure::Tabulated(t) => t.cells.is_empty(),
        }
    }

    fn has_finite_values(&self) -> bool {
        match self {
            LevyMeasure::Atomic(a) => a
                .atoms
                .iter()
                .all(|(x, w)| w.is_finite() && x.iter().all(|c| c.is_finite())),
            LevyMeasure::ScalarCurve(c) => {
                c.rate.is_finite() && c.pow_first.is_finite() && c.pow_second.is_finite()
            }
            LevyMeasure::MixtureDensity { spec, .. } => {
                spec.alpha.is_finite()
                    && spec
                        .components
                        .iter()
                        .all(|c| c.gamma.is_finite() && c.scale.is_finite())
            }
            LevyMeasure::Tabulated(t) => {
                t.cell_volume.is_finite()
                    && t.cells
                        .iter()
                        .all(|(x, d)| d.is_finite() && x.iter().all(|c| c.is_finite()))
            }
        }
    }
}

/// The full generating triplet of an infinitely divisible law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub dim: usize,
    pub drift: Vec<f64>,
    /// Row-major symmetric positive-semidefinite matrix.
    pub gaussian_form: Vec<Vec<f64>>,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(drift: Vec<f64>, gaussian_form: Vec<Vec<f64>>, measure: LevyMeasure) -> Self {
        LevyTriplet {
            dim: drift.len(),
            drift,
            gaussian_form,
            measure,
        }
    }

    /// Pure compound-Poisson triplet: the drift absorbs the integral
    /// compensator, so the characteristic function is exp(integral of
    /// (e^{i<u,x>} - 1) d nu).
    pub fn compound_poisson(measure: LevyMeasure, opts: &QuadOpts) -> Result<Self, TripletError> {
        let dim = measure
            .dim()
            .ok_or_else(|| TripletError::Unsupported("empty measure has no dimension".into()))?;
        let drift = integrals::compensator_drift(&measure, dim, opts)?;
        let gaussian_form = vec![vec![0.0; dim]; dim];
        Ok(LevyTriplet::new(drift, gaussian_form, measure))
    }

    pub fn gaussian_matrix(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| self.gaussian_form[i][j])
    }

    /// Quadratic form u^T Q u.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                total += u[i] * self.gaussian_form[i][j] * u[j];
            }
        }
        total
    }
}

/// Outcome of validate_triplet: violated invariants (empty when valid) and
/// the value of the integrability integral with its error estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub integrability_value: Option<f64>,
    pub integrability_error: Option<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the structural invariants and the measure integrability condition
/// (the integral of |x|^2/(1+|x|^2) must be finite).
pub fn validate_triplet(t: &LevyTriplet, opts: &QuadOpts) -> Result<ValidationReport, TripletError> {
    if !t.drift.iter().all(|x| x.is_finite())
        || !t
            .gaussian_form
            .iter()
            .all(|row| row.iter().all(|x| x.is_finite()))
        || !t.measure.has_finite_values()
    {
        return Err(TripletError::NonFiniteInput(
            "drift, Gaussian form and measure must contain finite numbers".into(),
        ));
    }
    if t.dim < 1 {
        return Err(TripletError::NonFiniteInput("dimension must be >= 1".into()));
    }

    let mut violations = Vec::new();
    if t.drift.len() != t.dim {
        violations.push(format!(
            "drift length {} does not match dim {}",
            t.drift.len(),
            t.dim
        ));
    }
    if t.gaussian_form.len() != t.dim
        || t.gaussian_form.iter().any(|row| row.len() != t.dim)
    {
        violations.push("Gaussian form is not a dim x dim matrix".to_string());
    } else {
        let m = t.gaussian_matrix();
        let scale = m.amax().max(1e-300);
        let mut symmetric = true;
        for i in 0..t.dim {
            for j in 0..t.dim {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    symmetric = false;
                }
            }
        }
        if !symmetric {
            violations.push("Gaussian form is not symmetric".to_string());
        } else {
            let eigen = m.symmetric_eigen();
            if eigen.eigenvalues.iter().any(|&l| l < -1e-10) {
                violations.push("Gaussian form is not positive semidefinite".to_string());
            }
        }
    }
    if let Some(d) = t.measure.dim() {
        if d != t.dim {
            violations.push(format!("measure dimension {d} does not match dim {}", t.dim));
        }
    }

    match &t.measure {
        LevyMeasure::Atomic(a) => {
            for (x, w) in &a.atoms {
                if *w <= 0.0 {
                    violations.push(format!("atom weight {w} is not positive"));
                }
                let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm <= 1e-15 {
                    violations.push("mass at origin".to_string());
                }
            }
        }
        LevyMeasure::ScalarCurve(c) => {
            if c.rate < 0.0 {
                violations.push("curve measure rate must be nonnegative".into());
            }
            if c.pow_first <= 0.0 || c.pow_second <= 0.0 {
                violations.push("curve exponents must be positive".into());
            }
            if let Err(e) = c.law.validate() {
                violations.push(e);
            }
        }
        LevyMeasure::MixtureDensity { spec, .. } => {
            if let Err(e) =
                MixtureSpec::new(spec.alpha, spec.g.clone(), spec.components.clone())
            {
                violations.push(format!("mixture spec invalid: {e}"));
            }
        }
        LevyMeasure::Tabulated(tab) => {
            if tab.cell_volume <= 0.0 {
                violations.push("cell volume must be positive".into());
            }
            for (x, d) in &tab.cells {
                if *d < 0.0 {
                    violations.push(format!("negative density value {d}"));
                }
                let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                if *d > 0.0 && norm <= 1e-15 {
                    violations.push("mass at origin".to_string());
                }
            }
        }
    }

    let (value, err) = if violations.is_empty() {
        match integrals::integrability_integral(&t.measure, opts) {
            Ok((v, e)) => (Some(v), Some(e)),
            Err(TripletError::Quadrature(QuadError::Divergent { partial, .. })) => {
                violations.push("integrability integral diverges".to_string());
                (Some(partial), None)
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    Ok(ValidationReport {
        violations,
        integrability_value: value,
        integrability_error: err,
    })
}

/// The truncation split nu = nu1 + nu2 at norm tau, with nu1 the finite
/// big-jump part, its total mass, and the recentered drift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationSplit {
    pub tau: f64,
    pub nu1: LevyMeasure,
    pub nu2: LevyMeasure,
    pub shifted_drift: Vec<f64>,
    pub rate: f64,
    /// Quadrature error estimates (zero for exact variants).
    pub rate_error: f64,
    pub drift_error: f64,
}

/// Split the measure at norm tau and recenter the drift:
/// b_r = a_r + int x_r |x|^2/(1+|x|^2) d nu2 - int x_r/(1+|x|^2) d nu1.
pub fn split_truncate(
    t: &LevyTriplet,
    tau: f64,
    opts: &QuadOpts,
) -> Result<TruncationSplit, TripletError> {
    if !(tau > 0.0) {
        return Err(TripletError::TauNonPositive(tau));
    }
    let report = validate_triplet(t, opts)?;
    if !report.is_valid() {
        return Err(TripletError::InvalidTriplet(report.violations));
    }

    let (nu1, nu2) = match &t.measure {
        LevyMeasure::Atomic(a) => {
            let (big, small): (Vec<_>, Vec<_>) = a
                .atoms
                .iter()
                .cloned()
                .partition(|(x, _)| x.iter().map(|c| c * c).sum::<f64>().sqrt() >= tau);
            (
                LevyMeasure::Atomic(AtomicMeasure { atoms: big }),
                LevyMeasure::Atomic(AtomicMeasure { atoms: small }),
            )
        }
        LevyMeasure::ScalarCurve(c) => {
            if !matches!(c.window, VWindow::Full) {
                return Err(TripletError::Unsupported(
                    "splitting an already-windowed curve measure".into(),
                ));
            }
            let v_star = c.norm_argmin();
            if c.norm_sq(v_star) >= tau * tau {
                // entire curve lies at norm >= tau
                (
                    LevyMeasure::ScalarCurve(c.clone()),
                    LevyMeasure::ScalarCurve(ScalarCurveMeasure {
                        window: VWindow::Inside {
                            lo: v_star,
                            hi: v_star,
                        },
                        ..c.clone()
                    }),
                )
            } else {
                let lo = bisect_norm(c, tau, 1e-300, v_star);
                let hi = bisect_norm(c, tau, v_star, 1e300);
                (
                    LevyMeasure::ScalarCurve(ScalarCurveMeasure {
                        window: VWindow::Tails { lo, hi },
                        ..c.clone()
                    }),
                    LevyMeasure::ScalarCurve(ScalarCurveMeasure {
                        window: VWindow::Inside { lo, hi },
                        ..c.clone()
                    }),
                )
            }
        }
        LevyMeasure::MixtureDensity { spec, norm_window } => {
            if !matches!(norm_window, NormWindow::Full) {
                return Err(TripletError::Unsupported(
                    "splitting an already-windowed density measure".into(),
                ));
            }
            (
                LevyMeasure::MixtureDensity {
                    spec: spec.clone(),
                    norm_window: NormWindow::AtLeast { tau },
                },
                LevyMeasure::MixtureDensity {
                    spec: spec.clone(),
                    norm_window: NormWindow::Below { tau },
                },
            )
        }
        LevyMeasure::Tabulated(tab) => {
            let (big, small): (Vec<_>, Vec<_>) = tab
                .cells
                .iter()
                .cloned()
                .partition(|(x, _)| x.iter().map(|c| c * c).sum::<f64>().sqrt() >= tau);
            (
                LevyMeasure::Tabulated(TabulatedMeasure {
                    cells: big,
                    cell_volume: tab.cell_volume,
                }),
                LevyMeasure::Tabulated(TabulatedMeasure {
                    cells: small,
                    cell_volume: tab.cell_volume,
                }),
            )
        }
    };

    let (rate, rate_error) = integrals::total_mass(&nu1, opts)?;
    let (drift_shift2, err2) = integrals::drift_recentering_small(&nu2, t.dim, opts)?;
    let (drift_shift1, err1) = integrals::drift_recentering_big(&nu1, t.dim, opts)?;
    let shifted_drift: Vec<f64> = t
        .drift
        .iter()
        .zip(drift_shift2.iter().zip(&drift_shift1))
        .map(|(a, (s2, s1))| a + s2 - s1)
        .collect();

    Ok(TruncationSplit {
        tau,
        nu1,
        nu2,
        shifted_drift,
        rate,
        rate_error,
        drift_error: err1 + err2,
    })
}

fn bisect_norm(c: &ScalarCurveMeasure, tau: f64, mut lo: f64, mut hi: f64) -> f64 {
    // norm_sq - tau^2 changes sign exactly once on each side of the minimum
    let target = tau * tau;
    let increasing = c.norm_sq(hi) > c.norm_sq(lo);
    for _ in 0..400 {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        let above = c.norm_sq(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Characteristic function at u per the generating representation:
/// exp(i<a,u> - Q(u)/2 + integral of (e^{i<u,x>} - 1 - i<u,x>/(1+|x|^2)) d nu).
pub fn char_fn(t: &LevyTriplet, u: &[f64], opts: &QuadOpts) -> Result<Complex64, TripletError> {
    if u.len() != t.dim {
        return Err(TripletError::DimensionMismatch {
            expected: t.dim,
            got: u.len(),
        });
    }
    let drift_phase: f64 = t.drift.iter().zip(u).map(|(a, b)| a * b).sum();
    let mut exponent = Complex64::new(-0.5 * t.quadratic_form(u), drift_phase);
    if !t.measure.is_zero() {
        let (integral, _err) =
            integrals::chf_integral(&t.measure, u, ChfIntegrand::Levy, opts)?;
        exponent += integral;
    }
    Ok(exponent.exp())
}

/// Characteristic function evaluated through the factored form: the
/// compensated small-jump part times the compound-Poisson big-jump part,
/// exp(i<b,u> - Q(u)/2 + int (e^{i<u,x>}-1-i<u,x>) d nu2)
///   x exp(-rate + int e^{i<u,x>} d nu1).
pub fn char_fn_from_split(
    split: &TruncationSplit,
    gaussian_form: &[Vec<f64>],
    u: &[f64],
    opts: &QuadOpts,
) -> Result<Complex64, TripletError> {
    let dim = split.shifted_drift.len();
    if u.len() != dim {
        return Err(TripletError::DimensionMismatch {
            expected: dim,
            got: u.len(),
        });
    }
    let mut q = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            q += u[i] * gaussian_form[i][j] * u[j];
        }
    }
    let drift_phase: f64 = split.shifted_drift.iter().zip(u).map(|(a, b)| a * b).sum();
    let mut exponent = Complex64::new(-0.5 * q, drift_phase);
    if !split.nu2.is_zero() {
        let (small, _) =
            integrals::chf_integral(&split.nu2, u, ChfIntegrand::Compensated, opts)?;
        exponent += small;
    }
    exponent -= Complex64::new(split.rate, 0.0);
    if !split.nu1.is_zero() {
        let (big, _) = integrals::chf_integral(&split.nu1, u, ChfIntegrand::Plain, opts)?;
        exponent += big;
    }
    Ok(exponent.exp())
}

#[cfg(test)]
mod tests;
