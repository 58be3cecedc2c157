//! Moment-existence verdicts driven by the truncated Lévy measure: the box
//! criterion over rectangles of exponents, the Poisson-weighted moment
//! series for finite-atom big-jump parts, Monte Carlo moment diagnostics
//! with a Hill tail-index flag, and the submultiplicativity refutation
//! witness.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::mixture::{GFamily, MixtureSpec};
use crate::triplet::{
    split_truncate, validate_triplet, LevyMeasure, LevyTriplet, NormWindow, QuadOpts,
    TripletError, TruncationSplit, VWindow,
};

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("series evaluation needs integer exponents, got {0}")]
    ExponentNotInteger(f64),
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("operation needs a finite-atom measure")]
    NotAtomic,
    #[error("diagnostics need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error(transparent)]
    Triplet(#[from] TripletError),
}

/// Vector of nonnegative moment exponents (beta_1, ..., beta_p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub exponents: Vec<f64>,
}

impl MomentQuery {
    pub fn new(exponents: Vec<f64>) -> Result<Self, MomentError> {
        if exponents.is_empty() || exponents.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(MomentError::InvalidQuery(
                "exponents must be finite and nonnegative".into(),
            ));
        }
        Ok(MomentQuery { exponents })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentStatus {
    Finite,
    Infinite,
    Undecided,
}

/// Three-valued finiteness verdict with a divergence witness inside the
/// exponent box and, when available, the value of the corner integral
/// against the big-jump measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVerdict {
    pub status: MomentStatus,
    pub witness: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MomentVerdict {
    fn finite(value: Option<f64>, method: &str) -> Self {
        MomentVerdict {
            status: MomentStatus::Finite,
            witness: None,
            value,
            method: method.to_string(),
            notes: Vec::new(),
        }
    }

    fn infinite(witness: Vec<f64>, method: &str) -> Self {
        MomentVerdict {
            status: MomentStatus::Infinite,
            witness: Some(witness),
            value: None,
            method: method.to_string(),
            notes: Vec::new(),
        }
    }

    fn undecided(method: &str, note: String) -> Self {
        MomentVerdict {
            status: MomentStatus::Undecided,
            witness: None,
            value: None,
            method: method.to_string(),
            notes: vec![note],
        }
    }
}

/// Decide whether the integral of prod |x_r|^{a_r} against the (finite)
/// big-jump measure stays finite for every exponent vector in the box
/// prod [0, beta_r].
pub fn levy_box_moment(
    nu1: &LevyMeasure,
    q: &MomentQuery,
    opts: &QuadOpts,
) -> Result<MomentVerdict, MomentError> {
    if let Some(d) = nu1.dim() {
        if d != q.exponents.len() {
            return Err(MomentError::InvalidQuery(format!(
                "query has {} exponents for a {d}-dimensional measure",
                q.exponents.len()
            )));
        }
    }
    match nu1 {
        LevyMeasure::Atomic(a) => {
            // finitely many atoms: every box moment is a finite sum
            let value = a
                .atoms
                .iter()
                .map(|(x, w)| w * product_power(x, &q.exponents))
                .sum();
            Ok(MomentVerdict::finite(Some(value), "finite-atom sum"))
        }
        LevyMeasure::Tabulated(t) => {
            let value = t
                .cells
                .iter()
                .map(|(x, d)| d * t.cell_volume * product_power(x, &q.exponents))
                .sum();
            Ok(MomentVerdict::finite(Some(value), "tabulated-cell sum"))
        }
        LevyMeasure::ScalarCurve(c) => {
            let method = "scalar-law boundary reduction";
            let (beta1, beta2) = (q.exponents[0], q.exponents[1]);
            if let VWindow::Inside { .. } = c.window {
                // bounded v-interval: all moments finite
                let (value, _) = crate::triplet::real_measure_integral(
                    nu1,
                    &|x| product_power(x, &q.exponents),
                    opts,
                )?;
                return Ok(MomentVerdict::finite(Some(value), method));
            }
            // box-sup reduces to sup over s in [-b beta2, a beta1] of E V^s
            let boundary = c.law.moment_boundary();
            let hi_s = c.pow_first * beta1;
            let lo_s = -c.pow_second * beta2;
            if hi_s >= boundary.hi {
                let mut verdict = MomentVerdict::infinite(vec![beta1, 0.0], method);
                attach_corner_note(&mut verdict, c, beta1, beta2, boundary);
                return Ok(verdict);
            }
            if lo_s <= boundary.lo {
                let mut verdict = MomentVerdict::infinite(vec![0.0, beta2], method);
                attach_corner_note(&mut verdict, c, beta1, beta2, boundary);
                return Ok(verdict);
            }
            let (value, _) = crate::triplet::real_measure_integral(
                nu1,
                &|x| product_power(x, &q.exponents),
                opts,
            )?;
            Ok(MomentVerdict::finite(Some(value), method))
        }
        LevyMeasure::MixtureDensity { spec, norm_window } => {
            if !matches!(norm_window, NormWindow::AtLeast { .. }) {
                return Ok(MomentVerdict::undecided(
                    "mixing-fiber reduction",
                    "box moments of a density measure need its big-jump restriction".into(),
                ));
            }
            mixture_tail_verdict(spec, &q.exponents)
        }
    }
}

fn attach_corner_note(
    verdict: &mut MomentVerdict,
    c: &crate::triplet::ScalarCurveMeasure,
    beta1: f64,
    beta2: f64,
    boundary: crate::scalar_law::MomentBoundary,
) {
    let corner_s = c.pow_first * beta1 - c.pow_second * beta2;
    if boundary.contains(corner_s) && beta1 > 0.0 && beta2 > 0.0 {
        verdict.notes.push(format!(
            "the single corner integral at ({beta1}, {beta2}) is finite (curve exponent {corner_s:.4}); \
             the box criterion diverges at an interior edge point, so the joint moment is reported \
             infinite even though a corner-only reading would accept it"
        ));
    }
}

/// Verdict on E prod |X_r|^{beta_r} for the law generated by the triplet:
/// split at tau and delegate to the box criterion on the big-jump part (the
/// Gaussian and small-jump parts carry every moment).
pub fn moment_exists(
    t: &LevyTriplet,
    tau: f64,
    q: &MomentQuery,
    opts: &QuadOpts,
) -> Result<MomentVerdict, MomentError> {
    let report = validate_triplet(t, opts)?;
    if !report.is_valid() {
        return Err(MomentError::Triplet(TripletError::InvalidTriplet(
            report.violations,
        )));
    }
    let split = split_truncate(t, tau, opts)?;
    let mut verdict = levy_box_moment(&split.nu1, q, opts)?;
    verdict.method = format!("truncation split at {tau} + {}", verdict.method);
    Ok(verdict)
}

fn product_power(x: &[f64], exponents: &[f64]) -> f64 {
    x.iter()
        .zip(exponents)
        .map(|(xi, b)| if *b == 0.0 { 1.0 } else { xi.abs().powf(*b) })
        .product()
}

/// Finiteness of the mixture tail integral per the mixing-fiber reduction:
/// all transverse exponents below the component boundary and the combined
/// mixing exponent below the tail threshold of g.
fn mixture_tail_verdict(
    spec: &MixtureSpec,
    exponents: &[f64],
) -> Result<MomentVerdict, MomentError> {
    let method = "mixing-fiber reduction";
    for (r, comp) in spec.components.iter().enumerate() {
        let gamma_star = if comp.gamma < 2.0 {
            comp.gamma
        } else {
            f64::INFINITY
        };
        if exponents[r + 1] >= gamma_star {
            return Ok(MomentVerdict::infinite(exponents.to_vec(), method));
        }
    }
    let theta: f64 = exponents[0]
        + spec
            .components
            .iter()
            .zip(&exponents[1..])
            .map(|(c, b)| b / c.gamma)
            .sum::<f64>();
    let theta_star = g_tail_threshold(spec);
    if theta < theta_star {
        Ok(MomentVerdict::finite(None, method))
    } else {
        Ok(MomentVerdict::infinite(exponents.to_vec(), method))
    }
}

/// sup of theta with int_{[1,inf)} v^{theta - alpha - 1} g(v) dv finite:
/// infinite for exponentially decaying or compactly supported g, alpha for
/// flat g.
fn g_tail_threshold(spec: &MixtureSpec) -> f64 {
    match &spec.g {
        GFamily::ExpDecay { rate, .. } if *rate > 0.0 => f64::INFINITY,
        GFamily::ExpDecay { .. } | GFamily::Constant { .. } => spec.alpha,
        GFamily::TabulatedDecreasing { .. } => f64::INFINITY,
    }
}

/// Moment condition for the mixture vector itself with signed exponents:
/// finite when theta = a_1 + sum a_r/gamma lies in [0, theta*), infinite
/// when the tail integral diverges (theta >= theta*), undecided for
/// negative theta where the reduction gives no verdict.
pub fn mixture_moment_exists(
    spec: &MixtureSpec,
    exponents: &[f64],
) -> Result<MomentVerdict, MomentError> {
    if exponents.len() != spec.dim() {
        return Err(MomentError::InvalidQuery(format!(
            "need {} exponents, got {}",
            spec.dim(),
            exponents.len()
        )));
    }
    for (r, comp) in spec.components.iter().enumerate() {
        let gamma_star = if comp.gamma < 2.0 {
            comp.gamma
        } else {
            f64::INFINITY
        };
        let a = exponents[r + 1];
        if !(a > -1.0 && a < gamma_star) {
            return Err(MomentError::ExponentOutOfRange(format!(
                "component {r} exponent {a} outside (-1, {gamma_star})"
            )));
        }
    }
    let method = "mixing-tail threshold";
    let theta: f64 = exponents[0]
        + spec
            .components
            .iter()
            .zip(&exponents[1..])
            .map(|(c, b)| b / c.gamma)
            .sum::<f64>();
    let theta_star = g_tail_threshold(spec);
    if theta >= theta_star {
        return Ok(MomentVerdict::infinite(exponents.to_vec(), method));
    }
    if theta >= 0.0 {
        return Ok(MomentVerdict::finite(None, method));
    }
    Ok(MomentVerdict::undecided(
        method,
        format!("combined mixing exponent {theta:.4} < 0 is outside the reduction's range"),
    ))
}

/// E prod |X_r|^{beta_r} for the compound-Poisson law of a finite-atom
/// big-jump part, by the Poisson-weighted series over j-fold atom sums.
/// Returns the partial sum up to j_max and a bound on the dropped tail.
pub fn cp_moment_series(
    split: &TruncationSplit,
    q: &MomentQuery,
    j_max: usize,
) -> Result<(f64, f64), MomentError> {
    let atoms = match &split.nu1 {
        LevyMeasure::Atomic(a) => &a.atoms,
        _ => return Err(MomentError::NotAtomic),
    };
    for b in &q.exponents {
        if (b - b.round()).abs() > 1e-9 {
            return Err(MomentError::ExponentNotInteger(*b));
        }
    }
    let lambda = split.rate;
    if atoms.is_empty() || lambda == 0.0 {
        return Ok((0.0, 0.0));
    }
    let probs: Vec<f64> = atoms.iter().map(|(_, w)| w / lambda).collect();
    let points: Vec<&[f64]> = atoms.iter().map(|(x, _)| x.as_slice()).collect();
    let dim = points[0].len();

    let mut total = 0.0;
    for j in 0..=j_max {
        let log_poisson = -lambda + (j as f64) * lambda.ln() - ln_gamma(j as f64 + 1.0);
        let mut e_j = 0.0;
        // enumerate atom-count compositions of j
        let mut counts = vec![0usize; points.len()];
        compositions(j, 0, &mut counts, &mut |counts| {
            let mut log_coeff = ln_gamma(j as f64 + 1.0);
            for (c, p) in counts.iter().zip(&probs) {
                log_coeff += -ln_gamma(*c as f64 + 1.0) + (*c as f64) * p.ln();
            }
            let mut sum = vec![0.0; dim];
            for (c, x) in counts.iter().zip(&points) {
                for (s, xi) in sum.iter_mut().zip(*x) {
                    *s += *c as f64 * xi;
                }
            }
            e_j += log_coeff.exp() * product_power(&sum, &q.exponents);
        });
        total += log_poisson.exp() * e_j;
    }

    // Tail envelope: E_j <= (j+1)^{sum beta} c^{j+1} with
    // c = E prod_r (1 + |Y_r|^{beta_r}) under a single atom draw.
    let sum_beta: f64 = q.exponents.iter().sum();
    let c_env: f64 = probs
        .iter()
        .zip(&points)
        .map(|(p, x)| {
            p * x
                .iter()
                .zip(&q.exponents)
                .map(|(xi, b)| 1.0 + xi.abs().powf(*b))
                .product::<f64>()
        })
        .sum::<f64>()
        .max(1.0);
    let mut tail = 0.0;
    let mut log_term = -lambda + ((j_max + 1) as f64) * (c_env * lambda).ln()
        - ln_gamma((j_max + 2) as f64)
        + c_env.ln();
    for j in (j_max + 1)..(j_max + 4000) {
        let t = (log_term + sum_beta * ((j + 1) as f64).ln()).exp();
        tail += t;
        if t < 1e-300 {
            break;
        }
        log_term += (c_env * lambda).ln() - ((j + 1) as f64).ln();
    }
    Ok((total, tail))
}

fn compositions(
    remaining: usize,
    idx: usize,
    counts: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        emit(counts);
        counts[idx] = 0;
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        compositions(remaining - c, idx + 1, counts, emit);
    }
    counts[idx] = 0;
}

/// Whether the compound-Poisson-plus-Gaussian law puts positive probability
/// on points with every coordinate nonzero: true for a positive-definite
/// Gaussian form, otherwise searched over sums of at most p atoms in the
/// coordinates the Gaussian part does not cover.
pub fn positivity_check(
    nu1: &LevyMeasure,
    gaussian_form: &[Vec<f64>],
) -> Result<bool, MomentError> {
    let atoms = match nu1 {
        LevyMeasure::Atomic(a) => &a.atoms,
        _ => return Err(MomentError::NotAtomic),
    };
    let p = gaussian_form.len();
    let n = p;
    let matrix = nalgebra::DMatrix::from_fn(n, n, |i, j| gaussian_form[i][j]);
    if n > 0 {
        let eigen = matrix.clone().symmetric_eigen();
        if eigen.eigenvalues.iter().all(|&l| l > 1e-12) {
            return Ok(true);
        }
    }
    let covered: Vec<bool> = (0..n).map(|r| gaussian_form[r][r] > 1e-12).collect();
    if atoms.is_empty() {
        return Ok(covered.iter().all(|c| *c));
    }
    // multisets of up to p atoms
    let mut stack: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for _round in 0..p {
        let mut next = Vec::new();
        for base in &stack {
            for (x, _) in atoms {
                let sum: Vec<f64> = base.iter().zip(x).map(|(a, b)| a + b).collect();
                let ok = sum
                    .iter()
                    .enumerate()
                    .all(|(r, v)| covered[r] || v.abs() > 1e-12);
                if ok {
                    return Ok(true);
                }
                next.push(sum);
            }
        }
        stack = next;
    }
    Ok(false)
}

/// Monte Carlo moment diagnostics: the empirical moment of the product
/// statistic and a Hill tail-index estimate on its upper tail. The
/// divergence flag is a heuristic (index <= 1), never a proof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentDiagnostics {
    pub estimate: f64,
    pub hill_index: f64,
    pub divergence_flag: bool,
    /// (order statistics used, index estimate) pairs for the report trace.
    pub hill_trace: Vec<(usize, f64)>,
}

pub fn mc_moment_diag(
    samples: &[Vec<f64>],
    q: &MomentQuery,
) -> Result<MomentDiagnostics, MomentError> {
    const MIN_SAMPLES: usize = 10_000;
    if samples.len() < MIN_SAMPLES {
        return Err(MomentError::TooFewSamples {
            got: samples.len(),
            need: MIN_SAMPLES,
        });
    }
    let mut stats: Vec<f64> = samples
        .iter()
        .map(|row| product_power(row, &q.exponents))
        .collect();
    let estimate = stats.iter().sum::<f64>() / stats.len() as f64;
    stats.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut hill_trace = Vec::new();
    for frac in [400usize, 200, 100, 50] {
        let k = (stats.len() / frac).max(8);
        if let Some(h) = hill_estimate(&stats, k) {
            hill_trace.push((k, h));
        }
    }
    let k = (stats.len() / 100).max(8);
    let hill_index = hill_estimate(&stats, k).unwrap_or(f64::NAN);
    Ok(MomentDiagnostics {
        estimate,
        divergence_flag: hill_index <= 1.0,
        hill_index,
        hill_trace,
    })
}

/// Hill estimator on descending order statistics.
fn hill_estimate(sorted_desc: &[f64], k: usize) -> Option<f64> {
    if k == 0 || k >= sorted_desc.len() {
        return None;
    }
    let x_k = sorted_desc[k];
    if x_k <= 0.0 {
        return None;
    }
    let sum_log: f64 = sorted_desc[..k].iter().map(|x| (x / x_k).ln()).sum();
    if sum_log <= 0.0 {
        return None;
    }
    Some(k as f64 / sum_log)
}

/// Constructive refutation of submultiplicativity for the products
/// g1 = |x1 x2| 1{|x| >= tau} and g2 = |x1 x2|: the returned pair has
/// g(x + y) > bound * g(x) g(y) for both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmultWitness {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// |(x1+y1)(x2+y2)|, the left side of the failed inequality.
    pub product_at_sum: f64,
    /// g(x) = g(y) = 1 by construction, so this is also the ratio.
    pub ratio: f64,
}

pub fn submultiplicativity_witness(tau: f64, bound: f64) -> SubmultWitness {
    let x1 = tau.max((2.0 * bound).sqrt());
    let x = [x1, 1.0 / x1];
    let y = [1.0 / x1, x1];
    let product_at_sum = ((x[0] + y[0]) * (x[1] + y[1])).abs();
    SubmultWitness {
        x,
        y,
        product_at_sum,
        ratio: product_at_sum,
    }
}

#[cfg(test)]
mod tests;
