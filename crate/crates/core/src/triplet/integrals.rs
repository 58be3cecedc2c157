//! Integrals against Lévy measures: exact sums for atomic and tabulated
//! variants, windowed scalar quadrature along curve measures, and nested
//! quadrature (outer in the mixing coordinate, inner against the stable
//! component densities) for the mixture-density variant.

use num_complex::Complex64;
use statrs::function::gamma::gamma as gamma_fn;

use super::{
    LevyMeasure, NormWindow, QuadOpts, ScalarCurveMeasure, TripletError,
};
use crate::mixture::{mixture_log_char_fn, MixtureSpec};
use crate::quad::{self, QuadError};
use crate::special::{symmetric_stable_pdf, StableParams};

/// Integrand families of the characteristic exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChfIntegrand {
    /// e^{i<u,x>} - 1 - i<u,x>/(1+|x|^2): the generating-representation form.
    Levy,
    /// e^{i<u,x>} - 1 - i<u,x>: the fully compensated small-jump form.
    Compensated,
    /// e^{i<u,x>}: the compound-Poisson form.
    Plain,
}

fn chf_term(kind: ChfIntegrand, u: &[f64], x: &[f64]) -> Complex64 {
    let phase: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
    let e = Complex64::new(0.0, phase).exp();
    match kind {
        ChfIntegrand::Plain => e,
        ChfIntegrand::Compensated => e - Complex64::new(1.0, 0.0) - Complex64::new(0.0, phase),
        ChfIntegrand::Levy => {
            let norm_sq: f64 = x.iter().map(|c| c * c).sum();
            e - Complex64::new(1.0, 0.0) - Complex64::new(0.0, phase / (1.0 + norm_sq))
        }
    }
}

/// integral of |x|^2/(1+|x|^2) d nu: the measure integrability condition.
pub fn integrability_integral(
    measure: &LevyMeasure,
    opts: &QuadOpts,
) -> Result<(f64, f64), TripletError> {
    real_integral(
        measure,
        &|x: &[f64]| {
            let n: f64 = x.iter().map(|c| c * c).sum();
            n / (1.0 + n)
        },
        &|_v| 1.0,
        opts,
    )
}

/// integral of min(|x|, tau)^2 d nu: the equivalent truncated form.
pub fn truncated_norm_integral(
    measure: &LevyMeasure,
    tau: f64,
    opts: &QuadOpts,
) -> Result<(f64, f64), TripletError> {
    real_integral(
        measure,
        &|x: &[f64]| {
            let n: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            n.min(tau) * n.min(tau)
        },
        &|_v| tau * tau,
        opts,
    )
}

/// Total mass, exact where possible.
pub fn total_mass(measure: &LevyMeasure, opts: &QuadOpts) -> Result<(f64, f64), TripletError> {
    match measure {
        LevyMeasure::Atomic(a) => Ok((a.atoms.iter().map(|(_, w)| w).sum(), 0.0)),
        LevyMeasure::Tabulated(t) => {
            Ok((t.cells.iter().map(|(_, d)| d * t.cell_volume).sum(), 0.0))
        }
        LevyMeasure::ScalarCurve(c) => {
            let kept: f64 = c
                .window
                .pieces()
                .iter()
                .map(|&(lo, hi)| {
                    let hi_cdf = if hi.is_finite() { c.law.cdf(hi) } else { 1.0 };
                    (hi_cdf - c.law.cdf(lo)).max(0.0)
                })
                .sum();
            Ok((c.rate * kept, c.rate * 1e-10))
        }
        LevyMeasure::MixtureDensity { spec, norm_window } => {
            if matches!(norm_window, NormWindow::Full) {
                return Err(TripletError::Quadrature(QuadError::Divergent {
                    partial: f64::INFINITY,
                    scale: 0.0,
                }));
            }
            mixture_region_integral(spec, *norm_window, &|_y: &[f64]| 1.0, &|_v| 1.0, opts)
        }
    }
}

/// Vector of int x_r |x|^2/(1+|x|^2) d nu (small-jump drift recentering).
pub fn drift_recentering_small(
    measure: &LevyMeasure,
    dim: usize,
    opts: &QuadOpts,
) -> Result<(Vec<f64>, f64), TripletError> {
    vector_integral(measure, dim, opts, |x, r| {
        let n: f64 = x.iter().map(|c| c * c).sum();
        x[r] * n / (1.0 + n)
    })
}

/// Vector of int x_r/(1+|x|^2) d nu (big-jump drift recentering; also the
/// compensator absorbed by the compound-Poisson constructor).
pub fn drift_recentering_big(
    measure: &LevyMeasure,
    dim: usize,
    opts: &QuadOpts,
) -> Result<(Vec<f64>, f64), TripletError> {
    vector_integral(measure, dim, opts, |x, r| {
        let n: f64 = x.iter().map(|c| c * c).sum();
        x[r] / (1.0 + n)
    })
}

pub fn compensator_drift(
    measure: &LevyMeasure,
    dim: usize,
    opts: &QuadOpts,
) -> Result<Vec<f64>, TripletError> {
    drift_recentering_big(measure, dim, opts).map(|(v, _)| v)
}

fn vector_integral(
    measure: &LevyMeasure,
    dim: usize,
    opts: &QuadOpts,
    f: impl Fn(&[f64], usize) -> f64,
) -> Result<(Vec<f64>, f64), TripletError> {
    if measure.is_zero() {
        return Ok((vec![0.0; dim], 0.0));
    }
    let mut out = Vec::with_capacity(dim);
    let mut err_total = 0.0;
    for r in 0..dim {
        if let LevyMeasure::MixtureDensity { .. } = measure {
            // transverse coordinates integrate to zero by the symmetry of the
            // stable components; only the mixing coordinate survives
            if r > 0 {
                out.push(0.0);
                continue;
            }
        }
        let (v, e) = real_integral(measure, &|x: &[f64]| f(x, r), &|v| v.max(1.0), opts)?;
        out.push(v);
        err_total += e;
    }
    Ok((out, err_total))
}

/// integral of f(x) d nu for bounded-by-f_sup real integrands. f_sup maps the
/// mixing coordinate to a bound on |f| over the fiber (used for inner
/// truncation of the stable components).
pub fn real_integral(
    measure: &LevyMeasure,
    f: &dyn Fn(&[f64]) -> f64,
    f_sup: &dyn Fn(f64) -> f64,
    opts: &QuadOpts,
) -> Result<(f64, f64), TripletError> {
    match measure {
        LevyMeasure::Atomic(a) => {
            Ok((a.atoms.iter().map(|(x, w)| w * f(x)).sum(), 0.0))
        }
        LevyMeasure::Tabulated(t) => Ok((
            t.cells
                .iter()
                .map(|(x, d)| d * t.cell_volume * f(x))
                .sum(),
            0.0,
        )),
        LevyMeasure::ScalarCurve(c) => {
            let dens = c.law.cached_density();
            let mut total = 0.0;
            let mut err = 0.0;
            for (lo, hi) in c.window.pieces() {
                if hi <= lo {
                    continue;
                }
                let (v, e) = dens.expectation_with_err(|v| f(&c.point(v)), lo, hi, opts.tol / 4.0);
                total += v;
                err += e + 3e-5 * v.abs();
            }
            Ok((c.rate * total, c.rate * err))
        }
        LevyMeasure::MixtureDensity { spec, norm_window } => {
            mixture_region_integral(spec, *norm_window, f, f_sup, opts)
        }
    }
}

/// integral of f(y) h(y) dy over a norm window, via the factorization of h:
/// outer dyadic quadrature in the mixing coordinate v (with the box-doubling
/// divergence rule), inner nested quadrature against the component densities.
pub fn mixture_region_integral(
    spec: &MixtureSpec,
    window: NormWindow,
    f: &dyn Fn(&[f64]) -> f64,
    f_sup: &dyn Fn(f64) -> f64,
    opts: &QuadOpts,
) -> Result<(f64, f64), TripletError> {
    let alpha = spec.alpha;
    let g = &spec.g;
    let inner_tol_base = opts.tol / 8.0;
    let outcome = quad::integrate_positive_axis(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let weight = v.powf(-alpha - 1.0) * g.value(v);
            if weight == 0.0 {
                return 0.0;
            }
            let sup = f_sup(v).max(1e-12);
            let inner_tol = (inner_tol_base / weight.max(1.0)).min(1e-6) * sup;
            let mut y = vec![0.0; spec.dim()];
            y[0] = v;
            let inner = fiber_integral(spec, &window, f, sup, &mut y, 0, inner_tol);
            weight * inner
        },
        opts.tol,
        opts.budget,
    );
    match outcome {
        quad::Improper::Converged(r) => Ok((r.value, r.err)),
        quad::Improper::Diverged { partial, scale } => {
            Err(TripletError::Quadrature(QuadError::Divergent {
                partial,
                scale,
            }))
        }
    }
}

/// Expectation of f over the stable fiber at fixed mixing coordinate,
/// component by component.
fn fiber_integral(
    spec: &MixtureSpec,
    window: &NormWindow,
    f: &dyn Fn(&[f64]) -> f64,
    f_sup: f64,
    y: &mut Vec<f64>,
    comp_idx: usize,
    tol: f64,
) -> f64 {
    if comp_idx == spec.components.len() {
        let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !window.contains(norm) {
            return 0.0;
        }
        return f(y);
    }
    let comp = spec.components[comp_idx];
    let v = y[0];
    let scale_v = v.powf(1.0 / comp.gamma);
    let z_max = stable_tail_cutoff(&comp, (tol / f_sup.max(1e-300)).clamp(1e-14, 0.5));
    let y_cell = std::cell::RefCell::new(std::mem::take(y));
    let r = quad::adaptive(
        |z: f64| {
            let pdf = symmetric_stable_pdf(&comp, z).unwrap_or(0.0);
            if pdf == 0.0 {
                return 0.0;
            }
            let mut owned = y_cell.borrow_mut();
            let mut vec = std::mem::take(&mut *owned);
            drop(owned);
            vec[comp_idx + 1] = scale_v * z;
            let val = fiber_integral(spec, window, f, f_sup, &mut vec, comp_idx + 1, tol / 2.0);
            *y_cell.borrow_mut() = vec;
            pdf * val
        },
        -z_max,
        z_max,
        tol,
        200_000,
    );
    *y = y_cell.into_inner();
    r.value
}

/// z beyond which the standardized stable component carries less than
/// tail_mass of probability.
fn stable_tail_cutoff(comp: &StableParams, tail_mass: f64) -> f64 {
    let unit = comp.scale.powf(1.0 / comp.gamma);
    if comp.gamma == 2.0 {
        // N(0, 2 scale): Gaussian tail
        return unit * (2.0 * (2.0 / tail_mass).ln()).sqrt().max(3.0) * 1.5;
    }
    // power tail P(|X| > z) ~ (2 c / gamma) (z/unit)^{-gamma},
    // c = Gamma(1+gamma) sin(pi gamma / 2) / pi
    let c = gamma_fn(1.0 + comp.gamma) * (std::f64::consts::PI * comp.gamma / 2.0).sin()
        / std::f64::consts::PI;
    let c = c.abs().max(0.05);
    unit * (2.0 * c / (comp.gamma * tail_mass)).powf(1.0 / comp.gamma) * 2.0
}

/// integral of the characteristic-exponent integrand against the measure.
pub fn chf_integral(
    measure: &LevyMeasure,
    u: &[f64],
    kind: ChfIntegrand,
    opts: &QuadOpts,
) -> Result<(Complex64, f64), TripletError> {
    match measure {
        LevyMeasure::Atomic(a) => Ok((
            a.atoms
                .iter()
                .map(|(x, w)| chf_term(kind, u, x) * *w)
                .sum(),
            0.0,
        )),
        LevyMeasure::Tabulated(t) => Ok((
            t.cells
                .iter()
                .map(|(x, d)| chf_term(kind, u, x) * (d * t.cell_volume))
                .sum(),
            0.0,
        )),
        LevyMeasure::ScalarCurve(c) => curve_chf_integral(c, u, kind, opts),
        LevyMeasure::MixtureDensity { spec, norm_window } => {
            if !matches!(norm_window, NormWindow::Full) {
                return Err(TripletError::Unsupported(
                    "characteristic integrals of norm-windowed density measures".into(),
                ));
            }
            if kind != ChfIntegrand::Levy {
                return Err(TripletError::Unsupported(
                    "only the generating-form integrand is available for density measures".into(),
                ));
            }
            // (e^{i<u,y>} - 1) part collapses to the one-dimensional mixing
            // integral; the compensator part survives only in the first
            // coordinate by symmetry of the components.
            let osc = mixture_log_char_fn(spec, u, opts.tol, opts.budget)?;
            let (comp_first, err) = mixture_region_integral(
                spec,
                NormWindow::Full,
                &|y: &[f64]| {
                    let n: f64 = y.iter().map(|c| c * c).sum();
                    y[0] / (1.0 + n)
                },
                &|v| v.min(1.0),
                opts,
            )?;
            Ok((
                osc - Complex64::new(0.0, u[0] * comp_first),
                err + opts.tol,
            ))
        }
    }
}

/// Oscillatory integral along a curve measure. The phase u1 v^a + u2 v^-b is
/// linearized piecewise: below the norm minimum integrate in w = v^-b, above
/// it in y = v^a, so each piece has bounded oscillation frequency.
fn curve_chf_integral(
    c: &ScalarCurveMeasure,
    u: &[f64],
    kind: ChfIntegrand,
    opts: &QuadOpts,
) -> Result<(Complex64, f64), TripletError> {
    let (a, b) = (c.pow_first, c.pow_second);
    let v_star = c.norm_argmin();
    // supremum of the integrand magnitude for truncation bounds
    let t_sup = match kind {
        ChfIntegrand::Plain => 1.0,
        ChfIntegrand::Levy => {
            2.0 + 0.5 * u.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
        ChfIntegrand::Compensated => {
            // applied to bounded (small-jump) windows only
            let sup_norm = c
                .window
                .pieces()
                .iter()
                .flat_map(|&(lo, hi)| [lo, hi])
                .filter(|x| x.is_finite() && *x > 0.0)
                .map(|v| c.norm_sq(v).sqrt())
                .fold(1.0f64, f64::max);
            2.0 + u.iter().map(|x| x * x).sum::<f64>().sqrt() * sup_norm
        }
    };

    let trunc_mass = (opts.tol / (8.0 * c.rate.max(1e-300) * t_sup)).clamp(1e-15, 0.1);
    let v_min_cap = quantile(&c.law, trunc_mass);
    let v_max_cap = quantile(&c.law, 1.0 - trunc_mass);
    let dens = c.law.cached_density();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 2.0 * trunc_mass * c.rate * t_sup;
    let byparts_tol = opts.tol / (8.0 * c.rate.max(1e-300));

    for (lo, hi) in c.window.pieces() {
        let lo = lo.max(v_min_cap);
        let hi = hi.min(v_max_cap);
        if hi <= lo {
            continue;
        }
        // lower side in w = v^-b: phase u2 w + u1 w^{-a/b}; upper side in
        // y = v^a: phase u1 y + u2 y^{-b/a}. Both have a linear coefficient
        // plus a decaying term, so each is handled by the same side routine.
        let l_hi = hi.min(v_star);
        if l_hi > lo {
            let rho = |w: f64| {
                let v = w.powf(-1.0 / b);
                dens.value(v) * v / (b * w)
            };
            let (val, e) = curve_side(
                &|w: f64| {
                    let v = w.powf(-1.0 / b);
                    chf_term(kind, u, &c.point(v)) * rho(w)
                },
                &|w: f64| {
                    let v = w.powf(-1.0 / b);
                    nonosc_term(kind, u, &c.point(v)) * rho(w)
                },
                &rho,
                l_hi.powf(-b),
                lo.powf(-b),
                u[1].abs(),
                |w| u[1].abs() + u[0].abs() * (a / b) * w.powf(-a / b - 1.0),
                kind,
                byparts_tol,
                opts,
            );
            total += val;
            err += e;
        }
        let u_lo = lo.max(v_star);
        if hi > u_lo {
            let rho = |y: f64| {
                let v = y.powf(1.0 / a);
                dens.value(v) * v / (a * y)
            };
            let (val, e) = curve_side(
                &|y: f64| {
                    let v = y.powf(1.0 / a);
                    chf_term(kind, u, &c.point(v)) * rho(y)
                },
                &|y: f64| {
                    let v = y.powf(1.0 / a);
                    nonosc_term(kind, u, &c.point(v)) * rho(y)
                },
                &rho,
                u_lo.powf(a),
                hi.powf(a),
                u[0].abs(),
                |y| u[0].abs() + u[1].abs() * (b / a) * y.powf(-b / a - 1.0),
                kind,
                byparts_tol,
                opts,
            );
            total += val;
            err += e;
        }
    }
    // interpolation error of the cached density
    err += 3e-5 * total.norm();
    Ok((total * c.rate, err * c.rate.max(1.0)))
}

/// The non-oscillatory remainder of the integrand (everything except the
/// e^{i<u,x>} factor), which continues past the oscillation cutoff.
fn nonosc_term(kind: ChfIntegrand, u: &[f64], x: &[f64]) -> Complex64 {
    let phase: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
    match kind {
        ChfIntegrand::Plain => Complex64::new(0.0, 0.0),
        ChfIntegrand::Compensated => -Complex64::new(1.0, phase),
        ChfIntegrand::Levy => {
            let norm_sq: f64 = x.iter().map(|c| c * c).sum();
            -Complex64::new(1.0, phase / (1.0 + norm_sq))
        }
    }
}

/// One monotone side of a curve integral in a linearizing coordinate:
/// the full integrand runs to the oscillation cutoff (where the second
/// mean value theorem bounds the remaining oscillating mass by
/// 2 rho / |u_lin|), the non-oscillatory remainder continues to the cap.
#[allow(clippy::too_many_arguments)]
fn curve_side(
    full: &dyn Fn(f64) -> Complex64,
    nonosc: &dyn Fn(f64) -> Complex64,
    rho: &dyn Fn(f64) -> f64,
    lo: f64,
    cap: f64,
    u_lin: f64,
    freq_at: impl Fn(f64) -> f64,
    kind: ChfIntegrand,
    byparts_tol: f64,
    opts: &QuadOpts,
) -> (Complex64, f64) {
    let mut osc_hi = cap;
    let mut err = 0.0;
    if u_lin > 0.0 {
        // dyadic scan for the by-parts cutoff
        let mut y = (lo * 4.0).max(1e-12);
        while y < cap && 2.0 * rho(y) / u_lin > byparts_tol {
            y *= 2.0;
        }
        if y < osc_hi {
            osc_hi = y;
            err += 2.0 * rho(y) / u_lin;
        }
    }
    let mut value = Complex64::new(0.0, 0.0);
    if osc_hi > lo {
        let r = quad::adaptive_oscillatory_decaying(
            full,
            lo,
            osc_hi,
            freq_at,
            opts.tol / 4.0,
            opts.budget / 2,
        );
        value += r.value;
        err += r.err;
    }
    if osc_hi < cap && kind != ChfIntegrand::Plain {
        // smooth continuation of the compensator terms, log-mapped
        let r = quad::adaptive(
            |t: f64| {
                let point = osc_hi * t.exp();
                nonosc(point) * point
            },
            0.0,
            (cap / osc_hi).ln(),
            opts.tol / 4.0,
            opts.budget / 4,
        );
        value += r.value;
        err += r.err;
    } else if osc_hi < cap && kind == ChfIntegrand::Plain {
        err += 2.0 * rho(osc_hi) / u_lin.max(1e-300);
    }
    (value, err)
}

/// p-quantile by bisection on the law's distribution function.
fn quantile(law: &crate::scalar_law::ScalarLaw, p: f64) -> f64 {
    let (mut lo, mut hi) = (1e-280f64, 1e280f64);
    for _ in 0..220 {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        if law.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}
