//! Adaptive quadrature shared by the density, moment and characteristic
//! function evaluators.
//!
//! Everything here is budgeted: callers hand in a tolerance and a maximum
//! number of integrand evaluations, and get back a value together with an
//! error bound and the evaluation count actually spent. Improper integrals
//! over (0, inf) use panel doubling with a divergence heuristic: if widening
//! the integration box by a factor of two grows the running total by more
//! than 1% twice in a row, the integral is declared divergent.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature error bound {err:.3e} exceeds tolerance {tol:.3e} within budget {budget}")]
    ToleranceNotMet { err: f64, tol: f64, budget: usize },
    #[error("integrand returned a non-finite value near {at:.6e}")]
    NonFiniteIntegrand { at: f64 },
    #[error("integral over (0, inf) diverges under box doubling (partial {partial:.6e} at scale {scale:.3e})")]
    Divergent { partial: f64, scale: f64 },
}

/// Value types that adaptive quadrature can accumulate (reals and complex).
pub trait QuadValue:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn scale(self, k: f64) -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    /// Estimated absolute error bound.
    pub err: f64,
    pub evals: usize,
    pub converged: bool,
}

impl<T: QuadValue> QuadResult<T> {
    fn zero() -> Self {
        QuadResult {
            value: T::zero(),
            err: 0.0,
            evals: 0,
            converged: true,
        }
    }

    fn merge(&mut self, other: &QuadResult<T>) {
        self.value = self.value + other.value;
        self.err += other.err;
        self.evals += other.evals;
        self.converged &= other.converged;
    }
}

fn simpson<T: QuadValue>(fa: T, fm: T, fb: T, h: f64) -> T {
    (fa + fm.scale(4.0) + fb).scale(h / 6.0)
}

/// Adaptive Simpson on [a, b]. Never fails; the result carries the achieved
/// error bound and a convergence flag for the caller to act on.
pub fn adaptive<T, F>(f: F, a: f64, b: f64, tol: f64, max_evals: usize) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if a == b {
        return QuadResult::zero();
    }
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: f64| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let fa = eval(a);
    let fm = eval(0.5 * (a + b));
    let fb = eval(b);
    let whole = simpson(fa, fm, fb, b - a);

    // Explicit stack of (a, b, fa, fm, fb, whole, tol, depth).
    struct Frame<T> {
        a: f64,
        b: f64,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: f64,
        depth: u32,
    }
    let mut stack = vec![Frame {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: 0,
    }];
    let mut total = T::zero();
    let mut err = 0.0f64;
    let mut converged = true;

    while let Some(fr) = stack.pop() {
        let m = 0.5 * (fr.a + fr.b);
        let lm = 0.5 * (fr.a + m);
        let rm = 0.5 * (m + fr.b);
        let flm = eval(lm);
        let frm = eval(rm);
        let left = simpson(fr.fa, flm, fr.fm, m - fr.a);
        let right = simpson(fr.fm, frm, fr.fb, fr.b - m);
        let s2 = left + right;
        let delta = (s2 - fr.whole).norm();
        let local_err = delta / 15.0;
        let machine_floor = 1e-15 * s2.norm();
        if local_err <= fr.tol.max(machine_floor) || fr.depth >= 52 || evals.get() >= max_evals {
            total = total + s2 + (s2 - fr.whole).scale(1.0 / 15.0);
            err += local_err;
            if local_err > fr.tol {
                converged = false;
            }
        } else {
            stack.push(Frame {
                a: fr.a,
                b: m,
                fa: fr.fa,
                fm: flm,
                fb: fr.fm,
                whole: left,
                tol: 0.5 * fr.tol,
                depth: fr.depth + 1,
            });
            stack.push(Frame {
                a: m,
                b: fr.b,
                fa: fr.fm,
                fm: frm,
                fb: fr.fb,
                whole: right,
                tol: 0.5 * fr.tol,
                depth: fr.depth + 1,
            });
        }
    }

    QuadResult {
        value: total,
        err,
        evals: evals.get(),
        converged,
    }
}

/// Adaptive Simpson for integrands oscillating with (angular) frequency up
/// to `max_freq`: the interval is pre-chunked into quarter-periods so the
/// subdivision error estimate cannot alias across whole oscillations.
pub fn adaptive_oscillatory<T, F>(
    f: F,
    a: f64,
    b: f64,
    max_freq: f64,
    tol: f64,
    max_evals: usize,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let width = b - a;
    let quarter = if max_freq > 0.0 {
        std::f64::consts::FRAC_PI_2 / max_freq
    } else {
        f64::INFINITY
    };
    if !(width > quarter) {
        return adaptive(f, a, b, tol, max_evals);
    }
    let n = ((width / quarter).ceil() as usize).clamp(1, 4_000_000);
    let chunk_tol = tol / n as f64;
    let chunk_budget = (max_evals / n).max(60);
    let mut acc = QuadResult::<T>::zero();
    for k in 0..n {
        let lo = a + width * k as f64 / n as f64;
        let hi = a + width * (k + 1) as f64 / n as f64;
        let r = adaptive(&f, lo, hi, chunk_tol, chunk_budget);
        acc.merge(&r);
    }
    acc
}

/// Oscillatory integral over [a, b] (a > 0) whose local frequency decays
/// along the axis: dyadic subintervals starting at a, each pre-chunked by
/// the frequency at its own left end. Keeps the chunk count proportional to
/// the actual number of oscillations instead of the worst-case frequency.
pub fn adaptive_oscillatory_decaying<T, F, G>(
    f: F,
    a: f64,
    b: f64,
    freq_at: G,
    tol: f64,
    max_evals: usize,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
    G: Fn(f64) -> f64,
{
    debug_assert!(a > 0.0);
    let mut acc = QuadResult::<T>::zero();
    let mut lo = a;
    let mut k = 0;
    while lo < b && k < 2400 {
        let hi = (a * (2.0f64).powi(k + 1)).min(b);
        let r = adaptive_oscillatory(&f, lo, hi, freq_at(lo), tol / 8.0, max_evals / 8);
        acc.merge(&r);
        lo = hi;
        k += 1;
    }
    acc
}

/// Adaptive Simpson that fails when the requested tolerance is not met.
pub fn adaptive_checked<T, F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<QuadResult<T>, QuadError>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let r = adaptive(f, a, b, tol, max_evals);
    if !r.value.norm().is_finite() {
        return Err(QuadError::NonFiniteIntegrand { at: 0.5 * (a + b) });
    }
    if !r.converged && r.err > tol {
        return Err(QuadError::ToleranceNotMet {
            err: r.err,
            tol,
            budget: max_evals,
        });
    }
    Ok(r)
}

/// Outcome of an improper integral over (0, inf).
#[derive(Debug, Clone, Copy)]
pub enum Improper<T> {
    Converged(QuadResult<T>),
    /// Box doubling kept growing the partial integral; value is the partial
    /// sum at the point divergence was declared.
    Diverged {
        partial: f64,
        scale: f64,
    },
}

impl<T: QuadValue> Improper<T> {
    pub fn converged(self) -> Result<QuadResult<T>, QuadError> {
        match self {
            Improper::Converged(r) => Ok(r),
            Improper::Diverged { partial, scale } => {
                Err(QuadError::Divergent { partial, scale })
            }
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Improper::Diverged { .. })
    }
}

/// A doubling counts as a divergence strike when it grows the partial
/// integral by more than 1% while the panel contribution is not decaying
/// (a convergent power singularity also grows the partials for a while, but
/// its panel contributions shrink geometrically).
struct GrowthDetector {
    prev: f64,
    strikes: u32,
}

impl GrowthDetector {
    fn new() -> Self {
        GrowthDetector {
            prev: f64::INFINITY,
            strikes: 0,
        }
    }

    fn diverging(&mut self, delta: f64, total: f64) -> bool {
        let growing = delta > 0.01 * total.max(1e-300) && delta >= 0.999 * self.prev;
        self.prev = delta;
        if growing {
            self.strikes += 1;
        } else {
            self.strikes = 0;
        }
        self.strikes >= 2
    }
}

/// Integrate f over (0, inf) by dyadic panels [2^k, 2^(k+1)].
///
/// Panels extend right from [1, 2] and left from [1/2, 1]; extension stops on
/// either side once a panel contributes less than a slice of the tolerance,
/// and divergence is declared when the running total grows by more than 1%
/// on two consecutive doublings.
pub fn integrate_positive_axis<T, F>(f: F, tol: f64, max_evals: usize) -> Improper<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let panel_tol = tol / 64.0;
    let panel_budget = (max_evals / 64).max(200);
    let mut acc = QuadResult::<T>::zero();
    let mut norm_acc = 0.0f64;

    let mut detector = GrowthDetector::new();

    // Right sweep: [2^k, 2^{k+1}] for k = 0, 1, ...
    for k in 0..64 {
        let lo = (2.0f64).powi(k);
        let hi = 2.0 * lo;
        let r = adaptive(&f, lo, hi, panel_tol, panel_budget);
        let delta = r.value.norm();
        acc.merge(&r);
        norm_acc += delta;
        if delta <= panel_tol && k > 2 {
            break;
        }
        if detector.diverging(delta, acc.value.norm()) && k >= 8 {
            return Improper::Diverged {
                partial: acc.value.norm(),
                scale: hi,
            };
        }
        if acc.evals > max_evals {
            break;
        }
    }

    // Left sweep: [2^{-k-1}, 2^{-k}] for k = 0, 1, ...
    detector = GrowthDetector::new();
    for k in 0..72 {
        let hi = (2.0f64).powi(-k);
        let lo = 0.5 * hi;
        let r = adaptive(&f, lo, hi, panel_tol, panel_budget);
        let delta = r.value.norm();
        acc.merge(&r);
        if delta <= panel_tol && k > 2 {
            break;
        }
        if detector.diverging(delta, acc.value.norm()) && k >= 12 {
            return Improper::Diverged {
                partial: acc.value.norm(),
                scale: lo,
            };
        }
        if acc.evals > max_evals {
            break;
        }
    }
    let _ = norm_acc;

    Improper::Converged(acc)
}

/// Nested adaptive quadrature over an axis-aligned box.
///
/// Used as an independent oracle path (desk scale: dim <= 4). The inner
/// dimensions get a tolerance shrunk by the box width so the accumulated
/// bound stays meaningful.
pub fn integrate_box<T, F>(f: &F, lo: &[f64], hi: &[f64], tol: f64, max_evals: usize) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(&[f64]) -> T,
{
    assert_eq!(lo.len(), hi.len());
    assert!(!lo.is_empty());
    let mut point = vec![0.0; lo.len()];
    integrate_box_rec(f, lo, hi, tol, max_evals, &mut point, 0)
}

fn integrate_box_rec<T, F>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_evals: usize,
    point: &mut Vec<f64>,
    dim: usize,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(&[f64]) -> T,
{
    let evals = std::cell::Cell::new(0usize);
    let errs = std::cell::Cell::new(0.0f64);
    let point_cell = std::cell::RefCell::new(std::mem::take(point));
    let width = (hi[dim] - lo[dim]).abs().max(1.0);
    let inner_budget = (max_evals / 64).max(500);
    let r = adaptive(
        |x| {
            let mut p = point_cell.borrow_mut();
            p[dim] = x;
            if dim + 1 == lo.len() {
                evals.set(evals.get() + 1);
                f(&p)
            } else {
                drop(p);
                let mut owned = point_cell.borrow_mut();
                let mut v = std::mem::take(&mut *owned);
                drop(owned);
                let sub = integrate_box_rec(f, lo, hi, tol / width, inner_budget, &mut v, dim + 1);
                *point_cell.borrow_mut() = v;
                evals.set(evals.get() + sub.evals);
                errs.set(errs.get() + sub.err);
                sub.value
            }
        },
        lo[dim],
        hi[dim],
        tol,
        max_evals,
    );
    *point = point_cell.into_inner();
    QuadResult {
        value: r.value,
        err: r.err + errs.get() * width,
        evals: evals.get(),
        converged: r.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let r = adaptive(|x: f64| x * x * x * x, 0.0, 1.0, 1e-12, 100_000);
        assert_relative_eq!(r.value, 0.2, epsilon = 1e-11);
        assert!(r.converged);
    }

    #[test]
    fn oscillatory() {
        // int_0^10 cos(20 x) dx = sin(200)/20
        let r = adaptive(|x: f64| (20.0 * x).cos(), 0.0, 10.0, 1e-10, 1_000_000);
        assert_relative_eq!(r.value, (200.0f64).sin() / 20.0, epsilon = 1e-9);
    }

    #[test]
    fn complex_integrand() {
        // int_0^1 e^{ix} dx = sin(1) + i(1 - cos(1))
        let r = adaptive(
            |x: f64| Complex64::new(x.cos(), x.sin()),
            0.0,
            1.0,
            1e-12,
            100_000,
        );
        assert_relative_eq!(r.value.re, 1.0f64.sin(), epsilon = 1e-11);
        assert_relative_eq!(r.value.im, 1.0 - 1.0f64.cos(), epsilon = 1e-11);
    }

    #[test]
    fn improper_gaussian_tail() {
        // int_0^inf e^{-v} dv = 1, with an integrable singularity variant too.
        let r = integrate_positive_axis(|v: f64| (-v).exp(), 1e-10, 2_000_000)
            .converged()
            .unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-8);

        // int_0^inf v^{-1/2} e^{-v} dv = Gamma(1/2) = sqrt(pi)
        let r = integrate_positive_axis(|v: f64| v.powf(-0.5) * (-v).exp(), 1e-10, 4_000_000)
            .converged()
            .unwrap();
        assert_relative_eq!(r.value, std::f64::consts::PI.sqrt(), epsilon = 1e-7);
    }

    #[test]
    fn improper_divergent_tail() {
        // int_0^inf 1/(1+v) dv diverges logarithmically.
        let out = integrate_positive_axis(|v: f64| 1.0 / (1.0 + v), 1e-9, 4_000_000);
        assert!(out.is_divergent());
    }

    #[test]
    fn improper_divergent_origin() {
        // v^{-3/2} is not integrable at 0.
        let out = integrate_positive_axis(|v: f64| v.powf(-1.5) * (-v).exp(), 1e-9, 4_000_000);
        assert!(out.is_divergent());
    }

    #[test]
    fn box_2d() {
        // int_0^1 int_0^2 x y^2 dy dx = (1/2)(8/3)
        let r = integrate_box(
            &|p: &[f64]| p[0] * p[1] * p[1],
            &[0.0, 0.0],
            &[1.0, 2.0],
            1e-10,
            1_000_000,
        );
        assert_relative_eq!(r.value, 0.5 * 8.0 / 3.0, epsilon = 1e-8);
    }
}
