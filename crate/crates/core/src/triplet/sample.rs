//! Exact sampling of finite-activity triplets: Gaussian part plus a
//! compound-Poisson sum of measure jumps, with the drift compensator
//! unwound so the draws match the characteristic function.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{integrals, LevyMeasure, LevyTriplet, QuadOpts, TripletError, VWindow};
use crate::rng::seed_rng;

/// n i.i.d. draws of the law generated by the triplet, available when the
/// measure has finite total mass (atomic, tabulated, or unwindowed curve).
pub fn sample_finite_activity(
    t: &LevyTriplet,
    n: usize,
    seed: u64,
    opts: &QuadOpts,
) -> Result<Vec<Vec<f64>>, TripletError> {
    let jumps = JumpSampler::for_measure(&t.measure)?;
    let (mass, _) = integrals::total_mass(&t.measure, opts)?;
    let comp = integrals::compensator_drift(&t.measure, t.dim, opts)?;
    let shift: Vec<f64> = t.drift.iter().zip(&comp).map(|(a, c)| a - c).collect();

    // PSD Gaussian factor via the symmetric eigendecomposition (the form may
    // be singular, so a plain Cholesky is not enough).
    let m = t.gaussian_matrix();
    let eigen = m.symmetric_eigen();
    let mut factor = DMatrix::<f64>::zeros(t.dim, t.dim);
    let mut has_gaussian = false;
    for j in 0..t.dim {
        let l = eigen.eigenvalues[j].max(0.0);
        if l > 0.0 {
            has_gaussian = true;
        }
        let col = eigen.eigenvectors.column(j) * l.sqrt();
        factor.set_column(j, &col);
    }

    let mut rng = seed_rng(seed);
    let poisson = if mass > 0.0 {
        Some(rand_distr::Poisson::new(mass).map_err(|e| {
            TripletError::Unsupported(format!("Poisson rate {mass}: {e}"))
        })?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = shift.clone();
        if has_gaussian {
            let z: Vec<f64> = (0..t.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            for i in 0..t.dim {
                let mut acc = 0.0;
                for j in 0..t.dim {
                    acc += factor[(i, j)] * z[j];
                }
                row[i] += acc;
            }
        }
        if let Some(p) = &poisson {
            let count = p.sample(&mut rng) as usize;
            for _ in 0..count {
                jumps.add_jump(&mut row, &mut rng);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

enum JumpSampler<'a> {
    Categorical {
        cumulative: Vec<f64>,
        points: Vec<&'a [f64]>,
    },
    Curve(&'a super::ScalarCurveMeasure),
}

impl<'a> JumpSampler<'a> {
    fn for_measure(measure: &'a LevyMeasure) -> Result<Self, TripletError> {
        match measure {
            LevyMeasure::Atomic(a) => {
                let mut cumulative = Vec::with_capacity(a.atoms.len());
                let mut acc = 0.0;
                let mut points = Vec::with_capacity(a.atoms.len());
                for (x, w) in &a.atoms {
                    acc += w;
                    cumulative.push(acc);
                    points.push(x.as_slice());
                }
                Ok(JumpSampler::Categorical { cumulative, points })
            }
            LevyMeasure::Tabulated(t) => {
                let mut cumulative = Vec::with_capacity(t.cells.len());
                let mut acc = 0.0;
                let mut points = Vec::with_capacity(t.cells.len());
                for (x, d) in &t.cells {
                    acc += d * t.cell_volume;
                    cumulative.push(acc);
                    points.push(x.as_slice());
                }
                Ok(JumpSampler::Categorical { cumulative, points })
            }
            LevyMeasure::ScalarCurve(c) => {
                if !matches!(c.window, VWindow::Full) {
                    return Err(TripletError::Unsupported(
                        "sampling a windowed curve measure".into(),
                    ));
                }
                Ok(JumpSampler::Curve(c))
            }
            LevyMeasure::MixtureDensity { .. } => Err(TripletError::Unsupported(
                "density measures have infinite activity; use the mixture sampler".into(),
            )),
        }
    }

    fn add_jump<R: Rng>(&self, row: &mut [f64], rng: &mut R) {
        match self {
            JumpSampler::Categorical { cumulative, points } => {
                let total = *cumulative.last().unwrap_or(&0.0);
                if total <= 0.0 {
                    return;
                }
                let target = rng.random::<f64>() * total;
                let idx = match cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.min(points.len() - 1),
                };
                for (r, p) in row.iter_mut().zip(points[idx]) {
                    *r += p;
                }
            }
            JumpSampler::Curve(c) => {
                let v = c.law.sample(rng);
                let p = c.point(v);
                row[0] += p[0];
                row[1] += p[1];
            }
        }
    }
}
