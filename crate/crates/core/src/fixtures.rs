//! Canonical compound-Poisson fixtures over curve-supported measures,
//! shared by the command-line scenarios and the acceptance suite.

use crate::scalar_law::ScalarLaw;
use crate::triplet::{LevyMeasure, LevyTriplet, QuadOpts, ScalarCurveMeasure, TripletError};

/// rate x law of (V, 1/V) with V = |standard Cauchy|: a bivariate jump law
/// whose box moments are finite strictly inside exponent 1 on each axis
/// while both first moments diverge.
pub fn hyperbola_cauchy(rate: f64) -> LevyMeasure {
    LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(ScalarLaw::AbsCauchy, rate, 1.0, 1.0))
}

/// rate x law of (V^gamma, V^-delta) with V positive stable of exponent
/// gamma: the first coordinate has no first moment, the second a full
/// moment sequence.
pub fn power_curve_positive_stable(rate: f64, gamma: f64, delta: f64) -> LevyMeasure {
    LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(
        ScalarLaw::PositiveStable { gamma },
        rate,
        gamma,
        delta,
    ))
}

/// rate x law of (V, 1/V) with V = sqrt|standard Cauchy|: moments finite
/// strictly inside exponent 2 on each axis.
pub fn hyperbola_sqrt_cauchy(rate: f64) -> LevyMeasure {
    LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(
        ScalarLaw::SqrtAbsCauchy,
        rate,
        1.0,
        1.0,
    ))
}

/// The compound-Poisson triplet generated by one of the curve measures.
pub fn cp_triplet(measure: LevyMeasure, opts: &QuadOpts) -> Result<LevyTriplet, TripletError> {
    LevyTriplet::compound_poisson(measure, opts)
}
