use super::*;
use crate::mixture::GFamily;
use crate::scalar_law::ScalarLaw;
use crate::special::StableParams;
use approx::assert_relative_eq;
use num_complex::Complex64;

fn atomic(atoms: &[(&[f64], f64)]) -> LevyMeasure {
    LevyMeasure::Atomic(AtomicMeasure {
        atoms: atoms.iter().map(|(x, w)| (x.to_vec(), *w)).collect(),
    })
}

fn identity(p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn zeros(p: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; p]; p]
}

fn abs_cauchy_curve(rate: f64) -> LevyMeasure {
    LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(ScalarLaw::AbsCauchy, rate, 1.0, 1.0))
}

fn opts() -> QuadOpts {
    QuadOpts::default()
}

#[test]
fn validate_single_atom() {
    // one atom at (1,1): |x|^2 = 2, integrand 2/3
    let t = LevyTriplet::new(
        vec![0.0, 0.0],
        identity(2),
        atomic(&[(&[1.0, 1.0], 1.0)]),
    );
    let report = validate_triplet(&t, &opts()).unwrap();
    assert!(report.is_valid(), "{:?}", report.violations);
    assert_relative_eq!(report.integrability_value.unwrap(), 2.0 / 3.0, epsilon = 1e-14);
}

#[test]
fn validate_rejects_origin_atom() {
    let t = LevyTriplet::new(
        vec![0.0, 0.0],
        identity(2),
        atomic(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0)]),
    );
    let report = validate_triplet(&t, &opts()).unwrap();
    assert!(report.violations.iter().any(|v| v.contains("origin")));
}

#[test]
fn validate_rejects_asymmetric_form_and_nonpsd() {
    let mut t = LevyTriplet::new(vec![0.0, 0.0], identity(2), atomic(&[(&[1.0, 1.0], 1.0)]));
    t.gaussian_form[0][1] = 0.5;
    let report = validate_triplet(&t, &opts()).unwrap();
    assert!(report.violations.iter().any(|v| v.contains("symmetric")));

    let t2 = LevyTriplet::new(
        vec![0.0, 0.0],
        vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        atomic(&[(&[1.0, 1.0], 1.0)]),
    );
    let report2 = validate_triplet(&t2, &opts()).unwrap();
    assert!(report2
        .violations
        .iter()
        .any(|v| v.contains("semidefinite")));
}

#[test]
fn validate_non_finite_input() {
    let t = LevyTriplet::new(
        vec![f64::NAN, 0.0],
        identity(2),
        atomic(&[(&[1.0, 1.0], 1.0)]),
    );
    assert!(matches!(
        validate_triplet(&t, &opts()),
        Err(TripletError::NonFiniteInput(_))
    ));
}

#[test]
fn validate_mixture_density_against_riemann_oracle() {
    // alpha = 0.5, g = e^{-v}, p = 2, gamma = 2: the integrability integral
    // cross-checked against an independent fine-grid Riemann sum.
    let spec = crate::mixture::MixtureSpec::new(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        vec![StableParams::new(2.0, 1.0).unwrap()],
    )
    .unwrap();
    let t = LevyTriplet::new(
        vec![0.0, 0.0],
        zeros(2),
        LevyMeasure::MixtureDensity {
            spec: spec.clone(),
            norm_window: NormWindow::Full,
        },
    );
    let report = validate_triplet(&t, &opts()).unwrap();
    assert!(report.is_valid(), "{:?}", report.violations);
    let quadrature = report.integrability_value.unwrap();

    // Independent fine-grid Riemann sum on a graded grid: v = s^2 flattens
    // the v^{-1/2} edge behavior of the reduced integrand, y2 = sqrt(v) z
    // absorbs the component scaling. h dy = v^{-3/2} e^{-v} phi(z) dz dv with
    // phi the N(0,2) density; integrand |y|^2/(1+|y|^2).
    let (ns, nz) = (4000, 6000);
    let (s_max, z_max) = (40.0f64.sqrt(), 14.0f64);
    let ds = s_max / ns as f64;
    let dz = 2.0 * z_max / nz as f64;
    let mut riemann = 0.0;
    for i in 0..ns {
        let s = (i as f64 + 0.5) * ds;
        let v = s * s;
        let wv = v.powf(-1.5) * (-v).exp() * 2.0 * s;
        let mut inner = 0.0;
        for j in 0..nz {
            let z = -z_max + (j as f64 + 0.5) * dz;
            let phi = (-z * z / 4.0).exp() / (2.0 * std::f64::consts::PI.sqrt());
            let n2 = v * v + v * z * z;
            inner += phi * n2 / (1.0 + n2) * dz;
        }
        riemann += wv * inner * ds;
    }
    assert_relative_eq!(quadrature, riemann, epsilon = 2e-6);
    // frozen from a 20-digit evaluation of the same integral
    assert_relative_eq!(quadrature, 2.1223723529005, epsilon = 1e-6);
}

#[test]
fn split_partitions_atoms_by_norm() {
    // 2 delta_(3,0) + 5 delta_(0.1,0), tau = 1: rate 2, small mass 5
    let t = LevyTriplet::new(
        vec![0.0, 0.0],
        zeros(2),
        atomic(&[(&[3.0, 0.0], 2.0), (&[0.1, 0.0], 5.0)]),
    );
    let split = split_truncate(&t, 1.0, &opts()).unwrap();
    assert_eq!(split.rate, 2.0);
    let (small_mass, _) = integrals::total_mass(&split.nu2, &opts()).unwrap();
    assert_eq!(small_mass, 5.0);
}

#[test]
fn split_curve_entirely_above_unit_norm() {
    // (V, 1/V) has |x|^2 = v^2 + v^{-2} >= 2, so tau = 1 keeps everything.
    let t = LevyTriplet::compound_poisson(abs_cauchy_curve(1.7), &opts()).unwrap();
    let split = split_truncate(&t, 1.0, &opts()).unwrap();
    assert_relative_eq!(split.rate, 1.7, epsilon = 1e-9);
    let (small_mass, _) = integrals::total_mass(&split.nu2, &opts()).unwrap();
    assert!(small_mass.abs() < 1e-12);
}

#[test]
fn split_curve_straddling_tau() {
    // tau = 2: the window v in (lo, hi) around 1 falls below norm 2.
    let t = LevyTriplet::compound_poisson(abs_cauchy_curve(1.0), &opts()).unwrap();
    let split = split_truncate(&t, 2.0, &opts()).unwrap();
    match &split.nu2 {
        LevyMeasure::ScalarCurve(c) => match c.window {
            VWindow::Inside { lo, hi } => {
                // norm^2 = v^2 + v^-2 = 4 at the boundary
                assert_relative_eq!(lo * lo + 1.0 / (lo * lo), 4.0, epsilon = 1e-9);
                assert_relative_eq!(hi * hi + 1.0 / (hi * hi), 4.0, epsilon = 1e-9);
                assert!(lo < 1.0 && hi > 1.0);
            }
            ref w => panic!("unexpected window {w:?}"),
        },
        m => panic!("unexpected measure {m:?}"),
    }
    // masses partition the total
    let (m1, _) = integrals::total_mass(&split.nu1, &opts()).unwrap();
    let (m2, _) = integrals::total_mass(&split.nu2, &opts()).unwrap();
    assert_relative_eq!(m1 + m2, 1.0, epsilon = 1e-9);
    assert_relative_eq!(split.rate, m1, epsilon = 1e-12);
}

#[test]
fn split_with_huge_tau_moves_everything_to_small_part() {
    let t = LevyTriplet::new(
        vec![0.3, -0.2],
        identity(2),
        atomic(&[(&[3.0, 0.0], 2.0), (&[0.1, 0.0], 5.0)]),
    );
    let split = split_truncate(&t, 1e9, &opts()).unwrap();
    assert_eq!(split.rate, 0.0);
    let (m2, _) = integrals::total_mass(&split.nu2, &opts()).unwrap();
    assert_eq!(m2, 7.0);
    // b = a + int x |x|^2/(1+|x|^2) d nu2, nu1 term zero
    let expected_b0 = 0.3 + 2.0 * 3.0 * 9.0 / 10.0 + 5.0 * 0.1 * 0.01 / 1.01;
    assert_relative_eq!(split.shifted_drift[0], expected_b0, epsilon = 1e-12);
    assert_relative_eq!(split.shifted_drift[1], -0.2, epsilon = 1e-12);
}

#[test]
fn split_rejects_bad_tau() {
    let t = LevyTriplet::new(vec![0.0, 0.0], zeros(2), atomic(&[(&[1.0, 1.0], 1.0)]));
    assert!(matches!(
        split_truncate(&t, 0.0, &opts()),
        Err(TripletError::TauNonPositive(_))
    ));
    assert!(matches!(
        split_truncate(&t, -1.0, &opts()),
        Err(TripletError::TauNonPositive(_))
    ));
}

#[test]
fn char_fn_degenerate_and_gaussian() {
    // nu = 0, Q = 0, a = 0: phi = 1
    let t = LevyTriplet::new(vec![0.0], zeros(1), atomic(&[]));
    let v = char_fn(&t, &[1.7], &opts()).unwrap();
    assert_relative_eq!(v.re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(v.im, 0.0, epsilon = 1e-14);

    // standard Gaussian: Q = I (p=1), u = 1: e^{-1/2}
    let t = LevyTriplet::new(vec![0.0], identity(1), atomic(&[]));
    let v = char_fn(&t, &[1.0], &opts()).unwrap();
    assert_relative_eq!(v.re, (-0.5f64).exp(), epsilon = 1e-14);
}

#[test]
fn char_fn_atomic_closed_form() {
    // CP with one atom x0: phi(u) = exp(w (e^{i<u,x0>} - 1))
    let measure = atomic(&[(&[1.0, 2.0], 0.7)]);
    let t = LevyTriplet::compound_poisson(measure, &opts()).unwrap();
    let u = [0.4, -0.3];
    let phase = 0.4 * 1.0 - 0.3 * 2.0;
    let expected = (Complex64::new(0.0, phase).exp() - Complex64::new(1.0, 0.0)) * 0.7;
    let got = char_fn(&t, &u, &opts()).unwrap();
    assert_relative_eq!(got.re, expected.exp().re, epsilon = 1e-12);
    assert_relative_eq!(got.im, expected.exp().im, epsilon = 1e-12);
}

#[test]
fn char_fn_curve_vs_monte_carlo() {
    // CP of the (V, 1/V) curve at u = (1, 0): checked against the empirical
    // characteristic function of compound-Poisson draws.
    let t = LevyTriplet::compound_poisson(abs_cauchy_curve(1.0), &opts()).unwrap();
    let u = [1.0, 0.0];
    let analytic = char_fn(&t, &u, &opts()).unwrap();

    let n = 1_000_000usize;
    let rows = sample_finite_activity(&t, n, 123, &opts()).unwrap();
    let (mut re, mut im, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
    for row in &rows {
        let phase = row[0];
        let (c, s) = (phase.cos(), phase.sin());
        re += c;
        im += s;
        re2 += c * c;
        im2 += s * s;
    }
    let nf = n as f64;
    let emp = Complex64::new(re / nf, im / nf);
    let sd_re = ((re2 / nf - (re / nf).powi(2)) / nf).sqrt();
    let sd_im = ((im2 / nf - (im / nf).powi(2)) / nf).sqrt();
    assert!(
        (emp.re - analytic.re).abs() < 3.0 * sd_re + 1e-4,
        "re: emp {}, analytic {}",
        emp.re,
        analytic.re
    );
    assert!(
        (emp.im - analytic.im).abs() < 3.0 * sd_im + 1e-4,
        "im: emp {}, analytic {}",
        emp.im,
        analytic.im
    );
}

#[test]
fn reconstruction_two_atoms() {
    // tau between the atom norms; factored form must match the direct form
    // on a u-grid to 1e-9.
    let t = LevyTriplet::new(
        vec![0.2, -0.4],
        identity(2),
        atomic(&[(&[3.0, 0.4], 0.8), (&[0.2, -0.1], 1.9)]),
    );
    let split = split_truncate(&t, 1.0, &opts()).unwrap();
    for k in 0..20 {
        let angle = k as f64 * std::f64::consts::PI / 10.0;
        let u = [1.3 * angle.cos(), 0.7 * angle.sin()];
        let direct = char_fn(&t, &u, &opts()).unwrap();
        let factored = char_fn_from_split(&split, &t.gaussian_form, &u, &opts()).unwrap();
        assert!(
            (direct - factored).norm() < 1e-9,
            "u = {u:?}: direct {direct}, factored {factored}"
        );
    }
}

#[test]
fn reconstruction_empty_measure() {
    let t = LevyTriplet::new(vec![0.5], identity(1), atomic(&[]));
    let split = split_truncate(&t, 1.0, &opts()).unwrap();
    for &u in &[0.3, -2.0] {
        let direct = char_fn(&t, &[u], &opts()).unwrap();
        let factored = char_fn_from_split(&split, &t.gaussian_form, &[u], &opts()).unwrap();
        assert!((direct - factored).norm() < 1e-12);
    }
}

#[test]
fn reconstruction_positive_stable_curve() {
    // (V_gamma^gamma, V_gamma^-delta) pattern, tau = 1, u = (0, 1): the split
    // evaluation agrees with the direct one within quadrature tolerance.
    let curve = LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(
        ScalarLaw::PositiveStable { gamma: 0.5 },
        1.0,
        0.5,
        1.0,
    ));
    let t = LevyTriplet::compound_poisson(curve, &opts()).unwrap();
    let split = split_truncate(&t, 1.0, &opts()).unwrap();
    let u = [0.0, 1.0];
    let direct = char_fn(&t, &u, &opts()).unwrap();
    let factored = char_fn_from_split(&split, &t.gaussian_form, &u, &opts()).unwrap();
    assert!(
        (direct - factored).norm() < 2e-3,
        "direct {direct}, factored {factored}"
    );
}

#[test]
fn char_fn_modulus_bounded() {
    let fixtures = [
        LevyTriplet::new(
            vec![0.2, -0.4],
            identity(2),
            atomic(&[(&[3.0, 0.4], 0.8), (&[0.2, -0.1], 1.9)]),
        ),
        LevyTriplet::compound_poisson(abs_cauchy_curve(0.6), &opts()).unwrap(),
    ];
    for t in &fixtures {
        for k in 0..10 {
            let u = [(k as f64) * 0.7 - 3.0, (k as f64) * 0.3 - 1.0];
            let v = char_fn(t, &u, &opts()).unwrap();
            assert!(v.norm() <= 1.0 + 1e-9, "|phi({u:?})| = {}", v.norm());
        }
    }
}

#[test]
fn integrability_forms_agree() {
    // Eq (2.2)-form and the truncated (2.3)-form must agree on finiteness
    // for tau in {0.5, 1, 2}; both are finite for these fixtures.
    let fixtures = [
        atomic(&[(&[3.0, 0.4], 0.8), (&[0.2, -0.1], 1.9)]),
        abs_cauchy_curve(1.0),
    ];
    for m in &fixtures {
        let (v22, _) = integrals::integrability_integral(m, &opts()).unwrap();
        assert!(v22.is_finite());
        for tau in [0.5, 1.0, 2.0] {
            let (v23, _) = integrals::truncated_norm_integral(m, tau, &opts()).unwrap();
            assert!(
                v23.is_finite() && v23 >= 0.0,
                "tau={tau}: truncated integral {v23}"
            );
        }
    }
}

#[test]
fn sampling_deterministic() {
    let t = LevyTriplet::new(
        vec![0.1, 0.2],
        identity(2),
        atomic(&[(&[1.0, -1.0], 1.3)]),
    );
    let a = sample_finite_activity(&t, 32, 4, &opts()).unwrap();
    let b = sample_finite_activity(&t, 32, 4, &opts()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip() {
    let t = LevyTriplet::new(
        vec![0.0, 1.5],
        vec![vec![2.0, 0.5], vec![0.5, 1.0]],
        LevyMeasure::ScalarCurve(ScalarCurveMeasure::new(
            ScalarLaw::SqrtAbsCauchy,
            2.5,
            1.0,
            1.0,
        )),
    );
    let json = serde_json::to_string(&t).unwrap();
    assert!(json.contains("\"variant\":\"scalar_curve\""));
    assert!(json.contains("\"dim\":2"));
    let back: LevyTriplet = serde_json::from_str(&json).unwrap();
    assert_eq!(t, back);

    let t2 = LevyTriplet::new(
        vec![0.0, 0.0],
        zeros(2),
        LevyMeasure::MixtureDensity {
            spec: crate::mixture::MixtureSpec::new(
                0.5,
                GFamily::ExpDecay {
                    level: 1.0,
                    rate: 1.0,
                },
                vec![StableParams::new(2.0, 1.0).unwrap()],
            )
            .unwrap(),
            norm_window: NormWindow::Full,
        },
    );
    let back2: LevyTriplet = serde_json::from_str(&serde_json::to_string(&t2).unwrap()).unwrap();
    assert_eq!(t2, back2);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_atoms() -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
        proptest::collection::vec(
            (
                proptest::collection::vec(-5.0f64..5.0, 2),
                0.01f64..3.0,
            ),
            1..6,
        )
        .prop_map(|atoms| {
            atoms
                .into_iter()
                .map(|(mut x, w)| {
                    // keep atoms away from the origin
                    if x.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-3 {
                        x[0] += 1.0;
                    }
                    (x, w)
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn split_conserves_mass(atoms in arb_atoms(), tau in 0.2f64..4.0) {
            let total: f64 = atoms.iter().map(|(_, w)| w).sum();
            let t = LevyTriplet::new(
                vec![0.0, 0.0],
                zeros(2),
                LevyMeasure::Atomic(AtomicMeasure { atoms }),
            );
            let split = split_truncate(&t, tau, &opts()).unwrap();
            let (m1, _) = integrals::total_mass(&split.nu1, &opts()).unwrap();
            let (m2, _) = integrals::total_mass(&split.nu2, &opts()).unwrap();
            prop_assert!((m1 + m2 - total).abs() < 1e-12);
            prop_assert!((split.rate - m1).abs() < 1e-12);
        }

        #[test]
        fn split_reconstructs_char_fn(atoms in arb_atoms(), tau in 0.2f64..4.0,
                                      u0 in -2.0f64..2.0, u1 in -2.0f64..2.0) {
            let t = LevyTriplet::new(
                vec![0.3, -0.1],
                identity(2),
                LevyMeasure::Atomic(AtomicMeasure { atoms }),
            );
            let split = split_truncate(&t, tau, &opts()).unwrap();
            let u = [u0, u1];
            let direct = char_fn(&t, &u, &opts()).unwrap();
            let factored = char_fn_from_split(&split, &t.gaussian_form, &u, &opts()).unwrap();
            prop_assert!((direct - factored).norm() < 1e-9);
            prop_assert!(direct.norm() <= 1.0 + 1e-9);
        }
    }
}
