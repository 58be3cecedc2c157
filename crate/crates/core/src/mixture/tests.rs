use super::*;
use approx::assert_relative_eq;
use num_complex::Complex64;
use statrs::function::gamma::gamma as gamma_fn;
use std::f64::consts::PI;

fn spec(alpha: f64, g: GFamily, gammas: &[(f64, f64)]) -> MixtureSpec {
    let comps = gammas
        .iter()
        .map(|&(g, s)| StableParams::new(g, s).unwrap())
        .collect();
    MixtureSpec::new(alpha, g, comps).unwrap()
}

/// Closed form of the Lévy exponent int (e^{sv}-1) v^{-(alpha+1)} g0 e^{-bv} dv:
///   alpha in (0,1): g0 Gamma(1-alpha)/alpha * (b^alpha - (b-s)^alpha)
///   alpha = 0, b>0: g0 * log(b/(b-s))
fn exp_decay_exponent(alpha: f64, g0: f64, b: f64, s: Complex64) -> Complex64 {
    if alpha == 0.0 {
        return -((Complex64::new(b, 0.0) - s) / b).ln() * g0;
    }
    let c = g0 * gamma_fn(1.0 - alpha) / alpha;
    let b_pow = Complex64::new(b, 0.0).powf(alpha);
    c * (b_pow - (Complex64::new(b, 0.0) - s).powf(alpha))
}

fn s_point(spec: &MixtureSpec, t: &[f64]) -> Complex64 {
    let decay: f64 = spec
        .components
        .iter()
        .zip(&t[1..])
        .map(|(c, &ti)| c.scale * ti.abs().powf(c.gamma))
        .sum();
    Complex64::new(-decay, t[0])
}

#[test]
fn char_fn_at_zero_is_one() {
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    let v = mixture_char_fn(&sp, &[0.0, 0.0], 1e-9, 2_000_000).unwrap();
    assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
    assert_relative_eq!(v.im, 0.0, epsilon = 1e-12);
}

#[test]
fn char_fn_matches_closed_form_exponential_g() {
    // inverse-Gaussian-type mixing: alpha = 1/2, g = e^{-v}
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    for t in [
        vec![0.7, 0.3],
        vec![-1.2, 1.0],
        vec![0.0, 2.0],
        vec![3.0, 0.1],
    ] {
        let got = mixture_log_char_fn(&sp, &t, 1e-9, 4_000_000).unwrap();
        let expected = exp_decay_exponent(0.5, 1.0, 1.0, s_point(&sp, &t));
        assert_relative_eq!(got.re, expected.re, epsilon = 1e-7);
        assert_relative_eq!(got.im, expected.im, epsilon = 1e-7);
    }
}

#[test]
fn char_fn_matches_closed_form_gamma_mixing() {
    // alpha = 0, g0 = 1.5, rate 2: V ~ Gamma(1.5, rate 2)
    let sp = spec(
        0.0,
        GFamily::ExpDecay {
            level: 1.5,
            rate: 2.0,
        },
        &[(1.3, 0.8), (1.0, 0.5)],
    );
    for t in [vec![0.5, 0.4, -0.2], vec![-2.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]] {
        let got = mixture_log_char_fn(&sp, &t, 1e-9, 4_000_000).unwrap();
        let expected = exp_decay_exponent(0.0, 1.5, 2.0, s_point(&sp, &t));
        assert_relative_eq!(got.re, expected.re, epsilon = 1e-7);
        assert_relative_eq!(got.im, expected.im, epsilon = 1e-7);
    }
}

#[test]
fn char_fn_matches_closed_form_flat_g() {
    // stable mixing: alpha = 0.6, g constant 0.9 (b = 0 limit):
    // exponent = -g0 Gamma(1-alpha)/alpha * (-s)^alpha
    let sp = spec(0.6, GFamily::Constant { level: 0.9 }, &[(1.5, 1.0)]);
    for t in [vec![1.0, 0.5], vec![0.3, -1.5], vec![2.0, 0.0], vec![1.0, 0.0]] {
        let got = mixture_log_char_fn(&sp, &t, 1e-8, 6_000_000).unwrap();
        let s = s_point(&sp, &t);
        let expected = -0.9 * gamma_fn(0.4) / 0.6 * (-s).powf(0.6);
        assert_relative_eq!(got.re, expected.re, epsilon = 1e-6);
        assert_relative_eq!(got.im, expected.im, epsilon = 1e-6);
    }
}

#[test]
fn char_fn_modulus_bounded() {
    let sp = spec(
        0.3,
        GFamily::ExpDecay {
            level: 2.0,
            rate: 0.7,
        },
        &[(1.7, 0.4), (1.0, 1.2)],
    );
    for t in [
        vec![0.0, 0.0, 0.0],
        vec![5.0, -3.0, 2.0],
        vec![-10.0, 0.01, 0.0],
    ] {
        let v = mixture_char_fn(&sp, &t, 1e-8, 4_000_000).unwrap();
        assert!(v.norm() <= 1.0 + 1e-9, "|phi({t:?})| = {}", v.norm());
    }
}

#[test]
fn marginal_in_first_coordinate_matches_mixing_transform() {
    // t = (t1, 0): the oscillatory-tail path with the by-parts correction.
    let sp = spec(0.6, GFamily::Constant { level: 0.9 }, &[(1.5, 1.0)]);
    let t1 = 1.3;
    let got = mixture_log_char_fn(&sp, &[t1, 0.0], 1e-8, 6_000_000).unwrap();
    let expected = -0.9 * gamma_fn(0.4) / 0.6 * Complex64::new(0.0, -t1).powf(0.6);
    assert_relative_eq!(got.re, expected.re, epsilon = 1e-6);
    assert_relative_eq!(got.im, expected.im, epsilon = 1e-6);
}

#[test]
fn levy_density_formula_pointwise() {
    // alpha = 0, g = 1, one Cauchy component: h(1, 0) = f_cauchy(0) = 1/pi.
    // (not an integrable spec; pointwise density probe only)
    let sp = MixtureSpec::new_unchecked(
        0.0,
        GFamily::Constant { level: 1.0 },
        vec![StableParams::new(1.0, 1.0).unwrap()],
    );
    let h = mixture_levy_density(&sp, &[1.0, 0.0]).unwrap();
    assert_relative_eq!(h, 1.0 / PI, epsilon = 1e-12);

    // density vanishes off the half-space
    assert_eq!(mixture_levy_density(&sp, &[-1.0, 3.0]).unwrap(), 0.0);
    assert_eq!(mixture_levy_density(&sp, &[0.0, 3.0]).unwrap(), 0.0);
}

#[test]
fn levy_density_scaling_structure() {
    // h(v, y2) = v^{-(a+1)} g(v) f(y2 / v^{1/gamma}) v^{-1/gamma}
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    let v: f64 = 0.7;
    let y2 = 0.3;
    let comp = &sp.components[0];
    let f = crate::special::symmetric_stable_pdf(comp, y2 / v.sqrt()).unwrap();
    let expected = v.powf(-1.5) * (-v).exp() * f / v.sqrt();
    let got = mixture_levy_density(&sp, &[v, y2]).unwrap();
    assert_relative_eq!(got, expected, epsilon = 1e-12);
}

#[test]
fn fubini_log_char_fn_vs_density_integral() {
    // p = 2, gamma = 2: integrate (e^{i<t,y>} - 1) h(y) over a v-window
    // (exact in the transverse direction by Gauss-weight substitution) and
    // compare with the same-window contribution to the 1-D exponent.
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    let t = [1.0, 1.0];
    let (v_lo, v_hi) = (1e-4, 40.0);

    // 2-D quadrature over (v, x) with y2 = sqrt(v) x (Jacobian sqrt(v)),
    // evaluating h pointwise; transverse range wide enough for the Gaussian.
    let x_max = 10.0;
    let two_d = quad::integrate_box(
        &|p: &[f64]| {
            let (v, x) = (p[0], p[1]);
            let y = [v, v.sqrt() * x];
            let h = mixture_levy_density(&sp, &y).unwrap();
            let phase = t[0] * y[0] + t[1] * y[1];
            // real part of (e^{i phase} - 1) h, times the Jacobian
            (phase.cos() - 1.0) * h * v.sqrt()
        },
        &[v_lo, -x_max],
        &[v_hi, x_max],
        1e-8,
        40_000_000,
    );
    // windowed 1-D exponent
    let s = s_point(&sp, &t);
    let one_d = quad::adaptive(
        |w: f64| {
            let v = w.exp();
            (((s * v).exp() - Complex64::new(1.0, 0.0)) * (v.powf(-0.5) * (-v).exp())).re
        },
        v_lo.ln(),
        v_hi.ln(),
        1e-10,
        4_000_000,
    );
    assert_relative_eq!(two_d.value, one_d.value, epsilon = 2e-5);
}

#[test]
fn sample_deterministic_and_positive_first_column() {
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0), (1.0, 0.5)],
    );
    let a = mixture_sample(&sp, 50, 3).unwrap();
    let b = mixture_sample(&sp, 50, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|row| row[0] > 0.0 && row.len() == 3));
}

#[test]
fn gamma_mixing_sampler_moments() {
    // alpha = 0, g = 2 e^{-1.5 v}: V ~ Gamma(shape 2, rate 1.5)
    let sp = spec(
        0.0,
        GFamily::ExpDecay {
            level: 2.0,
            rate: 1.5,
        },
        &[(2.0, 1.0)],
    );
    let v = sample_mixing(&sp, 200_000, 5, &SampleOptions::default()).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean - 2.0 / 1.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn inverse_gaussian_mixing_sampler_moments() {
    // alpha = 1/2, g = 0.8 e^{-2v}: V ~ IG(mean sqrt(pi) 0.8 / sqrt(2), 2 pi 0.64)
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 0.8,
            rate: 2.0,
        },
        &[(2.0, 1.0)],
    );
    let v = sample_mixing(&sp, 200_000, 6, &SampleOptions::default()).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let expected = PI.sqrt() * 0.8 / 2.0f64.sqrt();
    assert!(
        (mean - expected).abs() < 0.01,
        "mean {mean} vs {expected}"
    );
}

#[test]
fn compound_poisson_mixing_mean() {
    // alpha = 0.3, g = e^{-v}: no exact sampler; the subordinator mean is
    // int v^{-alpha} g(v) dv = Gamma(0.7).
    let sp = spec(
        0.3,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    let v = sample_mixing(&sp, 300_000, 7, &SampleOptions::default()).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let expected = gamma_fn(0.7);
    assert!(
        (mean - expected).abs() < 0.02,
        "mean {mean} vs {expected}"
    );
}

#[test]
fn unsupported_mixing_without_approximation() {
    let sp = spec(
        0.3,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0)],
    );
    let opts = SampleOptions {
        allow_cp_approximation: false,
        ..Default::default()
    };
    assert!(matches!(
        mixture_sample_with(&sp, 10, 0, &opts),
        Err(MixtureError::UnsupportedMixing(_))
    ));
}

#[test]
fn sample_char_fn_agrees_with_quadrature() {
    // stable mixing (alpha 0.5, flat g), one Gaussian component
    let sp = spec(0.5, GFamily::Constant { level: 1.0 }, &[(2.0, 1.0)]);
    let rows = mixture_sample(&sp, 200_000, 11).unwrap();
    for t in [vec![0.4, 0.3], vec![0.2, 0.9]] {
        let analytic = mixture_char_fn(&sp, &t, 1e-8, 6_000_000).unwrap();
        let (mut re, mut im) = (0.0, 0.0);
        for row in &rows {
            let phase = t[0] * row[0] + t[1] * row[1];
            re += phase.cos();
            im += phase.sin();
        }
        let n = rows.len() as f64;
        let emp = Complex64::new(re / n, im / n);
        assert!(
            (emp - analytic).norm() < 0.008,
            "t={t:?}: emp {emp}, analytic {analytic}"
        );
    }
}

#[test]
fn conditional_scaling_of_components() {
    // given V = v, column 2 / sqrt(v) is N(0, 2 lambda)
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 0.7)],
    );
    let rows = mixture_sample(&sp, 200_000, 13).unwrap();
    let standardized: Vec<f64> = rows.iter().map(|r| r[1] / r[0].sqrt()).collect();
    let var = standardized.iter().map(|x| x * x).sum::<f64>() / standardized.len() as f64;
    assert!((var - 1.4).abs() < 0.02, "var {var} vs 1.4");
}

#[test]
fn drop_component_reduces_dimension() {
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0), (1.5, 0.3)],
    );
    assert_eq!(sp.dim(), 3);
    let sub = sp.drop_component(1).unwrap();
    assert_eq!(sub.dim(), 2);
    assert_eq!(sub.components[0].gamma, 2.0);
    assert!(sp.drop_component(5).is_err());
}

#[test]
fn margin_arithmetic() {
    // alpha 0.5, p = 3, gammas (2,2): margin = 0.5 - 3 + 1 + 1 = -0.5
    let sp = spec(
        0.5,
        GFamily::ExpDecay {
            level: 1.0,
            rate: 1.0,
        },
        &[(2.0, 1.0), (2.0, 1.0)],
    );
    assert_relative_eq!(sp.margin(), -0.5, epsilon = 1e-14);
    assert!(sp.hypothesis_ok());
}

#[test]
fn invalid_specs_rejected() {
    // alpha = 0 with flat g is not integrable
    assert!(MixtureSpec::new(
        0.0,
        GFamily::Constant { level: 1.0 },
        vec![StableParams::new(2.0, 1.0).unwrap()]
    )
    .is_err());
    // alpha out of range
    assert!(MixtureSpec::new(
        1.0,
        GFamily::Constant { level: 1.0 },
        vec![StableParams::new(2.0, 1.0).unwrap()]
    )
    .is_err());
    // increasing table
    assert!(MixtureSpec::new(
        0.5,
        GFamily::TabulatedDecreasing {
            grid: vec![(0.5, 1.0), (1.0, 2.0)]
        },
        vec![StableParams::new(2.0, 1.0).unwrap()]
    )
    .is_err());
}

mod gh_tests {
    use super::*;
    use crate::special::GIGParams;

    fn diag_gh(n: usize, mixing: GIGParams) -> GHSpec {
        GHSpec {
            mu: vec![0.0; n],
            beta: vec![0.5; n],
            delta: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            mixing,
        }
    }

    #[test]
    fn symmetric_when_beta_zero() {
        let mut spec = diag_gh(2, GIGParams::new(1.0, 0.0, 2.0).unwrap());
        spec.beta = vec![0.0, 0.0];
        let rows = gh_sample(&spec, 100_000, 21).unwrap();
        for k in 0..2 {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64;
            let sd = (rows.iter().map(|r| r[k] * r[k]).sum::<f64>() / rows.len() as f64).sqrt();
            assert!(
                mean.abs() < 3.5 * sd / (rows.len() as f64).sqrt() + 1e-3,
                "coordinate {k} mean {mean}"
            );
        }
    }

    #[test]
    fn concentrated_mixing_covariance() {
        // xi = 0, large psi: U ~ Gamma(shape, rate psi/2) concentrates;
        // empirical covariance approx E[U] Delta.
        let mixing = GIGParams::new(40.0, 0.0, 80.0).unwrap(); // mean 1, var 1/40
        let mut spec = diag_gh(2, mixing);
        spec.beta = vec![0.0, 0.0];
        spec.delta = vec![vec![2.0, 0.3], vec![0.3, 1.0]];
        let rows = gh_sample(&spec, 200_000, 23).unwrap();
        let n = rows.len() as f64;
        let c01 = rows.iter().map(|r| r[0] * r[1]).sum::<f64>() / n;
        let c00 = rows.iter().map(|r| r[0] * r[0]).sum::<f64>() / n;
        // E[U] = shape/rate = 1
        assert!((c00 - 2.0).abs() < 0.05, "c00 {c00}");
        assert!((c01 - 0.3).abs() < 0.03, "c01 {c01}");
    }

    #[test]
    fn exponential_mixing_is_leptokurtic() {
        let mixing = GIGParams::new(1.0, 0.0, 2.0).unwrap(); // Exp(1)
        let mut spec = diag_gh(1, mixing);
        spec.beta = vec![0.0];
        let rows = gh_sample(&spec, 200_000, 29).unwrap();
        let n = rows.len() as f64;
        let m2 = rows.iter().map(|r| r[0] * r[0]).sum::<f64>() / n;
        let m4 = rows.iter().map(|r| r[0].powi(4)).sum::<f64>() / n;
        let kurtosis = m4 / (m2 * m2);
        assert!(kurtosis > 3.5, "kurtosis {kurtosis}");
    }

    #[test]
    fn deterministic() {
        let spec = diag_gh(3, GIGParams::new(-0.5, 1.0, 1.0).unwrap());
        assert_eq!(gh_sample(&spec, 40, 1).unwrap(), gh_sample(&spec, 40, 1).unwrap());
    }

    #[test]
    fn lift_to_mixture_margins() {
        // inverse Gaussian mixing, p = 2: margin 1/2 - 2 + 1 + 1/2 = 0
        let gh2 = diag_gh(1, GIGParams::new(-0.5, 1.0, 1.0).unwrap());
        let (mix2, map) = gh_as_mixture_spec(&gh2).unwrap();
        assert_relative_eq!(mix2.margin(), 0.0, epsilon = 1e-14);
        assert_eq!(map.mix_drift, vec![0.5]);

        // p = 3 diagonal: margin -1/2
        let gh3 = diag_gh(2, GIGParams::new(-0.5, 1.0, 1.0).unwrap());
        let (mix3, _) = gh_as_mixture_spec(&gh3).unwrap();
        assert_relative_eq!(mix3.margin(), -0.5, epsilon = 1e-14);

        // gamma mixing: alpha = 0
        let ghg = diag_gh(1, GIGParams::new(2.0, 0.0, 3.0).unwrap());
        let (mixg, _) = gh_as_mixture_spec(&ghg).unwrap();
        assert_eq!(mixg.alpha, 0.0);
        match &mixg.g {
            GFamily::ExpDecay { level, rate } => {
                assert_relative_eq!(*level, 2.0, epsilon = 1e-14);
                assert_relative_eq!(*rate, 1.5, epsilon = 1e-14);
            }
            other => panic!("unexpected g family {other:?}"),
        }
    }

    #[test]
    fn non_diagonal_not_representable() {
        let mut spec = diag_gh(2, GIGParams::new(-0.5, 1.0, 1.0).unwrap());
        spec.delta = vec![vec![1.0, 0.4], vec![0.4, 1.0]];
        assert!(matches!(
            gh_as_mixture_spec(&spec),
            Err(MixtureError::NotRepresentable(_))
        ));
    }

    #[test]
    fn general_gig_mixing_not_representable() {
        let spec = diag_gh(2, GIGParams::new(1.7, 1.0, 1.0).unwrap());
        assert!(matches!(
            gh_as_mixture_spec(&spec),
            Err(MixtureError::NotRepresentable(_))
        ));
    }

    #[test]
    fn gh_empirical_char_fn_matches_lifted_mixture() {
        let gh = GHSpec {
            mu: vec![0.3, -0.1],
            beta: vec![0.4, 0.2],
            delta: vec![vec![1.5, 0.0], vec![0.0, 0.8]],
            mixing: GIGParams::new(-0.5, 1.0, 2.0).unwrap(),
        };
        let (mix, map) = gh_as_mixture_spec(&gh).unwrap();
        let rows = gh_sample(&gh, 200_000, 31).unwrap();
        for t in [vec![0.5, 0.2], vec![-0.3, 0.7]] {
            let lifted = map.pullback_frequency(&t);
            let shift_phase = t.iter().zip(&map.shift).map(|(a, b)| a * b).sum::<f64>();
            let analytic = mixture_char_fn(&mix, &lifted, 1e-8, 6_000_000).unwrap()
                * Complex64::new(0.0, shift_phase).exp();
            let n = rows.len() as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for row in &rows {
                let phase: f64 = t.iter().zip(row).map(|(a, b)| a * b).sum();
                re += phase.cos();
                im += phase.sin();
            }
            let emp = Complex64::new(re / n, im / n);
            assert!(
                (emp - analytic).norm() < 0.01,
                "t={t:?}: emp {emp} vs analytic {analytic}"
            );
        }
    }
}
