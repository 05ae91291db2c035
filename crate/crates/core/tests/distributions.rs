mod oracles;

use proptest::prelude::*;
use trimlaw_core::distributions::{
    Atom, Breakpoint, DistError, DistributionSpec, Quantile, Threshold,
};
use trimlaw_core::montecarlo::UniformStream;

fn step() -> DistributionSpec {
    DistributionSpec::step_example()
}

#[test]
fn step_atoms_are_quantile_fixed_points() {
    let d = step();
    for k in 1..=5u32 {
        let x = 2f64.powi((k * k) as i32);
        assert_eq!(d.quantile(d.cdf(x)).unwrap(), Quantile::Finite(x));
        assert!(d.is_fixed_point(x));
        // anything strictly between atoms maps back down to the atom below
        let mid = 1.5 * x;
        assert_eq!(d.quantile(d.cdf(mid)).unwrap(), Quantile::Finite(x));
        assert!(!d.is_fixed_point(mid));
    }
}

#[test]
fn step_cdf_and_atom_masses_match_definition() {
    let d = step();
    for k in 1..=6u32 {
        let x = 2f64.powi((k * k) as i32);
        let kf = k as f64;
        assert_eq!(d.cdf(x), 1.0 - 1.0 / ((kf + 1.0) * (kf + 1.0)));
        let mass = 1.0 / (kf * kf) - 1.0 / ((kf + 1.0) * (kf + 1.0));
        assert!((d.atom_mass(x) - mass).abs() < 1e-15);
    }
    assert_eq!(d.cdf(1.99), 0.0);
}

#[test]
fn step_truncated_moment_matches_exact_rational() {
    let d = step();
    for k in 1..=5u32 {
        let x = 2f64.powi((k * k) as i32);
        let exact = oracles::to_f64(&oracles::step_moment_exact(k));
        let got = d.truncated_moment(x);
        assert!(
            (got / exact - 1.0).abs() < 1e-12,
            "k = {k}: {got} vs {exact}"
        );
        // flat between atoms
        assert_eq!(d.truncated_moment(x * 1.25), got);
    }
}

#[test]
fn step_moments_in_log_space_beyond_double_range() {
    let d = step();
    let facts = d.evaluate(Threshold::Atom(40)).unwrap();
    assert!(facts.t.is_none());
    assert!((facts.ln_t - 1600.0 * std::f64::consts::LN_2).abs() < 1e-9);
    // the last atom dominates: ln(mass_40 * 2^1600) up to a relative 1e-6
    let mass: f64 = 1.0 / 1600.0 - 1.0 / 1681.0;
    let approx = mass.ln() + facts.ln_t;
    assert!(facts.ln_moment > approx && facts.ln_moment - approx < 1e-6);
    assert!(matches!(
        d.quantile(1.0 - 1.0 / 1681.0),
        Err(DistError::OutOfRange { .. })
    ));
}

#[test]
fn pareto_moment_matches_quadrature() {
    for &(alpha, scale) in &[(0.5, 1.0), (0.3, 2.0), (0.9, 0.5)] {
        let d = DistributionSpec::pareto(alpha, scale).unwrap();
        let density = |x: f64| x * alpha * scale.powf(alpha) * x.powf(-alpha - 1.0);
        for &t in &[scale * 3.0, scale * 1e3, scale * 1e6] {
            let exact = d.truncated_moment(t);
            let quad = oracles::simpson(&density, scale, t, exact * 1e-12);
            assert!(
                (exact / quad - 1.0).abs() < 1e-9,
                "alpha {alpha}, t {t}: {exact} vs {quad}"
            );
        }
        assert_eq!(d.truncated_moment(scale * 0.5), 0.0);
    }
}

#[test]
fn log_tail_moment_matches_quadrature() {
    for &theta in &[std::f64::consts::E, 10.0, 1e4] {
        let d = DistributionSpec::log_tail(theta).unwrap();
        // x dF(x) = dx / (ln x)^2 on (theta, t], plus the atom at theta
        let atom = theta * (1.0 - 1.0 / theta.ln());
        for &t in &[theta * 2.0, theta * 1e3, 1e12] {
            let integrand = |x: f64| 1.0 / (x.ln() * x.ln());
            let cont = d.truncated_moment(t) - atom;
            let quad = oracles::simpson(&integrand, theta, t, cont.abs() * 1e-13);
            assert!((cont / quad - 1.0).abs() < 1e-9, "theta {theta}, t {t}");
        }
    }
}

#[test]
fn samples_follow_their_laws() {
    let laws = [
        DistributionSpec::pareto(0.5, 1.0).unwrap(),
        DistributionSpec::log_tail(10.0).unwrap(),
        step(),
        DistributionSpec::tabulated(
            vec![
                Breakpoint {
                    x: 1.0,
                    cdf: 0.2,
                    continuous: false,
                },
                Breakpoint {
                    x: 3.0,
                    cdf: 0.6,
                    continuous: true,
                },
                Breakpoint {
                    x: 5.0,
                    cdf: 0.7,
                    continuous: false,
                },
            ],
            0.5,
        )
        .unwrap(),
    ];
    let m = 100_000;
    let radius = oracles::dkw_radius(m, 1e-3);
    for (i, d) in laws.iter().enumerate() {
        let mut u = UniformStream::new(99, i as u64);
        let sample: Vec<f64> = (0..m).map(|_| d.sample(u.next_open01())).collect();
        let dist = oracles::ks_distance(&sample, |x| d.cdf(x), |x| d.cdf_left(x));
        assert!(
            dist < radius,
            "{}: KS distance {dist} >= {radius}",
            d.name()
        );
    }
}

#[test]
fn infinite_mean_validation() {
    assert!(DistributionSpec::pareto(0.5, 1.0)
        .unwrap()
        .validate_infinite_mean(1e300)
        .is_ok());
    assert!(matches!(
        DistributionSpec::point_mass(3.0)
            .unwrap()
            .validate_infinite_mean(1e300),
        Err(DistError::FiniteMean(_))
    ));
    let finite = DistributionSpec::atomic(&[
        Atom {
            location: 1.0,
            mass: 0.5,
        },
        Atom {
            location: 2.0,
            mass: 0.5,
        },
    ])
    .unwrap();
    assert!(finite.validate_infinite_mean(1e300).is_err());
    assert!(DistributionSpec::pareto(1.0, 1.0).is_err());
}

#[test]
fn step_moment_is_additive_over_atoms() {
    let d = step();
    let mut acc = 0.0;
    for k in 1..=6u32 {
        let x = 2f64.powi((k * k) as i32);
        acc += x * d.atom_mass(x);
        let m = d.truncated_moment(x);
        assert!((m / acc - 1.0).abs() < 1e-13);
        assert_eq!(
            d.truncated_moment(x) - d.truncated_moment(x * 0.999),
            x * d.atom_mass(x)
        );
    }
}

fn any_law() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.05f64..0.95, 0.1f64..10.0).prop_map(|(a, s)| DistributionSpec::pareto(a, s).unwrap()),
        (std::f64::consts::E..100.0).prop_map(|t| DistributionSpec::log_tail(t).unwrap()),
        Just(step()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn cdf_is_monotone_and_left_limit_below(d in any_law(), x in 0.0f64..1e8, h in 0.0f64..1e3) {
        prop_assert!(d.cdf(x) <= d.cdf(x + h));
        prop_assert!(d.cdf_left(x) <= d.cdf(x));
        prop_assert!((0.0..=1.0).contains(&d.cdf(x)));
        prop_assert!((d.survival(x) - (1.0 - d.cdf(x))).abs() < 1e-15);
    }

    // F^{<-}(y) <= x  iff  y <= F(x)
    #[test]
    fn quantile_galois_connection(d in any_law(), y in 0.001f64..0.99, x in 0.0f64..1e8) {
        let q = match d.quantile(y) {
            Ok(Quantile::Finite(q)) => q,
            _ => return Ok(()),
        };
        prop_assert_eq!(q <= x, y <= d.cdf(x));
        prop_assert!(d.cdf(q) >= y);
    }

    #[test]
    fn quantile_of_cdf_is_below(d in any_law(), x in 0.0f64..1e8) {
        let y = d.cdf(x);
        if y > 0.0 && y < 1.0 {
            if let Ok(Quantile::Finite(q)) = d.quantile(y) {
                prop_assert!(q <= x * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn left_limit_equals_cdf_off_atoms(d in any_law(), x in 0.0f64..1e8) {
        prop_assert_eq!(d.cdf_left(x) == d.cdf(x), d.atom_mass(x) == 0.0);
    }

    #[test]
    fn truncated_moment_is_monotone(d in any_law(), x in 0.0f64..1e8, h in 0.0f64..1e3) {
        prop_assert!(d.truncated_moment(x) <= d.truncated_moment(x + h) * (1.0 + 1e-12));
    }
}
