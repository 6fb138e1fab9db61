//! Primitive and investment phi-games by simulation.

use kelly_game::analytics::{log_ratio_law, payoff_kernel};
use kelly_game::game::kelly_rule;
use kelly_game::monte_carlo::{estimate_expected_ratio, simulate_paths, SampleStats, SimConfig};
use kelly_game::phi_game::{
    evaluate_phi_samples, investment_phi_game_payoff, investment_phi_payoff_on_batch,
    primitive_game_payoff, theorem1_check, FairRandomization, PhiFunction, Strategy,
    INDICATOR_VALUE,
};
use kelly_game::rng::{Domain, Stream};
use kelly_game::Error;

mod common;
use common::{rule, shannon, two_asset};

fn unit() -> FairRandomization {
    FairRandomization::point_mass(1.0).unwrap()
}

#[test]
fn uniform_draws_have_the_right_law() {
    let w = FairRandomization::uniform_0_2();
    let draws: Vec<f64> = (0..200_000u64)
        .map(|i| w.sample(&mut Stream::new(3, Domain::PlayerOneWealth, i)))
        .collect();
    let s = SampleStats::from_values(&draws);
    assert!((s.mean - 1.0).abs() <= 4.0 * s.std_error);
    // Var U(0, 2) = 1/3
    assert!((s.std_dev.powi(2) - 1.0 / 3.0).abs() < 0.01);
    assert!(draws.iter().all(|&x| x > 0.0 && x < 2.0));
    let above = draws.iter().filter(|&&x| x >= 1.0).count() as f64 / draws.len() as f64;
    let se = (0.25 / draws.len() as f64).sqrt();
    assert!((above - 0.5).abs() <= 4.0 * se);
}

#[test]
fn primitive_game_values() {
    let n = 200_000;
    let u = FairRandomization::uniform_0_2();
    let ind = PhiFunction::Indicator;

    let both_uniform = primitive_game_payoff(&u, &u, &ind, n, 1).unwrap();
    assert_eq!(both_uniform.value_reference, Some(INDICATOR_VALUE));
    assert!(both_uniform.within(0.5, 4.0), "{both_uniform:?}");

    let both_unit = primitive_game_payoff(&unit(), &unit(), &ind, n, 1).unwrap();
    assert_eq!(both_unit.estimate, 1.0);
    assert_eq!(both_unit.std_error, 0.0);

    let vs_unit = primitive_game_payoff(&u, &unit(), &ind, n, 2).unwrap();
    assert!(vs_unit.within(0.5, 4.0));
    let unit_vs = primitive_game_payoff(&unit(), &u, &ind, n, 2).unwrap();
    assert!(unit_vs.within(0.5, 4.0));

    // P(E >= 1) = exp(-1) for a unit-mean exponential
    let e = FairRandomization::exponential(1.0).unwrap();
    let tail = primitive_game_payoff(&e, &unit(), &ind, n, 3).unwrap();
    assert!(tail.within((-1.0f64).exp(), 4.0), "{tail:?}");
}

#[test]
fn uniform_guarantees_half_against_other_fair_laws() {
    let u = FairRandomization::uniform_0_2();
    let ind = PhiFunction::Indicator;
    let opponents = [
        unit(),
        FairRandomization::exponential(1.0).unwrap(),
        FairRandomization::uniform(0.5, 1.5).unwrap(),
        FairRandomization::point_mass(0.4).unwrap(),
    ];
    for w in &opponents {
        let g = primitive_game_payoff(&u, w, &ind, 100_000, 4).unwrap();
        assert!(g.estimate >= 0.5 - 4.0 * g.std_error, "{w:?}: {g:?}");
        let c = primitive_game_payoff(w, &u, &ind, 100_000, 4).unwrap();
        assert!(c.estimate <= 0.5 + 4.0 * c.std_error, "{w:?}: {c:?}");
    }
}

#[test]
fn degenerate_denominator_is_rejected() {
    let zero = FairRandomization::point_mass(0.0).unwrap();
    let err = primitive_game_payoff(&unit(), &zero, &PhiFunction::Indicator, 10, 0).unwrap_err();
    assert!(matches!(err, Error::DivisionDegenerate(_)));
    let err = primitive_game_payoff(&unit(), &unit(), &PhiFunction::Indicator, 0, 0).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)));
}

#[test]
fn custom_randomization_and_phi() {
    let half = FairRandomization::custom("u01", 0.5, |s: &mut Stream| s.uniform_draw()).unwrap();
    let square = PhiFunction::custom("square", |x| x * x);
    assert!(square.is_nondecreasing_on(&[0.0, 0.5, 1.0, 4.0]));
    // E[(U / 1)^2] = 1/3 for U ~ U(0, 1)
    let g = primitive_game_payoff(&half, &unit(), &square, 200_000, 5).unwrap();
    assert!(g.within(1.0 / 3.0, 4.0), "{g:?}");
    assert_eq!(g.phi, "square");
}

#[test]
fn phi_is_scale_invariant() {
    let nums: Vec<f64> = (1..200).map(|i| i as f64 * 0.013).collect();
    let dens: Vec<f64> = (1..200).map(|i| 2.6 - i as f64 * 0.011).collect();
    let scale = |v: &[f64]| v.iter().map(|x| x * 7.3).collect::<Vec<_>>();
    for phi in [
        PhiFunction::Indicator,
        PhiFunction::Identity,
        PhiFunction::Log,
    ] {
        let a = evaluate_phi_samples(&phi, &nums, &dens);
        let b = evaluate_phi_samples(&phi, &scale(&nums), &scale(&dens));
        for (x, y) in a.iter().zip(&b) {
            assert!(
                (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
                "{phi:?}: {x} vs {y}"
            );
        }
    }
}

#[test]
fn indicator_equilibrium_value_is_half() {
    let m = shannon();
    let eq = Strategy::indicator_equilibrium(&m);
    let cfg = SimConfig::new(10.0, 1, 200_000, 10).unwrap();
    let e = investment_phi_game_payoff(&m, &eq, &eq, &PhiFunction::Indicator, 10.0, &cfg).unwrap();
    assert_eq!(e.value_reference, Some(0.5));
    assert!(e.within(0.5, 4.0), "{e:?}");
}

#[test]
fn identity_phi_matches_the_ratio_estimator_path_for_path() {
    let m = two_asset();
    let batch = simulate_paths(&m, &SimConfig::new(1.0, 4, 20_000, 12).unwrap()).unwrap();
    let (b, c) = (rule(&[1.0, 0.0]), rule(&[0.0, 1.0]));
    let p1 = Strategy::new(b.clone(), unit());
    let p2 = Strategy::new(c.clone(), unit());
    let phi =
        investment_phi_payoff_on_batch(&batch, &m, &p1, &p2, &PhiFunction::Identity, 1.0).unwrap();
    let direct = estimate_expected_ratio(&batch, &m, &b, &c, 1.0).unwrap();
    assert!((phi.estimate - direct.estimate).abs() <= 1e-14 * direct.estimate);
    assert!((phi.std_error - direct.std_error).abs() <= 1e-12 * direct.std_error);
    let exact = payoff_kernel(&m, &b, &c).unwrap().ratio_at_t(1.0);
    assert_eq!(phi.value_reference, Some(exact));
    assert!(phi.within(exact, 4.0));
}

#[test]
fn log_phi_with_point_masses() {
    let m = shannon();
    let p1 = Strategy::new(rule(&[0.5]), unit());
    let p2 = Strategy::new(rule(&[1.0]), FairRandomization::point_mass(0.5).unwrap());
    let cfg = SimConfig::new(5.0, 1, 100_000, 13).unwrap();
    let e = investment_phi_game_payoff(&m, &p1, &p2, &PhiFunction::Log, 5.0, &cfg).unwrap();
    let want = log_ratio_law(&m, &rule(&[0.5]), &rule(&[1.0]))
        .unwrap()
        .mean(5.0)
        + 2f64.ln();
    assert!((e.value_reference.unwrap() - want).abs() < 1e-12);
    assert!(e.within(want, 4.0), "{e:?}");
}

#[test]
fn equilibrium_sandwich_holds_against_probes() {
    let m = shannon();
    let mut probes = Vec::new();
    for c in [0.0, 1.0, 2.0] {
        probes.push(Strategy::new(rule(&[c]), unit()));
        probes.push(Strategy::new(rule(&[c]), FairRandomization::uniform_0_2()));
    }
    let cfg = SimConfig::new(10.0, 1, 100_000, 14).unwrap();
    let report = theorem1_check(&m, &probes, 10.0, &cfg).unwrap();
    assert!(report.passed, "{report:#?}");
    assert_eq!(report.probes.len(), 6);
    // E[W] exp(-sigma^2 (c - 1/2)^2 t) at c = 1, t = 10
    let c1 = &report.probes[2];
    let sigma2 = std::f64::consts::LN_2.powi(2);
    assert!((c1.composite_analytic_mean - (-sigma2 * 0.25 * 10.0).exp()).abs() < 1e-12);
    assert!((c1.composite_analytic_mean - 0.30).abs() < 0.01);
    for o in &report.probes {
        assert!(o.composite_mean <= 1.0 + 4.0 * o.composite_std_error);
    }
}

#[test]
fn equilibrium_sandwich_two_assets() {
    let m = two_asset();
    let k = kelly_rule(&m);
    let probes = vec![
        Strategy::new(rule(&[0.0, 0.0]), FairRandomization::uniform_0_2()),
        Strategy::new(rule(&[k.weights()[0] + 1.0, k.weights()[1]]), unit()),
        Strategy::new(k.clone(), FairRandomization::exponential(1.0).unwrap()),
    ];
    let cfg = SimConfig::new(5.0, 1, 50_000, 15).unwrap();
    assert!(theorem1_check(&m, &probes, 5.0, &cfg).unwrap().passed);
}

#[test]
fn randomization_parsing() {
    assert!(
        matches!(FairRandomization::parse("uniform").unwrap(), FairRandomization::Uniform { lo, hi } if lo == 0.0 && hi == 2.0)
    );
    assert_eq!(
        FairRandomization::parse("point:0.7")
            .unwrap()
            .analytic_mean(),
        0.7
    );
    assert_eq!(
        FairRandomization::parse("exp:0.25")
            .unwrap()
            .analytic_mean(),
        0.25
    );
    assert_eq!(
        FairRandomization::parse("uniform:0.5:1.5")
            .unwrap()
            .analytic_mean(),
        1.0
    );
    assert!(FairRandomization::parse("point:2").is_err());
    assert!(FairRandomization::parse("gamma:1").is_err());
    assert!(PhiFunction::parse("cube").is_none());
}
