use copfdr::copula::PseudoObservations;
use copfdr::fit::{empirical_kendall_tau, fit_mle, kendall_tau, log_likelihood, select_copula, Criterion};
use copfdr::{tau_to_theta, CopulaModel, Family, Rotation};
use proptest::prelude::*;

fn obs(pairs: &[(f64, f64)]) -> PseudoObservations {
    PseudoObservations::new(pairs.to_vec()).unwrap()
}

fn naive_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[i] - x[j]).signum() * (y[i] - y[j]).signum()) * f64::from(x[i] != x[j] && y[i] != y[j]);
        }
    }
    s / (n * (n - 1) / 2) as f64
}

#[test]
fn kendall_examples() {
    assert_eq!(empirical_kendall_tau(&obs(&[(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)])), 1.0);
    assert_eq!(empirical_kendall_tau(&obs(&[(0.1, 0.3), (0.2, 0.2), (0.3, 0.1)])), -1.0);
    assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    // ties count as neither: pairs (1,2) tied in x, so C = 2, D = 0 of 3
    assert!((kendall_tau(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn independence_sample_has_tau_near_zero() {
    let s = CopulaModel::<f64>::independence().sample(100_000, 5).unwrap();
    assert!(empirical_kendall_tau(&s).abs() < 0.01);
}

#[test]
fn gaussian_fit_on_independent_data() {
    let s = CopulaModel::<f64>::independence().sample(10_000, 21).unwrap();
    let f = fit_mle(Family::Gaussian, Rotation::None, &s).unwrap();
    assert!(f.model.theta().abs() < 0.02, "rho {}", f.model.theta());
}

#[test]
fn clayton_fit_recovers_parameter() {
    let truth = tau_to_theta(Family::Clayton, Rotation::R90, -0.4).unwrap();
    let s = truth.sample(8000, 99).unwrap();
    let f = fit_mle(Family::Clayton, Rotation::R90, &s).unwrap();
    assert!((f.model.theta() / truth.theta() - 1.0).abs() < 0.10, "theta {}", f.model.theta());
    assert!(f.converged);
}

#[test]
fn information_criteria_identities() {
    let truth = tau_to_theta(Family::Clayton, Rotation::R90, -0.4).unwrap();
    let s = truth.sample(8000, 4).unwrap();
    let r = select_copula(&s, &Family::ALL).unwrap();
    for c in &r.candidates {
        let k = c.model.family().n_params() as f64;
        assert_eq!(c.aic.to_bits(), (-2.0 * c.loglik + 2.0 * k).to_bits());
        assert_eq!(c.bic.to_bits(), (-2.0 * c.loglik + k * 8000f64.ln()).to_bits());
        if k == 1.0 {
            assert!((c.bic - c.aic - (8000f64.ln() - 2.0)).abs() < 1e-9);
            assert_eq!(format!("{:.3}", c.bic - c.aic), "6.987");
        }
    }
}

#[test]
fn fitted_parameter_is_a_local_maximum() {
    let truth = tau_to_theta(Family::Gumbel, Rotation::R90, -0.3).unwrap();
    let s = truth.sample(3000, 8).unwrap();
    for f in Family::PARAMETRIC {
        let r = copfdr::fit::rotation_for(f, -0.3);
        let fit = fit_mle(f, r, &s).unwrap();
        let th = fit.model.theta();
        for d in [-0.01, 0.01] {
            if let Ok(m) = CopulaModel::new(f, r, th + d) {
                assert!(fit.loglik >= log_likelihood(&m, &s), "{f}: {th} vs {}", th + d);
            }
        }
    }
}

#[test]
fn clayton_wins_selection_on_clayton_data() {
    let truth = tau_to_theta(Family::Clayton, Rotation::R90, -0.4).unwrap();
    let s = truth.sample(8000, 123).unwrap();
    let r = select_copula(&s, &Family::PARAMETRIC).unwrap();
    for c in [Criterion::LogLik, Criterion::Aic, Criterion::Bic] {
        assert_eq!(r.winner(c).model.family(), Family::Clayton);
        assert_eq!(r.winner(c).model.rotation(), Rotation::R90);
    }
    let table = r.to_text_table();
    assert!(table.starts_with("Family"));
    assert!(table.contains("Clayton R90"));
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["candidates"].as_array().unwrap().len(), 5);
}

#[test]
fn large_sample_two_candidates() {
    let truth = tau_to_theta(Family::Frank, Rotation::None, 0.3).unwrap();
    let s = truth.sample(100_000, 2).unwrap();
    let r = select_copula(&s, &[Family::Gumbel, Family::Frank]).unwrap();
    assert_eq!(r.winner(Criterion::LogLik).model.family(), Family::Frank);
    assert_eq!(r.winner(Criterion::Aic).model.family(), Family::Frank);
    assert_eq!(r.winner(Criterion::Bic).model.family(), Family::Frank);
}

#[test]
fn single_candidate_wins_trivially() {
    let s = CopulaModel::<f64>::independence().sample(200, 1).unwrap();
    let r = select_copula(&s, &[Family::Joe]).unwrap();
    assert_eq!(r.winners.loglik, 0);
    assert_eq!(r.winners.bic, 0);
    assert!(select_copula(&s, &[]).is_err());
}

#[test]
fn too_few_observations() {
    let s = CopulaModel::<f64>::independence().sample(9, 1).unwrap();
    assert!(fit_mle(Family::Clayton, Rotation::None, &s).is_err());
    assert!(fit_mle(Family::Gaussian, Rotation::R90, &CopulaModel::<f64>::independence().sample(50, 1).unwrap()).is_err());
}

#[test]
fn selection_is_permutation_invariant() {
    let truth = tau_to_theta(Family::Joe, Rotation::R90, -0.35).unwrap();
    let s = truth.sample(2000, 77).unwrap();
    let mut rev = s.pairs().to_vec();
    rev.reverse();
    let a = select_copula(&s, &Family::PARAMETRIC).unwrap();
    let b = select_copula(&obs(&rev), &Family::PARAMETRIC).unwrap();
    assert_eq!(a.winners, b.winners);
    for (x, y) in a.candidates.iter().zip(&b.candidates) {
        assert!((x.model.theta() - y.model.theta()).abs() < 1e-6);
        assert!((x.loglik - y.loglik).abs() < 1e-8);
    }
}

proptest! {
    #[test]
    fn knight_matches_quadratic_count(pairs in prop::collection::vec((0u8..6, 0u8..6), 2..60)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let fast = kendall_tau(&x, &y).unwrap();
        prop_assert!((fast - naive_tau(&x, &y)).abs() < 1e-12);
    }
}
