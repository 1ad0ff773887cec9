mod common;

use common::{fd_jacobian, kernel, ols, ols_oracle_errors, rng, score_fd_error, simulated_model, study_families};
use logsym::kernels::{FamilyTag, KernelFamily};
use logsym::montecarlo::{run_study1, Study1Config};
use logsym::optim::{self, BfgsOptions};
use logsym::qls::QlsParams;
use logsym::regress::{FitOptions, ParamVector, RegressionModel};
use nalgebra::{DMatrix, DVector};

fn lognormal_model(q: f64, n: usize, seed: u64) -> RegressionModel {
    let truth = ParamVector::new(vec![1.0, 0.8, -0.4], vec![-0.7]);
    simulated_model(KernelFamily::LogNo, 0.5, n, 3, 1, &truth, seed).with_kernel_at_level(std::sync::Arc::new(
        logsym::regress::KernelAtLevel::from_family(KernelFamily::LogNo, q).unwrap(),
    ))
}

#[test]
fn lognormal_median_fit_is_least_squares() {
    let (beta_err, phi_err) = ols_oracle_errors(50, 100, 1);
    assert!(beta_err < 1e-6, "β error {beta_err}");
    assert!(phi_err < 1e-6, "φ error {phi_err}");
}

#[test]
fn score_matches_finite_differences() {
    for (i, fam) in study_families().into_iter().enumerate() {
        let err = score_fd_error(fam, 20, 50 + i as u64);
        assert!(err < 1e-6, "{fam}: relative error {err}");
    }
}

#[test]
fn observed_information_is_negative_hessian() {
    for (i, fam) in study_families().into_iter().enumerate() {
        let truth = ParamVector::new(vec![1.0, 0.5], vec![-0.5, 0.5]);
        let model = simulated_model(fam, 0.3, 60, 2, 2, &truth, 300 + i as u64);
        let fit = model.fit(&FitOptions::default()).unwrap();
        let at = &fit.theta;
        let j = model.observed_information(at).unwrap();
        let h = fd_jacobian(
            |t| model.score(&ParamVector::from_vector(t, 2)).unwrap(),
            &at.to_vector(),
        );
        let err = (&j + &h).amax() / j.amax();
        assert!(err < 1e-5, "{fam}: {err}");
    }
}

#[test]
fn expected_information_is_mean_outer_score() {
    // E[s sᵀ] at the truth, including the β/τ block away from the median
    for (i, fam) in [
        KernelFamily::LogNo,
        KernelFamily::LogT { nu: 5.0 },
        KernelFamily::Ebs { alpha: 1.0 },
    ]
    .into_iter()
    .enumerate()
    {
        let truth = ParamVector::new(vec![0.5, 1.0], vec![-0.3, 0.4]);
        let base = simulated_model(fam, 0.2, 30, 2, 2, &truth, 400 + i as u64);
        let info = base.expected_information(&truth).unwrap();
        let mut r = rng(500 + i as u64);
        let sims = 6000;
        let mut acc = DMatrix::zeros(4, 4);
        for _ in 0..sims {
            let y = base.simulate(&truth, &mut r).unwrap();
            let s = base.with_response(&y).unwrap().score(&truth).unwrap();
            acc += &s * s.transpose();
        }
        acc /= sims as f64;
        let scale = info.diagonal().map(f64::sqrt);
        for a in 0..4 {
            for b in 0..4 {
                let d = (acc[(a, b)] - info[(a, b)]) / (scale[a] * scale[b]);
                assert!(d.abs() < 0.08, "{fam} ({a},{b}): {} vs {}", acc[(a, b)], info[(a, b)]);
            }
        }
        assert!(
            info[(0, 2)].abs() > 0.05 * scale[0] * scale[2],
            "{fam}: cross block vanished"
        );
    }
}

#[test]
fn quantile_level_only_moves_the_intercept() {
    let opts = FitOptions::default();
    let m50 = lognormal_model(0.5, 120, 7);
    let f50 = m50.fit(&opts).unwrap().require_converged().unwrap();
    let phi = f50.theta.tau[0].exp();
    let law50 = |i: usize, prob: f64| {
        let q50 = m50.fitted_quantiles(&f50.theta)[i];
        QlsParams::new(q50, phi, 0.5, kernel(KernelFamily::LogNo))
            .unwrap()
            .quantile(prob)
            .unwrap()
    };
    for q in [0.25, 0.75] {
        let m = lognormal_model(q, 120, 7);
        let f = m.fit(&opts).unwrap().require_converged().unwrap();
        for j in 1..3 {
            assert!((f.theta.beta[j] - f50.theta.beta[j]).abs() < 1e-6);
        }
        let shift = f50.theta.beta[0] + phi.sqrt() * m.z_q();
        assert!((f.theta.beta[0] - shift).abs() < 1e-6, "q = {q}");
        let fitted = m.fitted_quantiles(&f.theta);
        for (i, quantile) in fitted.iter().enumerate().step_by(10) {
            assert!((quantile - law50(i, q)).abs() < 1e-5);
        }
    }
}

#[test]
fn optimizer_never_decreases_the_likelihood() {
    for (i, fam) in study_families().into_iter().enumerate() {
        let truth = ParamVector::new(vec![1.5, 0.5], vec![1.0, 0.5]);
        let model = simulated_model(fam, 0.25, 100, 2, 2, &truth, 600 + i as u64);
        let start = model.init_params().unwrap();
        let eval = |u: &DVector<f64>| {
            let t = ParamVector::from_vector(u, 2);
            let ll = model.loglik(&t).ok()?;
            Some((-ll, -model.score(&t).ok()?))
        };
        let out = optim::minimize(eval, start.to_vector(), None, &BfgsOptions::default()).unwrap();
        assert!(out.converged, "{fam}");
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]), "{fam}");
    }
}

#[test]
fn profile_recovers_generating_degrees_of_freedom() {
    let truth = ParamVector::new(vec![1.0, 0.5], vec![0.0]);
    let grid = KernelFamily::default_grid(FamilyTag::LogT);
    let mut counts = [0usize; 11];
    for rep in 0..15 {
        let model = simulated_model(KernelFamily::LogT { nu: 3.0 }, 0.5, 600, 2, 1, &truth, 700 + rep);
        let fit = model.profile_extra_parameter(&grid, &FitOptions::default()).unwrap();
        assert_eq!(fit.profile.len(), grid.len());
        let best = fit
            .profile
            .iter()
            .filter_map(|p| p.loglik)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(
            Some(best),
            fit.profile.iter().find(|p| p.family == fit.family).unwrap().loglik
        );
        if let KernelFamily::LogT { nu } = fit.family {
            counts[nu as usize] += 1;
        }
    }
    let mode = (1..=10).max_by_key(|&nu| counts[nu]).unwrap();
    assert!((2..=4).contains(&mode), "{counts:?}");
}

#[test]
fn standard_errors_ignore_row_order() {
    let truth = ParamVector::new(vec![1.0, -0.5], vec![0.2, 0.3]);
    let model = simulated_model(KernelFamily::LogT { nu: 4.0 }, 0.4, 80, 2, 2, &truth, 800);
    let fit = model.fit(&FitOptions::default()).unwrap();
    let n = model.n();
    let perm: Vec<usize> = (0..n).rev().collect();
    let y = model.response();
    let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
    let xp = model.x().select_rows(&perm);
    let wp = model.w().select_rows(&perm);
    let mp = RegressionModel::new(&yp, xp, wp, 0.4, model.kernel().clone()).unwrap();
    let fp = mp.fit(&FitOptions::default()).unwrap();
    for (a, b) in fit.standard_errors().unwrap().iter().zip(fp.standard_errors().unwrap()) {
        assert!((a - b).abs() < 1e-6 * a);
    }
}

#[test]
fn least_squares_oracle_is_self_consistent() {
    let mut r = rng(900);
    let x = common::uniform_design(&mut r, 20, 3);
    let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let (beta, mse) = ols(&(&x * &b), &x);
    assert!((beta - b).amax() < 1e-10);
    assert!(mse < 1e-20);
}

/// Mean estimates over replications sit within 3 Monte Carlo standard
/// errors of the truth for β; the dispersion MLE carries an O(p/n) bias
/// that must shrink as n grows.
#[test]
fn estimates_are_consistent() {
    for fam in study_families() {
        let mut cfg = Study1Config::new(fam, 0.25, 200, 1000, 31);
        cfg.success_rates = false;
        let rep = run_study1(&cfg).unwrap();
        let m = rep.kept as f64;
        for (name, s) in &rep.parameters[..2] {
            let se = ((s.mse - s.bias * s.bias) / m).sqrt();
            assert!(s.bias.abs() < 3.0 * se, "{fam} {name}: bias {} se {se}", s.bias);
        }
        let mut small = Study1Config::new(fam, 0.25, 50, 1000, 32);
        small.success_rates = false;
        let rep50 = run_study1(&small).unwrap();
        let b200 = rep.parameters[2].1.bias.abs();
        let b50 = rep50.parameters[2].1.bias.abs();
        assert!(b200 < b50, "{fam}: τ₀ bias {b200} at n=200 vs {b50} at n=50");
    }
}
