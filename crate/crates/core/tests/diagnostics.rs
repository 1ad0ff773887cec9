mod common;

use common::{rng, simulated_model, study_families};
use logsym::diagnostics::{
    gcs_residuals, ks_critical_5pct, ks_statistic, qq_envelope, residual_summary, rq_residuals, EnvelopeOptions,
    ResidualKind,
};
use logsym::error::Error;
use logsym::kernels::KernelFamily;
use logsym::regress::{FitOptions, ParamVector};
use logsym::special;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn truth() -> ParamVector {
    ParamVector::new(vec![1.5, 0.5], vec![1.0, 0.5])
}

#[test]
fn quantile_and_cox_snell_residuals_are_linked() {
    for (i, fam) in study_families().into_iter().enumerate() {
        let model = simulated_model(fam, 0.25, 100, 2, 2, &truth(), 10 + i as u64);
        let fit = model.fit(&FitOptions::default()).unwrap();
        let gcs = gcs_residuals(&model, &fit).unwrap();
        let rq = rq_residuals(&model, &fit).unwrap();
        for (g, r) in gcs.values.iter().zip(&rq.values) {
            assert!(*g >= 0.0);
            let linked = special::normal_quantile(-(-g).exp_m1());
            assert!((linked - r).abs() < 1e-10 * (1.0 + r.abs()), "{fam}: {linked} vs {r}");
        }
    }
}

#[test]
fn residuals_increase_with_the_response() {
    for (i, fam) in study_families().into_iter().enumerate() {
        let model = simulated_model(fam, 0.5, 80, 2, 2, &truth(), 20 + i as u64);
        let fit = model.fit(&FitOptions::default()).unwrap();
        let base = rq_residuals(&model, &fit).unwrap().values;
        let mut y = model.response();
        for v in y.iter_mut() {
            *v *= 1.01;
        }
        let bumped = model.with_response(&y).unwrap();
        let after = rq_residuals(&bumped, &fit).unwrap().values;
        assert!(base.iter().zip(&after).all(|(a, b)| b > a), "{fam}");
    }
}

#[test]
fn moment_summaries_match_reference_laws() {
    let mut r = rng(3);
    let exp: Vec<f64> = (0..1_000_000).map(|_| Exp1.sample(&mut r)).collect();
    let s = residual_summary(&exp).unwrap();
    assert!((s.skewness - 2.0).abs() < 0.02, "{}", s.skewness);
    assert!((s.kurtosis - 6.0).abs() < 0.2, "{}", s.kurtosis);
    let norm: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut r)).collect();
    let s = residual_summary(&norm).unwrap();
    assert!(s.skewness.abs() < 0.01);
    assert!(s.kurtosis.abs() < 0.05);
}

#[test]
fn cox_snell_residuals_conform_to_unit_exponential() {
    let mut rejections = 0;
    let reps = 200;
    for rep in 0..reps {
        let model = simulated_model(KernelFamily::LogNo, 0.25, 200, 2, 2, &truth(), 1000 + rep);
        let fit = model.fit(&FitOptions::default()).unwrap();
        let gcs = gcs_residuals(&model, &fit).unwrap();
        let d = ks_statistic(&gcs.values, |x| -(-x).exp_m1());
        if d > ks_critical_5pct(200) {
            rejections += 1;
        }
    }
    assert!(rejections as f64 <= 0.1 * reps as f64, "{rejections} of {reps}");
}

#[test]
fn ks_critical_value_is_calibrated() {
    let mut r = rng(4);
    let n = 200;
    let mut hits = 0;
    for _ in 0..2000 {
        let u: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        if ks_statistic(&u, |x| x) > ks_critical_5pct(n) {
            hits += 1;
        }
    }
    let rate = hits as f64 / 2000.0;
    assert!((rate - 0.05).abs() < 0.015, "{rate}");
}

#[test]
fn envelope_covers_well_specified_data() {
    let model = simulated_model(KernelFamily::LogT { nu: 3.0 }, 0.5, 80, 2, 2, &truth(), 5);
    let fit = model.fit(&FitOptions::default()).unwrap();
    for kind in [ResidualKind::Gcs, ResidualKind::Rq] {
        let env = qq_envelope(&model, &fit, kind, &EnvelopeOptions::default()).unwrap();
        assert_eq!(env.ordered.len(), model.n());
        assert!(env.ordered.windows(2).all(|w| w[0] <= w[1]));
        assert!(env.lower.iter().zip(&env.upper).all(|(l, u)| l <= u));
        assert!(env.fraction_inside() >= 0.9, "{kind:?}: {}", env.fraction_inside());
    }
}

#[test]
fn envelope_options_are_checked() {
    let model = simulated_model(KernelFamily::LogNo, 0.5, 40, 2, 1, &truth_h(), 6);
    let fit = model.fit(&FitOptions::default()).unwrap();
    let zero_band = EnvelopeOptions {
        sims: 19,
        band: 0.0,
        ..EnvelopeOptions::default()
    };
    let env = qq_envelope(&model, &fit, ResidualKind::Rq, &zero_band).unwrap();
    assert_eq!(env.lower, env.upper);
    let few = EnvelopeOptions {
        sims: 5,
        ..EnvelopeOptions::default()
    };
    assert!(matches!(
        qq_envelope(&model, &fit, ResidualKind::Rq, &few),
        Err(Error::InvalidConfig(_))
    ));
    let full = EnvelopeOptions {
        band: 1.0,
        ..EnvelopeOptions::default()
    };
    assert!(qq_envelope(&model, &fit, ResidualKind::Gcs, &full).is_err());
}

fn truth_h() -> ParamVector {
    ParamVector::new(vec![1.0, 0.5], vec![0.0])
}
