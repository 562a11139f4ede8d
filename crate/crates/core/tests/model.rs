use std::f64::consts::PI;

use echomem::model::{
    fit_decay, fit_rabi_nutation, fit_voigt, lifetime_1e, nlpe_efficiency, Axis, DecayModel, FitModel, FitResult,
    NlpeParams, Sample,
};
use echomem::spectral::SpectralDistribution;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy)]
enum Noise {
    /// Standard deviation as a fraction of the largest sample.
    OfPeak(f64),
    /// Standard deviation as a fraction of each sample.
    Relative(f64),
}

fn synth(model: FitModel, p: &[f64], xs: &[f64], noise: Noise, seed: u64) -> Vec<Sample> {
    let peak = xs.iter().map(|&x| model.eval(x, p).abs()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 1.0).unwrap();
    xs.iter()
        .map(|&x| {
            let y = model.eval(x, p);
            let sigma = match noise {
                Noise::OfPeak(f) => f * peak,
                Noise::Relative(f) => f * y.abs(),
            };
            if sigma > 0.0 {
                Sample::new(x, y + sigma * n.sample(&mut rng), sigma)
            } else {
                Sample::new(x, y, 1.0)
            }
        })
        .collect()
}

const EXACT: Noise = Noise::OfPeak(0.0);

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn assert_params(res: &FitResult, truth: &[f64], tol: f64) {
    for (p, t) in res.params.iter().zip(truth) {
        assert!(((p.value - t) / t).abs() < tol, "{}: {} vs {t} (tol {tol})", p.name, p.value);
    }
}

const DECAYS: [(DecayModel, &[f64]); 3] = [
    (DecayModel::GaussianTimesExp, &[0.28, 18e3, 8e3]),
    (DecayModel::GaussianOnly, &[0.2, 6e3]),
    (DecayModel::ExpOnly, &[0.12, 1.9e-3]),
];

fn decay_times(model: DecayModel) -> Vec<f64> {
    match model {
        DecayModel::ExpOnly => grid(0.0, 4e-3, 20),
        DecayModel::GaussianOnly => grid(0.0, 120e-6, 20),
        DecayModel::GaussianTimesExp => grid(0.0, 80e-6, 20),
    }
}

fn rough(truth: &[f64]) -> Vec<f64> {
    truth.iter().enumerate().map(|(i, v)| v * if i % 2 == 0 { 1.3 } else { 0.7 }).collect()
}

#[test]
fn decay_noiseless_round_trip() {
    for (model, truth) in DECAYS {
        let data = synth(FitModel::Decay(model), truth, &decay_times(model), EXACT, 0);
        let res = fit_decay(&data, model, &rough(truth)).unwrap();
        assert!(res.converged);
        assert_params(&res, truth, 1e-8);
        assert!(res.residual_norm < 1e-12, "{}", res.residual_norm);
    }
}

#[test]
fn decay_noisy_round_trip() {
    for (model, truth) in DECAYS {
        let data = synth(FitModel::Decay(model), truth, &decay_times(model), Noise::Relative(0.01), 42);
        let res = fit_decay(&data, model, &rough(truth)).unwrap();
        assert_params(&res, truth, 0.05);
        assert!(res.params.iter().all(|p| p.sigma.unwrap() >= 0.0));
    }
}

#[test]
fn decoupled_lifetime_recovered() {
    let truth = [0.12, 1.90e-3];
    let data = synth(FitModel::Decay(DecayModel::ExpOnly), &truth, &grid(0.0, 4e-3, 20), Noise::Relative(0.01), 7);
    let res = fit_decay(&data, DecayModel::ExpOnly, &[0.1, 1e-3]).unwrap();
    let t = res.value("lifetime_1e").unwrap();
    assert!((t - 1.90e-3).abs() < 0.02 * 1.90e-3, "{t}");
}

#[test]
fn nutation_round_trips() {
    let truth = [0.4, 16.7e3, 2e3, 0.5];
    let ts = grid(0.0, 3.0 / 16.7e3, 60);
    let res = fit_rabi_nutation(&synth(FitModel::Rabi, &truth, &ts, EXACT, 0)).unwrap();
    assert_params(&res, &truth, 1e-8);

    // undamped, three periods
    let flat = [0.4, 16.7e3, 0.0, 0.5];
    let res = fit_rabi_nutation(&synth(FitModel::Rabi, &flat, &ts, EXACT, 0)).unwrap();
    assert!((res.value("rabi_frequency").unwrap() / 16.7e3 - 1.0).abs() < 0.005);

    let noisy = fit_rabi_nutation(&synth(FitModel::Rabi, &truth, &ts, Noise::OfPeak(0.01), 5)).unwrap();
    assert_params(&noisy, &[0.4, 16.7e3, 2e3, 0.5], 0.05);

    let many = grid(0.0, 3.0 / 16.7e3, 200);
    let res = fit_rabi_nutation(&synth(FitModel::Rabi, &flat, &many, Noise::OfPeak(0.05), 9)).unwrap();
    assert!((res.value("rabi_frequency").unwrap() / 16.7e3 - 1.0).abs() < 0.02);
}

fn voigt_truth() -> [f64; 4] {
    [6.0e3, 3.0e3, 1.2e3, 2.5]
}

#[test]
fn voigt_round_trips() {
    let truth = voigt_truth();
    let xs = grid(-30e3, 30e3, 121);
    let res = fit_voigt(&synth(FitModel::Voigt, &truth, &xs, EXACT, 0)).unwrap();
    assert_params(&res, &truth, 1e-8);

    let noisy = fit_voigt(&synth(FitModel::Voigt, &truth, &xs, Noise::OfPeak(0.01), 3)).unwrap();
    assert_params(&noisy, &truth, 0.05);
}

#[test]
fn voigt_total_width_recovered() {
    // lorentzian share chosen so the total width is 7.8 kHz
    let l = 2.0e3;
    let g = {
        let (mut lo, mut hi) = (1.0, 7.8e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if SpectralDistribution::voigt(mid, l).fwhm().unwrap() < 7.8e3 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let xs = grid(-40e3, 40e3, 161);
    let res = fit_voigt(&synth(FitModel::Voigt, &[g, l, 0.0, 1.0], &xs, Noise::OfPeak(0.01), 17)).unwrap();
    let fw = res.value("total_fwhm").unwrap();
    assert!((fw / 7.8e3 - 1.0).abs() < 0.03, "{fw}");
}

#[test]
fn voigt_nests_its_limits() {
    let xs = grid(-30e3, 30e3, 121);
    let pure_g = fit_voigt(&synth(FitModel::Voigt, &[7.8e3, 0.0, 0.0, 1.0], &xs, Noise::OfPeak(0.01), 21)).unwrap();
    let (l, sl) = (pure_g.value("lorentz_fwhm").unwrap(), pure_g.sigma("lorentz_fwhm").unwrap());
    assert!(l <= 3.0 * sl + 1e-9 * 7.8e3, "lorentz {l} +- {sl}");

    let pure_l = fit_voigt(&synth(FitModel::Voigt, &[0.0, 5e3, 0.0, 1.0], &xs, Noise::OfPeak(0.01), 22)).unwrap();
    let (g, sg) = (pure_l.value("gauss_fwhm").unwrap(), pure_l.sigma("gauss_fwhm").unwrap());
    assert!(g <= 3.0 * sg + 1e-9 * 5e3, "gauss {g} +- {sg}");
}

#[test]
fn fit_result_serializes() {
    let data = synth(FitModel::Decay(DecayModel::ExpOnly), &[0.12, 1.9e-3], &grid(0.0, 4e-3, 10), EXACT, 0);
    let res = fit_decay(&data, DecayModel::ExpOnly, &[0.1, 1e-3]).unwrap();
    let json = serde_json::to_string(&res).unwrap();
    let back: FitResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, res);
}

fn check_gradient(model: FitModel, p: &[f64], x: f64) -> Result<(), TestCaseError> {
    let (_, grad) = model.eval_with_gradient(x, p);
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    for k in 0..p.len() {
        let h = 1e-5 * p[k].abs().max(1e-12);
        let (mut up, mut dn) = (p.to_vec(), p.to_vec());
        up[k] += h;
        dn[k] -= h;
        let fd = (model.eval(x, &up) - model.eval(x, &dn)) / (2.0 * h);
        let scale = grad[k].abs().max(1e-3 * norm);
        prop_assert!((fd - grad[k]).abs() <= 1e-6 * scale, "{model:?} p={p:?} x={x} k={k}: {fd} vs {}", grad[k]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn decay_gradients(a in 0.05..1.0f64, g in 1e3..3e4f64, r in 1e3..2e4f64, t in 0.0..80e-6f64) {
        check_gradient(FitModel::Decay(DecayModel::GaussianTimesExp), &[a, g, r], t)?;
        check_gradient(FitModel::Decay(DecayModel::GaussianOnly), &[a, g], t)?;
        check_gradient(FitModel::Decay(DecayModel::ExpOnly), &[a, 1.0 / r], t)?;
    }

    #[test]
    fn nutation_gradients(a in 0.1..1.0f64, f in 1e3..5e4f64, k in 1e2..1e4f64, c in 0.1..1.0f64, t in 0.0..2e-4f64) {
        check_gradient(FitModel::Rabi, &[a, f, k, c], t)?;
    }

    #[test]
    fn voigt_gradients(g in 1e3..1e4f64, l in 1e3..1e4f64, x0 in -2e3..2e3f64, area in 0.5..2.0f64, x in -3e4..3e4f64) {
        check_gradient(FitModel::Voigt, &[g, l, x0, area], x)?;
    }

    #[test]
    fn efficiency_monotone_in_both_delays(
        d in 0.0..5.0f64, eta in 0.0..1.0f64,
        g13 in 0.0..2e4f64, g35 in 0.0..4e4f64, gamma in 0.0..2e4f64,
        t31 in 0.0..1e-4f64, t42 in 0.0..1e-4f64, dt in 0.0..1e-4f64,
    ) {
        let p = NlpeParams { d, eta_control: eta, gamma13: g13, gamma35: g35, gamma };
        let base = nlpe_efficiency(&p, t31, t42).unwrap();
        prop_assert!(nlpe_efficiency(&p, t31 + dt, t42).unwrap() <= base);
        prop_assert!(nlpe_efficiency(&p, t31, t42 + dt).unwrap() <= base);
        prop_assert!(base <= 4.0 * (-2.0f64).exp() * eta.powi(4) + 1e-15);
    }

    #[test]
    fn lifetime_root_matches_closed_forms(g in 1e2..1e5f64) {
        let only_t31 = NlpeParams { d: 2.0, eta_control: 0.9, gamma13: g, gamma35: 0.0, gamma: 0.0 };
        let closed = (2.0 * 2f64.ln()).sqrt() / (PI * g);
        let t = lifetime_1e(&only_t31, Axis::T31, None).unwrap();
        prop_assert!(((t - closed) / closed).abs() < 1e-9);
        let only_exp = NlpeParams { d: 2.0, eta_control: 0.9, gamma13: 0.0, gamma35: 0.0, gamma: g };
        let t = lifetime_1e(&only_exp, Axis::T42, None).unwrap();
        prop_assert!(((t - 0.5 / g) * g).abs() < 1e-9);
    }
}
