//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p echomem --test acceptance -- --nocapture`.

use std::f64::consts::PI;

use echomem::echosim::{
    build_nlpe_schedule, estimate_rephasing_from_intercepts, simulate_echo, spin_rephasing_efficiency, DdSequence,
    EchoMedium, PulseErrorModel,
};
use echomem::holeburn::{absorption_spectrum, burn, FrequencyGrid, LevelScheme, PreparationRecipe};
use echomem::model::{
    absorption_factor, fit_decay, fit_rabi_nutation, fit_voigt, gaussian_dephasing, nlpe_efficiency, DecayModel,
    FitModel, FitResult, NlpeParams, Sample,
};
use echomem::photonics::{
    classical_bound, expected_signal, measured_fidelity, snr, theoretical_fidelity, total_fidelity, Analysis,
    InputState, MemoryChannel,
};
use echomem::rffield::{
    field_at, field_map, homogeneity, linspace, CpwGeometry, Disk, ElectrodeLayout, FieldVector, MU0,
};
use echomem::spectral::{Band, Pulse, SpectralDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn paper_params() -> NlpeParams {
    NlpeParams { d: 2.09, eta_control: 0.85, gamma13: 6.0e3, gamma35: 18.0e3, gamma: 8.0e3 }
}

fn c1_closed_form() -> Outcome {
    let e = nlpe_efficiency(&paper_params(), 0.0, 0.0).map_err(|e| e.to_string())?;
    check((e - 0.2820).abs() <= 1e-4, format!("efficiency at t31 = t42 = 0 is {e:.6}"))
}

fn c2_monte_carlo() -> Outcome {
    let p = paper_params();
    let base = EchoMedium::ideal(p.d, p.eta_control);
    let zero = absorption_factor(p.d) * p.eta_control.powi(4);
    let gauss = |w: f64| SpectralDistribution::gaussian(w);
    let errors = PulseErrorModel::default();
    let mut worst: f64 = 0.0;
    let mut track = |sim: f64, expected: f64| worst = worst.max(((sim - expected) / expected).abs());

    let spin = EchoMedium { spin: gauss(p.gamma13), ..base };
    for k in 0..10 {
        let t31 = 6e-6 + 6e-6 * k as f64;
        let s = build_nlpe_schedule(t31, 10e-6, t31 - 3e-6, None).map_err(|e| e.to_string())?;
        let r = simulate_echo(&s, &spin, &errors, 100_000, 1).map_err(|e| e.to_string())?;
        track(r.efficiency, zero * gaussian_dephasing(p.gamma13, t31));
    }
    let excited = EchoMedium { excited: gauss(p.gamma35), ..base };
    for k in 0..10 {
        let t42 = 4e-6 + 2e-6 * k as f64;
        let s = build_nlpe_schedule(8e-6, t42, 5e-6, None).map_err(|e| e.to_string())?;
        let r = simulate_echo(&s, &excited, &errors, 100_000, 2).map_err(|e| e.to_string())?;
        track(r.efficiency, zero * gaussian_dephasing(p.gamma35, t42));
    }
    let decoherent = EchoMedium { optical_decoherence: p.gamma, ..base };
    for k in 0..10 {
        let t42 = 4e-6 + 7e-6 * k as f64;
        let s = build_nlpe_schedule(8e-6, t42, 5e-6, None).map_err(|e| e.to_string())?;
        let r = simulate_echo(&s, &decoherent, &errors, 100_000, 3).map_err(|e| e.to_string())?;
        track(r.efficiency, zero * (-2.0 * p.gamma * t42).exp());
    }
    check(worst < 0.02, format!("worst relative deviation over 3 factors x 10 points: {worst:.4}"))
}

fn c3_dd_arithmetic() -> Outcome {
    let rf_pi = Pulse::square_with_area(2.0 * PI * 16.7e3, PI);
    let xx = spin_rephasing_efficiency(
        &DdSequence::xx(200e-6, rf_pi),
        &PulseErrorModel::with_angle_error(0.062 * PI),
        1000,
        1,
    )
    .map_err(|e| e.to_string())?;
    let residual = xx.residual_population;
    let mut ordered = true;
    for k in 0..=50 {
        let e = PulseErrorModel::with_angle_error(0.1 * PI * k as f64 / 50.0);
        let a = spin_rephasing_efficiency(&DdSequence::xy4(240e-6, rf_pi), &e, 1024, 2).map_err(|e| e.to_string())?;
        let b = spin_rephasing_efficiency(&DdSequence::xxxx(240e-6, rf_pi), &e, 1024, 2).map_err(|e| e.to_string())?;
        ordered &= a.residual_population <= b.residual_population + 1e-15;
    }
    check(
        (residual - 0.0375).abs() <= 0.001 && ordered,
        format!("XX residual {:.4}%, XY4 <= XXXX over 51 angles: {ordered}", 100.0 * residual),
    )
}

fn c4_intercepts() -> Outcome {
    let r = estimate_rephasing_from_intercepts(0.1979, 0.1985).map_err(|e| e.to_string())?;
    check(
        (r.efficiency - 0.9970).abs() <= 1e-4 && (r.residual_bound - 0.0030).abs() <= 1e-4,
        format!("rephasing {:.3}%, residual bound {:.3}%", 100.0 * r.efficiency, 100.0 * r.residual_bound),
    )
}

fn c5_snr() -> Outcome {
    let a = snr(1.07, 0.178, 0.0038).map_err(|e| e.to_string())?.value();
    let b = snr(1.07, 0.120, 0.0098).map_err(|e| e.to_string())?.value();
    check((a - 50.7).abs() <= 16.7 && (b - 13.1).abs() <= 2.4, format!("snr {a:.2} and {b:.2}"))
}

fn c6_fidelity() -> Outcome {
    let rows = [
        ([0.907, 0.908, 0.842, 0.833], 0.861),
        ([0.924, 0.938, 0.877, 0.883], 0.897),
        ([0.986, 0.982, 0.975, 0.972], 0.977),
    ];
    let mut ok = true;
    let mut got = Vec::new();
    for (f, f_t) in rows {
        let t = total_fidelity(f[0], f[1], f[2], f[3]).map_err(|e| e.to_string())?;
        ok &= (t - f_t).abs() <= 1e-3;
        got.push(format!("{:.2}%", 100.0 * t));
    }
    let th = theoretical_fidelity(1.07, &MemoryChannel::new(0.12, 0.0098)).map_err(|e| e.to_string())?;
    ok &= (th - 0.9338).abs() <= 1e-4;
    check(ok, format!("F_T {}, theory {th:.4}", got.join(" / ")))
}

fn c7_classical_bound() -> Outcome {
    let mut ok = true;
    let mut prev = 0.0;
    let mut got = Vec::new();
    for (mu, f_t) in [(0.66, 0.861), (1.07, 0.897), (4.21, 0.977)] {
        let b = classical_bound(mu, 0.12).map_err(|e| e.to_string())?.bound;
        ok &= b < f_t && b > prev;
        prev = b;
        got.push(format!("{b:.4}"));
    }
    let mut last = 0.0;
    for k in 0..=200 {
        let b = classical_bound(0.01 * 1000f64.powf(k as f64 / 200.0), 0.12).map_err(|e| e.to_string())?.bound;
        ok &= b >= last - 1e-12;
        last = b;
    }
    let small = classical_bound(1e-5, 0.12).map_err(|e| e.to_string())?.bound;
    ok &= (small - 2.0 / 3.0).abs() <= 1e-3;
    check(ok, format!("bounds {} at table rows, small-mu limit {small:.5}", got.join(" / ")))
}

fn synth(model: FitModel, p: &[f64], xs: &[f64], rel_noise: f64, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 1.0).unwrap();
    let peak = xs.iter().map(|&x| model.eval(x, p).abs()).fold(0.0, f64::max);
    xs.iter()
        .map(|&x| {
            let y = model.eval(x, p);
            // decays: noise relative to each sample; others: relative to the peak
            let sigma = match model {
                FitModel::Decay(_) => rel_noise * y.abs(),
                _ => rel_noise * peak,
            };
            if sigma > 0.0 {
                Sample::new(x, y + sigma * n.sample(&mut rng), sigma)
            } else {
                Sample::new(x, y, 1.0)
            }
        })
        .collect()
}

fn worst_rel(res: &FitResult, truth: &[f64]) -> f64 {
    res.params.iter().zip(truth).map(|(p, t)| ((p.value - t) / t).abs()).fold(0.0, f64::max)
}

fn c8_fits() -> Outcome {
    let grid = |lo: f64, hi: f64, n: usize| linspace(lo, hi, n);
    let decays: [(DecayModel, Vec<f64>, Vec<f64>); 3] = [
        (DecayModel::GaussianTimesExp, vec![0.28, 18e3, 8e3], grid(0.0, 80e-6, 20)),
        (DecayModel::GaussianOnly, vec![0.2, 6e3], grid(0.0, 120e-6, 20)),
        (DecayModel::ExpOnly, vec![0.12, 1.9e-3], grid(0.0, 4e-3, 20)),
    ];
    let (mut exact, mut noisy): (f64, f64) = (0.0, 0.0);
    for (model, truth, ts) in &decays {
        let init: Vec<f64> = truth.iter().enumerate().map(|(i, v)| v * if i % 2 == 0 { 1.3 } else { 0.7 }).collect();
        let f = FitModel::Decay(*model);
        let r = fit_decay(&synth(f, truth, ts, 0.0, 0), *model, &init).map_err(|e| e.to_string())?;
        exact = exact.max(worst_rel(&r, truth));
        let r = fit_decay(&synth(f, truth, ts, 0.01, 42), *model, &init).map_err(|e| e.to_string())?;
        noisy = noisy.max(worst_rel(&r, truth));
    }
    let rabi = [0.4, 16.7e3, 2e3, 0.5];
    let ts = grid(0.0, 3.0 / 16.7e3, 60);
    let r = fit_rabi_nutation(&synth(FitModel::Rabi, &rabi, &ts, 0.0, 0)).map_err(|e| e.to_string())?;
    exact = exact.max(worst_rel(&r, &rabi));
    let r = fit_rabi_nutation(&synth(FitModel::Rabi, &rabi, &ts, 0.01, 5)).map_err(|e| e.to_string())?;
    noisy = noisy.max(worst_rel(&r, &rabi));
    let voigt = [6.0e3, 3.0e3, 1.2e3, 2.5];
    let xs = grid(-30e3, 30e3, 121);
    let r = fit_voigt(&synth(FitModel::Voigt, &voigt, &xs, 0.0, 0)).map_err(|e| e.to_string())?;
    exact = exact.max(worst_rel(&r, &voigt));
    let r = fit_voigt(&synth(FitModel::Voigt, &voigt, &xs, 0.01, 3)).map_err(|e| e.to_string())?;
    noisy = noisy.max(worst_rel(&r, &voigt));

    // jacobians against central differences at random points
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut jac: f64 = 0.0;
    for _ in 0..50 {
        let cases: [(FitModel, Vec<f64>, f64); 5] = [
            (
                FitModel::Decay(DecayModel::GaussianTimesExp),
                vec![rng.random_range(0.05..1.0), rng.random_range(1e3..3e4), rng.random_range(1e3..2e4)],
                rng.random_range(0.0..80e-6),
            ),
            (
                FitModel::Decay(DecayModel::GaussianOnly),
                vec![0.2, rng.random_range(1e3..3e4)],
                rng.random_range(0.0..80e-6),
            ),
            (
                FitModel::Decay(DecayModel::ExpOnly),
                vec![0.12, rng.random_range(1e-4..3e-3)],
                rng.random_range(0.0..4e-3),
            ),
            (
                FitModel::Rabi,
                vec![rng.random_range(0.1..1.0), rng.random_range(1e3..5e4), rng.random_range(1e2..1e4), 0.5],
                rng.random_range(0.0..2e-4),
            ),
            (
                FitModel::Voigt,
                vec![rng.random_range(1e3..1e4), rng.random_range(1e3..1e4), rng.random_range(-2e3..2e3), 1.0],
                rng.random_range(-3e4..3e4),
            ),
        ];
        for (model, p, x) in cases {
            let (_, grad) = model.eval_with_gradient(x, &p);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            for k in 0..p.len() {
                let h = 1e-5 * p[k].abs();
                let (mut up, mut dn) = (p.clone(), p.clone());
                up[k] += h;
                dn[k] -= h;
                let fd = (model.eval(x, &up) - model.eval(x, &dn)) / (2.0 * h);
                jac = jac.max((fd - grad[k]).abs() / grad[k].abs().max(1e-3 * norm));
            }
        }
    }
    check(
        exact < 1e-8 && noisy < 0.05 && jac < 1e-6,
        format!("noiseless worst {exact:.1e}, 1% noise worst {:.2}%, jacobian worst {jac:.1e}", 100.0 * noisy),
    )
}

fn c9_interference() -> Outcome {
    let clean = MemoryChannel::new(0.12, 0.0);
    let q = InputState::Plus.qubit(1.07);
    let off = expected_signal(&clean, &q, &Analysis::HalfPiPair { phase: PI }).map_err(|e| e.to_string())?[1];
    // the split readout retrieves half the amplitude into the central bin
    let ch = MemoryChannel::new(0.12, 0.0098);
    let mc = measured_fidelity(&ch, InputState::Plus, 1.07, 1_000_000, 2024).map_err(|e| e.to_string())?;
    let theory = theoretical_fidelity(1.07, &MemoryChannel::new(0.06, 0.0098)).map_err(|e| e.to_string())?;
    let rel = ((mc - theory) / theory).abs();
    check(
        off < 1e-12 && rel < 0.01,
        format!("extinction {off:.1e}, monte carlo {mc:.4} vs theory {theory:.4} ({:.2}%)", 100.0 * rel),
    )
}

fn c10_rf_field() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let layout = ElectrodeLayout::cpw(CpwGeometry::default(), 1.0);
    let mut bs: f64 = 0.0;
    for _ in 0..50 {
        let (x, d) = (rng.random_range(-400e-6..400e-6), rng.random_range(10e-6..120e-6));
        let a = field_at(&layout, x, d).map_err(|e| e.to_string())?;
        let mut b = FieldVector::default();
        for s in &layout.strips {
            let n = 10_000;
            let di = s.direction.sign() * s.current / n as f64;
            for k in 0..n {
                let xi = s.center_x - 0.5 * s.width + (k as f64 + 0.5) * s.width / n as f64;
                let c = MU0 * di / (2.0 * PI * ((x - xi).powi(2) + d * d));
                b.bx -= c * d;
                b.bz -= c * (x - xi);
            }
        }
        bs = bs.max((a.bx - b.bx).hypot(a.bz - b.bz) / b.norm());
    }
    let r = 20e-6;
    let thin = field_at(&ElectrodeLayout::single(r / 100.0, 1.0), 0.0, r).map_err(|e| e.to_string())?.norm();
    let ampere = ((thin - MU0 / (2.0 * PI * r)) / (MU0 / (2.0 * PI * r))).abs();

    let disk = Disk { center_x: 0.0, center_depth: 15e-6, diameter: 16.3e-6 };
    let stats = |w: f64| -> Result<_, String> {
        let g = CpwGeometry { signal_width: w, ..CpwGeometry::default() };
        let map = field_map(&ElectrodeLayout::cpw(g, 1.0), &linspace(-10e-6, 10e-6, 161), &linspace(5e-6, 25e-6, 161))
            .map_err(|e| e.to_string())?;
        homogeneity(&map, &disk).map_err(|e| e.to_string())
    };
    let (wide, narrow) = (stats(150e-6)?, stats(75e-6)?);
    check(
        bs < 1e-6
            && ampere < 0.01
            && wide.relative_std <= 0.05
            && narrow.mean > wide.mean
            && narrow.relative_std > wide.relative_std,
        format!(
            "biot-savart {bs:.1e}, ampere {:.3}%, rel std 150 um {:.2}% / 75 um {:.2}%, mean ratio {:.2}",
            100.0 * ampere,
            100.0 * wide.relative_std,
            100.0 * narrow.relative_std,
            narrow.mean / wide.mean
        ),
    )
}

fn c11_hole_burning() -> Outcome {
    let scheme = LevelScheme::default();
    let recipe = PreparationRecipe::default();
    let pops = burn(&scheme, FrequencyGrid::new(-4e6, 4e6, 801), &recipe.steps()).map_err(|e| e.to_string())?;
    let d0 = 2.09;
    let prof = absorption_spectrum(&pops, &scheme, d0).map_err(|e| e.to_string())?;
    let window = Band::centered(recipe.window_width);
    let residual =
        prof.mean_alpha(window, Some(Band::centered(recipe.feature_width + 0.4e6))).map_err(|e| e.to_string())?;
    let fwhm = prof.feature_fwhm(window).map_err(|e| e.to_string())?;
    check(
        recipe.window_width >= 4e6 && residual < 0.05 * d0 && (fwhm - 1.8e6).abs() <= 0.2e6,
        format!(
            "window {:.1} MHz, residual {:.2}% of background, feature fwhm {:.3} MHz",
            recipe.window_width / 1e6,
            100.0 * residual / d0,
            fwhm / 1e6
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (1, "closed-form efficiency", c1_closed_form),
        (2, "monte carlo vs analytic", c2_monte_carlo),
        (3, "dd arithmetic", c3_dd_arithmetic),
        (4, "rephasing intercepts", c4_intercepts),
        (5, "snr", c5_snr),
        (6, "fidelity pipeline", c6_fidelity),
        (7, "classical bound", c7_classical_bound),
        (8, "fit round trips", c8_fits),
        (9, "interference identities", c9_interference),
        (10, "rf field", c10_rf_field),
        (11, "hole burning", c11_hole_burning),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name}: {detail}");
                failed.push(n);
            }
        }
    }
    println!("criterion 12 (cli determinism) runs in the echomem-cli acceptance target");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
