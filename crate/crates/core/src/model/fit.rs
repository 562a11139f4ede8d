use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{self, Options, Problem};
use super::{gaussian_width_constant, lifetime_1e, Axis, NlpeParams};
use crate::error::{ensure_finite, Error, Result};
use crate::quad;
use crate::spectral::{fwhm_per_sigma, lorentz_pdf, SpectralDistribution};

/// Number of extra starts tried around the initial guess.
pub const DEFAULT_RESTARTS: usize = 5;

/// One data point. `sigma` is the one-sigma error of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    #[serde(default = "unit")]
    pub sigma: f64,
}

fn unit() -> f64 {
    1.0
}

impl Sample {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }

    pub fn unweighted(x: f64, y: f64) -> Self {
        Self { x, y, sigma: 1.0 }
    }
}

/// Decay laws for storage-time sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `A exp(-g35^2 t^2 / c) exp(-2 g t)`, params `(A, gamma35, gamma)`.
    GaussianTimesExp,
    /// `A exp(-g13^2 t^2 / c)`, params `(A, gamma13)`.
    GaussianOnly,
    /// `A exp(-t / T)`, params `(A, lifetime)`.
    ExpOnly,
}

impl DecayModel {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            DecayModel::GaussianTimesExp => &["amplitude", "gamma35", "gamma"],
            DecayModel::GaussianOnly => &["amplitude", "gamma13"],
            DecayModel::ExpOnly => &["amplitude", "lifetime"],
        }
    }

    /// Rough starting point from the data: peak value and the first 1/e
    /// crossing.
    pub fn initial_guess(self, data: &[Sample]) -> Vec<f64> {
        let mut pts: Vec<&Sample> = data.iter().collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        let a = pts.iter().map(|s| s.y).fold(f64::MIN, f64::max).max(f64::MIN_POSITIVE);
        let span = pts.last().map_or(1.0, |s| s.x) - pts.first().map_or(0.0, |s| s.x);
        let t_e = pts.iter().find(|s| s.y < a / std::f64::consts::E).map_or(span, |s| s.x).max(span * 1e-3);
        let c = gaussian_width_constant().sqrt();
        match self {
            DecayModel::GaussianTimesExp => vec![a, 0.7 * c / t_e, 0.25 / t_e],
            DecayModel::GaussianOnly => vec![a, c / t_e],
            DecayModel::ExpOnly => vec![a, t_e],
        }
    }
}

/// A fitted model family, able to evaluate itself for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "variant", rename_all = "snake_case")]
pub enum FitModel {
    Decay(DecayModel),
    Rabi,
    Voigt,
}

impl FitModel {
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            FitModel::Decay(m) => m.names(),
            FitModel::Rabi => &["amplitude", "rabi_frequency", "decay_rate", "offset"],
            FitModel::Voigt => &["gauss_fwhm", "lorentz_fwhm", "center", "area"],
        }
    }

    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        self.eval_with_gradient(x, p).0
    }

    /// Model value and its gradient with respect to the parameters.
    pub fn eval_with_gradient(&self, x: f64, p: &[f64]) -> (f64, Vec<f64>) {
        match self {
            FitModel::Decay(m) => decay_eval(*m, x, p),
            FitModel::Rabi => rabi_eval(x, p),
            FitModel::Voigt => voigt_eval(x, p),
        }
    }
}

fn decay_eval(model: DecayModel, t: f64, p: &[f64]) -> (f64, Vec<f64>) {
    let c = gaussian_width_constant();
    match model {
        DecayModel::GaussianTimesExp => {
            let e = (-(p[1] * t).powi(2) / c - 2.0 * p[2] * t).exp();
            let y = p[0] * e;
            (y, vec![e, -2.0 * p[1] * t * t / c * y, -2.0 * t * y])
        }
        DecayModel::GaussianOnly => {
            let e = (-(p[1] * t).powi(2) / c).exp();
            let y = p[0] * e;
            (y, vec![e, -2.0 * p[1] * t * t / c * y])
        }
        DecayModel::ExpOnly => {
            let e = (-t / p[1]).exp();
            let y = p[0] * e;
            (y, vec![e, y * t / (p[1] * p[1])])
        }
    }
}

fn rabi_eval(t: f64, p: &[f64]) -> (f64, Vec<f64>) {
    let w = 2.0 * PI * p[1];
    let (s, c) = (w * t).sin_cos();
    let e = (-p[2] * t).exp();
    let y = p[0] * c * e + p[3];
    (y, vec![c * e, -p[0] * s * 2.0 * PI * t * e, -t * p[0] * c * e, 1.0])
}

/// Dawson's integral `exp(-x^2) ∫_0^x exp(u^2) du`.
fn dawson(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -dawson(-x);
    }
    quad::integrate_scalar(|u| (u * u - x * x).exp(), 0.0, x, &[], 1e-300, 1e-13)
}

fn voigt_eval(x: f64, p: &[f64]) -> (f64, Vec<f64>) {
    let (g, l, x0, area) = (p[0].abs(), p[1].abs(), p[2], p[3]);
    let (sg, sl) = (sign(p[0]), sign(p[1]));
    let u = x - x0;
    if g == 0.0 && l == 0.0 {
        return (0.0, vec![0.0; 4]);
    }
    if l == 0.0 {
        // gaussian limit; the lorentzian slope comes from the Faddeeva
        // expansion, dV/dhwhm = -(1 - 2 z D(z)) / (pi sigma^2)
        let s = g / fwhm_per_sigma();
        let z = u / (s * std::f64::consts::SQRT_2);
        let v = (-0.5 * (u / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
        let dv_dhwhm = -(1.0 - 2.0 * z * dawson(z)) / (PI * s * s);
        let dv_ds = ((u / s).powi(2) - 1.0) / s * v;
        let dv_du = -u / (s * s) * v;
        return (area * v, vec![area * dv_ds / fwhm_per_sigma() * sg, area * 0.5 * dv_dhwhm * sl, -area * dv_du, v]);
    }
    if g == 0.0 {
        let h = 0.5 * l;
        let v = lorentz_pdf(u, h);
        let den = PI * (u * u + h * h).powi(2);
        let dv_dh = (u * u - h * h) / den;
        let dv_du = -2.0 * u * h / den;
        return (area * v, vec![0.0, area * 0.5 * dv_dh * sl, -area * dv_du, v]);
    }
    let jet = SpectralDistribution::voigt(g, l).voigt_jet(u).expect("positive widths form a valid profile");
    (area * jet.value, vec![area * jet.d_gauss_fwhm * sg, area * jet.d_lorentz_fwhm * sl, -area * jet.d_x, jet.value])
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// One-sigma uncertainty; absent for derived quantities.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<FitParam>,
    /// Quantities computed from the fitted parameters.
    pub derived: Vec<FitParam>,
    /// Unweighted Euclidean norm of `y - f(x)`.
    pub residual_norm: f64,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().chain(&self.derived).find(|p| p.name == name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.sigma)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.model.eval(x, &self.values())
    }
}

fn check_samples(data: &[Sample], min_points: usize, n_params: usize) -> Result<()> {
    if data.len() < min_points {
        return Err(Error::domain(format!("need at least {min_points} points, got {}", data.len())));
    }
    for s in data {
        ensure_finite("x", s.x)?;
        ensure_finite("y", s.y)?;
        ensure_finite("sigma", s.sigma)?;
        if !(s.sigma > 0.0) {
            return Err(Error::domain("sigmas must be positive"));
        }
    }
    let mut xs: Vec<f64> = data.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < n_params {
        return Err(Error::Rank(format!("{} distinct abscissae for {n_params} parameters", xs.len())));
    }
    Ok(())
}

/// Multiplicative offsets applied to the initial guess on restart `r`.
fn perturbed(init: &[f64], r: usize) -> Vec<f64> {
    const STEPS: [f64; 4] = [0.25, -0.2, 0.5, -0.35];
    init.iter()
        .enumerate()
        .map(|(k, v)| {
            let s = STEPS[(r + k) % STEPS.len()];
            v * (1.0 + if (r + k).is_multiple_of(2) { s } else { -s })
        })
        .collect()
}

fn run_fit(model: FitModel, data: &[Sample], starts: &[Vec<f64>]) -> FitResult {
    let n = model.names().len();
    let m = data.len();
    let residuals = |p: &[f64]| DVector::from_iterator(m, data.iter().map(|s| (s.y - model.eval(s.x, p)) / s.sigma));
    let jacobian = |p: &[f64]| {
        let mut j = DMatrix::zeros(m, n);
        for (i, s) in data.iter().enumerate() {
            let (_, g) = model.eval_with_gradient(s.x, p);
            for k in 0..n {
                j[(i, k)] = -g[k] / s.sigma;
            }
        }
        j
    };
    let problem = Problem { n_params: n, residuals: &residuals, jacobian: &jacobian };
    let mut best: Option<lm::Outcome> = None;
    let mut iterations = 0;
    for start in starts {
        let out = lm::minimize(&problem, start, Options::default());
        iterations += out.iterations;
        let better = match &best {
            None => true,
            Some(b) => out.cost.is_finite() && (!b.cost.is_finite() || out.cost < b.cost),
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let sig = lm::uncertainties(&best.jacobian, best.cost);
    let residual_norm = data.iter().map(|s| (s.y - model.eval(s.x, &best.params)).powi(2)).sum::<f64>().sqrt();
    let dof = m.saturating_sub(n).max(1) as f64;
    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push("optimizer stopped before reaching tolerance".to_string());
    }
    FitResult {
        model,
        params: model
            .names()
            .iter()
            .zip(&best.params)
            .zip(sig)
            .map(|((name, &value), sigma)| FitParam { name: name.to_string(), value, sigma: Some(sigma) })
            .collect(),
        derived: Vec::new(),
        residual_norm,
        chi2: best.cost,
        chi2_reduced: best.cost / dof,
        converged: best.converged,
        iterations,
        warnings,
    }
}

fn starts_around(init: &[f64], restarts: usize) -> Vec<Vec<f64>> {
    std::iter::once(init.to_vec()).chain((0..restarts).map(|r| perturbed(init, r))).collect()
}

fn derived(name: &str, value: f64) -> FitParam {
    FitParam { name: name.to_string(), value, sigma: None }
}

/// Weighted least-squares fit of a storage-time decay.
pub fn fit_decay(data: &[Sample], model: DecayModel, init: &[f64]) -> Result<FitResult> {
    let n = model.names().len();
    if init.len() != n {
        return Err(Error::Shape(format!("{} initial values for {n} parameters", init.len())));
    }
    for &v in init {
        ensure_finite("init", v)?;
    }
    check_samples(data, 4.max(n), n)?;
    let mut res = run_fit(FitModel::Decay(model), data, &starts_around(init, DEFAULT_RESTARTS));
    for p in res.params.iter_mut().skip(1) {
        if model != DecayModel::ExpOnly {
            p.value = p.value.abs();
        }
    }
    let v = res.values();
    let lifetime = match model {
        DecayModel::ExpOnly => Ok(v[1]),
        DecayModel::GaussianOnly => {
            let p = NlpeParams { d: 1.0, eta_control: 1.0, gamma13: v[1], gamma35: 0.0, gamma: 0.0 };
            lifetime_1e(&p, Axis::T31, None)
        }
        DecayModel::GaussianTimesExp => {
            let p = NlpeParams { d: 1.0, eta_control: 1.0, gamma13: 0.0, gamma35: v[1], gamma: v[2] };
            lifetime_1e(&p, Axis::T42, None)
        }
    };
    if let Ok(t) = lifetime {
        res.derived.push(derived("lifetime_1e", t));
    }
    Ok(res)
}

/// Fits `A cos(2 pi f t) exp(-k t) + C` to a nutation trace.
pub fn fit_rabi_nutation(data: &[Sample]) -> Result<FitResult> {
    check_samples(data, 8, 4)?;
    let mut pts = data.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    let n = pts.len() as f64;
    let span = pts[pts.len() - 1].x - pts[0].x;
    let mean = pts.iter().map(|s| s.y).sum::<f64>() / n;
    let spread = pts.iter().map(|s| (s.y - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-12 * mean.abs().max(f64::MIN_POSITIVE)) || span <= 0.0 {
        return Err(Error::Ambiguous("signal has no oscillation".into()));
    }
    // coarse periodogram for the starting frequency
    let f_max = 0.5 * (n - 1.0) / span;
    let df = 0.02 / span;
    let mut best = (0.0, f64::MIN, 0.0);
    let mut f = 0.5 / span;
    while f <= f_max {
        let (mut c, mut s) = (0.0, 0.0);
        for p in &pts {
            let (sn, cs) = (2.0 * PI * f * (p.x - pts[0].x)).sin_cos();
            c += (p.y - mean) * cs;
            s += (p.y - mean) * sn;
        }
        let power = c * c + s * s;
        if power > best.1 {
            best = (f, power, 0.0);
        }
        f += df;
    }
    let f0 = best.0;
    // amplitude from the projection at t = 0 phase reference
    let (mut cc, mut yc) = (0.0, 0.0);
    for p in &pts {
        let c = (2.0 * PI * f0 * p.x).cos();
        cc += c * c;
        yc += (p.y - mean) * c;
    }
    let a0 = if cc > 0.0 { yc / cc } else { spread };
    let init = [a0, f0, 0.0, mean];
    let mut starts = vec![init.to_vec()];
    for r in 0..DEFAULT_RESTARTS {
        // keep the frequency near the periodogram peak
        let mut s = perturbed(&init, r);
        s[1] = f0 * (1.0 + 0.01 * (r as f64 - 2.0));
        s[2] = if r % 2 == 0 { 0.0 } else { 0.1 / span };
        s[3] = mean;
        starts.push(s);
    }
    let mut res = run_fit(FitModel::Rabi, &pts, &starts);
    if res.params[1].value < 0.0 {
        res.params[1].value = -res.params[1].value;
    }
    let f_fit = res.params[1].value;
    if f_fit * span < 0.95 {
        return Err(Error::Ambiguous(format!("data span {:.3} periods; at least one period is needed", f_fit * span)));
    }
    let k = res.params[2].value;
    res.derived.push(derived("decay_time", if k > 0.0 { 1.0 / k } else { f64::INFINITY }));
    Ok(res)
}

/// Fits an area-normalized Voigt line `area * V(x - center)`.
pub fn fit_voigt(spectrum: &[Sample]) -> Result<FitResult> {
    check_samples(spectrum, 10, 4)?;
    let mut pts = spectrum.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    let (imax, peak) =
        pts.iter().enumerate().fold((0, f64::MIN), |acc, (i, s)| if s.y > acc.1 { (i, s.y) } else { acc });
    if !(peak > 0.0) {
        return Err(Error::domain("spectrum has no positive peak"));
    }
    let half = 0.5 * peak;
    let cross = |range: &mut dyn Iterator<Item = usize>, toward: isize| -> f64 {
        for i in range {
            if pts[i].y < half {
                let j = (i as isize - toward) as usize;
                let (a, b) = (&pts[i], &pts[j]);
                return a.x + (half - a.y) * (b.x - a.x) / (b.y - a.y);
            }
        }
        if toward < 0 {
            pts[pts.len() - 1].x
        } else {
            pts[0].x
        }
    };
    let left = cross(&mut (0..imax).rev(), -1);
    let right = cross(&mut (imax + 1..pts.len()), 1);
    let fw = (right - left).max(1e-12 * pts[imax].x.abs().max(1.0));
    let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].y + w[1].y) * (w[1].x - w[0].x)).sum();
    let x0 = pts[imax].x;
    let starts = vec![
        vec![0.8 * fw, 0.3 * fw, x0, area],
        vec![fw, 0.05 * fw, x0, area],
        vec![0.1 * fw, 0.9 * fw, x0, area],
        vec![0.6 * fw, 0.6 * fw, x0, area],
        vec![0.95 * fw, 0.15 * fw, x0, 0.9 * area],
        vec![0.3 * fw, 0.75 * fw, x0, 1.1 * area],
    ];
    let mut res = run_fit(FitModel::Voigt, &pts, &starts);
    for p in res.params.iter_mut().take(2) {
        p.value = p.value.abs();
    }
    let v = res.values();
    if v[0] > 0.0 || v[1] > 0.0 {
        let kind = if v[1] == 0.0 {
            SpectralDistribution::gaussian(v[0])
        } else if v[0] == 0.0 {
            SpectralDistribution::lorentzian(v[1])
        } else {
            SpectralDistribution::voigt(v[0], v[1])
        };
        res.derived.push(derived("total_fwhm", kind.fwhm()?));
    }
    // the samples above half maximum should form one contiguous run
    let above: Vec<bool> = pts.iter().map(|s| s.y >= half).collect();
    let runs = above.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(above[0]);
    if runs > 1 {
        res.warnings.push("spectrum is not unimodal; fit quality is doubtful".to_string());
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dawson_reference_values() {
        // D(1) = 0.5380795069127684
        assert!((dawson(1.0) - 0.538_079_506_912_768_4).abs() < 1e-12);
        assert!((dawson(-1.0) + 0.538_079_506_912_768_4).abs() < 1e-12);
    }

    #[test]
    fn decay_rank_and_shape_errors() {
        let data: Vec<Sample> = (0..6).map(|_| Sample::new(1e-5, 0.2, 0.01)).collect();
        assert!(matches!(fit_decay(&data, DecayModel::ExpOnly, &[0.2, 1e-3]), Err(Error::Rank(_))));
        assert!(matches!(fit_decay(&data, DecayModel::ExpOnly, &[0.2]), Err(Error::Shape(_))));
        let few: Vec<Sample> = (0..3).map(|i| Sample::new(i as f64, 1.0, 0.1)).collect();
        assert!(fit_decay(&few, DecayModel::ExpOnly, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_nutation_is_ambiguous() {
        let data: Vec<Sample> = (0..40).map(|i| Sample::unweighted(i as f64 * 1e-6, 0.3)).collect();
        assert!(matches!(fit_rabi_nutation(&data), Err(Error::Ambiguous(_))));
    }

    #[test]
    fn short_nutation_is_ambiguous() {
        let data: Vec<Sample> = (0..40)
            .map(|i| {
                let t = i as f64 * 1e-6;
                Sample::unweighted(t, (2.0 * PI * 1e4 * t).cos())
            })
            .collect();
        // 40 us at 10 kHz is 0.4 periods
        assert!(matches!(fit_rabi_nutation(&data), Err(Error::Ambiguous(_))));
    }

    #[test]
    fn bimodal_spectrum_warns() {
        let v = |x: f64| lorentz_pdf(x - 3.0, 1.0) + lorentz_pdf(x + 3.0, 1.0);
        let data: Vec<Sample> = (0..121)
            .map(|i| {
                let x = -12.0 + 0.2 * i as f64;
                Sample::unweighted(x, v(x))
            })
            .collect();
        let res = fit_voigt(&data).unwrap();
        assert!(!res.warnings.is_empty());
    }
}
