use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quad;

/// Number of draws that share one counter-based random stream. Fixed so that
/// the draws assigned to a given index never depend on thread count.
pub const SAMPLE_CHUNK: usize = 1024;

/// FWHM-to-sigma factor of a Gaussian, `2 sqrt(2 ln 2)`.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * LN_2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    Gaussian,
    Lorentzian,
    Voigt,
}

/// Inhomogeneous detuning law. Widths and center are in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDistribution {
    pub kind: LineShape,
    #[serde(default)]
    pub gauss_fwhm: f64,
    #[serde(default)]
    pub lorentz_fwhm: f64,
    #[serde(default)]
    pub center: f64,
}

/// Value of a Voigt density together with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoigtJet {
    pub value: f64,
    pub d_x: f64,
    pub d_gauss_fwhm: f64,
    pub d_lorentz_fwhm: f64,
}

impl SpectralDistribution {
    pub fn gaussian(fwhm: f64) -> Self {
        Self { kind: LineShape::Gaussian, gauss_fwhm: fwhm, lorentz_fwhm: 0.0, center: 0.0 }
    }

    pub fn lorentzian(fwhm: f64) -> Self {
        Self { kind: LineShape::Lorentzian, gauss_fwhm: 0.0, lorentz_fwhm: fwhm, center: 0.0 }
    }

    pub fn voigt(gauss_fwhm: f64, lorentz_fwhm: f64) -> Self {
        Self { kind: LineShape::Voigt, gauss_fwhm, lorentz_fwhm, center: 0.0 }
    }

    /// Zero-width (delta) distribution: every ion sits at `center`.
    pub fn delta() -> Self {
        Self::gaussian(0.0)
    }

    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("gauss_fwhm", self.gauss_fwhm)?;
        ensure_finite("lorentz_fwhm", self.lorentz_fwhm)?;
        ensure_finite("center", self.center)?;
        if self.gauss_fwhm < 0.0 || self.lorentz_fwhm < 0.0 {
            return Err(Error::domain("distribution widths must be non-negative"));
        }
        match self.kind {
            LineShape::Gaussian if self.lorentz_fwhm != 0.0 => {
                Err(Error::domain("gaussian distribution with a lorentzian width"))
            }
            LineShape::Lorentzian if self.gauss_fwhm != 0.0 => {
                Err(Error::domain("lorentzian distribution with a gaussian width"))
            }
            _ => Ok(()),
        }
    }

    /// True when every draw equals `center`.
    pub fn is_degenerate(&self) -> bool {
        self.gauss_fwhm == 0.0 && self.lorentz_fwhm == 0.0
    }

    fn sigma(&self) -> f64 {
        self.gauss_fwhm / fwhm_per_sigma()
    }

    fn hwhm(&self) -> f64 {
        0.5 * self.lorentz_fwhm
    }

    /// Probability density (1/Hz) at `detuning`.
    ///
    /// A zero-width distribution has no density; it reports an error rather
    /// than an infinite value.
    pub fn pdf(&self, detuning: f64) -> Result<f64> {
        self.validate()?;
        ensure_finite("detuning", detuning)?;
        if self.is_degenerate() {
            return Err(Error::domain("zero-width distribution has no density"));
        }
        let x = detuning - self.center;
        Ok(match (self.sigma(), self.hwhm()) {
            (s, 0.0) => gauss_pdf(x, s),
            (0.0, g) => lorentz_pdf(x, g),
            (s, g) => voigt_integrals(x, s, g, false).0,
        })
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, detuning: f64) -> Result<f64> {
        self.validate()?;
        ensure_finite("detuning", detuning)?;
        let x = detuning - self.center;
        let (s, g) = (self.sigma(), self.hwhm());
        if self.is_degenerate() {
            return Ok(if x >= 0.0 { 1.0 } else { 0.0 });
        }
        Ok(if g == 0.0 {
            gauss_cdf(x, s)
        } else if s == 0.0 {
            0.5 + (x / g).atan() / PI
        } else {
            if s < g {
                // F(x) = ∫ phi(u) (1/2 + atan((x - s u) / g) / pi) du
                let breaks = gauss_var_breaks(x, s, g);
                return Ok(quad::integrate_scalar(
                    |u| std_normal(u) * (0.5 + ((x - s * u) / g).atan() / PI),
                    -GAUSS_REACH,
                    GAUSS_REACH,
                    &breaks,
                    1e-16,
                    1e-13,
                ));
            }
            // F(x) = (1/pi) ∫ Phi(x - g tan t) dt over (-pi/2, pi/2)
            let t0 = (x / g).atan();
            let w = (s / g) * t0.cos().powi(2);
            let breaks: Vec<f64> = [0.0, -1.0, 1.0, -4.0, 4.0, -12.0, 12.0].iter().map(|k| t0 + k * w).collect();
            quad::integrate_scalar(|t| gauss_cdf(x - g * t.tan(), s), -FRAC_PI_2, FRAC_PI_2, &breaks, 1e-15, 1e-12) / PI
        })
    }

    /// Full width at half maximum of the profile, found numerically for Voigt.
    pub fn fwhm(&self) -> Result<f64> {
        self.validate()?;
        let (s, g) = (self.sigma(), self.hwhm());
        if g == 0.0 {
            return Ok(self.gauss_fwhm);
        }
        if s == 0.0 {
            return Ok(self.lorentz_fwhm);
        }
        let peak = voigt_integrals(0.0, s, g, false).0;
        let mut lo = 0.0;
        let mut hi = self.gauss_fwhm.max(self.lorentz_fwhm);
        while voigt_integrals(hi, s, g, false).0 > 0.5 * peak {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if voigt_integrals(mid, s, g, false).0 > 0.5 * peak {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(lo + hi)
    }

    /// Density and its partial derivatives with respect to detuning and the
    /// two FWHM parameters. Used by the profile fitter.
    pub fn voigt_jet(&self, detuning: f64) -> Result<VoigtJet> {
        self.validate()?;
        if self.gauss_fwhm == 0.0 {
            return Err(Error::domain("voigt jet needs a nonzero gaussian width"));
        }
        let x = detuning - self.center;
        let s = self.sigma();
        let g = self.hwhm();
        let (value, d_x, d_sigma, d_g) = voigt_integrals(x, s, g, true);
        Ok(VoigtJet { value, d_x, d_gauss_fwhm: d_sigma / fwhm_per_sigma(), d_lorentz_fwhm: 0.5 * d_g })
    }

    /// Draws `n` detunings from a stream keyed by `seed`. The draw for index
    /// `i` depends only on `(seed, i)`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        self.validate()?;
        let chunks = n.div_ceil(SAMPLE_CHUNK);
        let mut out = Vec::with_capacity(n);
        for chunk in 0..chunks {
            let len = SAMPLE_CHUNK.min(n - chunk * SAMPLE_CHUNK);
            out.extend(self.sample_chunk(seed, chunk as u64, len));
        }
        Ok(out)
    }

    /// Draws for one fixed-size chunk of a sample stream. Public so ensemble
    /// code can generate chunks in parallel.
    pub fn sample_chunk(&self, seed: u64, chunk: u64, len: usize) -> Vec<f64> {
        let mut rng = chunk_rng(seed, chunk);
        let normal = (self.gauss_fwhm > 0.0).then(|| Normal::new(0.0, self.sigma()).unwrap());
        let cauchy = (self.lorentz_fwhm > 0.0).then(|| Cauchy::new(0.0, self.hwhm()).unwrap());
        (0..len)
            .map(|_| {
                let mut x = self.center;
                if let Some(n) = &normal {
                    x += n.sample(&mut rng);
                }
                if let Some(c) = &cauchy {
                    x += c.sample(&mut rng);
                }
                x
            })
            .collect()
    }
}

/// Counter-based stream for chunk `chunk` of a run keyed by `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

pub(crate) fn gauss_pdf(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn gauss_cdf(x: f64, sigma: f64) -> f64 {
    0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2))
}

pub(crate) fn lorentz_pdf(x: f64, hwhm: f64) -> f64 {
    hwhm / (PI * (x * x + hwhm * hwhm))
}

/// Voigt value as a Lorentz-weighted average of Gaussians, using the
/// substitution `u = x - g tan(t)` which turns the Lorentzian into a flat
/// weight on `(-pi/2, pi/2)`. Returns `(V, dV/dx, dV/dsigma, dV/dg)`.
fn voigt_integrals(x: f64, sigma: f64, g: f64, jet: bool) -> (f64, f64, f64, f64) {
    if sigma < g {
        return voigt_integrals_gauss_var(x, sigma, g, jet);
    }
    let t0 = (x / g).atan();
    // Width of the gaussian bump in t around t0.
    let w = (sigma / g) * t0.cos().powi(2);
    let mut breaks = vec![t0];
    for k in [1.0, 4.0, 12.0] {
        breaks.push(t0 - k * w);
        breaks.push(t0 + k * w);
    }
    let peak = 1.0 / (sigma * (2.0 * PI).sqrt());
    let g_at_x = gauss_pdf(x, sigma);
    let r = quad::integrate(
        |t| {
            let u = x - g * t.tan();
            let gu = gauss_pdf(u, sigma);
            if !jet {
                return [gu, 0.0, 0.0, 0.0];
            }
            let z = u / sigma;
            [
                gu,
                -z / sigma * gu,
                (z * z - 1.0) / sigma * gu,
                // d/dg of the lorentzian kernel becomes -cos(2t)/(pi g); the
                // constant G(x) integrates to zero against it.
                -(2.0 * t).cos() * (gu - g_at_x),
            ]
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &breaks,
        1e-16 * peak,
        1e-13,
    );
    (r[0] / PI, r[1] / PI, r[2] / PI, r[3] / (PI * g))
}

/// Gaussian weight beyond this many standard deviations is below 1e-300.
const GAUSS_REACH: f64 = 38.0;

fn std_normal(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Breaks for integrands `phi(u) f(x - sigma u)` where `f` has width `g`
/// around zero.
fn gauss_var_breaks(x: f64, sigma: f64, g: f64) -> Vec<f64> {
    let (c, w) = (x / sigma, g / sigma);
    let mut b = vec![0.0, -4.0, 4.0];
    for k in [0.0, -1.0, 1.0, -4.0, 4.0] {
        b.push(c + k * w);
    }
    b
}

/// The same integrals over the gaussian variable `u`, with
/// `V = ∫ phi(u) L(x - sigma u) du`; smooth when `sigma < g`.
fn voigt_integrals_gauss_var(x: f64, sigma: f64, g: f64, jet: bool) -> (f64, f64, f64, f64) {
    let peak = 1.0 / (PI * g);
    let r = quad::integrate(
        |u| {
            let y = x - sigma * u;
            let den = y * y + g * g;
            let w = std_normal(u);
            let l = w * g / (PI * den);
            if !jet {
                return [l, 0.0, 0.0, 0.0];
            }
            let dl_dy = -2.0 * y / den * l;
            [l, dl_dy, -u * dl_dy, w * (y * y - g * g) / (PI * den * den)]
        },
        -GAUSS_REACH,
        GAUSS_REACH,
        &gauss_var_breaks(x, sigma, g),
        1e-16 * peak,
        1e-13,
    );
    (r[0], r[1], r[2], r[3])
}
