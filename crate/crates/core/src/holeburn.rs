//! Rate-equation model of spectral hole burning in a three-level-pair
//! hyperfine system.
//!
//! Each ion has three ground and three excited hyperfine levels. An ion is
//! labeled by the detuning `x` of its reference transition (ground 0 to
//! excited 2); its transition `(i, j)` then sits at `x + offset(i, j)`. For
//! readout at grid frequency `nu` every one of the nine pairings contributes
//! a family of ions with `x = nu - offset(pair)`; the populations of those
//! families are tracked on the grid.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::io::{csv_table, fmt_f64};
use crate::par;
use crate::spectral::Band;

pub const LEVELS: usize = 3;
pub const PAIRS: usize = LEVELS * LEVELS;

/// Hyperfine structure, oscillator strengths and decay branching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Ground splittings 0-1 and 1-2, Hz.
    pub ground_splittings: [f64; 2],
    /// Excited splittings 0-1 and 1-2, Hz.
    pub excited_splittings: [f64; 2],
    /// Rows ground, columns excited; each row sums to 1.
    pub oscillator_strengths: [[f64; 3]; 3],
    /// Rows excited, columns ground: probability that excited level `j`
    /// decays to ground level `i`.
    #[serde(default = "uniform_matrix")]
    pub branching: [[f64; 3]; 3],
    /// Homogeneous FWHM of each ion's line, Hz.
    #[serde(default = "default_homogeneous")]
    pub homogeneous_fwhm: f64,
}

fn uniform_matrix() -> [[f64; 3]; 3] {
    [[1.0 / 3.0; 3]; 3]
}

fn default_homogeneous() -> f64 {
    10e3
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            ground_splittings: [34.5e6, 46.2e6],
            excited_splittings: [75.0e6, 102.0e6],
            oscillator_strengths: uniform_matrix(),
            branching: uniform_matrix(),
            homogeneous_fwhm: default_homogeneous(),
        }
    }
}

impl LevelScheme {
    pub fn validate(&self) -> Result<()> {
        for &s in self.ground_splittings.iter().chain(&self.excited_splittings) {
            ensure_finite("splitting", s)?;
            if !(s > 0.0) {
                return Err(Error::Scheme("splittings must be positive".into()));
            }
        }
        ensure_finite("homogeneous_fwhm", self.homogeneous_fwhm)?;
        if !(self.homogeneous_fwhm > 0.0) {
            return Err(Error::Scheme("homogeneous linewidth must be positive".into()));
        }
        for (name, m) in [("oscillator strength", &self.oscillator_strengths), ("branching", &self.branching)] {
            for row in m {
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Scheme(format!("{name} entries must be finite and non-negative")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::Scheme(format!("{name} row sums to {sum}, not 1")));
                }
            }
        }
        Ok(())
    }

    fn ground_energies(&self) -> [f64; 3] {
        let [a, b] = self.ground_splittings;
        [0.0, a, a + b]
    }

    fn excited_energies(&self) -> [f64; 3] {
        let [a, b] = self.excited_splittings;
        [0.0, a, a + b]
    }

    /// Frequency of transition `(ground, excited)` relative to the
    /// reference transition `(0, 2)` of the same ion.
    pub fn offset(&self, ground: usize, excited: usize) -> f64 {
        let g = self.ground_energies();
        let e = self.excited_energies();
        (e[excited] - e[2]) - (g[ground] - g[0])
    }

    fn hwhm(&self) -> f64 {
        0.5 * self.homogeneous_fwhm
    }
}

fn pair(c: usize) -> (usize, usize) {
    (c / LEVELS, c % LEVELS)
}

/// One swept optical pumping step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpStep {
    pub ground_level: usize,
    pub excited_level: usize,
    /// Swept band, relative to the transition frequency of ions whose
    /// reference transition sits at zero detuning.
    pub sweep_band: Band,
    pub duration: f64,
    /// Pump rate on the addressed transition at full overlap, 1/s.
    pub rate: f64,
}

impl PumpStep {
    pub fn validate(&self, scheme: &LevelScheme) -> Result<()> {
        if self.ground_level >= LEVELS || self.excited_level >= LEVELS {
            return Err(Error::Scheme(format!(
                "pump step addresses undefined levels ({}, {})",
                self.ground_level, self.excited_level
            )));
        }
        if scheme.oscillator_strengths[self.ground_level][self.excited_level] == 0.0 {
            return Err(Error::Scheme("pump step addresses a forbidden transition".into()));
        }
        ensure_finite("duration", self.duration)?;
        ensure_finite("rate", self.rate)?;
        ensure_finite("sweep_band.lo", self.sweep_band.lo)?;
        ensure_finite("sweep_band.hi", self.sweep_band.hi)?;
        if !(self.duration > 0.0) {
            return Err(Error::domain("pump duration must be positive"));
        }
        if self.rate < 0.0 {
            return Err(Error::domain("pump rate must be non-negative"));
        }
        if !(self.sweep_band.hi >= self.sweep_band.lo) {
            return Err(Error::domain("sweep band is inverted"));
        }
        Ok(())
    }
}

/// Uniform frequency grid, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("grid.min", self.min)?;
        ensure_finite("grid.max", self.max)?;
        if self.points < 2 || !(self.max > self.min) {
            return Err(Error::domain("grid needs max > min and at least 2 points"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        self.min + self.step() * k as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }
}

/// Ground populations of the nine ion families at each grid frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub grid: FrequencyGrid,
    /// Indexed `[family * points + k][ground level]`.
    pub data: Vec<[f64; 3]>,
}

impl Populations {
    pub fn uniform(grid: FrequencyGrid) -> Self {
        Self { grid, data: vec![[1.0 / 3.0; 3]; PAIRS * grid.points] }
    }

    /// Populations of the family whose pairing `(ground, excited)` is
    /// resonant at grid point `k`.
    pub fn get(&self, ground: usize, excited: usize, k: usize) -> [f64; 3] {
        self.data[(ground * LEVELS + excited) * self.grid.points + k]
    }
}

/// Mean overlap of a swept pump over `band` with a Lorentzian line at `nu`.
fn sweep_overlap(band: Band, nu: f64, hwhm: f64) -> f64 {
    (((band.hi - nu) / hwhm).atan() - ((band.lo - nu) / hwhm).atan()) / PI
}

#[allow(clippy::needless_range_loop)]
fn step_generator(scheme: &LevelScheme, step: &PumpStep, x: f64) -> Matrix3<f64> {
    let f = &scheme.oscillator_strengths;
    let f_step = f[step.ground_level][step.excited_level];
    let shift = scheme.offset(step.ground_level, step.excited_level);
    let laser = Band::new(shift + step.sweep_band.lo, shift + step.sweep_band.hi);
    let h = scheme.hwhm();
    let mut m = Matrix3::zeros();
    for i in 0..LEVELS {
        for j in 0..LEVELS {
            if f[i][j] == 0.0 {
                continue;
            }
            let nu = x + scheme.offset(i, j);
            let r = step.rate * f[i][j] / f_step * sweep_overlap(laser, nu, h);
            m[(i, i)] -= r;
            for k in 0..LEVELS {
                m[(k, i)] += r * scheme.branching[j][k];
            }
        }
    }
    m
}

/// Runs the pump sequence on every ion family of `grid`.
///
/// Excited-state population is eliminated adiabatically: each step moves
/// ground population through the pumped transitions and back by branching.
pub fn burn(scheme: &LevelScheme, grid: FrequencyGrid, steps: &[PumpStep]) -> Result<Populations> {
    scheme.validate()?;
    grid.validate()?;
    for s in steps {
        s.validate(scheme)?;
        if s.sweep_band.lo < grid.min || s.sweep_band.hi > grid.max {
            return Err(Error::domain("grid does not cover a swept band"));
        }
    }
    let n = grid.points;
    let rows = par::map_indexed(PAIRS * n, |idx| {
        let (c, k) = (idx / n, idx % n);
        let (i, j) = pair(c);
        let x = grid.value(k) - scheme.offset(i, j);
        let mut p = nalgebra::Vector3::from_element(1.0 / 3.0);
        for s in steps {
            let m = step_generator(scheme, s, x) * s.duration;
            if m.amax() < 1e-15 {
                continue;
            }
            p = m.exp() * p;
        }
        [p[0], p[1], p[2]]
    });
    Ok(Populations { grid, data: rows })
}

/// Absorption (optical depth) versus frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionProfile {
    pub grid: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl AbsorptionProfile {
    pub fn to_csv(&self) -> String {
        csv_table(&["freq_hz", "alpha"], self.grid.iter().zip(&self.alpha).map(|(f, a)| vec![fmt_f64(*f), fmt_f64(*a)]))
    }

    /// Mean absorption over grid points in `band`, skipping `exclude`.
    pub fn mean_alpha(&self, band: Band, exclude: Option<Band>) -> Result<f64> {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.alpha)
            .filter(|(f, _)| band.contains(**f) && !exclude.is_some_and(|e| e.contains(**f)))
            .map(|(_, a)| *a)
            .collect();
        if vals.is_empty() {
            return Err(Error::domain("band holds no grid points"));
        }
        Ok(vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Full width at half maximum of the strongest feature inside `search`,
    /// measured above the lowest absorption in `search`.
    pub fn feature_fwhm(&self, search: Band) -> Result<f64> {
        let idx: Vec<usize> = (0..self.grid.len()).filter(|&k| search.contains(self.grid[k])).collect();
        if idx.len() < 3 {
            return Err(Error::domain("search band holds too few grid points"));
        }
        let peak = *idx.iter().max_by(|&&a, &&b| self.alpha[a].total_cmp(&self.alpha[b])).unwrap();
        let base = idx.iter().map(|&k| self.alpha[k]).fold(f64::INFINITY, f64::min);
        let half = 0.5 * (self.alpha[peak] + base);
        let (first, last) = (idx[0], idx[idx.len() - 1]);
        let crossing = |mut k: usize, forward: bool| -> Result<f64> {
            loop {
                let next = if forward { k + 1 } else { k.wrapping_sub(1) };
                if (forward && next > last) || (!forward && (k == first)) {
                    return Err(Error::domain("feature extends past the search band"));
                }
                if self.alpha[next] < half {
                    let (x0, y0, x1, y1) = (self.grid[k], self.alpha[k], self.grid[next], self.alpha[next]);
                    return Ok(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
                }
                k = next;
            }
        };
        Ok(crossing(peak, true)? - crossing(peak, false)?)
    }
}

/// Absorption `alpha(nu) = d0 * sum over families of strength * population *
/// cell-integrated homogeneous line`. Populations beyond the grid are taken
/// equal to the edge values, so uniform populations give exactly `d0`.
pub fn absorption_spectrum(
    pops: &Populations,
    scheme: &LevelScheme,
    background_depth: f64,
) -> Result<AbsorptionProfile> {
    scheme.validate()?;
    pops.grid.validate()?;
    ensure_finite("background_depth", background_depth)?;
    if background_depth < 0.0 {
        return Err(Error::domain("background depth must be non-negative"));
    }
    let n = pops.grid.points;
    if pops.data.len() != PAIRS * n {
        return Err(Error::Shape(format!("{} population rows for a grid of {n} points", pops.data.len())));
    }
    let step = pops.grid.step();
    let h = scheme.hwhm();
    let nus = pops.grid.values();
    // weight of family c at grid k for readout: strength times population
    let weights: Vec<Vec<f64>> = (0..PAIRS)
        .map(|c| {
            let (i, j) = pair(c);
            let f = scheme.oscillator_strengths[i][j];
            (0..n).map(|k| f * pops.data[c * n + k][i]).collect()
        })
        .collect();
    let alpha = par::map_indexed(n, |q| {
        let nu = nus[q];
        let cdf = |e: f64| ((e - nu) / h).atan() / PI;
        let edges: Vec<f64> = (0..=n).map(|m| cdf(pops.grid.min - 0.5 * step + step * m as f64)).collect();
        let left = edges[0] + 0.5;
        let right = 0.5 - edges[n];
        let mut total = 0.0;
        for w in &weights {
            let mut s = w[0] * left + w[n - 1] * right;
            for k in 0..n {
                s += w[k] * (edges[k + 1] - edges[k]);
            }
            total += s;
        }
        background_depth * total
    });
    Ok(AbsorptionProfile { grid: nus, alpha })
}

/// Window-plus-feature preparation: burn a transparent window on the
/// reference transition, then repeatedly pump the other two ground levels
/// of the ions inside the feature band so they collect in ground level 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationRecipe {
    pub window_width: f64,
    pub feature_width: f64,
    pub burn_repeats: usize,
    pub cycles: usize,
    pub step_duration: f64,
    /// Pump rate of the window burns, 1/s.
    pub window_rate: f64,
    /// Pump rate of the feature cycles, 1/s. Kept low so that the Lorentzian
    /// wings of the pump do not refill the window beside the feature.
    pub feature_rate: f64,
}

impl Default for PreparationRecipe {
    fn default() -> Self {
        Self {
            window_width: 4.0e6,
            feature_width: 1.8e6,
            burn_repeats: 3,
            cycles: 10,
            step_duration: 1e-3,
            window_rate: 2e4,
            feature_rate: 2e3,
        }
    }
}

impl PreparationRecipe {
    pub fn steps(&self) -> Vec<PumpStep> {
        let step = |g, e, w: f64, rate| PumpStep {
            ground_level: g,
            excited_level: e,
            sweep_band: Band::centered(w),
            duration: self.step_duration,
            rate,
        };
        let mut out = vec![step(0, 2, self.window_width, self.window_rate); self.burn_repeats];
        for _ in 0..self.cycles {
            out.push(step(1, 2, self.feature_width, self.feature_rate));
            out.push(step(2, 1, self.feature_width, self.feature_rate));
        }
        out
    }
}
