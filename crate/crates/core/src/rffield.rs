//! Quasi-static field of planar strip electrodes on the crystal surface.
//!
//! Coordinates: `x` runs across the strips, `depth` is measured into the
//! crystal from the electrode plane. Strips are infinitely long along the
//! waveguide axis and carry uniform surface current. `bz` points out of the
//! crystal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::io::{csv_table, fmt_f64};
use crate::par;

/// Vacuum permeability, T m / A.
pub const MU0: f64 = 1.256_637_062_12e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub center_x: f64,
    pub width: f64,
    /// Current magnitude, A.
    pub current: f64,
    pub direction: Direction,
}

impl Strip {
    pub fn new(center_x: f64, width: f64, current: f64) -> Self {
        let direction = if current < 0.0 { Direction::Reverse } else { Direction::Forward };
        Self { center_x, width, current: current.abs(), direction }
    }

    fn signed_current(&self) -> f64 {
        self.current * self.direction.sign()
    }

    fn edges(&self) -> (f64, f64) {
        (self.center_x - 0.5 * self.width, self.center_x + 0.5 * self.width)
    }

    /// Field of this strip at `(x, depth)`, depth >= 0.
    fn field(&self, x: f64, depth: f64) -> FieldVector {
        let (a, b) = self.edges();
        let i = self.signed_current();
        if self.width == 0.0 {
            let r2 = (x - a).powi(2) + depth * depth;
            let k = MU0 * i / (2.0 * PI * r2);
            return FieldVector { bx: -k * depth, bz: -k * (x - a) };
        }
        let k = MU0 * i / self.width;
        // atan2 keeps the depth -> 0 limit correct beside the strip
        let angle = (x - a).atan2(depth) - (x - b).atan2(depth);
        let bx = -k / (2.0 * PI) * angle;
        let bz = -k / (4.0 * PI) * (((x - a).powi(2) + depth * depth) / ((x - b).powi(2) + depth * depth)).ln();
        FieldVector { bx, bz }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    pub bx: f64,
    pub bz: f64,
}

impl FieldVector {
    pub fn norm(&self) -> f64 {
        self.bx.hypot(self.bz)
    }
}

/// Geometry of a coplanar waveguide: signal strip flanked by two grounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpwGeometry {
    pub signal_width: f64,
    pub gap: f64,
    pub ground_width: f64,
}

impl Default for CpwGeometry {
    fn default() -> Self {
        Self { signal_width: 150e-6, gap: 50e-6, ground_width: 500e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeLayout {
    /// The first strip is the signal conductor.
    pub strips: Vec<Strip>,
    /// Require the grounds to return the signal current.
    #[serde(default)]
    pub cpw: bool,
}

impl ElectrodeLayout {
    pub fn single(width: f64, current: f64) -> Self {
        Self { strips: vec![Strip::new(0.0, width, current)], cpw: false }
    }

    /// Signal strip centered at `x = 0` with grounds returning half the
    /// current each.
    pub fn cpw(geometry: CpwGeometry, current: f64) -> Self {
        let CpwGeometry { signal_width: w, gap, ground_width: g } = geometry;
        let offset = 0.5 * w + gap + 0.5 * g;
        Self {
            strips: vec![
                Strip::new(0.0, w, current),
                Strip::new(-offset, g, -0.5 * current),
                Strip::new(offset, g, -0.5 * current),
            ],
            cpw: true,
        }
    }

    pub fn signal_current(&self) -> f64 {
        self.strips.first().map_or(0.0, Strip::signed_current)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strips.is_empty() {
            return Err(Error::domain("layout has no strips"));
        }
        for s in &self.strips {
            ensure_finite("center_x", s.center_x)?;
            ensure_finite("width", s.width)?;
            ensure_finite("current", s.current)?;
            if s.width < 0.0 || s.current < 0.0 {
                return Err(Error::domain("strip width and current magnitude must be non-negative"));
            }
        }
        let mut sorted: Vec<(f64, f64)> = self.strips.iter().map(Strip::edges).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::domain("strips overlap"));
        }
        if self.cpw {
            let net: f64 = self.strips.iter().map(Strip::signed_current).sum();
            if net.abs() > 1e-12 * self.signal_current().abs().max(f64::MIN_POSITIVE) {
                return Err(Error::domain(format!("coplanar layout carries net current {net} A")));
            }
        }
        Ok(())
    }

    /// Layout with every current multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.strips {
            let i = s.signed_current() * k;
            *s = Strip::new(s.center_x, s.width, i);
        }
        out
    }
}

/// Field (T) at `(x, depth)`.
pub fn field_at(layout: &ElectrodeLayout, x: f64, depth: f64) -> Result<FieldVector> {
    layout.validate()?;
    ensure_finite("x", x)?;
    ensure_finite("depth", depth)?;
    if depth < 0.0 {
        return Err(Error::domain("point lies outside the crystal"));
    }
    if depth == 0.0 {
        if let Some(s) = layout.strips.iter().find(|s| {
            let (a, b) = s.edges();
            x >= a && x <= b
        }) {
            return Err(Error::domain(format!("point lies on the conductor at x = {}", s.center_x)));
        }
    }
    let mut b = FieldVector::default();
    for s in &layout.strips {
        let f = s.field(x, depth);
        b.bx += f.bx;
        b.bz += f.bz;
    }
    Ok(b)
}

/// Field per ampere of signal current on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub xs: Vec<f64>,
    pub depths: Vec<f64>,
    /// Row-major over depth, then x.
    pub b: Vec<FieldVector>,
}

impl FieldMap {
    pub fn at(&self, ix: usize, id: usize) -> FieldVector {
        self.b[id * self.xs.len() + ix]
    }

    pub fn to_csv(&self) -> String {
        let rows = self.depths.iter().enumerate().flat_map(|(id, &d)| {
            self.xs.iter().enumerate().map(move |(ix, &x)| {
                let f = self.at(ix, id);
                vec![fmt_f64(x), fmt_f64(d), fmt_f64(f.bx), fmt_f64(f.bz), fmt_f64(f.norm())]
            })
        });
        csv_table(&["x_m", "depth_m", "bx", "bz", "abs_b"], rows)
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn field_map(layout: &ElectrodeLayout, xs: &[f64], depths: &[f64]) -> Result<FieldMap> {
    layout.validate()?;
    let i_sig = layout.signal_current();
    if i_sig == 0.0 {
        return Err(Error::domain("signal current must be nonzero"));
    }
    let nx = xs.len();
    let rows = par::map_indexed(depths.len(), |id| {
        xs.iter()
            .map(|&x| field_at(layout, x, depths[id]).map(|f| FieldVector { bx: f.bx / i_sig, bz: f.bz / i_sig }))
            .collect::<Result<Vec<_>>>()
    });
    let mut b = Vec::with_capacity(nx * depths.len());
    for r in rows {
        b.extend(r?);
    }
    Ok(FieldMap { xs: xs.to_vec(), depths: depths.to_vec(), b })
}

/// Field component that drives the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingAxis {
    #[default]
    Magnitude,
    X,
    Z,
}

impl CouplingAxis {
    pub fn project(self, b: FieldVector) -> f64 {
        match self {
            CouplingAxis::Magnitude => b.norm(),
            CouplingAxis::X => b.bx.abs(),
            CouplingAxis::Z => b.bz.abs(),
        }
    }
}

/// Rabi frequency (Hz) over a field map:
/// `coupling * |B_eff| * power_to_current * sqrt(power)`.
pub fn rabi_map(
    map: &FieldMap,
    coupling: f64,
    power_to_current: f64,
    power: f64,
    axis: CouplingAxis,
) -> Result<Vec<f64>> {
    ensure_finite("coupling", coupling)?;
    ensure_finite("power_to_current", power_to_current)?;
    ensure_finite("power", power)?;
    if !(coupling > 0.0) {
        return Err(Error::domain("coupling must be positive"));
    }
    if power < 0.0 || power_to_current < 0.0 {
        return Err(Error::domain("power and power_to_current must be non-negative"));
    }
    let k = coupling * power_to_current * power.sqrt();
    Ok(map.b.iter().map(|&b| k * axis.project(b)).collect())
}

/// Power ratio `P_b / P_a` that gives equal Rabi frequency when the fields
/// per unit current at the ions are `field_a` and `field_b`.
pub fn equal_rabi_power_ratio(field_a: f64, field_b: f64) -> Result<f64> {
    if !(field_a > 0.0 && field_b > 0.0) {
        return Err(Error::domain("fields must be positive"));
    }
    Ok((field_a / field_b).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    #[serde(default)]
    pub center_x: f64,
    pub center_depth: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homogeneity {
    pub mean: f64,
    pub relative_std: f64,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Statistics of `|B|` over the grid points inside `region`.
pub fn homogeneity(map: &FieldMap, region: &Disk) -> Result<Homogeneity> {
    ensure_finite("diameter", region.diameter)?;
    let r2 = (0.5 * region.diameter).powi(2);
    let mut vals = Vec::new();
    for (id, &d) in map.depths.iter().enumerate() {
        for (ix, &x) in map.xs.iter().enumerate() {
            if (x - region.center_x).powi(2) + (d - region.center_depth).powi(2) <= r2 {
                vals.push(map.at(ix, id).norm());
            }
        }
    }
    if vals.is_empty() {
        return Err(Error::domain("region contains no grid points"));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Homogeneity {
        mean,
        relative_std: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        points: vals.len(),
    })
}
