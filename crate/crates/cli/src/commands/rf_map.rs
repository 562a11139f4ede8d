//! Field and Rabi-frequency maps of the electrode layout, with homogeneity
//! over the optical mode.

use echomem::io::{csv_table, fmt_f64};
use echomem::rffield::{field_at, field_map, homogeneity, rabi_map, CouplingAxis, CpwGeometry, Disk, ElectrodeLayout};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{json, Experiment};
use crate::config::{Check, Issues, Range};
use crate::error::CliError;
use crate::output::Artifacts;

/// Rabi frequency `rabi_hz` observed at the region center with `power_w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub rabi_hz: f64,
    pub power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub calibration: Calibration,
    /// Power at which the map is evaluated, W.
    pub power_w: f64,
    #[serde(default)]
    pub axis: CouplingAxis,
}

impl Default for Drive {
    fn default() -> Self {
        Self {
            calibration: Calibration { rabi_hz: 16.7e3, power_w: 4.0 },
            power_w: 16.0,
            axis: CouplingAxis::default(),
        }
    }
}

fn default_x() -> Range {
    Range::new(-40e-6, 40e-6, 161)
}

fn default_depth() -> Range {
    Range::new(1e-6, 40e-6, 157)
}

fn default_region() -> Disk {
    Disk { center_x: 0.0, center_depth: 15e-6, diameter: 16.3e-6 }
}

/// The layout is either a coplanar waveguide geometry or explicit strips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfMap {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpw: Option<CpwGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<ElectrodeLayout>,
    #[serde(default = "default_x")]
    pub x: Range,
    #[serde(default = "default_depth")]
    pub depth: Range,
    #[serde(default = "default_region")]
    pub region: Disk,
    #[serde(default)]
    pub drive: Drive,
}

impl RfMap {
    fn layout(&self) -> ElectrodeLayout {
        match (&self.layout, self.cpw) {
            (Some(l), _) => l.clone(),
            (None, Some(g)) => ElectrodeLayout::cpw(g, 1.0),
            (None, None) => ElectrodeLayout::cpw(CpwGeometry::default(), 1.0),
        }
    }
}

impl Check for RfMap {
    fn check(&self, issues: &mut Issues) {
        if self.cpw.is_some() && self.layout.is_some() {
            issues.push("/layout", "give either cpw or layout, not both");
        }
        if let Some(g) = &self.cpw {
            issues.positive("/cpw/signal_width", g.signal_width);
            issues.positive("/cpw/gap", g.gap);
            issues.positive("/cpw/ground_width", g.ground_width);
        }
        if let Some(l) = &self.layout {
            issues.core("/layout", l.validate());
            if l.strips.first().is_some_and(|s| s.current == 0.0) {
                issues.push("/layout/strips/0/current", "signal current must be nonzero");
            }
        }
        self.x.check("/x", issues);
        self.depth.check("/depth", issues);
        if !(self.depth.start > 0.0) {
            issues.push("/depth/start", "map must stay below the electrode plane (depth > 0)");
        }
        issues.positive("/region/diameter", self.region.diameter);
        issues.finite("/region/center_x", self.region.center_x);
        issues.positive("/region/center_depth", self.region.center_depth);
        let r = 0.5 * self.region.diameter;
        let inside = self.region.center_x - r >= self.x.start
            && self.region.center_x + r <= self.x.stop
            && self.region.center_depth - r >= self.depth.start
            && self.region.center_depth + r <= self.depth.stop;
        if !inside {
            issues.push("/region", "region must lie inside the map grid");
        }
        issues.positive("/drive/calibration/rabi_hz", self.drive.calibration.rabi_hz);
        issues.positive("/drive/calibration/power_w", self.drive.calibration.power_w);
        issues.non_negative("/drive/power_w", self.drive.power_w);
    }
}

impl Experiment for RfMap {
    const NAME: &'static str = "rf-map";

    fn run(&self, _seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let layout = self.layout();
        let map = field_map(&layout, &self.x.values(), &self.depth.values())?;
        out.text("field_map.csv", map.to_csv());

        let center = field_at(&layout, self.region.center_x, self.region.center_depth)?;
        let i_sig = layout.signal_current();
        let b0 = self.drive.axis.project(center) / i_sig.abs();
        if !(b0 > 0.0) {
            return Err(echomem::Error::Domain("field vanishes at the region center".into()).into());
        }
        // coupling * power_to_current fixed by the calibration point
        let k = self.drive.calibration.rabi_hz / (b0 * self.drive.calibration.power_w.sqrt());
        let rabi = rabi_map(&map, k, 1.0, self.drive.power_w, self.drive.axis)?;
        let rows = map.depths.iter().enumerate().flat_map(|(id, &d)| {
            let rabi = &rabi;
            let xs = &map.xs;
            xs.iter().enumerate().map(move |(ix, &x)| vec![fmt_f64(x), fmt_f64(d), fmt_f64(rabi[id * xs.len() + ix])])
        });
        out.text("rabi_map.csv", csv_table(&["x_m", "depth_m", "rabi_hz"], rows.collect::<Vec<_>>()));

        let h = homogeneity(&map, &self.region)?;
        Ok(json!({
            "homogeneity": json(&h),
            "center_field_t_per_a": b0,
            "center_rabi_hz": k * b0 * self.drive.power_w.sqrt(),
        }))
    }

    fn plot(&self) -> String {
        "set datafile separator \",\"\nset view map\nset xlabel \"x (m)\"\nset ylabel \"depth (m)\"\n\
         set yrange [*:*] reverse\nset cblabel \"|B| per ampere (T/A)\"\n\
         splot \"field_map.csv\" using 1:2:5 skip 1 with points pointtype 5 pointsize 0.3 palette notitle\n"
            .to_string()
    }
}
