use serde::{Deserialize, Serialize};

use super::dd::DdSequence;
use crate::error::{ensure_finite, Error, Result};
use crate::photonics::DEFAULT_DETECTION_WINDOW;

/// Default delay between the input pulse and the first rephasing pulse.
pub const DEFAULT_INPUT_LEAD: f64 = 2e-6;

/// Which optical transition a control pulse drives: excited storage level
/// to spin level (`Pi35`) or spin level to the auxiliary excited level
/// (`Pi13`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpticalTransition {
    Pi35,
    Pi13,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpticalPulseKind {
    Pi,
    /// Two half-area pulses used for interferometric readout.
    HalfPiPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalPulse {
    pub time: f64,
    pub transition: OpticalTransition,
    pub kind: OpticalPulseKind,
    #[serde(default)]
    pub phase: f64,
}

/// Interval lengths that fix an echo sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlpeTiming {
    pub t31: f64,
    pub t42: f64,
    pub spin_storage: f64,
    #[serde(default = "default_lead")]
    pub input_lead: f64,
    #[serde(default = "default_window")]
    pub detection_window: f64,
}

fn default_lead() -> f64 {
    DEFAULT_INPUT_LEAD
}

fn default_window() -> f64 {
    DEFAULT_DETECTION_WINDOW
}

impl NlpeTiming {
    pub fn new(t31: f64, t42: f64, spin_storage: f64) -> Self {
        Self { t31, t42, spin_storage, input_lead: DEFAULT_INPUT_LEAD, detection_window: DEFAULT_DETECTION_WINDOW }
    }

    pub fn build(&self, dd: Option<DdSequence>) -> Result<ProtocolSchedule> {
        for (name, v) in [
            ("t31", self.t31),
            ("t42", self.t42),
            ("spin_storage", self.spin_storage),
            ("input_lead", self.input_lead),
            ("detection_window", self.detection_window),
        ] {
            ensure_finite(name, v)?;
            if !(v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive")));
            }
        }
        let excited_gap = self.t31 - self.spin_storage;
        let rephase_gap = self.t42 - excited_gap;
        if !(excited_gap > 0.0) {
            return Err(Error::domain("t31 must exceed the spin storage time"));
        }
        if !(rephase_gap > 0.0) {
            return Err(Error::domain("t42 must exceed t31 minus the spin storage time"));
        }
        if let Some(dd) = &dd {
            dd.validate()?;
            if dd.duration > self.spin_storage * (1.0 + 1e-12) {
                return Err(Error::Schedule(format!(
                    "decoupling block of {} s does not fit in {} s of spin storage",
                    dd.duration, self.spin_storage
                )));
            }
        }
        let t_in = 0.0;
        let t1 = t_in + self.input_lead;
        let t2 = t1 + self.spin_storage;
        let t3 = t2 + excited_gap;
        let t4 = t3 + rephase_gap;
        let echo_time = t4 + (t3 - t2) - (t1 - t_in);
        if !(echo_time > t4) {
            return Err(Error::Schedule("echo would precede the last control pulse".into()));
        }
        let pulse = |time, transition| OpticalPulse { time, transition, kind: OpticalPulseKind::Pi, phase: 0.0 };
        Ok(ProtocolSchedule {
            input_time: t_in,
            optical_pulses: [
                pulse(t1, OpticalTransition::Pi35),
                pulse(t2, OpticalTransition::Pi13),
                pulse(t3, OpticalTransition::Pi13),
                pulse(t4, OpticalTransition::Pi35),
            ],
            dd_block: dd,
            t31: t3 - t1,
            t42: t4 - t2,
            echo_time,
            detection_window: self.detection_window,
        })
    }
}

/// A fully timed echo sequence. Build it with [`build_nlpe_schedule`] or
/// [`NlpeTiming::build`]; the echo time follows from the pulse times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub input_time: f64,
    pub optical_pulses: [OpticalPulse; 4],
    /// Spin decoupling block, starting at the first control pulse.
    pub dd_block: Option<DdSequence>,
    pub t31: f64,
    pub t42: f64,
    pub echo_time: f64,
    pub detection_window: f64,
}

impl ProtocolSchedule {
    fn t(&self, k: usize) -> f64 {
        self.optical_pulses[k].time
    }

    pub fn spin_storage(&self) -> f64 {
        self.t(1) - self.t(0)
    }

    /// `(input lead, spin storage, excited gap, rephase gap, echo delay)`.
    pub fn intervals(&self) -> [f64; 5] {
        [
            self.t(0) - self.input_time,
            self.t(1) - self.t(0),
            self.t(2) - self.t(1),
            self.t(3) - self.t(2),
            self.echo_time - self.t(3),
        ]
    }

    /// Sets the phases of the four control pulses. Timing is unaffected.
    pub fn with_phases(mut self, phases: [f64; 4]) -> Self {
        for (p, ph) in self.optical_pulses.iter_mut().zip(phases) {
            p.phase = ph;
        }
        self
    }

    /// Uses a split third pulse for interferometric readout.
    pub fn with_split_readout(mut self) -> Self {
        self.optical_pulses[2].kind = OpticalPulseKind::HalfPiPair;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut last = self.input_time;
        for p in &self.optical_pulses {
            ensure_finite("pulse time", p.time)?;
            if !(p.time > last) {
                return Err(Error::Schedule("events are not strictly ordered".into()));
            }
            last = p.time;
        }
        if !(self.echo_time > last) {
            return Err(Error::Schedule("echo precedes the last control pulse".into()));
        }
        let [lead, _, gap, _, delay] = self.intervals();
        if ((delay + lead) - gap).abs() > 1e-9 * self.echo_time {
            return Err(Error::Schedule("echo time violates the rephasing condition".into()));
        }
        if let Some(dd) = &self.dd_block {
            dd.validate()?;
            if dd.duration > self.spin_storage() * (1.0 + 1e-12) {
                return Err(Error::Schedule("decoupling block overflows spin storage".into()));
            }
        }
        Ok(())
    }
}

/// Echo sequence with the given spin-side and excited-side intervals.
pub fn build_nlpe_schedule(t31: f64, t42: f64, spin_storage: f64, dd: Option<DdSequence>) -> Result<ProtocolSchedule> {
    NlpeTiming::new(t31, t42, spin_storage).build(dd)
}
