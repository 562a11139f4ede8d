use serde::{Deserialize, Serialize};

use super::poisson_pmf;
use crate::error::{ensure_finite, Error, Result};

const N_CUTOFF: u32 = 500;
const TAIL_EPS: f64 = 1e-15;

/// Best average fidelity reachable by a measure-and-prepare attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub bound: f64,
    /// Smallest photon number from which the attacker resends.
    pub n_min: u32,
}

/// `P(n > k)` summed upward from `k + 1` until the terms are negligible.
fn tail_above(pmf: &[f64], k: usize) -> f64 {
    pmf[k + 1..].iter().rev().sum()
}

/// Classical bound for a weak coherent input with mean photon number `mu_q`
/// and memory efficiency `eta_m`.
///
/// The attacker sends a state only for photon numbers `n >= n_min` and
/// supplies the missing efficiency budget `gamma` at fidelity
/// `(n_min + 1)/(n_min + 2)`. `n_min` is the least `i` with
/// `(1 - P(0)) eta_m - P(n > i) >= 0`.
pub fn classical_bound(mu_q: f64, eta_m: f64) -> Result<ClassicalBound> {
    ensure_finite("mu_q", mu_q)?;
    ensure_finite("eta_m", eta_m)?;
    if !(mu_q > 0.0) {
        return Err(Error::domain("mu_q must be positive"));
    }
    if !(eta_m > 0.0 && eta_m <= 1.0) {
        return Err(Error::domain("eta_m must lie in (0, 1]"));
    }
    // Terms up to where the remainder is negligible (or the cutoff).
    let mut pmf = Vec::new();
    for n in 0..=N_CUTOFF as u64 + 1 {
        let p = poisson_pmf(mu_q, n)?;
        pmf.push(p);
        if n as f64 > mu_q && p < TAIL_EPS * 1e-3 {
            break;
        }
    }
    pmf.push(0.0);
    let budget = -libm::expm1(-mu_q) * eta_m;
    let n_min = (0..pmf.len() - 1)
        .find(|&i| budget - tail_above(&pmf, i) >= 0.0)
        .filter(|&i| i <= N_CUTOFF as usize)
        .ok_or_else(|| Error::Config(format!("no n_min below {N_CUTOFF} for mu_q = {mu_q}")))?;
    let tail = tail_above(&pmf, n_min);
    let gamma = budget - tail;
    let k = n_min as f64;
    let resent: f64 =
        pmf.iter().enumerate().skip(n_min + 1).rev().map(|(n, p)| (n as f64 + 1.0) / (n as f64 + 2.0) * p).sum();
    let bound = ((k + 1.0) / (k + 2.0) * gamma + resent) / (gamma + tail);
    Ok(ClassicalBound { bound, n_min: n_min as u32 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_photon_limit() {
        let b = classical_bound(1e-4, 0.12).unwrap();
        assert_eq!(b.n_min, 1);
        assert!((b.bound - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn bound_below_measured_rows() {
        for (mu, f_t) in [(0.66, 0.861), (1.07, 0.897), (4.21, 0.977)] {
            assert!(classical_bound(mu, 0.12).unwrap().bound < f_t);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(classical_bound(0.0, 0.1).is_err());
        assert!(classical_bound(1.0, 0.0).is_err());
        assert!(classical_bound(1.0, 1.5).is_err());
    }
}
