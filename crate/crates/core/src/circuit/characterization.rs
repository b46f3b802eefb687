//! Device characterization figures of merit.

use crate::error::{Error, Result};
use crate::tolerance::TOL;

/// Classical and two-photon interference fringe at one phase setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fringe {
    pub classical_rate: f64,
    pub quantum_rate: f64,
    /// `(N_max - N_min) / (N_max + N_min)` of the two-photon fringe.
    pub visibility: f64,
}

/// Reverse Hong-Ou-Mandel fringe for indistinguishability `mu`.
///
/// The classical rate oscillates as `(1 + cos phi) / 2` and the two-photon
/// rate as `(1 + mu cos 2 phi) / 2`, at half the classical period.
pub fn rhom_fringe(phase: f64, mu: f64) -> Result<Fringe> {
    if !(0.0..=1.0).contains(&mu) || !phase.is_finite() {
        return Err(Error::InvalidInput(format!(
            "indistinguishability {mu} outside [0, 1]"
        )));
    }
    let (max, min) = ((1.0 + mu) / 2.0, (1.0 - mu) / 2.0);
    Ok(Fringe {
        classical_rate: (1.0 + phase.cos()) / 2.0,
        quantum_rate: (1.0 + mu * (2.0 * phase).cos()) / 2.0,
        visibility: (max - min) / (max + min),
    })
}

/// Samples the fringe on a phase grid; returns `(phase, classical, quantum)`.
pub fn rhom_scan(phases: &[f64], mu: f64) -> Result<Vec<(f64, f64, f64)>> {
    phases
        .iter()
        .map(|&p| rhom_fringe(p, mu).map(|f| (p, f.classical_rate, f.quantum_rate)))
        .collect()
}

/// Bhattacharyya overlap `sum_i sqrt(p_i q_i)`.
pub fn statistical_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    for d in [p, q] {
        if d.iter().any(|&x| x < 0.0) || (d.iter().sum::<f64>() - 1.0).abs() > TOL.distribution {
            return Err(Error::InvalidInput("distribution not normalized".into()));
        }
    }
    Ok(p.iter()
        .zip(q)
        .map(|(a, b)| (a * b).sqrt())
        .sum::<f64>()
        .min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn visibility(xs: &[f64]) -> f64 {
        let max = xs.iter().cloned().fold(f64::MIN, f64::max);
        let min = xs.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / (max + min)
    }

    #[test]
    fn fringe_visibility_and_period() {
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 2.0 * PI / 400.0).collect();
        for mu in [1.0, 0.984, 0.0] {
            let scan = rhom_scan(&grid, mu).unwrap();
            let q: Vec<f64> = scan.iter().map(|s| s.2).collect();
            assert!((visibility(&q) - mu).abs() < 1e-12);
            assert!((rhom_fringe(0.3, mu).unwrap().visibility - mu).abs() < 1e-15);
        }
        // Two-photon fringe repeats after pi, classical only after 2 pi.
        let a = rhom_fringe(0.4, 1.0).unwrap();
        let b = rhom_fringe(0.4 + PI, 1.0).unwrap();
        assert!((a.quantum_rate - b.quantum_rate).abs() < 1e-15);
        assert!((a.classical_rate - b.classical_rate).abs() > 0.1);
    }

    #[test]
    fn fidelity_examples() {
        let p = [0.5, 0.3, 0.2];
        assert!((statistical_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        let q = [0.4, 0.4, 0.2];
        let expect = 0.2f64.sqrt() + 0.12f64.sqrt() + 0.2;
        assert!((statistical_fidelity(&p, &q).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.993624).abs() < 1e-6);
        let u = [0.25; 4];
        let point = [0.0, 1.0, 0.0, 0.0];
        assert!((statistical_fidelity(&u, &point).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            statistical_fidelity(&u, &p),
            Err(Error::DimMismatch(_))
        ));
    }
}
