//! Finite photon-counting statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::basis::MeasurementBasis;
use crate::circuit::{apply_noise, NoiseModel};
use crate::error::{Error, Result};

use crate::state::DensityMatrix;

use super::table::{born_probabilities, CorrelationTable};

/// Means above this use a rounded normal approximation.
const NORMAL_APPROX_MEAN: f64 = 1e3;

/// Independent generator for stream `stream` under `seed`.
pub fn setting_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < NORMAL_APPROX_MEAN {
        Poisson::new(mean).expect("positive mean").sample(rng) as u64
    } else {
        let x: f64 = Normal::new(mean, mean.sqrt()).expect("finite").sample(rng);
        x.round().max(0.0) as u64
    }
}

/// Draws Poisson counts with mean `shots * p(ab|xy) * eta_a * eta_b` for
/// every cell. Each setting uses its own stream derived from `seed`, so the
/// result does not depend on evaluation order.
pub fn sample_counts(
    table: &CorrelationTable,
    shots_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CorrelationTable> {
    if shots_per_setting == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    let d = table.d();
    let (m_a, m_b) = table.settings();
    let mut counts = Vec::with_capacity(table.probabilities().len());
    for x in 0..m_a {
        for y in 0..m_b {
            let mut rng = setting_rng(seed, (x * m_b + y) as u64);
            let block = table.setting(x, y);
            for a in 0..d {
                for b in 0..d {
                    let mean = shots_per_setting as f64
                        * block[a * d + b]
                        * noise.transmission(a)
                        * noise.transmission(b);
                    counts.push(poisson(mean, &mut rng));
                }
            }
        }
    }
    CorrelationTable::from_counts(d, m_a, m_b, counts, shots_per_setting)
}

/// Stream reserved for phase jitter so that it never overlaps a setting stream.
const JITTER_STREAM: u64 = u64::MAX;

/// Table of `rho` under `noise`, sampled with `shots_per_setting` per setting
/// or exact when `shots_per_setting` is 0.
pub fn simulate_table(
    rho: &DensityMatrix,
    alice: &[MeasurementBasis],
    bob: &[MeasurementBasis],
    shots_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CorrelationTable> {
    let mut rng = setting_rng(seed, JITTER_STREAM);
    let all: Vec<MeasurementBasis> = alice.iter().chain(bob).cloned().collect();
    let noisy = apply_noise(rho, noise, &all, &mut rng)?;
    let (a, b) = noisy.bases.split_at(alice.len());
    let exact = born_probabilities(&noisy.rho, a, b)?;
    if shots_per_setting == 0 {
        Ok(exact)
    } else {
        sample_counts(&exact, shots_per_setting, noise, seed)
    }
}

/// Parametric bootstrap: resamples every count from `Poisson(count)` and
/// returns the mean and sample standard deviation of `statistic`.
pub fn bootstrap_errors<F>(
    table: &CorrelationTable,
    statistic: F,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&CorrelationTable) -> Result<f64>,
{
    let counts = table.counts().ok_or(Error::MissingCounts)?;
    if resamples < 2 {
        return Err(Error::InvalidInput("need at least two resamples".into()));
    }
    let d = table.d();
    let (m_a, m_b) = table.settings();
    let mut values = Vec::with_capacity(resamples);
    for r in 0..resamples {
        let mut rng = setting_rng(seed, r as u64);
        let resampled: Vec<u64> = counts
            .iter()
            .map(|&c| poisson(c as f64, &mut rng))
            .collect();
        let t = CorrelationTable::from_counts(d, m_a, m_b, resampled, table.shots())?;
        values.push(statistic(&t)?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::MeasurementBasis;
    use crate::correlations::born_probabilities_pure;
    use crate::state::maximally_entangled;

    fn table(d: usize) -> CorrelationTable {
        let b = vec![
            MeasurementBasis::computational(d),
            MeasurementBasis::fourier(d, 1),
        ];
        let bob = vec![
            MeasurementBasis::computational(d),
            MeasurementBasis::fourier(d, -1),
        ];
        born_probabilities_pure(&maximally_entangled(d), &b, &bob).unwrap()
    }

    #[test]
    fn law_of_large_numbers() {
        let t = table(3);
        let s = sample_counts(&t, 10_000_000, &NoiseModel::ideal(), 7).unwrap();
        for (e, x) in s.probabilities().iter().zip(t.probabilities()) {
            assert!((e - x).abs() < 1e-3);
        }
        assert!(s.signaling_z_score().unwrap() < 6.0);
    }

    #[test]
    fn deterministic_and_lossy() {
        let c = vec![MeasurementBasis::computational(2)];
        let t = born_probabilities_pure(&maximally_entangled(2), &c, &c).unwrap();
        let a = sample_counts(&t, 1000, &NoiseModel::ideal(), 3).unwrap();
        let b = sample_counts(&t, 1000, &NoiseModel::ideal(), 3).unwrap();
        assert_eq!(a, b);
        let lossy = NoiseModel {
            mode_loss: vec![0.0, 1.0],
            ..NoiseModel::ideal()
        };
        let s = sample_counts(&t, 1000, &lossy, 3).unwrap();
        assert_eq!(s.counts().unwrap()[..2], [0, 0]);
        assert!((s.p(1, 1, 0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_lands_in_one_cell() {
        let t = CorrelationTable::new(2, 1, 1, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let s = sample_counts(&t, 5000, &NoiseModel::ideal(), 1).unwrap();
        let c = s.counts().unwrap();
        assert!(c[2] > 0 && c[0] == 0 && c[1] == 0 && c[3] == 0);
    }

    #[test]
    fn bootstrap_constant_and_missing() {
        let t = table(2);
        assert_eq!(
            bootstrap_errors(&t, |_| Ok(1.0), 10, 0),
            Err(Error::MissingCounts)
        );
        let s = sample_counts(&t, 1000, &NoiseModel::ideal(), 3).unwrap();
        let (m, sd) = bootstrap_errors(&s, |_| Ok(1.0), 20, 0).unwrap();
        assert_eq!((m, sd), (1.0, 0.0));
    }

    #[test]
    fn simulate_exact_and_sampled() {
        let d = 3;
        let b = vec![MeasurementBasis::computational(d)];
        let rho = maximally_entangled(d).density();
        let exact = simulate_table(&rho, &b, &b, 0, &NoiseModel::ideal(), 0).unwrap();
        assert!(exact.counts().is_none());
        assert!((exact.p(1, 1, 0, 0) - 1.0 / 3.0).abs() < 1e-12);
        let noisy = simulate_table(&rho, &b, &b, 0, &NoiseModel::werner(0.7), 0).unwrap();
        assert!((noisy.p(0, 1, 0, 0) - 0.3 / 9.0).abs() < 1e-12);
        let s1 = simulate_table(&rho, &b, &b, 1000, &NoiseModel::werner(0.7), 4).unwrap();
        let s2 = simulate_table(&rho, &b, &b, 1000, &NoiseModel::werner(0.7), 4).unwrap();
        assert_eq!(s1.counts(), s2.counts());
    }
}
