//! Source and interferometer imperfections.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, CMatrix};
use crate::state::DensityMatrix;

use super::mesh::{canonical, compile_basis, detection_vector, PhaseSettings};

/// Parametric noise applied to simulated experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Weight of the ideal state in a Werner mixture.
    pub werner_visibility: f64,
    /// Standard deviation of Gaussian jitter on every compiled phase (rad).
    pub phase_jitter_sigma: f64,
    /// Per-mode transmission; empty means lossless.
    #[serde(default)]
    pub mode_loss: Vec<f64>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            werner_visibility: 1.0,
            phase_jitter_sigma: 0.0,
            mode_loss: Vec::new(),
        }
    }

    pub fn werner(v: f64) -> Self {
        Self {
            werner_visibility: v,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.werner_visibility) {
            return Err(Error::InvalidInput(format!(
                "visibility {} outside [0, 1]",
                self.werner_visibility
            )));
        }
        if !(self.phase_jitter_sigma >= 0.0 && self.phase_jitter_sigma.is_finite()) {
            return Err(Error::InvalidInput("jitter must be finite and >= 0".into()));
        }
        if self.mode_loss.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidInput(
                "mode transmission outside [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Transmission of mode `k` (1 when unspecified).
    pub fn transmission(&self, k: usize) -> f64 {
        self.mode_loss.get(k).copied().unwrap_or(1.0)
    }

    /// Converts an attenuation in dB to a linear transmission.
    pub fn transmission_from_db(db: f64) -> f64 {
        10f64.powf(-db / 10.0)
    }

    pub fn is_ideal(&self) -> bool {
        self.werner_visibility == 1.0
            && self.phase_jitter_sigma == 0.0
            && self.mode_loss.iter().all(|&e| e == 1.0)
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    /// Parses `werner:v=0.9,jitter:s=0.01,loss:db=10@3`. Terms are optional;
    /// `loss:db=X@k` attenuates mode `k`, `loss:eta=a;b;c` sets all modes.
    fn from_str(s: &str) -> Result<Self> {
        let mut model = Self::ideal();
        let bad = |t: &str| Error::InvalidInput(format!("cannot parse noise term '{t}'"));
        for term in s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != "none")
        {
            let (kind, arg) = term.split_once(':').ok_or_else(|| bad(term))?;
            let (key, value) = arg.split_once('=').ok_or_else(|| bad(term))?;
            match (kind, key) {
                ("werner", "v") => {
                    model.werner_visibility = value.parse().map_err(|_| bad(term))?
                }
                ("jitter", "s") => {
                    model.phase_jitter_sigma = value.parse().map_err(|_| bad(term))?
                }
                ("loss", "eta") => {
                    model.mode_loss = value
                        .split(';')
                        .map(|x| x.parse().map_err(|_| bad(term)))
                        .collect::<Result<_>>()?
                }
                ("loss", "db") => {
                    let (db, mode) = value.split_once('@').ok_or_else(|| bad(term))?;
                    let db: f64 = db.parse().map_err(|_| bad(term))?;
                    let mode: usize = mode.parse().map_err(|_| bad(term))?;
                    if model.mode_loss.len() <= mode {
                        model.mode_loss.resize(mode + 1, 1.0);
                    }
                    model.mode_loss[mode] = Self::transmission_from_db(db);
                }
                _ => return Err(bad(term)),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

/// Noisy state, perturbed bases and the loss vector used for count scaling.
#[derive(Debug, Clone)]
pub struct NoisyInputs {
    pub rho: DensityMatrix,
    pub bases: Vec<MeasurementBasis>,
    pub mode_loss: Vec<f64>,
}

/// Adds independent Gaussian noise to every phase of `settings`.
pub fn jitter_settings<R: Rng + ?Sized>(
    settings: &PhaseSettings,
    sigma: f64,
    rng: &mut R,
) -> PhaseSettings {
    let mut out = settings.clone();
    if sigma == 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for m in &mut out.mzi_phases {
        m.theta = canonical(m.theta + normal.sample(rng));
    }
    for p in &mut out.input_phases {
        *p = canonical(*p + normal.sample(rng));
    }
    out
}

/// Measurement basis realized by one compiled mesh per outcome.
///
/// Independently perturbed meshes need not project onto exactly orthogonal
/// vectors; the closest orthonormal set is returned.
pub fn basis_from_settings(settings: &[PhaseSettings]) -> Result<MeasurementBasis> {
    let vectors = settings
        .iter()
        .map(detection_vector)
        .collect::<Result<Vec<_>>>()?;
    let m = CMatrix::from_columns(&vectors);
    MeasurementBasis::from_unitary(&orthonormalize(&m)?)
}

/// Applies Werner mixing to `rho` and phase jitter to each basis.
pub fn apply_noise<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    noise: &NoiseModel,
    bases: &[MeasurementBasis],
    rng: &mut R,
) -> Result<NoisyInputs> {
    noise.validate()?;
    let rho = if noise.werner_visibility == 1.0 {
        rho.clone()
    } else {
        rho.werner(noise.werner_visibility)
    };
    let bases = if noise.phase_jitter_sigma == 0.0 {
        bases.to_vec()
    } else {
        bases
            .iter()
            .map(|b| {
                let noisy: Vec<PhaseSettings> = compile_basis(b)?
                    .iter()
                    .map(|s| jitter_settings(s, noise.phase_jitter_sigma, rng))
                    .collect();
                basis_from_settings(&noisy)
            })
            .collect::<Result<_>>()?
    };
    Ok(NoisyInputs {
        rho,
        bases,
        mode_loss: noise.mode_loss.clone(),
    })
}
