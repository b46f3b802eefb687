//! Triangular MZI mesh: phase compilation and unitary assembly.
//!
//! A mesh on `d = 2^N` modes has `N` layers; layer `n` holds `2^(N-n)`
//! interferometers acting on adjacent surviving modes. Compilation walks the
//! layers and, at each interferometer, chooses the internal phase `theta` and
//! an input phase offset `phi` that null one of the two amplitudes. After the
//! last layer only one mode carries amplitude. An output routing swap moves
//! that mode onto the detection mode `k0`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::error::{Error, Result};
use crate::linalg::{cis, projector, CMatrix, CVector, ZERO};
use crate::state::PureState;

use super::components::{m_mzi, m_ps};

/// Which arm of every interferometer carries the internal phase shifter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsPlacement {
    /// Lower-index mode of the pair.
    #[default]
    Bottom,
    /// Higher-index mode of the pair.
    Top,
}

/// Internal phase of interferometer `index` (1-based) in `layer` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct MziPhase {
    pub layer: usize,
    pub index: usize,
    pub theta: f64,
}

impl From<(usize, usize, f64)> for MziPhase {
    fn from((layer, index, theta): (usize, usize, f64)) -> Self {
        Self {
            layer,
            index,
            theta,
        }
    }
}

impl From<MziPhase> for (usize, usize, f64) {
    fn from(m: MziPhase) -> Self {
        (m.layer, m.index, m.theta)
    }
}

/// Compiled mesh configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSettings {
    /// Number of optical modes, a power of two.
    pub dim: usize,
    /// Detection mode (0-based).
    pub k0: usize,
    /// One entry per interferometer, ordered by layer then index.
    pub mzi_phases: Vec<MziPhase>,
    /// Phase on each input mode before the mesh.
    pub input_phases: Vec<f64>,
    #[serde(default)]
    pub placement: PsPlacement,
    /// Modes carrying the target state; the rest are padding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logical_dim: Option<usize>,
    /// Interferometers whose inputs were both empty during compilation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<(usize, usize)>,
}

impl PhaseSettings {
    pub fn layers(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_dim.unwrap_or(self.dim)
    }

    /// Settings with every phase zero and the default detection mode.
    pub fn zero(dim: usize) -> Result<Self> {
        let n = log2_exact(dim)?;
        Ok(Self {
            dim,
            k0: dim / 2,
            mzi_phases: topology(n)
                .iter()
                .map(|m| MziPhase {
                    layer: m.layer,
                    index: m.index,
                    theta: 0.0,
                })
                .collect(),
            input_phases: vec![0.0; dim],
            placement: PsPlacement::Bottom,
            logical_dim: None,
            degenerate: Vec::new(),
        })
    }

    fn validate(&self) -> Result<()> {
        let n = log2_exact(self.dim)?;
        if self.k0 >= self.dim {
            return Err(Error::InvalidIndex(format!(
                "detection mode {} outside {} modes",
                self.k0, self.dim
            )));
        }
        if self.mzi_phases.len() != self.dim - 1 || self.input_phases.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "expected {} interferometer and {} input phases",
                self.dim - 1,
                self.dim
            )));
        }
        let topo = topology(n);
        for (m, t) in self.mzi_phases.iter().zip(&topo) {
            if m.layer != t.layer || m.index != t.index {
                return Err(Error::InvalidInput(format!(
                    "interferometer ({}, {}) out of order",
                    m.layer, m.index
                )));
            }
        }
        let finite = self
            .mzi_phases
            .iter()
            .map(|m| m.theta)
            .chain(self.input_phases.iter().copied());
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase".into()));
        }
        Ok(())
    }
}

fn log2_exact(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(format!(
            "mesh needs a power of two >= 2 modes, got {dim}"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Reduces an angle to `[0, 2 pi)`.
pub(crate) fn canonical(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy)]
struct Site {
    layer: usize,
    index: usize,
    /// Lower-index physical mode.
    bottom: usize,
    /// Higher-index physical mode.
    top: usize,
    /// Mode whose amplitude this interferometer nulls.
    eliminated: usize,
}

/// Interferometer placement in processing order plus the surviving mode.
fn topology_with_survivor(n: usize) -> (Vec<Site>, usize) {
    let d = 1usize << n;
    let mut alive: Vec<usize> = (0..d).collect();
    let mut sites = Vec::with_capacity(d - 1);
    for layer in 1..=n {
        let count = 1usize << (n - layer);
        for index in (1..=count).rev() {
            let bottom = alive[2 * index - 2];
            let top = alive[2 * index - 1];
            let (pos, eliminated) = if index % 2 == 1 {
                (2 * index - 2, bottom)
            } else {
                (2 * index - 1, top)
            };
            sites.push(Site {
                layer,
                index,
                bottom,
                top,
                eliminated,
            });
            alive.remove(pos);
        }
    }
    (sites, alive[0])
}

fn topology(n: usize) -> Vec<Site> {
    let mut sites = topology_with_survivor(n).0;
    sites.sort_by_key(|s| (s.layer, s.index));
    sites
}

/// Output of a single interferometer elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub theta: f64,
    pub phi: f64,
    pub amplitudes: CVector,
    /// Both inputs were empty; phases default to zero.
    pub degenerate: bool,
}

/// Chooses `(theta, phi)` so that `MZI(theta) * PS(phi)` applied to
/// `(a[k_nops], a[k_ps])` nulls the amplitude on `k_cross`.
pub fn mzi_elimination(
    amplitudes: &CVector,
    k_ps: usize,
    k_nops: usize,
    k_cross: usize,
) -> Result<Elimination> {
    let len = amplitudes.len();
    if k_ps >= len || k_nops >= len || k_ps == k_nops {
        return Err(Error::InvalidIndex(format!(
            "modes ({k_ps}, {k_nops}) invalid for {len} amplitudes"
        )));
    }
    if k_cross != k_ps && k_cross != k_nops {
        return Err(Error::InvalidIndex(format!(
            "eliminated mode {k_cross} is not one of ({k_ps}, {k_nops})"
        )));
    }
    let (a_ps, a_nops) = (amplitudes[k_ps], amplitudes[k_nops]);
    if !(a_ps.re.is_finite()
        && a_ps.im.is_finite()
        && a_nops.re.is_finite()
        && a_nops.im.is_finite())
    {
        return Err(Error::InvalidInput("non-finite amplitude".into()));
    }
    let mut out = amplitudes.clone();
    if a_ps.norm().hypot(a_nops.norm()) < 1e-14 {
        return Ok(Elimination {
            theta: 0.0,
            phi: 0.0,
            amplitudes: out,
            degenerate: true,
        });
    }
    let (theta, phi) = if k_cross == k_ps {
        (
            2.0 * a_nops.norm().atan2(a_ps.norm()),
            a_nops.arg() - a_ps.arg(),
        )
    } else {
        (
            2.0 * a_ps.norm().atan2(a_nops.norm()),
            a_nops.arg() - a_ps.arg() + PI,
        )
    };
    let pair = CVector::from_vec(vec![a_nops, a_ps]);
    let next = m_mzi(theta) * m_ps(phi) * pair;
    out[k_nops] = next[0];
    out[k_ps] = next[1];
    out[k_cross] = ZERO;
    Ok(Elimination {
        theta: canonical(theta),
        phi: canonical(phi),
        amplitudes: out,
        degenerate: false,
    })
}

/// Compiles `psi` with the phase shifter on the bottom arm and the default
/// detection mode `2^(N-1)`.
pub fn triangular_phases(psi: &PureState) -> Result<PhaseSettings> {
    let dim = psi.dim().max(2).next_power_of_two();
    triangular_phases_with(psi, PsPlacement::Bottom, dim / 2)
}

/// Compiles `psi` onto a mesh so that it exits entirely on mode `k0`.
///
/// States whose dimension is not a power of two are padded with empty modes.
pub fn triangular_phases_with(
    psi: &PureState,
    placement: PsPlacement,
    k0: usize,
) -> Result<PhaseSettings> {
    let logical = psi.dim();
    let dim = logical.max(2).next_power_of_two();
    let n = log2_exact(dim)?;
    if k0 >= dim {
        return Err(Error::InvalidIndex(format!(
            "detection mode {k0} outside {dim} modes"
        )));
    }
    let mut a = CVector::zeros(dim);
    a.rows_mut(0, logical).copy_from(psi.amplitudes());
    if a.norm() == 0.0 {
        return Err(Error::InvalidState("zero state".into()));
    }

    let (sites, _) = topology_with_survivor(n);
    let mut input_phases = vec![0.0; dim];
    let mut mzi_phases = Vec::with_capacity(dim - 1);
    let mut degenerate = Vec::new();
    for s in &sites {
        let (k_ps, k_nops) = match placement {
            PsPlacement::Bottom => (s.bottom, s.top),
            PsPlacement::Top => (s.top, s.bottom),
        };
        let e = mzi_elimination(&a, k_ps, k_nops, s.eliminated)?;
        a = e.amplitudes;
        if e.degenerate {
            degenerate.push((s.layer, s.index));
        }
        // Input modes that feed the phase-shifted arm of this interferometer.
        let half = 1usize << (s.layer - 1);
        let group = (s.index - 1) << s.layer;
        let first = match placement {
            PsPlacement::Bottom => group,
            PsPlacement::Top => group + half,
        };
        for p in &mut input_phases[first..first + half] {
            *p = canonical(*p + e.phi);
        }
        mzi_phases.push(MziPhase {
            layer: s.layer,
            index: s.index,
            theta: e.theta,
        });
    }
    mzi_phases.sort_by_key(|m| (m.layer, m.index));
    degenerate.sort_unstable();
    Ok(PhaseSettings {
        dim,
        k0,
        mzi_phases,
        input_phases,
        placement,
        logical_dim: (logical != dim).then_some(logical),
        degenerate,
    })
}

/// Mesh transfer matrix: input phases, then each layer, then the output
/// routing that brings the surviving mode onto `k0`.
pub fn network_unitary(settings: &PhaseSettings) -> Result<CMatrix> {
    settings.validate()?;
    let dim = settings.dim;
    let (sites, survivor) = topology_with_survivor(settings.layers());
    let mut u = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        settings.input_phases.iter().map(|&p| cis(p)),
    ));
    let theta_of = |layer: usize, index: usize| -> f64 {
        settings
            .mzi_phases
            .iter()
            .find(|m| m.layer == layer && m.index == index)
            .map(|m| m.theta)
            .unwrap_or(0.0)
    };
    for layer in 1..=settings.layers() {
        let mut l = CMatrix::identity(dim, dim);
        for s in sites.iter().filter(|s| s.layer == layer) {
            let (k_ps, k_nops) = match settings.placement {
                PsPlacement::Bottom => (s.bottom, s.top),
                PsPlacement::Top => (s.top, s.bottom),
            };
            let m = m_mzi(theta_of(s.layer, s.index));
            l[(k_nops, k_nops)] = m[(0, 0)];
            l[(k_nops, k_ps)] = m[(0, 1)];
            l[(k_ps, k_nops)] = m[(1, 0)];
            l[(k_ps, k_ps)] = m[(1, 1)];
        }
        u = l * u;
    }
    if survivor != settings.k0 {
        u.swap_rows(survivor, settings.k0);
    }
    Ok(u)
}

/// `U^dagger |k0>`, restricted to the logical modes.
pub fn detection_vector(settings: &PhaseSettings) -> Result<CVector> {
    let u = network_unitary(settings)?;
    let row: CVector = u.row(settings.k0).adjoint();
    Ok(row.rows(0, settings.logical_dim()).into_owned())
}

/// Rank-one projector measured by the compiled mesh.
pub fn projector_from_settings(settings: &PhaseSettings) -> Result<CMatrix> {
    Ok(projector(&detection_vector(settings)?))
}

/// Compiles every vector of a basis.
pub fn compile_basis(basis: &MeasurementBasis) -> Result<Vec<PhaseSettings>> {
    basis
        .vectors()
        .iter()
        .map(|v| triangular_phases(&crate::state::make_pure_state(v)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::components::m_mzi;
    use crate::linalg::{
        basis_vector, c64, fourier_vector, haar_unitary, haar_vector, max_abs, unitarity_defect,
    };
    use crate::state::make_pure_state;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn detect(settings: &PhaseSettings, v: &CVector) -> f64 {
        let u = network_unitary(settings).unwrap();
        let mut padded = CVector::zeros(settings.dim);
        padded.rows_mut(0, v.len()).copy_from(v);
        (u * padded)[settings.k0].norm_sqr()
    }

    #[test]
    fn elimination_balanced() {
        let a = CVector::from_vec(vec![c64(FRAC_1_SQRT_2, 0.0), c64(FRAC_1_SQRT_2, 0.0)]);
        let e = mzi_elimination(&a, 0, 1, 0).unwrap();
        assert!((e.theta - PI / 2.0).abs() < 1e-15);
        assert!(e.phi.abs() < 1e-15);
        assert!(e.amplitudes[0].norm() < 1e-12);
    }

    #[test]
    fn elimination_matrix_oracle() {
        let a = CVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]);
        for (k_ps, k_nops) in [(0, 1), (1, 0)] {
            for cross in [k_ps, k_nops] {
                let e = mzi_elimination(&a, k_ps, k_nops, cross).unwrap();
                let pair = CVector::from_vec(vec![a[k_nops], a[k_ps]]);
                let out = m_mzi(e.theta) * m_ps(e.phi) * pair;
                let got = if cross == k_nops { out[0] } else { out[1] };
                assert!(got.norm() < 1e-12, "{k_ps} {k_nops} {cross}");
                assert!((e.amplitudes.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn elimination_of_empty_mode() {
        let a = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let e = mzi_elimination(&a, 0, 1, 1).unwrap();
        assert_eq!(e.amplitudes[1], ZERO);
        assert!((e.amplitudes[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn elimination_degenerate_and_bad_index() {
        let a = CVector::zeros(2);
        let e = mzi_elimination(&a, 0, 1, 0).unwrap();
        assert!(e.degenerate && e.theta == 0.0 && e.phi == 0.0);
        assert!(matches!(
            mzi_elimination(&a, 0, 1, 3),
            Err(Error::InvalidIndex(_))
        ));
    }

    #[test]
    fn qubit_mesh() {
        let psi = make_pure_state(&CVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)])).unwrap();
        let s = triangular_phases(&psi).unwrap();
        assert_eq!(s.k0, 1);
        assert!((s.mzi_phases[0].theta - PI / 2.0).abs() < 1e-15);
        assert!(s.input_phases.iter().all(|&p| p == 0.0));
        // Ordered as (no-shifter arm, shifter arm) = (mode 1, mode 0).
        let u = network_unitary(&s).unwrap();
        let m = m_mzi(PI / 2.0);
        assert!((u[(1, 1)] - m[(0, 0)]).norm() < 1e-15);
        assert!((u[(1, 0)] - m[(0, 1)]).norm() < 1e-15);
        assert!((detect(&s, psi.amplitudes()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_detection_mode_passes_through() {
        let psi = make_pure_state(&basis_vector(2, 1)).unwrap();
        let s = triangular_phases(&psi).unwrap();
        assert!((detect(&s, psi.amplitudes()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourier_eight() {
        let v = fourier_vector(8, 3);
        let s = triangular_phases(&make_pure_state(&v).unwrap()).unwrap();
        assert_eq!(s.k0, 4);
        assert!((detect(&s, &v) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fourier_projector_round_trip() {
        let v = fourier_vector(4, 1);
        let s = triangular_phases(&make_pure_state(&v).unwrap()).unwrap();
        let p = projector_from_settings(&s).unwrap();
        assert!(max_abs(&(p - projector(&v))) < 1e-12);
    }

    #[test]
    fn zero_settings_route_to_computational() {
        // theta = pi puts every interferometer in the bar state.
        let mut s = PhaseSettings::zero(4).unwrap();
        for m in &mut s.mzi_phases {
            m.theta = PI;
        }
        let u = network_unitary(&s).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        let v = detection_vector(&s).unwrap();
        let support: Vec<_> = v.iter().filter(|z| z.norm() > 1e-12).collect();
        assert_eq!(support.len(), 1);
    }

    #[test]
    fn padding_non_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = haar_vector(6, &mut rng);
        let s = triangular_phases(&make_pure_state(&v).unwrap()).unwrap();
        assert_eq!((s.dim, s.logical_dim()), (8, 6));
        let w = detection_vector(&s).unwrap();
        assert!((w.dotc(&v).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn both_placements_compile() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 4, 8, 16] {
            let v = haar_vector(d, &mut rng);
            let psi = make_pure_state(&v).unwrap();
            for placement in [PsPlacement::Bottom, PsPlacement::Top] {
                for k0 in [0, d - 1, d / 2] {
                    let s = triangular_phases_with(&psi, placement, k0).unwrap();
                    assert!((detect(&s, &v) - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn elimination_halves_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let mut a = haar_vector(1 << n, &mut rng);
        let (sites, _) = topology_with_survivor(n);
        for layer in 1..=n {
            for s in sites.iter().filter(|s| s.layer == layer) {
                a = mzi_elimination(&a, s.bottom, s.top, s.eliminated)
                    .unwrap()
                    .amplitudes;
            }
            let alive = a.iter().filter(|z| z.norm() > 1e-12).count();
            assert_eq!(alive, 1 << (n - layer));
        }
    }

    #[test]
    fn json_layout() {
        let s = triangular_phases(&make_pure_state(&fourier_vector(4, 1)).unwrap()).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["dim"], 4);
        assert_eq!(j["mzi_phases"][0][0], 1);
        let back: PhaseSettings = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_settings_are_unitary(seed in any::<u64>(), n in 1usize..5) {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = PhaseSettings::zero(1 << n).unwrap();
            for m in &mut s.mzi_phases { m.theta = rng.random_range(0.0..TAU); }
            for p in &mut s.input_phases { *p = rng.random_range(0.0..TAU); }
            prop_assert!(unitarity_defect(&network_unitary(&s).unwrap()) < 1e-10);
        }

        #[test]
        fn compile_round_trip(seed in any::<u64>(), n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = haar_unitary(1 << n, &mut rng);
            let v: CVector = u.column(0).into_owned();
            let s = triangular_phases(&make_pure_state(&v).unwrap()).unwrap();
            prop_assert!(s.mzi_phases.iter().all(|m| (0.0..TAU).contains(&m.theta)));
            prop_assert!(s.input_phases.iter().all(|p| (0.0..TAU).contains(p)));
            let p = projector_from_settings(&s).unwrap();
            prop_assert!(max_abs(&(p - projector(&v))) < 1e-9);
        }
    }
}
