//! Pure states and density matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::linalg::{c64, eigh, hermitize, is_hermitian, kron, CMatrix, CVector};
use crate::tolerance::TOL;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// Density matrix `|psi><psi|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Returns a normalized copy of `amplitudes`, keeping relative phases.
pub fn make_pure_state(amplitudes: &CVector) -> Result<PureState> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidState("empty amplitude vector".into()));
    }
    if amplitudes
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidState("non-finite amplitude".into()));
    }
    let norm = amplitudes.norm();
    if norm == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    Ok(PureState {
        amplitudes: amplitudes / c64(norm, 0.0),
    })
}

/// Convenience wrapper for real amplitudes.
pub fn make_pure_state_real(amplitudes: &[f64]) -> Result<PureState> {
    make_pure_state(&CVector::from_iterator(
        amplitudes.len(),
        amplitudes.iter().map(|&x| c64(x, 0.0)),
    ))
}

/// `sum_k c_k |k>|k>` normalized, on a `d^2`-dimensional space.
pub fn entangled_state(c: &CVector) -> Result<PureState> {
    let d = c.len();
    let mut v = CVector::zeros(d * d);
    for k in 0..d {
        v[k * d + k] = c[k];
    }
    make_pure_state(&v)
}

/// `|psi+_d> = sum_k |kk> / sqrt(d)`.
pub fn maximally_entangled(d: usize) -> PureState {
    entangled_state(&CVector::from_element(d, c64(1.0, 0.0))).expect("d >= 1")
}

/// `(|00> + gamma |11> + |22>)` normalized.
pub fn partially_entangled_qutrit(gamma: f64) -> PureState {
    entangled_state(&CVector::from_vec(vec![
        c64(1.0, 0.0),
        c64(gamma, 0.0),
        c64(1.0, 0.0),
    ]))
    .expect("nonzero")
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` against the density-matrix invariants.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        if !is_hermitian(&matrix, TOL.density) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL.density || tr.im.abs() > TOL.density {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = eigh(&matrix);
        if vals[0] < TOL.min_eigenvalue {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c64(1.0 / dim as f64, 0.0),
        }
    }

    /// Werner mixture `v rho + (1 - v) I / dim`.
    pub fn werner(&self, v: f64) -> Self {
        let dim = self.dim();
        let mixed = CMatrix::identity(dim, dim) * c64((1.0 - v) / dim as f64, 0.0);
        Self {
            matrix: &self.matrix * c64(v, 0.0) + mixed,
        }
    }

    /// Convex combination `sum_i w_i rho_i`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("empty mixture".into()))?
            .1
            .dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimMismatch(
                    "mixture components differ in size".into(),
                ));
            }
            m += &rho.matrix * c64(*w, 0.0);
        }
        Self::new(m)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).0
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product_re(&self.matrix, &self.matrix)
    }

    /// Trusted constructor for matrices that are density matrices by
    /// construction (Hermitian part is taken).
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitize(&matrix),
        }
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.density()
    }
}

/// `<psi|rho|psi>`.
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimMismatch(format!(
            "state of dim {} vs density matrix of dim {}",
            psi.dim(),
            rho.dim()
        )));
    }
    let v = psi.amplitudes();
    let f = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
    Ok(f.clamp(0.0, 1.0))
}

/// Which subsystem to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Traces out subsystem `side` of a state on `C^{d_a} (x) C^{d_b}`.
pub fn partial_trace(
    rho: &DensityMatrix,
    d_a: usize,
    d_b: usize,
    side: Side,
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(partial_trace_matrix(
        rho.matrix(),
        d_a,
        d_b,
        side,
    )?))
}

/// Partial trace on a bare matrix; no positivity requirements.
pub fn partial_trace_matrix(m: &CMatrix, d_a: usize, d_b: usize, side: Side) -> Result<CMatrix> {
    if d_a == 0 || d_b == 0 || d_a * d_b != m.nrows() || !m.is_square() {
        return Err(Error::DimMismatch(format!(
            "dimension {} does not factor as {d_a} x {d_b}",
            m.nrows()
        )));
    }
    Ok(match side {
        Side::A => CMatrix::from_fn(d_b, d_b, |i, j| {
            (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()
        }),
        Side::B => CMatrix::from_fn(d_a, d_a, |i, j| {
            (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
        }),
    })
}
