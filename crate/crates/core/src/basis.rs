//! Rank-one projective measurements and joint diagonalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::linalg::{
    basis_vector, c64, commutator, eigh, fix_phase, fourier_vector, identity, is_hermitian,
    max_abs, projector, CMatrix, CVector,
};
use crate::tolerance::TOL;

/// Orthonormal measurement basis; outcome `a` is the projector onto
/// `vectors[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<CVector>,
    eigenvalues: Option<Vec<Vec<f64>>>,
}

impl MeasurementBasis {
    /// Builds a basis from orthonormal vectors.
    pub fn from_vectors(vectors: Vec<CVector>) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty basis".into()));
        }
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimMismatch(format!(
                "basis of {dim} vectors must live in dimension {dim}"
            )));
        }
        let b = Self {
            vectors,
            eigenvalues: None,
        };
        b.validate()?;
        Ok(b)
    }

    /// Columns of a unitary as basis vectors.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_vectors((0..u.ncols()).map(|j| u.column(j).into_owned()).collect())
    }

    pub(crate) fn from_trusted(vectors: Vec<CVector>) -> Self {
        Self {
            vectors,
            eigenvalues: None,
        }
    }

    pub fn computational(d: usize) -> Self {
        Self::from_trusted((0..d).map(|k| basis_vector(d, k)).collect())
    }

    /// Fourier basis, outcome `l` mapped to `|sign * l mod d>`.
    pub fn fourier(d: usize, sign: i64) -> Self {
        Self::from_trusted((0..d).map(|l| fourier_vector(d, sign * l as i64)).collect())
    }

    /// Complex conjugate of every basis vector.
    pub fn conjugate(&self) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| v.conjugate()).collect(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }

    /// Tensor product basis; outcome `(a, b)` maps to `a * dim(other) + b`.
    pub fn tensor(&self, other: &MeasurementBasis) -> Self {
        let mut vectors = Vec::with_capacity(self.dim() * other.dim());
        for u in &self.vectors {
            for v in &other.vectors {
                vectors.push(u.kronecker(v));
            }
        }
        Self::from_trusted(vectors)
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn labels(&self) -> std::ops::Range<usize> {
        0..self.dim()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn vector(&self, a: usize) -> &CVector {
        &self.vectors[a]
    }

    pub fn projector(&self, a: usize) -> CMatrix {
        projector(&self.vectors[a])
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        self.vectors.iter().map(projector).collect()
    }

    /// Eigenvalue tuple carried by each outcome, when built from observables.
    pub fn eigenvalues(&self) -> Option<&[Vec<f64>]> {
        self.eigenvalues.as_deref()
    }

    /// Matrix whose columns are the basis vectors.
    pub fn as_unitary(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    /// Checks Hermiticity, idempotence, orthogonality and completeness.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let ps = self.projectors();
        let mut sum = CMatrix::zeros(dim, dim);
        for (a, p) in ps.iter().enumerate() {
            if !is_hermitian(p, TOL.projector) || max_abs(&(p * p - p)) > TOL.projector {
                return Err(Error::InvalidInput(format!(
                    "outcome {a} is not a projector"
                )));
            }
            for (b, q) in ps.iter().enumerate().skip(a + 1) {
                if max_abs(&(p * q)) > TOL.projector {
                    return Err(Error::InvalidInput(format!(
                        "outcomes {a} and {b} are not orthogonal"
                    )));
                }
            }
            sum += p;
        }
        if max_abs(&(sum - identity(dim))) > TOL.projector {
            return Err(Error::InvalidInput(
                "projectors do not sum to identity".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisJson {
    #[serde(flatten)]
    matrix: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<Vec<f64>>>,
}

impl Serialize for MeasurementBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisJson {
            matrix: MatrixJson::from_matrix(&self.as_unitary()),
            eigenvalues: self.eigenvalues.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementBasis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BasisJson::deserialize(d)?;
        let m = j.matrix.to_matrix().map_err(serde::de::Error::custom)?;
        let mut b = MeasurementBasis::from_unitary(&m).map_err(serde::de::Error::custom)?;
        b.eigenvalues = j.eigenvalues;
        Ok(b)
    }
}

/// Joint eigenbasis of commuting Hermitian operators.
///
/// Outcomes are sorted by their eigenvalue tuples in descending
/// lexicographic order, so `{Z}` yields `|0>` (eigenvalue +1) first. Every
/// vector has its first nonzero amplitude made real and positive.
pub fn common_eigenbasis(ops: &[CMatrix]) -> Result<MeasurementBasis> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidInput("no operators given".into()))?;
    let dim = first.nrows();
    for (i, a) in ops.iter().enumerate() {
        if a.nrows() != dim || !a.is_square() {
            return Err(Error::DimMismatch(format!("operator {i} has wrong shape")));
        }
        if !is_hermitian(a, TOL.structural) {
            return Err(Error::InvalidInput(format!(
                "operator {i} is not Hermitian"
            )));
        }
    }
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let scale = 1.0 + max_abs(&ops[i]) * max_abs(&ops[j]);
            if max_abs(&commutator(&ops[i], &ops[j])) > TOL.structural * scale {
                return Err(Error::NotCommuting(format!("operators {i} and {j}")));
            }
        }
    }

    // A generic real combination separates every joint eigenspace.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba5e);
    let mut combo = CMatrix::zeros(dim, dim);
    for a in ops {
        combo += a * c64(rng.random_range(0.5..1.5), 0.0);
    }
    let (vals, vecs) = eigh(&combo);
    let mut vectors: Vec<CVector> = Vec::with_capacity(dim);
    let cluster_tol = 1e-8 * (1.0 + vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && vals[end] - vals[end - 1] < cluster_tol {
            end += 1;
        }
        let mut block = vecs.columns(start, end - start).into_owned();
        if end - start > 1 {
            // Refine inside the accidental degeneracy, one operator at a time.
            for a in ops {
                let restricted = block.adjoint() * a * &block;
                let (_, rot) = eigh(&restricted);
                block = &block * rot;
            }
        }
        for c in 0..block.ncols() {
            vectors.push(block.column(c).into_owned());
        }
        start = end;
    }

    let mut tagged: Vec<(Vec<f64>, CVector)> = Vec::with_capacity(dim);
    for mut v in vectors {
        fix_phase(&mut v, 1e-9);
        let mut tuple = Vec::with_capacity(ops.len());
        for a in ops {
            let av = a * &v;
            let lambda = v.dotc(&av).re;
            if (av - &v * c64(lambda, 0.0)).norm() > 1e-7 * (1.0 + max_abs(a)) {
                return Err(Error::NumericalFailure(
                    "joint diagonalization did not converge".into(),
                ));
            }
            // Snap round-off so exact spectra compare equal.
            tuple.push((lambda * 1e9).round() / 1e9);
        }
        tagged.push((tuple, v));
    }
    tagged.sort_by(|(ta, va), (tb, vb)| {
        for (x, y) in ta.iter().zip(tb) {
            match y.total_cmp(x) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        leading_index(va).cmp(&leading_index(vb))
    });
    let eigenvalues = tagged.iter().map(|(t, _)| t.clone()).collect();
    Ok(MeasurementBasis {
        vectors: tagged.into_iter().map(|(_, v)| v).collect(),
        eigenvalues: Some(eigenvalues),
    })
}

fn leading_index(v: &CVector) -> usize {
    v.iter().position(|z| z.norm() > 1e-9).unwrap_or(v.len())
}
