//! JSON layout shared by states, density matrices, bases and unitaries.
//!
//! Every object is `{dim, re, im}` with real and imaginary parts stored
//! separately. Vectors carry `dim` entries; square matrices carry `dim * dim`
//! entries in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, CVector};
use crate::state::{make_pure_state, DensityMatrix, PureState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_vector(v: &CVector) -> Self {
        Self {
            dim: v.len(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { dim: n, re, im }
    }

    fn check_len(&self, expected: usize) -> Result<()> {
        if self.re.len() != expected || self.im.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} entries in re/im for dim {}, found {}/{}",
                self.dim,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> Result<CVector> {
        self.check_len(self.dim)?;
        Ok(CVector::from_iterator(
            self.dim,
            self.re.iter().zip(&self.im).map(|(&r, &i)| c64(r, i)),
        ))
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.check_len(self.dim * self.dim)?;
        Ok(CMatrix::from_row_iterator(
            self.dim,
            self.dim,
            self.re.iter().zip(&self.im).map(|(&r, &i)| c64(r, i)),
        ))
    }
}

impl TryFrom<MatrixJson> for PureState {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        make_pure_state(&j.to_vector()?)
    }
}

impl From<PureState> for MatrixJson {
    fn from(s: PureState) -> Self {
        MatrixJson::from_vector(s.amplitudes())
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        DensityMatrix::new(j.to_matrix()?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(r: DensityMatrix) -> Self {
        MatrixJson::from_matrix(r.matrix())
    }
}

/// Serializes a unitary or other square matrix.
pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("plain data")
}
