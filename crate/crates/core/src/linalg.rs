//! Dense complex linear-algebra helpers built on `nalgebra`.

use nalgebra::{DMatrix, DVector};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(i * phase)`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Kronecker product of two complex matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    ms.iter()
        .skip(1)
        .fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Outer product `|u><v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn projector(v: &CVector) -> CMatrix {
    outer(v, v)
}

/// Real trace of `a * b` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitize(m);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `(m + m^†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// Fixes the global phase so that the first entry with modulus above `tol`
/// is real and positive.
pub fn fix_phase(v: &mut CVector, tol: f64) {
    if let Some(z) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = z.conj() / z.norm();
        for e in v.iter_mut() {
            *e *= phase;
        }
    }
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn i2() -> CMatrix {
        identity(2)
    }
    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }
    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// Tensor product of Paulis from a string such as `"ZXX"`; a leading
    /// `-` negates the operator.
    pub fn string(s: &str) -> CMatrix {
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, s),
        };
        let ms: Vec<CMatrix> = body
            .chars()
            .map(|c| match c {
                'I' => i2(),
                'X' => x(),
                'Y' => y(),
                'Z' => z(),
                other => panic!("unknown Pauli label {other}"),
            })
            .collect();
        kron_all(&ms) * c64(sign, 0.0)
    }
}

/// Fourier vector `|l> = sum_k exp(2 pi i k l / d) |k> / sqrt(d)`.
pub fn fourier_vector(d: usize, l: i64) -> CVector {
    let norm = 1.0 / (d as f64).sqrt();
    CVector::from_iterator(
        d,
        (0..d).map(|k| cis(2.0 * std::f64::consts::PI * (k as f64) * (l as f64) / d as f64) * norm),
    )
}

pub fn basis_vector(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

/// Haar-random pure state of dimension `d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_iterator(
        d,
        (0..d).map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    );
    let n = v.norm();
    v / c64(n, 0.0)
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            ONE
        };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Thin SVD `m = U diag(s) V^T` with `s` nonincreasing.
pub fn svd_real(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("svd: {e:?}")))?;
    let (u, v, d) = (svd.U(), svd.V(), svd.S().column_vector());
    Ok((
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        (0..d.nrows()).map(|k| d[k]).collect(),
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    ))
}

/// Thin SVD `m = U diag(s) V^dag` of a complex matrix.
pub fn svd_complex(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let f = faer::Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("svd: {e:?}")))?;
    let (u, v, d) = (svd.U(), svd.V(), svd.S().column_vector());
    Ok((
        CMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        (0..d.nrows()).map(|k| d[k].re).collect(),
        CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    ))
}

/// Closest orthonormal set to the columns of `m` (Löwdin / polar factor).
pub fn orthonormalize(m: &CMatrix) -> Result<CMatrix> {
    let (u, _, v) = svd_complex(m)?;
    Ok(u * v.adjoint())
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_products() {
        let xz = pauli::x() * pauli::z();
        assert!(max_abs(&(xz + pauli::y() * I)) < 1e-15);
        let m = pauli::string("-XZ");
        assert_eq!(m.nrows(), 4);
        assert!(is_hermitian(&m, 1e-15));
    }

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(5, &mut rng);
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            5,
            [3.0, -1.0, 2.0, 0.5, 0.0].iter().map(|&x| c64(x, 0.0)),
        ));
        let m = &u * diag * u.adjoint();
        let (vals, vecs) = eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[4] - 3.0).abs() < 1e-12);
        assert!(unitarity_defect(&vecs) < 1e-12);
    }

    #[test]
    fn lowdin_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(4, &mut rng);
        let noisy = &u + CMatrix::from_element(4, 4, c64(1e-3, 0.0));
        let w = orthonormalize(&noisy).unwrap();
        assert!(unitarity_defect(&w) < 1e-12);
        assert!(max_abs(&(w - u)) < 1e-2);
    }
}
