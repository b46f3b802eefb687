//! 2x2 transfer matrices of the mesh building blocks.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::linalg::{c64, cis, CMatrix, ONE, ZERO};

/// Phase shifter on the second mode: `diag(1, e^{i phi})`.
pub fn m_ps(phi: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, cis(phi)])
}

/// Symmetric 50:50 beamsplitter.
pub fn m_bs() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 1.0), ONE, ONE, c64(0.0, 1.0)])
        * c64(FRAC_1_SQRT_2, 0.0)
}

/// Mach-Zehnder interferometer `BS * PS(theta) * BS`.
pub fn m_mzi(theta: f64) -> CMatrix {
    m_bs() * m_ps(theta) * m_bs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, unitarity_defect};

    #[test]
    fn mzi_closed_form() {
        for k in 0..32 {
            let t = k as f64 * 0.2 - 1.0;
            let (s, c) = ((t / 2.0).sin(), (t / 2.0).cos());
            let g = cis((t + std::f64::consts::PI) / 2.0);
            let closed = CMatrix::from_row_slice(2, 2, &[g * s, g * c, g * c, -g * s]);
            assert!(max_abs(&(m_mzi(t) - closed)) < 1e-14);
            assert!(unitarity_defect(&m_mzi(t)) < 1e-12);
            assert!(unitarity_defect(&m_ps(t)) < 1e-12);
        }
        assert!(unitarity_defect(&m_bs()) < 1e-12);
    }
}
