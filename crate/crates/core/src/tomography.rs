//! State tomography of bipartite qudits from Heisenberg-Weyl eigenbasis
//! measurements: trace-minimizing compressed sensing and linear inversion.
//!
//! Each sampled operator `X^p Z^q (x) X^r Z^s` is measured in the product of
//! its local eigenbases; the data are the outcome frequencies of that basis.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{common_eigenbasis, MeasurementBasis};
use crate::correlations::setting_rng;
use crate::error::{Error, Result};
use crate::linalg::{c64, eigh, kron, CMatrix, C64};
use crate::sdp::{
    certify, solve_sdp, Certificate, NormBall, SdpProblem, SdpTolerances, Sense, Term,
};
use crate::state::DensityMatrix;

/// `X^p Z^q (x) X^r Z^s` on two qudits of local dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylOperator {
    pub d: usize,
    pub label: [usize; 4],
}

fn weyl_local(d: usize, p: usize, q: usize) -> CMatrix {
    // X|k> = |k+1>, Z|k> = w^k |k>; (X^p Z^q)|k> = w^{qk} |k+p>.
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        let phase = 2.0 * std::f64::consts::PI * ((q * k) % d) as f64 / d as f64;
        m[((k + p) % d, k)] = crate::linalg::cis(phase);
    }
    m
}

/// Eigenbasis of a normal matrix together with the complex eigenvalue of
/// every basis vector.
fn normal_eigenbasis(u: &CMatrix) -> Result<(MeasurementBasis, Vec<C64>)> {
    let h = (u + u.adjoint()) * c64(0.5, 0.0);
    let k = (u - u.adjoint()) * c64(0.0, -0.5);
    let basis = common_eigenbasis(&[h, k])?;
    let mu = basis
        .eigenvalues()
        .expect("eigenbasis carries eigenvalues")
        .iter()
        .map(|t| c64(t[0], t[1]))
        .collect();
    Ok((basis, mu))
}

impl WeylOperator {
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn local_factors(&self) -> (CMatrix, CMatrix) {
        let [p, q, r, s] = self.label;
        (weyl_local(self.d, p, q), weyl_local(self.d, r, s))
    }

    pub fn matrix(&self) -> CMatrix {
        let (a, b) = self.local_factors();
        kron(&a, &b)
    }

    /// Product of the local eigenbases and the eigenvalue of each outcome.
    pub fn eigenbasis(&self) -> Result<(MeasurementBasis, Vec<C64>)> {
        let (a, b) = self.local_factors();
        let (ba, ma) = normal_eigenbasis(&a)?;
        let (bb, mb) = normal_eigenbasis(&b)?;
        let mu = ma
            .iter()
            .flat_map(|x| mb.iter().map(move |y| x * y))
            .collect();
        Ok((ba.tensor(&bb), mu))
    }
}

/// All `d^4` products in lexicographic `(p, q, r, s)` order; orthonormal
/// under `Tr[A^dag B] / d^2`.
pub fn operator_basis(d_local: usize) -> Result<Vec<WeylOperator>> {
    if d_local < 2 {
        return Err(Error::InvalidDimension(format!(
            "need d >= 2, got {d_local}"
        )));
    }
    let d = d_local;
    let mut out = Vec::with_capacity(d.pow(4));
    for p in 0..d {
        for q in 0..d {
            for r in 0..d {
                for s in 0..d {
                    out.push(WeylOperator {
                        d,
                        label: [p, q, r, s],
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `m` distinct operators drawn uniformly; `m >= d^4` returns the full family.
pub fn sample_operators(d_local: usize, m: usize, seed: u64) -> Result<Vec<WeylOperator>> {
    let all = operator_basis(d_local)?;
    if m == 0 {
        return Err(Error::InvalidInput(
            "at least one operator is required".into(),
        ));
    }
    if m >= all.len() {
        return Ok(all);
    }
    let mut rng = setting_rng(seed, u64::MAX);
    let mut idx = rand::seq::index::sample(&mut rng, all.len(), m).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| all[i]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub operator: WeylOperator,
    /// Outcome frequencies in the order of the operator's eigenbasis.
    pub frequencies: Vec<f64>,
    /// Number of shots; 0 marks exact probabilities.
    pub shots: u64,
}

impl Measurement {
    /// `Tr[U rho]` estimated from the frequencies.
    pub fn expectation(&self) -> Result<C64> {
        let (_, mu) = self.operator.eigenbasis()?;
        Ok(mu.iter().zip(&self.frequencies).map(|(m, f)| m * *f).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasureOptions {
    /// Measure through bases recompiled from triangular-mesh settings.
    pub simulate_mesh: bool,
}

/// Measures `rho` in the eigenbasis of every operator. `shots = 0` returns
/// exact probabilities; otherwise counts are multinomial with one random
/// stream per operator.
pub fn measure_operators(
    rho: &DensityMatrix,
    operators: &[WeylOperator],
    shots: u64,
    seed: u64,
    options: MeasureOptions,
) -> Result<Vec<Measurement>> {
    operators
        .par_iter()
        .enumerate()
        .map(|(i, op)| {
            if op.dim() != rho.dim() {
                return Err(Error::DimMismatch(format!(
                    "operator on dimension {} applied to state of dimension {}",
                    op.dim(),
                    rho.dim()
                )));
            }
            let basis = if options.simulate_mesh {
                let (a, b) = op.local_factors();
                let through_mesh = |u: &CMatrix| -> Result<MeasurementBasis> {
                    let (basis, _) = normal_eigenbasis(u)?;
                    crate::circuit::basis_from_settings(&crate::circuit::compile_basis(&basis)?)
                };
                through_mesh(&a)?.tensor(&through_mesh(&b)?)
            } else {
                op.eigenbasis()?.0
            };
            let probs: Vec<f64> = basis
                .vectors()
                .iter()
                .map(|v| (v.adjoint() * rho.matrix() * v)[(0, 0)].re.max(0.0))
                .collect();
            let total: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
            let frequencies = if shots == 0 {
                probs
            } else {
                let mut rng = setting_rng(seed, i as u64);
                multinomial(shots, &probs, &mut rng)?
                    .into_iter()
                    .map(|c| c as f64 / shots as f64)
                    .collect()
            };
            Ok(Measurement {
                operator: *op,
                frequencies,
                shots,
            })
        })
        .collect()
}

fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            out.push(left);
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = Binomial::new(left, q)
            .map_err(|e| Error::NumericalFailure(format!("binomial sampler: {e}")))?
            .sample(rng);
        out.push(c);
        left -= c;
        mass -= p;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Cs,
    Linear,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cs" => Ok(Method::Cs),
            "linear" => Ok(Method::Linear),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

/// `c * sqrt(sum_i 1/N_i)`; exact data get a small fixed slack.
pub fn epsilon_heuristic(measurements: &[Measurement], c: f64) -> f64 {
    let s: f64 = measurements
        .iter()
        .filter(|m| m.shots > 0)
        .map(|m| 1.0 / m.shots as f64)
        .sum();
    if s == 0.0 {
        1e-7
    } else {
        c * s.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct TomographyJob {
    pub d_local: usize,
    pub measurements: Vec<Measurement>,
    /// Radius of the data-consistency ball; `None` uses the heuristic with `c = 1`.
    pub epsilon: Option<f64>,
    pub method: Method,
}

impl TomographyJob {
    pub fn new(d_local: usize, measurements: Vec<Measurement>, method: Method) -> Self {
        Self {
            d_local,
            measurements,
            epsilon: None,
            method,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.measurements.is_empty() {
            return Err(Error::InvalidInput("no measurements".into()));
        }
        let dim = self.d_local * self.d_local;
        for m in &self.measurements {
            if m.operator.dim() != dim || m.frequencies.len() != dim {
                return Err(Error::DimMismatch(
                    "measurement does not match d_local".into(),
                ));
            }
            if m.frequencies.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return Err(Error::InvalidInput("frequencies must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Orthonormal Hermitian basis: `E_ii`, `(E_ij + E_ji)/sqrt 2`, `i(E_ij - E_ji)/sqrt 2`.
fn hermitian_coordinates(p: &CMatrix) -> Vec<f64> {
    let n = p.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(p[(i, i)].re);
        for j in i + 1..n {
            out.push(s2 * p[(i, j)].re);
            out.push(s2 * p[(i, j)].im);
        }
    }
    out
}

fn from_coordinates(x: &[f64], n: usize) -> CMatrix {
    let s2 = std::f64::consts::SQRT_2;
    let mut m = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = c64(x[k], 0.0);
        k += 1;
        for j in i + 1..n {
            // Coordinates (a, b) give a (E_ij + E_ji)/sqrt2 + b i(E_ij - E_ji)/sqrt2.
            let (a, b) = (x[k] / s2, x[k + 1] / s2);
            m[(i, j)] = c64(a, b);
            m[(j, i)] = c64(a, -b);
            k += 2;
        }
    }
    m
}

/// Nonzero singular values of `g` with their left and right singular vectors.
fn row_space(g: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (u, s, v) = crate::linalg::svd_real(g)?;
    let top = s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > 1e-10 * top).collect();
    Ok((
        keep.iter().map(|&k| s[k]).collect(),
        u.select_columns(&keep),
        v.select_columns(&keep),
    ))
}

/// Real design matrix (one row per basis outcome) and data vector.
fn design(measurements: &[Measurement]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for m in measurements {
        let (basis, _) = m.operator.eigenbasis()?;
        for (k, f) in m.frequencies.iter().enumerate() {
            rows.push(hermitian_coordinates(&basis.projector(k)));
            data.push(*f);
        }
    }
    let n = rows[0].len();
    Ok((
        DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]),
        DVector::from_vec(data),
    ))
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// Trace of the optimal `X` before renormalization (1 for linear inversion).
    pub raw_trace: f64,
    pub certificate: Option<Certificate>,
}

/// Solves `min Tr X` s.t. `X ⪰ 0`, `||A(X) - y||_2 <= epsilon`, then
/// renormalizes.
pub fn cs_reconstruct(job: &TomographyJob) -> Result<Reconstruction> {
    job.validate()?;
    let n = job.d_local * job.d_local;
    let (g, f) = design(&job.measurements)?;
    let eps = job
        .epsilon
        .unwrap_or_else(|| epsilon_heuristic(&job.measurements, 1.0));

    // Compress the data term onto the row space of the design.
    let (sigma, u, v) = row_space(&g)?;
    let center = u.transpose() * &f;
    let outside = (&f - &u * &center).norm_squared();
    let rows = sigma
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let coeffs: Vec<f64> = v.column(k).iter().map(|x| x * s).collect();
            vec![Term::new(0, from_coordinates(&coeffs, n))]
        })
        .collect();
    let center = center.as_slice().to_vec();
    if eps * eps < outside {
        return Err(Error::Infeasible(format!(
            "epsilon {eps:.3e} below the irreducible data residual {:.3e}",
            outside.sqrt()
        )));
    }
    let mut p = SdpProblem::new(vec![n], Sense::Min);
    p.set_objective(0, crate::linalg::identity(n));
    p.norm_ball = Some(NormBall {
        rows,
        center,
        radius: (eps * eps - outside).sqrt(),
    });
    let tol = SdpTolerances {
        feasibility: 1e-9,
        gap: 1e-9,
        max_iterations: 150,
    };
    let sol = solve_sdp(&p, &tol)?;
    let cert = certify(&sol, &p);
    if cert.primal_residual > 1e-6 || cert.psd_violation > 1e-8 {
        return Err(Error::NumericalFailure(format!(
            "reconstruction failed certification: {cert:?}"
        )));
    }
    let x = crate::linalg::hermitize(&sol.x[0]);
    let tr = x.trace().re;
    if !(tr > 0.0) {
        return Err(Error::NumericalFailure(
            "reconstructed trace vanished".into(),
        ));
    }
    Ok(Reconstruction {
        rho: project_density(&x)?,
        raw_trace: tr,
        certificate: Some(cert),
    })
}

/// Euclidean projection onto `{l >= 0, sum l = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm.
pub fn project_density(m: &CMatrix) -> Result<DensityMatrix> {
    let (vals, vecs) = eigh(&crate::linalg::hermitize(m));
    let lam = project_simplex(&vals);
    let mut out = CMatrix::zeros(m.nrows(), m.nrows());
    for (k, l) in lam.iter().enumerate() {
        if *l > 0.0 {
            let v = vecs.column(k);
            out += v * v.adjoint() * c64(*l, 0.0);
        }
    }
    DensityMatrix::new(crate::linalg::hermitize(&out))
}

/// Least-squares inversion followed by projection onto density matrices.
pub fn linear_inversion(measurements: &[Measurement]) -> Result<DensityMatrix> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::InvalidInput("no measurements".into()))?;
    let n = first.operator.dim();
    let (g, f) = design(measurements)?;
    let (sigma, u, v) = row_space(&g)?;
    if sigma.len() < n * n {
        return Err(Error::IncompleteData(format!(
            "design rank {} < {}",
            sigma.len(),
            n * n
        )));
    }
    // Full column rank: x = V S^-1 U' f.
    let mut x = DVector::zeros(n * n);
    for (k, s) in sigma.iter().enumerate() {
        x += v.column(k) * (u.column(k).dot(&f) / s);
    }
    project_density(&from_coordinates(x.as_slice(), n))
}

/// Dispatches on `job.method`.
pub fn reconstruct(job: &TomographyJob) -> Result<Reconstruction> {
    match job.method {
        Method::Cs => cs_reconstruct(job),
        Method::Linear => {
            job.validate()?;
            Ok(Reconstruction {
                rho: linear_inversion(&job.measurements)?,
                raw_trace: 1.0,
                certificate: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, pauli, unitarity_defect, ONE};
    use crate::state::{fidelity, maximally_entangled, partially_entangled_qutrit};

    #[test]
    fn basis_orthonormal() {
        let ops = operator_basis(2).unwrap();
        assert_eq!(ops.len(), 16);
        for d in [2, 3] {
            let ops = operator_basis(d).unwrap();
            assert_eq!(ops.len(), d.pow(4));
            let mats: Vec<CMatrix> = ops.iter().map(|o| o.matrix()).collect();
            for (i, a) in mats.iter().enumerate() {
                assert!(unitarity_defect(a) < 1e-12);
                for (j, b) in mats.iter().enumerate() {
                    let ip = (a.adjoint() * b).trace() / c64((d * d) as f64, 0.0);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c64(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qubit_family_is_pauli() {
        // (p, q) = (1, 1) is XZ = -iY.
        let o = WeylOperator {
            d: 2,
            label: [1, 1, 0, 0],
        };
        let want = kron(&(pauli::y() * c64(0.0, -1.0)), &pauli::i2());
        assert!(max_abs(&(o.matrix() - want)) < 1e-12);
    }

    #[test]
    fn eigenbasis_diagonalizes() {
        for op in operator_basis(3).unwrap().iter().step_by(7) {
            let (b, mu) = op.eigenbasis().unwrap();
            let u = op.matrix();
            for (k, v) in b.vectors().iter().enumerate() {
                assert!((&u * v - v * mu[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_expectations() {
        let psi = maximally_entangled(2).density();
        let zz = WeylOperator {
            d: 2,
            label: [0, 1, 0, 1],
        };
        let xx = WeylOperator {
            d: 2,
            label: [1, 0, 1, 0],
        };
        let m = measure_operators(&psi, &[zz, xx], 0, 0, MeasureOptions::default()).unwrap();
        assert!((m[0].expectation().unwrap() - ONE).norm() < 1e-12);
        assert!((m[1].expectation().unwrap() - ONE).norm() < 1e-12);
        // Mesh-compiled bases give the same statistics.
        let mm = measure_operators(
            &psi,
            &[zz, xx],
            0,
            0,
            MeasureOptions {
                simulate_mesh: true,
            },
        )
        .unwrap();
        assert!((mm[1].expectation().unwrap() - ONE).norm() < 1e-9);
    }

    #[test]
    fn mixed_state_traceless_expectations() {
        let rho = DensityMatrix::maximally_mixed(9);
        let ops: Vec<_> = operator_basis(3)
            .unwrap()
            .into_iter()
            .skip(1)
            .take(10)
            .collect();
        let m = measure_operators(&rho, &ops, 20_000, 4, MeasureOptions::default()).unwrap();
        for x in &m {
            assert!(x.expectation().unwrap().norm() < 0.05);
        }
    }

    #[test]
    fn linear_inversion_exact() {
        let psi = maximally_entangled(2);
        let data = measure_operators(
            &psi.density(),
            &operator_basis(2).unwrap(),
            0,
            0,
            Default::default(),
        )
        .unwrap();
        let rho = linear_inversion(&data).unwrap();
        assert!((fidelity(&rho, &psi).unwrap() - 1.0).abs() < 1e-9);

        let g = partially_entangled_qutrit(0.9);
        let data = measure_operators(
            &g.density(),
            &operator_basis(3).unwrap(),
            0,
            0,
            Default::default(),
        )
        .unwrap();
        let rho = linear_inversion(&data).unwrap();
        let m = rho.matrix();
        assert!(((m[(4, 0)] / m[(0, 0)]).re - 0.9).abs() < 1e-6);
        assert!(max_abs(&(m - g.density().matrix())) < 1e-6);
    }

    #[test]
    fn linear_inversion_incomplete() {
        let data = measure_operators(
            &DensityMatrix::maximally_mixed(4),
            &sample_operators(2, 4, 1).unwrap(),
            0,
            0,
            Default::default(),
        )
        .unwrap();
        assert!(matches!(
            linear_inversion(&data),
            Err(Error::IncompleteData(_))
        ));
    }

    #[test]
    fn cs_full_data_matches_linear() {
        let rho = maximally_entangled(2).density().werner(0.8);
        let data =
            measure_operators(&rho, &operator_basis(2).unwrap(), 0, 0, Default::default()).unwrap();
        let cs = cs_reconstruct(&TomographyJob::new(2, data.clone(), Method::Cs)).unwrap();
        let li = linear_inversion(&data).unwrap();
        assert!((cs.rho.matrix() - li.matrix()).norm() < 1e-5);
        assert!((cs.rho.matrix() - rho.matrix()).norm() < 1e-6);
    }

    #[test]
    fn cs_rejects_tiny_epsilon() {
        let rho = maximally_entangled(2).density();
        let mut data =
            measure_operators(&rho, &operator_basis(2).unwrap(), 0, 0, Default::default()).unwrap();
        // Contradicts the uniform marginal fixed by the other operators.
        data[3].frequencies = vec![1.0, 0.0, 0.0, 0.0];
        let mut job = TomographyJob::new(2, data, Method::Cs);
        job.epsilon = Some(1e-9);
        let r = cs_reconstruct(&job);
        assert!(
            matches!(r, Err(Error::Infeasible(_))),
            "{:?}",
            r.map(|x| x.raw_trace)
        );
    }

    #[test]
    fn cs_with_shots() {
        let psi = maximally_entangled(2);
        let data = measure_operators(
            &psi.density(),
            &operator_basis(2).unwrap(),
            1000,
            7,
            Default::default(),
        )
        .unwrap();
        let rec = cs_reconstruct(&TomographyJob::new(2, data.clone(), Method::Cs)).unwrap();
        let f = fidelity(&rec.rho, &psi).unwrap();
        assert!(f >= 0.95, "{f}");
        let li = fidelity(&linear_inversion(&data).unwrap(), &psi).unwrap();
        assert!((f - li).abs() < 0.05);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        let p = project_simplex(&[1.2, -0.1, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x >= 0.0));
    }
}
