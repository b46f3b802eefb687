//! Homogeneous self-dual interior-point method with Mehrotra
//! predictor-corrector steps and Nesterov-Todd scaling for
//!
//! ```text
//! min c'x  s.t.  A x = b,  x in K        max b'y  s.t.  A'y + s = c,  s in K
//! ```

use nalgebra::{DMatrix, DVector};

use super::cones::{Layout, Scaling};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpTolerances {
    /// Relative primal and dual residual target.
    pub feasibility: f64,
    /// Relative duality-gap target.
    pub gap: f64,
    pub max_iterations: usize,
}

impl Default for SdpTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            gap: 1e-9,
            max_iterations: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
}

#[derive(Debug, Clone)]
pub(crate) struct ConicSolution {
    pub status: Status,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Rows of `a` that are numerically independent (greedy Gram-Schmidt).
fn independent_rows(a: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for i in 0..a.nrows() {
        let mut v: DVector<f64> = a.row(i).transpose();
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-10 * scale {
            basis.push(v / n);
            keep.push(i);
        }
    }
    keep
}

struct Normal {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    mat: DMatrix<f64>,
}

impl Normal {
    fn build(
        layout: &Layout,
        sc: &Scaling,
        a: &DMatrix<f64>,
        blocks: &[Vec<usize>],
    ) -> Result<(Self, DMatrix<f64>)> {
        // H A' column by column, skipping cones a row does not touch.
        let m = a.nrows();
        let mut ha = DMatrix::zeros(layout.n, m);
        for i in 0..m {
            for &k in &blocks[i] {
                let r = layout.range(k);
                let row: Vec<f64> = a.row(i).columns(r.start, r.len()).iter().copied().collect();
                let h = layout.apply_h_part(sc, k, &row);
                ha.column_mut(i)
                    .rows_mut(r.start, r.len())
                    .copy_from_slice(&h);
            }
        }
        let mut mat = a * &ha;
        mat = (&mat + mat.transpose()) * 0.5;
        let scale = mat.diagonal().amax().max(1e-300);
        let mut reg = 0.0;
        loop {
            let mut trial = mat.clone();
            for i in 0..m {
                trial[(i, i)] += reg;
            }
            if let Some(chol) = trial.cholesky() {
                return Ok((Self { chol, mat }, ha));
            }
            reg = if reg == 0.0 {
                1e-14 * scale
            } else {
                reg * 100.0
            };
            if reg > 1e-4 * scale {
                return Err(Error::NumericalFailure(
                    "normal equations are singular".into(),
                ));
            }
        }
    }

    /// Cholesky solve with two rounds of iterative refinement against the
    /// unregularized matrix.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        for _ in 0..2 {
            let r = rhs - &self.mat * &x;
            x += self.chol.solve(&r);
        }
        x
    }
}

pub(crate) fn solve(
    layout: &Layout,
    a_full: &DMatrix<f64>,
    b_full: &DVector<f64>,
    c: &DVector<f64>,
    settings: &SdpTolerances,
) -> Result<ConicSolution> {
    let keep = independent_rows(a_full);
    let a = a_full.select_rows(&keep);
    let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| b_full[i]));
    let m = a.nrows();
    let nu = layout.degree as f64;

    // Cones touched by each row.
    let blocks: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..layout.cones.len())
                .filter(|&k| {
                    let r = layout.range(k);
                    a.row(i).columns(r.start, r.len()).iter().any(|&v| v != 0.0)
                })
                .collect()
        })
        .collect();

    let e = layout.identity();
    let mut x = e.clone();
    let mut s = e.clone();
    let mut y = DVector::zeros(m);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let bnorm = 1.0 + b_full.amax();
    let cnorm = 1.0 + c.amax();

    let mut best: Option<(f64, ConicSolution)> = None;
    for it in 0..settings.max_iterations {
        let rp = &a * &x - &b * tau;
        let rd = a.transpose() * &y + &s - c * tau;
        let pobj = c.dot(&x);
        let dobj = b.dot(&y);
        let rg = pobj - dobj + kappa;
        let mu = (x.dot(&s) + tau * kappa) / (nu + 1.0);
        // Termination.
        let pres = (&rp / tau).amax() / bnorm;
        let dres = (&rd / tau).amax() / cnorm;
        let (po, du) = (pobj / tau, dobj / tau);
        let gap = (po - du).abs() / (1.0 + po.abs().max(du.abs()));
        if pres < settings.feasibility && dres < settings.feasibility && gap < settings.gap {
            // Rows dropped as dependent must still hold.
            let full = (a_full * &x / tau - b_full).amax() / bnorm;
            if full > 1e3 * settings.feasibility.max(1e-9) {
                return Ok(ConicSolution {
                    status: Status::PrimalInfeasible,
                    x: x / tau,
                    y: DVector::zeros(a_full.nrows()),
                    primal_residual: full,
                    dual_residual: dres,
                    relative_gap: f64::NAN,
                    iterations: it,
                });
            }
            return Ok(ConicSolution {
                status: Status::Optimal,
                x: x / tau,
                y: expand(&(&y / tau), &keep, a_full.nrows()),
                primal_residual: pres,
                dual_residual: dres,
                relative_gap: gap,
                iterations: it,
            });
        }
        if dobj > 0.0 {
            let cert = (a.transpose() * &y + &s).amax() / dobj;
            if cert < settings.feasibility && tau < 1e-6 * kappa.max(1.0) {
                return Ok(ConicSolution {
                    status: Status::PrimalInfeasible,
                    x: x.clone(),
                    y: expand(&(&y / dobj), &keep, a_full.nrows()),
                    primal_residual: f64::INFINITY,
                    dual_residual: cert,
                    relative_gap: f64::NAN,
                    iterations: it,
                });
            }
        }
        if pobj < 0.0 {
            let cert = (&a * &x).amax() / -pobj;
            if cert < settings.feasibility && tau < 1e-6 * kappa.max(1.0) {
                return Ok(ConicSolution {
                    status: Status::DualInfeasible,
                    x: x / -pobj,
                    y,
                    primal_residual: cert,
                    dual_residual: f64::INFINITY,
                    relative_gap: f64::NAN,
                    iterations: it,
                });
            }
        }

        // Problems without a strict interior may stall or break down just
        // short of the targets; remember the best iterate within 100x of them.
        let near = pres < 1e2 * settings.feasibility
            && dres < 1e2 * settings.feasibility
            && gap < 1e2 * settings.gap;
        let score = (pres / settings.feasibility)
            .max(dres / settings.feasibility)
            .max(gap / settings.gap);
        if near && best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((
                score,
                ConicSolution {
                    status: Status::Optimal,
                    x: &x / tau,
                    y: expand(&(&y / tau), &keep, a_full.nrows()),
                    primal_residual: pres,
                    dual_residual: dres,
                    relative_gap: gap,
                    iterations: it,
                },
            ));
        }
        let built = layout
            .scaling(&x, &s)
            .and_then(|sc| Normal::build(layout, &sc, &a, &blocks).map(|(n, ha)| (sc, n, ha)));
        let (sc, normal, ha) = match built {
            Ok(v) => v,
            Err(e) => return best.map(|(_, b)| b).ok_or(e),
        };
        let hc = layout.apply_h(&sc, c);
        let g = &a * &hc;
        let p = normal.solve(&(&g + &b));
        let chc = c.dot(&hc);
        let lam = sc.lambda.clone();
        let lam_sq = layout.jordan(&lam, &lam);

        let direction = |eta: f64, rc: &DVector<f64>, rtk: f64| -> Result<Step> {
            let d = layout.jordan_div(&sc, rc);
            let td = layout.apply_t(&sc, &d);
            let hrd = layout.apply_h(&sc, &rd);
            let rhs = -(&rp * eta) - &a * &td - (&a * &hrd) * eta;
            let q = normal.solve(&rhs);
            let denom = (&g - &b).dot(&p) - chc - kappa / tau;
            let num =
                -eta * rg - c.dot(&td) - eta * c.dot(&hrd) - g.dot(&q) + b.dot(&q) - rtk / tau;
            let dtau = num / denom;
            if !dtau.is_finite() {
                return Err(Error::NumericalFailure(
                    "search direction is not finite".into(),
                ));
            }
            let dy = &q + &p * dtau;
            let dkappa = (rtk - kappa * dtau) / tau;
            let ds = -(&rd * eta) - a.transpose() * &dy + c * dtau;
            // dx = T d - H ds, with H A' dy assembled from the cached product.
            let dx = &td + &hrd * eta + &ha * &dy - &hc * dtau;
            let dss = layout.apply_tstar(&sc, &ds);
            let dxs = &d - &dss;
            Ok(Step {
                dx,
                dy,
                ds,
                dtau,
                dkappa,
                dxs,
                dss,
            })
        };

        let step_len = |st: &Step| -> f64 {
            let mut alpha = layout
                .max_step(&sc, &st.dxs)
                .min(layout.max_step(&sc, &st.dss));
            if st.dtau < 0.0 {
                alpha = alpha.min(-tau / st.dtau);
            }
            if st.dkappa < 0.0 {
                alpha = alpha.min(-kappa / st.dkappa);
            }
            alpha
        };

        // Predictor.
        let aff = match direction(1.0, &(-&lam_sq), -tau * kappa) {
            Ok(v) => v,
            Err(e) => return best.map(|(_, b)| b).ok_or(e),
        };
        let alpha_aff = step_len(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // Corrector.
        let rc = &e * (sigma * mu) - &lam_sq - layout.jordan(&aff.dxs, &aff.dss);
        let rtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let st = match direction(1.0 - sigma, &rc, rtk) {
            Ok(v) => v,
            Err(e) => return best.map(|(_, b)| b).ok_or(e),
        };
        let mut alpha = (0.99 * step_len(&st)).min(1.0);
        // Backtrack until both iterates stay numerically interior.
        for _ in 0..30 {
            let xt = &x + &st.dx * alpha;
            let stt = &s + &st.ds * alpha;
            if layout.scaling(&xt, &stt).is_ok() {
                break;
            }
            alpha *= 0.7;
        }

        x += &st.dx * alpha;
        y += &st.dy * alpha;
        s += &st.ds * alpha;
        tau += st.dtau * alpha;
        kappa += st.dkappa * alpha;
        if !(tau > 0.0 && kappa > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return best
                .map(|(_, b)| b)
                .ok_or_else(|| Error::NumericalFailure("iterates diverged".into()));
        }
    }
    if let Some((_, b)) = best {
        return Ok(b);
    }
    let rp = (a_full * &x / tau - b_full).amax() / bnorm;
    Err(Error::NumericalFailure(format!(
        "no convergence after {} iterations (primal residual {rp:.2e}, tau {tau:.2e}, kappa {kappa:.2e})",
        settings.max_iterations
    )))
}

struct Step {
    dx: DVector<f64>,
    dy: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    /// Scaled primal and dual directions.
    dxs: DVector<f64>,
    dss: DVector<f64>,
}

fn expand(y: &DVector<f64>, keep: &[usize], m: usize) -> DVector<f64> {
    let mut full = DVector::zeros(m);
    for (k, &i) in keep.iter().enumerate() {
        full[i] = y[k];
    }
    full
}
