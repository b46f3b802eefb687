//! Small dense semidefinite programs over complex Hermitian blocks.
//!
//! Blocks are mapped to real symmetric matrices of twice the size; an
//! optional Euclidean norm-ball constraint becomes a second-order cone.

mod cones;
mod ipm;
mod problem;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use ipm::SdpTolerances;
pub use problem::{Constraint, NormBall, SdpProblem, Sense, Term};

use crate::error::{Error, Result};
use crate::linalg::{c64, eigh, hermitize, CMatrix};
use cones::{smat, svec, Cone, Layout};
use ipm::Status;

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<CMatrix>,
    pub objective_value: f64,
    /// Multipliers of the equality constraints, signed so that the dual
    /// objective is `sum_i rhs_i * dual_i` (plus norm-ball terms).
    pub dual: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    /// Internal (minimization-form) multipliers of the norm-ball rows:
    /// radius row first, then one per ball row.
    ball_dual: Vec<f64>,
}

/// Independent recomputation of feasibility and optimality measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub primal_residual: f64,
    pub psd_violation: f64,
    pub dual_residual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub passed: bool,
}

struct Embedding {
    layout: Layout,
    ball_offset: Option<usize>,
}

fn block_cone(n: usize) -> Cone {
    if n == 1 {
        Cone::Nonneg(1)
    } else {
        Cone::Psd(2 * n)
    }
}

/// Real coefficient vector of `X -> Re Tr[A X]` in the block's cone layout.
fn embed_functional(a: &CMatrix) -> Vec<f64> {
    let n = a.nrows();
    if n == 1 {
        return vec![a[(0, 0)].re];
    }
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)] * 0.5;
            e[(i, j)] = z.re;
            e[(i + n, j + n)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
        }
    }
    // Re Tr[A X] = <E(A)/2, E(X)>.
    svec(&e).as_slice().to_vec()
}

fn recover_block(v: &[f64], n: usize) -> CMatrix {
    if n == 1 {
        return CMatrix::from_element(1, 1, c64(v[0], 0.0));
    }
    let m = smat(v, 2 * n);
    CMatrix::from_fn(n, n, |i, j| {
        c64(
            0.5 * (m[(i, j)] + m[(i + n, j + n)]),
            0.5 * (m[(i + n, j)] - m[(i, j + n)]),
        )
    })
}

impl SdpProblem {
    fn embedding(&self) -> Embedding {
        let mut cones: Vec<Cone> = self.blocks.iter().map(|&n| block_cone(n)).collect();
        let mut ball_offset = None;
        if let Some(ball) = &self.norm_ball {
            ball_offset = Some(cones.iter().map(Cone::dim).sum());
            cones.push(Cone::Soc(ball.rows.len() + 1));
        }
        Embedding {
            layout: Layout::new(cones),
            ball_offset,
        }
    }

    fn add_terms(&self, layout: &Layout, row: &mut [f64], terms: &[Term], scale: f64) {
        for t in terms {
            let r = layout.range(t.block);
            for (k, v) in embed_functional(&t.matrix).into_iter().enumerate() {
                row[r.start + k] += scale * v;
            }
        }
    }

    fn standard_form(&self, emb: &Embedding) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let layout = &emb.layout;
        let sgn = if self.sense == Sense::Max { -1.0 } else { 1.0 };
        let mut c = vec![0.0; layout.n];
        for (j, cj) in self.objective.iter().enumerate() {
            if let Some(cj) = cj {
                self.add_terms(layout, &mut c, &[Term::new(j, cj.clone())], sgn);
            }
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs = Vec::new();
        for con in &self.constraints {
            let mut row = vec![0.0; layout.n];
            self.add_terms(layout, &mut row, &con.terms, 1.0);
            rows.push(row);
            rhs.push(con.rhs);
        }
        if let (Some(ball), Some(off)) = (&self.norm_ball, emb.ball_offset) {
            // The cone variables are stored in units of the radius so that a
            // tiny ball does not squeeze the cone interior.
            let unit = ball_unit(ball.radius);
            let mut row = vec![0.0; layout.n];
            row[off] = 1.0;
            rows.push(row);
            rhs.push(ball.radius / unit);
            for (k, (terms, center)) in ball.rows.iter().zip(&ball.center).enumerate() {
                let mut row = vec![0.0; layout.n];
                row[off + 1 + k] = unit;
                self.add_terms(layout, &mut row, terms, -1.0);
                rows.push(row);
                rhs.push(-center);
            }
        }
        let a = DMatrix::from_fn(rows.len(), layout.n, |i, j| rows[i][j]);
        (a, DVector::from_vec(rhs), DVector::from_vec(c))
    }

    fn functional(&self, terms: &[Term], x: &[CMatrix]) -> f64 {
        terms
            .iter()
            .map(|t| crate::linalg::trace_product_re(&t.matrix, &x[t.block]))
            .sum()
    }

    pub fn objective_at(&self, x: &[CMatrix]) -> f64 {
        self.objective
            .iter()
            .enumerate()
            .filter_map(|(j, c)| {
                c.as_ref()
                    .map(|c| crate::linalg::trace_product_re(c, &x[j]))
            })
            .sum()
    }
}

fn ball_unit(radius: f64) -> f64 {
    if radius > 0.0 {
        radius
    } else {
        1.0
    }
}

/// Solves the program; deterministic for identical inputs.
pub fn solve_sdp(problem: &SdpProblem, tolerances: &SdpTolerances) -> Result<SdpSolution> {
    problem.validate()?;
    let emb = problem.embedding();
    let (a, b, c) = problem.standard_form(&emb);
    let sol = ipm::solve(&emb.layout, &a, &b, &c, tolerances)?;
    match sol.status {
        Status::PrimalInfeasible => {
            return Err(Error::Infeasible(format!(
                "dual certificate residual {:.2e}",
                sol.dual_residual
            )))
        }
        Status::DualInfeasible => {
            return Err(Error::Unbounded(format!(
                "primal ray residual {:.2e}",
                sol.primal_residual
            )))
        }
        Status::Optimal => {}
    }
    let x: Vec<CMatrix> = problem
        .blocks
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let r = emb.layout.range(j);
            recover_block(&sol.x.as_slice()[r], n)
        })
        .collect();
    let sgn = if problem.sense == Sense::Max {
        -1.0
    } else {
        1.0
    };
    let m = problem.constraints.len();
    Ok(SdpSolution {
        objective_value: problem.objective_at(&x),
        x,
        dual: sol.y.iter().take(m).map(|v| sgn * v).collect(),
        ball_dual: sol
            .y
            .iter()
            .skip(m)
            .enumerate()
            .map(|(k, v)| {
                if k == 0 {
                    v / ball_unit(problem.norm_ball.as_ref().map_or(1.0, |b| b.radius))
                } else {
                    *v
                }
            })
            .collect(),
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        relative_gap: sol.relative_gap,
        iterations: sol.iterations,
    })
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigh(&hermitize(m)).0[0]
}

/// Recomputes residuals from the problem data and the returned blocks and
/// multipliers, independently of the solver's internal state.
pub fn certify(solution: &SdpSolution, problem: &SdpProblem) -> Certificate {
    const TOL: f64 = 1e-6;
    let x = &solution.x;
    let bscale = 1.0
        + problem
            .constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max);
    let mut primal = problem
        .constraints
        .iter()
        .map(|c| (problem.functional(&c.terms, x) - c.rhs).abs())
        .fold(0.0, f64::max)
        / bscale;
    if let Some(ball) = &problem.norm_ball {
        let norm = ball
            .rows
            .iter()
            .zip(&ball.center)
            .map(|(t, c)| (problem.functional(t, x) - c).powi(2))
            .sum::<f64>()
            .sqrt();
        primal = primal.max((norm - ball.radius).max(0.0) / (1.0 + ball.radius));
    }
    let psd_violation = x
        .iter()
        .map(|b| (-min_eigenvalue(b)).max(0.0))
        .fold(0.0, f64::max);

    // Dual slack in minimization form: Z_j = sgn C_j - sum_i y_i A_ij + ball terms.
    let sgn = if problem.sense == Sense::Max {
        -1.0
    } else {
        1.0
    };
    let mut z: Vec<CMatrix> = problem
        .blocks
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            problem.objective[j]
                .as_ref()
                .map(|c| c * c64(sgn, 0.0))
                .unwrap_or_else(|| CMatrix::zeros(n, n))
        })
        .collect();
    for (con, &yu) in problem.constraints.iter().zip(&solution.dual) {
        let y = sgn * yu;
        for t in &con.terms {
            z[t.block] -= &t.matrix * c64(y, 0.0);
        }
    }
    let mut dual_obj: f64 = problem
        .constraints
        .iter()
        .zip(&solution.dual)
        .map(|(c, y)| c.rhs * y)
        .sum();
    let mut dual_res = 0.0f64;
    if let Some(ball) = &problem.norm_ball {
        let u = &solution.ball_dual;
        for (terms, &uk) in ball.rows.iter().zip(&u[1..]) {
            for t in terms {
                z[t.block] += &t.matrix * c64(uk, 0.0);
            }
        }
        // Cone slack on (t, r) is -(u_t, u_r).
        let tail = u[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        dual_res = dual_res.max((tail + u[0]).max(0.0));
        let ball_obj = ball.radius * u[0]
            - ball
                .center
                .iter()
                .zip(&u[1..])
                .map(|(c, v)| c * v)
                .sum::<f64>();
        dual_obj += sgn * ball_obj;
    }
    let cscale = 1.0
        + problem
            .objective
            .iter()
            .flatten()
            .map(crate::linalg::max_abs)
            .fold(0.0, f64::max);
    for zj in &z {
        dual_res = dual_res.max((-min_eigenvalue(zj)).max(0.0));
    }
    dual_res /= cscale;
    let primal_obj = problem.objective_at(x);
    let gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs() + dual_obj.abs());
    Certificate {
        primal_residual: primal,
        psd_violation,
        dual_residual: dual_res,
        primal_objective: primal_obj,
        dual_objective: dual_obj,
        relative_gap: gap,
        passed: primal < TOL && dual_res < TOL && gap < TOL && psd_violation < 1e-8,
    }
}
