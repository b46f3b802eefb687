//! EPR steering with Bob's characterized computational and Fourier
//! measurements, and one-sided device-independent randomness.

use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::correlations::CorrelationTable;
use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitize, identity, kron, trace_product_re, CMatrix, I, ONE};
use crate::sdp::{certify, solve_sdp, Certificate, SdpProblem, SdpTolerances, Sense, Term};
use crate::state::{partial_trace_matrix, DensityMatrix, Side};

const TOL: f64 = 1e-9;

/// `beta_lhs = 1 + 1/sqrt(d)`.
pub fn lhs_bound(d: usize) -> f64 {
    1.0 + 1.0 / (d as f64).sqrt()
}

/// Bob's setting 0 is computational, setting 1 projects onto `|-l>`.
pub fn steering_bases(d: usize) -> Result<Vec<MeasurementBasis>> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "steering needs d >= 2, got {d}"
        )));
    }
    Ok(vec![
        MeasurementBasis::computational(d),
        MeasurementBasis::fourier(d, -1),
    ])
}

/// Alice's default settings: conjugates of Bob's, optimal on `|psi+_d>`.
pub fn alice_steering_bases(d: usize) -> Result<Vec<MeasurementBasis>> {
    Ok(steering_bases(d)?
        .iter()
        .map(MeasurementBasis::conjugate)
        .collect())
}

/// Unnormalized conditional states `sigma[x][a] = p(a|x) rho_{a|x}` on Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    d: usize,
    sigma: Vec<Vec<CMatrix>>,
}

impl Assemblage {
    pub fn new(sigma: Vec<Vec<CMatrix>>) -> Result<Self> {
        let d = sigma
            .first()
            .and_then(|s| s.first())
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidInput("empty assemblage".into()))?;
        let a = Self { d, sigma };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        let mut reduced: Option<CMatrix> = None;
        for (x, parts) in self.sigma.iter().enumerate() {
            let mut sum = CMatrix::zeros(self.d, self.d);
            for (a, s) in parts.iter().enumerate() {
                if s.nrows() != self.d || !s.is_square() {
                    return Err(Error::DimMismatch(format!(
                        "sigma[{x}][{a}] is not {0}x{0}",
                        self.d
                    )));
                }
                if (s - s.adjoint()).norm() > TOL || eigh(&hermitize(s)).0[0] < -TOL {
                    return Err(Error::InvalidState(format!(
                        "sigma[{x}][{a}] is not positive semidefinite"
                    )));
                }
                sum += s;
            }
            if (sum.trace().re - 1.0).abs() > TOL {
                return Err(Error::InvalidState(format!(
                    "setting {x} has total trace {}",
                    sum.trace().re
                )));
            }
            match &reduced {
                Some(r) if (r - &sum).norm() > TOL => {
                    return Err(Error::InvalidState(format!("setting {x} signals to Bob")));
                }
                None => reduced = Some(sum),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn settings(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, a: usize, x: usize) -> &CMatrix {
        &self.sigma[x][a]
    }

    /// Bob's reduced state.
    pub fn reduced(&self) -> CMatrix {
        self.sigma[0]
            .iter()
            .fold(CMatrix::zeros(self.d, self.d), |acc, s| acc + s)
    }
}

/// `sigma_{a|x} = Tr_A[(M_{a|x} (x) I) rho]`.
pub fn steered_assemblage(
    rho: &DensityMatrix,
    alice_bases: &[MeasurementBasis],
) -> Result<Assemblage> {
    let d = alice_bases
        .first()
        .ok_or_else(|| Error::InvalidInput("no Alice settings".into()))?
        .dim();
    if rho.dim() != d * d {
        return Err(Error::DimMismatch(format!(
            "state of dimension {} is not {d}x{d}",
            rho.dim()
        )));
    }
    let id = identity(d);
    let sigma = alice_bases
        .iter()
        .map(|basis| {
            if basis.dim() != d {
                return Err(Error::DimMismatch("Alice bases differ in dimension".into()));
            }
            basis
                .projectors()
                .iter()
                .map(|m| {
                    partial_trace_matrix(&(kron(m, &id) * rho.matrix()), d, d, Side::A)
                        .map(|s| hermitize(&s))
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<CMatrix>>>>()?;
    Ok(Assemblage { d, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub beta: f64,
    pub lhs_bound: f64,
    pub quantum_max: f64,
    pub std: Option<f64>,
}

impl SteeringResult {
    fn new(beta: f64, d: usize) -> Self {
        Self {
            beta,
            lhs_bound: lhs_bound(d),
            quantum_max: 2.0,
            std: None,
        }
    }

    pub fn with_std(mut self, std: f64) -> Self {
        self.std = Some(std);
        self
    }

    pub fn violates(&self) -> bool {
        self.beta > self.lhs_bound
    }
}

/// `beta = sum_{a,x} Tr[M_{a|x} sigma_{a|x}]` against [`steering_bases`].
pub fn steering_value(assemblage: &Assemblage) -> Result<SteeringResult> {
    if assemblage.settings() != 2 {
        return Err(Error::InvalidTable(format!(
            "steering functional needs 2 settings, found {}",
            assemblage.settings()
        )));
    }
    let bob = steering_bases(assemblage.d)?;
    let mut beta = 0.0;
    for (x, basis) in bob.iter().enumerate() {
        for a in basis.labels() {
            beta += trace_product_re(&basis.projector(a), assemblage.sigma(a, x));
        }
    }
    Ok(SteeringResult::new(beta, assemblage.d))
}

/// `beta = sum_{a,x} p(a a | x x)` from a table whose Bob settings are
/// [`steering_bases`].
pub fn steering_value_from_table(table: &CorrelationTable) -> Result<SteeringResult> {
    if table.settings() != (2, 2) {
        return Err(Error::InvalidTable(format!(
            "steering functional needs 2x2 settings, found {:?}",
            table.settings()
        )));
    }
    let d = table.d();
    let beta = (0..2)
        .map(|x| (0..d).map(|a| table.p(a, a, x, x)).sum::<f64>())
        .sum();
    Ok(SteeringResult::new(beta, d))
}

/// `sum_i q_i rho_A^i (x) rho_B^i`.
#[derive(Debug, Clone)]
pub struct SeparableState {
    pub weights: Vec<f64>,
    pub alice: Vec<DensityMatrix>,
    pub bob: Vec<DensityMatrix>,
}

impl SeparableState {
    pub fn density(&self) -> Result<DensityMatrix> {
        let parts: Vec<DensityMatrix> = self
            .alice
            .iter()
            .zip(&self.bob)
            .map(|(a, b)| a.tensor(b))
            .collect();
        let pairs: Vec<(f64, &DensityMatrix)> =
            self.weights.iter().copied().zip(parts.iter()).collect();
        DensityMatrix::mixture(&pairs)
    }

    /// Best value any Alice measurement can reach: each component's local
    /// state lets Alice output the most likely Bob outcome deterministically.
    pub fn optimal_beta(&self) -> Result<f64> {
        let d = self.bob[0].dim();
        let bob = steering_bases(d)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bob)
            .map(|(q, rb)| {
                q * bob
                    .iter()
                    .map(|basis| {
                        basis
                            .labels()
                            .map(|a| trace_product_re(&basis.projector(a), rb.matrix()))
                            .fold(f64::MIN, f64::max)
                    })
                    .sum::<f64>()
            })
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LhsReport {
    pub states: usize,
    pub max_beta: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Evaluates every state with Alice's default bases and with her optimal
/// deterministic strategy; all values must respect the LHS bound.
pub fn lhs_bound_check(states: &[SeparableState]) -> Result<LhsReport> {
    let d = states
        .first()
        .ok_or_else(|| Error::InvalidInput("no states".into()))?
        .bob[0]
        .dim();
    let alice = alice_steering_bases(d)?;
    let mut max_beta = f64::MIN;
    for s in states {
        let direct = steering_value(&steered_assemblage(&s.density()?, &alice)?)?.beta;
        max_beta = max_beta.max(direct).max(s.optimal_beta()?);
    }
    let bound = lhs_bound(d);
    Ok(LhsReport {
        states: states.len(),
        max_beta,
        bound,
        within_bound: max_beta <= bound + TOL,
    })
}

/// Mixtures of 1 to 3 products of Haar-random pure states.
pub fn random_separable<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> SeparableState {
    let k = rng.random_range(1..=3);
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let pure = |rng: &mut R| {
        let v = crate::linalg::haar_vector(d, rng);
        DensityMatrix::new(crate::linalg::projector(&v)).expect("rank-one projector")
    };
    let alice = (0..k).map(|_| pure(rng)).collect();
    let bob = (0..k).map(|_| pure(rng)).collect();
    SeparableState {
        weights,
        alice,
        bob,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomnessResult {
    pub guessing_probability: f64,
    pub min_entropy_bits: f64,
    /// Setting whose outcome is hardest to protect.
    pub x_star: usize,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomnessOptions {
    /// Largest `d` accepted; block count grows as `2 d^2`.
    pub max_dim: usize,
    pub tolerances: SdpTolerances,
}

impl Default for RandomnessOptions {
    fn default() -> Self {
        Self {
            max_dim: 4,
            tolerances: SdpTolerances::default(),
        }
    }
}

impl RandomnessOptions {
    /// Admits any `d` with looser solver targets.
    pub fn large() -> Self {
        Self {
            max_dim: usize::MAX,
            tolerances: SdpTolerances {
                feasibility: 1e-7,
                gap: 1e-7,
                max_iterations: 200,
            },
        }
    }
}

/// Hermitian basis used to impose matrix equalities entrywise.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in i..d {
            let mut m = CMatrix::zeros(d, d);
            if i == j {
                m[(i, i)] = ONE;
                out.push(m);
            } else {
                m[(i, j)] = ONE;
                m[(j, i)] = ONE;
                out.push(m.clone());
                m[(i, j)] = I;
                m[(j, i)] = -I;
                out.push(m);
            }
        }
    }
    out
}

/// Eve's guessing-probability program for setting `x_star`:
/// maximize `sum_a Tr sigma_{a,a|x*}` over `sigma_{a,e|x} ⪰ 0` with the
/// observed steering value, no-signaling per guess `e`, and unit total trace.
pub fn guessing_program(d: usize, beta_obs: f64, x_star: usize) -> Result<SdpProblem> {
    let bob = steering_bases(d)?;
    if x_star >= 2 {
        return Err(Error::InvalidIndex(format!(
            "x* = {x_star} not in {{0, 1}}"
        )));
    }
    let idx = |x: usize, a: usize, e: usize| (x * d + a) * d + e;
    let mut p = SdpProblem::new(vec![d; 2 * d * d], Sense::Max);
    for a in 0..d {
        p.set_objective(idx(x_star, a, a), identity(d));
    }
    let mut steer = Vec::new();
    for (x, basis) in bob.iter().enumerate() {
        for a in 0..d {
            for e in 0..d {
                steer.push(Term::new(idx(x, a, e), basis.projector(a)));
            }
        }
    }
    p.add_constraint(steer, beta_obs);
    for h in hermitian_basis(d) {
        for e in 0..d {
            let mut terms = Vec::with_capacity(2 * d);
            for a in 0..d {
                terms.push(Term::new(idx(0, a, e), h.clone()));
                terms.push(Term::new(idx(1, a, e), -&h));
            }
            p.add_constraint(terms, 0.0);
        }
    }
    for x in 0..2 {
        let terms = (0..d)
            .flat_map(|a| (0..d).map(move |e| (a, e)))
            .map(|(a, e)| Term::new(idx(x, a, e), identity(d)))
            .collect();
        p.add_constraint(terms, 1.0);
    }
    Ok(p)
}

/// Certified randomness from an observed steering value alone; worst case
/// over `x_star` when `None`.
pub fn randomness_from_beta(
    d: usize,
    beta_obs: f64,
    x_star: Option<usize>,
    options: &RandomnessOptions,
) -> Result<RandomnessResult> {
    if d > options.max_dim {
        return Err(Error::InvalidDimension(format!(
            "randomness program limited to d <= {}; use the large option",
            options.max_dim
        )));
    }
    if beta_obs > 2.0 + 1e-9 {
        return Err(Error::Infeasible(format!(
            "beta = {beta_obs} exceeds the quantum maximum 2"
        )));
    }
    // Round-off above the maximum is clipped to the boundary.
    let beta = beta_obs.min(2.0);
    let settings: Vec<usize> = match x_star {
        Some(x) => vec![x],
        None => vec![0, 1],
    };
    let mut worst: Option<RandomnessResult> = None;
    for x in settings {
        let problem = guessing_program(d, beta, x)?;
        let sol = solve_sdp(&problem, &options.tolerances)?;
        let cert = certify(&sol, &problem);
        if !cert.passed {
            return Err(Error::NumericalFailure(format!(
                "certificate rejected: primal {:.2e}, dual {:.2e}, gap {:.2e}",
                cert.primal_residual, cert.dual_residual, cert.relative_gap
            )));
        }
        let pg = sol.objective_value.clamp(1.0 / d as f64, 1.0);
        let r = RandomnessResult {
            guessing_probability: pg,
            min_entropy_bits: (-pg.log2()).max(0.0),
            x_star: x,
            certificate: cert,
        };
        if worst.is_none_or(|w| r.guessing_probability > w.guessing_probability) {
            worst = Some(r);
        }
    }
    Ok(worst.expect("at least one setting"))
}

/// Randomness certified by the steering value of `assemblage`.
pub fn local_randomness(
    assemblage: &Assemblage,
    beta_obs: Option<f64>,
    x_star: Option<usize>,
    options: &RandomnessOptions,
) -> Result<RandomnessResult> {
    let beta = match beta_obs {
        Some(b) => b,
        None => steering_value(assemblage)?.beta,
    };
    randomness_from_beta(assemblage.d(), beta, x_star, options)
}

/// Explicit Eve strategy: with probability `q` she prepares `|psi+>` (no
/// knowledge), otherwise a product state on which Alice's answer to `x*` is
/// fixed. Used as an independent lower bound on the optimum.
#[cfg(test)]
fn explicit_strategy_bounds(d: usize, beta: f64) -> f64 {
    // Deterministic part: Bob in |0>, Alice answers 0 for x=0 and the best
    // Fourier outcome for x=1, reaching beta_det = 1 + 1/d with P_g = 1.
    let beta_det = 1.0 + 1.0 / d as f64;
    if beta <= beta_det {
        return 1.0;
    }
    let q = (beta - beta_det) / (2.0 - beta_det);
    q / d as f64 + (1.0 - q)
}
