//! Symmetric-cone algebra on real vectors: nonnegative orthant, second-order
//! cone and real PSD cone in `svec` layout, with Nesterov-Todd scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    Nonneg(usize),
    Soc(usize),
    /// Real symmetric `n x n`, stored as `n(n+1)/2` entries.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(n) | Cone::Psd(n) => n,
            Cone::Soc(_) => 1,
        }
    }
}

/// Column-major lower triangle with off-diagonals scaled by `sqrt 2`, so the
/// Euclidean product of two `svec`s equals the trace inner product.
pub(crate) fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::zeros(n * (n + 1) / 2);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            v[k] = if i == j {
                m[(i, j)]
            } else {
                SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)])
            };
            k += 1;
        }
    }
    v
}

pub(crate) fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub cones: Vec<Cone>,
    pub offsets: Vec<usize>,
    pub n: usize,
    pub degree: usize,
}

impl Layout {
    pub fn new(cones: Vec<Cone>) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut n = 0;
        for c in &cones {
            offsets.push(n);
            n += c.dim();
        }
        let degree = cones.iter().map(Cone::degree).sum();
        Self {
            cones,
            offsets,
            n,
            degree,
        }
    }

    fn parts(&self) -> impl Iterator<Item = (Cone, std::ops::Range<usize>)> + '_ {
        self.cones
            .iter()
            .zip(&self.offsets)
            .map(|(&c, &o)| (c, o..o + c.dim()))
    }

    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.n);
        for (c, r) in self.parts() {
            match c {
                Cone::Nonneg(_) => e.rows_mut(r.start, r.len()).fill(1.0),
                Cone::Soc(_) => e[r.start] = 1.0,
                Cone::Psd(n) => e
                    .rows_mut(r.start, r.len())
                    .copy_from(&svec(&DMatrix::identity(n, n))),
            }
        }
        e
    }

    /// Jordan product `u ∘ v`.
    pub fn jordan(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (c, r) in self.parts() {
            let (us, vs) = (&u.as_slice()[r.clone()], &v.as_slice()[r.clone()]);
            match c {
                Cone::Nonneg(_) => {
                    for (k, i) in r.clone().enumerate() {
                        out[i] = us[k] * vs[k];
                    }
                }
                Cone::Soc(_) => {
                    out[r.start] = us.iter().zip(vs).map(|(a, b)| a * b).sum();
                    for k in 1..r.len() {
                        out[r.start + k] = us[0] * vs[k] + vs[0] * us[k];
                    }
                }
                Cone::Psd(n) => {
                    let (a, b) = (smat(us, n), smat(vs, n));
                    let p = &a * &b;
                    let sym = (&p + p.transpose()) * 0.5;
                    out.rows_mut(r.start, r.len()).copy_from(&svec(&sym));
                }
            }
        }
        out
    }

    /// Largest `alpha` with `lambda + alpha * delta` in the cone; infinite if
    /// the ray never leaves it.
    pub fn max_step(&self, scaling: &Scaling, delta: &DVector<f64>) -> f64 {
        let mut alpha = f64::INFINITY;
        for ((c, r), part) in self.parts().zip(&scaling.parts) {
            let ds = &delta.as_slice()[r.clone()];
            let ls = &scaling.lambda.as_slice()[r.clone()];
            let a = match (c, part) {
                (Cone::Nonneg(_), _) => ls
                    .iter()
                    .zip(ds)
                    .filter(|(_, &d)| d < 0.0)
                    .map(|(&l, &d)| -l / d)
                    .fold(f64::INFINITY, f64::min),
                (Cone::Soc(_), _) => soc_step(ls, ds),
                (Cone::Psd(n), PartScaling::Psd { lambda, .. }) => {
                    let mut m = smat(ds, n);
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
                        }
                    }
                    let min = m.symmetric_eigenvalues().min();
                    if min < 0.0 {
                        -1.0 / min
                    } else {
                        f64::INFINITY
                    }
                }
                _ => unreachable!("scaling matches layout"),
            };
            alpha = alpha.min(a);
        }
        alpha
    }

    /// Nesterov-Todd scaling of the pair `(x, s)`, both strictly interior.
    pub fn scaling(&self, x: &DVector<f64>, s: &DVector<f64>) -> Result<Scaling> {
        let mut parts = Vec::with_capacity(self.cones.len());
        let mut lambda = DVector::zeros(self.n);
        for (c, r) in self.parts() {
            let (xs, ss) = (&x.as_slice()[r.clone()], &s.as_slice()[r.clone()]);
            match c {
                Cone::Nonneg(_) => {
                    let mut d = Vec::with_capacity(r.len());
                    for k in 0..r.len() {
                        if !(xs[k] > 0.0 && ss[k] > 0.0) {
                            return Err(Error::NumericalFailure("iterate left the orthant".into()));
                        }
                        d.push((xs[k] / ss[k]).sqrt());
                        lambda[r.start + k] = (xs[k] * ss[k]).sqrt();
                    }
                    parts.push(PartScaling::Nonneg(d));
                }
                Cone::Soc(_) => {
                    let (nx, ns) = (soc_det(xs), soc_det(ss));
                    if !(nx > 0.0 && ns > 0.0 && xs[0] > 0.0 && ss[0] > 0.0) {
                        return Err(Error::NumericalFailure(
                            "iterate left the second-order cone".into(),
                        ));
                    }
                    let (sx, sn) = (nx.sqrt(), ns.sqrt());
                    let xb: Vec<f64> = xs.iter().map(|v| v / sx).collect();
                    let sb: Vec<f64> = ss.iter().map(|v| v / sn).collect();
                    let dot: f64 = xb.iter().zip(&sb).map(|(a, b)| a * b).sum();
                    let gamma = ((1.0 + dot) / 2.0).sqrt();
                    let mut w: Vec<f64> = xb
                        .iter()
                        .zip(&sb)
                        .enumerate()
                        .map(|(k, (a, b))| if k == 0 { a + b } else { a - b })
                        .collect();
                    w.iter_mut().for_each(|v| *v /= 2.0 * gamma);
                    let eta = (nx / ns).powf(0.25);
                    let part = PartScaling::Soc { eta, w };
                    let l = part.apply_tstar(ss, c);
                    lambda.rows_mut(r.start, r.len()).copy_from_slice(&l);
                    parts.push(part);
                }
                Cone::Psd(n) => {
                    let lx = smat(xs, n)
                        .cholesky()
                        .ok_or_else(|| {
                            Error::NumericalFailure("primal block lost definiteness".into())
                        })?
                        .l();
                    let ls = smat(ss, n)
                        .cholesky()
                        .ok_or_else(|| {
                            Error::NumericalFailure("dual block lost definiteness".into())
                        })?
                        .l();
                    let (u, sv, v) = crate::linalg::svd_real(&(ls.transpose() * &lx))?;
                    let sv = DVector::from_vec(sv);
                    if sv.iter().any(|&x| !(x > 0.0)) {
                        return Err(Error::NumericalFailure("degenerate scaling".into()));
                    }
                    let mut r_mat = lx * v;
                    let mut rinv = u.transpose() * ls.transpose();
                    for k in 0..n {
                        let f = sv[k].sqrt();
                        r_mat.column_mut(k).scale_mut(1.0 / f);
                        rinv.row_mut(k).scale_mut(1.0 / f);
                    }
                    let lam: Vec<f64> = sv.iter().copied().collect();
                    lambda
                        .rows_mut(r.start, r.len())
                        .copy_from(&svec(&DMatrix::from_diagonal(&DVector::from_vec(
                            lam.clone(),
                        ))));
                    let p = &r_mat * r_mat.transpose();
                    parts.push(PartScaling::Psd {
                        r: r_mat,
                        rinv,
                        p,
                        lambda: lam,
                    });
                }
            }
        }
        Ok(Scaling { parts, lambda })
    }

    fn map(
        &self,
        sc: &Scaling,
        v: &DVector<f64>,
        f: impl Fn(&PartScaling, &[f64], Cone) -> Vec<f64>,
    ) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for ((c, r), part) in self.parts().zip(&sc.parts) {
            let o = f(part, &v.as_slice()[r.clone()], c);
            out.rows_mut(r.start, r.len()).copy_from_slice(&o);
        }
        out
    }

    /// `T u`: scaled point to primal space.
    pub fn apply_t(&self, sc: &Scaling, u: &DVector<f64>) -> DVector<f64> {
        self.map(sc, u, PartScaling::apply_t)
    }

    /// `T^* v`: dual space to scaled point.
    pub fn apply_tstar(&self, sc: &Scaling, v: &DVector<f64>) -> DVector<f64> {
        self.map(sc, v, PartScaling::apply_tstar)
    }

    /// `T T^* v`.
    pub fn apply_h(&self, sc: &Scaling, v: &DVector<f64>) -> DVector<f64> {
        self.map(sc, v, PartScaling::apply_h)
    }

    /// `H` restricted to one cone, for assembling normal equations.
    pub fn apply_h_part(&self, sc: &Scaling, cone: usize, v: &[f64]) -> Vec<f64> {
        sc.parts[cone].apply_h(v, self.cones[cone])
    }

    pub fn range(&self, cone: usize) -> std::ops::Range<usize> {
        self.offsets[cone]..self.offsets[cone] + self.cones[cone].dim()
    }

    /// Solves `lambda ∘ u = r` for `u`.
    pub fn jordan_div(&self, sc: &Scaling, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for ((c, rg), part) in self.parts().zip(&sc.parts) {
            let ls = &sc.lambda.as_slice()[rg.clone()];
            let rs = &r.as_slice()[rg.clone()];
            match (c, part) {
                (Cone::Nonneg(_), _) => {
                    for k in 0..rg.len() {
                        out[rg.start + k] = rs[k] / ls[k];
                    }
                }
                (Cone::Soc(_), _) => {
                    let det = soc_det(ls);
                    let l1r1: f64 = ls[1..].iter().zip(&rs[1..]).map(|(a, b)| a * b).sum();
                    let u0 = (ls[0] * rs[0] - l1r1) / det;
                    out[rg.start] = u0;
                    for k in 1..rg.len() {
                        out[rg.start + k] = (rs[k] - u0 * ls[k]) / ls[0];
                    }
                }
                (Cone::Psd(n), PartScaling::Psd { lambda, .. }) => {
                    let mut m = smat(rs, n);
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] *= 2.0 / (lambda[i] + lambda[j]);
                        }
                    }
                    out.rows_mut(rg.start, rg.len()).copy_from(&svec(&m));
                }
                _ => unreachable!("scaling matches layout"),
            }
        }
        out
    }
}

fn soc_det(v: &[f64]) -> f64 {
    // Factored to avoid cancellation near the boundary.
    let r = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    (v[0] - r) * (v[0] + r)
}

fn soc_step(l: &[f64], d: &[f64]) -> f64 {
    // (l0 + a d0)^2 - |l1 + a d1|^2 >= 0 and l0 + a d0 >= 0.
    let a = soc_det(d);
    let b = 2.0 * (l[0] * d[0] - l[1..].iter().zip(&d[1..]).map(|(x, y)| x * y).sum::<f64>());
    let c = soc_det(l);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -l[0] / d[0];
    }
    let roots = if a.abs() < 1e-300 {
        if b < 0.0 {
            vec![-c / b]
        } else {
            vec![]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            vec![q / a, c / q]
        }
    };
    for r in roots {
        if r > 0.0 && r.is_finite() {
            alpha = alpha.min(r);
        }
    }
    alpha
}

#[derive(Debug, Clone)]
pub(crate) enum PartScaling {
    Nonneg(Vec<f64>),
    /// `W = eta * Wbar(w)` with `w' J w = 1`.
    Soc {
        eta: f64,
        w: Vec<f64>,
    },
    /// `T u = R u R'`, `T^* v = R' v R`, `p = R R'`.
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        p: DMatrix<f64>,
        lambda: Vec<f64>,
    },
}

impl PartScaling {
    fn soc_wbar(w: &[f64], v: &[f64], inverse: bool) -> Vec<f64> {
        // Wbar = [[w0, w1'], [w1, I + w1 w1'/(1 + w0)]]; Wbar^{-1} = J Wbar J.
        let sign = if inverse { -1.0 } else { 1.0 };
        let w1v1: f64 = w[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
        let mut out = vec![0.0; v.len()];
        out[0] = w[0] * v[0] + sign * w1v1;
        let f = sign * v[0] + w1v1 / (1.0 + w[0]);
        for k in 1..v.len() {
            out[k] = v[k] + f * w[k];
        }
        out
    }

    fn apply_t(&self, u: &[f64], c: Cone) -> Vec<f64> {
        match (self, c) {
            (PartScaling::Nonneg(d), _) => u.iter().zip(d).map(|(a, b)| a * b).collect(),
            (PartScaling::Soc { eta, w }, _) => Self::soc_wbar(w, u, false)
                .into_iter()
                .map(|v| v * eta)
                .collect(),
            (PartScaling::Psd { r, .. }, Cone::Psd(n)) => {
                svec(&(r * smat(u, n) * r.transpose())).as_slice().to_vec()
            }
            _ => unreachable!(),
        }
    }

    fn apply_tstar(&self, v: &[f64], c: Cone) -> Vec<f64> {
        match (self, c) {
            (PartScaling::Nonneg(d), _) => v.iter().zip(d).map(|(a, b)| a * b).collect(),
            (PartScaling::Soc { eta, w }, _) => Self::soc_wbar(w, v, false)
                .into_iter()
                .map(|x| x * eta)
                .collect(),
            (PartScaling::Psd { r, .. }, Cone::Psd(n)) => {
                svec(&(r.transpose() * smat(v, n) * r)).as_slice().to_vec()
            }
            _ => unreachable!(),
        }
    }

    fn apply_h(&self, v: &[f64], c: Cone) -> Vec<f64> {
        match (self, c) {
            (PartScaling::Nonneg(d), _) => v.iter().zip(d).map(|(a, b)| a * b * b).collect(),
            (PartScaling::Soc { eta, w }, _) => {
                let once = Self::soc_wbar(w, v, false);
                Self::soc_wbar(w, &once, false)
                    .into_iter()
                    .map(|x| x * eta * eta)
                    .collect()
            }
            (PartScaling::Psd { p, .. }, Cone::Psd(n)) => {
                svec(&(p * smat(v, n) * p)).as_slice().to_vec()
            }
            _ => unreachable!(),
        }
    }

    #[allow(dead_code)]
    fn apply_tinv(&self, x: &[f64], c: Cone) -> Vec<f64> {
        match (self, c) {
            (PartScaling::Nonneg(d), _) => x.iter().zip(d).map(|(a, b)| a / b).collect(),
            (PartScaling::Soc { eta, w }, _) => Self::soc_wbar(w, x, true)
                .into_iter()
                .map(|v| v / eta)
                .collect(),
            (PartScaling::Psd { rinv, .. }, Cone::Psd(n)) => {
                svec(&(rinv * smat(x, n) * rinv.transpose()))
                    .as_slice()
                    .to_vec()
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    parts: Vec<PartScaling>,
    pub lambda: DVector<f64>,
}

#[cfg(test)]
impl Layout {
    pub fn apply_tinv(&self, sc: &Scaling, x: &DVector<f64>) -> DVector<f64> {
        self.map(sc, x, PartScaling::apply_tinv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_interior(layout: &Layout, rng: &mut impl Rng) -> DVector<f64> {
        let mut v = DVector::zeros(layout.n);
        for (c, r) in layout.parts() {
            match c {
                Cone::Nonneg(_) => r.clone().for_each(|i| v[i] = rng.random_range(0.1..2.0)),
                Cone::Soc(k) => {
                    let mut norm = 0.0;
                    for i in 1..k {
                        let x: f64 = rng.random_range(-1.0..1.0);
                        v[r.start + i] = x;
                        norm += x * x;
                    }
                    v[r.start] = norm.sqrt() + rng.random_range(0.1..1.0);
                }
                Cone::Psd(n) => {
                    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                    let m = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
                    v.rows_mut(r.start, r.len()).copy_from(&svec(&m));
                }
            }
        }
        v
    }

    fn layout() -> Layout {
        Layout::new(vec![
            Cone::Nonneg(3),
            Cone::Soc(4),
            Cone::Psd(3),
            Cone::Psd(1),
        ])
    }

    #[test]
    fn svec_preserves_inner_product() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 4.0]);
        assert!((svec(&a).dot(&svec(&b)) - (&a * &b).trace()).abs() < 1e-14);
        assert_eq!(smat(svec(&a).as_slice(), 2), a);
    }

    #[test]
    fn nt_scaling_identities() {
        let l = layout();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_interior(&l, &mut rng);
            let s = random_interior(&l, &mut rng);
            let sc = l.scaling(&x, &s).unwrap();
            assert!((l.apply_tinv(&sc, &x) - &sc.lambda).norm() < 1e-9);
            assert!((l.apply_tstar(&sc, &s) - &sc.lambda).norm() < 1e-9);
            assert!((l.apply_h(&sc, &s) - &x).norm() < 1e-8 * (1.0 + x.norm()));
            // Jordan division inverts Jordan multiplication.
            let r = random_interior(&l, &mut rng);
            let u = l.jordan_div(&sc, &r);
            assert!((l.jordan(&sc.lambda, &u) - &r).norm() < 1e-8);
            // T and T^{-1} are inverses.
            assert!((l.apply_tinv(&sc, &l.apply_t(&sc, &r)) - &r).norm() < 1e-8);
        }
    }

    #[test]
    fn step_lengths() {
        let l = layout();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = random_interior(&l, &mut rng);
        let sc = l.scaling(&x, &x).unwrap();
        let delta = DVector::from_fn(l.n, |_, _| rng.random_range(-1.0..1.0));
        let a = l.max_step(&sc, &delta);
        assert!(a.is_finite() && a > 0.0);
        let inside = &sc.lambda + &delta * (0.999 * a);
        let outside = &sc.lambda + &delta * (1.001 * a);
        assert!(l.scaling(&inside, &l.identity()).is_ok());
        assert!(l.scaling(&outside, &l.identity()).is_err());
    }
}
