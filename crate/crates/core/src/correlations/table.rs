use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::error::{Error, Result};
use crate::linalg::{cis, kron, CMatrix, C64};
use crate::state::{DensityMatrix, PureState};
use crate::tolerance::TOL;

/// Joint distribution over `m_a x m_b` settings with `d` outcomes per side.
///
/// Settings are 0-based. Raw counts, when present, share the layout of the
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    d: usize,
    m_a: usize,
    m_b: usize,
    /// Indexed `((x * m_b + y) * d + a) * d + b`.
    p: Vec<f64>,
    counts: Option<Vec<u64>>,
    shots: u64,
}

impl CorrelationTable {
    /// Validates normalization and positivity of every setting block.
    pub fn new(d: usize, m_a: usize, m_b: usize, p: Vec<f64>) -> Result<Self> {
        let t = Self {
            d,
            m_a,
            m_b,
            p,
            counts: None,
            shots: 0,
        };
        t.validate()?;
        Ok(t)
    }

    /// Builds a table from raw counts; frequencies are normalized per setting.
    pub fn from_counts(
        d: usize,
        m_a: usize,
        m_b: usize,
        counts: Vec<u64>,
        shots: u64,
    ) -> Result<Self> {
        if counts.len() != d * d * m_a * m_b {
            return Err(Error::InvalidTable("count tensor has wrong length".into()));
        }
        let mut p = vec![0.0; counts.len()];
        for s in 0..m_a * m_b {
            let block = &counts[s * d * d..(s + 1) * d * d];
            let total: u64 = block.iter().sum();
            if total == 0 {
                return Err(Error::InvalidTable(format!(
                    "setting block {s} recorded no counts"
                )));
            }
            for (dst, &c) in p[s * d * d..(s + 1) * d * d].iter_mut().zip(block) {
                *dst = c as f64 / total as f64;
            }
        }
        let mut t = Self::new(d, m_a, m_b, p)?;
        t.counts = Some(counts);
        t.shots = shots;
        Ok(t)
    }

    /// Flat distribution `1 / d^2` in every setting.
    pub fn uniform(d: usize, m_a: usize, m_b: usize) -> Self {
        Self {
            d,
            m_a,
            m_b,
            p: vec![1.0 / (d * d) as f64; d * d * m_a * m_b],
            counts: None,
            shots: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let (d, m_a, m_b) = (self.d, self.m_a, self.m_b);
        if d == 0 || m_a == 0 || m_b == 0 {
            return Err(Error::InvalidTable("empty table".into()));
        }
        if self.p.len() != d * d * m_a * m_b {
            return Err(Error::InvalidTable(format!(
                "expected {} probabilities, found {}",
                d * d * m_a * m_b,
                self.p.len()
            )));
        }
        if self.p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidTable(
                "negative or non-finite probability".into(),
            ));
        }
        for x in 0..m_a {
            for y in 0..m_b {
                let s: f64 = self.setting(x, y).iter().sum();
                if (s - 1.0).abs() > TOL.distribution {
                    return Err(Error::InvalidTable(format!(
                        "setting ({x}, {y}) sums to {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn settings(&self) -> (usize, usize) {
        (self.m_a, self.m_b)
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    fn offset(&self, x: usize, y: usize) -> usize {
        (x * self.m_b + y) * self.d * self.d
    }

    /// `p(ab|xy)`.
    #[inline]
    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.offset(x, y) + a * self.d + b]
    }

    /// The `d x d` block of setting `(x, y)`, row `a`, column `b`.
    pub fn setting(&self, x: usize, y: usize) -> &[f64] {
        let o = self.offset(x, y);
        &self.p[o..o + self.d * self.d]
    }

    pub fn has_setting(&self, x: usize, y: usize) -> bool {
        x < self.m_a && y < self.m_b
    }

    /// Alice's marginal `p(a|x)` computed in setting `(x, y)`.
    pub fn marginal_a(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.d)
            .map(|a| (0..self.d).map(|b| self.p(a, b, x, y)).sum())
            .collect()
    }

    pub fn marginal_b(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.d)
            .map(|b| (0..self.d).map(|a| self.p(a, b, x, y)).sum())
            .collect()
    }

    /// Largest deviation of either party's marginal across the other's
    /// settings.
    pub fn signaling_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.m_a {
            let base = self.marginal_a(x, 0);
            for y in 1..self.m_b {
                for (u, v) in base.iter().zip(self.marginal_a(x, y)) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        for y in 0..self.m_b {
            let base = self.marginal_b(0, y);
            for x in 1..self.m_a {
                for (u, v) in base.iter().zip(self.marginal_b(x, y)) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        worst
    }

    /// Largest marginal discrepancy in units of its binomial standard error.
    /// Only meaningful for count-based tables.
    pub fn signaling_z_score(&self) -> Result<f64> {
        let counts = self.counts.as_ref().ok_or(Error::MissingCounts)?;
        let d = self.d;
        let total = |x: usize, y: usize| -> f64 {
            let o = self.offset(x, y);
            counts[o..o + d * d].iter().sum::<u64>() as f64
        };
        let z = |p1: f64, n1: f64, p2: f64, n2: f64| -> f64 {
            let var = p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2;
            if var <= 0.0 {
                0.0
            } else {
                (p1 - p2).abs() / var.sqrt()
            }
        };
        let mut worst: f64 = 0.0;
        for x in 0..self.m_a {
            for y in 1..self.m_b {
                let (m0, m1) = (self.marginal_a(x, 0), self.marginal_a(x, y));
                for a in 0..d {
                    worst = worst.max(z(m0[a], total(x, 0), m1[a], total(x, y)));
                }
            }
        }
        for y in 0..self.m_b {
            for x in 1..self.m_a {
                let (m0, m1) = (self.marginal_b(0, y), self.marginal_b(x, y));
                for b in 0..d {
                    worst = worst.max(z(m0[b], total(0, y), m1[b], total(x, y)));
                }
            }
        }
        Ok(worst)
    }

    /// `v * self + (1 - v) * other`.
    pub fn mix(&self, v: f64, other: &CorrelationTable) -> Result<Self> {
        if (self.d, self.m_a, self.m_b) != (other.d, other.m_a, other.m_b) {
            return Err(Error::DimMismatch("tables differ in shape".into()));
        }
        Self::new(
            self.d,
            self.m_a,
            self.m_b,
            self.p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| v * a + (1.0 - v) * b)
                .collect(),
        )
    }

    /// Writes `x,y,a,b,p,count` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        wr.write_record(["x", "y", "a", "b", "p", "count"])
            .map_err(io)?;
        for x in 0..self.m_a {
            for y in 0..self.m_b {
                for a in 0..self.d {
                    for b in 0..self.d {
                        let i = self.offset(x, y) + a * self.d + b;
                        let count = self
                            .counts
                            .as_ref()
                            .map(|c| c[i].to_string())
                            .unwrap_or_default();
                        wr.write_record([
                            x.to_string(),
                            y.to_string(),
                            a.to_string(),
                            b.to_string(),
                            format!("{:.17e}", self.p[i]),
                            count,
                        ])
                        .map_err(io)?;
                    }
                }
            }
        }
        wr.flush()
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))
    }

    pub(crate) fn with_counts(mut self, counts: Vec<u64>, shots: u64) -> Self {
        self.counts = Some(counts);
        self.shots = shots;
        self
    }
}

/// Serialized layout; `p` and `counts` are flattened with `a` slowest and
/// `y` fastest.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    d: usize,
    #[serde(rename = "mA")]
    m_a: usize,
    #[serde(rename = "mB")]
    m_b: usize,
    p: Vec<f64>,
    #[serde(default)]
    counts: Option<Vec<u64>>,
    #[serde(default)]
    shots: u64,
}

impl CorrelationTable {
    fn json_index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((a * self.d + b) * self.m_a + x) * self.m_b + y
    }
}

impl Serialize for CorrelationTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.p.len();
        let mut p = vec![0.0; n];
        let mut counts = self.counts.as_ref().map(|_| vec![0u64; n]);
        for x in 0..self.m_a {
            for y in 0..self.m_b {
                for a in 0..self.d {
                    for b in 0..self.d {
                        let src = self.offset(x, y) + a * self.d + b;
                        let dst = self.json_index(a, b, x, y);
                        p[dst] = self.p[src];
                        if let (Some(c), Some(raw)) = (counts.as_mut(), self.counts.as_ref()) {
                            c[dst] = raw[src];
                        }
                    }
                }
            }
        }
        TableJson {
            d: self.d,
            m_a: self.m_a,
            m_b: self.m_b,
            p,
            counts,
            shots: self.shots,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CorrelationTable {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = TableJson::deserialize(de)?;
        let n = j.d * j.d * j.m_a * j.m_b;
        if j.p.len() != n || j.counts.as_ref().is_some_and(|c| c.len() != n) {
            return Err(D::Error::custom("table arrays have wrong length"));
        }
        let shape = CorrelationTable::uniform(j.d, j.m_a, j.m_b);
        let mut p = vec![0.0; n];
        let mut counts = j.counts.as_ref().map(|_| vec![0u64; n]);
        for x in 0..j.m_a {
            for y in 0..j.m_b {
                for a in 0..j.d {
                    for b in 0..j.d {
                        let dst = shape.offset(x, y) + a * j.d + b;
                        let src = shape.json_index(a, b, x, y);
                        p[dst] = j.p[src];
                        if let (Some(c), Some(raw)) = (counts.as_mut(), j.counts.as_ref()) {
                            c[dst] = raw[src];
                        }
                    }
                }
            }
        }
        let t = CorrelationTable::new(j.d, j.m_a, j.m_b, p).map_err(D::Error::custom)?;
        Ok(match counts {
            Some(c) => t.with_counts(c, j.shots),
            None => t,
        })
    }
}

fn check_bases(dim: usize, alice: &[MeasurementBasis], bob: &[MeasurementBasis]) -> Result<usize> {
    let d = alice
        .first()
        .ok_or_else(|| Error::InvalidInput("no Alice settings".into()))?
        .dim();
    if bob.is_empty() {
        return Err(Error::InvalidInput("no Bob settings".into()));
    }
    if alice.iter().chain(bob).any(|b| b.dim() != d) || d * d != dim {
        return Err(Error::DimMismatch(format!(
            "state of dim {dim} needs local bases of dim {}",
            (dim as f64).sqrt()
        )));
    }
    Ok(d)
}

fn finish(d: usize, m_a: usize, m_b: usize, mut p: Vec<f64>) -> Result<CorrelationTable> {
    for block in p.chunks_mut(d * d) {
        for v in block.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s: f64 = block.iter().sum();
        for v in block.iter_mut() {
            *v /= s;
        }
    }
    CorrelationTable::new(d, m_a, m_b, p)
}

/// Exact Born-rule table `Tr[rho (M_a|x (x) M_b|y)]`.
pub fn born_probabilities(
    rho: &DensityMatrix,
    alice: &[MeasurementBasis],
    bob: &[MeasurementBasis],
) -> Result<CorrelationTable> {
    let d = check_bases(rho.dim(), alice, bob)?;
    let mut p = Vec::with_capacity(d * d * alice.len() * bob.len());
    let ua: Vec<CMatrix> = alice.iter().map(|b| b.as_unitary()).collect();
    let ub: Vec<CMatrix> = bob.iter().map(|b| b.as_unitary()).collect();
    for a in &ua {
        for b in &ub {
            let u = kron(a, b);
            let m = u.adjoint() * rho.matrix() * &u;
            p.extend((0..d * d).map(|i| m[(i, i)].re));
        }
    }
    finish(d, alice.len(), bob.len(), p)
}

/// Born-rule table for a pure state; avoids forming the density matrix.
pub fn born_probabilities_pure(
    psi: &PureState,
    alice: &[MeasurementBasis],
    bob: &[MeasurementBasis],
) -> Result<CorrelationTable> {
    let d = check_bases(psi.dim(), alice, bob)?;
    // Amplitudes as a d x d matrix Psi[i, j] = <ij|psi>; then
    // <a b|psi> = (A^dagger Psi conj(B))[a, b].
    let v = psi.amplitudes();
    let psi_m = CMatrix::from_fn(d, d, |i, j| v[i * d + j]);
    let mut p = Vec::with_capacity(d * d * alice.len() * bob.len());
    for a in alice {
        let left = a.as_unitary().adjoint() * &psi_m;
        for b in bob {
            let amp = &left * b.as_unitary().conjugate();
            for i in 0..d {
                for j in 0..d {
                    p.push(amp[(i, j)].norm_sqr());
                }
            }
        }
    }
    finish(d, alice.len(), bob.len(), p)
}

/// Two-dimensional Fourier component of one setting block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlator {
    pub k: usize,
    pub l: usize,
    pub value: C64,
}

/// `<A_x^k B_y^l> = sum_ab omega^(ak + bl) p(ab|xy)`, `omega = e^(2 pi i/d)`.
pub fn generalized_correlator(
    table: &CorrelationTable,
    x: usize,
    y: usize,
    k: usize,
    l: usize,
) -> Result<Correlator> {
    let d = table.d();
    if k >= d || l >= d {
        return Err(Error::InvalidIndex(format!(
            "powers ({k}, {l}) outside 0..{d}"
        )));
    }
    if !table.has_setting(x, y) {
        return Err(Error::InvalidIndex(format!(
            "setting ({x}, {y}) not in table"
        )));
    }
    let block = table.setting(x, y);
    let mut value = C64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            let phase = TAU * ((a * k + b * l) % d) as f64 / d as f64;
            value += cis(phase) * block[a * d + b];
        }
    }
    Ok(Correlator { k, l, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::maximally_entangled;
    use proptest::prelude::*;

    #[test]
    fn computational_perfect_correlation() {
        for d in 2..6 {
            let c = vec![MeasurementBasis::computational(d)];
            let t = born_probabilities(&maximally_entangled(d).density(), &c, &c).unwrap();
            for a in 0..d {
                for b in 0..d {
                    let expect = if a == b { 1.0 / d as f64 } else { 0.0 };
                    assert!((t.p(a, b, 0, 0) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn fourier_anti_correlation() {
        let d = 5;
        let f = vec![MeasurementBasis::fourier(d, 1)];
        let psi = maximally_entangled(d);
        let t = born_probabilities(&psi.density(), &f, &f).unwrap();
        let tp = born_probabilities_pure(&psi, &f, &f).unwrap();
        for a in 0..d {
            for b in 0..d {
                let expect = if (a + b) % d == 0 {
                    1.0 / d as f64
                } else {
                    0.0
                };
                assert!((t.p(a, b, 0, 0) - expect).abs() < 1e-14);
                assert!((tp.p(a, b, 0, 0) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn correlator_basics() {
        let d = 3;
        let bases = vec![
            MeasurementBasis::fourier(d, 1),
            MeasurementBasis::computational(d),
        ];
        let t = born_probabilities_pure(&maximally_entangled(d), &bases, &bases).unwrap();
        assert!(
            (generalized_correlator(&t, 0, 1, 0, 0).unwrap().value - C64::new(1.0, 0.0)).norm()
                < 1e-15
        );
        for k in 1..d {
            for l in 1..d {
                let c = generalized_correlator(&t, 1, 0, k, l).unwrap().value;
                let cc = generalized_correlator(&t, 1, 0, d - k, d - l)
                    .unwrap()
                    .value;
                assert!((c - cc.conj()).norm() < 1e-14);
                assert!(c.norm() <= 1.0 + 1e-9);
            }
        }
        assert!(matches!(
            generalized_correlator(&t, 0, 0, 3, 0),
            Err(Error::InvalidIndex(_))
        ));
    }

    #[test]
    fn json_and_csv() {
        let d = 2;
        let b = vec![
            MeasurementBasis::computational(d),
            MeasurementBasis::fourier(d, 1),
        ];
        let t = born_probabilities_pure(&maximally_entangled(d), &b, &b).unwrap();
        let t = t.clone().with_counts((0..16).collect(), 10);
        let j = serde_json::to_value(&t).unwrap();
        assert_eq!(j["mA"], 2);
        // a = 0, b = 0, x = 0, y = 1 sits at flat index 1.
        assert_eq!(j["p"][1].as_f64().unwrap(), t.p(0, 0, 0, 1));
        let back: CorrelationTable = serde_json::from_value(j).unwrap();
        assert_eq!(back, t);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x,y,a,b,p,count\n0,0,0,0,"));
        assert_eq!(text.lines().count(), 17);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(CorrelationTable::new(2, 1, 1, vec![0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(CorrelationTable::new(2, 1, 1, vec![0.5, 0.5]).is_err());
        assert!(CorrelationTable::new(2, 1, 1, vec![1.5, -0.5, 0.0, 0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn exact_tables_are_non_signaling(seed in any::<u64>(), d in 2usize..5) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = crate::linalg::haar_unitary(d * d, &mut rng);
            let v: crate::linalg::CVector = u.column(0).into_owned();
            let rho = crate::state::make_pure_state(&v).unwrap().density().werner(0.7);
            let bases: Vec<_> = (0..3)
                .map(|_| MeasurementBasis::from_unitary(&crate::linalg::haar_unitary(d, &mut rng)).unwrap())
                .collect();
            let t = born_probabilities(&rho, &bases, &bases[..2]).unwrap();
            prop_assert!(t.signaling_deviation() < 1e-9);
            for x in 0..3 {
                for y in 0..2 {
                    for k in 0..d {
                        for l in 0..d {
                            prop_assert!(generalized_correlator(&t, x, y, k, l).unwrap().value.norm() <= 1.0 + 1e-9);
                        }
                    }
                }
            }
        }
    }
}
