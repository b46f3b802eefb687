//! Device-independent lower bounds on the local dimension.
//!
//! For a table `p(ab|xy)` and settings `(y, y', x)`,
//! `f = sum_{b,b'} (sum_a sqrt(p(ab|xy) p(ab'|xy')))^2` and any model without
//! shared randomness needs local dimension at least `1/f`.

use serde::{Deserialize, Serialize};

use crate::basis::{common_eigenbasis, MeasurementBasis};
use crate::correlations::{born_probabilities, CorrelationTable};
use crate::error::{Error, Result};
use crate::linalg::{pauli, CMatrix, CVector};
use crate::state::{entangled_state, maximally_entangled, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    #[serde(rename = "f")]
    pub f_value: f64,
    #[serde(rename = "D")]
    pub dimension_bound: f64,
    pub certified_dim: usize,
    /// `(y, y', x)` as passed in.
    #[serde(rename = "settings")]
    pub settings_used: (usize, usize, usize),
}

/// Evaluates the witness on table settings `y`, `y_prime` (Bob) and `x`
/// (Alice), all 0-based.
pub fn witness_bound(
    table: &CorrelationTable,
    y: usize,
    y_prime: usize,
    x: usize,
) -> Result<WitnessResult> {
    if !table.has_setting(x, y) || !table.has_setting(x, y_prime) {
        return Err(Error::InvalidIndex(format!(
            "settings (y={y}, y'={y_prime}, x={x}) not in table of shape {:?}",
            table.settings()
        )));
    }
    let d = table.d();
    let s1: Vec<f64> = table.setting(x, y).iter().map(|p| p.sqrt()).collect();
    let s2: Vec<f64> = table.setting(x, y_prime).iter().map(|p| p.sqrt()).collect();
    let mut f = 0.0;
    for b in 0..d {
        for b2 in 0..d {
            let inner: f64 = (0..d).map(|a| s1[a * d + b] * s2[a * d + b2]).sum();
            f += inner * inner;
        }
    }
    if !(f > 0.0) {
        return Err(Error::NumericalFailure("witness value vanished".into()));
    }
    let bound = 1.0 / f;
    Ok(WitnessResult {
        f_value: f,
        dimension_bound: bound,
        certified_dim: ((bound - 1e-9).ceil() as usize).max(1),
        settings_used: (y, y_prime, x),
    })
}

/// Smallest `f` (largest bound) over every setting triple of the table.
pub fn witness_best(table: &CorrelationTable) -> Result<WitnessResult> {
    let (m_a, m_b) = table.settings();
    let mut best: Option<WitnessResult> = None;
    for x in 0..m_a {
        for y in 0..m_b {
            for y2 in 0..m_b {
                let r = witness_bound(table, y, y2, x)?;
                if best.is_none_or(|b| r.f_value < b.f_value) {
                    best = Some(r);
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidTable("empty table".into()))
}

/// A nonlocal-game strategy: shared state, measurement per setting and the
/// signed answer string attached to every outcome.
#[derive(Debug, Clone)]
pub struct GameStrategy {
    pub state: PureState,
    /// Game setting labels (1-based) of the measured Alice settings.
    pub alice_labels: Vec<usize>,
    pub alice_bases: Vec<MeasurementBasis>,
    /// `alice_answers[s][a]` is the answer string of outcome `a`.
    pub alice_answers: Vec<Vec<Vec<i8>>>,
    pub bob_labels: Vec<usize>,
    pub bob_bases: Vec<MeasurementBasis>,
    pub bob_answers: Vec<Vec<Vec<i8>>>,
    /// Labels `(y, y', x)` used for the witness.
    pub witness_labels: (usize, usize, usize),
}

impl GameStrategy {
    pub fn local_dim(&self) -> usize {
        self.alice_bases[0].dim()
    }

    /// Replaces the shared state (e.g. by an embedded lower-rank state).
    pub fn with_state(mut self, state: PureState) -> Result<Self> {
        if state.dim() != self.state.dim() {
            return Err(Error::DimMismatch("state does not fit the strategy".into()));
        }
        self.state = state;
        Ok(self)
    }

    /// Exact table of `rho` under the strategy's measurements.
    pub fn table(&self, rho: &DensityMatrix) -> Result<CorrelationTable> {
        born_probabilities(rho, &self.alice_bases, &self.bob_bases)
    }

    pub fn ideal_table(&self) -> Result<CorrelationTable> {
        crate::correlations::born_probabilities_pure(
            &self.state,
            &self.alice_bases,
            &self.bob_bases,
        )
    }

    fn index(labels: &[usize], label: usize) -> Result<usize> {
        labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::InvalidIndex(format!("setting {label} not measured")))
    }

    /// Witness on a table produced by this strategy, at its default labels.
    pub fn witness(&self, table: &CorrelationTable) -> Result<WitnessResult> {
        let (y, y2, x) = self.witness_labels;
        let mut r = witness_bound(
            table,
            Self::index(&self.bob_labels, y)?,
            Self::index(&self.bob_labels, y2)?,
            Self::index(&self.alice_labels, x)?,
        )?;
        r.settings_used = self.witness_labels;
        Ok(r)
    }
}

fn observables(labels: &[&str]) -> Vec<CMatrix> {
    labels.iter().map(|s| pauli::string(s)).collect()
}

/// Basis plus answer strings from the joint eigenbasis of one line.
fn line(labels: &[&str]) -> Result<(MeasurementBasis, Vec<Vec<i8>>)> {
    let basis = common_eigenbasis(&observables(labels))?;
    let answers = basis
        .eigenvalues()
        .expect("eigenbasis carries eigenvalues")
        .iter()
        .map(|t| t.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect())
        .collect();
    Ok((basis, answers))
}

/// Signed Mermin-Peres square; Alice measures rows, Bob columns.
pub const MAGIC_SQUARE: [[&str; 3]; 3] =
    [["IZ", "ZI", "ZZ"], ["XI", "IX", "XX"], ["-XZ", "-ZX", "YY"]];

/// Lines 3 and 5 of the Mermin pentagram.
pub const PENTAGRAM_L3: [&str; 4] = ["ZII", "IZI", "IIZ", "ZZZ"];
pub const PENTAGRAM_L5: [&str; 4] = ["ZZZ", "ZXX", "XZX", "XXZ"];

fn square_row(r: usize) -> Result<(MeasurementBasis, Vec<Vec<i8>>)> {
    line(&MAGIC_SQUARE[r])
}

fn square_column(c: usize) -> Result<(MeasurementBasis, Vec<Vec<i8>>)> {
    line(&[MAGIC_SQUARE[0][c], MAGIC_SQUARE[1][c], MAGIC_SQUARE[2][c]])
}

/// Magic Square on `|psi+_4>` with all three settings per party.
pub fn magic_square_strategy() -> Result<GameStrategy> {
    let mut s = GameStrategy {
        state: maximally_entangled(4),
        alice_labels: vec![1, 2, 3],
        alice_bases: vec![],
        alice_answers: vec![],
        bob_labels: vec![1, 2, 3],
        bob_bases: vec![],
        bob_answers: vec![],
        witness_labels: (1, 2, 1),
    };
    for i in 0..3 {
        let (b, a) = square_row(i)?;
        s.alice_bases.push(b);
        s.alice_answers.push(a);
        let (b, a) = square_column(i)?;
        s.bob_bases.push(b);
        s.bob_answers.push(a);
    }
    Ok(s)
}

/// Pentagram on `|psi+_8>`, lines 3 and 5 for both parties.
pub fn magic_pentagram_strategy() -> Result<GameStrategy> {
    let (b3, a3) = line(&PENTAGRAM_L3)?;
    let (b5, a5) = line(&PENTAGRAM_L5)?;
    Ok(GameStrategy {
        state: maximally_entangled(8),
        alice_labels: vec![3, 5],
        alice_bases: vec![b3.clone(), b5.clone()],
        alice_answers: vec![a3.clone(), a5.clone()],
        bob_labels: vec![3, 5],
        bob_bases: vec![b3, b5],
        bob_answers: vec![a3, a5],
        witness_labels: (3, 5, 3),
    })
}

/// Two parallel Magic Squares on `|psi+_16>`. Setting `(i, i)` is encoded as
/// label `10 * i + i`.
pub fn two_copy_square_strategy() -> Result<GameStrategy> {
    let (r1, ra) = square_row(0)?;
    let (c1, ca) = square_column(0)?;
    let (c2, cb) = square_column(1)?;
    let pair = |u: &[Vec<i8>], v: &[Vec<i8>]| -> Vec<Vec<i8>> {
        u.iter()
            .flat_map(|p| v.iter().map(move |q| p.iter().chain(q).copied().collect()))
            .collect()
    };
    Ok(GameStrategy {
        state: maximally_entangled(16),
        alice_labels: vec![11],
        alice_bases: vec![r1.tensor(&r1)],
        alice_answers: vec![pair(&ra, &ra)],
        bob_labels: vec![11, 22],
        bob_bases: vec![c1.tensor(&c1), c2.tensor(&c2)],
        bob_answers: vec![pair(&ca, &ca), pair(&cb, &cb)],
        witness_labels: (11, 22, 11),
    })
}

/// `sum_{k<d} |kk> / sqrt d` inside `C^host (x) C^host`.
pub fn embed_state(d: usize, host: usize) -> Result<PureState> {
    if d == 0 || d > host {
        return Err(Error::InvalidDimension(format!(
            "cannot embed {d} in {host}"
        )));
    }
    let mut c = CVector::zeros(host);
    c.rows_mut(0, d).fill(crate::linalg::ONE);
    entangled_state(&c)
}

/// Strategy used to certify dimension `d` from game correlations: Magic
/// Square up to 4, Pentagram up to 8, two-copy square up to 16.
pub fn scenario_one_strategy(d: usize) -> Result<GameStrategy> {
    let base = match d {
        1..=4 => magic_square_strategy()?,
        5..=8 => magic_pentagram_strategy()?,
        9..=16 => two_copy_square_strategy()?,
        _ => {
            return Err(Error::InvalidDimension(format!(
                "scenario I supports d <= 16, got {d}"
            )))
        }
    };
    let host = base.local_dim();
    base.with_state(embed_state(d, host)?)
}

/// Exact scenario I table for `|psi^+_d>` (embedded) mixed with white noise.
pub fn scenario_one_table(d: usize, visibility: f64) -> Result<(GameStrategy, CorrelationTable)> {
    let s = scenario_one_strategy(d)?;
    let rho = s.state.density().werner(visibility);
    let t = s.table(&rho)?;
    Ok((s, t))
}

/// Both parties measure `|psi+_d>` (mixed with white noise) in the
/// computational basis.
pub fn scenario_two_table(d: usize, visibility: f64) -> Result<CorrelationTable> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be positive".into()));
    }
    let c = vec![MeasurementBasis::computational(d)];
    born_probabilities(&maximally_entangled(d).density().werner(visibility), &c, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn winning(s: &GameStrategy, x: usize, y: usize, a: usize, b: usize) -> bool {
        // Row x meets column y in cell (x, y).
        s.alice_answers[x][a][y] == s.bob_answers[y][b][x]
    }

    #[test]
    fn magic_square_correlations() {
        let s = magic_square_strategy().unwrap();
        let t = s.ideal_table().unwrap();
        let mut wins = 0;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..4 {
                    for b in 0..4 {
                        let p = t.p(a, b, x, y);
                        if winning(&s, x, y, a, b) {
                            assert!((p - 0.125).abs() < 1e-12);
                            wins += 1;
                        } else {
                            assert!(p.abs() < 1e-12);
                        }
                    }
                }
            }
        }
        assert_eq!(wins, 32);
        for answers in &s.alice_answers {
            assert!(answers
                .iter()
                .all(|a| a.iter().map(|&v| v as i32).product::<i32>() == 1));
        }
        for answers in &s.bob_answers {
            assert!(answers
                .iter()
                .all(|a| a.iter().map(|&v| v as i32).product::<i32>() == -1));
        }
        let w = s.witness(&t).unwrap();
        assert!((w.f_value - 0.25).abs() < 1e-12);
        assert_eq!(w.certified_dim, 4);
    }

    #[test]
    fn magic_square_bases_match_description() {
        let s = magic_square_strategy().unwrap();
        // Alice row 1 is the computational basis (up to order).
        for v in s.alice_bases[0].vectors() {
            assert_eq!(v.iter().filter(|z| z.norm() > 1e-12).count(), 1);
        }
    }

    #[test]
    fn pentagram() {
        let s = magic_pentagram_strategy().unwrap();
        let t = s.ideal_table().unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let expect = if a == b { 0.125 } else { 0.0 };
                assert!((t.p(a, b, 0, 0) - expect).abs() < 1e-12);
                // Lines 3 and 5 share ZZZ: last of line 3, first of line 5.
                let p = t.p(a, b, 0, 1);
                if s.alice_answers[0][a][3] == s.bob_answers[1][b][0] {
                    assert!((p - 1.0 / 32.0).abs() < 1e-12);
                } else {
                    assert!(p.abs() < 1e-12);
                }
            }
        }
        assert!(s.bob_answers[1]
            .iter()
            .all(|a| a.iter().map(|&v| v as i32).product::<i32>() == -1));
        let w = s.witness(&t).unwrap();
        assert!((w.f_value - 0.125).abs() < 1e-12);
        assert_eq!(w.certified_dim, 8);
    }

    #[test]
    fn two_copy() {
        let s = two_copy_square_strategy().unwrap();
        let w = s.witness(&s.ideal_table().unwrap()).unwrap();
        assert!((w.f_value - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(w.certified_dim, 16);
        for answers in &s.alice_answers[0] {
            assert_eq!(answers[..3].iter().map(|&v| v as i32).product::<i32>(), 1);
            assert_eq!(answers[3..].iter().map(|&v| v as i32).product::<i32>(), 1);
        }
    }

    #[test]
    fn embedding() {
        let e = embed_state(6, 8).unwrap();
        assert!((e.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert_eq!(e.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 6);
        assert_eq!(embed_state(8, 8).unwrap(), maximally_entangled(8));
        assert!(matches!(embed_state(9, 8), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn scenario_one_exact() {
        for d in 1..=16 {
            let (s, t) = scenario_one_table(d, 1.0).unwrap();
            assert_eq!(s.witness(&t).unwrap().certified_dim, d, "d={d}");
        }
    }

    #[test]
    fn scenario_one_werner_magic_square() {
        let (s, t) = scenario_one_table(4, 0.97).unwrap();
        let w = s.witness(&t).unwrap();
        assert!(
            (w.dimension_bound - 2.58848).abs() < 1e-4,
            "{}",
            w.dimension_bound
        );
        assert!(w.certified_dim <= 4);
    }

    #[test]
    fn scenario_two() {
        for d in 2..=15 {
            let w = witness_bound(&scenario_two_table(d, 1.0).unwrap(), 0, 0, 0).unwrap();
            assert!((w.f_value - 1.0 / d as f64).abs() < 1e-12);
            assert_eq!(w.certified_dim, d);
        }
    }

    #[test]
    fn missing_setting() {
        let t = scenario_two_table(3, 1.0).unwrap();
        assert!(matches!(
            witness_bound(&t, 1, 0, 0),
            Err(Error::InvalidIndex(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn sound_and_relabel_invariant(seed in any::<u64>(), d in 2usize..5, v in 0.0f64..1.0) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = crate::linalg::haar_unitary(d * d, &mut rng);
            let psi = crate::state::make_pure_state(&u.column(0).into_owned()).unwrap();
            let rho = psi.density().werner(v);
            let bases: Vec<_> = (0..2)
                .map(|_| MeasurementBasis::from_unitary(&crate::linalg::haar_unitary(d, &mut rng)).unwrap())
                .collect();
            let t = born_probabilities(&rho, &bases[..1], &bases).unwrap();
            let best = witness_best(&t).unwrap();
            prop_assert!(best.certified_dim <= d);
            for y in 0..2 {
                for y2 in 0..2 {
                    prop_assert!(witness_bound(&t, y, y2, 0).unwrap().f_value >= best.f_value - 1e-15);
                }
            }
            // Relabel Alice's outcomes by a cyclic shift and Bob's by reversal.
            let mut p = Vec::new();
            for x in 0..1 {
                for y in 0..2 {
                    for a in 0..d {
                        for b in 0..d {
                            p.push(t.p((a + 1) % d, d - 1 - b, x, y));
                        }
                    }
                }
            }
            let relabeled = CorrelationTable::new(d, 1, 2, p).unwrap();
            let w1 = witness_bound(&t, 0, 1, 0).unwrap().f_value;
            let w2 = witness_bound(&relabeled, 0, 1, 0).unwrap().f_value;
            prop_assert!((w1 - w2).abs() < 1e-12);
        }
    }
}
