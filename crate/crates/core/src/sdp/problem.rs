use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::linalg::{is_hermitian, CMatrix};

mod cmatrix_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Min,
    Max,
}

/// One `Re Tr[A X_block]` contribution to a linear functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub block: usize,
    #[serde(with = "cmatrix_json")]
    pub matrix: CMatrix,
}

impl Term {
    pub fn new(block: usize, matrix: CMatrix) -> Self {
        Self { block, matrix }
    }
}

/// `sum_terms Re Tr[A X] = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

/// `|| (f_k(X) - center_k)_k ||_2 <= radius`, each `f_k` a sum of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormBall {
    pub rows: Vec<Vec<Term>>,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Dense semidefinite program over Hermitian blocks `X_j ⪰ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    #[serde(with = "objective_json")]
    pub objective: Vec<Option<CMatrix>>,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub norm_ball: Option<NormBall>,
    #[serde(default)]
    pub sense: Sense,
}

mod objective_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[Option<CMatrix>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let j: Vec<Option<MatrixJson>> = v
            .iter()
            .map(|m| m.as_ref().map(MatrixJson::from_matrix))
            .collect();
        j.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Option<CMatrix>>, D::Error> {
        let j: Vec<Option<MatrixJson>> = Vec::deserialize(d)?;
        j.into_iter()
            .map(|m| {
                m.map(|m| m.to_matrix())
                    .transpose()
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

impl SdpProblem {
    /// Problem with the given blocks, zero objective and no constraints.
    pub fn new(blocks: Vec<usize>, sense: Sense) -> Self {
        let n = blocks.len();
        Self {
            blocks,
            objective: vec![None; n],
            constraints: Vec::new(),
            norm_ball: None,
            sense,
        }
    }

    pub fn set_objective(&mut self, block: usize, c: CMatrix) {
        self.objective[block] = Some(c);
    }

    pub fn add_constraint(&mut self, terms: Vec<Term>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::InvalidInput(
                "blocks must be non-empty with positive sizes".into(),
            ));
        }
        if self.objective.len() != self.blocks.len() {
            return Err(Error::DimMismatch(
                "one objective slot per block required".into(),
            ));
        }
        let check = |block: usize, m: &CMatrix| -> Result<()> {
            let n = *self
                .blocks
                .get(block)
                .ok_or_else(|| Error::InvalidIndex(format!("block {block}")))?;
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimMismatch(format!(
                    "matrix for block {block} is not {n}x{n}"
                )));
            }
            if !is_hermitian(m, 1e-12 * (1.0 + crate::linalg::max_abs(m))) {
                return Err(Error::InvalidInput(format!(
                    "matrix for block {block} is not Hermitian"
                )));
            }
            Ok(())
        };
        for (j, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                check(j, c)?;
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidInput("non-finite right-hand side".into()));
            }
            for t in &c.terms {
                check(t.block, &t.matrix)?;
            }
        }
        if let Some(ball) = &self.norm_ball {
            if ball.rows.len() != ball.center.len() || ball.rows.is_empty() {
                return Err(Error::DimMismatch(
                    "norm ball rows and center differ in length".into(),
                ));
            }
            if !(ball.radius >= 0.0) {
                return Err(Error::InvalidInput(
                    "norm ball radius must be non-negative".into(),
                ));
            }
            for t in ball.rows.iter().flatten() {
                check(t.block, &t.matrix)?;
            }
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }
}
