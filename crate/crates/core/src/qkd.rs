//! Device-dependent BB84-type key rates for d-dimensional encodings with two
//! mutually unbiased bases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attack {
    Individual,
    Coherent,
}

impl std::str::FromStr for Attack {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(Attack::Individual),
            "coherent" => Ok(Attack::Coherent),
            other => Err(Error::InvalidInput(format!("unknown attack {other:?}"))),
        }
    }
}

impl std::fmt::Display for Attack {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Attack::Individual => "individual",
            Attack::Coherent => "coherent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub d: usize,
    #[serde(rename = "F")]
    pub fidelity: f64,
    pub qber: f64,
    #[serde(rename = "I_AB")]
    pub i_ab: f64,
    #[serde(rename = "I_AE")]
    pub i_ae: f64,
    #[serde(rename = "R_sk")]
    pub r_sk: f64,
    pub attack: Attack,
}

/// Sifting factor for two bases.
pub const SIFTING: f64 = 0.5;

fn check(f: f64, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("need d >= 2, got {d}")));
    }
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidInput(format!("fidelity must lie in (0, 1], got {f}")));
    }
    Ok(())
}

/// Mutual information of a d-ary symmetric channel with success probability `f`.
fn symmetric_information(f: f64, d: usize) -> f64 {
    let dd = d as f64;
    let mut i = dd.log2();
    if f > 0.0 {
        i += f * f.log2();
    }
    if f < 1.0 {
        i += (1.0 - f) * ((1.0 - f) / (dd - 1.0)).log2();
    }
    i
}

/// `I_AB = log2 d + F log2 F + (1 - F) log2((1 - F)/(d - 1))`.
pub fn mutual_information(f: f64, d: usize) -> Result<f64> {
    check(f, d)?;
    Ok(symmetric_information(f, d))
}

/// Eve's fidelity under the optimal two-basis cloner tuned to Bob's fidelity `f`.
pub fn eve_fidelity(f: f64, d: usize) -> Result<f64> {
    check(f, d)?;
    let dd = d as f64;
    let g = 1.0 - f;
    Ok(f / dd + (dd - 1.0) * g / dd + 2.0 / dd * ((dd - 1.0) * f * g).sqrt())
}

pub fn key_rate(f: f64, d: usize, attack: Attack) -> Result<KeyRateResult> {
    let i_ab = mutual_information(f, d)?;
    let i_ae = match attack {
        Attack::Individual => {
            // Below the cloner's range Eve's fidelity saturates at Bob's.
            let fe = eve_fidelity(f, d)?;
            if f < 1.0 / d as f64 {
                i_ab
            } else {
                symmetric_information(fe, d)
            }
        }
        Attack::Coherent => (d as f64).log2() - i_ab,
    };
    Ok(KeyRateResult {
        d,
        fidelity: f,
        qber: 1.0 - f,
        i_ab,
        i_ae,
        r_sk: (SIFTING * (i_ab - i_ae)).max(0.0),
        attack,
    })
}

/// QBER (in percent) at which the key rate vanishes.
pub fn qber_threshold(d: usize, attack: Attack) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("need d >= 2, got {d}")));
    }
    let gap = |q: f64| -> Result<f64> {
        let r = key_rate(1.0 - q, d, attack)?;
        Ok(r.i_ab - r.i_ae)
    };
    // The rate is positive at q = 0 and negative at q = 1 - 1/d.
    let (mut lo, mut hi) = (0.0, 1.0 - 1.0 / d as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(100.0 * 0.5 * (lo + hi))
}
