//! The two readings of a depolarizing parameter `p` as a Werner state.
//!
//! * `Paper`: fidelity parameter `F = 1 − p`, state `F|Φ+⟩⟨Φ+| + (1 − F) I/4`,
//!   closed-form entanglement `1 − H₂((1 + F)/2)`.
//! * `Oracle`: the state the depolarizing channel actually produces on half of
//!   `Φ+`, Bell weights `(1 − p, p/3, p/3, p/3)`, entanglement `1 − H₂(1 − p)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entanglement::{er_bell_diagonal, er_werner, WernerBridge};
use crate::error::{Error, Result};
use crate::qstate::BellDiagonalState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Paper,
    Oracle,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::Paper, Convention::Oracle];

    pub fn pair_state(self, p: f64) -> Result<BellDiagonalState> {
        match self {
            Convention::Paper => BellDiagonalState::werner_paper(1.0 - p),
            Convention::Oracle => BellDiagonalState::werner_channel(p),
        }
    }

    /// Per-pair E_R of the pair produced by parameter `p`, using this
    /// convention's closed form.
    pub fn pair_er(self, p: f64) -> Result<f64> {
        match self {
            Convention::Paper => er_werner(1.0 - p, WernerBridge::OnePlusFOverTwo),
            Convention::Oracle => Ok(er_bell_diagonal(&BellDiagonalState::werner_channel(p)?)?.value),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Paper => "paper",
            Convention::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Convention::Paper),
            "oracle" => Ok(Convention::Oracle),
            other => Err(Error::Config(format!("unknown convention `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readings_at_p_017() {
        let paper = Convention::Paper.pair_er(0.17).unwrap();
        assert!((paper - 0.5804).abs() < 1e-4);
        let oracle = Convention::Oracle.pair_er(0.17).unwrap();
        let h = -(0.83f64 * 0.83f64.log2() + 0.17 * 0.17f64.log2());
        assert!((oracle - (1.0 - h)).abs() < 1e-12);
        assert!((Convention::Paper.pair_state(0.2).unwrap().fidelity() - 0.85).abs() < 1e-15);
        assert!((Convention::Oracle.pair_state(0.2).unwrap().fidelity() - 0.8).abs() < 1e-15);
        assert!("both".parse::<Convention>().is_err());
    }
}
