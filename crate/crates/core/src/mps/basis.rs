use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Global measurement axis, applied to every site at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    /// Single-qubit unitary taking this basis to the computational one.
    ///
    /// X uses the Hadamard gate, Y uses `(1/√2)[[1, -i], [1, i]]`.
    pub fn rotation(self) -> [[C64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = C64::new(h, 0.0);
        let i = C64::new(0.0, h);
        match self {
            PauliBasis::Z => [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]],
            PauliBasis::X => [[r, r], [r, -r]],
            PauliBasis::Y => [[r, -i], [r, i]],
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliBasis::X => 'x',
            PauliBasis::Y => 'y',
            PauliBasis::Z => 'z',
        }
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for PauliBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(PauliBasis::X),
            "y" => Ok(PauliBasis::Y),
            "z" => Ok(PauliBasis::Z),
            other => Err(Error::InvalidArgument(format!("unknown basis '{other}'"))),
        }
    }
}
