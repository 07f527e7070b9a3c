use std::fmt;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported norm selector {0}")]
    UnsupportedNorm(String),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("eigenvector matrix condition number {cond:.3e} exceeds limit; matrix treated as non-diagonalizable")]
    NonDiagonalizable { cond: f64 },
    #[error("real-part gap {gap:.3e} lies inside the ambiguity band ({lo:.3e}, {hi:.3e})")]
    AmbiguousGrouping { gap: f64, lo: f64, hi: f64 },
    #[error("spectral block {index} is not simple single real or simple single complex")]
    UnsupportedBlock { index: usize },
    #[error("projection onto the left eigenvector vanishes (|w u| = {modulus:.3e})")]
    ZeroProjection { modulus: f64 },
    #[error("f_VW(., x) is constant; extremal angles are undefined")]
    DegenerateConstant,
    #[error("x = {0} is not a multiple of pi")]
    NotMultipleOfPi(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Vector and induced matrix norm selector.
///
/// Serialized as the number `1` or `2`, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormP {
    One,
    Two,
    Inf,
}

impl NormP {
    /// The dual exponent q with 1/p + 1/q = 1.
    pub fn dual(self) -> NormP {
        match self {
            NormP::One => NormP::Inf,
            NormP::Two => NormP::Two,
            NormP::Inf => NormP::One,
        }
    }
}

impl fmt::Display for NormP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormP::One => "1",
            NormP::Two => "2",
            NormP::Inf => "inf",
        })
    }
}

impl std::str::FromStr for NormP {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(NormP::One),
            "2" => Ok(NormP::Two),
            "inf" | "Inf" | "INF" | "infinity" => Ok(NormP::Inf),
            other => Err(Error::UnsupportedNorm(other.to_string())),
        }
    }
}

impl serde::Serialize for NormP {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormP::One => s.serialize_u8(1),
            NormP::Two => s.serialize_u8(2),
            NormP::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for NormP {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(x) if x == 1.0 => "1".to_string(),
            Raw::Num(x) if x == 2.0 => "2".to_string(),
            Raw::Num(x) => x.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}
