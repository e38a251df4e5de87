//! Initial hint sets for the comparison strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::RegistryEntry;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BaselineMode {
    /// Value-ranked initial hints from the registry.
    PieceHint,
    NoHint,
    /// The first `ceil(f * n)` pieces.
    PrefixFraction(f64),
    /// `k0` pieces drawn uniformly at random.
    RandomPieces,
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineMode::PieceHint => f.write_str("piecehint"),
            BaselineMode::NoHint => f.write_str("no_hint"),
            BaselineMode::PrefixFraction(x) => write!(f, "prefix_fraction({x})"),
            BaselineMode::RandomPieces => f.write_str("random_pieces"),
        }
    }
}

impl FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "piecehint" => Ok(BaselineMode::PieceHint),
            "no_hint" => Ok(BaselineMode::NoHint),
            "random_pieces" => Ok(BaselineMode::RandomPieces),
            other => {
                let arg = other
                    .strip_prefix("prefix_fraction(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown baseline mode {other:?}"))?;
                let f: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| format!("cannot parse prefix fraction {arg:?}"))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(format!("prefix fraction {f} outside [0, 1]"));
                }
                Ok(BaselineMode::PrefixFraction(f))
            }
        }
    }
}

impl TryFrom<String> for BaselineMode {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BaselineMode> for String {
    fn from(m: BaselineMode) -> String {
        m.to_string()
    }
}

/// Starting hint positions (ascending) for `entry` under `mode`. Random
/// selection draws from the stream keyed by the run seed and problem id.
pub fn baseline_hint_selector(mode: BaselineMode, entry: &RegistryEntry, seed: u64) -> Vec<usize> {
    let n = entry.pieces.len();
    match mode {
        BaselineMode::PieceHint => entry.initial_hints.clone(),
        BaselineMode::NoHint => Vec::new(),
        BaselineMode::PrefixFraction(f) => {
            let count = ((f * n as f64) - 1e-9).ceil().max(0.0) as usize;
            (0..count.min(n)).collect()
        }
        BaselineMode::RandomPieces => {
            let mut rng = Stream::new(seed)
                .label("random-pieces")
                .label(&entry.problem_id)
                .rng();
            let mut picked = rand::seq::index::sample(&mut rng, n, entry.k0.min(n)).into_vec();
            picked.sort_unstable();
            picked
        }
    }
}
