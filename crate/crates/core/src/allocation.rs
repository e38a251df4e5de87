//! Initial hint budgets and initial hint sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PieceRecord, Problem, RegistryEntry};
use crate::selection::THRESHOLD_SLACK;

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("invalid allocation parameters: {0}")]
    Params(String),
    #[error("piece {0} has no normalized value")]
    Unscored(usize),
    #[error("success count {c} exceeds m = {m}")]
    CountOutOfRange { c: u32, m: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationParams {
    pub k_max: usize,
    /// Upper edge of the hard tier, as a fraction of `m`.
    pub beta1: f64,
    /// Upper edge of the medium tier, as a fraction of `m`.
    pub beta2: f64,
    pub m: u32,
}

impl Default for AllocationParams {
    fn default() -> Self {
        AllocationParams {
            k_max: 3,
            beta1: 0.15,
            beta2: 0.35,
            m: 16,
        }
    }
}

impl AllocationParams {
    pub fn validate(&self) -> Result<(), AllocationError> {
        if !(0.0..=1.0).contains(&self.beta1) || !(0.0..=1.0).contains(&self.beta2) {
            return Err(AllocationError::Params("betas must lie in [0, 1]".into()));
        }
        if self.beta1 > self.beta2 {
            return Err(AllocationError::Params(
                "beta1 must not exceed beta2".into(),
            ));
        }
        if self.m == 0 {
            return Err(AllocationError::Params("m must be positive".into()));
        }
        Ok(())
    }
}

/// Three-tier budget: `k_max` for `c <= beta1*m`, `floor(k_max/2)` for
/// `c <= beta2*m`, otherwise 0.
pub fn allocate_budget(c: u32, params: &AllocationParams) -> Result<usize, AllocationError> {
    params.validate()?;
    if c > params.m {
        return Err(AllocationError::CountOutOfRange { c, m: params.m });
    }
    let m = f64::from(params.m);
    let c = f64::from(c);
    Ok(if c <= params.beta1 * m + THRESHOLD_SLACK {
        params.k_max
    } else if c <= params.beta2 * m + THRESHOLD_SLACK {
        params.k_max / 2
    } else {
        0
    })
}

/// The `k0` pieces with the largest normalized value, returned in solution
/// order. Among equal values the earlier piece wins. `k0` larger than the
/// piece count is clamped.
pub fn select_hints(pieces: &[PieceRecord], k0: usize) -> Result<Vec<usize>, AllocationError> {
    let values = piece_values(pieces)?;
    if k0 > pieces.len() {
        log::warn!("hint budget {k0} exceeds {} pieces; clamping", pieces.len());
    }
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    // stable sort keeps earlier positions first among ties
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut chosen: Vec<usize> = order.into_iter().take(k0.min(pieces.len())).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Like [`select_hints`] but picks the lowest-valued pieces; among ties the
/// later piece goes first. Used to build deliberately bad hint sets.
pub fn select_worst(pieces: &[PieceRecord], k: usize) -> Result<Vec<usize>, AllocationError> {
    let values = piece_values(pieces)?;
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)));
    let mut chosen: Vec<usize> = order.into_iter().take(k.min(pieces.len())).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

fn piece_values(pieces: &[PieceRecord]) -> Result<Vec<f64>, AllocationError> {
    pieces
        .iter()
        .map(|p| p.norm_value.ok_or(AllocationError::Unscored(p.position)))
        .collect()
}

/// Builds the registry entry for a scored problem.
pub fn build_entry(
    problem: &Problem,
    c_weak: u32,
    c_train: u32,
    params: &AllocationParams,
) -> Result<RegistryEntry, AllocationError> {
    let budget = allocate_budget(c_train, params)?;
    let initial_hints = select_hints(&problem.pieces, budget)?;
    Ok(RegistryEntry {
        problem_id: problem.id.clone(),
        pieces: problem.pieces.clone(),
        c_weak,
        c_train,
        k0: initial_hints.len(),
        initial_hints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pieces(values: &[f64]) -> Vec<PieceRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &d)| PieceRecord {
                position: i,
                text: format!("p{i}"),
                raw_value: 3,
                norm_value: Some(d),
            })
            .collect()
    }

    #[test]
    fn default_tiers() {
        let params = AllocationParams::default();
        assert_eq!(allocate_budget(2, &params).unwrap(), 3);
        assert_eq!(allocate_budget(4, &params).unwrap(), 1);
        assert_eq!(allocate_budget(6, &params).unwrap(), 0);
        assert_eq!(allocate_budget(0, &params).unwrap(), 3);
        assert_eq!(allocate_budget(16, &params).unwrap(), 0);
        assert!(allocate_budget(17, &params).is_err());
    }

    #[test]
    fn medium_tier_floors_odd_budgets() {
        let params = AllocationParams {
            k_max: 1,
            ..Default::default()
        };
        assert_eq!(allocate_budget(4, &params).unwrap(), 0);
        let params = AllocationParams {
            k_max: 5,
            ..Default::default()
        };
        assert_eq!(allocate_budget(4, &params).unwrap(), 2);
    }

    #[test]
    fn case_study_top_three() {
        let d = [0.25, 0.25, 0.25, 0.94, 0.56, 0.75, 0.0];
        assert_eq!(select_hints(&pieces(&d), 3).unwrap(), vec![3, 4, 5]);
    }

    #[test]
    fn zero_budget_and_clamping() {
        let p = pieces(&[0.1, 0.9]);
        assert!(select_hints(&p, 0).unwrap().is_empty());
        assert_eq!(select_hints(&p, 5).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ties_prefer_earlier_pieces() {
        let p = pieces(&[0.5, 1.0, 0.5, 0.5]);
        assert_eq!(select_hints(&p, 2).unwrap(), vec![0, 1]);
        assert_eq!(select_worst(&p, 2).unwrap(), vec![2, 3]);
    }

    #[test]
    fn unscored_pieces_rejected() {
        let mut p = pieces(&[0.5, 1.0]);
        p[1].norm_value = None;
        assert_eq!(select_hints(&p, 1), Err(AllocationError::Unscored(1)));
    }

    #[test]
    fn entry_k0_is_clamped() {
        let problem = Problem {
            id: "q".into(),
            statement: "s".into(),
            answer: "a".into(),
            pieces: pieces(&[0.0, 1.0]),
            env_spec: None,
        };
        let e = build_entry(&problem, 1, 0, &AllocationParams::default()).unwrap();
        assert_eq!(e.k0, 2);
        assert_eq!(e.initial_hints, vec![0, 1]);
        e.validate(16).unwrap();
    }
}
