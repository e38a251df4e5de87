//! Hint curriculum: sampling counters, progressive withdrawal, prompt
//! rendering, checkpoints, and hint corruption for robustness runs.
//!
//! Every problem starts with its initial hint set. Each time a problem is
//! sampled its counter `s` goes up by one, and whenever `s` reaches a
//! multiple of `n_check` the live hint with the lowest normalized value is
//! dropped. A problem that starts with `k0` hints is therefore hint-free
//! after exactly `k0 * n_check` samples.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{select_hints, select_worst};
use crate::corpus::{read_lines, write_lines, CorpusError, Problem, RegistryEntry};
use crate::rng::Stream;
use crate::scoring::normalize_values;
use crate::simenv::{hint_text, parse_hint};

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("no registry entry for problem {0:?}")]
    UnknownProblem(String),
    #[error("state for {state:?} updated with the entry of {entry:?}")]
    EntryMismatch { state: String, entry: String },
    #[error("n_check must be at least 1")]
    ZeroPeriod,
    #[error("hint position {position} is not a piece of {problem_id:?}")]
    BadPosition { problem_id: String, position: usize },
    #[error("unknown corruption mode {0:?}")]
    UnknownMode(String),
    #[error("invalid corruption setting: {0}")]
    BadMode(String),
    #[error(transparent)]
    Io(#[from] CorpusError),
}

/// Problem statement with the live hints prepended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedPrompt {
    pub problem_id: String,
    /// Piece positions of the hints, ascending.
    pub hint_positions: Vec<usize>,
    pub hint_texts: Vec<String>,
    pub statement: String,
    pub rendered: String,
}

impl AugmentedPrompt {
    /// Builds a prompt from `(position, text)` hints in any order.
    pub fn new(problem_id: &str, statement: &str, mut hints: Vec<(usize, String)>) -> Self {
        hints.sort_by_key(|(pos, _)| *pos);
        let (hint_positions, hint_texts): (Vec<usize>, Vec<String>) = hints.into_iter().unzip();
        let rendered = render_prompt(&hint_texts, statement);
        AugmentedPrompt {
            problem_id: problem_id.to_string(),
            hint_positions,
            hint_texts,
            statement: statement.to_string(),
            rendered,
        }
    }

    /// The unaugmented prompt.
    pub fn bare(problem: &Problem) -> Self {
        AugmentedPrompt::new(&problem.id, &problem.statement, Vec::new())
    }
}

/// `"Hint:\n<h1>\n<h2>\n\nProblem:\n<statement>"`, or the bare statement when
/// there are no hints.
pub fn render_prompt(hint_texts: &[String], statement: &str) -> String {
    if hint_texts.is_empty() {
        return statement.to_string();
    }
    let mut out = String::from("Hint:\n");
    for text in hint_texts {
        out.push_str(text);
        out.push('\n');
    }
    out.push_str("\nProblem:\n");
    out.push_str(statement);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub problem_id: String,
    /// Number of times the problem has been sampled.
    pub s: u64,
    /// Live hint positions, ascending.
    pub live_hints: Vec<usize>,
    pub n_check: u64,
}

impl CurriculumState {
    pub fn new(
        problem_id: &str,
        initial_hints: &[usize],
        n_check: u64,
    ) -> Result<Self, CurriculumError> {
        if n_check == 0 {
            return Err(CurriculumError::ZeroPeriod);
        }
        let mut live_hints = initial_hints.to_vec();
        live_hints.sort_unstable();
        live_hints.dedup();
        Ok(CurriculumState {
            problem_id: problem_id.to_string(),
            s: 0,
            live_hints,
            n_check,
        })
    }

    /// Records one sample and withdraws the least valuable live hint when the
    /// counter reaches a multiple of `n_check`. Returns the withdrawn position.
    pub fn on_sample(&mut self, entry: &RegistryEntry) -> Result<Option<usize>, CurriculumError> {
        if entry.problem_id != self.problem_id {
            return Err(CurriculumError::EntryMismatch {
                state: self.problem_id.clone(),
                entry: entry.problem_id.clone(),
            });
        }
        self.s += 1;
        if !self.s.is_multiple_of(self.n_check) {
            return Ok(None);
        }
        let Some(victim) = least_valuable(&self.live_hints, entry) else {
            return Ok(None);
        };
        self.live_hints.retain(|&p| p != victim);
        Ok(Some(victim))
    }

    /// Records a sample without withdrawing anything (fixed-hint runs).
    pub fn count_only(&mut self) {
        self.s += 1;
    }
}

/// Live hint with the smallest normalized value; among ties, the one latest
/// in the solution.
pub fn least_valuable(live: &[usize], entry: &RegistryEntry) -> Option<usize> {
    live.iter()
        .copied()
        .min_by(|&a, &b| entry.value(a).total_cmp(&entry.value(b)).then(b.cmp(&a)))
}

/// Order in which `hints` would be withdrawn.
pub fn removal_order(hints: &[usize], entry: &RegistryEntry) -> Vec<usize> {
    let mut live = hints.to_vec();
    let mut order = Vec::with_capacity(live.len());
    while let Some(next) = least_valuable(&live, entry) {
        live.retain(|&p| p != next);
        order.push(next);
    }
    order
}

/// Renders the prompt for the state's live hints.
pub fn build_prompt(state: &CurriculumState, problem: &Problem) -> AugmentedPrompt {
    let hints = state
        .live_hints
        .iter()
        .filter_map(|&pos| problem.piece(pos).map(|p| (pos, p.text.clone())))
        .collect();
    AugmentedPrompt::new(&problem.id, &problem.statement, hints)
}

/// Checkpoint line for one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub problem_id: String,
    pub s: u64,
    pub live_hint_positions: Vec<usize>,
}

/// Owns every problem's curriculum state and applies updates in one place.
#[derive(Debug, Clone)]
pub struct Curriculum {
    states: BTreeMap<String, CurriculumState>,
    entries: HashMap<String, RegistryEntry>,
    withdrawal: bool,
}

impl Curriculum {
    /// `initial` picks each problem's starting hint set; normally
    /// `|e| e.initial_hints.clone()`.
    pub fn new(
        entries: &[RegistryEntry],
        n_check: u64,
        withdrawal: bool,
        mut initial: impl FnMut(&RegistryEntry) -> Vec<usize>,
    ) -> Result<Self, CurriculumError> {
        let mut states = BTreeMap::new();
        for entry in entries {
            let hints = initial(entry);
            if let Some(&bad) = hints.iter().find(|&&p| p >= entry.pieces.len()) {
                return Err(CurriculumError::BadPosition {
                    problem_id: entry.problem_id.clone(),
                    position: bad,
                });
            }
            states.insert(
                entry.problem_id.clone(),
                CurriculumState::new(&entry.problem_id, &hints, n_check)?,
            );
        }
        let entries = entries
            .iter()
            .map(|e| (e.problem_id.clone(), e.clone()))
            .collect();
        Ok(Curriculum {
            states,
            entries,
            withdrawal,
        })
    }

    pub fn state(&self, problem_id: &str) -> Option<&CurriculumState> {
        self.states.get(problem_id)
    }

    pub fn states(&self) -> impl Iterator<Item = &CurriculumState> {
        self.states.values()
    }

    pub fn on_sample(&mut self, problem_id: &str) -> Result<Option<usize>, CurriculumError> {
        let unknown = || CurriculumError::UnknownProblem(problem_id.to_string());
        let entry = self.entries.get(problem_id).ok_or_else(unknown)?;
        let state = self.states.get_mut(problem_id).ok_or_else(unknown)?;
        if self.withdrawal {
            state.on_sample(entry)
        } else {
            state.count_only();
            Ok(None)
        }
    }

    pub fn prompt(&self, problem: &Problem) -> Result<AugmentedPrompt, CurriculumError> {
        let state = self
            .states
            .get(&problem.id)
            .ok_or_else(|| CurriculumError::UnknownProblem(problem.id.clone()))?;
        Ok(build_prompt(state, problem))
    }

    pub fn mean_live_hints(&self) -> f64 {
        if self.states.is_empty() {
            return 0.0;
        }
        let total: usize = self.states.values().map(|s| s.live_hints.len()).sum();
        total as f64 / self.states.len() as f64
    }

    pub fn checkpoint(&self) -> Vec<CheckpointRecord> {
        self.states
            .values()
            .map(|s| CheckpointRecord {
                problem_id: s.problem_id.clone(),
                s: s.s,
                live_hint_positions: s.live_hints.clone(),
            })
            .collect()
    }

    pub fn restore(&mut self, records: &[CheckpointRecord]) -> Result<(), CurriculumError> {
        for record in records {
            let entry = self
                .entries
                .get(&record.problem_id)
                .ok_or_else(|| CurriculumError::UnknownProblem(record.problem_id.clone()))?;
            if let Some(&bad) = record
                .live_hint_positions
                .iter()
                .find(|&&p| p >= entry.pieces.len())
            {
                return Err(CurriculumError::BadPosition {
                    problem_id: record.problem_id.clone(),
                    position: bad,
                });
            }
            let state = self
                .states
                .get_mut(&record.problem_id)
                .ok_or_else(|| CurriculumError::UnknownProblem(record.problem_id.clone()))?;
            state.s = record.s;
            state.live_hints = record.live_hint_positions.clone();
            state.live_hints.sort_unstable();
        }
        Ok(())
    }
}

pub fn save_checkpoint(records: &[CheckpointRecord], path: &Path) -> Result<(), CurriculumError> {
    Ok(write_lines(path, records)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<CheckpointRecord>, CurriculumError> {
    Ok(read_lines(path)?)
}

/// Deliberate damage to a registry entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CorruptionMode {
    /// Shift a quarter of the piece boundaries so neighbouring texts bleed
    /// into each other.
    WrongBoundaries,
    /// Replace raw scores with uniform draws and reselect the hint set.
    RandomScores,
    /// Use the lowest-valued pieces as the hint set.
    WorstPieces,
    /// Garble this fraction of the initial hints.
    FractionCorrupt(f64),
    /// Rewrite every initial hint to contradict the solution.
    Contradictory,
}

/// Fraction of boundaries moved by [`CorruptionMode::WrongBoundaries`].
pub const WRONG_BOUNDARY_FRACTION: f64 = 0.25;

impl fmt::Display for CorruptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptionMode::WrongBoundaries => f.write_str("wrong_boundaries"),
            CorruptionMode::RandomScores => f.write_str("random_scores"),
            CorruptionMode::WorstPieces => f.write_str("worst_pieces"),
            CorruptionMode::FractionCorrupt(p) => write!(f, "fraction_corrupt({p})"),
            CorruptionMode::Contradictory => f.write_str("contradictory"),
        }
    }
}

impl FromStr for CorruptionMode {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "wrong_boundaries" => return Ok(CorruptionMode::WrongBoundaries),
            "random_scores" => return Ok(CorruptionMode::RandomScores),
            "worst_pieces" => return Ok(CorruptionMode::WorstPieces),
            "contradictory" => return Ok(CorruptionMode::Contradictory),
            _ => {}
        }
        let arg = s
            .strip_prefix("fraction_corrupt(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| CurriculumError::UnknownMode(s.to_string()))?;
        let p: f64 = arg
            .trim()
            .parse()
            .map_err(|_| CurriculumError::BadMode(format!("cannot parse fraction {arg:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(CurriculumError::BadMode(format!(
                "fraction {p} outside [0, 1]"
            )));
        }
        Ok(CorruptionMode::FractionCorrupt(p))
    }
}

impl TryFrom<String> for CorruptionMode {
    type Error = CurriculumError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CorruptionMode> for String {
    fn from(m: CorruptionMode) -> String {
        m.to_string()
    }
}

/// Returns a corrupted copy of `entry`; the original is left alone. The same
/// `(entry, mode, seed)` always gives the same result.
pub fn corrupt_hints(
    entry: &RegistryEntry,
    mode: CorruptionMode,
    seed: u64,
) -> Result<RegistryEntry, CurriculumError> {
    let mut rng = Stream::new(seed)
        .label("corrupt")
        .label(&mode.to_string())
        .label(&entry.problem_id)
        .rng();
    let mut out = entry.clone();
    let reselect = |e: &RegistryEntry, worst: bool| {
        let picked = if worst {
            select_worst(&e.pieces, e.k0)
        } else {
            select_hints(&e.pieces, e.k0)
        };
        picked.map_err(|err| CurriculumError::BadMode(err.to_string()))
    };
    match mode {
        CorruptionMode::WrongBoundaries => {
            let n = out.pieces.len();
            if n >= 2 {
                let moved = ((n - 1) as f64 * WRONG_BOUNDARY_FRACTION).ceil() as usize;
                let mut boundaries = rand::seq::index::sample(&mut rng, n - 1, moved).into_vec();
                boundaries.sort_unstable();
                for b in boundaries {
                    shift_boundary(&mut out, b, &mut rng);
                }
            }
        }
        CorruptionMode::RandomScores => {
            let raw: Vec<u8> = out.pieces.iter().map(|_| rng.gen_range(1..=5)).collect();
            for (piece, (r, d)) in out
                .pieces
                .iter_mut()
                .zip(raw.iter().zip(normalize_values(&raw)))
            {
                piece.raw_value = *r;
                piece.norm_value = Some(d);
            }
            out.initial_hints = reselect(&out, false)?;
        }
        CorruptionMode::WorstPieces => {
            out.initial_hints = reselect(&out, true)?;
        }
        CorruptionMode::FractionCorrupt(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(CurriculumError::BadMode(format!(
                    "fraction {p} outside [0, 1]"
                )));
            }
            let count = (p * out.initial_hints.len() as f64).round() as usize;
            let mut targets = out.initial_hints.clone();
            targets.shuffle(&mut rng);
            for &pos in targets.iter().take(count) {
                let garbled = garble(
                    &entry
                        .pieces
                        .iter()
                        .map(|p| p.text.as_str())
                        .collect::<Vec<_>>(),
                    pos,
                    &mut rng,
                );
                out.pieces[pos].text = garbled;
            }
        }
        CorruptionMode::Contradictory => {
            for &pos in &entry.initial_hints {
                out.pieces[pos].text = contradict(&entry.pieces[pos].text);
            }
        }
    }
    Ok(out)
}

/// Moves the boundary between pieces `b` and `b + 1` by at least one
/// character, keeping both pieces non-empty when possible.
fn shift_boundary<R: Rng>(entry: &mut RegistryEntry, b: usize, rng: &mut R) {
    let left: Vec<char> = entry.pieces[b].text.chars().collect();
    let right: Vec<char> = entry.pieces[b + 1].text.chars().collect();
    let (new_left, new_right): (String, String) = if right.len() >= 2 {
        let k = rng.gen_range(1..right.len());
        (
            left.iter().chain(&right[..k]).collect(),
            right[k..].iter().collect(),
        )
    } else if left.len() >= 2 {
        let k = rng.gen_range(1..left.len());
        (
            left[..left.len() - k].iter().collect(),
            left[left.len() - k..].iter().chain(&right).collect(),
        )
    } else {
        return;
    };
    entry.pieces[b].text = new_left;
    entry.pieces[b + 1].text = new_right;
}

/// Replaces a hint with the text of another piece, or reverses its words
/// when the solution has a single piece.
fn garble<R: Rng>(texts: &[&str], pos: usize, rng: &mut R) -> String {
    if texts.len() >= 2 {
        let mut other = rng.gen_range(0..texts.len() - 1);
        if other >= pos {
            other += 1;
        }
        texts[other].to_string()
    } else {
        texts[pos]
            .split_whitespace()
            .rev()
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn contradict(text: &str) -> String {
    match parse_hint(text) {
        Some((step, choice)) => {
            let wrong = if choice == 0 { 1 } else { choice - 1 };
            hint_text(step, wrong)
        }
        None => format!("It is false that: {text}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PieceRecord;

    /// Seven-step worked case with fixed normalized values.
    pub(crate) fn case_study_entry() -> RegistryEntry {
        let steps = [
            ("Express day scenario", 0.25),
            ("Express night scenario", 0.25),
            ("Compute differences", 0.25),
            ("Derive G=C", 0.94),
            ("Solve for C+R", 0.56),
            ("Express R+G", 0.75),
            ("State answer", 0.0),
        ];
        let pieces = steps
            .iter()
            .enumerate()
            .map(|(i, (text, d))| PieceRecord {
                position: i,
                text: text.to_string(),
                raw_value: 3,
                norm_value: Some(*d),
            })
            .collect();
        RegistryEntry {
            problem_id: "case".into(),
            pieces,
            c_weak: 0,
            c_train: 2,
            k0: 3,
            initial_hints: vec![3, 4, 5],
        }
    }

    fn case_problem(entry: &RegistryEntry) -> Problem {
        Problem {
            id: entry.problem_id.clone(),
            statement: "How many heads at night?".into(),
            answer: "14".into(),
            pieces: entry.pieces.clone(),
            env_spec: None,
        }
    }

    #[test]
    fn default_schedule() {
        let entry = case_study_entry();
        let mut state = CurriculumState::new("case", &entry.initial_hints, 2).unwrap();
        let sizes: Vec<usize> = (0..6)
            .map(|_| {
                state.on_sample(&entry).unwrap();
                state.live_hints.len()
            })
            .collect();
        assert_eq!(sizes, vec![3, 2, 2, 1, 1, 0]);
    }

    #[test]
    fn empty_hint_set_only_counts() {
        let entry = case_study_entry();
        let mut state = CurriculumState::new("case", &[], 1).unwrap();
        for _ in 0..5 {
            assert_eq!(state.on_sample(&entry).unwrap(), None);
        }
        assert_eq!(state.s, 5);
        assert!(state.live_hints.is_empty());
    }

    #[test]
    fn removal_is_ascending_value() {
        let entry = case_study_entry();
        // D = 0.94, 0.56, 0.75 at positions 3, 4, 5
        assert_eq!(removal_order(&entry.initial_hints, &entry), vec![4, 5, 3]);
    }

    #[test]
    fn removal_ties_drop_later_piece_first() {
        let entry = case_study_entry();
        assert_eq!(removal_order(&[0, 1, 2, 6], &entry), vec![6, 2, 1, 0]);
    }

    #[test]
    fn mismatched_entry_and_zero_period() {
        let entry = case_study_entry();
        let mut state = CurriculumState::new("other", &[1], 1).unwrap();
        assert!(matches!(
            state.on_sample(&entry),
            Err(CurriculumError::EntryMismatch { .. })
        ));
        assert!(matches!(
            CurriculumState::new("x", &[], 0),
            Err(CurriculumError::ZeroPeriod)
        ));
    }

    #[test]
    fn prompt_rendering() {
        let entry = case_study_entry();
        let problem = case_problem(&entry);
        let bare = CurriculumState::new("case", &[], 2).unwrap();
        assert_eq!(build_prompt(&bare, &problem).rendered, problem.statement);

        let state = CurriculumState::new("case", &[5, 3, 4], 2).unwrap();
        let prompt = build_prompt(&state, &problem);
        assert_eq!(prompt.hint_positions, vec![3, 4, 5]);
        assert_eq!(
            prompt.rendered,
            "Hint:\nDerive G=C\nSolve for C+R\nExpress R+G\n\nProblem:\nHow many heads at night?"
        );
    }

    #[test]
    fn single_hint_template() {
        let p = AugmentedPrompt::new("q", "S", vec![(0, "G=C".into())]);
        assert_eq!(p.rendered, "Hint:\nG=C\n\nProblem:\nS");
    }

    #[test]
    fn coordinator_lookup_and_fixed_mode() {
        let entry = case_study_entry();
        let mut fixed = Curriculum::new(std::slice::from_ref(&entry), 1, false, |e| {
            e.initial_hints.clone()
        })
        .unwrap();
        for _ in 0..10 {
            fixed.on_sample("case").unwrap();
        }
        assert_eq!(fixed.state("case").unwrap().live_hints, vec![3, 4, 5]);
        assert!(matches!(
            fixed.on_sample("missing"),
            Err(CurriculumError::UnknownProblem(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let entry = case_study_entry();
        let mut c = Curriculum::new(std::slice::from_ref(&entry), 2, true, |e| {
            e.initial_hints.clone()
        })
        .unwrap();
        for _ in 0..3 {
            c.on_sample("case").unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curriculum.jsonl");
        save_checkpoint(&c.checkpoint(), &path).unwrap();
        let records = load_checkpoint(&path).unwrap();
        let mut fresh = Curriculum::new(std::slice::from_ref(&entry), 2, true, |e| {
            e.initial_hints.clone()
        })
        .unwrap();
        fresh.restore(&records).unwrap();
        assert_eq!(fresh.state("case"), c.state("case"));
    }

    #[test]
    fn worst_pieces_takes_lowest_values() {
        let entry = case_study_entry();
        let corrupted = corrupt_hints(&entry, CorruptionMode::WorstPieces, 0).unwrap();
        // ascending D: 0.00 (pos 6), then the 0.25 tie at 0..=2, later first
        assert_eq!(corrupted.initial_hints, vec![1, 2, 6]);
        let mut values: Vec<f64> = corrupted
            .initial_hints
            .iter()
            .map(|&p| entry.value(p))
            .collect();
        values.sort_by(f64::total_cmp);
        assert_eq!(values, vec![0.0, 0.25, 0.25]);
        assert_eq!(entry, case_study_entry());
    }

    #[test]
    fn zero_fraction_is_identity() {
        let entry = case_study_entry();
        let out = corrupt_hints(&entry, CorruptionMode::FractionCorrupt(0.0), 4).unwrap();
        assert_eq!(out, entry);
    }

    #[test]
    fn random_scores_deterministic() {
        let entry = case_study_entry();
        let a = corrupt_hints(&entry, CorruptionMode::RandomScores, 17).unwrap();
        let b = corrupt_hints(&entry, CorruptionMode::RandomScores, 17).unwrap();
        assert_eq!(a, b);
        a.validate(16).unwrap();
    }

    #[test]
    fn contradictory_hints_name_wrong_choices() {
        let mut entry = case_study_entry();
        entry.pieces[3].text = hint_text(3, 0);
        entry.pieces[4].text = hint_text(4, 5);
        let out = corrupt_hints(&entry, CorruptionMode::Contradictory, 0).unwrap();
        assert_eq!(out.pieces[3].text, hint_text(3, 1));
        assert_eq!(out.pieces[4].text, hint_text(4, 4));
        assert!(out.pieces[5].text.starts_with("It is false that"));
        assert_eq!(out.pieces[0], entry.pieces[0]);
    }

    #[test]
    fn wrong_boundaries_moves_text_but_keeps_content() {
        let entry = case_study_entry();
        let out = corrupt_hints(&entry, CorruptionMode::WrongBoundaries, 3).unwrap();
        let joined =
            |e: &RegistryEntry| e.pieces.iter().map(|p| p.text.as_str()).collect::<String>();
        assert_eq!(joined(&out), joined(&entry));
        let changed = out
            .pieces
            .iter()
            .zip(&entry.pieces)
            .filter(|(a, b)| a.text != b.text)
            .count();
        assert!(changed >= 2);
        assert!(out.pieces.iter().all(|p| !p.text.is_empty()));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "fraction_corrupt(0.5)".parse::<CorruptionMode>().unwrap(),
            CorruptionMode::FractionCorrupt(0.5)
        );
        assert!(matches!(
            "scramble".parse::<CorruptionMode>(),
            Err(CurriculumError::UnknownMode(_))
        ));
        assert!("fraction_corrupt(1.5)".parse::<CorruptionMode>().is_err());
    }
}
