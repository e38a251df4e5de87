//! Problems, reasoning pieces and the preprocessing registry.
//!
//! Problem files and registry files are line-delimited JSON. A registry file
//! starts with a header line carrying the schema version, the attempt count
//! `m` used for success estimation, and a hash of the preprocessing
//! parameters.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simenv::SyntheticSpec;

/// Registry files written by this version.
pub const REGISTRY_SCHEMA_VERSION: u32 = 1;

/// Raw value assigned to pieces that have not been scored yet.
pub const DEFAULT_RAW_VALUE: u8 = 3;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("duplicate problem id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("registry schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("registry file has no header line")]
    MissingHeader,
    #[error("{0}")]
    Validation(String),
}

fn default_raw_value() -> u8 {
    DEFAULT_RAW_VALUE
}

/// One reasoning piece of a ground-truth solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub position: usize,
    pub text: String,
    /// Discrete value score in `1..=5`.
    #[serde(default = "default_raw_value")]
    pub raw_value: u8,
    /// Normalized value in `[0, 1]`, set by `scoring::normalize_values`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_value: Option<f64>,
}

impl PieceRecord {
    pub fn new(position: usize, text: impl Into<String>) -> Self {
        PieceRecord {
            position,
            text: text.into(),
            raw_value: DEFAULT_RAW_VALUE,
            norm_value: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=5).contains(&self.raw_value) {
            return Err(format!(
                "piece {} has raw_value {} outside 1..=5",
                self.position, self.raw_value
            ));
        }
        if let Some(d) = self.norm_value {
            if !(0.0..=1.0).contains(&d) {
                return Err(format!(
                    "piece {} has norm_value {d} outside [0, 1]",
                    self.position
                ));
            }
        }
        Ok(())
    }
}

/// A training problem with its decomposed ground-truth solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement: String,
    pub answer: String,
    pub pieces: Vec<PieceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_spec: Option<SyntheticSpec>,
}

impl Problem {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("problem id is empty".into());
        }
        check_positions(&self.pieces).map_err(|e| format!("problem {:?}: {e}", self.id))?;
        for piece in &self.pieces {
            piece
                .validate()
                .map_err(|e| format!("problem {:?}: {e}", self.id))?;
        }
        if let Some(spec) = &self.env_spec {
            spec.validate()
                .map_err(|e| format!("problem {:?}: {e}", self.id))?;
            if spec.steps.len() != self.pieces.len() {
                return Err(format!(
                    "problem {:?}: env_spec has {} steps but {} pieces",
                    self.id,
                    spec.steps.len(),
                    self.pieces.len()
                ));
            }
        }
        Ok(())
    }

    pub fn piece(&self, position: usize) -> Option<&PieceRecord> {
        self.pieces.get(position)
    }
}

fn check_positions(pieces: &[PieceRecord]) -> Result<(), String> {
    if pieces.is_empty() {
        return Err("solution has no pieces".into());
    }
    for (expected, piece) in pieces.iter().enumerate() {
        if piece.position != expected {
            return Err(format!(
                "piece positions must be 0..{} in order; found {} at index {expected}",
                pieces.len(),
                piece.position
            ));
        }
    }
    Ok(())
}

/// Splits a solution on `delimiter`. Blank segments are dropped and every
/// piece starts with the default raw value.
pub fn split_solution(solution: &str, delimiter: &str) -> Result<Vec<PieceRecord>, CorpusError> {
    if delimiter.is_empty() {
        return Err(CorpusError::Validation(
            "delimiter must be non-empty".into(),
        ));
    }
    let pieces: Vec<PieceRecord> = solution
        .split(delimiter)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| PieceRecord::new(i, s))
        .collect();
    if pieces.is_empty() {
        return Err(CorpusError::Validation(
            "solution yields zero pieces".into(),
        ));
    }
    Ok(pieces)
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| io_err(path, source))
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a problem file. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn load_corpus(path: &Path) -> Result<Vec<Problem>, CorpusError> {
    let reader = open(path)?;
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| io_err(path, source))?;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem =
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                line: line_no,
                source,
            })?;
        problem.validate().map_err(|reason| CorpusError::Invalid {
            line: line_no,
            reason,
        })?;
        if !seen.insert(problem.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: problem.id,
                line: line_no,
            });
        }
        problems.push(problem);
    }
    Ok(problems)
}

pub fn write_corpus(problems: &[Problem], path: &Path) -> Result<(), CorpusError> {
    write_lines(path, problems.iter())
}

pub(crate) fn write_lines<'a, T, I>(path: &Path, records: I) -> Result<(), CorpusError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|source| io_err(path, source))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| CorpusError::Validation(format!("serialization failed: {e}")))?;
        writeln!(out, "{line}").map_err(|source| io_err(path, source))?;
    }
    out.flush().map_err(|source| io_err(path, source))
}

pub(crate) fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let reader = open(path)?;
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| io_err(path, source))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                line: idx + 1,
                source,
            })?,
        );
    }
    Ok(records)
}

/// Preprocessing output for one training problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub problem_id: String,
    pub pieces: Vec<PieceRecord>,
    /// Weak-model successes out of `m`.
    pub c_weak: u32,
    /// Training-model successes out of `m`.
    pub c_train: u32,
    /// Initial piece budget, clamped to the piece count.
    pub k0: usize,
    /// Positions of the initial hint set, ascending.
    pub initial_hints: Vec<usize>,
}

impl RegistryEntry {
    pub fn validate(&self, m: u32) -> Result<(), String> {
        let ctx = |e: String| format!("registry entry {:?}: {e}", self.problem_id);
        check_positions(&self.pieces).map_err(ctx)?;
        for piece in &self.pieces {
            piece.validate().map_err(ctx)?;
            if piece.norm_value.is_none() {
                return Err(ctx(format!("piece {} has no norm_value", piece.position)));
            }
        }
        if self.c_weak > m || self.c_train > m {
            return Err(ctx(format!(
                "success counts ({}, {}) exceed m = {m}",
                self.c_weak, self.c_train
            )));
        }
        if self.initial_hints.len() != self.k0 {
            return Err(ctx(format!(
                "k0 = {} but {} initial hints",
                self.k0,
                self.initial_hints.len()
            )));
        }
        let mut seen = HashSet::new();
        for &pos in &self.initial_hints {
            if pos >= self.pieces.len() || !seen.insert(pos) {
                return Err(ctx(format!("invalid initial hint position {pos}")));
            }
        }
        Ok(())
    }

    /// Normalized value of the piece at `position`.
    pub fn value(&self, position: usize) -> f64 {
        self.pieces[position].norm_value.unwrap_or(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryHeader {
    pub schema_version: u32,
    pub m: u32,
    pub params_hash: String,
}

/// The frozen registry: header plus one entry per training problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    pub header: RegistryHeader,
    pub entries: Vec<RegistryEntry>,
}

impl Registry {
    pub fn new(m: u32, params_hash: impl Into<String>, entries: Vec<RegistryEntry>) -> Self {
        Registry {
            header: RegistryHeader {
                schema_version: REGISTRY_SCHEMA_VERSION,
                m,
                params_hash: params_hash.into(),
            },
            entries,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            entry
                .validate(self.header.m)
                .map_err(CorpusError::Validation)?;
            if !seen.insert(entry.problem_id.as_str()) {
                return Err(CorpusError::Validation(format!(
                    "duplicate registry entry {:?}",
                    entry.problem_id
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, problem_id: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.problem_id == problem_id)
    }
}

pub fn save_registry(registry: &Registry, path: &Path) -> Result<(), CorpusError> {
    registry.validate()?;
    let file = File::create(path).map_err(|source| io_err(path, source))?;
    let mut out = BufWriter::new(file);
    let header = serde_json::to_string(&registry.header)
        .map_err(|e| CorpusError::Validation(e.to_string()))?;
    writeln!(out, "{header}").map_err(|source| io_err(path, source))?;
    for entry in &registry.entries {
        let line =
            serde_json::to_string(entry).map_err(|e| CorpusError::Validation(e.to_string()))?;
        writeln!(out, "{line}").map_err(|source| io_err(path, source))?;
    }
    out.flush().map_err(|source| io_err(path, source))
}

pub fn load_registry(path: &Path) -> Result<Registry, CorpusError> {
    let reader = open(path)?;
    let mut lines = reader.lines().enumerate();
    let header: RegistryHeader = loop {
        match lines.next() {
            None => return Err(CorpusError::MissingHeader),
            Some((idx, line)) => {
                let line = line.map_err(|source| io_err(path, source))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                    line: idx + 1,
                    source,
                })?;
            }
        }
    };
    if header.schema_version != REGISTRY_SCHEMA_VERSION {
        return Err(CorpusError::SchemaVersion {
            found: header.schema_version,
            expected: REGISTRY_SCHEMA_VERSION,
        });
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|source| io_err(path, source))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: RegistryEntry =
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                line: idx + 1,
                source,
            })?;
        entry
            .validate(header.m)
            .map_err(|reason| CorpusError::Invalid {
                line: idx + 1,
                reason,
            })?;
        entries.push(entry);
    }
    Ok(Registry { header, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_basic() {
        let pieces = split_solution("A||B||C", "||").unwrap();
        assert_eq!(pieces.len(), 3);
        assert_eq!(
            pieces.iter().map(|p| p.position).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert!(pieces.iter().all(|p| p.raw_value == DEFAULT_RAW_VALUE));
        assert!(pieces.iter().all(|p| p.norm_value.is_none()));
    }

    #[test]
    fn split_single_and_empty_segments() {
        assert_eq!(split_solution("A", "||").unwrap().len(), 1);
        // "A||||B" splits into "A", "", "B"
        let pieces = split_solution("A||||B", "||").unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[1].text, "B");
        assert_eq!(pieces[1].position, 1);
    }

    #[test]
    fn split_errors() {
        assert!(split_solution("A", "").is_err());
        assert!(split_solution("||  ||", "||").is_err());
        assert!(split_solution("", ";").is_err());
    }

    #[test]
    fn problem_validation_catches_gaps() {
        let mut p = Problem {
            id: "q".into(),
            statement: "s".into(),
            answer: "a".into(),
            pieces: vec![PieceRecord::new(0, "x"), PieceRecord::new(2, "y")],
            env_spec: None,
        };
        assert!(p.validate().is_err());
        p.pieces[1].position = 1;
        assert!(p.validate().is_ok());
        p.pieces[1].raw_value = 6;
        assert!(p.validate().is_err());
        p.pieces.clear();
        assert!(p.validate().is_err());
    }

    #[test]
    fn registry_entry_validation() {
        let mut piece = PieceRecord::new(0, "x");
        piece.norm_value = Some(1.0);
        let mut entry = RegistryEntry {
            problem_id: "q".into(),
            pieces: vec![piece],
            c_weak: 2,
            c_train: 3,
            k0: 1,
            initial_hints: vec![0],
        };
        assert!(entry.validate(16).is_ok());
        assert!(entry.validate(2).is_err());
        entry.initial_hints = vec![1];
        assert!(entry.validate(16).is_err());
        entry.initial_hints = vec![];
        assert!(entry.validate(16).is_err());
    }
}
