//! Piece value scoring and per-problem normalization.
//!
//! Scorers assign every piece an integer value in `1..=5`. Three backends
//! exist: a deterministic text heuristic, an oracle that reads branching
//! factors from a synthetic `env_spec`, and an external service reached
//! through a [`ScoringTransport`].

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Problem;

pub const RUBRIC_VERSION: &str = "value-rubric-v1";

/// Attempts after the first one when a reply cannot be parsed.
pub const PROTOCOL_RETRIES: usize = 3;

const PROMPT_TEMPLATE: &str = "Rate the importance of this reasoning step on a scale of 1-5.

Consider three criteria (prioritize Impact):
- Novelty: Is this insight non-trivial or creative?
- Difficulty: Does it require mathematical maturity?
- Impact: Do subsequent steps critically depend on it?

Scoring guidelines:
- 1 = Trivial (e.g., restating the answer)
- 2 = Routine (standard manipulations)
- 3 = Moderate (requires reasoning, not critical)
- 4 = Important (valuable insight)
- 5 = Critical bottleneck (blocks solution if missing)

Problem: {problem}

Reasoning step: {piece}

Output: A single integer from 1 to 5";

/// Scoring prompt with the problem statement and piece text filled in.
pub fn render_prompt(problem_statement: &str, piece_text: &str) -> String {
    PROMPT_TEMPLATE
        .replace("{problem}", problem_statement)
        .replace("{piece}", piece_text)
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("problem {0:?} has no pieces")]
    NoPieces(String),
    #[error("oracle scorer needs a synthetic env_spec on problem {0:?}")]
    NotSynthetic(String),
    #[error("scoring service failed on piece {piece} (retryable): {message}")]
    Service { piece: usize, message: String },
    #[error("scoring service returned an unusable reply for piece {piece}: {detail}")]
    Protocol { piece: usize, detail: String },
}

impl ScoringError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ScoringError::Service { .. })
    }
}

/// Request record sent to an external scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub problem_statement: String,
    pub piece_text: String,
    pub rubric_version: String,
    /// Fully rendered scoring prompt.
    pub prompt: String,
}

/// Reply from an external scorer: either a structured score or free text
/// from which the first integer is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreResponse {
    Score { score: i64 },
    Reply { reply: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("transport error: {0}")]
pub struct TransportError(pub String);

/// Request/response channel to a scoring service.
pub trait ScoringTransport: Send + Sync {
    fn exchange(&self, request: &ScoreRequest) -> Result<ScoreResponse, TransportError>;
}

/// In-process transport backed by a closure.
pub struct LoopbackTransport<F>(pub F);

impl<F> ScoringTransport for LoopbackTransport<F>
where
    F: Fn(&ScoreRequest) -> Result<ScoreResponse, TransportError> + Send + Sync,
{
    fn exchange(&self, request: &ScoreRequest) -> Result<ScoreResponse, TransportError> {
        (self.0)(request)
    }
}

/// Runs `program args...` once per request, writing the request as one JSON
/// line to stdin and reading one JSON response from stdout.
#[derive(Debug, Clone)]
pub struct CommandTransport {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandTransport {
    /// Splits a command line on whitespace.
    pub fn parse(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(CommandTransport {
            program,
            args: parts.collect(),
        })
    }
}

impl ScoringTransport for CommandTransport {
    fn exchange(&self, request: &ScoreRequest) -> Result<ScoreResponse, TransportError> {
        let err = |e: &dyn std::fmt::Display| TransportError(format!("{}: {e}", self.program));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| err(&e))?;
        let line = serde_json::to_string(request).map_err(|e| err(&e))?;
        {
            let mut stdin = child
                .stdin
                .take()
                .ok_or_else(|| err(&"stdin unavailable"))?;
            writeln!(stdin, "{line}").map_err(|e| err(&e))?;
        }
        let output = child.wait_with_output().map_err(|e| err(&e))?;
        if !output.status.success() {
            return Err(err(&format!("exited with {}", output.status)));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        match serde_json::from_str(stdout.trim()) {
            Ok(response) => Ok(response),
            // a bare text reply is still a reply
            Err(_) => Ok(ScoreResponse::Reply {
                reply: stdout.into_owned(),
            }),
        }
    }
}

/// Which scorer a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Heuristic,
    Oracle,
    External,
}

#[derive(Clone)]
pub enum ScorerHandle {
    Heuristic,
    Oracle,
    External {
        transport: Arc<dyn ScoringTransport>,
        max_in_flight: usize,
    },
}

impl std::fmt::Debug for ScorerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScorerHandle::Heuristic => f.write_str("Heuristic"),
            ScorerHandle::Oracle => f.write_str("Oracle"),
            ScorerHandle::External { max_in_flight, .. } => f
                .debug_struct("External")
                .field("max_in_flight", max_in_flight)
                .finish_non_exhaustive(),
        }
    }
}

impl ScorerHandle {
    pub fn kind(&self) -> ScorerKind {
        match self {
            ScorerHandle::Heuristic => ScorerKind::Heuristic,
            ScorerHandle::Oracle => ScorerKind::Oracle,
            ScorerHandle::External { .. } => ScorerKind::External,
        }
    }
}

/// Raw value score for every piece of `problem`, in piece order.
pub fn score_pieces(problem: &Problem, scorer: &ScorerHandle) -> Result<Vec<u8>, ScoringError> {
    if problem.pieces.is_empty() {
        return Err(ScoringError::NoPieces(problem.id.clone()));
    }
    match scorer {
        ScorerHandle::Heuristic => Ok(heuristic_scores(problem)),
        ScorerHandle::Oracle => oracle_scores(problem),
        ScorerHandle::External {
            transport,
            max_in_flight,
        } => external_scores(problem, transport.as_ref(), (*max_in_flight).max(1)),
    }
}

const DERIVATION_MARKERS: [&str; 6] = ["therefore", "implies", "hence", "thus", "⟹", "=>"];

/// `clamp(1 + round(4 * length_rank * bonus), 1, 5)` where `length_rank` is
/// the fraction of other pieces that are strictly shorter and `bonus` grows
/// with derivation markers and `=`-dense text.
fn heuristic_scores(problem: &Problem) -> Vec<u8> {
    let lengths: Vec<usize> = problem
        .pieces
        .iter()
        .map(|p| p.text.chars().count())
        .collect();
    let n = lengths.len();
    problem
        .pieces
        .iter()
        .zip(&lengths)
        .map(|(piece, &len)| {
            let rank = if n > 1 {
                lengths.iter().filter(|&&l| l < len).count() as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let lower = piece.text.to_lowercase();
            let mut bonus = 1.0;
            if DERIVATION_MARKERS.iter().any(|m| lower.contains(m)) {
                bonus += 0.25;
            }
            let equals = piece.text.matches('=').count();
            if equals > 0 && equals * 20 >= len {
                bonus += 0.25;
            }
            (1.0 + (4.0 * rank * bonus).round()).clamp(1.0, 5.0) as u8
        })
        .collect()
}

/// Ranks steps by branching factor: the widest distinct factor maps to 5,
/// the narrowest to 1, with evenly spaced levels in between. A problem whose
/// steps all share one factor scores 3 everywhere.
fn oracle_scores(problem: &Problem) -> Result<Vec<u8>, ScoringError> {
    let spec = problem
        .env_spec
        .as_ref()
        .ok_or_else(|| ScoringError::NotSynthetic(problem.id.clone()))?;
    let mut distinct: Vec<usize> = spec.steps.iter().map(|s| s.branching_factor).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() == 1 {
        return Ok(vec![3; spec.steps.len()]);
    }
    let levels = (distinct.len() - 1) as f64;
    Ok(spec
        .steps
        .iter()
        .map(|s| {
            let rank = distinct.partition_point(|&b| b < s.branching_factor) as f64;
            (1.0 + (4.0 * rank / levels).round()) as u8
        })
        .collect())
}

/// First run of ASCII digits in `reply`, which must be in `1..=5`.
pub fn parse_score_reply(reply: &str) -> Result<u8, String> {
    let start = reply
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| format!("no integer in reply {reply:?}"))?;
    let digits: String = reply[start..]
        .chars()
        .take_while(char::is_ascii_digit)
        .collect();
    match digits.parse::<u8>() {
        Ok(v @ 1..=5) => Ok(v),
        _ => Err(format!("score {digits} outside 1..=5")),
    }
}

fn check_response(response: ScoreResponse) -> Result<u8, String> {
    match response {
        ScoreResponse::Score { score } if (1..=5).contains(&score) => Ok(score as u8),
        ScoreResponse::Score { score } => Err(format!("score {score} outside 1..=5")),
        ScoreResponse::Reply { reply } => parse_score_reply(&reply),
    }
}

fn score_one(
    problem: &Problem,
    index: usize,
    transport: &dyn ScoringTransport,
) -> Result<u8, ScoringError> {
    let piece = &problem.pieces[index];
    let request = ScoreRequest {
        problem_statement: problem.statement.clone(),
        piece_text: piece.text.clone(),
        rubric_version: RUBRIC_VERSION.to_string(),
        prompt: render_prompt(&problem.statement, &piece.text),
    };
    let mut last = String::new();
    for _ in 0..=PROTOCOL_RETRIES {
        let response = transport
            .exchange(&request)
            .map_err(|e| ScoringError::Service {
                piece: index,
                message: e.0,
            })?;
        match check_response(response) {
            Ok(score) => return Ok(score),
            Err(detail) => {
                log::warn!("piece {index} of {:?}: {detail}; retrying", problem.id);
                last = detail;
            }
        }
    }
    Err(ScoringError::Protocol {
        piece: index,
        detail: last,
    })
}

fn external_scores(
    problem: &Problem,
    transport: &dyn ScoringTransport,
    max_in_flight: usize,
) -> Result<Vec<u8>, ScoringError> {
    let indices: Vec<usize> = (0..problem.pieces.len()).collect();
    let mut scores = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(max_in_flight) {
        let results: Vec<Result<u8, ScoringError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&i| scope.spawn(move || score_one(problem, i, transport)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scoring worker panicked"))
                .collect()
        });
        for r in results {
            scores.push(r?);
        }
    }
    Ok(scores)
}

/// Min-max normalization of one problem's raw scores. When every score is
/// equal the range is empty and all pieces get 0.5.
pub fn normalize_values(raw: &[u8]) -> Vec<f64> {
    let (Some(&lo), Some(&hi)) = (raw.iter().min(), raw.iter().max()) else {
        return Vec::new();
    };
    if lo == hi {
        return vec![0.5; raw.len()];
    }
    let span = f64::from(hi - lo);
    raw.iter().map(|&v| f64::from(v - lo) / span).collect()
}

/// Scores and normalizes `problem`, returning a copy with `raw_value` and
/// `norm_value` filled in. Piece identity and order are untouched.
pub fn score_problem(problem: &Problem, scorer: &ScorerHandle) -> Result<Problem, ScoringError> {
    let raw = score_pieces(problem, scorer)?;
    Ok(apply_scores(problem, &raw))
}

pub fn apply_scores(problem: &Problem, raw: &[u8]) -> Problem {
    let norm = normalize_values(raw);
    let mut scored = problem.clone();
    for ((piece, &r), d) in scored.pieces.iter_mut().zip(raw).zip(norm) {
        piece.raw_value = r;
        piece.norm_value = Some(d);
    }
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_solution, PieceRecord};
    use crate::simenv::{generate_corpus, BranchingProfile};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn text_problem(solution: &str) -> Problem {
        Problem {
            id: "t".into(),
            statement: "How many roads?".into(),
            answer: "4900".into(),
            pieces: split_solution(solution, "||").unwrap(),
            env_spec: None,
        }
    }

    #[test]
    fn normalizes_worked_example() {
        let d = normalize_values(&[2, 2, 4, 2, 5, 1]);
        assert_eq!(d, vec![0.25, 0.25, 0.75, 0.25, 1.0, 0.0]);
    }

    #[test]
    fn normalize_degenerate_and_endpoints() {
        assert_eq!(normalize_values(&[3, 3, 3]), vec![0.5; 3]);
        assert_eq!(normalize_values(&[1, 5]), vec![0.0, 1.0]);
        assert!(normalize_values(&[]).is_empty());
    }

    #[test]
    fn heuristic_single_piece_in_range() {
        let p = text_problem("Conclude maximum is 4900.");
        let s = score_pieces(&p, &ScorerHandle::Heuristic).unwrap();
        assert_eq!(s.len(), 1);
        assert!((1..=5).contains(&s[0]));
    }

    #[test]
    fn heuristic_is_deterministic_and_in_range() {
        let p = text_problem(
            "Restate.||x = y = z therefore a = b||Hypothesize removing a perfect matching from the complete graph||Done",
        );
        let a = score_pieces(&p, &ScorerHandle::Heuristic).unwrap();
        let b = score_pieces(&p, &ScorerHandle::Heuristic).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| (1..=5).contains(s)));
        // longest piece ranks highest
        assert_eq!(a[2], 5);
    }

    #[test]
    fn oracle_prefers_widest_step() {
        let corpus = generate_corpus(10, 5, 5, "bottleneck(64,2)".parse().unwrap(), 2).unwrap();
        for p in &corpus {
            let s = score_pieces(p, &ScorerHandle::Oracle).unwrap();
            let spec = p.env_spec.as_ref().unwrap();
            let widest = (0..5)
                .max_by_key(|&j| spec.steps[j].branching_factor)
                .unwrap();
            assert_eq!(s[widest], 5);
            assert!(s.iter().enumerate().all(|(j, &v)| j == widest || v < 5));
        }
    }

    #[test]
    fn oracle_levels_and_flat_case() {
        let corpus = generate_corpus(1, 3, 3, BranchingProfile::Uniform(4), 0).unwrap();
        assert_eq!(
            score_pieces(&corpus[0], &ScorerHandle::Oracle).unwrap(),
            vec![3, 3, 3]
        );
        assert!(matches!(
            score_pieces(&text_problem("a||b"), &ScorerHandle::Oracle),
            Err(ScoringError::NotSynthetic(_))
        ));
    }

    #[test]
    fn external_scores_via_loopback() {
        let transport = LoopbackTransport(|req: &ScoreRequest| {
            assert!(req.prompt.contains(&req.piece_text));
            assert!(req.prompt.contains(&req.problem_statement));
            assert_eq!(req.rubric_version, RUBRIC_VERSION);
            Ok(ScoreResponse::Reply {
                reply: format!("{}", req.piece_text.len().min(5)),
            })
        });
        let scorer = ScorerHandle::External {
            transport: Arc::new(transport),
            max_in_flight: 2,
        };
        let p = text_problem("a||bb||ccc||dddd||eeeee||ffffff");
        assert_eq!(score_pieces(&p, &scorer).unwrap(), vec![1, 2, 3, 4, 5, 5]);
    }

    #[test]
    fn external_retries_protocol_errors() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let transport = LoopbackTransport(move |_: &ScoreRequest| {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            Ok(if n < 2 {
                ScoreResponse::Score { score: 9 }
            } else {
                ScoreResponse::Score { score: 4 }
            })
        });
        let scorer = ScorerHandle::External {
            transport: Arc::new(transport),
            max_in_flight: 1,
        };
        let p = text_problem("only");
        assert_eq!(score_pieces(&p, &scorer).unwrap(), vec![4]);
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn external_gives_up_after_retries() {
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let scorer = ScorerHandle::External {
            transport: Arc::new(LoopbackTransport(move |_: &ScoreRequest| {
                counter.fetch_add(1, Ordering::SeqCst);
                Ok(ScoreResponse::Reply {
                    reply: "very important".into(),
                })
            })),
            max_in_flight: 1,
        };
        let err = score_pieces(&text_problem("x||y"), &scorer).unwrap_err();
        assert!(matches!(err, ScoringError::Protocol { piece: 0, .. }));
        assert_eq!(calls.load(Ordering::SeqCst), 1 + PROTOCOL_RETRIES);
    }

    #[test]
    fn external_service_failure_is_retryable() {
        let scorer = ScorerHandle::External {
            transport: Arc::new(LoopbackTransport(|req: &ScoreRequest| {
                if req.piece_text == "b" {
                    Err(TransportError("connection reset".into()))
                } else {
                    Ok(ScoreResponse::Score { score: 2 })
                }
            })),
            max_in_flight: 4,
        };
        let err = score_pieces(&text_problem("a||b||c"), &scorer).unwrap_err();
        assert!(err.is_retryable());
        assert!(matches!(err, ScoringError::Service { piece: 1, .. }));
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_score_reply("Score: 4"), Ok(4));
        assert_eq!(parse_score_reply("5\n"), Ok(5));
        assert!(parse_score_reply("0").is_err());
        assert!(parse_score_reply("12").is_err());
        assert!(parse_score_reply("none").is_err());
    }

    #[test]
    fn response_wire_format() {
        let r: ScoreResponse = serde_json::from_str(r#"{"score":3}"#).unwrap();
        assert_eq!(r, ScoreResponse::Score { score: 3 });
        let r: ScoreResponse = serde_json::from_str(r#"{"reply":"4"}"#).unwrap();
        assert_eq!(r, ScoreResponse::Reply { reply: "4".into() });
    }

    #[test]
    fn apply_scores_keeps_identity() {
        let p = text_problem("a||b||c");
        let scored = apply_scores(&p, &[1, 3, 5]);
        let texts = |p: &Problem| p.pieces.iter().map(|x| x.text.clone()).collect::<Vec<_>>();
        assert_eq!(texts(&p), texts(&scored));
        assert_eq!(
            scored.pieces,
            vec![
                PieceRecord {
                    position: 0,
                    text: "a".into(),
                    raw_value: 1,
                    norm_value: Some(0.0)
                },
                PieceRecord {
                    position: 1,
                    text: "b".into(),
                    raw_value: 3,
                    norm_value: Some(0.5)
                },
                PieceRecord {
                    position: 2,
                    text: "c".into(),
                    raw_value: 5,
                    norm_value: Some(1.0)
                },
            ]
        );
    }
}
