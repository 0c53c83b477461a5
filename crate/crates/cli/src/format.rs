//! Text formats for matrices and edge distributions.
//!
//! A matrix file starts with the header `gamma kappa m z L` followed by γ rows of κ
//! whitespace-separated non-negative integers. Lines whose first non-blank character is `#`
//! and blank lines are ignored. The serializer writes the header and rows with single spaces,
//! so serializing a parsed file reproduces the serializer's output byte for byte.

use std::fmt::Write as _;

use scgrade_core::model::{CodeParams, LiftingMatrix, PartitioningMatrix};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Header fields and rows of a matrix file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixFile {
    pub gamma: usize,
    pub kappa: usize,
    pub memory: usize,
    pub circulant: usize,
    pub replicas: usize,
    pub rows: Vec<Vec<u32>>,
}

/// Non-comment tokens with 1-based line and column.
fn tokens(text: &str) -> Vec<(usize, Vec<(usize, &str)>)> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = Vec::new();
        let mut start = None;
        for (k, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(k),
                (true, Some(s)) => {
                    words.push((line[..s].chars().count() + 1, &line[s..k]));
                    start = None;
                }
                _ => {}
            }
        }
        out.push((n + 1, words));
    }
    out
}

fn number(line: usize, column: usize, word: &str, what: &str) -> Result<u64, ParseError> {
    word.parse::<u64>()
        .map_err(|_| ParseError::new(line, column, format!("expected {what}, found `{word}`")))
}

impl MatrixFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let lines = tokens(text);
        let Some((hline, header)) = lines.first() else {
            return Err(ParseError::new(1, 1, "empty file: expected header `gamma kappa m z L`"));
        };
        if header.len() != 5 {
            let column = header.get(5).map_or(1, |w| w.0);
            return Err(ParseError::new(
                *hline,
                column,
                format!("header needs 5 fields `gamma kappa m z L`, found {}", header.len()),
            ));
        }
        let names = ["gamma", "kappa", "memory", "circulant size", "replica count"];
        let mut fields = [0usize; 5];
        for (k, &(col, word)) in header.iter().enumerate() {
            fields[k] = number(*hline, col, word, names[k])? as usize;
        }
        let [gamma, kappa, memory, circulant, replicas] = fields;
        let body = &lines[1..];
        if body.len() != gamma {
            let (line, column) = body
                .get(gamma)
                .map_or((text.lines().count().max(1), 1), |(l, w)| (*l, w[0].0));
            return Err(ParseError::new(
                line,
                column,
                format!("expected {gamma} matrix rows, found {}", body.len()),
            ));
        }
        let mut rows = Vec::with_capacity(gamma);
        for (line, words) in body {
            if words.len() != kappa {
                let column = words.get(kappa).map_or(1, |w| w.0);
                return Err(ParseError::new(
                    *line,
                    column,
                    format!("expected {kappa} entries, found {}", words.len()),
                ));
            }
            let row = words
                .iter()
                .map(|&(col, w)| {
                    let v = number(*line, col, w, "a non-negative integer")?;
                    u32::try_from(v).map_err(|_| ParseError::new(*line, col, "entry out of range"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(MatrixFile {
            gamma,
            kappa,
            memory,
            circulant,
            replicas,
            rows,
        })
    }

    pub fn serialize(&self) -> String {
        let mut s = format!(
            "{} {} {} {} {}\n",
            self.gamma, self.kappa, self.memory, self.circulant, self.replicas
        );
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_partitioning(p: &PartitioningMatrix, params: &CodeParams) -> Self {
        Self::with_rows(params, (0..p.gamma()).map(|i| p.row(i).to_vec()).collect())
    }

    pub fn from_lifting(l: &LiftingMatrix, params: &CodeParams) -> Self {
        Self::with_rows(params, (0..l.gamma()).map(|i| l.row(i).to_vec()).collect())
    }

    fn with_rows(params: &CodeParams, rows: Vec<Vec<u32>>) -> Self {
        MatrixFile {
            gamma: params.gamma,
            kappa: params.kappa,
            memory: params.memory,
            circulant: params.circulant,
            replicas: params.replicas,
            rows,
        }
    }

    /// Entries without any validation against a coupling pattern.
    pub fn partitioning(&self) -> PartitioningMatrix {
        PartitioningMatrix::from_raw(self.gamma, self.kappa, self.rows.concat())
    }

    /// Lifting matrix with entries reduced modulo the header's circulant size.
    pub fn lifting(&self) -> LiftingMatrix {
        LiftingMatrix::from_raw(self.gamma, self.kappa, self.circulant.max(1), self.rows.concat())
    }
}

/// `x` with 12 significant digits, trailing zeros removed but at least one decimal kept.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(1) as usize;
    let mut s = format!("{x:.decimals$}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}

/// Space-separated distribution line, newline-terminated.
pub fn format_distribution(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|&x| format_probability(x)).collect();
    format!("{}\n", parts.join(" "))
}

pub fn parse_distribution(text: &str) -> Result<Vec<f64>, ParseError> {
    let lines = tokens(text);
    let Some((line, words)) = lines.first() else {
        return Err(ParseError::new(1, 1, "empty file: expected probabilities"));
    };
    if let Some((extra, w)) = lines.get(1) {
        return Err(ParseError::new(*extra, w[0].0, "distribution must be a single line"));
    }
    words
        .iter()
        .map(|&(col, w)| {
            w.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseError::new(*line, col, format!("expected a probability, found `{w}`")))
        })
        .collect()
}
