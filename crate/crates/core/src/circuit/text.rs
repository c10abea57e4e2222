//! Plaintext circuit format.
//!
//! ```text
//! qubits 4 2        # computing, auxiliary
//! x 0
//! cnz3 0 1 2 3
//! bridge 4 3 2
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, Gate, GateKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

fn parse_kind(word: &str) -> Option<GateKind> {
    Some(match word {
        "x" => GateKind::X,
        "y" => GateKind::Y,
        "z" => GateKind::Z,
        "h" => GateKind::H,
        "s" => GateKind::S,
        "t" => GateKind::T,
        "tdg" => GateKind::Tdg,
        "cx" => GateKind::CX,
        "cz" => GateKind::CZ,
        "swap" => GateKind::Swap,
        "bridge" | "bridge3" => GateKind::Bridge3,
        "ccx" => GateKind::CCX,
        _ => {
            let n: usize = word.strip_prefix("cnz")?.parse().ok()?;
            GateKind::Cnz(n)
        }
    })
}

/// Strips a `#` comment and surrounding whitespace.
pub(crate) fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        let Some(circ) = circuit.as_mut() else {
            if head != "qubits" {
                return Err(ParseError::new(
                    line_no,
                    "expected header `qubits <computing> <aux>`",
                ));
            }
            let nums = parse_indices(words, line_no)?;
            let [computing, aux] = nums[..] else {
                return Err(ParseError::new(line_no, "header takes exactly two counts"));
            };
            if computing == 0 {
                return Err(ParseError::new(
                    line_no,
                    "need at least one computing qubit",
                ));
            }
            circuit = Some(Circuit::new(computing, aux));
            continue;
        };
        let kind = parse_kind(head)
            .ok_or_else(|| ParseError::new(line_no, format!("unknown gate kind `{head}`")))?;
        let qubits = parse_indices(words, line_no)?;
        let gate = Gate::new(kind, qubits).map_err(|e| ParseError::new(line_no, e.to_string()))?;
        circ.push(gate)
            .map_err(|e| ParseError::new(line_no, e.to_string()))?;
    }
    circuit.ok_or_else(|| ParseError::new(0, "missing `qubits` header"))
}

fn parse_indices<'a>(
    words: impl Iterator<Item = &'a str>,
    line_no: usize,
) -> Result<Vec<usize>, ParseError> {
    words
        .map(|w| {
            w.parse::<usize>()
                .map_err(|_| ParseError::new(line_no, format!("bad qubit index `{w}`")))
        })
        .collect()
}

pub fn write_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {} {}\n", circuit.num_computing(), circuit.num_aux());
    for gate in circuit.gates() {
        let _ = writeln!(out, "{gate}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_lines() {
        let c =
            parse_circuit("# demo\nqubits 4 2\nccx 0 1 4\ncnz3 0 1 2 3 # ladder\nbridge 4 3 2\n")
                .unwrap();
        assert_eq!(c.width(), 6);
        assert_eq!(c.gates()[0], Gate::ccx(0, 1, 4));
        assert_eq!(c.gates()[1], Gate::cnz(&[0, 1, 2], 3));
        assert_eq!(c.gates()[2], Gate::bridge3(4, 3, 2));
    }

    #[test]
    fn rejects_unknown_kind_with_line() {
        let err = parse_circuit("qubits 2 0\nh 0\nfoo 1\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("foo"));
    }

    #[test]
    fn rejects_arity_mismatch_with_line() {
        let err = parse_circuit("qubits 3 0\n\ncx 0 1 2\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("expects 2"));
    }

    #[test]
    fn rejects_out_of_range_and_missing_header() {
        assert_eq!(parse_circuit("qubits 2 0\nx 2").unwrap_err().line, 2);
        assert_eq!(parse_circuit("x 0").unwrap_err().line, 1);
        assert_eq!(parse_circuit("").unwrap_err().line, 0);
        assert!(parse_circuit("qubits 2 0\ncnz0 1").is_err());
    }

    #[test]
    fn writer_round_trips() {
        let text = "qubits 3 1\nx 0\ncnz2 0 1 2\nswap 2 3\ntdg 1\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(write_circuit(&c), text);
    }
}
