//! Plain-text circuit format.
//!
//! ```text
//! # seamqec circuit v1
//! R 0 1 2
//! ERRX 0.001 0 1 2
//! TICK
//! CNOT 0 2 1 2
//! DEPOL2 0.001 0 2 1 2
//! TICK
//! MZ 2
//! DETECTOR(0.5,0.5,0) 0
//! OBSERVABLE_INCLUDE(0) 0
//! ```
//!
//! Detectors and observables refer to absolute measurement indices. Floats
//! are written in shortest round-trip form, so `parse(format(c)) == c`.

use super::{Circuit, Instruction, NoiseChannel};
use crate::error::{Error, Result};
use std::fmt::Write;

pub const CIRCUIT_HEADER: &str = "# seamqec circuit v1";

fn join(v: &[usize]) -> String {
    let mut s = String::new();
    for x in v {
        write!(s, " {x}").unwrap();
    }
    s
}

pub fn format_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str(CIRCUIT_HEADER);
    out.push('\n');
    writeln!(out, "QUBITS {}", c.num_qubits()).unwrap();
    for ins in c.instructions() {
        match ins {
            Instruction::Tick => out.push_str("TICK"),
            Instruction::Detector { coords, measurements } => {
                out.push_str("DETECTOR");
                if !coords.is_empty() {
                    let cs: Vec<String> = coords.iter().map(|x| format!("{x}")).collect();
                    write!(out, "({})", cs.join(",")).unwrap();
                }
                out.push_str(&join(measurements));
            }
            Instruction::ObservableInclude { index, measurements } => {
                write!(out, "OBSERVABLE_INCLUDE({index}){}", join(measurements)).unwrap();
            }
            Instruction::Noise { channel, targets } => {
                write!(out, "{} {}{}", channel.name(), channel.probability(), join(targets)).unwrap();
            }
            other => {
                write!(out, "{}{}", other.name(), join(other.gate_qubits())).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn parse_usizes<'a>(line: usize, it: impl Iterator<Item = &'a str>) -> Result<Vec<usize>> {
    it.map(|t| {
        t.parse::<usize>()
            .map_err(|_| Error::Parse { line, message: format!("bad integer `{t}`") })
    })
    .collect()
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CIRCUIT_HEADER => {}
        _ => {
            return Err(Error::Parse { line: 1, message: format!("missing header `{CIRCUIT_HEADER}`") })
        }
    }
    let mut c = Circuit::new();
    for (i, raw) in lines {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut toks = s.split_whitespace();
        let head = toks.next().unwrap();
        let (name, arg) = match head.find('(') {
            Some(k) if head.ends_with(')') => (&head[..k], Some(&head[k + 1..head.len() - 1])),
            Some(_) => return Err(Error::Parse { line, message: format!("unbalanced `{head}`") }),
            None => (head, None),
        };
        let bad = |m: &str| Error::Parse { line, message: m.to_string() };
        let ins = match name {
            "QUBITS" => {
                let n = parse_usizes(line, toks)?;
                c.reserve_qubits(*n.first().ok_or_else(|| bad("QUBITS needs a count"))?);
                continue;
            }
            "TICK" => Instruction::Tick,
            "H" => Instruction::H(parse_usizes(line, toks)?),
            "CNOT" => Instruction::Cnot(parse_usizes(line, toks)?),
            "R" => Instruction::R(parse_usizes(line, toks)?),
            "MZ" => Instruction::Mz(parse_usizes(line, toks)?),
            "MX" => Instruction::Mx(parse_usizes(line, toks)?),
            "BELL_PREP" => Instruction::BellPrep(parse_usizes(line, toks)?),
            "DETECTOR" => {
                let coords = match arg {
                    Some(a) if !a.is_empty() => a
                        .split(',')
                        .map(|x| x.trim().parse::<f64>().map_err(|_| bad("bad coordinate")))
                        .collect::<Result<Vec<f64>>>()?,
                    _ => Vec::new(),
                };
                Instruction::Detector { coords, measurements: parse_usizes(line, toks)? }
            }
            "OBSERVABLE_INCLUDE" => {
                let index = arg
                    .and_then(|a| a.trim().parse::<usize>().ok())
                    .ok_or_else(|| bad("OBSERVABLE_INCLUDE needs an index"))?;
                Instruction::ObservableInclude { index, measurements: parse_usizes(line, toks)? }
            }
            other => {
                let p = toks
                    .next()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| bad("noise channel needs a probability"))?;
                let channel = NoiseChannel::from_name(other, p)
                    .ok_or_else(|| bad(&format!("unknown instruction `{other}`")))?
                    .check()?;
                Instruction::Noise { channel, targets: parse_usizes(line, toks)? }
            }
        };
        c.push(ins);
    }
    Ok(c)
}
