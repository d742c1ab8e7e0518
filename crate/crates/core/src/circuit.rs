//! Circuit intermediate representation in the {U3, CZ} basis.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::qasm::QasmError;

/// Identifier of a gate inside its [`Circuit`]; equal to its position in
/// [`Circuit::gates`].
pub type GateId = usize;

/// The two native operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GateKind {
    /// Arbitrary single-qubit rotation, angles in radians.
    U3 { theta: f64, phi: f64, lambda: f64 },
    /// Controlled-Z; symmetric in its operands.
    CZ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub operands: Vec<usize>,
    /// 1-based line of the statement that produced this gate, 0 when synthetic.
    pub source_line: usize,
}

impl Gate {
    pub fn is_cz(&self) -> bool {
        matches!(self.kind, GateKind::CZ)
    }

    pub fn is_u3(&self) -> bool {
        matches!(self.kind, GateKind::U3 { .. })
    }

    /// The CZ operand pair, if this is a CZ.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match self.kind {
            GateKind::CZ => Some((self.operands[0], self.operands[1])),
            GateKind::U3 { .. } => None,
        }
    }
}

/// An ordered gate list with the per-qubit projection precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub per_qubit_order: Vec<Vec<GateId>>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            per_qubit_order: vec![Vec::new(); num_qubits],
        }
    }

    /// Appends a U3 and returns its id.
    ///
    /// Panics if `q` is out of range or an angle is not finite.
    pub fn u3(&mut self, q: usize, theta: f64, phi: f64, lambda: f64) -> GateId {
        assert!(
            theta.is_finite() && phi.is_finite() && lambda.is_finite(),
            "U3 angles must be finite"
        );
        self.push(GateKind::U3 { theta, phi, lambda }, vec![q], 0)
    }

    /// Appends a CZ and returns its id. Panics on equal or out-of-range operands.
    pub fn cz(&mut self, a: usize, b: usize) -> GateId {
        assert_ne!(a, b, "CZ operands must be distinct");
        self.push(GateKind::CZ, vec![a, b], 0)
    }

    pub(crate) fn push(&mut self, kind: GateKind, operands: Vec<usize>, line: usize) -> GateId {
        for &q in &operands {
            assert!(q < self.num_qubits, "qubit {q} out of range");
        }
        let id = self.gates.len();
        for &q in &operands {
            self.per_qubit_order[q].push(id);
        }
        self.gates.push(Gate {
            id,
            kind,
            operands,
            source_line: line,
        });
        id
    }

    pub fn cz_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cz()).count()
    }

    pub fn u3_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_u3()).count()
    }

    /// Recomputes the per-qubit projection from `gates`.
    pub fn project(&self) -> Vec<Vec<GateId>> {
        let mut order = vec![Vec::new(); self.num_qubits];
        for g in &self.gates {
            for &q in &g.operands {
                order[q].push(g.id);
            }
        }
        order
    }

    /// Checks the structural invariants: ids are positions, operand
    /// counts match the kind, CZ operands differ, and `per_qubit_order`
    /// is the projection of `gates`.
    pub fn check(&self) -> Result<(), String> {
        for (pos, g) in self.gates.iter().enumerate() {
            if g.id != pos {
                return Err(format!("gate at position {pos} has id {}", g.id));
            }
            match g.kind {
                GateKind::U3 { theta, phi, lambda } => {
                    if g.operands.len() != 1 {
                        return Err(format!("U3 gate {pos} has {} operands", g.operands.len()));
                    }
                    if !(theta.is_finite() && phi.is_finite() && lambda.is_finite()) {
                        return Err(format!("U3 gate {pos} has a non-finite angle"));
                    }
                }
                GateKind::CZ => {
                    if g.operands.len() != 2 || g.operands[0] == g.operands[1] {
                        return Err(format!("CZ gate {pos} needs two distinct operands"));
                    }
                }
            }
            if let Some(&q) = g.operands.iter().find(|&&q| q >= self.num_qubits) {
                return Err(format!("gate {pos} touches qubit {q} beyond {}", self.num_qubits));
            }
        }
        if self.project() != self.per_qubit_order {
            return Err("per_qubit_order is not the projection of gates".into());
        }
        Ok(())
    }

    /// Earliest unexecuted gate on `qubit`, provided it is the next
    /// unexecuted gate on every one of its operands.
    pub fn next_ready_gate(&self, executed: &HashSet<GateId>, qubit: usize) -> Option<&Gate> {
        let id = *self.per_qubit_order[qubit]
            .iter()
            .find(|id| !executed.contains(id))?;
        let gate = &self.gates[id];
        let ready = gate.operands.iter().all(|&q| {
            self.per_qubit_order[q]
                .iter()
                .find(|other| !executed.contains(other))
                == Some(&id)
        });
        ready.then_some(gate)
    }

    /// Dependency-only (ASAP) layering: each gate sits one layer after the
    /// latest gate preceding it on any of its operands.
    pub fn nominal_layers(&self) -> Vec<Vec<GateId>> {
        let mut depth = vec![0usize; self.num_qubits];
        let mut layers: Vec<Vec<GateId>> = Vec::new();
        for g in &self.gates {
            let level = g.operands.iter().map(|&q| depth[q]).max().unwrap_or(0);
            for &q in &g.operands {
                depth[q] = level + 1;
            }
            if layers.len() <= level {
                layers.resize_with(level + 1, Vec::new);
            }
            layers[level].push(g.id);
        }
        layers
    }

    /// Canonical text dump, one gate per line, preceded by a `qubits <n>` header.
    pub fn dump(&self) -> String {
        let mut out = format!("qubits {}\n", self.num_qubits);
        for g in &self.gates {
            match g.kind {
                GateKind::U3 { theta, phi, lambda } => {
                    let _ = writeln!(
                        out,
                        "U3 q{} {} {} {}",
                        g.operands[0],
                        fmt_sig12(theta),
                        fmt_sig12(phi),
                        fmt_sig12(lambda)
                    );
                }
                GateKind::CZ => {
                    let _ = writeln!(out, "CZ q{} q{}", g.operands[0], g.operands[1]);
                }
            }
        }
        out
    }

    /// Parses the format written by [`Circuit::dump`].
    pub fn parse_dump(text: &str) -> Result<Circuit, QasmError> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let words: Vec<&str> = raw.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            let syntax = |msg: &str| QasmError::Syntax {
                line,
                column: 1,
                message: msg.to_string(),
            };
            match (words[0], circuit.as_mut()) {
                ("qubits", None) if words.len() == 2 => {
                    let n = words[1].parse().map_err(|_| syntax("bad qubit count"))?;
                    circuit = Some(Circuit::new(n));
                }
                ("U3", Some(c)) if words.len() == 5 => {
                    let q = parse_qubit(words[1], c.num_qubits, line)?;
                    let mut angles = [0.0f64; 3];
                    for (slot, w) in angles.iter_mut().zip(&words[2..]) {
                        *slot = w.parse().map_err(|_| syntax("bad angle"))?;
                    }
                    if angles.iter().any(|a| !a.is_finite()) {
                        return Err(syntax("non-finite angle"));
                    }
                    let [theta, phi, lambda] = angles;
                    c.push(GateKind::U3 { theta, phi, lambda }, vec![q], line);
                }
                ("CZ", Some(c)) if words.len() == 3 => {
                    let a = parse_qubit(words[1], c.num_qubits, line)?;
                    let b = parse_qubit(words[2], c.num_qubits, line)?;
                    if a == b {
                        return Err(syntax("CZ operands must differ"));
                    }
                    c.push(GateKind::CZ, vec![a, b], line);
                }
                _ => return Err(syntax("unrecognised dump line")),
            }
        }
        circuit.ok_or(QasmError::Syntax {
            line: 1,
            column: 1,
            message: "missing `qubits` header".into(),
        })
    }
}

fn parse_qubit(word: &str, n: usize, line: usize) -> Result<usize, QasmError> {
    let index: usize = word
        .strip_prefix('q')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| QasmError::Syntax {
            line,
            column: 1,
            message: format!("bad qubit `{word}`"),
        })?;
    if index >= n {
        return Err(QasmError::QubitOutOfRange {
            line,
            index,
            size: n,
        });
    }
    Ok(index)
}

/// Formats with 12 significant digits, trimming trailing zeros, switching
/// to scientific notation for very large or very small magnitudes.
pub fn fmt_sig12(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let exp = value.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{value:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{value:.11e}");
        let (mantissa, exponent) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exponent}")
    }
}
