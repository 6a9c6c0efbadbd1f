//! OpenQASM 3 export and a parser for the subset the exporter emits.
//!
//! Each gate becomes pre rotations, a three-CNOT core for the interaction and
//! post rotations, preceded by a `// cartan <left_site>` marker so a reader
//! can regroup the operations and rebuild the 4x4 unitaries.

use nalgebra::{Matrix2, Matrix4};

use super::gate::{self, kron, rx, ry, rz, GATE_PARAMS};
use super::BrickworkCircuit;
use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::mps::Pauli;

const MARKER: &str = "// cartan ";

#[derive(Clone, Debug, PartialEq)]
pub struct QasmOp {
    pub name: String,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct QasmProgram {
    pub n_qubits: usize,
    pub ops: Vec<QasmOp>,
    /// `(left_site, unitary)` for every marked gate, in program order.
    pub gates: Vec<(usize, Matrix4<C64>)>,
}

impl QasmProgram {
    pub fn cx_count(&self) -> usize {
        self.ops.iter().filter(|o| o.name == "cx").count()
    }
}

fn push_rotations(out: &mut String, q: usize, p: &[f64]) {
    // u = Rz(p0) Rx(p1) Rz(p2), so Rz(p2) acts first
    for (name, t) in [("rz", p[2]), ("rx", p[1]), ("rz", p[0])] {
        if t != 0.0 {
            out.push_str(&format!("{}({}) q[{}];\n", name, t, q));
        }
    }
}

/// QASM 3 text for `circuit` with full parameters `full`.
pub fn export_qasm(circuit: &BrickworkCircuit, full: &[f64]) -> Result<String> {
    if full.len() != circuit.full_param_count() {
        return Err(Error::Dimension(format!(
            "expected {} full parameters, got {}",
            circuit.full_param_count(),
            full.len()
        )));
    }
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    out.push_str(&format!("qubit[{}] q;\n", circuit.n_qubits()));
    for (g, &(_, s)) in circuit.gates().iter().enumerate() {
        let p = &full[g * GATE_PARAMS..(g + 1) * GATE_PARAMS];
        let (a, b) = (s, s + 1);
        out.push_str(&format!("{}{}\n", MARKER, s));
        push_rotations(&mut out, a, &p[gate::PRE0..gate::PRE0 + 3]);
        push_rotations(&mut out, b, &p[gate::PRE1..gate::PRE1 + 3]);
        let (x, y, z) = (p[gate::INTERACTION], p[gate::INTERACTION + 1], p[gate::INTERACTION + 2]);
        out.push_str(&format!("s q[{b}];\ncx q[{b}], q[{a}];\n"));
        out.push_str(&format!("s q[{a}];\nrz({}) q[{a}];\n", -2.0 * z));
        out.push_str(&format!("z q[{b}];\nh q[{b}];\nry({}) q[{b}];\n", -2.0 * x));
        out.push_str(&format!("cx q[{a}], q[{b}];\n"));
        out.push_str(&format!("h q[{b}];\nz q[{b}];\nry({}) q[{b}];\n", 2.0 * y));
        out.push_str(&format!("cx q[{b}], q[{a}];\nsdg q[{a}];\n"));
        push_rotations(&mut out, a, &p[gate::POST0..gate::POST0 + 3]);
        push_rotations(&mut out, b, &p[gate::POST1..gate::POST1 + 3]);
    }
    Ok(out)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_qubit(tok: &str, line: usize) -> Result<usize> {
    let t = tok.trim();
    t.strip_prefix("q[")
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| parse_err(line, format!("bad qubit operand '{}'", t)))
}

fn single_qubit_matrix(op: &QasmOp) -> Option<Matrix2<C64>> {
    let i = C64::new(0.0, 1.0);
    Some(match (op.name.as_str(), op.params.as_slice()) {
        ("s", []) => Matrix2::new(ONE, ZERO, ZERO, i),
        ("sdg", []) => Matrix2::new(ONE, ZERO, ZERO, -i),
        ("z", []) => Pauli::Z.matrix(),
        ("x", []) => Pauli::X.matrix(),
        ("h", []) => (Pauli::X.matrix() + Pauli::Z.matrix()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ("rz", [t]) => rz(*t),
        ("rx", [t]) => rx(*t),
        ("ry", [t]) => ry(*t),
        _ => return None,
    })
}

fn cx_matrix(control_is_left: bool) -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    let perm: [usize; 4] = if control_is_left { [0, 1, 3, 2] } else { [0, 3, 2, 1] };
    for (c, &r) in perm.iter().enumerate() {
        m[(r, c)] = ONE;
    }
    m
}

/// Parses QASM produced by [`export_qasm`] and rebuilds each marked gate.
pub fn parse_qasm(text: &str) -> Result<QasmProgram> {
    let mut n_qubits = None;
    let mut ops = Vec::new();
    let mut gates: Vec<(usize, Matrix4<C64>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if let Some(rest) = s.strip_prefix(MARKER) {
            let site = rest.trim().parse().map_err(|_| parse_err(line, "bad gate marker"))?;
            gates.push((site, Matrix4::identity()));
            continue;
        }
        if s.is_empty() || s.starts_with("//") || s.starts_with("OPENQASM") || s.starts_with("include") {
            continue;
        }
        let body = s.strip_suffix(';').ok_or_else(|| parse_err(line, "missing ';'"))?.trim();
        if let Some(decl) = body.strip_prefix("qubit[") {
            let n = decl
                .split(']')
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(line, "bad qubit declaration"))?;
            n_qubits = Some(n);
            continue;
        }
        let n = n_qubits.ok_or_else(|| parse_err(line, "operation before qubit declaration"))?;
        let (head, operands) = match body.find(" q[") {
            Some(p) => body.split_at(p),
            None => return Err(parse_err(line, "missing operands")),
        };
        let (name, params) = match head.find('(') {
            Some(p) => {
                let inner = head[p + 1..].strip_suffix(')').ok_or_else(|| parse_err(line, "unclosed '('"))?;
                let params = inner
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| parse_err(line, format!("bad angle '{}'", v))))
                    .collect::<Result<Vec<_>>>()?;
                (head[..p].to_string(), params)
            }
            None => (head.to_string(), Vec::new()),
        };
        let qubits = operands.split(',').map(|t| parse_qubit(t, line)).collect::<Result<Vec<_>>>()?;
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            return Err(parse_err(line, format!("qubit {} out of range", q)));
        }
        let op = QasmOp { name, params, qubits };
        if let Some((site, u)) = gates.last_mut() {
            let local = |q: usize| -> Result<usize> {
                match q.checked_sub(*site) {
                    Some(d) if d < 2 => Ok(d),
                    _ => Err(parse_err(line, format!("qubit {} outside gate at {}", q, site))),
                }
            };
            let m = if op.name == "cx" {
                if op.qubits.len() != 2 || !op.params.is_empty() {
                    return Err(parse_err(line, "cx takes two qubits"));
                }
                let (c, t) = (local(op.qubits[0])?, local(op.qubits[1])?);
                if c == t {
                    return Err(parse_err(line, "cx on a single qubit"));
                }
                cx_matrix(c == 0)
            } else {
                let one = single_qubit_matrix(&op)
                    .filter(|_| op.qubits.len() == 1)
                    .ok_or_else(|| parse_err(line, format!("unsupported operation '{}'", op.name)))?;
                if local(op.qubits[0])? == 0 {
                    kron(&one, &Matrix2::identity())
                } else {
                    kron(&Matrix2::identity(), &one)
                }
            };
            *u = m * *u;
        } else {
            return Err(parse_err(line, "operation outside a marked gate"));
        }
        ops.push(op);
    }
    let n_qubits = n_qubits.ok_or_else(|| parse_err(0, "no qubit declaration"))?;
    Ok(QasmProgram { n_qubits, ops, gates })
}
