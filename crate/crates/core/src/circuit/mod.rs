//! Brickwork circuits of fifteen-parameter two-qubit gates.
//!
//! Half-layers are stored in time order, the first acting directly on
//! `|0...0>`. Layers strictly alternate alignment and the first is always
//! even-aligned, so an odd number of half-layers has even-aligned layers at
//! both ends.
//!
//! Two parameter vectors are used. The *full* vector holds 15 entries per gate
//! in time order. The *reduced* vector drops parameters that cannot change the
//! prepared state: pre-rotations are removed on every gate except the first to
//! touch a qubit (the previous gate's post-rotation absorbs them), and on those
//! first gates the leading `Rz` acting on `|0>` is dropped as well.

pub mod gate;
mod qasm;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::lattice::PhaseLabel;
use crate::linalg::{TruncationPolicy, C64};
use crate::mps::Mps;

pub use gate::{gate_unitary, gate_unitary_with_grad, makhlin_invariants, singlet_gate_params, GATE_PARAMS};
pub use qasm::{export_qasm, parse_qasm, QasmOp, QasmProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Even,
    Odd,
}

impl Alignment {
    pub fn left_sites(self, n_qubits: usize) -> Vec<usize> {
        let start = match self {
            Alignment::Even => 0,
            Alignment::Odd => 1,
        };
        (start..n_qubits.saturating_sub(1)).step_by(2).collect()
    }

    fn other(self) -> Alignment {
        match self {
            Alignment::Even => Alignment::Odd,
            Alignment::Odd => Alignment::Even,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLayer {
    pub alignment: Alignment,
    pub sites: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub cnot_depth: usize,
    pub cnot_count: usize,
    pub parameter_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrickworkCircuit {
    n_qubits: usize,
    layers: Vec<HalfLayer>,
    /// Half-layer holding the singlet preparation, if the circuit was built
    /// for a phase.
    singlet_layer: Option<usize>,
    /// `(layer, left_site)` of every gate in time order.
    gates: Vec<(usize, usize)>,
    /// Full-vector index of each reduced parameter.
    reduced_map: Vec<usize>,
}

/// Builds the ansatz with `layers` full layers (half-integers allowed).
///
/// With `init = EvenHaldane` the singlet preparation occupies the first
/// even-aligned half-layer; an integer `layers` gains one half-layer for it.
/// With `init = OddHaldane` it is folded into the last odd-aligned half-layer.
pub fn build_brickwork(n_qubits: usize, layers: f64, init: Option<PhaseLabel>) -> Result<BrickworkCircuit> {
    if n_qubits < 2 || n_qubits % 2 != 0 {
        bail!(InvalidArgument, "brickwork needs an even number of qubits, got {}", n_qubits);
    }
    let twice = 2.0 * layers;
    if !(twice >= 1.0) || twice.fract() != 0.0 || twice > 1e6 {
        bail!(InvalidArgument, "layer count {} is not a positive multiple of 1/2", layers);
    }
    let mut k = twice as usize;
    let singlet_layer = match init {
        None => None,
        Some(PhaseLabel::EvenHaldane) => {
            if k % 2 == 0 {
                k += 1;
            }
            Some(0)
        }
        Some(PhaseLabel::OddHaldane) => {
            // last odd-aligned layer; layer h is odd-aligned when h is odd
            if k < 2 {
                bail!(InvalidArgument, "the odd-phase singlet layer needs at least one odd-aligned half-layer");
            }
            Some(if k % 2 == 0 { k - 1 } else { k - 2 })
        }
        Some(other) => bail!(InvalidArgument, "no singlet initialization for the {} phase", other),
    };
    let mut align = Alignment::Even;
    let mut hl = Vec::with_capacity(k);
    for _ in 0..k {
        hl.push(HalfLayer { alignment: align, sites: align.left_sites(n_qubits) });
        align = align.other();
    }
    BrickworkCircuit::from_layers(n_qubits, hl, singlet_layer)
}

impl BrickworkCircuit {
    /// Validates an explicit list of half-layers.
    pub fn from_layers(n_qubits: usize, layers: Vec<HalfLayer>, singlet_layer: Option<usize>) -> Result<BrickworkCircuit> {
        if n_qubits < 2 {
            bail!(InvalidArgument, "a circuit needs at least two qubits");
        }
        if layers.is_empty() {
            bail!(InvalidArgument, "a circuit needs at least one half-layer");
        }
        for (h, l) in layers.iter().enumerate() {
            if l.sites != l.alignment.left_sites(n_qubits) {
                bail!(InvalidArgument, "half-layer {} does not cover the {:?}-aligned pairs", h, l.alignment);
            }
        }
        if let Some(s) = singlet_layer {
            if s >= layers.len() {
                bail!(OutOfRange, "singlet layer {} of {}", s, layers.len());
            }
        }
        let gates: Vec<(usize, usize)> =
            layers.iter().enumerate().flat_map(|(h, l)| l.sites.iter().map(move |&s| (h, s))).collect();
        let mut touched = vec![false; n_qubits];
        let mut reduced_map = Vec::new();
        for (g, &(_, s)) in gates.iter().enumerate() {
            let base = g * GATE_PARAMS;
            for (q, pre) in [(s, gate::PRE0), (s + 1, gate::PRE1)] {
                if !touched[q] {
                    reduced_map.push(base + pre);
                    reduced_map.push(base + pre + 1);
                    touched[q] = true;
                }
            }
            reduced_map.extend(base + gate::INTERACTION..base + GATE_PARAMS);
        }
        Ok(BrickworkCircuit { n_qubits, layers, singlet_layer, gates, reduced_map })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> &[HalfLayer] {
        &self.layers
    }

    pub fn n_half_layers(&self) -> usize {
        self.layers.len()
    }

    /// Layer count `L` in units of full layers.
    pub fn total_layers(&self) -> f64 {
        self.layers.len() as f64 / 2.0
    }

    pub fn singlet_layer(&self) -> Option<usize> {
        self.singlet_layer
    }

    /// `(half-layer, left_site)` of each gate in time order.
    pub fn gates(&self) -> &[(usize, usize)] {
        &self.gates
    }

    pub fn n_gates(&self) -> usize {
        self.gates.len()
    }

    /// Range of gate indices in half-layer `h`.
    pub fn layer_gates(&self, h: usize) -> std::ops::Range<usize> {
        let start: usize = self.layers[..h].iter().map(|l| l.sites.len()).sum();
        start..start + self.layers[h].sites.len()
    }

    pub fn full_param_count(&self) -> usize {
        self.gates.len() * GATE_PARAMS
    }

    /// Length of the reduced parameter vector.
    pub fn parameter_count(&self) -> usize {
        self.reduced_map.len()
    }

    pub fn reduced_map(&self) -> &[usize] {
        &self.reduced_map
    }

    pub fn metrics(&self) -> CircuitMetrics {
        let busy = self.layers.iter().filter(|l| !l.sites.is_empty()).count();
        CircuitMetrics { cnot_depth: 3 * busy, cnot_count: 3 * self.gates.len(), parameter_count: self.parameter_count() }
    }

    fn check_reduced(&self, reduced: &[f64]) -> Result<()> {
        if reduced.len() != self.parameter_count() {
            bail!(Dimension, "expected {} parameters, got {}", self.parameter_count(), reduced.len());
        }
        Ok(())
    }

    fn check_full(&self, full: &[f64]) -> Result<()> {
        if full.len() != self.full_param_count() {
            bail!(Dimension, "expected {} full parameters, got {}", self.full_param_count(), full.len());
        }
        Ok(())
    }

    /// Full per-gate parameters for a reduced vector; dropped entries are 0.
    pub fn expand(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        self.check_reduced(reduced)?;
        let mut full = vec![0.0; self.full_param_count()];
        for (k, &f) in self.reduced_map.iter().enumerate() {
            full[f] = reduced[k];
        }
        Ok(full)
    }

    /// Reduced gradient from a gradient over the full vector.
    pub fn gather(&self, full_grad: &[f64]) -> Result<Vec<f64>> {
        self.check_full(full_grad)?;
        Ok(self.reduced_map.iter().map(|&f| full_grad[f]).collect())
    }

    /// Rewrites arbitrary full parameters into the reduced form without
    /// changing the state prepared from `|0...0>` (up to global phase).
    /// Pre-rotations are merged into the previous post-rotation on the same
    /// qubit; on first-touch gates the leading `Rz` is dropped.
    pub fn reduce(&self, full: &[f64]) -> Result<Vec<f64>> {
        self.check_full(full)?;
        let mut p = full.to_vec();
        // last (gate, post offset) on each qubit
        let mut last: Vec<Option<usize>> = vec![None; self.n_qubits];
        for (g, &(_, s)) in self.gates.iter().enumerate() {
            let base = g * GATE_PARAMS;
            for (q, pre, post) in [(s, gate::PRE0, gate::POST0), (s + 1, gate::PRE1, gate::POST1)] {
                match last[q] {
                    None => p[base + pre + 2] = 0.0,
                    Some(prev) => {
                        let pre_m = gate::euler(&p[base + pre..base + pre + 3]);
                        let post_m = gate::euler(&p[prev..prev + 3]);
                        let merged = gate::zxz_decompose(&(pre_m * post_m));
                        p[prev..prev + 3].copy_from_slice(&merged);
                        p[base + pre..base + pre + 3].fill(0.0);
                    }
                }
                last[q] = Some(base + post);
            }
        }
        Ok(self.reduced_map.iter().map(|&f| p[f]).collect())
    }

    /// Gate unitaries for full parameters, in time order.
    pub fn unitaries(&self, full: &[f64]) -> Result<Vec<Matrix4<C64>>> {
        self.check_full(full)?;
        Ok(full.chunks(GATE_PARAMS).map(gate_unitary).collect())
    }

    /// Applies half-layer `h` built from `unitaries` (all gates of the
    /// circuit) to `state`. Returns the summed discarded weight.
    pub fn apply_half_layer(
        &self,
        h: usize,
        unitaries: &[Matrix4<C64>],
        state: &mut Mps,
        policy: &TruncationPolicy,
        adjoint: bool,
    ) -> Result<f64> {
        let mut dw = 0.0;
        for g in self.layer_gates(h) {
            let site = self.gates[g].1;
            let u = if adjoint { unitaries[g].adjoint() } else { unitaries[g] };
            dw += state.apply_two_site_unchecked(&u, site, policy)?;
        }
        Ok(dw)
    }

    /// `U(full)|0...0>` under `policy`, with the summed discarded weight.
    pub fn prepare(&self, full: &[f64], policy: &TruncationPolicy) -> Result<(Mps, f64)> {
        policy.validate()?;
        let us = self.unitaries(full)?;
        let mut psi = Mps::zero_state(self.n_qubits)?;
        let mut dw = 0.0;
        for h in 0..self.layers.len() {
            dw += self.apply_half_layer(h, &us, &mut psi, policy, false)?;
        }
        Ok((psi, dw))
    }

    /// Circuit JSON with full per-gate parameters.
    pub fn to_json(&self, full: &[f64]) -> Result<String> {
        self.check_full(full)?;
        let mut g = 0;
        let layers = self
            .layers
            .iter()
            .map(|l| JsonLayer {
                alignment: l.alignment,
                gates: l
                    .sites
                    .iter()
                    .map(|&s| {
                        let params = full[g * GATE_PARAMS..(g + 1) * GATE_PARAMS].to_vec();
                        g += 1;
                        JsonGate { left_site: s, params }
                    })
                    .collect(),
            })
            .collect();
        let doc = JsonCircuit { n_qubits: self.n_qubits, singlet_layer: self.singlet_layer, layers };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses circuit JSON, returning the skeleton and full parameters.
    pub fn from_json(text: &str) -> Result<(BrickworkCircuit, Vec<f64>)> {
        let doc: JsonCircuit = serde_json::from_str(text)?;
        let mut full = Vec::new();
        let mut layers = Vec::with_capacity(doc.layers.len());
        for l in doc.layers {
            let mut sites = Vec::with_capacity(l.gates.len());
            for g in l.gates {
                if g.params.len() != GATE_PARAMS {
                    bail!(InvalidArgument, "gate on site {} has {} parameters", g.left_site, g.params.len());
                }
                sites.push(g.left_site);
                full.extend(g.params);
            }
            layers.push(HalfLayer { alignment: l.alignment, sites });
        }
        Ok((BrickworkCircuit::from_layers(doc.n_qubits, layers, doc.singlet_layer)?, full))
    }
}

#[derive(Serialize, Deserialize)]
struct JsonCircuit {
    n_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    singlet_layer: Option<usize>,
    layers: Vec<JsonLayer>,
}

#[derive(Serialize, Deserialize)]
struct JsonLayer {
    alignment: Alignment,
    gates: Vec<JsonGate>,
}

#[derive(Serialize, Deserialize)]
struct JsonGate {
    left_site: usize,
    params: Vec<f64>,
}

pub fn metrics(c: &BrickworkCircuit) -> CircuitMetrics {
    c.metrics()
}

/// Reduced parameters preparing the singlet product of `phase` from
/// `|0...0>`: singlet gates in the designated layer, identity elsewhere.
pub fn initial_parameters(c: &BrickworkCircuit, phase: PhaseLabel) -> Result<Vec<f64>> {
    let (want, default_layer) = match phase {
        PhaseLabel::EvenHaldane => (Alignment::Even, c.layers.iter().position(|l| l.alignment == Alignment::Even)),
        PhaseLabel::OddHaldane => (Alignment::Odd, c.layers.iter().rposition(|l| l.alignment == Alignment::Odd)),
        other => bail!(InvalidArgument, "no singlet initialization for the {} phase", other),
    };
    let layer = match c.singlet_layer {
        Some(h) if c.layers[h].alignment == want => Some(h),
        _ => default_layer,
    };
    let Some(h) = layer else {
        bail!(InvalidArgument, "circuit has no {:?}-aligned half-layer for the singlet preparation", want);
    };
    let n = c.n_qubits;
    let mut full = vec![0.0; c.full_param_count()];
    let sp = singlet_gate_params();
    for g in c.layer_gates(h) {
        let s = c.gates[g].1;
        // the odd phase leaves the two edge spins untouched
        if phase == PhaseLabel::OddHaldane && (s == 0 || s + 1 == n - 1) {
            continue;
        }
        full[g * GATE_PARAMS..(g + 1) * GATE_PARAMS].copy_from_slice(&sp);
    }
    c.reduce(&full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::singlet_reference_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_metrics() {
        for (l, depth, count) in [(3.0, 18, 891), (3.5, 21, 1041), (6.5, 39, 1932)] {
            let m = build_brickwork(100, l, None).unwrap().metrics();
            assert_eq!((m.cnot_depth, m.cnot_count), (depth, count), "L = {}", l);
        }
    }

    #[test]
    fn small_counts() {
        let c = build_brickwork(4, 1.0, None).unwrap();
        assert_eq!(c.n_gates(), 3);
        let m = c.metrics();
        assert_eq!((m.cnot_depth, m.cnot_count), (6, 9));
        // 3 gates * 9 + 4 first-touch qubits * 2
        assert_eq!(m.parameter_count, 35);
    }

    #[test]
    fn even_init_adds_a_half_layer() {
        assert_eq!(build_brickwork(8, 3.0, Some(PhaseLabel::EvenHaldane)).unwrap().n_half_layers(), 7);
        assert_eq!(build_brickwork(8, 3.5, Some(PhaseLabel::EvenHaldane)).unwrap().n_half_layers(), 7);
        let odd = build_brickwork(8, 3.0, Some(PhaseLabel::OddHaldane)).unwrap();
        assert_eq!(odd.n_half_layers(), 6);
        assert_eq!(odd.singlet_layer(), Some(5));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(build_brickwork(5, 1.0, None).is_err());
        assert!(build_brickwork(4, 0.25, None).is_err());
        assert!(build_brickwork(4, 0.0, None).is_err());
    }

    #[test]
    fn initial_parameters_prepare_reference() {
        for phase in [PhaseLabel::EvenHaldane, PhaseLabel::OddHaldane] {
            for n in [4, 8] {
                let c = build_brickwork(n, 2.0, Some(phase)).unwrap();
                let theta = initial_parameters(&c, phase).unwrap();
                let (psi, _) = c.prepare(&c.expand(&theta).unwrap(), &TruncationPolicy::lossless()).unwrap();
                let reference = singlet_reference_state(phase, n).unwrap();
                assert!((psi.fidelity(&reference).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reduction_preserves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = build_brickwork(8, 2.5, None).unwrap();
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let reduced = c.reduce(&full).unwrap();
        let policy = TruncationPolicy::lossless();
        let (a, _) = c.prepare(&full, &policy).unwrap();
        let (b, _) = c.prepare(&c.expand(&reduced).unwrap(), &policy).unwrap();
        assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = build_brickwork(6, 1.5, Some(PhaseLabel::EvenHaldane)).unwrap();
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random::<f64>()).collect();
        let text = c.to_json(&full).unwrap();
        let (back, params) = BrickworkCircuit::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(params, full);
    }
}
