//! Approximate quantum compiling: fit brickwork parameters so that the
//! circuit applied to `|0...0>` reproduces a target MPS.
//!
//! The cost is `C = 1 - |<T|U(theta)|0>|^2`. Gradients come from one forward
//! pass storing the state before each half-layer and one backward pass
//! applying inverted half-layers to the target. Within a half-layer the gates
//! act on disjoint pairs, so a left/right sweep over blocks gives each gate
//! its 4x4 environment `E` with `<beta|V|phi> = sum E[o,i] U[o,i]`.
//! The gradient is exact when no truncation occurs in either pass.

use std::time::Instant;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::circuit::{gate_unitary_with_grad, BrickworkCircuit, GATE_PARAMS};
use crate::error::{bail, Error, Result};
use crate::linalg::{matmul, TruncationPolicy, C64, ONE, ZERO};
use crate::mps::Mps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default cumulative discarded weight above which evaluations warn.
pub const DISCARD_WARNING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 0.01, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AqcConfig {
    /// Stop once the fidelity with the (compressed) target reaches this.
    pub target_fidelity: f64,
    pub max_iterations: usize,
    pub adam: AdamConfig,
    /// Truncation while optimizing. `None` uses `chi = 2 chi_T`, cut 1e-12.
    pub simulation_policy: Option<TruncationPolicy>,
    /// Truncation for the reported fidelities.
    pub report_policy: TruncationPolicy,
    pub alarm_threshold: f64,
    /// Seeds the optional jitter added to the starting parameters.
    pub seed: u64,
    pub init_jitter: f64,
    pub wall_clock_limit_seconds: Option<f64>,
    pub log_every: usize,
}

impl Default for AqcConfig {
    fn default() -> Self {
        AqcConfig {
            target_fidelity: 0.99,
            max_iterations: 2000,
            adam: AdamConfig::default(),
            simulation_policy: None,
            report_policy: TruncationPolicy { chi_max: 256, svd_min: 0.0, trunc_cut: 1e-14 },
            alarm_threshold: DISCARD_WARNING,
            seed: 0,
            init_jitter: 0.0,
            wall_clock_limit_seconds: None,
            log_every: 100,
        }
    }
}

impl AqcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_fidelity > 0.0 && self.target_fidelity <= 1.0) {
            bail!(InvalidArgument, "target fidelity {} outside (0, 1]", self.target_fidelity);
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.epsilon > 0.0) {
            bail!(InvalidArgument, "invalid Adam hyperparameters");
        }
        if !(self.init_jitter >= 0.0) || !(self.alarm_threshold >= 0.0) {
            bail!(InvalidArgument, "jitter and alarm threshold must be non-negative");
        }
        if let Some(p) = &self.simulation_policy {
            p.validate()?;
        }
        self.report_policy.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    MaxIterations,
    WallClock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqcResult {
    /// Best reduced parameters seen.
    pub params: Vec<f64>,
    /// Fidelity of `params` with the optimization target (report policy).
    pub fidelity_vs_compressed: f64,
    /// Fidelity with the uncompressed state, when one was supplied.
    pub fidelity_vs_uncompressed: Option<f64>,
    /// Best fidelity under the simulation policy.
    pub simulated_fidelity: f64,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub max_discarded_weight: f64,
}

#[derive(Clone, Debug)]
pub struct CostEvaluation {
    pub cost: f64,
    pub fidelity: f64,
    /// `<T|U|0>` with `T` normalized.
    pub overlap: C64,
    pub discarded_weight: f64,
    pub warning: Option<String>,
}

impl CostEvaluation {
    fn new(overlap: C64, discarded_weight: f64, alarm: f64) -> CostEvaluation {
        let fidelity = overlap.norm_sqr().min(1.0);
        let warning = (discarded_weight > alarm)
            .then(|| format!("truncation discarded weight {:.3e}; cost and gradient are approximate", discarded_weight));
        CostEvaluation { cost: 1.0 - fidelity, fidelity, overlap, discarded_weight, warning }
    }
}

fn check_target(target: &Mps, circuit: &BrickworkCircuit) -> Result<Mps> {
    if target.n_sites() != circuit.n_qubits() {
        bail!(Dimension, "target has {} sites, circuit {} qubits", target.n_sites(), circuit.n_qubits());
    }
    target.clone().normalize()
}

/// Default optimization policy for a target.
pub fn simulation_policy_for(target: &Mps) -> TruncationPolicy {
    TruncationPolicy { chi_max: 2 * target.max_bond_dim(), svd_min: 1e-14, trunc_cut: 1e-12 }
}

/// Cost for reduced parameters.
pub fn cost(target: &Mps, circuit: &BrickworkCircuit, reduced: &[f64], policy: &TruncationPolicy) -> Result<CostEvaluation> {
    let t = check_target(target, circuit)?;
    let full = circuit.expand(reduced)?;
    let (psi, dw) = circuit.prepare(&full, policy)?;
    Ok(CostEvaluation::new(t.inner(&psi)?, dw, DISCARD_WARNING))
}

/// Cost and gradient with respect to reduced parameters.
pub fn cost_and_gradient(
    target: &Mps,
    circuit: &BrickworkCircuit,
    reduced: &[f64],
    policy: &TruncationPolicy,
) -> Result<(CostEvaluation, Vec<f64>)> {
    let full = circuit.expand(reduced)?;
    let (eval, g) = cost_and_full_gradient(target, circuit, &full, policy)?;
    Ok((eval, circuit.gather(&g)?))
}

/// Cost and gradient with respect to all 15 parameters of every gate.
pub fn cost_and_full_gradient(
    target: &Mps,
    circuit: &BrickworkCircuit,
    full: &[f64],
    policy: &TruncationPolicy,
) -> Result<(CostEvaluation, Vec<f64>)> {
    policy.validate()?;
    let t = check_target(target, circuit)?;
    if full.len() != circuit.full_param_count() {
        bail!(Dimension, "expected {} full parameters, got {}", circuit.full_param_count(), full.len());
    }
    let derivs: Vec<(Matrix4<C64>, Vec<Matrix4<C64>>)> = full.chunks(GATE_PARAMS).map(gate_unitary_with_grad).collect();
    let us: Vec<Matrix4<C64>> = derivs.iter().map(|d| d.0).collect();
    let k = circuit.n_half_layers();
    let mut forward = Vec::with_capacity(k);
    let mut psi = Mps::zero_state(circuit.n_qubits())?;
    let mut dw = 0.0;
    for h in 0..k {
        forward.push(psi.clone());
        dw += circuit.apply_half_layer(h, &us, &mut psi, policy, false)?;
    }
    let overlap = t.inner(&psi)?;
    let mut grad = vec![0.0; full.len()];
    let mut beta = t;
    for h in (0..k).rev() {
        let envs = layer_environments(&beta, &forward[h], circuit, h, &us);
        for (g, e) in circuit.layer_gates(h).zip(envs) {
            for (p, du) in derivs[g].1.iter().enumerate() {
                let d: C64 = e.iter().zip(du.iter()).map(|(a, b)| a * b).sum();
                grad[g * GATE_PARAMS + p] = -2.0 * (overlap.conj() * d).re;
            }
        }
        if h > 0 {
            dw += circuit.apply_half_layer(h, &us, &mut beta, policy, true)?;
        }
    }
    Ok((CostEvaluation::new(overlap, dw, DISCARD_WARNING), grad))
}

/// Row-major block tensor `[l, d, r]`.
struct Block {
    data: Vec<C64>,
    l: usize,
    d: usize,
    r: usize,
}

fn site_block(psi: &Mps, s: usize) -> Block {
    let t = psi.tensor(s);
    Block { data: t.data().to_vec(), l: t.shape()[0], d: 2, r: t.shape()[2] }
}

fn pair_block(psi: &Mps, s: usize) -> Block {
    let (a, b) = (psi.tensor(s), psi.tensor(s + 1));
    let (l, m, r) = (a.shape()[0], a.shape()[2], b.shape()[2]);
    Block { data: matmul(2 * l, m, 2 * r, a.data(), b.data()), l, d: 4, r }
}

fn apply_gate(b: &Block, u: &Matrix4<C64>) -> Block {
    let mut out = vec![ZERO; b.data.len()];
    for il in 0..b.l {
        for ir in 0..b.r {
            for o in 0..4 {
                let mut acc = ZERO;
                for i in 0..4 {
                    acc += u[(o, i)] * b.data[(il * 4 + i) * b.r + ir];
                }
                out[(il * 4 + o) * b.r + ir] = acc;
            }
        }
    }
    Block { data: out, ..*b }
}

/// `env'[c, c'] = sum conj(bra[a,o,c]) env[a,a'] ket[a',o,c']`.
fn transfer_left(env: &[C64], bra: &Block, ket: &Block) -> Vec<C64> {
    let t1 = matmul(bra.l, ket.l, ket.d * ket.r, env, &ket.data);
    let mut bh = vec![ZERO; bra.data.len()];
    let rows = bra.l * bra.d;
    for i in 0..rows {
        for j in 0..bra.r {
            bh[j * rows + i] = bra.data[i * bra.r + j].conj();
        }
    }
    matmul(bra.r, rows, ket.r, &bh, &t1)
}

/// `env'[a, a'] = sum conj(bra[a,o,c]) ket[a',o,c'] env[c,c']`.
fn transfer_right(env: &[C64], bra: &Block, ket: &Block) -> Vec<C64> {
    let y = env_times_ket(env, bra.r, ket);
    // y[a', o, c] -> env'[a, a'] = sum_{o,c} conj(bra[a,o,c]) y[a',o,c]
    let cols = bra.d * bra.r;
    let mut yt = vec![ZERO; y.len()];
    for i in 0..ket.l {
        for j in 0..cols {
            yt[j * ket.l + i] = y[i * cols + j];
        }
    }
    let bc: Vec<C64> = bra.data.iter().map(|z| z.conj()).collect();
    matmul(bra.l, cols, ket.l, &bc, &yt)
}

/// `y[a', o, c] = sum_{c'} ket[a',o,c'] env[c,c']`.
fn env_times_ket(env: &[C64], bra_r: usize, ket: &Block) -> Vec<C64> {
    let mut et = vec![ZERO; env.len()];
    for c in 0..bra_r {
        for cp in 0..ket.r {
            et[cp * bra_r + c] = env[c * ket.r + cp];
        }
    }
    matmul(ket.l * ket.d, ket.r, bra_r, &ket.data, &et)
}

/// `E[o, i] = sum conj(bra[a,o,c]) left[a,a'] ket[a',i,c'] right[c,c']`.
fn gate_environment(left: &[C64], bra: &Block, ket: &Block, right: &[C64]) -> Matrix4<C64> {
    let y = env_times_ket(right, bra.r, ket);
    let z = matmul(bra.l, ket.l, 4 * bra.r, left, &y);
    let mut e = Matrix4::zeros();
    for a in 0..bra.l {
        for o in 0..4 {
            for c in 0..bra.r {
                let b = bra.data[(a * 4 + o) * bra.r + c].conj();
                for i in 0..4 {
                    e[(o, i)] += b * z[(a * 4 + i) * bra.r + c];
                }
            }
        }
    }
    e
}

/// Environments of the gates in half-layer `h`, given the backward state
/// `bra` after the layer and the forward state `ket` before it.
fn layer_environments(
    bra: &Mps,
    ket: &Mps,
    circuit: &BrickworkCircuit,
    h: usize,
    us: &[Matrix4<C64>],
) -> Vec<Matrix4<C64>> {
    let n = circuit.n_qubits();
    let gates = circuit.layer_gates(h);
    let mut lefts = vec![None; n];
    for g in gates.clone() {
        lefts[circuit.gates()[g].1] = Some(g);
    }
    // (bra block, ket block, gate-applied ket block, gate index)
    let mut blocks = Vec::new();
    let mut s = 0;
    while s < n {
        match lefts[s] {
            Some(g) => {
                let kp = pair_block(ket, s);
                let kg = apply_gate(&kp, &us[g]);
                blocks.push((pair_block(bra, s), Some(kp), kg, Some(g)));
                s += 2;
            }
            None => {
                blocks.push((site_block(bra, s), None, site_block(ket, s), None));
                s += 1;
            }
        }
    }
    let mut rights = vec![vec![ONE]; blocks.len() + 1];
    for b in (0..blocks.len()).rev() {
        rights[b] = transfer_right(&rights[b + 1], &blocks[b].0, &blocks[b].2);
    }
    let mut out = Vec::with_capacity(gates.len());
    let mut left = vec![ONE];
    for (b, (bb, kp, kg, g)) in blocks.iter().enumerate() {
        if let (Some(kp), Some(_)) = (kp, g) {
            out.push(gate_environment(&left, bb, kp, &rights[b + 1]));
        }
        left = transfer_left(&left, bb, kg);
    }
    out
}

/// Adam on the reduced parameters from `initial` against `target`. The
/// result reports fidelities with `target` and, if given, `uncompressed`.
pub fn optimize(
    circuit: &BrickworkCircuit,
    initial: &[f64],
    target: &Mps,
    uncompressed: Option<&Mps>,
    config: &AqcConfig,
) -> Result<AqcResult> {
    config.validate()?;
    if initial.len() != circuit.parameter_count() {
        bail!(Dimension, "expected {} parameters, got {}", circuit.parameter_count(), initial.len());
    }
    let t = check_target(target, circuit)?;
    let policy = config.simulation_policy.unwrap_or_else(|| simulation_policy_for(&t));
    let adam = config.adam;
    let start = Instant::now();
    let n = initial.len();
    let mut theta = initial.to_vec();
    if config.init_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for x in theta.iter_mut() {
            *x += rng.random_range(-config.init_jitter..config.init_jitter);
        }
    }
    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let mut best = (f64::NEG_INFINITY, theta.clone());
    let mut history = Vec::new();
    let mut max_dw: f64 = 0.0;
    let mut terminated_by = Termination::MaxIterations;
    let mut iterations = 0;
    let mut warned = false;
    for it in 0..=config.max_iterations {
        let (eval, grad) = cost_and_gradient(&t, circuit, &theta, &policy)?;
        if !eval.cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            log::error!("divergence at iteration {}; parameters: {:?}", it, theta);
            return Err(Error::Divergence { iteration: it, message: "non-finite cost or gradient".into(), params: theta });
        }
        if eval.discarded_weight > config.alarm_threshold && !warned {
            log::warn!("truncation discarded weight {:.3e} at iteration {}; gradient is approximate", eval.discarded_weight, it);
            warned = true;
        }
        max_dw = max_dw.max(eval.discarded_weight);
        history.push(eval.cost);
        if eval.fidelity > best.0 {
            best = (eval.fidelity, theta.clone());
        }
        iterations = it;
        if config.log_every > 0 && it % config.log_every == 0 {
            log::info!("aqc iteration {}: fidelity {:.6}", it, eval.fidelity);
        }
        if eval.fidelity >= config.target_fidelity {
            terminated_by = Termination::TargetReached;
            break;
        }
        if config.wall_clock_limit_seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s) {
            terminated_by = Termination::WallClock;
            break;
        }
        if it == config.max_iterations {
            break;
        }
        let step = (it + 1) as i32;
        let (c1, c2) = (1.0 - adam.beta1.powi(step), 1.0 - adam.beta2.powi(step));
        for k in 0..n {
            m[k] = adam.beta1 * m[k] + (1.0 - adam.beta1) * grad[k];
            v[k] = adam.beta2 * v[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
            theta[k] -= adam.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + adam.epsilon);
        }
    }
    let (simulated_fidelity, params) = best;
    let (psi, _) = circuit.prepare(&circuit.expand(&params)?, &config.report_policy)?;
    let fidelity_vs_compressed = t.fidelity(&psi)?;
    let fidelity_vs_uncompressed = uncompressed.map(|u| u.fidelity(&psi)).transpose()?;
    Ok(AqcResult {
        params,
        fidelity_vs_compressed,
        fidelity_vs_uncompressed,
        simulated_fidelity,
        cost_history: history,
        iterations,
        terminated_by,
        max_discarded_weight: max_dw,
    })
}
