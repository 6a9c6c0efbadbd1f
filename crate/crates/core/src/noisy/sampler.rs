//! Trajectory simulation and shot sampling.

use std::collections::BTreeMap;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NoiseModel, ShotConfig};
use crate::circuit::{gate::kron, BrickworkCircuit};
use crate::error::{bail, Result};
use crate::linalg::{TruncationPolicy, C64, ONE, ZERO};
use crate::mps::{Mps, Pauli, PauliString};

/// Widest register simulated as a dense statevector under [`Backend::Auto`].
pub const DENSE_TRAJECTORY_CAP: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense up to [`DENSE_TRAJECTORY_CAP`] qubits, MPS beyond.
    #[default]
    Auto,
    Dense,
    Mps,
}

/// Random stream `stream` of the generator seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Decorrelated child seed of `seed` for stream `tag`.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(tag))
}

/// `exp(-i theta ZZ / 2)`.
fn zz_phase(theta: f64) -> Matrix4<C64> {
    let (m, p) = (C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0));
    Matrix4::from_diagonal(&nalgebra::Vector4::new(m, p, p, m))
}

/// Two-qubit Pauli with code `4 * left + right` in [`Pauli::ALL`] order.
pub(crate) fn pauli_pair(code: u8) -> Matrix4<C64> {
    let (a, b) = (Pauli::ALL[(code / 4) as usize], Pauli::ALL[(code % 4) as usize]);
    kron(&a.matrix(), &b.matrix())
}

fn anticommutes_with_zz(code: u8) -> bool {
    let flips = |p: u8| p == 1 || p == 2;
    flips(code / 4) != flips(code % 4)
}

/// Gates that can influence the reduced state of `sites` at the end of the
/// circuit. Everything else acts on qubits that are traced out.
pub(crate) fn light_cone(circuit: &BrickworkCircuit, sites: &[usize]) -> Vec<bool> {
    let mut active = vec![false; circuit.n_qubits()];
    for &s in sites {
        active[s] = true;
    }
    let mut cone = vec![false; circuit.n_gates()];
    for (g, &(_, q)) in circuit.gates().iter().enumerate().rev() {
        if active[q] || active[q + 1] {
            cone[g] = true;
            active[q] = true;
            active[q + 1] = true;
        }
    }
    cone
}

/// Pure state of one trajectory.
#[derive(Clone, Debug)]
pub(crate) enum TrajectoryState {
    Dense { n: usize, amps: Vec<C64> },
    Chain(Mps),
}

impl TrajectoryState {
    fn zero(n: usize, backend: Backend) -> Result<TrajectoryState> {
        let dense = match backend {
            Backend::Auto => n <= DENSE_TRAJECTORY_CAP,
            Backend::Dense => {
                if n > crate::mps::STATEVECTOR_CAP {
                    bail!(InvalidArgument, "dense trajectories of {} qubits exceed {}", n, crate::mps::STATEVECTOR_CAP);
                }
                true
            }
            Backend::Mps => false,
        };
        Ok(if dense {
            let mut amps = vec![ZERO; 1 << n];
            amps[0] = ONE;
            TrajectoryState::Dense { n, amps }
        } else {
            TrajectoryState::Chain(Mps::zero_state(n)?)
        })
    }

    fn apply(&mut self, u: &Matrix4<C64>, left: usize, policy: &TruncationPolicy) -> Result<()> {
        match self {
            TrajectoryState::Chain(psi) => {
                psi.apply_two_site_unchecked(u, left, policy)?;
            }
            TrajectoryState::Dense { n, amps } => {
                let shift = *n - 2 - left;
                let stride = 1usize << shift;
                for hi in (0..amps.len()).step_by(4 * stride) {
                    for lo in 0..stride {
                        let base = hi + lo;
                        let idx = [base, base + stride, base + 2 * stride, base + 3 * stride];
                        let v = idx.map(|i| amps[i]);
                        for (r, &i) in idx.iter().enumerate() {
                            amps[i] = u[(r, 0)] * v[0] + u[(r, 1)] * v[1] + u[(r, 2)] * v[2] + u[(r, 3)] * v[3];
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn expect(&self, op: &PauliString) -> Result<f64> {
        match self {
            TrajectoryState::Chain(psi) => psi.expect_pauli(op),
            TrajectoryState::Dense { n, amps } => {
                let i = C64::new(0.0, 1.0);
                let mut flip = 0usize;
                for (&s, &p) in op.ops() {
                    if matches!(p, Pauli::X | Pauli::Y) {
                        flip |= 1 << (n - 1 - s);
                    }
                }
                let mut acc = ZERO;
                for (b, a) in amps.iter().enumerate() {
                    if *a == ZERO {
                        continue;
                    }
                    let mut phase = ONE;
                    for (&s, &p) in op.ops() {
                        let bit = (b >> (n - 1 - s)) & 1;
                        match (p, bit) {
                            (Pauli::Y, 0) => phase *= i,
                            (Pauli::Y, _) => phase *= -i,
                            (Pauli::Z, 1) => phase = -phase,
                            _ => {}
                        }
                    }
                    acc += amps[b ^ flip].conj() * phase * a;
                }
                Ok(acc.re * f64::from(op.sign()))
            }
        }
    }

    /// Sampler of joint outcomes of `meas`, given as `(site, basis)` in
    /// strictly increasing site order.
    pub(crate) fn sampler(&self, meas: &[(usize, Pauli)]) -> Result<OutcomeSampler> {
        match self {
            TrajectoryState::Chain(psi) => Ok(OutcomeSampler::Chain(BitSampler::new(psi, meas)?)),
            TrajectoryState::Dense { n, amps } => {
                if meas.windows(2).any(|w| w[0].0 >= w[1].0) || meas.last().is_some_and(|m| m.0 >= *n) {
                    bail!(InvalidArgument, "measured sites must be increasing and on the chain");
                }
                let mut rot = amps.clone();
                for &(s, p) in meas {
                    if p == Pauli::Z {
                        continue;
                    }
                    let rows = basis_rows(p);
                    let bit = 1usize << (n - 1 - s);
                    for b in 0..rot.len() {
                        if b & bit == 0 {
                            let (a0, a1) = (rot[b], rot[b | bit]);
                            rot[b] = rows[0][0] * a0 + rows[0][1] * a1;
                            rot[b | bit] = rows[1][0] * a0 + rows[1][1] * a1;
                        }
                    }
                }
                let k = meas.len();
                let mut probs = vec![0.0; 1 << k];
                for (b, a) in rot.iter().enumerate() {
                    let mut o = 0;
                    for &(s, _) in meas {
                        o = (o << 1) | ((b >> (n - 1 - s)) & 1);
                    }
                    probs[o] += a.norm_sqr();
                }
                let mut acc = 0.0;
                let cdf = probs
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Ok(OutcomeSampler::Table { cdf, k })
            }
        }
    }
}

pub(crate) enum OutcomeSampler {
    Chain(BitSampler),
    Table { cdf: Vec<f64>, k: usize },
}

impl OutcomeSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u8]) {
        match self {
            OutcomeSampler::Chain(s) => s.sample(rng, out),
            OutcomeSampler::Table { cdf, k } => {
                let total = cdf[cdf.len() - 1];
                let u = rng.random::<f64>() * total;
                let o = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
                for (j, b) in out.iter_mut().enumerate().take(*k) {
                    *b = ((o >> (k - 1 - j)) & 1) as u8;
                }
            }
        }
    }
}

pub(crate) struct Trajectory<T> {
    /// Twirl instance the shots belong to.
    pub instance: usize,
    pub shots: usize,
    pub value: T,
}

/// Splits `shots` as evenly as possible over `twirls` instances.
fn split_shots(shots: usize, twirls: usize) -> Vec<usize> {
    (0..twirls).map(|k| shots / twirls + usize::from(k < shots % twirls)).collect()
}

/// Draws the gates hit by an error, each independently with probability
/// `p`, by skipping geometrically distributed gaps.
fn draw_errors<R: Rng + ?Sized>(gates: &[usize], p: f64, rng: &mut R, pattern: &mut Vec<(u32, u8)>) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        pattern.extend(gates.iter().map(|&g| (g as u32, rng.random_range(1..16u8))));
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !(gap < (gates.len() - pos) as f64) {
            return;
        }
        pos += gap as usize;
        pattern.push((gates[pos] as u32, rng.random_range(1..16u8)));
        pos += 1;
    }
}

/// Runs `cfg.shots` noisy executions spread over `cfg.twirls` twirl
/// instances, keeping only gates in the light cone of `sites`. Shots with
/// the same error pattern share one simulated state; `visit` is called once
/// per distinct state with its shot count and the instance's random stream.
/// Results are ordered by instance and then by pattern.
pub(crate) fn run_trajectories<T, F>(
    circuit: &BrickworkCircuit,
    full: &[f64],
    noise: &NoiseModel,
    cfg: &ShotConfig,
    sites: &[usize],
    seed: u64,
    mut visit: F,
) -> Result<Vec<Trajectory<T>>>
where
    F: FnMut(&TrajectoryState, usize, &mut ChaCha8Rng) -> Result<T>,
{
    let us = circuit.unitaries(full)?;
    let cone = light_cone(circuit, sites);
    let active: Vec<usize> = (0..us.len()).filter(|&g| cone[g]).collect();
    let p = noise.p2q * noise.amplification;
    let theta = noise.coherent_zz * noise.amplification;
    let per_twirl = split_shots(cfg.shots, cfg.twirls);
    let mut out = Vec::new();
    for (k, &shots) in per_twirl.iter().enumerate() {
        let mut frame_rng = stream_rng(seed, 2 * k as u64);
        let mut rng = stream_rng(seed, 2 * k as u64 + 1);
        // Conjugating the coherent error by a random Pauli flips the sign of
        // its ZZ generator whenever the two anticommute.
        let dressed: Vec<Matrix4<C64>> = us
            .iter()
            .map(|u| {
                if theta == 0.0 {
                    return *u;
                }
                let flip = cfg.pauli_twirling && anticommutes_with_zz(frame_rng.random_range(0..16u8));
                zz_phase(if flip { -theta } else { theta }) * u
            })
            .collect();
        let mut patterns: BTreeMap<Vec<(u32, u8)>, usize> = BTreeMap::new();
        for _ in 0..shots {
            let mut pattern = Vec::new();
            draw_errors(&active, p, &mut rng, &mut pattern);
            *patterns.entry(pattern).or_default() += 1;
        }
        let mut sim = PrefixSimulator::new(circuit, &dressed, &active, cfg)?;
        for (pattern, count) in patterns {
            let state = sim.run(&pattern)?;
            out.push(Trajectory { instance: k, shots: count, value: visit(&state, count, &mut rng)? });
        }
    }
    Ok(out)
}

/// Simulates error patterns in lexicographic order, restarting each one from
/// the latest stored state it shares with the previous pattern.
struct PrefixSimulator<'a> {
    circuit: &'a BrickworkCircuit,
    dressed: &'a [Matrix4<C64>],
    active: &'a [usize],
    policy: TruncationPolicy,
    root: TrajectoryState,
    /// `(position in active, errors applied, state before that gate)`.
    stack: Vec<(usize, usize, TrajectoryState)>,
    last: Vec<(u32, u8)>,
}

impl<'a> PrefixSimulator<'a> {
    fn new(
        circuit: &'a BrickworkCircuit,
        dressed: &'a [Matrix4<C64>],
        active: &'a [usize],
        cfg: &ShotConfig,
    ) -> Result<Self> {
        let root = TrajectoryState::zero(circuit.n_qubits(), cfg.backend)?;
        Ok(PrefixSimulator { circuit, dressed, active, policy: cfg.policy, root, stack: Vec::new(), last: Vec::new() })
    }

    fn run(&mut self, pattern: &[(u32, u8)]) -> Result<TrajectoryState> {
        // a snapshot before gate `active[pos]` with `j` errors stays valid if
        // the first `j` errors agree and the next one is not earlier
        while let Some((pos, j, _)) = self.stack.last() {
            let gate = self.active[*pos] as u32;
            let same_prefix = pattern.len() >= *j && self.last.len() >= *j && pattern[..*j] == self.last[..*j];
            if same_prefix && pattern.get(*j).is_none_or(|e| e.0 >= gate) {
                break;
            }
            self.stack.pop();
        }
        let (mut pos, mut j, mut state) = match self.stack.last() {
            Some((pos, j, s)) => (*pos, *j, s.clone()),
            None => (0, 0, self.root.clone()),
        };
        while pos < self.active.len() {
            let g = self.active[pos];
            let mut u = self.dressed[g];
            if let Some(&(eg, code)) = pattern.get(j) {
                if eg as usize == g {
                    if self.stack.last().is_none_or(|s| s.0 != pos) {
                        self.stack.push((pos, j, state.clone()));
                    }
                    u = pauli_pair(code) * u;
                    j += 1;
                }
            }
            state.apply(&u, self.circuit.gates()[g].1, &self.policy)?;
            pos += 1;
        }
        self.last = pattern.to_vec();
        Ok(state)
    }
}

/// Rows of the change of basis that maps eigenstates of `p` to `|0>, |1>`.
fn basis_rows(p: Pauli) -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(h, 0.0);
    match p {
        Pauli::X => [[r, r], [r, -r]],
        Pauli::Y => [[r, C64::new(0.0, -h)], [r, C64::new(0.0, h)]],
        Pauli::Z | Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
    }
}

struct SiteBlock {
    left: usize,
    right: usize,
    /// `a[b]` is the `left x right` slice for outcome `b`, row-major.
    a: [Vec<C64>; 2],
    out: Option<usize>,
}

/// Draws joint outcomes of single-qubit measurements from an MPS.
///
/// With the orthogonality center on the first measured site, the state left
/// of it is an orthonormal frame, so its bond index is sampled first and the
/// remaining sites are sampled one after another conditioned on a single
/// boundary vector. Unmeasured sites inside the range are sampled in `Z` and
/// dropped, which marginalizes them.
pub(crate) struct BitSampler {
    first_cdf: Vec<f64>,
    blocks: Vec<SiteBlock>,
}

impl BitSampler {
    pub(crate) fn new(psi: &Mps, meas: &[(usize, Pauli)]) -> Result<BitSampler> {
        if meas.is_empty() {
            return Ok(BitSampler { first_cdf: vec![1.0], blocks: Vec::new() });
        }
        if meas.windows(2).any(|w| w[0].0 >= w[1].0) || meas[meas.len() - 1].0 >= psi.n_sites() {
            bail!(InvalidArgument, "measured sites must be increasing and on the chain");
        }
        let (first, last) = (meas[0].0, meas[meas.len() - 1].0);
        let psi = psi.clone().canonicalize(first)?;
        let mut blocks = Vec::with_capacity(last - first + 1);
        let mut m = meas.iter().enumerate().peekable();
        for site in first..=last {
            let t = psi.tensor(site);
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let (basis, out) = match m.peek() {
                Some(&(k, &(s, p))) if s == site => {
                    m.next();
                    (p, Some(k))
                }
                _ => (Pauli::Z, None),
            };
            let rows = basis_rows(basis);
            let d = t.data();
            let mut a = [vec![ZERO; l * r], vec![ZERO; l * r]];
            for (b, ab) in a.iter_mut().enumerate() {
                for il in 0..l {
                    for ir in 0..r {
                        ab[il * r + ir] = rows[b][0] * d[(il * 2) * r + ir] + rows[b][1] * d[(il * 2 + 1) * r + ir];
                    }
                }
            }
            blocks.push(SiteBlock { left: l, right: r, a, out });
        }
        let b0 = &blocks[0];
        let mut first_cdf = Vec::with_capacity(b0.left);
        let mut acc = 0.0;
        for il in 0..b0.left {
            for ab in &b0.a {
                acc += ab[il * b0.right..(il + 1) * b0.right].iter().map(|x| x.norm_sqr()).sum::<f64>();
            }
            first_cdf.push(acc);
        }
        if !(acc > 0.0) {
            bail!(Numerical, "cannot sample from a zero state");
        }
        Ok(BitSampler { first_cdf, blocks })
    }

    /// Writes one outcome per measured site into `out`.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u8]) {
        if self.blocks.is_empty() {
            return;
        }
        let total = self.first_cdf[self.first_cdf.len() - 1];
        let u = rng.random::<f64>() * total;
        let a0 = self.first_cdf.partition_point(|c| *c <= u).min(self.first_cdf.len() - 1);
        let mut v = vec![ZERO; self.blocks[0].left];
        v[a0] = ONE;
        let mut w = [Vec::new(), Vec::new()];
        for blk in &self.blocks {
            let mut p = [0.0; 2];
            for b in 0..2 {
                w[b].clear();
                w[b].resize(blk.right, ZERO);
                for (il, x) in v.iter().enumerate() {
                    if *x == ZERO {
                        continue;
                    }
                    let row = &blk.a[b][il * blk.right..(il + 1) * blk.right];
                    for (acc, y) in w[b].iter_mut().zip(row) {
                        *acc += x * y;
                    }
                }
                p[b] = w[b].iter().map(|x| x.norm_sqr()).sum();
            }
            let bit = usize::from(rng.random::<f64>() * (p[0] + p[1]) >= p[0]);
            if let Some(k) = blk.out {
                out[k] = bit as u8;
            }
            let norm = p[bit].sqrt();
            v = w[bit].iter().map(|x| x / norm).collect();
        }
    }
}

/// Measurement twirl and readout error on one recorded bit.
pub(crate) fn read_bit<R: Rng + ?Sized>(bit: u8, p01: f64, p10: f64, twirl: bool, rng: &mut R) -> u8 {
    let t = u8::from(twirl && rng.random::<bool>());
    let physical = bit ^ t;
    let p = if physical == 0 { p01 } else { p10 };
    let flip = u8::from(p > 0.0 && rng.random::<f64>() < p);
    physical ^ flip ^ t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_brickwork;

    fn chain_and_dense(seed: u64) -> (TrajectoryState, TrajectoryState) {
        let c = build_brickwork(6, 2.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
        let amps = psi.to_statevector().unwrap();
        (TrajectoryState::Chain(psi), TrajectoryState::Dense { n: 6, amps })
    }

    fn frequencies(s: &OutcomeSampler, k: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut counts = vec![0usize; 1 << k];
        let mut out = vec![0u8; k];
        for _ in 0..n {
            s.sample(rng, &mut out);
            counts[out.iter().fold(0, |a, &b| 2 * a + b as usize)] += 1;
        }
        counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    #[test]
    fn samplers_follow_the_born_rule() {
        let (chain, dense) = chain_and_dense(4);
        let TrajectoryState::Dense { amps, .. } = &dense else { unreachable!() };
        // marginal of sites 1 and 3 in Z
        let mut want = [0.0; 4];
        for (i, a) in amps.iter().enumerate() {
            want[2 * ((i >> 4) & 1) + ((i >> 2) & 1)] += a.norm_sqr();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        for state in [&chain, &dense] {
            let f = frequencies(&state.sampler(&[(1, Pauli::Z), (3, Pauli::Z)]).unwrap(), 2, n, &mut rng);
            for k in 0..4 {
                let sd = (want[k] * (1.0 - want[k]) / n as f64).sqrt();
                assert!((f[k] - want[k]).abs() < 5.0 * sd + 1e-12, "{} {} {}", k, f[k], want[k]);
            }
        }
    }

    #[test]
    fn rotated_bases_reproduce_expectations() {
        let (chain, dense) = chain_and_dense(9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        for (p, q) in [(Pauli::X, Pauli::Y), (Pauli::Y, Pauli::Z), (Pauli::X, Pauli::X)] {
            let op = PauliString::new([(1, p), (4, q)]).unwrap();
            let exact = chain.expect(&op).unwrap();
            assert!((dense.expect(&op).unwrap() - exact).abs() < 1e-12);
            for state in [&chain, &dense] {
                let f = frequencies(&state.sampler(&[(1, p), (4, q)]).unwrap(), 2, n, &mut rng);
                let mean = f[0] - f[1] - f[2] + f[3];
                assert!((mean - exact).abs() < 5.0 / (n as f64).sqrt(), "{:?} {:?}", p, q);
            }
        }
    }

    #[test]
    fn light_cone_of_an_edge_site() {
        let c = build_brickwork(8, 1.0, None).unwrap();
        // even layer then odd layer: site 0 sees gate (0,1), then (1,2) before it
        let cone = light_cone(&c, &[0]);
        let kept: Vec<(usize, usize)> = c.gates().iter().zip(&cone).filter(|(_, k)| **k).map(|(g, _)| *g).collect();
        assert_eq!(kept.len(), 1);
        assert!(light_cone(&c, &[3, 4]).iter().filter(|k| **k).count() > 2);
    }

    #[test]
    fn backends_and_prefix_reuse_agree() {
        let c = build_brickwork(6, 2.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise = NoiseModel { coherent_zz: 0.2, ..NoiseModel::depolarizing(0.2) };
        let op = PauliString::z_string(2, 2);
        let run = |backend| {
            let cfg = ShotConfig { shots: 300, twirls: 3, backend, ..ShotConfig::default() };
            run_trajectories(&c, &full, &noise, &cfg, &[2, 3], 5, |s, n, _| Ok((n, s.expect(&op)?))).unwrap()
        };
        let (a, b) = (run(Backend::Dense), run(Backend::Mps));
        assert_eq!(a.iter().map(|t| t.value.0).sum::<usize>(), 300);
        assert!(a.len() > 10);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.instance, x.shots), (y.instance, y.shots));
            assert!((x.value.1 - y.value.1).abs() < 1e-10);
        }
        // independent re-simulation of every pattern without the cache
        let cfg = ShotConfig { shots: 300, twirls: 3, backend: Backend::Dense, ..ShotConfig::default() };
        let again = run_trajectories(&c, &full, &noise, &cfg, &[2, 3], 5, |s, n, _| Ok((n, s.expect(&op)?))).unwrap();
        for (x, y) in a.iter().zip(&again) {
            assert_eq!(x.value.1, y.value.1);
        }
    }

    #[test]
    fn error_draws_have_the_right_rate() {
        let gates: Vec<usize> = (0..50).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut total = 0;
        let trials = 20_000;
        for _ in 0..trials {
            let mut pat = Vec::new();
            draw_errors(&gates, 0.03, &mut rng, &mut pat);
            assert!(pat.windows(2).all(|w| w[0].0 < w[1].0));
            total += pat.len();
        }
        let mean = total as f64 / trials as f64;
        let sd = (50.0 * 0.03 * 0.97 / trials as f64).sqrt();
        assert!((mean - 1.5).abs() < 5.0 * sd, "{}", mean);
    }
}
