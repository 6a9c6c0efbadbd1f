//! Compiles the 20-site ground state at (j0, j1) = (1, 0.5) into an L = 3
//! brickwork circuit.

use std::time::Instant;

use spt_core::aqc::{optimize, AqcConfig};
use spt_core::circuit::{build_brickwork, initial_parameters};
use spt_core::dmrg::{default_initial_state, default_sector, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern};

fn main() -> spt_core::Result<()> {
    env_logger::init();
    let c = CouplingPattern::new(1.0, 0.5, 20)?;
    let cfg = DmrgConfig { target_sector: default_sector(&c), ..Default::default() };
    let gs = run_dmrg(&build_hamiltonian_mpo(&c)?, &default_initial_state(&c)?, &cfg)?;
    println!("E = {:.8} chi = {}", gs.energy, gs.max_chi);
    let phase = c.phase();
    let circuit = build_brickwork(20, 3.0, Some(phase))?;
    let theta = initial_parameters(&circuit, phase)?;
    let t = Instant::now();
    let r = optimize(&circuit, &theta, &gs.state, None, &AqcConfig::default())?;
    println!(
        "fidelity {:.6} (simulated {:.6}) after {} iterations, {:?}, max discarded {:.2e} [{:.1}s]",
        r.fidelity_vs_compressed,
        r.simulated_fidelity,
        r.iterations,
        r.terminated_by,
        r.max_discarded_weight,
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
