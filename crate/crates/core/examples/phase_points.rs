//! Ground states of the four reference points of the phase diagram.

use std::time::Instant;

use spt_core::dmrg::{default_initial_state, default_sector, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern};

fn main() -> spt_core::Result<()> {
    env_logger::init();
    for (j0, j1) in [(0.5, 1.0), (1.0, 0.5), (1.0, -1.0), (1.0, -2.0)] {
        let c = CouplingPattern::new(j0, j1, 100)?;
        let cfg = DmrgConfig { target_sector: default_sector(&c), ..Default::default() };
        let t = Instant::now();
        let r = run_dmrg(&build_hamiltonian_mpo(&c)?, &default_initial_state(&c)?, &cfg)?;
        println!(
            "({}, {}) E = {:.6} chi = {} sweeps = {} converged = {} M = {:.6} [{:.1}s]",
            j0,
            j1,
            r.energy,
            r.max_chi,
            r.sweeps_used,
            r.converged,
            r.magnetization,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
