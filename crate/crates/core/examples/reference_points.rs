//! Compression and singlet-product overlaps for the four reference points.

use spt_core::circuit::{build_brickwork, initial_parameters};
use spt_core::dmrg::{default_initial_state, default_sector, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, singlet_reference_state, CouplingPattern};
use spt_core::linalg::TruncationPolicy;
use spt_core::mps::compress;

fn main() -> spt_core::Result<()> {
    env_logger::init();
    for ((j0, j1), chi, layers) in [((0.5, 1.0), 5, 3.0), ((1.0, 0.5), 5, 3.5), ((1.0, -1.0), 8, 3.5), ((1.0, -2.0), 8, 6.5)] {
        let c = CouplingPattern::new(j0, j1, 100)?;
        let mpo = build_hamiltonian_mpo(&c)?;
        let cfg = DmrgConfig { target_sector: default_sector(&c), ..Default::default() };
        let gs = run_dmrg(&mpo, &default_initial_state(&c)?, &cfg)?;
        let (small, f) = compress(&gs.state, chi, 50)?;
        let phase = c.phase();
        let reference = singlet_reference_state(phase, 100)?;
        let circuit = build_brickwork(100, layers, Some(phase))?;
        let theta = initial_parameters(&circuit, phase)?;
        let (prepared, _) = circuit.prepare(&circuit.expand(&theta)?, &TruncationPolicy::lossless())?;
        println!(
            "({}, {}) E = {:.6} chi {} -> {}: F = {:.6} E_c = {:.6}; singlet F = {:.4} (circuit {:.4})",
            j0,
            j1,
            gs.energy,
            gs.max_chi,
            small.max_bond_dim(),
            f,
            mpo.expectation(&small)?,
            reference.fidelity(&gs.state)?,
            prepared.fidelity(&gs.state)?
        );
    }
    Ok(())
}
