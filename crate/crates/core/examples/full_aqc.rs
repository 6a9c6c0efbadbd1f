//! Compiles a compressed 100-site ground state: `full_aqc <j0> <j1> <chi> <L> <iterations>`.

use std::time::Instant;

use spt_core::aqc::{optimize, AqcConfig};
use spt_core::circuit::{build_brickwork, initial_parameters};
use spt_core::dmrg::{default_initial_state, default_sector, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern};
use spt_core::mps::compress;

fn main() -> spt_core::Result<()> {
    env_logger::init();
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let [j0, j1, chi, layers, iterations] = args[..] else {
        panic!("usage: full_aqc <j0> <j1> <chi> <L> <iterations>");
    };
    let c = CouplingPattern::new(j0, j1, 100)?;
    let cfg = DmrgConfig { target_sector: default_sector(&c), ..Default::default() };
    let gs = run_dmrg(&build_hamiltonian_mpo(&c)?, &default_initial_state(&c)?, &cfg)?;
    let (target, f) = compress(&gs.state, chi as usize, 50)?;
    println!("compressed fidelity {:.6}", f);
    let phase = c.phase();
    let circuit = build_brickwork(100, layers, Some(phase))?;
    let theta = initial_parameters(&circuit, phase)?;
    let t = Instant::now();
    let acfg = AqcConfig { max_iterations: iterations as usize, ..Default::default() };
    let r = optimize(&circuit, &theta, &target, Some(&gs.state), &acfg)?;
    println!(
        "compressed {:.6} uncompressed {:.6} after {} iterations, {:?}, max discarded {:.2e} [{:.1}s]",
        r.fidelity_vs_compressed,
        r.fidelity_vs_uncompressed.unwrap_or(f64::NAN),
        r.iterations,
        r.terminated_by,
        r.max_discarded_weight,
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
