//! String order, segment entanglement spectra and the edge fit on the four
//! 100-site ground states.

use spt_core::dmrg::{default_initial_state, default_sector, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern};
use spt_core::observables::{
    fit_edge_decay, magnetization_profile, string_order, StringOrderRequest, StringParity,
};

fn main() -> spt_core::Result<()> {
    env_logger::init();
    for (j0, j1) in [(0.5, 1.0), (1.0, 0.5), (1.0, -1.0), (1.0, -2.0)] {
        let c = CouplingPattern::new(j0, j1, 100)?;
        let cfg = DmrgConfig { target_sector: default_sector(&c), ..Default::default() };
        let gs = run_dmrg(&build_hamiltonian_mpo(&c)?, &default_initial_state(&c)?, &cfg)?;
        let psi = &gs.state;
        let e = string_order(psi, &StringOrderRequest::new(StringParity::Even, vec![2, 10, 20]))?;
        let o = string_order(psi, &StringOrderRequest::new(StringParity::Odd, vec![2, 10, 20]))?;
        println!("({}, {}) S^E {:?}  S^O {:?}", j0, j1, e.means, o.means);
        let spread: f64 = e.windows.iter().filter(|w| w.l == 20).map(|w| (w.value - e.means[2]).abs()).fold(0.0, f64::max);
        println!("  S^E l=20 window spread {:.2e}", spread);
        for l in 1..=6 {
            let r = psi.reduced_density_matrix(&(0..l).collect::<Vec<_>>())?;
            let s = r.spectrum();
            println!("  l={} cut {} : {:.8?}  gap {:.3e}", l, if l % 2 == 1 { "J0" } else { "J1" }, &s[..4.min(s.len())], s[0] - s[1]);
        }
        if j0 < j1 {
            let prof = magnetization_profile(psi, &(0..100).collect::<Vec<_>>())?;
            println!("  m[0..8] {:?}", prof[..8].iter().map(|e| e.mean).collect::<Vec<_>>());
            for cells in [3, 4, 5, 6, 8, 10, 15, 25, 50] {
                match fit_edge_decay(&prof, cells) {
                    Ok(f) => println!("  cells {} xi {:.4} +- {:.4} A {:.4} used {}", cells, f.xi, f.xi_stderr, f.amplitude, f.cells_used.len()),
                    Err(err) => println!("  cells {} error {}", cells, err),
                }
            }
        }
    }
    Ok(())
}
