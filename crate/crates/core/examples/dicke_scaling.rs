//! Finite-size scaling of IPR_2 for rotor probes near the pole: the power-law
//! exponent and its finite-difference estimates.

use spinscale::scaling::{finite_tau, fit_power_law};
use spinscale::sweep::{group_series, run_sweep, JGrid, SweepSpec};
use spinscale::spectra::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let probes = vec![(0.02, 0.0), (0.06, 0.0), (0.14, 0.0)];
    let spec = SweepSpec::new(Model::Ho, 0.84, 0.0, JGrid::new(500, 3000, 500)?, probes, vec![2.0]);
    let summary = run_sweep(&spec)?;
    for s in group_series(&summary.records)? {
        let series = s.order(2.0).unwrap();
        let fit = fit_power_law(series, None)?;
        let tau = finite_tau(series)?;
        println!(
            "({:.2}, {:.2}): tau_2 = {:.4} (R^2 {:.5}), segments {:.3?}",
            s.key.probe_q,
            s.key.probe_p,
            fit.tau,
            fit.r2,
            tau.taus()
        );
    }
    Ok(())
}
