//! Multifractal analysis of an LMG probe inside the regular well, followed by
//! the same analysis on synthetic profiles with known dimensions.

use spinscale::scaling::{default_q_grid, ipr_q, mfa, ScalingSeries};
use spinscale::spectra::Model;
use spinscale::sweep::{group_series, run_sweep, JGrid, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qs = default_q_grid();
    let spec = SweepSpec::new(Model::Lmg, 0.84, -2.0, JGrid::new(100, 600, 100)?, vec![(-0.5, 0.0)], qs.clone());
    let series = group_series(&run_sweep(&spec)?.records)?;
    let r = mfa(&series[0].per_q, None)?;
    println!("LMG (-0.5, 0): {} with D0 = {:.4}, min R^2 = {:.5}", r.verdict.label(), r.d0, r.min_r2);
    for o in r.orders.iter().step_by(8) {
        println!("  q = {:.1}: tau = {:+.4}, D_q = {:?}", o.q, o.tau, o.d_q.map(|d| (d * 1e4).round() / 1e4));
    }

    let dims: Vec<usize> = (1..=6).map(|i| 1000 * i + 1).collect();
    let synthetic = |profile: &dyn Fn(usize) -> Vec<f64>| -> Vec<(f64, ScalingSeries)> {
        qs.iter()
            .map(|&q| {
                let pts = dims.iter().map(|&n| (n, ipr_q(&profile(n), q).unwrap())).collect();
                (q, ScalingSeries::new(pts).unwrap())
            })
            .collect()
    };
    let gaussian = |n: usize| {
        let w: Vec<f64> = (0..n).map(|i| (-((i as f64 - n as f64 / 2.0).powi(2)) / (2.0 * n as f64)).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    println!("gaussian width sqrt(N): D0 = {:.4}", mfa(&synthetic(&gaussian), None)?.d0);
    println!("uniform: D0 = {:.6}", mfa(&synthetic(&uniform), None)?.d0);
    Ok(())
}
