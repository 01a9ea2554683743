//! LMG spectrum split by parity, the classical critical points of the same
//! couplings and the near-degenerate ground doublet.

use spinscale::classical::{find_critical_points, seed_grid, separatrix_edge, Couplings};
use spinscale::spectra::{solve, Model, ModelParams};
use spinscale::spin::Parity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (alpha, k, j) = (0.84, -2.0, 200);
    let c = Couplings::new(Model::Lmg, alpha, k);
    let crit = find_critical_points(&c, &seed_grid(12))?;
    for p in &crit.points {
        println!("critical ({:+.6}, {:+.6}) {:?} E = {:.6}", p.q, p.p, p.kind, p.energy);
    }
    println!("separatrix meets P = 0 at Q = {:.6}", separatrix_edge(&c)?);

    let basis = solve(&ModelParams::lmg(alpha, k, j)?, true)?;
    for parity in [Parity::Positive, Parity::Negative] {
        let block = basis.block(parity).unwrap();
        let e: Vec<f64> = block.eigenvalues.iter().take(3).map(|x| x / j as f64).collect();
        println!("{} sector: {} levels, lowest E/J = {:.8?}", parity.label(), block.len(), e);
    }
    let lo = |p| basis.block(p).unwrap().eigenvalues[0];
    println!("doublet splitting: {:.3e}", (lo(Parity::Positive) - lo(Parity::Negative)).abs());
    Ok(())
}
