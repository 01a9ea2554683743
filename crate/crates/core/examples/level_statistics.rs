//! Mean spacing ratio of the kicked top against kick strength, per sector,
//! compared with the Poisson and COE values.

use spinscale::scaling::{COE_R, POISSON_R};
use spinscale::sweep::run_rstat_scan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ks = [0.5, 1.3, 2.5, 5.0, 10.0, 30.0];
    let rows = run_rstat_scan(0.84, &ks, 200, None, 0, None)?;
    println!("Poisson {POISSON_R:.4}, COE {COE_R:.4}");
    for pair in rows.chunks(2) {
        println!("k = {:>4}: <r>+ = {:.4}, <r>- = {:.4}", pair[0].k, pair[0].mean_r, pair[1].mean_r);
    }
    Ok(())
}
