//! Classical limits: an LMG orbit inside the separatrix and kicked-top
//! Poincare sections, written as CSV next to the working directory.

use std::fs::File;

use spinscale::classical::{
    grid_coverage, poincare_section, section_records, seed_grid, trajectory_sampled, write_orbits, Couplings,
    OrbitRecord,
};
use spinscale::spectra::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Couplings::new(Model::Lmg, 0.84, -2.0);
    let orbit = trajectory_sampled(&c, (1.3, 0.0), 20.0, 1e-3, 50)?;
    let rows: Vec<OrbitRecord> = orbit
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let (q, p) = pt.qp().unwrap();
            OrbitRecord { model: Model::Lmg, alpha: c.alpha, k: c.k, seed_q: 1.3, seed_p: 0.0, step: i * 50, q, p }
        })
        .collect();
    write_orbits(File::create("lmg_orbit.csv")?, &rows)?;
    println!("lmg_orbit.csv: {} points", rows.len());

    let seeds = seed_grid(6);
    for k in [0.5, 2.5, 30.0] {
        let pts = poincare_section(0.84, k, &seeds, 500)?;
        let qp: Vec<(f64, f64)> = pts.iter().map(|s| (s.q, s.p)).collect();
        let (covered, cells) = grid_coverage(&qp, 50);
        println!("k = {k:>4}: section covers {covered} of {cells} cells");
        write_orbits(File::create(format!("section_k{k}.csv"))?, &section_records(0.84, k, &seeds, &pts))?;
    }
    Ok(())
}
