//! A kicked-top sweep written to CSV, repeated against a warm spectrum cache.

use std::time::Instant;

use spinscale::spectra::Model;
use spinscale::sweep::{run_sweep, JGrid, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cache = std::env::temp_dir().join("spinscale-example-cache");
    let mut spec = SweepSpec::new(
        Model::Qkt,
        0.84,
        30.0,
        JGrid::new(50, 300, 50)?,
        vec![(0.2, 1.0), (0.5, 1.0)],
        vec![1.0, 2.0, 3.0],
    );
    spec.cache_dir = Some(cache.clone());
    spec.out = Some("qkt_sweep.csv".into());

    for pass in ["cold", "warm"] {
        let t = Instant::now();
        let s = run_sweep(&spec)?;
        println!(
            "{pass}: {} records, {} cache hits, {:.2?}",
            s.records.len(),
            s.cache_hits,
            t.elapsed()
        );
    }
    println!("results in qkt_sweep.csv, spectra under {}", cache.display());
    Ok(())
}
