//! Spin coherent states in the Dicke basis: normalization, peak position and
//! parity content for a few chart points.

use spinscale::scaling::ipr_q;
use spinscale::spin::{coherent_coefficients, Parity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let j = 500;
    println!("{:>6} {:>6} {:>12} {:>8} {:>8} {:>10}", "Q", "P", "|1 - norm|", "peak m", "w(+)", "IPR_2");
    for (q, p) in [(0.0, 0.0), (0.14, 0.0), (1.08, 0.0), (0.2, 1.0), (1.9, -0.3)] {
        let state = coherent_coefficients(j, q, p)?;
        let probs = state.dicke_probabilities();
        let peak = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| state.space().m(i))
            .unwrap();
        println!(
            "{q:>6.2} {p:>6.2} {:>12.1e} {peak:>8} {:>8.4} {:>10.3e}",
            (state.norm_sqr() - 1.0).abs(),
            state.sector_weight(Parity::Positive),
            ipr_q(&probs, 2.0)?
        );
    }

    // Points outside the disk r < 2 have no chart representative.
    match coherent_coefficients(j, 2.5, 0.0) {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("(2.5, 0): {e}"),
    }
    Ok(())
}
