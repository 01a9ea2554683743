//! Kicked-top Floquet operator: unitarity, parity blocks and quasienergies.

use spinscale::linalg::unitarity_defect;
use spinscale::spectra::{diagonalize_unitary, floquet_operator, ModelParams};
use spinscale::spin::Parity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [0.5, 2.5, 30.0] {
        let params = ModelParams::qkt(0.84, k, 100)?;
        let f = floquet_operator(&params)?;
        let basis = diagonalize_unitary(&f, true)?;
        let report = basis.verify_unitary(&f);
        println!(
            "k = {k:>4}: |F^H F - I| = {:.1e}, residual {:.1e}, orthonormality {:.1e}",
            unitarity_defect(&f),
            report.residual,
            report.orthonormality
        );
        let pos = &basis.block(Parity::Positive).unwrap().eigenvalues;
        println!("  first positive-sector phases: {:.5?}", &pos[..4]);
    }
    Ok(())
}
