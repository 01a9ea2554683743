//! Exact spectra of the three models, solved per parity sector.
//!
//! All three operators commute with `exp(-i pi Jz)`, so in the Dicke basis
//! they split into an even-`m` block and an odd-`m` block. Solving the blocks
//! separately keeps every eigenvector parity-definite even where the two
//! sectors are degenerate (the LMG ground-state doublet, QKT quasienergy
//! crossings); a full solve would return arbitrary mixtures there.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LapackFailure};
use crate::spin::{build_operator, build_operator_with, DickeSpace, OperatorKind, OperatorMatrix, Parity};

pub const DEFAULT_ALPHA: f64 = 0.84;
pub const DEFAULT_LMG_K: f64 = -2.0;

/// Tolerance on `max |F F^dagger - I|` accepted by [`diagonalize_unitary`].
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ho,
    Lmg,
    Qkt,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ho => "ho",
            Model::Lmg => "lmg",
            Model::Qkt => "qkt",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ho" => Ok(Model::Ho),
            "lmg" => Ok(Model::Lmg),
            "qkt" => Ok(Model::Qkt),
            other => Err(Error::Config(format!("unknown model '{other}' (expected ho, lmg or qkt)"))),
        }
    }
}

/// Model choice plus its two couplings and the spin size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    pub j: u32,
}

impl ModelParams {
    pub fn new(model: Model, alpha: f64, k: f64, j: u32) -> Result<Self> {
        if !alpha.is_finite() || !k.is_finite() {
            return Err(Error::domain(format!("couplings must be finite (alpha = {alpha}, k = {k})")));
        }
        DickeSpace::new(j)?;
        Ok(Self { model, alpha, k, j })
    }

    pub fn ho(alpha: f64, j: u32) -> Result<Self> {
        Self::new(Model::Ho, alpha, 0.0, j)
    }

    pub fn lmg(alpha: f64, k: f64, j: u32) -> Result<Self> {
        Self::new(Model::Lmg, alpha, k, j)
    }

    pub fn qkt(alpha: f64, k: f64, j: u32) -> Result<Self> {
        Self::new(Model::Qkt, alpha, k, j)
    }

    pub fn with_j(self, j: u32) -> Result<Self> {
        Self::new(self.model, self.alpha, self.k, j)
    }

    pub fn space(&self) -> DickeSpace {
        DickeSpace::new(self.j).expect("validated at construction")
    }

    fn convergence(&self, fail: LapackFailure) -> Error {
        Error::ConvergenceFailure {
            model: self.model.name().to_string(),
            j: self.j,
            info: fail.0,
        }
    }
}

/// Eigenvectors of one block, expressed over the block's Dicke indices.
#[derive(Debug, Clone, PartialEq)]
pub enum SectorVectors {
    /// The block is already diagonal in the Dicke basis.
    Identity,
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// One independently solved block of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    /// `None` for a block that spans the full space (unsplit solve).
    pub parity: Option<Parity>,
    /// Dicke indices spanned by the block, ascending.
    pub indices: Vec<usize>,
    /// Energies, or quasienergy phases in `[-pi, pi)`; ascending.
    pub eigenvalues: Vec<f64>,
    pub vectors: SectorVectors,
}

impl SectorBlock {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `|<phi_i|psi>|^2` for every eigenvector of the block.
    pub fn probabilities(&self, amplitudes: &[Complex64]) -> Vec<f64> {
        let local: Vec<Complex64> = self.indices.iter().map(|&i| amplitudes[i]).collect();
        match &self.vectors {
            SectorVectors::Identity => local.iter().map(|c| c.norm_sqr()).collect(),
            SectorVectors::Real(v) => {
                let re = DVector::from_iterator(local.len(), local.iter().map(|c| c.re));
                let im = DVector::from_iterator(local.len(), local.iter().map(|c| c.im));
                let a = v.tr_mul(&re);
                let b = v.tr_mul(&im);
                a.iter().zip(b.iter()).map(|(x, y)| x * x + y * y).collect()
            }
            SectorVectors::Complex(v) => {
                let c = DVector::from_vec(local);
                v.ad_mul(&c).iter().map(|z| z.norm_sqr()).collect()
            }
        }
    }

    /// Probabilities for many states at once, one column per state.
    pub fn probabilities_many(&self, amplitudes: &DMatrix<Complex64>) -> DMatrix<f64> {
        let local = amplitudes.select_rows(self.indices.iter());
        match &self.vectors {
            SectorVectors::Identity => local.map(|c| c.norm_sqr()),
            SectorVectors::Real(v) => {
                let (re, im) = linalg::split(&local);
                let a = v.tr_mul(&re);
                let b = v.tr_mul(&im);
                a.zip_map(&b, |x, y| x * x + y * y)
            }
            SectorVectors::Complex(v) => {
                let vc = v.clone();
                linalg::complex_adjoint_mul(&vc, &local).map(|z| z.norm_sqr())
            }
        }
    }

    /// Eigenvectors embedded in the full Dicke basis (columns).
    pub fn embedded_vectors(&self, dim: usize) -> DMatrix<Complex64> {
        let n = self.len();
        let mut out = DMatrix::<Complex64>::zeros(dim, n);
        for (a, &row) in self.indices.iter().enumerate() {
            for col in 0..n {
                out[(row, col)] = match &self.vectors {
                    SectorVectors::Identity => {
                        if a == col {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    }
                    SectorVectors::Real(v) => Complex64::new(v[(a, col)], 0.0),
                    SectorVectors::Complex(v) => v[(a, col)],
                };
            }
        }
        out
    }
}

/// Eigenvalues and eigenvectors of a model at fixed `J`, organized in blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub params: Option<ModelParams>,
    pub space: DickeSpace,
    pub blocks: Vec<SectorBlock>,
}

/// Diagnostics returned by [`SpectralBasis::verify_hermitian`] and
/// [`SpectralBasis::verify_unitary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisReport {
    /// `max |V^dagger V - I|` over the blocks.
    pub orthonormality: f64,
    /// Largest eigen-equation residual 2-norm.
    pub residual: f64,
    /// Smallest `|<v|P|v>|` over all eigenvectors.
    pub min_parity: f64,
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_split(&self) -> bool {
        self.blocks.iter().all(|b| b.parity.is_some())
    }

    pub fn block(&self, parity: Parity) -> Option<&SectorBlock> {
        self.blocks.iter().find(|b| b.parity == Some(parity))
    }

    /// All eigenvalues, block by block.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect()
    }

    /// Per-eigenvector parity labels in the order of [`Self::eigenvalues`].
    /// Unsplit blocks are labelled by the sign of `<v|P|v>`.
    pub fn parities(&self) -> Vec<Parity> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            match b.parity {
                Some(p) => out.extend(std::iter::repeat_n(p, b.len())),
                None => out.extend(
                    parity_expectations(b, self.space)
                        .into_iter()
                        .map(|e| if e >= 0.0 { Parity::Positive } else { Parity::Negative }),
                ),
            }
        }
        out
    }

    /// `p_i = |<phi_i|psi>|^2` over the whole basis.
    pub fn probabilities(&self, amplitudes: &[Complex64]) -> Result<Vec<f64>> {
        if amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(self.blocks.iter().flat_map(|b| b.probabilities(amplitudes)).collect())
    }

    /// Full probability matrix for a batch of states (one column each).
    pub fn probabilities_many(&self, amplitudes: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
        if amplitudes.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: amplitudes.nrows(),
            });
        }
        let parts: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| b.probabilities_many(amplitudes)).collect();
        let mut out = DMatrix::zeros(self.dim(), amplitudes.ncols());
        let mut row = 0;
        for p in parts {
            out.rows_mut(row, p.nrows()).copy_from(&p);
            row += p.nrows();
        }
        Ok(out)
    }

    pub fn verify_hermitian(&self, h: &DMatrix<f64>) -> BasisReport {
        let hc = h.map(|v| Complex64::new(v, 0.0));
        self.verify_with(|v, e| {
            let hv = linalg::complex_mul(&hc, v);
            let mut worst = 0.0f64;
            for (c, &ev) in e.iter().enumerate() {
                let r = hv.column(c) - v.column(c) * Complex64::new(ev, 0.0);
                worst = worst.max(r.norm());
            }
            worst
        })
    }

    pub fn verify_unitary(&self, f: &DMatrix<Complex64>) -> BasisReport {
        self.verify_with(|v, e| {
            let fv = linalg::complex_mul(f, v);
            let mut worst = 0.0f64;
            for (c, &phi) in e.iter().enumerate() {
                let r = fv.column(c) - v.column(c) * Complex64::from_polar(1.0, phi);
                worst = worst.max(r.norm());
            }
            worst
        })
    }

    fn verify_with(&self, residual: impl Fn(&DMatrix<Complex64>, &[f64]) -> f64) -> BasisReport {
        let n = self.dim();
        let mut report = BasisReport {
            orthonormality: 0.0,
            residual: 0.0,
            min_parity: f64::INFINITY,
        };
        for b in &self.blocks {
            let v = b.embedded_vectors(n);
            report.orthonormality = report.orthonormality.max(linalg::unitarity_defect(&v));
            report.residual = report.residual.max(residual(&v, &b.eigenvalues));
            for e in parity_expectations(b, self.space) {
                report.min_parity = report.min_parity.min(e.abs());
            }
        }
        report
    }
}

fn parity_expectations(block: &SectorBlock, space: DickeSpace) -> Vec<f64> {
    let signs: Vec<f64> = block.indices.iter().map(|&i| space.parity(i).sign()).collect();
    match &block.vectors {
        SectorVectors::Identity => signs,
        SectorVectors::Real(v) => (0..v.ncols())
            .map(|c| v.column(c).iter().zip(&signs).map(|(x, s)| s * x * x).sum())
            .collect(),
        SectorVectors::Complex(v) => (0..v.ncols())
            .map(|c| v.column(c).iter().zip(&signs).map(|(x, s)| s * x.norm_sqr()).sum())
            .collect(),
    }
}

/// Index sets of the blocks used by a solve.
fn block_layout(space: DickeSpace, parity_split: bool) -> Vec<(Option<Parity>, Vec<usize>)> {
    if parity_split {
        [Parity::Positive, Parity::Negative]
            .into_iter()
            .map(|p| (Some(p), space.sector_indices(p)))
            .collect()
    } else {
        vec![(None, (0..space.dim()).collect())]
    }
}

fn space_for_dim(n: usize) -> Result<DickeSpace> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::DimensionMismatch {
            expected: 2 * (n / 2) + 1,
            found: n,
        });
    }
    DickeSpace::new((n / 2) as u32)
}

/// Off-block entries up to this size (relative to the largest entry) are
/// treated as roundoff.
const PARITY_TOL: f64 = 1e-10;

fn check_parity_blocks<T: Copy>(m: &DMatrix<T>, space: DickeSpace, abs: impl Fn(T) -> f64) -> Result<()> {
    let scale = m.iter().map(|&v| abs(v)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if space.parity(r) != space.parity(c) {
                worst = worst.max(abs(m[(r, c)]));
            }
        }
    }
    if worst > PARITY_TOL * scale {
        Err(Error::ParityMixing(worst))
    } else {
        Ok(())
    }
}

/// `alpha Jz + (k / 2J) Jx^2`, pentadiagonal in the Dicke basis.
pub fn lmg_hamiltonian(params: &ModelParams) -> Result<OperatorMatrix> {
    if params.model != Model::Lmg {
        return Err(Error::domain(format!("lmg_hamiltonian called for model {}", params.model)));
    }
    build_operator_with(OperatorKind::Lmg, params.j, params.alpha, params.k)
}

/// Dense eigen-decomposition of a real symmetric matrix of odd dimension
/// `2J+1` in the Dicke basis.
pub fn diagonalize_hermitian(matrix: &DMatrix<f64>, parity_split: bool) -> Result<SpectralBasis> {
    diagonalize_hermitian_for(matrix, parity_split, None)
}

fn diagonalize_hermitian_for(
    matrix: &DMatrix<f64>,
    parity_split: bool,
    params: Option<ModelParams>,
) -> Result<SpectralBasis> {
    let space = space_for_dim(matrix.nrows())?;
    if matrix.ncols() != matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            found: matrix.ncols(),
        });
    }
    if parity_split {
        check_parity_blocks(matrix, space, f64::abs)?;
    }
    let fail = |f: LapackFailure| match params {
        Some(p) => p.convergence(f),
        None => Error::ConvergenceFailure {
            model: "symmetric matrix".into(),
            j: space.j(),
            info: f.0,
        },
    };
    let mut blocks = Vec::new();
    for (parity, indices) in block_layout(space, parity_split) {
        let sub = matrix.select_rows(indices.iter()).select_columns(indices.iter());
        let (w, v) = linalg::symmetric_eigen(sub).map_err(fail)?;
        blocks.push(SectorBlock {
            parity,
            indices,
            eigenvalues: w.as_slice().to_vec(),
            vectors: SectorVectors::Real(v),
        });
    }
    Ok(SpectralBasis { params, space, blocks })
}

/// Banded variant used for the LMG model: each block is assembled directly
/// from the band storage instead of from a dense full matrix.
fn diagonalize_banded(op: &OperatorMatrix, parity_split: bool, params: ModelParams) -> Result<SpectralBasis> {
    let space = op.space;
    let mut blocks = Vec::new();
    for (parity, indices) in block_layout(space, parity_split) {
        let sub = op.banded.submatrix(&indices);
        let (w, v) = linalg::symmetric_eigen(sub).map_err(|f| params.convergence(f))?;
        blocks.push(SectorBlock {
            parity,
            indices,
            eigenvalues: w.as_slice().to_vec(),
            vectors: SectorVectors::Real(v),
        });
    }
    Ok(SpectralBasis {
        params: Some(params),
        space,
        blocks,
    })
}

/// Maps an angle to `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// The kick `exp(-i (k/2J) Jx^2)` built in the `Jx` eigenbasis.
fn kick_operator(j: u32, k: f64) -> Result<DMatrix<Complex64>> {
    let jx = build_operator(OperatorKind::Jx, j)?.to_dense();
    let (w, u) = linalg::symmetric_eigen(jx).map_err(|f| Error::ConvergenceFailure {
        model: "qkt (Jx eigenbasis)".into(),
        j,
        info: f.0,
    })?;
    // The spectrum of Jx is exactly {-J..J}; snapping removes roundoff from
    // the phases without touching the eigenvectors.
    let scale = k / (2.0 * j as f64);
    let theta: Vec<f64> = w
        .iter()
        .map(|&m| {
            let mi = m.round();
            debug_assert!((m - mi).abs() < 1e-8);
            -scale * mi * mi
        })
        .collect();
    let cos = DVector::from_iterator(theta.len(), theta.iter().map(|t| t.cos()));
    let sin = DVector::from_iterator(theta.len(), theta.iter().map(|t| t.sin()));
    let mut uc = u.clone();
    let mut us = u.clone();
    for (c, (cv, sv)) in cos.iter().zip(sin.iter()).enumerate() {
        uc.column_mut(c).scale_mut(*cv);
        us.column_mut(c).scale_mut(*sv);
    }
    let re = uc * u.transpose();
    let im = us * u.transpose();
    Ok(linalg::join(&re, &im))
}

/// One-period propagator `exp(-i alpha Jz) exp(-i (k/2J) Jx^2)`.
pub fn floquet_operator(params: &ModelParams) -> Result<DMatrix<Complex64>> {
    if params.model != Model::Qkt {
        return Err(Error::domain(format!("floquet_operator called for model {}", params.model)));
    }
    let space = params.space();
    let n = space.dim();
    if params.k == 0.0 {
        let diag: Vec<Complex64> = space
            .m_values()
            .map(|m| Complex64::from_polar(1.0, -params.alpha * m as f64))
            .collect();
        return Ok(DMatrix::from_diagonal(&DVector::from_vec(diag)));
    }
    let mut f = kick_operator(params.j, params.k)?;
    for r in 0..n {
        let dz = Complex64::from_polar(1.0, -params.alpha * space.m(r) as f64);
        for c in 0..n {
            // Jx^2 only connects m to m +- 2, so opposite-parity entries are
            // exactly zero; remove the roundoff left by the sandwich.
            if space.parity(r) != space.parity(c) {
                f[(r, c)] = Complex64::new(0.0, 0.0);
            } else {
                f[(r, c)] *= dz;
            }
        }
    }
    Ok(f)
}

/// Eigenphases and eigenvectors of a unitary of odd dimension `2J+1`.
pub fn diagonalize_unitary(f: &DMatrix<Complex64>, parity_split: bool) -> Result<SpectralBasis> {
    diagonalize_unitary_for(f, parity_split, None)
}

fn diagonalize_unitary_for(
    f: &DMatrix<Complex64>,
    parity_split: bool,
    params: Option<ModelParams>,
) -> Result<SpectralBasis> {
    let space = space_for_dim(f.nrows())?;
    let defect = linalg::unitarity_defect(f);
    if !(defect < UNITARITY_TOL) {
        return Err(Error::NonUnitaryInput(defect));
    }
    if parity_split {
        check_parity_blocks(f, space, |z: Complex64| z.norm())?;
    }
    let fail = |e: LapackFailure| match params {
        Some(p) => p.convergence(e),
        None => Error::ConvergenceFailure {
            model: "unitary matrix".into(),
            j: space.j(),
            info: e.0,
        },
    };
    let mut blocks = Vec::new();
    for (parity, indices) in block_layout(space, parity_split) {
        let sub = f.select_rows(indices.iter()).select_columns(indices.iter());
        let (w, z) = linalg::complex_schur(sub).map_err(fail)?;
        let phases: Vec<f64> = w.iter().map(|c| wrap_phase(c.arg())).collect();
        let mut order: Vec<usize> = (0..phases.len()).collect();
        order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
        let eigenvalues = order.iter().map(|&i| phases[i]).collect();
        let vectors = z.select_columns(order.iter());
        blocks.push(SectorBlock {
            parity,
            indices,
            eigenvalues,
            vectors: SectorVectors::Complex(vectors),
        });
    }
    Ok(SpectralBasis { params, space, blocks })
}

/// The eigenbasis of `alpha Jz`: Dicke states with energies `alpha m`.
fn ho_basis(params: ModelParams, parity_split: bool) -> SpectralBasis {
    let space = params.space();
    let blocks = block_layout(space, parity_split)
        .into_iter()
        .map(|(parity, indices)| {
            let mut pairs: Vec<(f64, usize)> =
                indices.iter().map(|&i| (params.alpha * space.m(i) as f64, i)).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            SectorBlock {
                parity,
                indices: indices.clone(),
                eigenvalues: pairs.iter().map(|p| p.0).collect(),
                vectors: if pairs.iter().map(|p| p.1).eq(indices.iter().copied()) {
                    SectorVectors::Identity
                } else {
                    // alpha < 0 reverses the order; express as a permutation.
                    let n = indices.len();
                    let mut v = DMatrix::zeros(n, n);
                    for (col, (_, i)) in pairs.iter().enumerate() {
                        let row = indices.iter().position(|x| x == i).unwrap();
                        v[(row, col)] = 1.0;
                    }
                    SectorVectors::Real(v)
                },
            }
        })
        .collect();
    SpectralBasis {
        params: Some(params),
        space,
        blocks,
    }
}

/// Solves `params` with the method appropriate to its model.
pub fn solve(params: &ModelParams, parity_split: bool) -> Result<SpectralBasis> {
    match params.model {
        Model::Ho => Ok(ho_basis(*params, parity_split)),
        Model::Lmg => diagonalize_banded(&lmg_hamiltonian(params)?, parity_split, *params),
        Model::Qkt => diagonalize_unitary_for(&floquet_operator(params)?, parity_split, Some(*params)),
    }
}

/// Dense `O(N^3)` work of one solve, used for budget checks.
pub fn solve_flops(params: &ModelParams, parity_split: bool) -> f64 {
    let n = params.space().dim() as f64;
    let blocks = if parity_split { 2.0 } else { 1.0 };
    let per_block = (n / blocks).powi(3);
    match params.model {
        Model::Ho => n,
        Model::Lmg => 9.0 * blocks * per_block,
        // Jx solve, two real products, the unitarity check, then Schur.
        Model::Qkt => 9.0 * n.powi(3) + 4.0 * n.powi(3) + 8.0 * n.powi(3) + 25.0 * 4.0 * blocks * per_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn lmg_spin_one_blocks() {
        let p = ModelParams::lmg(0.84, -2.0, 1).unwrap();
        let h = lmg_hamiltonian(&p).unwrap().to_dense();
        assert_eq!(h, h.transpose());
        // Dicke order m = -1, 0, 1; odd block is {m = -1, +1}.
        assert!((h[(1, 1)] + 1.0).abs() < 1e-15);
        assert!((h[(0, 0)] + 1.34).abs() < 1e-15);
        assert!((h[(2, 2)] - 0.34).abs() < 1e-15);
        assert!((h[(0, 2)] + 0.5).abs() < 1e-15);

        let basis = solve(&p, true).unwrap();
        assert_eq!(basis.block(Parity::Positive).unwrap().eigenvalues, vec![-1.0]);
        let odd = &basis.block(Parity::Negative).unwrap().eigenvalues;
        let disc = 3.8224f64.sqrt();
        assert!((odd[0] - (-1.0 - disc) / 2.0).abs() < 1e-14);
        assert!((odd[1] - (-1.0 + disc) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn permutation_eigenvectors_for_diagonal_input() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let b = diagonalize_hermitian(&m, false).unwrap();
        assert_eq!(b.eigenvalues(), vec![1.0, 2.0, 3.0]);
        let r = b.verify_hermitian(&m);
        assert!(r.orthonormality < 1e-15 && r.residual < 1e-15 && r.min_parity == 1.0);
    }

    #[test]
    fn lmg_without_torsion_is_alpha_m() {
        let p = ModelParams::lmg(0.84, 0.0, 6).unwrap();
        let b = solve(&p, true).unwrap();
        let want = sorted(p.space().m_values().map(|m| 0.84 * m as f64).collect());
        let got = sorted(b.eigenvalues());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13);
        }
    }

    #[test]
    fn lmg_basis_invariants() {
        for j in [5u32, 40] {
            let p = ModelParams::lmg(0.84, -2.0, j).unwrap();
            let b = solve(&p, true).unwrap();
            let r = b.verify_hermitian(&lmg_hamiltonian(&p).unwrap().to_dense());
            assert!(r.orthonormality < 1e-10, "{r:?}");
            assert!(r.residual < 1e-9, "{r:?}");
            assert!(r.min_parity > 1.0 - 1e-8, "{r:?}");
            let even = if j % 2 == 0 { j + 1 } else { j };
            assert_eq!(b.block(Parity::Positive).unwrap().len(), even as usize);
        }
    }

    #[test]
    fn floquet_without_kick_is_diagonal_rotation() {
        let p = ModelParams::qkt(0.84, 0.0, 4).unwrap();
        let f = floquet_operator(&p).unwrap();
        let space = p.space();
        for r in 0..space.dim() {
            for c in 0..space.dim() {
                let want = if r == c {
                    Complex64::from_polar(1.0, -0.84 * space.m(r) as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(f[(r, c)], want);
            }
        }
        let b = solve(&p, true).unwrap();
        let want = sorted(space.m_values().map(|m| wrap_phase(-0.84 * m as f64)).collect());
        for (g, w) in sorted(b.eigenvalues()).iter().zip(&want) {
            assert!((g - w).abs() < 1e-13);
        }
    }

    #[test]
    fn floquet_without_rotation_has_kick_phases() {
        let j = 5;
        let k = 1.7;
        let p = ModelParams::qkt(0.0, k, j).unwrap();
        let b = solve(&p, true).unwrap();
        let want = sorted(
            (-(j as i64)..=j as i64)
                .map(|m| wrap_phase(-(k / (2.0 * j as f64)) * (m * m) as f64))
                .collect(),
        );
        for (g, w) in sorted(b.eigenvalues()).iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    /// exp(A) by scaling and squaring with a Taylor core.
    fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let norm: f64 = a.iter().map(|z| z.norm()).sum();
        let s = (norm.log2().ceil().max(0.0) as i32) + 4;
        let scaled = a / Complex64::new(2f64.powi(s), 0.0);
        let n = a.nrows();
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for i in 1..30 {
            term = &term * &scaled / Complex64::new(i as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn floquet_spin_one_matches_matrix_exponential() {
        let (alpha, k) = (0.84, 2.5);
        let p = ModelParams::qkt(alpha, k, 1).unwrap();
        let f = floquet_operator(&p).unwrap();
        let to_c = |m: DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        let jz = to_c(build_operator(OperatorKind::Jz, 1).unwrap().to_dense());
        let jx2 = to_c(build_operator(OperatorKind::JxSquared, 1).unwrap().to_dense());
        let mi = Complex64::new(0.0, -1.0);
        let want = expm(&(jz * (mi * alpha))) * expm(&(jx2 * (mi * (k / 2.0))));
        let err = (f - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn unitary_identity_and_quarter_turns() {
        let id = DMatrix::<Complex64>::identity(5, 5);
        let b = diagonalize_unitary(&id, true).unwrap();
        assert!(b.eigenvalues().iter().all(|&x| x == 0.0));

        let i = Complex64::i();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![i, Complex64::new(1.0, 0.0), -i]));
        let b = diagonalize_unitary(&d, false).unwrap();
        let got = sorted(b.eigenvalues());
        assert!((got[0] + PI / 2.0).abs() < 1e-15 && got[1] == 0.0 && (got[2] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_unitary_input_rejected() {
        let m = DMatrix::<Complex64>::identity(3, 3) * Complex64::new(1.1, 0.0);
        assert!(matches!(diagonalize_unitary(&m, false), Err(Error::NonUnitaryInput(_))));
    }

    #[test]
    fn qkt_strong_kick_basis_invariants() {
        let p = ModelParams::qkt(0.84, 30.0, 50).unwrap();
        let f = floquet_operator(&p).unwrap();
        assert!(linalg::unitarity_defect(&f) < 1e-10);
        let b = solve(&p, true).unwrap();
        let r = b.verify_unitary(&f);
        assert!(r.orthonormality < 1e-10 && r.residual < 1e-9 && r.min_parity > 1.0 - 1e-8, "{r:?}");
        for blk in &b.blocks {
            assert!(blk.eigenvalues.iter().all(|&x| (-PI..PI).contains(&x)));
            assert!(blk.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn split_and_full_spectra_agree() {
        for p in [ModelParams::lmg(0.84, -2.0, 30).unwrap(), ModelParams::qkt(0.84, 2.5, 30).unwrap()] {
            let a = sorted(solve(&p, true).unwrap().eigenvalues());
            let b = sorted(solve(&p, false).unwrap().eigenvalues());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8, "{p:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let c = crate::spin::coherent_coefficients(20, 0.7, -0.4).unwrap();
        for p in [
            ModelParams::ho(0.84, 20).unwrap(),
            ModelParams::ho(-0.5, 20).unwrap(),
            ModelParams::lmg(0.84, -2.0, 20).unwrap(),
            ModelParams::qkt(0.84, 2.5, 20).unwrap(),
        ] {
            for split in [true, false] {
                let probs = solve(&p, split).unwrap().probabilities(c.coeffs()).unwrap();
                let s: f64 = probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-10, "{p:?} split={split}: {s}");
            }
        }
    }

    #[test]
    fn batch_probabilities_match_single() {
        let p = ModelParams::qkt(0.84, 1.3, 12).unwrap();
        let b = solve(&p, true).unwrap();
        let states: Vec<_> = [(0.2, 1.0), (-0.5, 0.3)]
            .iter()
            .map(|&(q, pp)| crate::spin::coherent_coefficients(12, q, pp).unwrap())
            .collect();
        let mat = DMatrix::from_fn(25, 2, |r, c| states[c].coeffs()[r]);
        let many = b.probabilities_many(&mat).unwrap();
        for (c, s) in states.iter().enumerate() {
            let one = b.probabilities(s.coeffs()).unwrap();
            for (r, v) in one.iter().enumerate() {
                assert!((many[(r, c)] - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch_reported() {
        let b = solve(&ModelParams::ho(0.84, 3).unwrap(), true).unwrap();
        assert!(matches!(
            b.probabilities(&[Complex64::new(1.0, 0.0); 5]),
            Err(Error::DimensionMismatch { expected: 7, found: 5 })
        ));
    }

    #[test]
    fn parity_mixing_detected() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.1;
        m[(1, 0)] = 0.1;
        assert!(matches!(diagonalize_hermitian(&m, true), Err(Error::ParityMixing(_))));
        assert!(diagonalize_hermitian(&m, false).is_ok());
    }
}
