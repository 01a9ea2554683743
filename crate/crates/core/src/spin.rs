//! Angular-momentum algebra in the Dicke basis.
//!
//! Basis index `i` in `0..=2J` carries `m = i - J`, so the fiducial state
//! `|J,-J>` is index 0. Only integer `J` is supported.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::binomial::ln_binomial_pmf;
use crate::error::{Error, Result};

/// Default margin `eps` on `4 - (Q^2 + P^2)` below which a chart point is
/// rejected as the south pole.
pub const DEFAULT_CHART_EPS: f64 = 1e-9;

/// Eigenvalue of the parity operator `exp(-i pi Jz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Positive,
    Negative,
}

impl Parity {
    pub fn of_m(m: i64) -> Self {
        if m.rem_euclid(2) == 0 {
            Parity::Positive
        } else {
            Parity::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Positive => 1.0,
            Parity::Negative => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Positive => "+",
            Parity::Negative => "-",
        }
    }
}

/// The `2J+1`-dimensional space spanned by `|J,m>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DickeSpace {
    j: u32,
}

impl DickeSpace {
    pub fn new(j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::domain("J must be a positive integer"));
        }
        Ok(Self { j })
    }

    /// Accepts a spin given as a real number, rejecting half-integers with
    /// their own error.
    pub fn from_spin(j: f64) -> Result<Self> {
        if !j.is_finite() || j <= 0.0 {
            return Err(Error::domain(format!("J must be positive, got {j}")));
        }
        let twice = 2.0 * j;
        if twice.fract() != 0.0 {
            return Err(Error::domain(format!("J = {j} is not a multiple of 1/2")));
        }
        if j.fract() != 0.0 {
            return Err(Error::HalfIntegerSpin(j));
        }
        Self::new(j as u32)
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn dim(&self) -> usize {
        2 * self.j as usize + 1
    }

    pub fn m(&self, index: usize) -> i64 {
        index as i64 - self.j as i64
    }

    pub fn index_of(&self, m: i64) -> Option<usize> {
        let i = m + self.j as i64;
        (0..self.dim() as i64).contains(&i).then_some(i as usize)
    }

    pub fn m_values(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.dim()).map(|i| self.m(i))
    }

    pub fn parity(&self, index: usize) -> Parity {
        Parity::of_m(self.m(index))
    }

    /// Basis indices belonging to one parity sector, ascending in `m`.
    pub fn sector_indices(&self, parity: Parity) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.parity(i) == parity).collect()
    }
}

/// A spin coherent state `|z(Q,P)>` expanded over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    space: DickeSpace,
    q: f64,
    p: f64,
    log_abs: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl CoherentState {
    pub fn new(j: u32, q: f64, p: f64) -> Result<Self> {
        coherent_coefficients_with_eps(j, q, p, DEFAULT_CHART_EPS)
    }

    pub fn space(&self) -> DickeSpace {
        self.space
    }

    pub fn j(&self) -> u32 {
        self.space.j
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `ln |c_m|`, finite over the whole support for any `z != 0` even when
    /// `|c_m|` itself underflows.
    pub fn log_abs(&self) -> &[f64] {
        &self.log_abs
    }

    /// `|c_m|^2` taken from the log-magnitudes.
    pub fn dicke_probabilities(&self) -> Vec<f64> {
        self.log_abs.iter().map(|&l| (2.0 * l).exp()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Weight of the state inside one parity sector.
    pub fn sector_weight(&self, parity: Parity) -> f64 {
        self.space
            .sector_indices(parity)
            .into_iter()
            .map(|i| self.coeffs[i].norm_sqr())
            .sum()
    }
}

/// Coefficients `<J,m|z>` of the coherent state at chart point `(Q, P)`.
pub fn coherent_coefficients(j: u32, q: f64, p: f64) -> Result<CoherentState> {
    coherent_coefficients_with_eps(j, q, p, DEFAULT_CHART_EPS)
}

pub fn coherent_coefficients_with_eps(j: u32, q: f64, p: f64, eps: f64) -> Result<CoherentState> {
    let space = DickeSpace::new(j)?;
    if !q.is_finite() || !p.is_finite() {
        return Err(Error::domain(format!("non-finite chart point ({q}, {p})")));
    }
    let r2 = q * q + p * p;
    if r2 >= 4.0 - eps {
        return Err(Error::ChartBoundary { q, p, r2, eps });
    }

    // z = (Q + iP) / sqrt(4 - r^2); |c_{k}|^2 = Binom(k; 2J, |z|^2/(1+|z|^2)).
    let denom = 4.0 - r2;
    let z_abs2 = r2 / denom;
    let arg = p.atan2(q);
    let ln_q = -z_abs2.ln_1p();
    let ln_p = if r2 == 0.0 {
        f64::NEG_INFINITY
    } else {
        z_abs2.ln() + ln_q
    };

    let n = 2 * j as u64;
    let mut log_abs: Vec<f64> = (0..=n).map(|k| 0.5 * ln_binomial_pmf(k, n, ln_p, ln_q)).collect();

    let total: f64 = log_abs.iter().map(|&l| (2.0 * l).exp()).sum();
    let shift = 0.5 * total.ln();
    for l in &mut log_abs {
        *l -= shift;
    }

    let coeffs = log_abs
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if l == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                let phase = (k as f64 * arg).rem_euclid(std::f64::consts::TAU);
                Complex64::from_polar(l.exp(), phase)
            }
        })
        .collect();

    Ok(CoherentState {
        space,
        q,
        p,
        log_abs,
        coeffs,
    })
}

/// Which collective-spin operator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Jz,
    Jx,
    JxSquared,
    Parity,
    /// `alpha Jz + (k / 2J) Jx^2`.
    Lmg,
}

/// Real symmetric banded storage: `bands[d][i]` holds entry `(i, i + d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBanded {
    dim: usize,
    bands: Vec<Vec<f64>>,
}

impl SymmetricBanded {
    pub fn new(dim: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; dim.saturating_sub(d)])
            .collect();
        Self { dim, bands }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn band(&self, d: usize) -> &[f64] {
        &self.bands[d]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (lo, hi) = if row <= col { (row, col) } else { (col, row) };
        self.bands
            .get(hi - lo)
            .and_then(|b| b.get(lo))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let (lo, hi) = if row <= col { (row, col) } else { (col, row) };
        self.bands[hi - lo][lo] = value;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                m[(i, i + d)] = v;
                m[(i + d, i)] = v;
            }
        }
        m
    }

    /// Dense principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                y[i] += x[i + d] * v;
                if d > 0 {
                    y[i + d] += x[i] * v;
                }
            }
        }
        y
    }

    /// `<x|A|x>` for a complex vector.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let y = self.mul_vec(x);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// A collective-spin operator in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub space: DickeSpace,
    pub banded: SymmetricBanded,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.banded.to_dense()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.banded.get(row, col)
    }
}

/// `<m+1| Jx |m>`.
pub fn jx_ladder(j: u32, m: i64) -> f64 {
    let (jf, mf) = (j as f64, m as f64);
    0.5 * (jf * (jf + 1.0) - mf * (mf + 1.0)).sqrt()
}

pub fn build_operator(kind: OperatorKind, j: u32) -> Result<OperatorMatrix> {
    build_operator_with(kind, j, 1.0, 0.0)
}

/// Like [`build_operator`], with the rotation and torsion strengths used by
/// [`OperatorKind::Lmg`] (ignored for the other kinds).
pub(crate) fn build_operator_with(kind: OperatorKind, j: u32, alpha: f64, k: f64) -> Result<OperatorMatrix> {
    let space = DickeSpace::new(j)?;
    let n = space.dim();
    let banded = match kind {
        OperatorKind::Jz => {
            let mut b = SymmetricBanded::new(n, 0);
            for i in 0..n {
                b.set(i, i, space.m(i) as f64);
            }
            b
        }
        OperatorKind::Parity => {
            let mut b = SymmetricBanded::new(n, 0);
            for i in 0..n {
                b.set(i, i, space.parity(i).sign());
            }
            b
        }
        OperatorKind::Jx => {
            let mut b = SymmetricBanded::new(n, 1);
            for i in 0..n - 1 {
                b.set(i, i + 1, jx_ladder(j, space.m(i)));
            }
            b
        }
        OperatorKind::JxSquared | OperatorKind::Lmg => {
            let mut b = jx_squared(space);
            if kind == OperatorKind::Lmg {
                let scale = k / (2.0 * j as f64);
                for band in &mut b.bands {
                    for v in band.iter_mut() {
                        *v *= scale;
                    }
                }
                for i in 0..n {
                    let v = b.get(i, i) + alpha * space.m(i) as f64;
                    b.set(i, i, v);
                }
            }
            b
        }
    };
    Ok(OperatorMatrix { kind, space, banded })
}

/// `Jx^2 = (J+^2 + J-^2 + J+J- + J-J+) / 4`; couples `m` only to `m` and `m +- 2`.
fn jx_squared(space: DickeSpace) -> SymmetricBanded {
    let j = space.j;
    let jf = j as f64;
    let n = space.dim();
    let mut b = SymmetricBanded::new(n, 2);
    for i in 0..n {
        let m = space.m(i) as f64;
        b.set(i, i, 0.5 * (jf * (jf + 1.0) - m * m));
        if i + 2 < n {
            let mi = space.m(i);
            b.set(i, i + 2, jx_ladder(j, mi) * jx_ladder(j, mi + 1));
        }
    }
    b
}

/// `p_i = |<phi_i|z>|^2` over the eigenvectors of `basis`.
pub fn overlap_probabilities(state: &CoherentState, basis: &crate::spectra::SpectralBasis) -> Result<Vec<f64>> {
    basis.probabilities(state.coeffs())
}
