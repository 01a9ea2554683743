//! Classical limit on the Bloch sphere.
//!
//! The chart `(Q, P)` covers the sphere minus its top point: `(0, 0)` is
//! `S = (0, 0, -1)` and the circle `Q^2 + P^2 = 4` collapses onto
//! `S = (0, 0, 1)`. The HO and LMG flows are integrated in the chart with
//! `{Q, P} = 1`; the kicked top is iterated as a rotation on the sphere.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Model, ModelParams};

/// Largest `|  |S| - 1 |` at which a map image is still accepted.
pub const SPHERE_TOL: f64 = 1e-10;

/// Distance below which two converged critical points are merged.
pub const DEDUP_TOL: f64 = 1e-8;

pub const DEFAULT_DT: f64 = 1e-3;

/// Classical parameters; `J` plays no role here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
}

impl Couplings {
    pub fn new(model: Model, alpha: f64, k: f64) -> Self {
        Self { model, alpha, k }
    }
}

impl From<&ModelParams> for Couplings {
    fn from(p: &ModelParams) -> Self {
        Self::new(p.model, p.alpha, p.k)
    }
}

/// A point on the unit sphere, with its chart coordinates when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalPoint {
    pub s: [f64; 3],
    pub chart: Option<(f64, f64)>,
}

impl ClassicalPoint {
    pub fn from_sphere(s: [f64; 3]) -> Self {
        Self { s, chart: None }
    }

    pub fn norm(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Chart coordinates, computing them from `S` if not cached.
    pub fn qp(&self) -> Result<(f64, f64)> {
        match self.chart {
            Some(c) => Ok(c),
            None => sphere_to_chart(self.s),
        }
    }
}

pub fn chart_to_sphere(q: f64, p: f64) -> Result<ClassicalPoint> {
    let r2 = q * q + p * p;
    if !r2.is_finite() || r2 > 4.0 {
        return Err(Error::domain(format!(
            "(Q, P) = ({q}, {p}) lies outside the chart disk Q^2 + P^2 <= 4"
        )));
    }
    let f = (1.0 - r2 / 4.0).max(0.0).sqrt();
    Ok(ClassicalPoint {
        s: [q * f, p * f, r2 / 2.0 - 1.0],
        chart: Some((q, p)),
    })
}

/// Inverse chart map. Fails only at `S = (0, 0, 1)`, the image of the whole
/// boundary circle.
pub fn sphere_to_chart(s: [f64; 3]) -> Result<(f64, f64)> {
    let [sx, sy, sz] = s;
    let rho2 = sx * sx + sy * sy;
    // 1 - Sz, without cancellation near the top of the sphere.
    let one_minus = if sz > 0.0 { rho2 / (1.0 + sz) } else { 1.0 - sz };
    if one_minus <= 0.0 {
        return Err(Error::domain(
            "S = (0, 0, 1) is not covered by the chart (it is the whole circle Q^2 + P^2 = 4)",
        ));
    }
    let f = (2.0 / one_minus).sqrt();
    Ok((sx * f, sy * f))
}

fn check_disk(q: f64, p: f64) -> Result<()> {
    if q * q + p * p > 4.0 {
        return Err(Error::domain(format!("(Q, P) = ({q}, {p}) lies outside the chart disk")));
    }
    Ok(())
}

fn require_flow(c: &Couplings) -> Result<()> {
    if c.model == Model::Qkt {
        return Err(Error::NoConservedEnergy("the kicked top".into()));
    }
    Ok(())
}

/// `H_HO = alpha Sz` or `H_LMG = alpha Sz + (k/2) Sx^2` in chart variables.
pub fn classical_energy(c: &Couplings, q: f64, p: f64) -> Result<f64> {
    require_flow(c)?;
    check_disk(q, p)?;
    Ok(energy_unchecked(c, q, p))
}

fn energy_unchecked(c: &Couplings, q: f64, p: f64) -> f64 {
    let r2 = q * q + p * p;
    let sz = r2 / 2.0 - 1.0;
    match c.model {
        Model::Ho => c.alpha * sz,
        _ => c.alpha * sz + 0.5 * c.k * q * q * (1.0 - r2 / 4.0),
    }
}

/// `(dH/dQ, dH/dP)`.
pub fn energy_gradient(c: &Couplings, q: f64, p: f64) -> Result<[f64; 2]> {
    require_flow(c)?;
    Ok(gradient_unchecked(c, q, p))
}

fn gradient_unchecked(c: &Couplings, q: f64, p: f64) -> [f64; 2] {
    let (a, k) = (c.alpha, c.k);
    match c.model {
        Model::Ho => [a * q, a * p],
        _ => {
            let r2 = q * q + p * p;
            [
                a * q + k * q * (1.0 - r2 / 4.0) - 0.25 * k * q * q * q,
                a * p - 0.25 * k * q * q * p,
            ]
        }
    }
}

/// `[[H_QQ, H_QP], [H_QP, H_PP]]`.
pub fn energy_hessian(c: &Couplings, q: f64, p: f64) -> Result<[[f64; 2]; 2]> {
    require_flow(c)?;
    Ok(hessian_unchecked(c, q, p))
}

fn hessian_unchecked(c: &Couplings, q: f64, p: f64) -> [[f64; 2]; 2] {
    let (a, k) = (c.alpha, c.k);
    match c.model {
        Model::Ho => [[a, 0.0], [0.0, a]],
        _ => {
            let hqq = a + k - 1.5 * k * q * q - 0.25 * k * p * p;
            let hqp = -0.5 * k * q * p;
            let hpp = a - 0.25 * k * q * q;
            [[hqq, hqp], [hqp, hpp]]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
    /// A Hessian eigenvalue vanishes; the signature is not decisive.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub q: f64,
    pub p: f64,
    pub energy: f64,
    pub kind: CriticalKind,
    pub gradient_norm: f64,
}

/// Seeds that did not converge, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: (f64, f64),
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub failures: Vec<SeedFailure>,
}

fn classify(h: [[f64; 2]; 2]) -> CriticalKind {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = ((h[0][0] - h[1][1]).powi(2) / 4.0 + h[0][1] * h[1][0]).max(0.0).sqrt();
    let (l1, l2) = (tr / 2.0 - disc, tr / 2.0 + disc);
    let scale = l1.abs().max(l2.abs()).max(1.0);
    if l1.abs() < 1e-12 * scale || l2.abs() < 1e-12 * scale {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if tr > 0.0 {
        CriticalKind::Minimum
    } else {
        CriticalKind::Maximum
    }
}

/// Newton iteration on `grad H = 0` from every seed.
pub fn find_critical_points(c: &Couplings, seeds: &[(f64, f64)]) -> Result<CriticalSearch> {
    require_flow(c)?;
    let mut out = CriticalSearch::default();
    for &seed in seeds {
        match newton(c, seed) {
            Ok((q, p)) => {
                if out
                    .points
                    .iter()
                    .any(|cp| ((cp.q - q).powi(2) + (cp.p - p).powi(2)).sqrt() < DEDUP_TOL)
                {
                    continue;
                }
                let g = gradient_unchecked(c, q, p);
                out.points.push(CriticalPoint {
                    q,
                    p,
                    energy: energy_unchecked(c, q, p),
                    kind: classify(hessian_unchecked(c, q, p)),
                    gradient_norm: g[0].hypot(g[1]),
                });
            }
            Err(reason) => out.failures.push(SeedFailure { seed, reason }),
        }
    }
    out.points.sort_by(|a, b| a.q.total_cmp(&b.q).then(a.p.total_cmp(&b.p)));
    Ok(out)
}

fn newton(c: &Couplings, seed: (f64, f64)) -> std::result::Result<(f64, f64), String> {
    let (mut q, mut p) = seed;
    if q * q + p * p >= 4.0 {
        return Err("seed outside the chart disk".into());
    }
    for _ in 0..200 {
        let g = gradient_unchecked(c, q, p);
        let gn = g[0].hypot(g[1]);
        if gn < 1e-13 {
            return Ok((q, p));
        }
        let h = hessian_unchecked(c, q, p);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return Err(format!("singular Hessian at ({q}, {p})"));
        }
        let dq = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dp = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        // Halve the step until it stays inside the disk.
        let mut t = 1.0;
        while (q - t * dq).powi(2) + (p - t * dp).powi(2) >= 4.0 {
            t *= 0.5;
            if t < 1e-12 {
                return Err("iteration left the chart disk".into());
            }
        }
        q -= t * dq;
        p -= t * dp;
        if !(q.is_finite() && p.is_finite()) {
            return Err("iteration diverged".into());
        }
    }
    let g = gradient_unchecked(c, q, p);
    let gn = g[0].hypot(g[1]);
    if gn < 1e-10 {
        Ok((q, p))
    } else {
        Err(format!("no convergence after 200 steps (|grad H| = {gn:e})"))
    }
}

/// Root of `H(Q, 0) = level` for `Q` in `[q_lo, q_hi]`, by bisection.
pub fn energy_crossing_on_axis(c: &Couplings, level: f64, q_lo: f64, q_hi: f64) -> Result<f64> {
    require_flow(c)?;
    check_disk(q_lo, 0.0)?;
    check_disk(q_hi, 0.0)?;
    let f = |q: f64| energy_unchecked(c, q, 0.0) - level;
    let (mut a, mut b) = (q_lo, q_hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::domain(format!(
            "H(Q, 0) - {level} has the same sign at Q = {q_lo} and Q = {q_hi}"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < 1e-15 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Outer edge on `P = 0` of the separatrix through the saddle at the
/// origin: the positive `Q` where `H(Q, 0) = H(0, 0)`.
pub fn separatrix_edge(c: &Couplings) -> Result<f64> {
    let level = classical_energy(c, 0.0, 0.0)?;
    // Bracket from just outside the origin toward the boundary.
    let n = 400;
    let mut prev = 1e-6;
    for i in 1..=n {
        let q = 2.0 * i as f64 / (n as f64 + 1.0);
        let (fa, fb) = (
            energy_unchecked(c, prev, 0.0) - level,
            energy_unchecked(c, q, 0.0) - level,
        );
        if fa != 0.0 && fa.signum() != fb.signum() {
            return energy_crossing_on_axis(c, level, prev, q);
        }
        prev = q;
    }
    Err(Error::domain("no separatrix crossing on the positive Q axis"))
}

/// Fixed-step RK4 integration of `dQ/dt = dH/dP`, `dP/dt = -dH/dQ`.
/// Returns `t_end / dt + 1` points including the start.
pub fn ho_lmg_trajectory(
    c: &Couplings,
    start: (f64, f64),
    t_end: f64,
    dt: f64,
) -> Result<Vec<ClassicalPoint>> {
    trajectory_sampled(c, start, t_end, dt, 1)
}

/// Like [`ho_lmg_trajectory`] but keeps only every `every`-th step.
pub fn trajectory_sampled(
    c: &Couplings,
    start: (f64, f64),
    t_end: f64,
    dt: f64,
    every: usize,
) -> Result<Vec<ClassicalPoint>> {
    require_flow(c)?;
    check_disk(start.0, start.1)?;
    if !(dt > 0.0) || !(t_end >= 0.0) || every == 0 {
        return Err(Error::domain("need dt > 0, t_end >= 0 and a positive stride"));
    }
    let steps = (t_end / dt).round() as usize;
    let field = |q: f64, p: f64| {
        let g = gradient_unchecked(c, q, p);
        (g[1], -g[0])
    };
    let (mut q, mut p) = start;
    let mut out = Vec::with_capacity(steps / every + 1);
    out.push(chart_to_sphere(q, p)?);
    for step in 1..=steps {
        let (k1q, k1p) = field(q, p);
        let (k2q, k2p) = field(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p);
        let (k3q, k3p) = field(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p);
        let (k4q, k4p) = field(q + dt * k3q, p + dt * k3p);
        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if q * q + p * p >= 4.0 {
            return Err(Error::domain(format!(
                "trajectory from {start:?} reached the chart boundary at step {step}"
            )));
        }
        if step % every == 0 {
            out.push(chart_to_sphere(q, p)?);
        }
    }
    Ok(out)
}

/// The 3x3 kicked-top matrix evaluated at a given `Sx`.
pub fn poincare_matrix(alpha: f64, k: f64, sx: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (sk, ck) = (k * sx).sin_cos();
    [
        [ca, -sa * ck, sa * sk],
        [sa, ca * ck, -ca * sk],
        [0.0, sk, ck],
    ]
}

/// One period of the classical kicked top.
pub fn poincare_map(alpha: f64, k: f64, point: &ClassicalPoint) -> ClassicalPoint {
    let s = point.s;
    let m = poincare_matrix(alpha, k, s[0]);
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(&m) {
        *o = row[0] * s[0] + row[1] * s[1] + row[2] * s[2];
    }
    ClassicalPoint::from_sphere(out)
}

/// One iterate of a section: seed index, step number and chart position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub seed: usize,
    pub step: usize,
    pub q: f64,
    pub p: f64,
}

/// `n_iter` images of every seed (given in the chart), mapped back to the
/// chart. Images off the sphere or at its uncharted top point are dropped.
pub fn poincare_section(alpha: f64, k: f64, seeds: &[(f64, f64)], n_iter: usize) -> Result<Vec<SectionPoint>> {
    let mut out = Vec::with_capacity(seeds.len() * n_iter);
    for (i, &(q, p)) in seeds.iter().enumerate() {
        let mut x = chart_to_sphere(q, p)?;
        for step in 1..=n_iter {
            x = poincare_map(alpha, k, &x);
            if (x.norm() - 1.0).abs() > SPHERE_TOL {
                continue;
            }
            if let Ok((q, p)) = sphere_to_chart(x.s) {
                out.push(SectionPoint { seed: i, step, q, p });
            }
        }
    }
    Ok(out)
}

/// Largest angular-bin spread of distances from the centroid, relative to the
/// mean distance. A closed smooth curve around its centroid gives a value
/// that shrinks with the bin width; a scattered cloud does not.
pub fn curve_spread(points: &[(f64, f64)], bins: usize) -> f64 {
    if points.is_empty() || bins == 0 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let cq = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cp = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut lo = vec![f64::INFINITY; bins];
    let mut hi = vec![f64::NEG_INFINITY; bins];
    let mut mean_r = 0.0;
    for &(q, p) in points {
        let (dq, dp) = (q - cq, p - cp);
        let r = dq.hypot(dp);
        mean_r += r / n;
        let t = (dp.atan2(dq) + std::f64::consts::PI) / std::f64::consts::TAU;
        let b = ((t * bins as f64) as usize).min(bins - 1);
        lo[b] = lo[b].min(r);
        hi[b] = hi[b].max(r);
    }
    let worst = lo
        .iter()
        .zip(&hi)
        .filter(|(l, _)| l.is_finite())
        .map(|(l, h)| h - l)
        .fold(0.0, f64::max);
    worst / mean_r
}

/// Fraction of the `n x n` cells of `[-2, 2]^2` whose centre lies inside the
/// disk that contain at least one point. Returns `(covered, in_disk)`.
pub fn grid_coverage(points: &[(f64, f64)], n: usize) -> (usize, usize) {
    let h = 4.0 / n as f64;
    let centre = |i: usize| -2.0 + (i as f64 + 0.5) * h;
    let inside = |i: usize, j: usize| centre(i).powi(2) + centre(j).powi(2) < 4.0;
    let mut hit = vec![false; n * n];
    for &(q, p) in points {
        let i = (((q + 2.0) / h) as isize).clamp(0, n as isize - 1) as usize;
        let j = (((p + 2.0) / h) as isize).clamp(0, n as isize - 1) as usize;
        hit[i * n + j] = true;
    }
    let mut covered = 0;
    let mut total = 0;
    for i in 0..n {
        for j in 0..n {
            if inside(i, j) {
                total += 1;
                covered += hit[i * n + j] as usize;
            }
        }
    }
    (covered, total)
}

/// Seeds on an `n x n` lattice over the open disk `Q^2 + P^2 < 4`.
pub fn seed_grid(n: usize) -> Vec<(f64, f64)> {
    let h = 4.0 / n as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (q, p) = (-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h);
            if q * q + p * p < 4.0 - 1e-9 {
                out.push((q, p));
            }
        }
    }
    out
}

/// One row of an exported trajectory or section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "seed_Q")]
    pub seed_q: f64,
    #[serde(rename = "seed_P")]
    pub seed_p: f64,
    pub step: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

pub const ORBIT_HEADER: &str = "model,alpha,k,seed_Q,seed_P,step,Q,P";

/// Writes orbit rows as CSV with the `ORBIT_HEADER` columns.
pub fn write_orbits<W: Write>(out: W, rows: &[OrbitRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(ORBIT_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn section_records(alpha: f64, k: f64, seeds: &[(f64, f64)], points: &[SectionPoint]) -> Vec<OrbitRecord> {
    points
        .iter()
        .map(|pt| OrbitRecord {
            model: Model::Qkt,
            alpha,
            k,
            seed_q: seeds[pt.seed].0,
            seed_p: seeds[pt.seed].1,
            step: pt.step,
            q: pt.q,
            p: pt.p,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const LMG: Couplings = Couplings {
        model: Model::Lmg,
        alpha: 0.84,
        k: -2.0,
    };
    const HO: Couplings = Couplings {
        model: Model::Ho,
        alpha: 0.84,
        k: 0.0,
    };

    #[test]
    fn chart_examples() {
        assert_eq!(chart_to_sphere(0.0, 0.0).unwrap().s, [0.0, 0.0, -1.0]);
        let e = chart_to_sphere(2f64.sqrt(), 0.0).unwrap().s;
        assert!((e[0] - 1.0).abs() < 1e-15 && e[1] == 0.0 && e[2].abs() < 1e-15);
        assert_eq!(chart_to_sphere(2.0, 0.0).unwrap().s, [0.0, 0.0, 1.0]);
        assert!(chart_to_sphere(2.0, 0.1).is_err());
        assert!(sphere_to_chart([0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn chart_roundtrip_near_the_top() {
        for &(q, p) in &[(1.999_999, 0.0), (-1.2, 1.5999), (0.3, -0.2)] {
            let s = chart_to_sphere(q, p).unwrap().s;
            let (q2, p2) = sphere_to_chart(s).unwrap();
            assert!((q - q2).abs() < 1e-9 && (p - p2).abs() < 1e-9, "{q},{p} -> {q2},{p2}");
        }
    }

    #[test]
    fn energy_examples() {
        assert!((classical_energy(&HO, 0.0, 0.0).unwrap() + 0.84).abs() < 1e-15);
        assert!((classical_energy(&LMG, 0.0, 0.0).unwrap() + 0.84).abs() < 1e-15);
        let qt = Couplings::new(Model::Qkt, 0.84, 2.5);
        assert!(matches!(classical_energy(&qt, 0.0, 0.0), Err(Error::NoConservedEnergy(_))));
        // Minimum at Q^2 = 2(alpha + k)/k: H = alpha(Q^2/2 - 1) + (k/2) Q^2 (1 - Q^2/4).
        let q2: f64 = 2.0 * (0.84 - 2.0) / -2.0;
        let want = 0.84 * (q2 / 2.0 - 1.0) - 1.0 * q2 * (1.0 - q2 / 4.0);
        let got = classical_energy(&LMG, q2.sqrt(), 0.0).unwrap();
        assert!((got - want).abs() < 1e-14);
        assert!(classical_energy(&LMG, 1.0770, 0.0).unwrap() < -0.84);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for &(q, p) in &[(0.3, -0.7), (1.1, 0.4), (-1.5, 0.2)] {
            let g = energy_gradient(&LMG, q, p).unwrap();
            let e = |q, p| energy_unchecked(&LMG, q, p);
            let fq = (e(q + h, p) - e(q - h, p)) / (2.0 * h);
            let fp = (e(q, p + h) - e(q, p - h)) / (2.0 * h);
            assert!((g[0] - fq).abs() < 1e-8 && (g[1] - fp).abs() < 1e-8);
            let hs = energy_hessian(&LMG, q, p).unwrap();
            let gq = |q, p| gradient_unchecked(&LMG, q, p);
            let dqq = (gq(q + h, p)[0] - gq(q - h, p)[0]) / (2.0 * h);
            let dqp = (gq(q, p + h)[0] - gq(q, p - h)[0]) / (2.0 * h);
            let dpp = (gq(q, p + h)[1] - gq(q, p - h)[1]) / (2.0 * h);
            assert!((hs[0][0] - dqq).abs() < 1e-7 && (hs[0][1] - dqp).abs() < 1e-7 && (hs[1][1] - dpp).abs() < 1e-7);
        }
    }

    #[test]
    fn ho_has_a_single_minimum() {
        let r = find_critical_points(&HO, &seed_grid(6)).unwrap();
        assert_eq!(r.points.len(), 1);
        let cp = r.points[0];
        assert!(cp.q.abs() < 1e-12 && cp.p.abs() < 1e-12);
        assert_eq!(cp.kind, CriticalKind::Minimum);
    }

    #[test]
    fn lmg_critical_structure() {
        let r = find_critical_points(&LMG, &seed_grid(8)).unwrap();
        let qmin = 1.16f64.sqrt();
        let kinds: Vec<_> = r.points.iter().map(|c| (c.kind, c.q, c.p)).collect();
        assert_eq!(r.points.len(), 3, "{kinds:?}");
        assert_eq!(r.points[0].kind, CriticalKind::Minimum);
        assert!((r.points[0].q + qmin).abs() < 1e-10);
        assert_eq!(r.points[1].kind, CriticalKind::Saddle);
        assert!(r.points[1].q.abs() < 1e-12);
        assert_eq!(r.points[2].kind, CriticalKind::Minimum);
        assert!((r.points[2].q - qmin).abs() < 1e-10);
        assert!(r.points.iter().all(|c| c.gradient_norm < 1e-10));
        let edge = separatrix_edge(&LMG).unwrap();
        assert!((edge - 2.32f64.sqrt()).abs() < 1e-12, "{edge}");
    }

    #[test]
    fn seed_outside_disk_is_reported() {
        let r = find_critical_points(&LMG, &[(3.0, 0.0), (0.1, 0.0)]).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.failures.len(), 1);
    }

    #[test]
    fn ho_orbits_are_isochronous_circles() {
        for r0 in [0.3, 1.0, 1.7] {
            let period = 2.0 * PI / HO.alpha;
            let dt = period / 20_000.0;
            let traj = ho_lmg_trajectory(&HO, (r0, 0.0), period, dt).unwrap();
            let drift = traj
                .iter()
                .map(|pt| {
                    let (q, p) = pt.chart.unwrap();
                    (q.hypot(p) - r0).abs()
                })
                .fold(0.0, f64::max);
            assert!(drift < 1e-10, "{drift}");
            let (q, p) = traj.last().unwrap().chart.unwrap();
            assert!((q - r0).abs() < 1e-9 && p.abs() < 1e-9);
        }
    }

    #[test]
    fn lmg_orbit_conserves_energy() {
        let start = (-0.5, 0.0);
        let e0 = classical_energy(&LMG, start.0, start.1).unwrap();
        let traj = ho_lmg_trajectory(&LMG, start, 20.0, DEFAULT_DT).unwrap();
        let drift = traj
            .iter()
            .map(|pt| {
                let (q, p) = pt.chart.unwrap();
                (classical_energy(&LMG, q, p).unwrap() - e0).abs()
            })
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "{drift}");
        let half = ho_lmg_trajectory(&LMG, start, 20.0, DEFAULT_DT / 2.0).unwrap();
        let (a, b) = (traj.last().unwrap().chart.unwrap(), half.last().unwrap().chart.unwrap());
        assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8);
    }

    #[test]
    fn pure_rotation_quarter_turn() {
        let x = poincare_map(FRAC_PI_2, 0.0, &ClassicalPoint::from_sphere([1.0, 0.0, 0.0]));
        assert!(x.s[0].abs() < 1e-15 && (x.s[1] - 1.0).abs() < 1e-15 && x.s[2] == 0.0);
    }

    #[test]
    fn one_step_oracle() {
        // Direct evaluation of the nine entries at alpha = 0.84, k = 2.5, Sx = 0.6.
        let (ca, sa) = (0.84f64.cos(), 0.84f64.sin());
        let (c, s) = (1.5f64.cos(), 1.5f64.sin());
        let v = [0.6, 0.0, 0.8];
        let want = [
            ca * v[0] - sa * c * v[1] + sa * s * v[2],
            sa * v[0] + ca * c * v[1] - ca * s * v[2],
            s * v[1] + c * v[2],
        ];
        let got = poincare_map(0.84, 2.5, &ClassicalPoint::from_sphere(v)).s;
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        // Spot values: (0.6 cos a + 0.8 sin a sin 1.5, 0.6 sin a - 0.8 cos a sin 1.5, 0.8 cos 1.5).
        assert!((got[0] - 0.994_699_918_688_891_8).abs() < 1e-12, "{}", got[0]);
        assert!((got[2] - 0.056_589_761_334_162_33).abs() < 1e-12, "{}", got[2]);
    }

    #[test]
    fn map_matrix_is_a_rotation() {
        for sx in [-1.0, -0.3, 0.0, 0.77] {
            let m = poincare_matrix(0.84, 30.0, sx);
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            assert!((det - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bottom_of_sphere_is_fixed() {
        let mut x = chart_to_sphere(0.0, 0.0).unwrap();
        for _ in 0..1000 {
            x = poincare_map(0.84, 2.5, &x);
        }
        assert!(x.s[0].abs() < 1e-10 && x.s[1].abs() < 1e-10 && (x.s[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn regular_tori_are_closed_curves() {
        let pts = poincare_section(0.84, 0.5, &[(0.5, 0.0)], 20_000).unwrap();
        let xy: Vec<_> = pts.iter().map(|p| (p.q, p.p)).collect();
        assert!(curve_spread(&xy, 180) < 0.02, "{}", curve_spread(&xy, 180));
    }

    #[test]
    fn coverage_counts() {
        assert_eq!(grid_coverage(&[], 50).1, 1976);
        let (c, _) = grid_coverage(&[(0.01, 0.01), (0.02, 0.02), (-1.0, 0.5)], 50);
        assert_eq!(c, 2);
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        let seeds = [(0.2, 1.0)];
        let pts = poincare_section(0.84, 30.0, &seeds, 3).unwrap();
        write_orbits(&mut buf, &section_records(0.84, 30.0, &seeds, &pts)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), ORBIT_HEADER);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("qkt,0.84,30.0,0.2,1.0,1,"));
    }
}
