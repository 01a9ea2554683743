//! Localization measures and their finite-size scaling.
//!
//! For a probability vector `p` over a basis of size `N`, `IPR_q = sum p_i^q`
//! and a power law `IPR_q ~ N^{-tau_q}` defines the mass exponent. Exponents
//! are always reported with the sign that makes a spreading state positive:
//! `tau = -d ln IPR / d ln N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::Model;

/// Probability vectors may deviate from unit sum by this much.
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_R2_THRESHOLD: f64 = 0.995;
/// Orders with `|q - 1|` at or below this are left out of `D_q` and `D_0`.
pub const Q_ONE_EXCLUSION: f64 = 0.05;
/// `max |D_q - D_0|` below which a state is called monofractal.
pub const MONOFRACTAL_TOL: f64 = 0.05;

/// `0.1, 0.2, ..., 4.0`.
pub fn default_q_grid() -> Vec<f64> {
    q_grid(0.1, 4.0, 0.1)
}

/// Inclusive arithmetic grid, rounded to 12 decimals so that `0.1 * 3` is
/// stored as `0.3`.
pub fn q_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// `sum_i p_i^q` with zero entries skipped.
pub fn ipr_q(p: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 4.0) {
        return Err(Error::domain(format!("q = {q} outside (0, 4]")));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::domain("probabilities must be non-negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(s));
    }
    Ok(ipr_unchecked(p, q))
}

/// `IPR_q` for many orders at once, sharing the validation.
pub fn ipr_many(p: &[f64], qs: &[f64]) -> Result<Vec<f64>> {
    if let Some(&q) = qs.iter().find(|&&q| !(q > 0.0 && q <= 4.0)) {
        return Err(Error::domain(format!("q = {q} outside (0, 4]")));
    }
    ipr_q(p, 1.0)?;
    Ok(qs.iter().map(|&q| ipr_unchecked(p, q)).collect())
}

fn ipr_unchecked(p: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return p.iter().sum();
    }
    if q == 2.0 {
        return p.iter().map(|x| x * x).sum();
    }
    p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(q)).sum()
}

/// What a series is a series of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "Q")]
    pub probe_q: f64,
    #[serde(rename = "P")]
    pub probe_p: f64,
    pub q: f64,
}

/// `(N, IPR_q)` pairs with strictly increasing `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    pub meta: Option<SeriesMeta>,
    points: Vec<(usize, f64)>,
}

impl ScalingSeries {
    pub fn new(mut points: Vec<(usize, f64)>) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DegenerateStep(w[0].0));
        }
        if let Some(&(n, v)) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return Err(Error::domain(format!("IPR must be positive and finite, got {v} at N = {n}")));
        }
        Ok(Self { meta: None, points })
    }

    pub fn with_meta(mut self, meta: SeriesMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }
}

/// Finite mass exponents between consecutive points, with their smoothed
/// companions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSeries {
    pub meta: Option<SeriesMeta>,
    /// `(sqrt(N1 N2), tau)` per consecutive pair.
    pub points: Vec<(f64, f64)>,
    pub window: usize,
    /// Trailing moving average of `tau`; empty when the series is shorter
    /// than the window.
    pub moving: Vec<f64>,
    /// Running mean of `tau`.
    pub cumulative: Vec<f64>,
}

impl TauSeries {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Standard deviation of the segment exponents.
    pub fn std_dev(&self) -> f64 {
        let t = self.taus();
        let n = t.len() as f64;
        if t.len() < 2 {
            return 0.0;
        }
        let m = t.iter().sum::<f64>() / n;
        (t.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }
}

pub fn finite_tau(series: &ScalingSeries) -> Result<TauSeries> {
    finite_tau_with_window(series, DEFAULT_WINDOW)
}

pub fn finite_tau_with_window(series: &ScalingSeries, window: usize) -> Result<TauSeries> {
    let pts = series.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            found: pts.len(),
            needed: 2,
        });
    }
    let points: Vec<(f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (n1, i1) = (w[0].0 as f64, w[0].1);
            let (n2, i2) = (w[1].0 as f64, w[1].1);
            ((n1 * n2).sqrt(), -(i2 / i1).ln() / (n2 / n1).ln())
        })
        .collect();
    let taus: Vec<f64> = points.iter().map(|p| p.1).collect();
    let moving = if window >= 1 && taus.len() >= window {
        moving_average(&taus, window)?
    } else {
        Vec::new()
    };
    Ok(TauSeries {
        meta: series.meta.clone(),
        cumulative: cumulative_mean(&taus)?,
        points,
        window,
        moving,
    })
}

/// Trailing mean over `window` entries; output has `len - window + 1` values.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::domain("moving-average window must be at least 1"));
    }
    if window > values.len() {
        return Err(Error::WindowTooLarge {
            window,
            len: values.len(),
        });
    }
    Ok(values
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect())
}

/// Element `i` is the mean of the first `i + 1` values.
pub fn cumulative_mean(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::domain("cumulative mean of an empty sequence"));
    }
    let mut acc = 0.0;
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect())
}

/// Least-squares line through `-ln IPR` against `ln N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub tau: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    /// `ln N` range actually covered by the fitted points.
    pub ln_n_range: (f64, f64),
}

/// Fits the points whose `ln N` lies in `window` (all points when `None`).
pub fn fit_power_law(series: &ScalingSeries, window: Option<(f64, f64)>) -> Result<PowerLawFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .points()
        .iter()
        .map(|&(n, v)| ((n as f64).ln(), -v.ln()))
        .filter(|(x, _)| window.is_none_or(|(a, b)| *x >= a && *x <= b))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::TooFewPoints {
            found: xs.len(),
            needed: 3,
        });
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(PowerLawFit {
        tau: slope,
        intercept,
        r2,
        n_points: xs.len(),
        ln_n_range: (xs[0], xs[xs.len() - 1]),
    })
}

/// Ordinary least squares; `R^2 = 1` for a constant response.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let scale = my.abs().max(1.0);
    let r2 = if syy <= 1e-26 * n * scale * scale {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "monofractal")]
    Monofractal,
    #[serde(rename = "multifractal")]
    Multifractal,
    #[serde(rename = "no-power-law")]
    NoPowerLaw,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Monofractal => "monofractal",
            Verdict::Multifractal => "multifractal",
            Verdict::NoPowerLaw => "no-power-law",
        }
    }
}

/// Fit results for one order `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub q: f64,
    pub tau: f64,
    pub r2: f64,
    /// `tau_q / (q - 1)`, absent near `q = 1`.
    pub d_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfaResult {
    pub orders: Vec<OrderFit>,
    pub d0: f64,
    pub verdict: Verdict,
    pub r2_threshold: f64,
    pub min_r2: f64,
    /// `max_q |D_q - D_0|`.
    pub max_deviation: f64,
    pub fit_window: Option<(f64, f64)>,
    pub n_points: usize,
}

impl MfaResult {
    pub fn order(&self, q: f64) -> Option<&OrderFit> {
        self.orders.iter().find(|o| (o.q - q).abs() < 1e-9)
    }
}

pub fn mfa(series_per_q: &[(f64, ScalingSeries)], fit_window: Option<(f64, f64)>) -> Result<MfaResult> {
    mfa_with_threshold(series_per_q, fit_window, DEFAULT_R2_THRESHOLD)
}

/// Fits `tau_q` for every order and `D_0` as the slope of `tau_q` against
/// `q - 1` through the origin. The through-origin fit weights each order by
/// `(q - 1)^2`, so the well-resolved large-`|q - 1|` orders dominate.
pub fn mfa_with_threshold(
    series_per_q: &[(f64, ScalingSeries)],
    fit_window: Option<(f64, f64)>,
    r2_threshold: f64,
) -> Result<MfaResult> {
    let Some((_, first)) = series_per_q.first() else {
        return Err(Error::TooFewPoints { found: 0, needed: 1 });
    };
    let dims = first.dims();
    if series_per_q.iter().any(|(_, s)| s.dims() != dims) {
        return Err(Error::GridMismatch);
    }
    let mut orders = Vec::with_capacity(series_per_q.len());
    let mut n_points = 0;
    for (q, s) in series_per_q {
        let fit = fit_power_law(s, fit_window)?;
        n_points = fit.n_points;
        let d_q = ((q - 1.0).abs() > Q_ONE_EXCLUSION).then(|| fit.tau / (q - 1.0));
        orders.push(OrderFit {
            q: *q,
            tau: fit.tau,
            r2: fit.r2,
            d_q,
        });
    }
    let used: Vec<&OrderFit> = orders.iter().filter(|o| o.d_q.is_some()).collect();
    if used.is_empty() {
        return Err(Error::domain("no order with |q - 1| > 0.05 in the grid"));
    }
    let num: f64 = used.iter().map(|o| o.tau * (o.q - 1.0)).sum();
    let den: f64 = used.iter().map(|o| (o.q - 1.0).powi(2)).sum();
    let d0 = num / den;
    let min_r2 = used.iter().map(|o| o.r2).fold(f64::INFINITY, f64::min);
    let max_deviation = used
        .iter()
        .map(|o| (o.d_q.unwrap() - d0).abs())
        .fold(0.0, f64::max);
    let verdict = if min_r2 < r2_threshold {
        Verdict::NoPowerLaw
    } else if max_deviation < MONOFRACTAL_TOL {
        Verdict::Monofractal
    } else {
        Verdict::Multifractal
    };
    Ok(MfaResult {
        orders,
        d0,
        verdict,
        r2_threshold,
        min_r2,
        max_deviation,
        fit_window,
        n_points,
    })
}

/// Mean spacing ratio of a sorted spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RStatistic {
    pub mean_r: f64,
    /// Ratios that entered the mean.
    pub n_ratios: usize,
    /// Ratios dropped because a neighbouring spacing was zero.
    pub n_excluded: usize,
}

/// `<min(d, 1/d)>` over consecutive spacing ratios `d`.
pub fn r_statistic(levels: &[f64]) -> Result<RStatistic> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    if levels.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("levels must be finite"));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("levels must be sorted ascending"));
    }
    let mut sum = 0.0;
    let mut used = 0;
    let mut excluded = 0;
    for w in levels.windows(3) {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        if a == 0.0 || b == 0.0 {
            excluded += 1;
            continue;
        }
        sum += a.min(b) / a.max(b);
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllDegenerate(excluded));
    }
    Ok(RStatistic {
        mean_r: sum / used as f64,
        n_ratios: used,
        n_excluded: excluded,
    })
}

/// `2 ln 2 - 1`, the mean ratio for uncorrelated levels.
pub const POISSON_R: f64 = 0.386_294_361_119_890_6;
/// Mean ratio for the circular orthogonal ensemble.
pub const COE_R: f64 = 0.5307;
