//! Scaling experiments over grids of `J`.
//!
//! A sweep solves one spectrum per `J` (in parallel, optionally through the
//! [`SpectrumCache`]), projects every probe coherent state onto it and
//! records `IPR_q` for each order. Output rows are sorted by key before they
//! are written, so the file does not depend on worker count or completion
//! order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{Cached, SpectrumCache};
use crate::error::{Error, Result};
use crate::scaling::{ipr_many, r_statistic, ScalingSeries, SeriesMeta};
use crate::spectra::{self, Model, ModelParams, SpectralBasis};
use crate::spin::{coherent_coefficients, Parity, DEFAULT_CHART_EPS};

pub const RESULTS_HEADER: &str = "model,alpha,k,Q,P,J,N,q,ipr,parity_mode,timestamp,code_version";
pub const RSTAT_HEADER: &str = "alpha,k,J,parity,mean_r,n_levels";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense solves beyond this dimension are refused outright.
pub const MAX_DENSE_DIM: usize = 20001;

/// Inclusive `start:stop:step` grid of spin sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JGrid {
    pub start: u32,
    pub stop: u32,
    pub step: u32,
}

impl JGrid {
    pub fn new(start: u32, stop: u32, step: u32) -> Result<Self> {
        if start == 0 || step == 0 || stop < start {
            return Err(Error::Config(format!(
                "J grid {start}:{stop}:{step} must satisfy 1 <= start <= stop and step >= 1"
            )));
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> Vec<u32> {
        (self.start..=self.stop).step_by(self.step as usize).collect()
    }
}

impl std::str::FromStr for JGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |x: &str| {
            x.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad J grid '{s}' (expected start:stop:step)")))
        };
        match parts.as_slice() {
            [a] => {
                let j = parse(a)?;
                Self::new(j, j, 1)
            }
            [a, b, c] => Self::new(parse(a)?, parse(b)?, parse(c)?),
            _ => Err(Error::Config(format!("bad J grid '{s}' (expected start:stop:step)"))),
        }
    }
}

impl std::fmt::Display for JGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Which eigenvectors a probe is expanded over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityMode {
    /// Both sectors: the whole Hilbert space.
    Full,
    /// One sector, with the probe's weight there renormalized to one.
    Positive,
    Negative,
}

impl ParityMode {
    pub fn label(self) -> &'static str {
        match self {
            ParityMode::Full => "full",
            ParityMode::Positive => "positive",
            ParityMode::Negative => "negative",
        }
    }
}

impl std::str::FromStr for ParityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ParityMode::Full),
            "positive" | "+" => Ok(ParityMode::Positive),
            "negative" | "-" => Ok(ParityMode::Negative),
            _ => Err(Error::Config(format!("unknown parity mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    pub j_grid: JGrid,
    pub probes: Vec<(f64, f64)>,
    pub q_grid: Vec<f64>,
    pub parity_mode: ParityMode,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub budget_flops: Option<f64>,
    /// Largest dimension whose eigenvectors are kept in the cache.
    pub cache_vectors_max_dim: usize,
}

impl SweepSpec {
    pub fn new(model: Model, alpha: f64, k: f64, j_grid: JGrid, probes: Vec<(f64, f64)>, q_grid: Vec<f64>) -> Self {
        Self {
            model,
            alpha,
            k,
            j_grid,
            probes,
            q_grid,
            parity_mode: ParityMode::Full,
            out: None,
            cache_dir: None,
            workers: 0,
            budget_flops: None,
            cache_vectors_max_dim: 4001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        JGrid::new(self.j_grid.start, self.j_grid.stop, self.j_grid.step)?;
        if self.probes.is_empty() {
            return Err(Error::Config("sweep needs at least one probe".into()));
        }
        for &(q, p) in &self.probes {
            if !(q * q + p * p < 4.0 - DEFAULT_CHART_EPS) {
                return Err(Error::Config(format!("probe ({q}, {p}) lies outside the chart disk")));
            }
        }
        if self.q_grid.is_empty() || self.q_grid.iter().any(|&q| !(q > 0.0 && q <= 4.0)) {
            return Err(Error::Config("q grid must be non-empty and inside (0, 4]".into()));
        }
        ModelParams::new(self.model, self.alpha, self.k, self.j_grid.start)?;
        Ok(())
    }

    fn params(&self, j: u32) -> Result<ModelParams> {
        ModelParams::new(self.model, self.alpha, self.k, j)
    }

    /// Estimated dense work of the whole sweep.
    pub fn projected_flops(&self) -> f64 {
        self.j_grid
            .values()
            .into_iter()
            .filter_map(|j| self.params(j).ok())
            .map(|p| spectra::solve_flops(&p, true))
            .sum()
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "Q")]
    pub probe_q: f64,
    #[serde(rename = "P")]
    pub probe_p: f64,
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub q: f64,
    pub ipr: f64,
    pub parity_mode: ParityMode,
    pub timestamp: String,
    pub code_version: String,
}

impl SweepRecord {
    fn sort_key(&self) -> (u8, u64, u64, u64, u64, u32, u64) {
        let ord = |x: f64| {
            // Total order on floats that sorts like numbers.
            let b = x.to_bits();
            if b >> 63 == 1 {
                !b
            } else {
                b | (1 << 63)
            }
        };
        (
            self.model as u8,
            ord(self.alpha),
            ord(self.k),
            ord(self.probe_q),
            ord(self.probe_p),
            self.j,
            ord(self.q),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JFailure {
    pub j: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<JFailure>,
    pub cache_hits: usize,
    pub out: Option<PathBuf>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Loads or computes the parity-split basis for `params`.
pub fn obtain_basis(params: &ModelParams, cache: Option<&SpectrumCache>) -> Result<(SpectralBasis, bool)> {
    if let Some(c) = cache {
        match c.load(params) {
            Ok(Some(Cached::Full(b))) => return Ok((b, true)),
            Ok(Some(Cached::EigenvaluesOnly(_))) | Ok(None) => {}
            Err(e @ Error::CacheCorruption { .. }) => {
                warn!("{e}; recomputing");
                c.evict(params)?;
            }
            Err(e) => return Err(e),
        }
    }
    let basis = spectra::solve(params, true)?;
    if let Some(c) = cache {
        c.store(params, &basis)?;
    }
    Ok((basis, false))
}

/// Probabilities of each probe (one column each) under a parity mode.
pub fn probe_probabilities(basis: &SpectralBasis, probes: &[(f64, f64)], mode: ParityMode) -> Result<DMatrix<f64>> {
    let j = basis.space.j();
    let n = basis.dim();
    let states = probes
        .iter()
        .map(|&(q, p)| coherent_coefficients(j, q, p))
        .collect::<Result<Vec<_>>>()?;
    let amps = DMatrix::from_fn(n, probes.len(), |r, c| states[c].coeffs()[r]);
    match mode {
        ParityMode::Full => basis.probabilities_many(&amps),
        ParityMode::Positive | ParityMode::Negative => {
            let parity = if mode == ParityMode::Positive {
                Parity::Positive
            } else {
                Parity::Negative
            };
            let block = basis
                .block(parity)
                .ok_or_else(|| Error::domain("basis was not solved per parity sector"))?;
            let mut p = block.probabilities_many(&amps);
            for mut col in p.column_iter_mut() {
                let s: f64 = col.sum();
                if s > 0.0 {
                    col /= s;
                }
            }
            Ok(p)
        }
    }
}

fn sweep_one(spec: &SweepSpec, j: u32, cache: Option<&SpectrumCache>) -> Result<(Vec<SweepRecord>, bool)> {
    let params = spec.params(j)?;
    let n = params.space().dim();
    if n > MAX_DENSE_DIM && params.model != Model::Ho {
        return Err(Error::OutOfBudget {
            projected: spectra::solve_flops(&params, true),
            budget: spectra::solve_flops(&params.with_j(((MAX_DENSE_DIM - 1) / 2) as u32)?, true),
            detail: format!("N = {n} exceeds the dense limit {MAX_DENSE_DIM}"),
        });
    }
    let (basis, hit) = obtain_basis(&params, cache)?;
    let probs = probe_probabilities(&basis, &spec.probes, spec.parity_mode)?;
    let stamp = now();
    let mut out = Vec::with_capacity(spec.probes.len() * spec.q_grid.len());
    for (c, &(pq, pp)) in spec.probes.iter().enumerate() {
        let col: Vec<f64> = probs.column(c).iter().copied().collect();
        let iprs = ipr_many(&col, &spec.q_grid)?;
        for (&q, ipr) in spec.q_grid.iter().zip(iprs) {
            out.push(SweepRecord {
                model: spec.model,
                alpha: spec.alpha,
                k: spec.k,
                probe_q: pq,
                probe_p: pp,
                j,
                n,
                q,
                ipr,
                parity_mode: spec.parity_mode,
                timestamp: stamp.clone(),
                code_version: CODE_VERSION.to_string(),
            });
        }
    }
    Ok((out, hit))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn check_budget(projected: f64, budget: Option<f64>, what: &str) -> Result<()> {
    if let Some(b) = budget {
        if projected > b {
            return Err(Error::OutOfBudget {
                projected,
                budget: b,
                detail: what.to_string(),
            });
        }
    }
    Ok(())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary> {
    spec.validate()?;
    check_budget(
        spec.projected_flops(),
        spec.budget_flops,
        &format!("{} sweep over J = {}", spec.model, spec.j_grid),
    )?;
    let cache = spec.cache_dir.as_ref().map(|d| {
        let mut c = SpectrumCache::new(d);
        c.max_vector_dim = spec.cache_vectors_max_dim;
        c
    });
    let js = spec.j_grid.values();
    let results: Vec<(u32, Result<(Vec<SweepRecord>, bool)>)> = pool(spec.workers)?.install(|| {
        js.par_iter()
            .map(|&j| {
                let r = sweep_one(spec, j, cache.as_ref());
                match &r {
                    Ok((_, hit)) => info!(
                        "{} J = {j} (N = {}) done{}",
                        spec.model,
                        2 * j + 1,
                        if *hit { " from cache" } else { "" }
                    ),
                    Err(e) => warn!("{} J = {j} failed: {e}", spec.model),
                }
                (j, r)
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut cache_hits = 0;
    for (j, r) in results {
        match r {
            Ok((rows, hit)) => {
                records.extend(rows);
                cache_hits += hit as usize;
            }
            Err(e) => failures.push(JFailure { j, error: e.to_string() }),
        }
    }
    records.sort_by_key(|r| r.sort_key());
    if let Some(path) = &spec.out {
        write_records(File::create(path)?, &records)?;
    }
    Ok(SweepSummary {
        records,
        failures,
        cache_hits,
        out: spec.out.clone(),
    })
}

pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(RESULTS_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::Config(format!(
            "{} does not have the results header '{RESULTS_HEADER}'",
            path.display()
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRecord>, _>>()?)
}

/// A probe's identity in a results file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeKey {
    pub model: Model,
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "Q")]
    pub probe_q: f64,
    #[serde(rename = "P")]
    pub probe_p: f64,
    pub parity_mode: ParityMode,
}

/// All scaling series for one probe, one per order `q` (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub key: ProbeKey,
    pub per_q: Vec<(f64, ScalingSeries)>,
}

impl ProbeSeries {
    pub fn order(&self, q: f64) -> Option<&ScalingSeries> {
        self.per_q.iter().find(|(x, _)| (x - q).abs() < 1e-9).map(|(_, s)| s)
    }
}

/// Groups records by probe and order, in file order of first appearance.
pub fn group_series(records: &[SweepRecord]) -> Result<Vec<ProbeSeries>> {
    type Bits = (u8, u64, u64, u64, u64, ParityMode);
    let mut order: Vec<Bits> = Vec::new();
    let mut groups: BTreeMap<Bits, (ProbeKey, BTreeMap<u64, Vec<(usize, f64)>>)> = BTreeMap::new();
    for r in records {
        let id = (
            r.model as u8,
            r.alpha.to_bits(),
            r.k.to_bits(),
            r.probe_q.to_bits(),
            r.probe_p.to_bits(),
            r.parity_mode,
        );
        let entry = groups.entry(id).or_insert_with(|| {
            order.push(id);
            (
                ProbeKey {
                    model: r.model,
                    alpha: r.alpha,
                    k: r.k,
                    probe_q: r.probe_q,
                    probe_p: r.probe_p,
                    parity_mode: r.parity_mode,
                },
                BTreeMap::new(),
            )
        });
        let qkey = (r.q * 1e9).round() as u64;
        entry.1.entry(qkey).or_default().push((r.n, r.ipr));
    }
    order
        .into_iter()
        .map(|id| {
            let (key, per_q) = groups.remove(&id).unwrap();
            let per_q = per_q
                .into_iter()
                .map(|(qk, pts)| {
                    let q = qk as f64 / 1e9;
                    let meta = SeriesMeta {
                        model: key.model,
                        alpha: key.alpha,
                        k: key.k,
                        probe_q: key.probe_q,
                        probe_p: key.probe_p,
                        q,
                    };
                    Ok((q, ScalingSeries::new(pts)?.with_meta(meta)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ProbeSeries { key, per_q })
        })
        .collect()
}

/// One row of the r-statistic table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RstatRecord {
    pub alpha: f64,
    pub k: f64,
    #[serde(rename = "J")]
    pub j: u32,
    /// `+1` or `-1`.
    pub parity: i8,
    pub mean_r: f64,
    pub n_levels: usize,
}

fn sector_levels(params: &ModelParams, cache: Option<&SpectrumCache>) -> Result<Vec<(Parity, Vec<f64>)>> {
    if let Some(c) = cache {
        match c.load(params) {
            Ok(Some(Cached::Full(b))) => {
                return Ok(b.blocks.iter().filter_map(|x| x.parity.map(|p| (p, x.eigenvalues.clone()))).collect())
            }
            Ok(Some(Cached::EigenvaluesOnly(v))) => {
                return Ok(v.into_iter().filter_map(|(p, e)| p.map(|p| (p, e))).collect())
            }
            Ok(None) => {}
            Err(e @ Error::CacheCorruption { .. }) => {
                warn!("{e}; recomputing");
                c.evict(params)?;
            }
            Err(e) => return Err(e),
        }
    }
    let (basis, _) = obtain_basis(params, cache)?;
    Ok(basis
        .blocks
        .iter()
        .filter_map(|x| x.parity.map(|p| (p, x.eigenvalues.clone())))
        .collect())
}

/// Mean spacing ratio of the kicked-top quasienergies in one parity sector.
pub fn run_rstat(params: &ModelParams, parity: Parity, cache: Option<&SpectrumCache>) -> Result<RstatRecord> {
    if params.model != Model::Qkt {
        return Err(Error::domain("the r-statistic runner expects the kicked top"));
    }
    let levels = sector_levels(params, cache)?;
    let (_, phases) = levels
        .into_iter()
        .find(|(p, _)| *p == parity)
        .ok_or_else(|| Error::domain("parity sector missing"))?;
    let r = r_statistic(&phases)?;
    Ok(RstatRecord {
        alpha: params.alpha,
        k: params.k,
        j: params.j,
        parity: parity.sign() as i8,
        mean_r: r.mean_r,
        n_levels: phases.len(),
    })
}

/// Both sectors for every `k`, one solve per `k`.
pub fn run_rstat_scan(
    alpha: f64,
    ks: &[f64],
    j: u32,
    cache: Option<&SpectrumCache>,
    workers: usize,
    budget_flops: Option<f64>,
) -> Result<Vec<RstatRecord>> {
    let params: Vec<ModelParams> = ks.iter().map(|&k| ModelParams::qkt(alpha, k, j)).collect::<Result<_>>()?;
    check_budget(
        params.iter().map(|p| spectra::solve_flops(p, true)).sum(),
        budget_flops,
        &format!("r-statistic scan over {} values of k at J = {j}", ks.len()),
    )?;
    let rows: Vec<Result<Vec<RstatRecord>>> = pool(workers)?.install(|| {
        params
            .par_iter()
            .map(|p| {
                let out = [Parity::Positive, Parity::Negative]
                    .into_iter()
                    .map(|par| run_rstat(p, par, cache))
                    .collect::<Result<Vec<_>>>();
                info!("r-statistic k = {} J = {j} done", p.k);
                out
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn write_rstat<W: Write>(out: W, rows: &[RstatRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RSTAT_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
