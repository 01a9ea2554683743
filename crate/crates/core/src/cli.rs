//! Command-line front end. The binary only forwards `argv` to [`run`].

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::cache::SpectrumCache;
use crate::classical::{self, Couplings, OrbitRecord};
use crate::error::{Error, Result};
use crate::scaling::{self, finite_tau_with_window, q_grid, DEFAULT_R2_THRESHOLD, DEFAULT_WINDOW};
use crate::spectra::{Model, DEFAULT_ALPHA, DEFAULT_LMG_K};
use crate::sweep::{self, JGrid, ParityMode, ProbeKey, SweepSpec};

pub const TAU_HEADER: &str = "model,alpha,k,Q,P,parity_mode,q,index,N_mid,ln_N_mid,tau,moving_avg,cumulative_mean";

#[derive(Debug, Parser)]
#[command(name = "spinscale", version, about = "Finite-size scaling of spin coherent states")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Flags shared by every subcommand. Each may also come from `--config`;
/// a flag on the command line wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// Flat TOML file with any of the keys below (flags override it)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the merged configuration as TOML and exit
    #[arg(long, global = true)]
    pub print_config: bool,
    /// Model: ho, lmg or qkt [default: depends on the subcommand]
    #[arg(long, global = true)]
    pub model: Option<Model>,
    /// Rotation strength alpha [default: 0.84]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Torsion / kick strength k [default: -2 for lmg, 30 for qkt]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// J grid as start:stop:step or a single J [default: per subcommand]
    #[arg(long, global = true)]
    pub jgrid: Option<String>,
    /// Probe states: inline "Q,P;Q,P" or a file of Q,P lines [default: per subcommand]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub probes: Option<String>,
    /// Orders q as a:b:step or a comma list [default: 0.1:4.0:0.1]
    #[arg(long, global = true)]
    pub q_grid: Option<String>,
    /// Fit window in ln N as a:b [default: all points]
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Spectrum cache directory [default: $SPINSCALE_CACHE, else no cache]
    #[arg(long, global = true, env = "SPINSCALE_CACHE")]
    pub cache_dir: Option<PathBuf>,
    /// Output file, or directory for `fig` [default: stdout; fig-ID for fig]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core [default: 0]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Refuse runs whose projected dense work exceeds this many FLOP [default: unlimited]
    #[arg(long, global = true)]
    pub budget_flops: Option<f64>,
    /// Use the full J range of a figure preset instead of the desk-scale cap [default: false]
    #[arg(long, global = true)]
    pub full_scale: bool,
    /// Expand probes over full, positive or negative parity eigenvectors [default: full]
    #[arg(long, global = true)]
    pub parity_mode: Option<ParityMode>,
    /// Log only warnings and errors
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scaling sweep and write the results CSV
    Sweep,
    /// Multifractal fit of every probe in a results CSV (JSON output)
    Mfa(MfaArgs),
    /// Finite mass exponents of every probe in a results CSV
    Tau(TauArgs),
    /// Mean spacing ratio of the kicked top against k, per parity sector
    Rstat(RstatArgs),
    /// Classical trajectories, Poincare sections and critical points
    Classical {
        #[command(subcommand)]
        what: ClassicalCommand,
    },
    /// Regenerate the data behind one figure preset
    Fig(FigArgs),
}

#[derive(Debug, Args)]
pub struct MfaArgs {
    /// Results CSV written by `sweep` or `fig`
    pub results: PathBuf,
    /// R^2 below which a probe is declared to have no power law [default: 0.995]
    #[arg(long)]
    pub r2_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    /// Results CSV written by `sweep` or `fig`
    pub results: PathBuf,
    /// Order q of the series [default: 2]
    #[arg(long)]
    pub q: Option<f64>,
    /// Moving-average window [default: 5]
    #[arg(long)]
    pub avg_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RstatArgs {
    /// Kick strengths as a:b:step or a comma list [default: 0.5:10:0.5 plus 12,15,20,25,30]
    #[arg(long)]
    pub k_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ClassicalCommand {
    /// RK4 trajectories of the HO or LMG flow
    Trajectory(TrajectoryArgs),
    /// Kicked-top Poincare section
    Poincare(PoincareArgs),
    /// Critical points of the HO or LMG energy surface (JSON output)
    Critical(CriticalArgs),
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Seeds: `grid`, `grid:<n>`, inline "Q,P;Q,P" or a file [default: grid:6]
    #[arg(long, allow_hyphen_values = true)]
    pub seeds: Option<String>,
    /// Integration time [default: one HO period 2 pi / alpha]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Step size [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every n-th step [default: 10]
    #[arg(long)]
    pub every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PoincareArgs {
    /// Seeds: `grid`, `grid:<n>`, inline "Q,P;Q,P" or a file [default: grid:10]
    #[arg(long, allow_hyphen_values = true)]
    pub seeds: Option<String>,
    /// Map iterations per seed [default: 1000]
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Newton seeds: `grid`, `grid:<n>`, inline "Q,P;Q,P" or a file [default: grid:12]
    #[arg(long, allow_hyphen_values = true)]
    pub seeds: Option<String>,
}

#[derive(Debug, Args)]
pub struct FigArgs {
    /// Preset: fig2 fig3 fig4 fig5 fig6 fig7 fig10 fig11 appA appB appC (or a bare number)
    pub id: String,
    /// Override the largest J of the preset [default: the preset's desk cap]
    #[arg(long)]
    pub jmax: Option<u32>,
}

/// The flat configuration document accepted by `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jgrid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_flops: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_scale: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity_mode: Option<ParityMode>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// `flags` on top of `self`.
    pub fn overridden_by(self, flags: &CommonFlags) -> Self {
        Self {
            model: flags.model.or(self.model),
            alpha: flags.alpha.or(self.alpha),
            k: flags.k.or(self.k),
            jgrid: flags.jgrid.clone().or(self.jgrid),
            probes: flags.probes.clone().or(self.probes),
            q_grid: flags.q_grid.clone().or(self.q_grid),
            window: flags.window.clone().or(self.window),
            cache_dir: flags.cache_dir.clone().or(self.cache_dir),
            out: flags.out.clone().or(self.out),
            workers: flags.workers.or(self.workers),
            budget_flops: flags.budget_flops.or(self.budget_flops),
            full_scale: if flags.full_scale { Some(true) } else { self.full_scale },
            parity_mode: flags.parity_mode.or(self.parity_mode),
        }
    }

    fn model_or(&self, d: Model) -> Model {
        self.model.unwrap_or(d)
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    fn k_for(&self, model: Model) -> f64 {
        self.k.unwrap_or(match model {
            Model::Ho => 0.0,
            Model::Lmg => DEFAULT_LMG_K,
            Model::Qkt => 30.0,
        })
    }

    fn q_values(&self) -> Result<Vec<f64>> {
        match &self.q_grid {
            Some(s) => parse_q_grid(s),
            None => Ok(scaling::default_q_grid()),
        }
    }

    fn fit_window(&self) -> Result<Option<(f64, f64)>> {
        self.window.as_deref().map(parse_window).transpose()
    }

    fn cache(&self) -> Option<SpectrumCache> {
        self.cache_dir.as_ref().map(SpectrumCache::new)
    }
}

fn bad(flag: &str, value: &str, expect: &str) -> Error {
    Error::Config(format!("invalid value '{value}' for --{flag}: expected {expect}"))
}

fn parse_f64(flag: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| bad(flag, s, "a number"))
}

/// `a:b:step` (inclusive) or a comma list.
pub fn parse_float_grid(flag: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => {
            let (a, b, c) = (parse_f64(flag, a)?, parse_f64(flag, b)?, parse_f64(flag, c)?);
            if !(c > 0.0) || b < a {
                return Err(bad(flag, s, "start:stop:step with step > 0 and stop >= start"));
            }
            Ok(q_grid(a, b, c))
        }
        [_] => s.split(',').map(|x| parse_f64(flag, x)).collect(),
        _ => Err(bad(flag, s, "a:b:step or a comma list")),
    }
}

pub fn parse_q_grid(s: &str) -> Result<Vec<f64>> {
    let g = parse_float_grid("q-grid", s)?;
    if g.iter().any(|&q| !(q > 0.0 && q <= 4.0)) {
        return Err(bad("q-grid", s, "orders inside (0, 4]"));
    }
    Ok(g)
}

pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    match s.split(':').collect::<Vec<_>>().as_slice() {
        [a, b] => {
            let (a, b) = (parse_f64("window", a)?, parse_f64("window", b)?);
            if b <= a {
                return Err(bad("window", s, "a:b with a < b"));
            }
            Ok((a, b))
        }
        _ => Err(bad("window", s, "a:b (an interval in ln N)")),
    }
}

fn parse_pairs(flag: &str, text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for item in text.split([';', '\n']) {
        let item = item.trim();
        if item.is_empty() || item.starts_with('#') {
            continue;
        }
        let xs: Vec<&str> = item.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).collect();
        match xs.as_slice() {
            [q, p] => match (q.parse::<f64>(), p.parse::<f64>()) {
                (Ok(q), Ok(p)) => out.push((q, p)),
                // A header line such as "Q,P" in a file.
                _ if out.is_empty() && q.parse::<f64>().is_err() => continue,
                _ => return Err(bad(flag, item, "Q,P")),
            },
            _ => return Err(bad(flag, item, "Q,P")),
        }
    }
    if out.is_empty() {
        return Err(bad(flag, text, "at least one Q,P pair"));
    }
    Ok(out)
}

/// Inline `Q,P;Q,P` text or a path to a file with one pair per line.
pub fn parse_probes(s: &str) -> Result<Vec<(f64, f64)>> {
    let path = Path::new(s);
    if path.is_file() {
        parse_pairs("probes", &fs::read_to_string(path)?)
    } else {
        parse_pairs("probes", s)
    }
}

fn parse_seeds(s: Option<&str>, default_n: usize) -> Result<Vec<(f64, f64)>> {
    match s {
        None | Some("grid") => Ok(classical::seed_grid(default_n)),
        Some(x) if x.starts_with("grid:") => {
            let n: usize = x[5..].parse().map_err(|_| bad("seeds", x, "grid:<n>"))?;
            Ok(classical::seed_grid(n.max(1)))
        }
        Some(x) => {
            let path = Path::new(x);
            if path.is_file() {
                parse_pairs("seeds", &fs::read_to_string(path)?)
            } else {
                parse_pairs("seeds", x)
            }
        }
    }
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout())),
    })
}

/// One probe's multifractal result in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMfa {
    #[serde(flatten)]
    pub key: ProbeKey,
    pub mfa: scaling::MfaResult,
}

pub fn mfa_for_records(
    records: &[sweep::SweepRecord],
    orders: Option<&[f64]>,
    window: Option<(f64, f64)>,
    r2_threshold: f64,
) -> Result<Vec<ProbeMfa>> {
    let mut out = Vec::new();
    for g in sweep::group_series(records)? {
        let per_q: Vec<_> = g
            .per_q
            .into_iter()
            .filter(|(q, _)| orders.is_none_or(|o| o.iter().any(|x| (x - q).abs() < 1e-9)))
            .collect();
        if per_q.is_empty() {
            continue;
        }
        out.push(ProbeMfa {
            key: g.key,
            mfa: scaling::mfa_with_threshold(&per_q, window, r2_threshold)?,
        });
    }
    Ok(out)
}

pub fn write_tau<W: Write>(out: W, records: &[sweep::SweepRecord], q: f64, avg_window: usize) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TAU_HEADER.split(','))?;
    let mut rows = 0;
    for g in sweep::group_series(records)? {
        let Some(series) = g.order(q) else { continue };
        if series.len() < 2 {
            continue;
        }
        let t = finite_tau_with_window(series, avg_window)?;
        for (i, &(n_mid, tau)) in t.points.iter().enumerate() {
            // The trailing average ending at segment i.
            let mavg = (i + 1 >= t.window && !t.moving.is_empty())
                .then(|| t.moving[i + 1 - t.window].to_string())
                .unwrap_or_default();
            w.write_record([
                g.key.model.to_string(),
                g.key.alpha.to_string(),
                g.key.k.to_string(),
                g.key.probe_q.to_string(),
                g.key.probe_p.to_string(),
                g.key.parity_mode.label().to_string(),
                q.to_string(),
                i.to_string(),
                n_mid.to_string(),
                n_mid.ln().to_string(),
                (tau + 0.0).to_string(),
                mavg,
                t.cumulative[i].to_string(),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

fn default_k_grid() -> Vec<f64> {
    let mut ks = q_grid(0.5, 10.0, 0.5);
    ks.extend([12.0, 15.0, 20.0, 25.0, 30.0]);
    ks
}

fn build_sweep(cfg: &RunConfig, model: Model, jgrid: JGrid, probes: Vec<(f64, f64)>, qs: Vec<f64>) -> SweepSpec {
    let mut spec = SweepSpec::new(model, cfg.alpha(), cfg.k_for(model), jgrid, probes, qs);
    spec.parity_mode = cfg.parity_mode.unwrap_or(ParityMode::Full);
    spec.cache_dir = cfg.cache_dir.clone();
    spec.workers = cfg.workers.unwrap_or(0);
    spec.budget_flops = cfg.budget_flops;
    spec
}

fn report_failures(summary: &sweep::SweepSummary) {
    for f in &summary.failures {
        eprintln!("warning: J = {} skipped: {}", f.j, f.error);
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let model = cfg.model_or(Model::Ho);
    let jgrid: JGrid = cfg.jgrid.as_deref().unwrap_or("500:3000:500").parse()?;
    let probes = parse_probes(cfg.probes.as_deref().unwrap_or("0.14,0"))?;
    let mut spec = build_sweep(cfg, model, jgrid, probes, cfg.q_values()?);
    spec.out = None;
    let summary = sweep::run_sweep(&spec)?;
    report_failures(&summary);
    sweep::write_records(open_out(cfg.out.as_deref())?, &summary.records)?;
    Ok(())
}

fn cmd_mfa(cfg: &RunConfig, args: &MfaArgs) -> Result<()> {
    let records = sweep::read_records(&args.results)?;
    let orders = cfg.q_grid.as_deref().map(parse_q_grid).transpose()?;
    let res = mfa_for_records(
        &records,
        orders.as_deref(),
        cfg.fit_window()?,
        args.r2_threshold.unwrap_or(DEFAULT_R2_THRESHOLD),
    )?;
    let mut out = open_out(cfg.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &res)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_tau(cfg: &RunConfig, args: &TauArgs) -> Result<()> {
    let records = sweep::read_records(&args.results)?;
    write_tau(
        open_out(cfg.out.as_deref())?,
        &records,
        args.q.unwrap_or(2.0),
        args.avg_window.unwrap_or(DEFAULT_WINDOW),
    )?;
    Ok(())
}

fn cmd_rstat(cfg: &RunConfig, args: &RstatArgs) -> Result<()> {
    let ks = match &args.k_grid {
        Some(s) => parse_float_grid("k-grid", s)?,
        None => default_k_grid(),
    };
    let jgrid: JGrid = cfg.jgrid.as_deref().unwrap_or("500").parse()?;
    let cache = cfg.cache();
    let mut rows = Vec::new();
    for j in jgrid.values() {
        rows.extend(sweep::run_rstat_scan(
            cfg.alpha(),
            &ks,
            j,
            cache.as_ref(),
            cfg.workers.unwrap_or(0),
            cfg.budget_flops,
        )?);
    }
    sweep::write_rstat(open_out(cfg.out.as_deref())?, &rows)
}

fn cmd_classical(cfg: &RunConfig, what: &ClassicalCommand) -> Result<()> {
    match what {
        ClassicalCommand::Trajectory(a) => {
            let model = cfg.model_or(Model::Lmg);
            let c = Couplings::new(model, cfg.alpha(), cfg.k_for(model));
            let seeds = parse_seeds(a.seeds.as_deref(), 6)?;
            let t_end = a.t_end.unwrap_or(2.0 * std::f64::consts::PI / c.alpha.abs());
            let dt = a.dt.unwrap_or(classical::DEFAULT_DT);
            let every = a.every.unwrap_or(10);
            let mut rows = Vec::new();
            for &(sq, sp) in &seeds {
                match classical::trajectory_sampled(&c, (sq, sp), t_end, dt, every) {
                    Ok(traj) => {
                        for (i, pt) in traj.iter().enumerate() {
                            let (q, p) = pt.qp()?;
                            rows.push(OrbitRecord {
                                model,
                                alpha: c.alpha,
                                k: c.k,
                                seed_q: sq,
                                seed_p: sp,
                                step: i * every,
                                q,
                                p,
                            });
                        }
                    }
                    Err(e) => eprintln!("warning: seed ({sq}, {sp}) skipped: {e}"),
                }
            }
            classical::write_orbits(open_out(cfg.out.as_deref())?, &rows)
        }
        ClassicalCommand::Poincare(a) => {
            let (alpha, k) = (cfg.alpha(), cfg.k_for(Model::Qkt));
            let seeds = parse_seeds(a.seeds.as_deref(), 10)?;
            let pts = classical::poincare_section(alpha, k, &seeds, a.iterations.unwrap_or(1000))?;
            classical::write_orbits(
                open_out(cfg.out.as_deref())?,
                &classical::section_records(alpha, k, &seeds, &pts),
            )
        }
        ClassicalCommand::Critical(a) => {
            let model = cfg.model_or(Model::Lmg);
            let c = Couplings::new(model, cfg.alpha(), cfg.k_for(model));
            let seeds = parse_seeds(a.seeds.as_deref(), 12)?;
            write_critical(open_out(cfg.out.as_deref())?, &c, &seeds)
        }
    }
}

#[derive(Serialize)]
struct CriticalReport {
    model: Model,
    alpha: f64,
    k: f64,
    points: Vec<classical::CriticalPoint>,
    separatrix_edge_q: Option<f64>,
    failed_seeds: Vec<(f64, f64)>,
}

fn write_critical<W: Write>(mut out: W, c: &Couplings, seeds: &[(f64, f64)]) -> Result<()> {
    let search = classical::find_critical_points(c, seeds)?;
    let has_saddle = search
        .points
        .iter()
        .any(|p| p.kind == classical::CriticalKind::Saddle && p.q.abs() < 1e-9 && p.p.abs() < 1e-9);
    let report = CriticalReport {
        model: c.model,
        alpha: c.alpha,
        k: c.k,
        separatrix_edge_q: if has_saddle { classical::separatrix_edge(c).ok() } else { None },
        failed_seeds: search.failures.iter().map(|f| f.seed).collect(),
        points: search.points,
    };
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

/// A figure preset: what to compute and at which scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FigPreset {
    pub id: &'static str,
    pub model: Model,
    pub ks: Vec<f64>,
    pub probes: Vec<(f64, f64)>,
    pub q_grid: Vec<f64>,
    pub j_start: u32,
    pub j_step: u32,
    /// Largest J run by default.
    pub desk_jmax: u32,
    /// Largest J of the original study.
    pub full_jmax: u32,
    pub outputs: &'static [&'static str],
    /// Documented desk-scale wall time on one core.
    pub budget: &'static str,
}

fn line(from: f64, to: f64, step: f64, other: f64, q_first: bool) -> Vec<(f64, f64)> {
    q_grid(from, to, step)
        .into_iter()
        .map(|x| if q_first { (x, other) } else { (other, x) })
        .collect()
}

const ID_ALIASES: [(&str, &str); 11] = [
    ("2", "fig2"),
    ("3", "fig3"),
    ("4", "fig4"),
    ("5", "fig5"),
    ("6", "fig6"),
    ("7", "fig7"),
    ("10", "fig10"),
    ("11", "fig11"),
    ("a", "appA"),
    ("b", "appB"),
    ("c", "appC"),
];

pub fn fig_preset(id: &str) -> Result<FigPreset> {
    let lower = id.trim().to_ascii_lowercase();
    let canon = ID_ALIASES
        .iter()
        .find(|(alias, name)| lower == *alias || lower == name.to_ascii_lowercase())
        .map(|(_, name)| *name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown figure '{id}' (expected fig2 fig3 fig4 fig5 fig6 fig7 fig10 fig11 appA appB appC)"
            ))
        })?;
    let full_q = scaling::default_q_grid();
    let qkt_line = || line(0.2, 0.8, 0.02, 1.0, true);
    let p = match canon {
        "fig2" => FigPreset {
            id: "fig2",
            model: Model::Ho,
            ks: vec![0.0],
            probes: line(0.0, 0.14, 0.02, 0.0, true),
            q_grid: full_q,
            j_start: 500,
            j_step: 500,
            desk_jmax: 3000,
            full_jmax: 15000,
            outputs: &["results", "tau", "orbits"],
            budget: "seconds",
        },
        "fig3" => FigPreset {
            id: "fig3",
            model: Model::Ho,
            ks: vec![0.0],
            probes: vec![(0.02, 0.0), (0.14, 0.0)],
            q_grid: full_q,
            j_start: 500,
            j_step: 500,
            desk_jmax: 3000,
            full_jmax: 15000,
            outputs: &["results", "mfa"],
            budget: "seconds",
        },
        "fig4" => FigPreset {
            id: "fig4",
            model: Model::Lmg,
            ks: vec![DEFAULT_LMG_K],
            // 250 evenly spaced points on the P = 0 energy cut.
            probes: (0..250).map(|i| (-1.99 + 3.98 * i as f64 / 249.0, 0.0)).collect(),
            q_grid: vec![2.0],
            j_start: 100,
            j_step: 100,
            desk_jmax: 1000,
            full_jmax: 5500,
            outputs: &["results", "critical"],
            budget: "about a minute",
        },
        "fig5" => {
            let mut probes = line(1.04, 1.14, 0.01, 0.0, true);
            probes.extend(line(1.48, 1.58, 0.01, 0.0, true));
            probes.extend(line(-0.05, 0.05, 0.01, 0.0, true));
            probes.push((-0.5, 0.0));
            FigPreset {
                id: "fig5",
                model: Model::Lmg,
                ks: vec![DEFAULT_LMG_K],
                probes,
                q_grid: full_q,
                j_start: 100,
                j_step: 100,
                desk_jmax: 1000,
                full_jmax: 10000,
                outputs: &["results", "tau", "mfa"],
                budget: "about a minute",
            }
        }
        "fig6" => FigPreset {
            id: "fig6",
            model: Model::Qkt,
            ks: default_k_grid(),
            probes: Vec::new(),
            q_grid: Vec::new(),
            j_start: 500,
            j_step: 500,
            desk_jmax: 500,
            full_jmax: 2000,
            outputs: &["rstat"],
            budget: "a few minutes",
        },
        "fig7" => FigPreset {
            id: "fig7",
            model: Model::Qkt,
            ks: vec![0.5, 1.3, 2.5, 30.0],
            probes: qkt_line(),
            q_grid: vec![2.0],
            j_start: 50,
            j_step: 50,
            desk_jmax: 1000,
            full_jmax: 5000,
            outputs: &["results", "tau", "section"],
            budget: "about twenty minutes",
        },
        "fig10" => FigPreset {
            id: "fig10",
            model: Model::Qkt,
            ks: vec![0.5],
            probes: vec![(0.2, 1.0)],
            q_grid: full_q,
            j_start: 50,
            j_step: 50,
            desk_jmax: 1000,
            full_jmax: 5000,
            outputs: &["results", "mfa"],
            budget: "a few minutes",
        },
        "fig11" => FigPreset {
            id: "fig11",
            model: Model::Qkt,
            ks: vec![30.0],
            probes: vec![(0.2, 1.0)],
            q_grid: full_q,
            j_start: 50,
            j_step: 50,
            desk_jmax: 1000,
            full_jmax: 5000,
            outputs: &["results", "tau", "mfa"],
            budget: "a few minutes",
        },
        "appA" | "appB" => FigPreset {
            id: if canon == "appA" { "appA" } else { "appB" },
            model: Model::Qkt,
            ks: vec![if canon == "appA" { 0.5 } else { 1.3 }],
            probes: qkt_line(),
            q_grid: vec![2.0],
            j_start: 50,
            j_step: 50,
            desk_jmax: 1000,
            full_jmax: 5000,
            outputs: &["results", "tau"],
            budget: "a few minutes",
        },
        _ => FigPreset {
            id: "appC",
            model: Model::Qkt,
            ks: vec![2.5],
            probes: vec![(0.2, 1.0), (0.3, 1.0), (0.38, 1.0), (0.8, 1.0)],
            q_grid: vec![2.0],
            j_start: 50,
            j_step: 50,
            desk_jmax: 1000,
            full_jmax: 10050,
            outputs: &["results", "tau"],
            budget: "a few minutes",
        },
    };
    Ok(p)
}

/// Runs a preset and writes its files into `dir`; returns the paths.
pub fn run_fig(preset: &FigPreset, cfg: &RunConfig, jmax: u32, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = |suffix: &str| dir.join(format!("{}_{suffix}", preset.id));
    let alpha = cfg.alpha();

    if preset.outputs.contains(&"rstat") {
        let cache = cfg.cache();
        let p = path("rstat.csv");
        let rows = sweep::run_rstat_scan(alpha, &preset.ks, jmax, cache.as_ref(), cfg.workers.unwrap_or(0), cfg.budget_flops)?;
        sweep::write_rstat(File::create(&p)?, &rows)?;
        written.push(p);
        return Ok(written);
    }

    let jgrid = JGrid::new(preset.j_start, jmax.max(preset.j_start), preset.j_step)?;
    let mut records = Vec::new();
    for &k in &preset.ks {
        let mut spec = build_sweep(cfg, preset.model, jgrid, preset.probes.clone(), preset.q_grid.clone());
        spec.k = k;
        let summary = sweep::run_sweep(&spec)?;
        report_failures(&summary);
        records.extend(summary.records);
    }
    let p = path("results.csv");
    sweep::write_records(File::create(&p)?, &records)?;
    written.push(p);

    if preset.outputs.contains(&"tau") {
        let p = path("tau.csv");
        write_tau(File::create(&p)?, &records, 2.0, DEFAULT_WINDOW)?;
        written.push(p);
    }
    if preset.outputs.contains(&"mfa") {
        let p = path("mfa.json");
        let res = mfa_for_records(&records, None, cfg.fit_window()?, DEFAULT_R2_THRESHOLD)?;
        fs::write(&p, serde_json::to_vec_pretty(&res)?)?;
        written.push(p);
    }
    if preset.outputs.contains(&"orbits") {
        let p = path("orbits.csv");
        let c = Couplings::new(preset.model, alpha, preset.ks[0]);
        let period = 2.0 * std::f64::consts::PI / alpha.abs();
        let every = 20;
        let mut rows = Vec::new();
        for &(sq, sp) in &preset.probes {
            for (i, pt) in classical::trajectory_sampled(&c, (sq, sp), period, classical::DEFAULT_DT, every)?
                .iter()
                .enumerate()
            {
                let (q, p) = pt.qp()?;
                rows.push(OrbitRecord {
                    model: preset.model,
                    alpha,
                    k: c.k,
                    seed_q: sq,
                    seed_p: sp,
                    step: i * every,
                    q,
                    p,
                });
            }
        }
        classical::write_orbits(File::create(&p)?, &rows)?;
        written.push(p);
    }
    if preset.outputs.contains(&"critical") {
        let p = path("critical.json");
        let c = Couplings::new(preset.model, alpha, preset.ks[0]);
        write_critical(File::create(&p)?, &c, &classical::seed_grid(12))?;
        written.push(p);
    }
    if preset.outputs.contains(&"section") {
        let p = path("section.csv");
        let mut rows = Vec::new();
        for &k in &preset.ks {
            let pts = classical::poincare_section(alpha, k, &preset.probes, 2000)?;
            rows.extend(classical::section_records(alpha, k, &preset.probes, &pts));
        }
        classical::write_orbits(File::create(&p)?, &rows)?;
        written.push(p);
    }
    Ok(written)
}

fn cmd_fig(cfg: &RunConfig, args: &FigArgs) -> Result<()> {
    let preset = fig_preset(&args.id)?;
    let full = cfg.full_scale.unwrap_or(false);
    let jmax = args
        .jmax
        .unwrap_or(if full { preset.full_jmax } else { preset.desk_jmax });
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("fig-{}", preset.id)));
    info!(
        "{}: J up to {jmax} (desk cap {}, full {}; desk budget {})",
        preset.id, preset.desk_jmax, preset.full_jmax, preset.budget
    );
    for p in run_fig(&preset, cfg, jmax, &dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

/// Parses `argv` and runs the selected command.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    dispatch(cli)
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.overridden_by(&cli.common);
    if cli.common.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config("a subcommand is required (try --help)".into()));
    };
    match command {
        Command::Sweep => cmd_sweep(&cfg),
        Command::Mfa(a) => cmd_mfa(&cfg, a),
        Command::Tau(a) => cmd_tau(&cfg, a),
        Command::Rstat(a) => cmd_rstat(&cfg, a),
        Command::Classical { what } => cmd_classical(&cfg, what),
        Command::Fig(a) => cmd_fig(&cfg, a),
    }
}

/// Entry point used by the binary: returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.common.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_windows() {
        assert_eq!(parse_q_grid("0.1:4.0:0.1").unwrap().len(), 40);
        assert_eq!(parse_q_grid("2").unwrap(), vec![2.0]);
        assert_eq!(parse_q_grid("0.5,2,3").unwrap(), vec![0.5, 2.0, 3.0]);
        assert!(parse_q_grid("0:1:0.5").is_err());
        assert_eq!(parse_window("7.0:9.0").unwrap(), (7.0, 9.0));
        assert!(parse_window("9:7").is_err());
    }

    #[test]
    fn probe_lists() {
        assert_eq!(parse_probes("0.2,1;-0.5,0").unwrap(), vec![(0.2, 1.0), (-0.5, 0.0)]);
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        fs::write(&f, "Q,P\n0.1,0\n# comment\n0.3 0.4\n").unwrap();
        assert_eq!(parse_probes(f.to_str().unwrap()).unwrap(), vec![(0.1, 0.0), (0.3, 0.4)]);
        assert!(parse_probes("0.1").is_err());
        assert_eq!(parse_seeds(Some("grid:4"), 10).unwrap().len(), 12);
    }

    #[test]
    fn config_roundtrip_and_override() {
        let cfg = RunConfig {
            model: Some(Model::Qkt),
            alpha: Some(0.84),
            k: Some(2.5),
            jgrid: Some("50:500:50".into()),
            probes: Some("0.2,1;0.38,1".into()),
            q_grid: Some("0.1:4.0:0.1".into()),
            window: Some("5.0:7.0".into()),
            cache_dir: Some("/tmp/c".into()),
            out: Some("o.csv".into()),
            workers: Some(2),
            budget_flops: Some(1e12),
            full_scale: Some(false),
            parity_mode: Some(ParityMode::Positive),
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        let flags = CommonFlags {
            k: Some(30.0),
            ..Default::default()
        };
        let merged = cfg.clone().overridden_by(&flags);
        assert_eq!(merged.k, Some(30.0));
        assert_eq!(merged.alpha, Some(0.84));
        assert!(RunConfig::from_toml("unknown = 1").is_err());
    }

    #[test]
    fn every_preset_resolves() {
        for id in ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig10", "fig11", "appA", "appB", "appC", "6", "APPC"] {
            let p = fig_preset(id).unwrap();
            assert!(p.desk_jmax <= p.full_jmax);
        }
        assert_eq!(fig_preset("fig2").unwrap().probes.len(), 8);
        assert_eq!(fig_preset("fig4").unwrap().probes.len(), 250);
        assert_eq!(fig_preset("fig7").unwrap().probes.len(), 31);
        assert!(fig_preset("fig8").is_err());
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let e = run(["spinscale", "sweep", "--q-grid", "9"]).unwrap_err();
        assert!(e.to_string().contains("--q-grid"), "{e}");
        let e = run(["spinscale", "sweep", "--bogus"]).unwrap_err();
        assert!(e.to_string().contains("--bogus"), "{e}");
    }
}
