//! Equal-QFI loci: solve F_Q(proposed) = F_Q(target) for the target
//! amplitude |beta| over grids of the proposed state's free parameters,
//! sweep fidelity along the solutions, and emit figure datasets.
//!
//! The target families (cat / four-component) have QFI monotone in |beta|
//! over the search bracket in every configuration we emit, but the solver
//! does not assume it: the bracket is split into fixed panels, every
//! sign-change panel is refined independently, and cells with several roots
//! carry a multiplicity flag. Cells with no bracket anywhere are omitted
//! from the point list and recorded for auditability.

use crate::error::{Error, Result};
use crate::linalg::brent_root;
use crate::metrics::{self, Convention};
use crate::phasespace::{self, PhaseGrid};
use crate::states::{self, PairLabel, PairParams, PairSpec, StateSpec};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Amplitude search bracket; covers every figure with margin.
pub const BRACKET_LO: f64 = 1e-3;
pub const BRACKET_HI: f64 = 6.0;
/// Monotonicity-screening subdivision of the bracket.
pub const BRACKET_PANELS: usize = 24;
/// Accepted residual |F_target - F_proposed| at a solved point, relative
/// to max(1, F).
pub const RESIDUAL_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(min: f64, max: f64, step: f64) -> GridRange {
        GridRange { min, max, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::NonFinite("grid range".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidSpec("grid step must be positive".into()));
        }
        if self.max < self.min {
            return Err(Error::InvalidSpec("grid max below min".into()));
        }
        Ok(())
    }

    /// min, min + step, ... up to max (inclusive within a half-ulp slack).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Probe-direction policy for the solved constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaPolicy {
    /// One explicit direction.
    Fixed(f64),
    /// Record the whole direction grid: every grid cell is solved at every
    /// listed theta (sensitivity analysis; not valid for figure schemas).
    Sweep(Vec<f64>),
    /// Assert (numerically) that the target QFI is direction-independent,
    /// then use the pair's default direction.
    TargetInvariant,
}

fn default_n_values() -> Vec<u32> {
    vec![0, 1, 2, 3, 4]
}

fn default_r_range() -> GridRange {
    GridRange::new(0.0, 1.2, 0.02)
}

fn default_alpha_range() -> GridRange {
    GridRange::new(0.1, 2.5, 0.05)
}

fn default_eps() -> f64 {
    crate::DEFAULT_EPS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocusConfig {
    pub pair: PairLabel,
    /// Basis label of the source member (photon-added vs pristine group).
    #[serde(default)]
    pub source_l: u32,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u32>,
    /// Squeeze grid (squeezed-family proposed states).
    #[serde(default = "default_r_range")]
    pub r_range: GridRange,
    /// Source amplitude grid (displaced proposed states and the
    /// photon-added vs pristine group).
    #[serde(default = "default_alpha_range")]
    pub alpha_range: GridRange,
    /// None means the pair's default fixed direction.
    #[serde(default)]
    pub theta_policy: Option<ThetaPolicy>,
    #[serde(default)]
    pub convention: Convention,
    /// Unit phase on all superposition amplitudes; None means the pair's
    /// per-figure default.
    #[serde(default, with = "crate::states::cplx_opt")]
    pub beta_phase: Option<C64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl LocusConfig {
    pub fn new(pair: PairLabel) -> LocusConfig {
        LocusConfig {
            pair,
            source_l: 0,
            n_values: default_n_values(),
            r_range: default_r_range(),
            alpha_range: default_alpha_range(),
            theta_policy: None,
            convention: Convention::default(),
            beta_phase: None,
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidSpec("n_values must be nonempty".into()));
        }
        if self.n_values.iter().any(|&n| n > 8) {
            return Err(Error::InvalidSpec("photon-add counts above 8 unsupported".into()));
        }
        self.r_range.validate()?;
        self.alpha_range.validate()?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidSpec("eps must be a positive number".into()));
        }
        if let Some(ThetaPolicy::Sweep(grid)) = &self.theta_policy {
            if grid.is_empty() {
                return Err(Error::InvalidSpec("theta sweep grid must be nonempty".into()));
            }
            if grid.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite("theta sweep grid".into()));
            }
        }
        if let Some(ThetaPolicy::Fixed(t)) = &self.theta_policy {
            if !t.is_finite() {
                return Err(Error::NonFinite("theta".into()));
            }
        }
        if let Some(ph) = self.beta_phase {
            if (ph.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidSpec("beta_phase must have unit modulus".into()));
            }
        }
        Ok(())
    }

    pub fn phase(&self) -> C64 {
        self.beta_phase.unwrap_or_else(|| self.pair.default_beta_phase())
    }

    fn uses_r(&self) -> bool {
        self.pair.is_proposed_vs_target()
    }

    fn uses_alpha(&self) -> bool {
        self.pair == PairLabel::Prstrg1 || !self.pair.is_proposed_vs_target()
    }

    /// Resolved probe directions. `TargetInvariant` first checks that the
    /// target QFI is flat in theta for every target label this run touches.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        match &self.theta_policy {
            None => Ok(vec![self.pair.default_theta()]),
            Some(ThetaPolicy::Fixed(t)) => Ok(vec![*t]),
            Some(ThetaPolicy::Sweep(grid)) => Ok(grid.clone()),
            Some(ThetaPolicy::TargetInvariant) => {
                let phase = self.phase();
                let mut labels: Vec<u32> = self
                    .n_values
                    .iter()
                    .map(|&n| self.pair.target_l(n, self.source_l))
                    .collect();
                labels.sort_unstable();
                labels.dedup();
                for l in labels {
                    let spec = StateSpec::new(self.pair.target_family())
                        .with_beta(phase * 1.5)
                        .with_l(l);
                    let (v, _) = states::build_state_auto(&spec, self.eps)?;
                    let probe: Vec<f64> = (0..8)
                        .map(|k| metrics::var_g(&v, k as f64 * std::f64::consts::PI / 8.0))
                        .collect();
                    let lo = probe.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if (hi - lo) > 1e-8 * hi.abs().max(1.0) {
                        return Err(Error::InvalidSpec(format!(
                            "target-invariant theta policy: target label {l} varies \
                             with direction (spread {:.3e})",
                            hi - lo
                        )));
                    }
                }
                Ok(vec![self.pair.default_theta()])
            }
        }
    }
}

/// One solved point of the equal-QFI constraint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocusPoint {
    pub n: u32,
    /// Named free-parameter values at the cell (always includes "theta").
    pub params: BTreeMap<String, f64>,
    /// Solved target amplitude |beta|.
    pub beta: f64,
    /// Constraint value (proposed-state QFI in the run's convention).
    pub fq: f64,
    /// |F_target(beta) - F_proposed| at the solution.
    pub residual: f64,
    /// Number of roots in this cell; > 1 marks an ambiguous cell.
    pub multiplicity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_n_proposed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_n_target: Option<f64>,
    /// Truncation flagged (or construction failed) while building the pair
    /// at matched cutoff; the point is kept.
    #[serde(default)]
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmittedCell {
    pub n: u32,
    pub params: BTreeMap<String, f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocusRun {
    pub points: Vec<LocusPoint>,
    pub omitted: Vec<OmittedCell>,
    /// Whether every target curve was monotone across the panel edges.
    pub target_monotone: bool,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    theta: f64,
    r: Option<f64>,
    alpha: Option<f64>,
}

impl Cell {
    fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        if let Some(a) = self.alpha {
            m.insert("alpha".to_string(), a);
        }
        if let Some(r) = self.r {
            m.insert("r".to_string(), r);
        }
        m.insert("theta".to_string(), self.theta);
        m
    }

    fn pair_params(&self, beta: f64, phase: C64) -> PairParams {
        PairParams {
            r: self.r.unwrap_or(0.0),
            alpha: self.alpha.unwrap_or(0.0),
            beta,
            beta_phase: phase,
        }
    }
}

fn qfi_auto(spec: &StateSpec, theta: f64, convention: Convention, eps: f64) -> Result<f64> {
    let (v, _) = states::build_state_auto(spec, eps)?;
    metrics::qfi_displacement(&v, theta, convention, eps)
}

struct TargetCtx {
    family: states::Family,
    l: u32,
    phase: C64,
    theta: f64,
    convention: Convention,
    eps: f64,
}

impl TargetCtx {
    fn spec(&self, beta: f64) -> StateSpec {
        StateSpec::new(self.family).with_beta(self.phase * beta).with_l(self.l)
    }

    fn fq(&self, beta: f64) -> Result<f64> {
        qfi_auto(&self.spec(beta), self.theta, self.convention, self.eps)
    }
}

fn panel_edges() -> Vec<f64> {
    (0..=BRACKET_PANELS)
        .map(|i| BRACKET_LO + i as f64 * (BRACKET_HI - BRACKET_LO) / BRACKET_PANELS as f64)
        .collect()
}

/// Roots of F_target(beta) = fprop over the bracket: panel screening plus
/// Brent refinement in each sign-change panel, near-zero panel edges
/// accepted directly (the degenerate corners sit at the bracket edge).
fn cell_roots(
    ctx: &TargetCtx,
    edges: &[f64],
    target_fq: &[f64],
    fprop: f64,
) -> Result<Vec<(f64, f64)>> {
    let scale = fprop.abs().max(1.0);
    let g: Vec<f64> = target_fq.iter().map(|f| f - fprop).collect();
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut edge_root = vec![false; edges.len()];
    for (i, gi) in g.iter().enumerate() {
        if gi.abs() <= RESIDUAL_RTOL * scale {
            edge_root[i] = true;
            roots.push((edges[i], gi.abs()));
        }
    }
    for i in 0..edges.len() - 1 {
        if edge_root[i] || edge_root[i + 1] {
            continue;
        }
        if g[i].signum() * g[i + 1].signum() < 0.0 {
            let beta = brent_root(
                |b| match ctx.fq(b) {
                    Ok(f) => f - fprop,
                    Err(_) => f64::NAN,
                },
                edges[i],
                edges[i + 1],
                1e-14,
                1e-12,
                200,
            )?;
            let residual = (ctx.fq(beta)? - fprop).abs();
            roots.push((beta, residual));
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(roots)
}

/// Solve the equal-QFI constraint over the config's grids. Points come out
/// in lexicographic (n, theta, grid) order; cells without any bracket are
/// omitted from `points` and recorded in `omitted`.
pub fn solve_equal_qfi(cfg: &LocusConfig) -> Result<LocusRun> {
    cfg.validate()?;
    let thetas = cfg.thetas()?;
    let phase = cfg.phase();
    let edges = panel_edges();
    let r_values: Vec<Option<f64>> = if cfg.uses_r() {
        cfg.r_range.values().into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let a_values: Vec<Option<f64>> = if cfg.uses_alpha() {
        cfg.alpha_range.values().into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    let mut points = Vec::new();
    let mut omitted = Vec::new();
    let mut monotone = true;

    for &n in &cfg.n_values {
        let target_l = cfg.pair.target_l(n, cfg.source_l);
        for &theta in &thetas {
            let ctx = TargetCtx {
                family: cfg.pair.target_family(),
                l: target_l,
                phase,
                theta,
                convention: cfg.convention,
                eps: cfg.eps,
            };
            let target_fq = edges
                .par_iter()
                .map(|&b| ctx.fq(b))
                .collect::<Result<Vec<f64>>>()?;
            let dir = (target_fq[target_fq.len() - 1] - target_fq[0]).signum();
            let span = (target_fq[target_fq.len() - 1] - target_fq[0]).abs().max(1e-12);
            if target_fq
                .windows(2)
                .any(|w| (w[1] - w[0]) * dir < -1e-6 * span)
            {
                monotone = false;
            }

            let cells: Vec<Cell> = r_values
                .iter()
                .flat_map(|&r| a_values.iter().map(move |&alpha| Cell { theta, r, alpha }))
                .collect();

            // Per cell: proposed-state QFI plus the (beta, residual) roots.
            type CellSolve = Result<(f64, Vec<(f64, f64)>)>;
            let solved: Vec<(Cell, CellSolve)> = cells
                .par_iter()
                .map(|cell| {
                    let pair_spec =
                        PairSpec { label: cfg.pair, n, source_l: cfg.source_l };
                    let out = states::resolve_pair(&pair_spec, &cell.pair_params(1.0, phase))
                        .and_then(|(proposed, _)| {
                            qfi_auto(&proposed, theta, cfg.convention, cfg.eps)
                        })
                        .and_then(|fprop| {
                            cell_roots(&ctx, &edges, &target_fq, fprop)
                                .map(|roots| (fprop, roots))
                        });
                    (*cell, out)
                })
                .collect();

            for (cell, out) in solved {
                match out {
                    Ok((fprop, roots)) => {
                        if roots.is_empty() {
                            omitted.push(OmittedCell {
                                n,
                                params: cell.params(),
                                reason: "no-bracket".to_string(),
                            });
                        } else {
                            let mult = roots.len() as u32;
                            for (beta, residual) in roots {
                                points.push(LocusPoint {
                                    n,
                                    params: cell.params(),
                                    beta,
                                    fq: fprop,
                                    residual,
                                    multiplicity: mult,
                                    fidelity: None,
                                    mean_n_proposed: None,
                                    mean_n_target: None,
                                    flagged: false,
                                });
                            }
                        }
                    }
                    Err(e) => omitted.push(OmittedCell {
                        n,
                        params: cell.params(),
                        reason: format!("build-error: {e}"),
                    }),
                }
            }
        }
    }
    Ok(LocusRun { points, omitted, target_monotone: monotone })
}

/// Swept points plus a (cutoff, count) histogram of the matched cutoffs.
pub type SweptPoints = (Vec<LocusPoint>, Vec<(usize, usize)>);

/// Fill fidelity and mean photon numbers at each solved point, building
/// both pair members at the larger of their two auto-cutoffs. Flagged or
/// failed constructions mark the point; nothing is dropped.
pub fn fidelity_sweep(cfg: &LocusConfig, points: Vec<LocusPoint>) -> Result<SweptPoints> {
    cfg.validate()?;
    let phase = cfg.phase();
    let filled: Vec<(LocusPoint, Option<usize>)> = points
        .into_par_iter()
        .map(|mut p| {
            let pair_spec = PairSpec { label: cfg.pair, n: p.n, source_l: cfg.source_l };
            let params = PairParams {
                r: p.params.get("r").copied().unwrap_or(0.0),
                alpha: p.params.get("alpha").copied().unwrap_or(0.0),
                beta: p.beta,
                beta_phase: phase,
            };
            let outcome = (|| -> Result<(f64, f64, f64, bool, usize)> {
                let (proposed, target) = states::resolve_pair(&pair_spec, &params)?;
                let cp = states::auto_cutoff(&proposed, cfg.eps)?;
                let ct = states::auto_cutoff(&target, cfg.eps)?;
                let matched = cp.max(ct);
                let vp = states::build_state(&proposed, matched)?;
                let vt = states::build_state(&target, matched)?;
                let fid = metrics::fidelity(&vt, &vp)?;
                let (mp, _) = metrics::mean_photon(&vp);
                let (mt, _) = metrics::mean_photon(&vt);
                let flagged = vp.is_flagged(cfg.eps) || vt.is_flagged(cfg.eps);
                Ok((fid, mp, mt, flagged, matched))
            })();
            match outcome {
                Ok((fid, mp, mt, flagged, matched)) => {
                    p.fidelity = Some(fid);
                    p.mean_n_proposed = Some(mp);
                    p.mean_n_target = Some(mt);
                    p.flagged = flagged;
                    (p, Some(matched))
                }
                Err(_) => {
                    p.flagged = true;
                    (p, None)
                }
            }
        })
        .collect();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(filled.len());
    for (p, cutoff) in filled {
        if let Some(c) = cutoff {
            *hist.entry(c).or_insert(0) += 1;
        }
        out.push(p);
    }
    Ok((out, hist.into_iter().collect()))
}

/// Solved and swept dataset, ready for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocusSet {
    pub config: LocusConfig,
    pub theta_values: Vec<f64>,
    pub beta_phase: [f64; 2],
    pub target_monotone: bool,
    pub points: Vec<LocusPoint>,
    pub omitted: Vec<OmittedCell>,
    pub cutoff_histogram: Vec<(usize, usize)>,
}

pub fn solve_and_sweep(cfg: &LocusConfig) -> Result<LocusSet> {
    let thetas = cfg.thetas()?;
    let run = solve_equal_qfi(cfg)?;
    let (points, hist) = fidelity_sweep(cfg, run.points)?;
    let phase = cfg.phase();
    Ok(LocusSet {
        config: cfg.clone(),
        theta_values: thetas,
        beta_phase: [phase.re, phase.im],
        target_monotone: run.target_monotone,
        points,
        omitted: run.omitted,
        cutoff_histogram: hist,
    })
}

// ---------------------------------------------------------------------------
// Figure datasets.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4];

    pub fn as_str(&self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }

    pub fn parse(s: &str) -> Result<Figure> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown figure '{s}'")))
    }
}

fn default_fringe_beta() -> f64 {
    2.0
}

fn default_fringe_n() -> Vec<u32> {
    vec![0, 1, 2]
}

fn default_directions() -> usize {
    64
}

fn default_wigner_points() -> usize {
    101
}

fn default_true() -> bool {
    true
}

/// Fringe-survey dataset: central fringe area of a photon-added cat per
/// addition count, optionally with the Wigner grid per count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    #[serde(default = "default_fringe_beta")]
    pub beta: f64,
    #[serde(default)]
    pub l: u32,
    #[serde(default = "default_fringe_n")]
    pub n_values: Vec<u32>,
    #[serde(default = "default_directions")]
    pub n_directions: usize,
    #[serde(default = "default_wigner_points")]
    pub wigner_points: usize,
    #[serde(default = "default_true")]
    pub emit_wigner: bool,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for FringeConfig {
    fn default() -> FringeConfig {
        FringeConfig {
            beta: default_fringe_beta(),
            l: 0,
            n_values: default_fringe_n(),
            n_directions: default_directions(),
            wigner_points: default_wigner_points(),
            emit_wigner: true,
            eps: default_eps(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FigureFiles {
    pub csv: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn sha256_hex(s: &str) -> String {
    let mut h = Sha256::new();
    h.update(s.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn theta_policy_echo(cfg: &LocusConfig, thetas: &[f64]) -> serde_json::Value {
    let kind = match &cfg.theta_policy {
        None => "default",
        Some(ThetaPolicy::Fixed(_)) => "fixed",
        Some(ThetaPolicy::Sweep(_)) => "sweep",
        Some(ThetaPolicy::TargetInvariant) => "target-invariant",
    };
    serde_json::json!({ "kind": kind, "values": thetas })
}

/// Emit the fringe-survey dataset (CFA per photon-add count, plus Wigner
/// grids): one summary CSV, optional per-count grid CSVs, one manifest.
pub fn emit_fringe_figure(cfg: &FringeConfig, out_dir: &Path) -> Result<FigureFiles> {
    if cfg.n_values.is_empty() {
        return Err(Error::InvalidSpec("n_values must be nonempty".into()));
    }
    if !(cfg.beta.is_finite() && cfg.beta > 0.0) {
        return Err(Error::InvalidSpec("fringe beta must be positive".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rows = String::from("n,cfa,zero_fraction,strict_ok,cap_radius,mean_n\n");
    let mut files = Vec::new();
    let mut cutoffs = Vec::new();
    for &n in &cfg.n_values {
        let spec = StateSpec::new(states::Family::Cat)
            .with_beta(C64::new(cfg.beta, 0.0))
            .with_l(cfg.l)
            .with_n_add(n);
        let (v, cutoff) = states::build_state_auto(&spec, cfg.eps)?;
        cutoffs.push((n, cutoff));
        let report = phasespace::central_fringe_area(&v, cfg.n_directions)?;
        let (mean_n, _) = metrics::mean_photon(&v);
        let _ = writeln!(
            rows,
            "{n},{},{},{},{},{}",
            fmt_f(report.cfa),
            fmt_f(report.zero_fraction),
            u8::from(report.strict_ok),
            fmt_f(report.cap_radius),
            fmt_f(mean_n)
        );
        if cfg.emit_wigner && cfg.wigner_points >= 16 {
            let shell = PhaseGrid::auto_shell(&v, cfg.wigner_points, cfg.wigner_points)?;
            let grid = phasespace::wigner(&v, &shell)?;
            let path = out_dir.join(format!("fig1_wigner_n{n}.csv"));
            std::fs::write(&path, grid.to_csv())?;
            files.push(path);
        }
    }
    let csv_path = out_dir.join("fig1.csv");
    std::fs::write(&csv_path, &rows)?;
    files.insert(0, csv_path);

    let config_json = serde_json::to_string(cfg)?;
    let manifest = serde_json::json!({
        "figure": "fig1",
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "config": serde_json::from_str::<serde_json::Value>(&config_json)?,
        "config_sha256": sha256_hex(&config_json),
        "rows": cfg.n_values.len(),
        "cutoffs": cutoffs,
    });
    let manifest_path = out_dir.join("fig1_manifest.json");
    std::fs::write(&manifest_path, format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
    Ok(FigureFiles { csv: files, manifest: manifest_path })
}

fn figure_columns(which: Figure, cfg: &LocusConfig) -> Result<Vec<&'static str>> {
    match which {
        Figure::Fig2 => {
            if cfg.pair.is_proposed_vs_target() {
                return Err(Error::InvalidSpec(
                    "fig2 expects a photon-added vs pristine pair".into(),
                ));
            }
            Ok(vec!["n", "alpha", "beta", "fq", "fidelity"])
        }
        Figure::Fig3 => {
            if !cfg.pair.is_proposed_vs_target() {
                return Err(Error::InvalidSpec("fig3 expects a proposed-vs-target pair".into()));
            }
            if cfg.pair == PairLabel::Prstrg1 {
                Ok(vec!["n", "r", "alpha", "beta", "fq", "fidelity"])
            } else {
                Ok(vec!["n", "r", "beta", "fq", "fidelity"])
            }
        }
        Figure::Fig4 => {
            if !cfg.pair.is_proposed_vs_target() {
                return Err(Error::InvalidSpec("fig4 expects a proposed-vs-target pair".into()));
            }
            Ok(vec!["n", "beta", "fidelity"])
        }
        Figure::Fig1 => Err(Error::InvalidSpec("fig1 uses the fringe config".into())),
    }
}

/// Emit a locus figure dataset: one CSV with the figure's fixed schema plus
/// a manifest carrying the effective config, its hash, the resolved theta
/// policy and beta phase, omitted-cell audit, and the cutoff histogram.
pub fn emit_locus_figure(
    cfg: &LocusConfig,
    which: Figure,
    out_dir: &Path,
) -> Result<FigureFiles> {
    let columns = figure_columns(which, cfg)?;
    if matches!(cfg.theta_policy, Some(ThetaPolicy::Sweep(_))) {
        return Err(Error::InvalidSpec(
            "figure schemas are fixed; theta sweeps are for locus runs".into(),
        ));
    }
    let set = solve_and_sweep(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let mut rows = String::new();
    let _ = writeln!(rows, "{}", columns.join(","));
    for p in &set.points {
        let mut fields = Vec::with_capacity(columns.len());
        for col in &columns {
            match *col {
                "n" => fields.push(p.n.to_string()),
                "beta" => fields.push(fmt_f(p.beta)),
                "fq" => fields.push(fmt_f(p.fq)),
                "fidelity" => fields.push(fmt_f(p.fidelity.unwrap_or(f64::NAN))),
                other => fields.push(fmt_f(p.params.get(other).copied().unwrap_or(f64::NAN))),
            }
        }
        let _ = writeln!(rows, "{}", fields.join(","));
    }
    let csv_path = out_dir.join(format!("{}.csv", which.as_str()));
    std::fs::write(&csv_path, &rows)?;

    let config_json = serde_json::to_string(cfg)?;
    let manifest = serde_json::json!({
        "figure": which.as_str(),
        "files": [csv_path.file_name().unwrap().to_string_lossy()],
        "config": serde_json::from_str::<serde_json::Value>(&config_json)?,
        "config_sha256": sha256_hex(&config_json),
        "convention": cfg.convention.as_str(),
        "theta_policy": theta_policy_echo(cfg, &set.theta_values),
        "beta_phase": set.beta_phase,
        "rows": set.points.len(),
        "flagged_rows": set.points.iter().filter(|p| p.flagged).count(),
        "omitted": set.omitted.len(),
        "omitted_cells": set.omitted,
        "target_monotone": set.target_monotone,
        "cutoff_histogram": set.cutoff_histogram,
    });
    let manifest_path = out_dir.join(format!("{}_manifest.json", which.as_str()));
    std::fs::write(&manifest_path, format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
    Ok(FigureFiles { csv: vec![csv_path], manifest: manifest_path })
}

/// Dispatcher over the four figure datasets.
pub fn emit_figure_dataset(
    which: Figure,
    locus: Option<&LocusConfig>,
    fringe: Option<&FringeConfig>,
    out_dir: &Path,
) -> Result<FigureFiles> {
    match which {
        Figure::Fig1 => {
            let def = FringeConfig::default();
            emit_fringe_figure(fringe.unwrap_or(&def), out_dir)
        }
        _ => {
            let cfg = locus.ok_or_else(|| {
                Error::InvalidSpec("locus config required for this figure".into())
            })?;
            emit_locus_figure(cfg, which, out_dir)
        }
    }
}
