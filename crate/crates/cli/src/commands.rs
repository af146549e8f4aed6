//! Subcommand payloads and handlers.
//!
//! Every run follows one convention: an optional JSON config document
//! supplies the payload, explicit flags override its fields, and any run
//! that writes files echoes the merged effective config (plus its sha256)
//! into a manifest in the output directory. Handlers return the process
//! exit code; errors map through `Error::exit_code`.

use clap::Args;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use subplanck::error::{Error, Result};
use subplanck::loci::{self, Figure, FringeConfig, LocusConfig, ThetaPolicy};
use subplanck::metrics::{self, Convention};
use subplanck::oracle;
use subplanck::phasespace::{self, PhaseGrid};
use subplanck::states::{self, Family, PairLabel, StateSpec};
use subplanck::DEFAULT_EPS;

use crate::args::{load_config, parse_complex, parse_count_list, parse_family, CountList};

pub fn parse_convention(s: &str) -> std::result::Result<Convention, String> {
    match s {
        "appendix" => Ok(Convention::Appendix),
        "intro" => Ok(Convention::Intro),
        _ => Err(format!("unknown convention '{s}' (appendix or intro)")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<PairLabel, String> {
    PairLabel::parse(s).map_err(|e| e.to_string())
}

fn parse_figure(s: &str) -> std::result::Result<Figure, String> {
    Figure::parse(s).map_err(|e| e.to_string())
}

/// State-defining flags shared by the single-state commands. All optional:
/// they overlay whatever the config document carries.
#[derive(Args, Debug, Clone)]
pub struct BaseSpecArgs {
    /// State family: coherent, cat, ks_plus, ks_minus, sq, ss, ssd.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Displacement amplitude, complex literal like "1.5" or "1+0.5i".
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<C64>,
    /// Superposition amplitude, complex literal.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: Option<C64>,
    /// Squeeze magnitude.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Squeeze phase.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Basis label.
    #[arg(long)]
    pub l: Option<u32>,
}

fn merge_spec(
    base: Option<StateSpec>,
    args: &BaseSpecArgs,
    n_add: Option<u32>,
    n_sub: Option<u32>,
) -> Result<StateSpec> {
    let mut spec = match (base, args.family) {
        (Some(mut s), f) => {
            if let Some(f) = f {
                s.family = f;
            }
            s
        }
        (None, Some(f)) => StateSpec::new(f),
        (None, None) => {
            return Err(Error::InvalidSpec(
                "no state given: pass --family or a config with a spec".into(),
            ))
        }
    };
    if let Some(a) = args.alpha {
        spec.alpha = Some(a);
    }
    if let Some(b) = args.beta {
        spec.beta = Some(b);
    }
    if let Some(r) = args.r {
        spec.r = Some(r);
    }
    if let Some(p) = args.phi {
        spec.phi = Some(p);
    }
    if let Some(l) = args.l {
        spec.l = Some(l);
    }
    if let Some(n) = n_add {
        spec.n_add = n;
    }
    if let Some(n) = n_sub {
        spec.n_sub = n;
    }
    spec.validate()?;
    Ok(spec)
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

/// Collects output files, then seals the run with a manifest echoing the
/// merged config. Re-runs are byte-identical: all content comes from
/// deterministic serialization of deterministic computations.
struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<OutDir> {
        std::fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn seal<C: Serialize>(mut self, command: &str, config: &C) -> Result<PathBuf> {
        let config_json = serde_json::to_string(config)?;
        let manifest = serde_json::json!({
            "command": command,
            "config": serde_json::from_str::<serde_json::Value>(&config_json)?,
            "config_sha256": sha256_hex(&config_json),
            "files": self.files,
        });
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
        self.files.push("manifest.json".into());
        Ok(path)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Truncation gate: `--allow-flagged` keeps flagged states in play (the
/// reported tail_mass stays honest); cutoff selection still uses real eps.
fn gate_eps(allow_flagged: bool, eps: f64) -> f64 {
    if allow_flagged {
        f64::INFINITY
    } else {
        eps
    }
}

fn build_pinned_or_auto(
    spec: &StateSpec,
    cutoff: Option<usize>,
    eps: f64,
) -> Result<(subplanck::fock::FockVector, usize)> {
    match cutoff {
        Some(c) => {
            if c == 0 || c > subplanck::MAX_CUTOFF {
                return Err(Error::InvalidSpec(format!(
                    "cutoff must be in 1..={}",
                    subplanck::MAX_CUTOFF
                )));
            }
            let v = states::build_state(spec, c)?;
            Ok((v, c))
        }
        None => states::build_state_auto(spec, eps),
    }
}

// ---------------------------------------------------------------------------
// state

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateCmdConfig {
    pub spec: Option<StateSpec>,
    pub theta: f64,
    pub convention: Convention,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub eps: f64,
}

impl Default for StateCmdConfig {
    fn default() -> Self {
        StateCmdConfig {
            spec: None,
            theta: 0.0,
            convention: Convention::default(),
            cutoff: None,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Args, Debug)]
pub struct StateArgs {
    #[command(flatten)]
    pub spec: BaseSpecArgs,
    /// Photon additions applied last.
    #[arg(long = "n-add")]
    pub n_add: Option<u32>,
    /// Photon subtractions applied last.
    #[arg(long = "n-sub")]
    pub n_sub: Option<u32>,
    /// Probe direction for the metric report.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// QFI convention: appendix (vacuum 1) or intro (vacuum 4).
    #[arg(long, value_parser = parse_convention)]
    pub convention: Option<Convention>,
    /// Pin the Fock cutoff instead of auto-selecting it.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Truncation tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// JSON config document; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for amplitude/metric/manifest files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Proceed (exit 0) even when the state is truncation-flagged.
    #[arg(long = "allow-flagged")]
    pub allow_flagged: bool,
}

pub fn cmd_state(a: StateArgs) -> Result<i32> {
    let mut cfg: StateCmdConfig = load_config(a.config.as_deref())?;
    cfg.spec = Some(merge_spec(cfg.spec.take(), &a.spec, a.n_add, a.n_sub)?);
    if let Some(t) = a.theta {
        cfg.theta = t;
    }
    if let Some(c) = a.convention {
        cfg.convention = c;
    }
    if let Some(c) = a.cutoff {
        cfg.cutoff = Some(c);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    let spec = cfg.spec.clone().expect("merged above");
    let (v, cutoff) = build_pinned_or_auto(&spec, cfg.cutoff, cfg.eps)?;
    let report =
        metrics::metric_report(&v, cfg.theta, cfg.convention, gate_eps(a.allow_flagged, cfg.eps))?;
    print_json(&report)?;
    if let Some(out) = &a.out {
        let mut dir = OutDir::create(out)?;
        let amps: Vec<[f64; 2]> = v.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        let state_doc = serde_json::json!({
            "spec": &spec,
            "cutoff": cutoff,
            "norm_sqr": v.norm_sqr(),
            "tail_mass": v.tail_mass(),
            "flagged": v.is_flagged(cfg.eps),
            "amplitudes": amps,
        });
        dir.write("state.json", &format!("{}\n", serde_json::to_string_pretty(&state_doc)?))?;
        dir.write("metrics.json", &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        dir.seal("state", &cfg)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// wigner / overlap

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerCmdConfig {
    pub spec: Option<StateSpec>,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub eps: f64,
}

impl Default for WignerCmdConfig {
    fn default() -> Self {
        WignerCmdConfig { spec: None, points: 101, half_width: None, eps: DEFAULT_EPS }
    }
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    #[command(flatten)]
    pub spec: BaseSpecArgs,
    #[arg(long = "n-add")]
    pub n_add: Option<u32>,
    #[arg(long = "n-sub")]
    pub n_sub: Option<u32>,
    /// Grid points per axis.
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-width of the square grid; default adapts to the state.
    #[arg(long = "half-width")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn grid_for(
    v: &subplanck::fock::FockVector,
    points: usize,
    half_width: Option<f64>,
) -> Result<PhaseGrid> {
    match half_width {
        Some(w) => {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidSpec("half-width must be positive".into()));
            }
            PhaseGrid::shell(-w, w, -w, w, points, points)
        }
        None => PhaseGrid::auto_shell(v, points, points),
    }
}

pub fn cmd_wigner(a: WignerArgs) -> Result<i32> {
    let mut cfg: WignerCmdConfig = load_config(a.config.as_deref())?;
    cfg.spec = Some(merge_spec(cfg.spec.take(), &a.spec, a.n_add, a.n_sub)?);
    if let Some(p) = a.points {
        cfg.points = p;
    }
    if let Some(w) = a.half_width {
        cfg.half_width = Some(w);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    let spec = cfg.spec.clone().expect("merged above");
    let (v, _) = states::build_state_auto(&spec, cfg.eps)?;
    let shell = grid_for(&v, cfg.points, cfg.half_width)?;
    let grid = phasespace::wigner(&v, &shell)?;
    let csv = grid.to_csv();
    match &a.out {
        None => print!("{csv}"),
        Some(out) => {
            let mut dir = OutDir::create(out)?;
            dir.write("wigner.csv", &csv)?;
            let manifest = dir.seal("wigner", &cfg)?;
            println!("{}", serde_json::json!({ "files": ["wigner.csv"], "manifest": manifest }));
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapCmdConfig {
    pub spec: Option<StateSpec>,
    /// Single evaluation point (plane scan when absent).
    #[serde(skip_serializing_if = "Option::is_none", with = "overlap_lambda")]
    pub lambda: Option<C64>,
    /// Ray direction for the first-zero search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<f64>,
    pub first_zero: bool,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub eps: f64,
}

// StateSpec's optional-complex convention ("1.5" or {"re":..,"im":..}) is
// crate-private; mirror it here for the one field that needs it.
mod overlap_lambda {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Full { re: f64, im: f64 },
    }

    pub fn serialize<S: Serializer>(
        v: &Option<C64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(z) => Repr::Full { re: z.re, im: z.im }.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<C64>, D::Error> {
        let r = Option::<Repr>::deserialize(d)?;
        Ok(r.map(|r| match r {
            Repr::Real(x) => C64::new(x, 0.0),
            Repr::Full { re, im } => C64::new(re, im),
        }))
    }
}

impl Default for OverlapCmdConfig {
    fn default() -> Self {
        OverlapCmdConfig {
            spec: None,
            lambda: None,
            dir: None,
            first_zero: false,
            points: 101,
            half_width: None,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub spec: BaseSpecArgs,
    #[arg(long = "n-add")]
    pub n_add: Option<u32>,
    #[arg(long = "n-sub")]
    pub n_sub: Option<u32>,
    /// Evaluate the overlap at one displacement (complex literal).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: Option<C64>,
    /// Ray direction (radians) for --first-zero.
    #[arg(long, allow_hyphen_values = true)]
    pub dir: Option<f64>,
    /// Report the first zero crossing along --dir.
    #[arg(long = "first-zero")]
    pub first_zero: bool,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long = "half-width")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_overlap(a: OverlapArgs) -> Result<i32> {
    let mut cfg: OverlapCmdConfig = load_config(a.config.as_deref())?;
    cfg.spec = Some(merge_spec(cfg.spec.take(), &a.spec, a.n_add, a.n_sub)?);
    if let Some(z) = a.lambda {
        cfg.lambda = Some(z);
    }
    if let Some(d) = a.dir {
        cfg.dir = Some(d);
    }
    if a.first_zero {
        cfg.first_zero = true;
    }
    if let Some(p) = a.points {
        cfg.points = p;
    }
    if let Some(w) = a.half_width {
        cfg.half_width = Some(w);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    let spec = cfg.spec.clone().expect("merged above");
    let (v, _) = states::build_state_auto(&spec, cfg.eps)?;

    if cfg.first_zero {
        let dir = cfg
            .dir
            .ok_or_else(|| Error::InvalidSpec("--first-zero needs --dir".into()))?;
        let radius = phasespace::first_zero(&v, dir)?;
        let doc = serde_json::json!({
            "theta_dir": dir,
            "radius": radius,
            "capped": radius.is_none(),
            "search_radius": phasespace::SEARCH_RADIUS,
        });
        print_json(&doc)?;
        if let Some(out) = &a.out {
            let mut d = OutDir::create(out)?;
            d.write("first_zero.json", &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
            d.seal("overlap", &cfg)?;
        }
        return Ok(0);
    }
    if let Some(z) = cfg.lambda {
        let value = phasespace::overlap_field(&v, z)?;
        let doc = serde_json::json!({ "lambda": { "re": z.re, "im": z.im }, "value": value });
        print_json(&doc)?;
        if let Some(out) = &a.out {
            let mut d = OutDir::create(out)?;
            d.write("overlap_point.json", &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
            d.seal("overlap", &cfg)?;
        }
        return Ok(0);
    }
    let shell = grid_for(&v, cfg.points, cfg.half_width)?;
    let grid = phasespace::overlap_grid(&v, &shell)?;
    let csv = grid.to_csv();
    match &a.out {
        None => print!("{csv}"),
        Some(out) => {
            let mut dir = OutDir::create(out)?;
            dir.write("overlap.csv", &csv)?;
            let manifest = dir.seal("overlap", &cfg)?;
            println!("{}", serde_json::json!({ "files": ["overlap.csv"], "manifest": manifest }));
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// cfa

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfaCmdConfig {
    pub spec: Option<StateSpec>,
    pub n_add: Vec<u32>,
    pub directions: usize,
    pub eps: f64,
}

impl Default for CfaCmdConfig {
    fn default() -> Self {
        CfaCmdConfig { spec: None, n_add: vec![0], directions: 64, eps: DEFAULT_EPS }
    }
}

#[derive(Args, Debug)]
pub struct CfaArgs {
    #[command(flatten)]
    pub spec: BaseSpecArgs,
    /// Addition counts to scan: "2", "0..2", or "0,1,3".
    #[arg(long = "n-add", value_parser = parse_count_list)]
    pub n_add: Option<CountList>,
    /// Zero-set scan directions over the half-circle.
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_cfa(a: CfaArgs) -> Result<i32> {
    let mut cfg: CfaCmdConfig = load_config(a.config.as_deref())?;
    cfg.spec = Some(merge_spec(cfg.spec.take(), &a.spec, None, None)?);
    if let Some(list) = a.n_add {
        cfg.n_add = list.0;
    }
    if let Some(d) = a.directions {
        cfg.directions = d;
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    if cfg.n_add.is_empty() {
        return Err(Error::InvalidSpec("n_add list must be nonempty".into()));
    }
    let base = cfg.spec.clone().expect("merged above");
    let mut summary = Vec::new();
    let mut full = Vec::new();
    for &n in &cfg.n_add {
        let mut spec = base.clone();
        spec.n_add = n;
        spec.validate()?;
        let (v, cutoff) = states::build_state_auto(&spec, cfg.eps)?;
        let report = phasespace::central_fringe_area(&v, cfg.directions)?;
        summary.push(serde_json::json!({
            "n_add": n,
            "cutoff": cutoff,
            "cfa": report.cfa,
            "zero_fraction": report.zero_fraction,
            "strict_ok": report.strict_ok,
            "cap_radius": report.cap_radius,
        }));
        full.push(serde_json::json!({ "n_add": n, "cutoff": cutoff, "report": report }));
    }
    let doc = serde_json::json!({ "directions": cfg.directions, "results": summary });
    print_json(&doc)?;
    if let Some(out) = &a.out {
        // The file copy keeps the per-direction zero set the stdout summary drops.
        let full_doc = serde_json::json!({ "directions": cfg.directions, "results": full });
        let mut dir = OutDir::create(out)?;
        dir.write("cfa.json", &format!("{}\n", serde_json::to_string_pretty(&full_doc)?))?;
        dir.seal("cfa", &cfg)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// qfi

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiCmdConfig {
    pub spec: Option<StateSpec>,
    pub theta: f64,
    pub convention: Convention,
    pub closed_form: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub eps: f64,
}

impl Default for QfiCmdConfig {
    fn default() -> Self {
        QfiCmdConfig {
            spec: None,
            theta: 0.0,
            convention: Convention::default(),
            closed_form: false,
            cutoff: None,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Args, Debug)]
pub struct QfiArgs {
    #[command(flatten)]
    pub spec: BaseSpecArgs,
    #[arg(long = "n-add")]
    pub n_add: Option<u32>,
    #[arg(long = "n-sub")]
    pub n_sub: Option<u32>,
    /// Probe direction.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, value_parser = parse_convention)]
    pub convention: Option<Convention>,
    /// Evaluate through the moment series instead of a Fock build.
    #[arg(long = "closed-form")]
    pub closed_form: bool,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "allow-flagged")]
    pub allow_flagged: bool,
}

pub fn cmd_qfi(a: QfiArgs) -> Result<i32> {
    let mut cfg: QfiCmdConfig = load_config(a.config.as_deref())?;
    cfg.spec = Some(merge_spec(cfg.spec.take(), &a.spec, a.n_add, a.n_sub)?);
    if let Some(t) = a.theta {
        cfg.theta = t;
    }
    if let Some(c) = a.convention {
        cfg.convention = c;
    }
    if a.closed_form {
        cfg.closed_form = true;
    }
    if let Some(c) = a.cutoff {
        cfg.cutoff = Some(c);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    let spec = cfg.spec.clone().expect("merged above");
    let doc = if cfg.closed_form {
        let qfi = oracle::qfi_closed_form(&spec, cfg.theta, cfg.convention)?;
        serde_json::json!({
            "method": "closed-form",
            "convention": cfg.convention.as_str(),
            "theta": cfg.theta,
            "qfi": qfi,
            "qfi_var_g": qfi / cfg.convention.scale(),
        })
    } else {
        let (v, cutoff) = build_pinned_or_auto(&spec, cfg.cutoff, cfg.eps)?;
        v.check_unflagged(gate_eps(a.allow_flagged, cfg.eps))?;
        let vg = metrics::var_g(&v, cfg.theta);
        serde_json::json!({
            "method": "var-g",
            "convention": cfg.convention.as_str(),
            "theta": cfg.theta,
            "qfi": cfg.convention.scale() * vg,
            "qfi_var_g": vg,
            "cutoff": cutoff,
            "tail_mass": v.tail_mass(),
        })
    };
    print_json(&doc)?;
    if let Some(out) = &a.out {
        let mut dir = OutDir::create(out)?;
        dir.write("qfi.json", &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        dir.seal("qfi", &cfg)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// fidelity

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityCmdConfig {
    pub a: Option<StateSpec>,
    pub b: Option<StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub eps: f64,
}

impl Default for FidelityCmdConfig {
    fn default() -> Self {
        FidelityCmdConfig { a: None, b: None, cutoff: None, eps: DEFAULT_EPS }
    }
}

fn parse_spec_json(s: &str) -> std::result::Result<StateSpec, String> {
    serde_json::from_str::<StateSpec>(s).map_err(|e| format!("bad spec JSON: {e}"))
}

#[derive(Args, Debug)]
pub struct FidelityArgs {
    /// First state as inline spec JSON, e.g. '{"family":"cat","beta":2.0}'.
    #[arg(long, value_parser = parse_spec_json)]
    pub a: Option<StateSpec>,
    /// Second state as inline spec JSON.
    #[arg(long, value_parser = parse_spec_json)]
    pub b: Option<StateSpec>,
    /// Common cutoff; default is the larger auto choice of the two.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "allow-flagged")]
    pub allow_flagged: bool,
}

pub fn cmd_fidelity(a: FidelityArgs) -> Result<i32> {
    let mut cfg: FidelityCmdConfig = load_config(a.config.as_deref())?;
    if let Some(s) = a.a {
        cfg.a = Some(s);
    }
    if let Some(s) = a.b {
        cfg.b = Some(s);
    }
    if let Some(c) = a.cutoff {
        cfg.cutoff = Some(c);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    let (sa, sb) = match (&cfg.a, &cfg.b) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => return Err(Error::InvalidSpec("fidelity needs two specs (--a and --b)".into())),
    };
    sa.validate()?;
    sb.validate()?;
    let cutoff = match cfg.cutoff {
        Some(c) => c,
        None => states::auto_cutoff(&sa, cfg.eps)?.max(states::auto_cutoff(&sb, cfg.eps)?),
    };
    let va = states::build_state(&sa, cutoff)?;
    let vb = states::build_state(&sb, cutoff)?;
    let gate = gate_eps(a.allow_flagged, cfg.eps);
    va.check_unflagged(gate)?;
    vb.check_unflagged(gate)?;
    let fid = metrics::fidelity(&va, &vb)?;
    let doc = serde_json::json!({
        "fidelity": fid,
        "cutoff": cutoff,
        "tail_mass_a": va.tail_mass(),
        "tail_mass_b": vb.tail_mass(),
    });
    print_json(&doc)?;
    if let Some(out) = &a.out {
        let mut dir = OutDir::create(out)?;
        dir.write("fidelity.json", &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        dir.seal("fidelity", &cfg)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// locus / figure

#[derive(Args, Debug, Clone)]
pub struct LocusFlagArgs {
    /// Pair label (prstrg-1, prstrg-2, prstrg-3, trgtrgn-1, trgtrgp-2, trgtrgE-3).
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<PairLabel>,
    /// Addition counts: "2", "0..4", or "0,2,4".
    #[arg(long = "n", value_parser = parse_count_list)]
    pub n_values: Option<CountList>,
    /// Basis label of the source member.
    #[arg(long = "source-l")]
    pub source_l: Option<u32>,
    /// Fix the probe direction (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Check the target QFI is direction-independent, then use the default.
    #[arg(long = "theta-invariant")]
    pub theta_invariant: bool,
    #[arg(long, value_parser = parse_convention)]
    pub convention: Option<Convention>,
    /// Unit-modulus phase on superposition amplitudes (complex literal).
    #[arg(long = "beta-phase", value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta_phase: Option<C64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

fn merge_locus(base: Option<LocusConfig>, a: &LocusFlagArgs) -> Result<LocusConfig> {
    let mut cfg = match (base, a.pair) {
        (Some(mut c), p) => {
            if let Some(p) = p {
                c.pair = p;
            }
            c
        }
        (None, Some(p)) => LocusConfig::new(p),
        (None, None) => {
            return Err(Error::InvalidSpec(
                "no pair given: pass --pair or a config with one".into(),
            ))
        }
    };
    if let Some(list) = &a.n_values {
        cfg.n_values = list.0.clone();
    }
    if let Some(l) = a.source_l {
        cfg.source_l = l;
    }
    if a.theta_invariant && a.theta.is_some() {
        return Err(Error::InvalidSpec("--theta and --theta-invariant conflict".into()));
    }
    if let Some(t) = a.theta {
        cfg.theta_policy = Some(ThetaPolicy::Fixed(t));
    }
    if a.theta_invariant {
        cfg.theta_policy = Some(ThetaPolicy::TargetInvariant);
    }
    if let Some(c) = a.convention {
        cfg.convention = c;
    }
    if let Some(ph) = a.beta_phase {
        cfg.beta_phase = Some(ph);
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Args, Debug)]
pub struct LocusArgs {
    #[command(flatten)]
    pub flags: LocusFlagArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; full point set goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 0 even when some rows are truncation-flagged.
    #[arg(long = "allow-flagged")]
    pub allow_flagged: bool,
}

fn locus_csv(set: &subplanck::loci::LocusSet) -> String {
    // Column set adapts to the pair's free parameters; order is fixed by
    // the sorted union so re-runs never shuffle columns.
    let mut keys: BTreeSet<&str> = BTreeSet::new();
    for p in &set.points {
        for k in p.params.keys() {
            keys.insert(k.as_str());
        }
    }
    let mut out = String::from("n");
    for k in &keys {
        let _ = write!(out, ",{k}");
    }
    out.push_str(",beta,fq,residual,multiplicity,fidelity,flagged\n");
    for p in &set.points {
        let _ = write!(out, "{}", p.n);
        for k in &keys {
            let _ = write!(out, ",{}", fmt_f(p.params.get(*k).copied().unwrap_or(f64::NAN)));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{}",
            fmt_f(p.beta),
            fmt_f(p.fq),
            fmt_f(p.residual),
            p.multiplicity,
            fmt_f(p.fidelity.unwrap_or(f64::NAN)),
            u8::from(p.flagged),
        );
    }
    out
}

pub fn cmd_locus(a: LocusArgs) -> Result<i32> {
    let base: Option<LocusConfig> = match a.config.as_deref() {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text)?)
        }
    };
    let cfg = merge_locus(base, &a.flags)?;
    let set = loci::solve_and_sweep(&cfg)?;
    let flagged = set.points.iter().filter(|p| p.flagged).count();
    match &a.out {
        None => print_json(&set)?,
        Some(out) => {
            let mut dir = OutDir::create(out)?;
            dir.write("locus.json", &format!("{}\n", serde_json::to_string_pretty(&set)?))?;
            dir.write("locus.csv", &locus_csv(&set))?;
            dir.seal("locus", &cfg)?;
            let summary = serde_json::json!({
                "rows": set.points.len(),
                "omitted": set.omitted.len(),
                "flagged_rows": flagged,
                "target_monotone": set.target_monotone,
                "files": ["locus.json", "locus.csv", "manifest.json"],
            });
            print_json(&summary)?;
        }
    }
    if flagged > 0 && !a.allow_flagged {
        eprintln!(
            "{flagged} locus row(s) are truncation-flagged; pass --allow-flagged to accept them"
        );
        return Ok(3);
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FigureCmdConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locus: Option<LocusConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fringe: Option<FringeConfig>,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    /// Which dataset: fig1, fig2, fig3, or fig4.
    #[arg(value_parser = parse_figure)]
    pub which: Figure,
    #[command(flatten)]
    pub flags: LocusFlagArgs,
    /// Cat amplitude for the fringe survey (fig1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Cat basis label (fig1).
    #[arg(long)]
    pub l: Option<u32>,
    /// Zero-set scan directions (fig1).
    #[arg(long)]
    pub directions: Option<usize>,
    /// Wigner grid points per axis (fig1).
    #[arg(long = "wigner-points")]
    pub wigner_points: Option<usize>,
    /// Skip the per-count Wigner grids (fig1).
    #[arg(long = "no-wigner")]
    pub no_wigner: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the dataset and its manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long = "allow-flagged")]
    pub allow_flagged: bool,
}

fn merge_fringe(base: Option<FringeConfig>, a: &FigureArgs) -> Result<FringeConfig> {
    let mut cfg = base.unwrap_or_default();
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
    if let Some(l) = a.l {
        cfg.l = l;
    }
    if let Some(list) = &a.flags.n_values {
        cfg.n_values = list.0.clone();
    }
    if let Some(d) = a.directions {
        cfg.n_directions = d;
    }
    if let Some(p) = a.wigner_points {
        cfg.wigner_points = p;
    }
    if a.no_wigner {
        cfg.emit_wigner = false;
    }
    if let Some(e) = a.flags.eps {
        cfg.eps = e;
    }
    Ok(cfg)
}

pub fn cmd_figure(a: FigureArgs) -> Result<i32> {
    let cfg: FigureCmdConfig = load_config(a.config.as_deref())?;
    let files = match a.which {
        Figure::Fig1 => {
            let fringe = merge_fringe(cfg.fringe, &a)?;
            loci::emit_figure_dataset(a.which, None, Some(&fringe), &a.out)?
        }
        _ => {
            let locus = merge_locus(cfg.locus, &a.flags)?;
            loci::emit_figure_dataset(a.which, Some(&locus), None, &a.out)?
        }
    };
    let manifest_text = std::fs::read_to_string(&files.manifest)?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)?;
    let flagged = manifest
        .get("flagged_rows")
        .and_then(|v| v.as_u64())
        .unwrap_or(0);
    let doc = serde_json::json!({
        "figure": a.which.as_str(),
        "csv": files.csv,
        "manifest": files.manifest,
        "flagged_rows": flagged,
    });
    print_json(&doc)?;
    if flagged > 0 && !a.allow_flagged {
        eprintln!(
            "{flagged} dataset row(s) are truncation-flagged; pass --allow-flagged to accept them"
        );
        return Ok(3);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify-oracle

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyCmdConfig {
    pub seed: u64,
    pub draws: usize,
}

impl Default for VerifyCmdConfig {
    fn default() -> Self {
        VerifyCmdConfig { seed: 1, draws: 200 }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// RNG seed; the report is a pure function of (seed, draws).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random parameter draws.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_verify_oracle(a: VerifyArgs) -> Result<i32> {
    let mut cfg: VerifyCmdConfig = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.draws {
        cfg.draws = d;
    }
    if cfg.draws == 0 {
        return Err(Error::InvalidSpec("draws must be positive".into()));
    }
    let report = oracle::verify_sample(cfg.seed, cfg.draws)?;
    print_json(&report)?;
    if let Some(out) = &a.out {
        let mut dir = OutDir::create(out)?;
        dir.write("verify.json", &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        dir.seal("verify-oracle", &cfg)?;
    }
    // Disagreement between the two evaluation paths is a numerical failure,
    // not a bad input.
    Ok(if report.pass { 0 } else { 4 })
}
