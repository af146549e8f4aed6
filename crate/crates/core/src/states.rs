//! State factory: declarative `StateSpec` describing each supported family,
//! construction of the corresponding truncated Fock vectors, photon-added and
//! photon-subtracted variants, parity bookkeeping, and the pair-resolution
//! rules used by the equal-sensitivity locus sweeps.
//!
//! Families:
//!   coherent  |a>
//!   cat(l)    sum_k e^{i k l pi} |(-1)^k b>, l in {0,1}
//!   ks_pm(l)  sum_{k=0..3} fbar_{k,k0} e^{-i l k pi/2} |i^k b>, k0 = 0 for +
//!   sq        S[r]|0>
//!   ss        (S[r] + S[-r])|0>
//!   ssd       S[r](D[a] + D[-a])|0>
//! followed by n_add creations or n_sub annihilations, then normalization.

use crate::error::{Error, Result};
use crate::fock::{self, FockVector};
use crate::MAX_CUTOFF;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Coherent,
    Cat,
    KsPlus,
    KsMinus,
    Sq,
    Ss,
    Ssd,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Coherent => "coherent",
            Family::Cat => "cat",
            Family::KsPlus => "ks_plus",
            Family::KsMinus => "ks_minus",
            Family::Sq => "sq",
            Family::Ss => "ss",
            Family::Ssd => "ssd",
        }
    }

    /// Number of distinct l labels, for families that carry one.
    pub fn basis_size(&self) -> Option<u32> {
        match self {
            Family::Cat | Family::KsMinus => Some(2),
            Family::KsPlus => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complex parameters accept either a bare number or {re, im} in JSON.
pub(crate) mod cplx_opt {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Wire {
        Real(f64),
        Full { re: f64, im: f64 },
    }

    pub fn serialize<S: Serializer>(v: &Option<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(z) if z.im == 0.0 => Wire::Real(z.re).serialize(s),
            Some(z) => Wire::Full { re: z.re, im: z.im }.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<C64>, D::Error> {
        let w: Option<Wire> = Option::deserialize(d)?;
        Ok(w.map(|w| match w {
            Wire::Real(x) => C64::new(x, 0.0),
            Wire::Full { re, im } => C64::new(re, im),
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub family: Family,
    /// Displacement amplitude (coherent, ssd).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "cplx_opt")]
    pub alpha: Option<C64>,
    /// Superposition amplitude (cat, ks_plus, ks_minus).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "cplx_opt")]
    pub beta: Option<C64>,
    /// Squeeze magnitude, >= 0 (sq, ss, ssd).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Squeeze phase (families with r; default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Basis label (cat, ks_plus, ks_minus; default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub n_add: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub n_sub: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl StateSpec {
    pub fn new(family: Family) -> StateSpec {
        StateSpec {
            family,
            alpha: None,
            beta: None,
            r: None,
            phi: None,
            l: None,
            n_add: 0,
            n_sub: 0,
        }
    }

    pub fn with_alpha(mut self, a: C64) -> Self {
        self.alpha = Some(a);
        self
    }
    pub fn with_beta(mut self, b: C64) -> Self {
        self.beta = Some(b);
        self
    }
    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }
    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }
    pub fn with_l(mut self, l: u32) -> Self {
        self.l = Some(l);
        self
    }
    pub fn with_n_add(mut self, n: u32) -> Self {
        self.n_add = n;
        self
    }
    pub fn with_n_sub(mut self, n: u32) -> Self {
        self.n_sub = n;
        self
    }

    pub fn l_or_zero(&self) -> u32 {
        self.l.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family;
        let need = |ok: bool, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{fam}: {msg}")))
            }
        };
        if self.n_add > 0 && self.n_sub > 0 {
            return Err(Error::InvalidSpec(
                "n_add and n_sub cannot both be nonzero".into(),
            ));
        }
        if let Some(a) = self.alpha {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite("alpha".into()));
            }
        }
        if let Some(b) = self.beta {
            if !b.re.is_finite() || !b.im.is_finite() {
                return Err(Error::NonFinite("beta".into()));
            }
        }
        if let Some(r) = self.r {
            if !r.is_finite() {
                return Err(Error::NonFinite("r".into()));
            }
            need(r >= 0.0, "squeeze magnitude r must be >= 0")?;
        }
        if let Some(p) = self.phi {
            if !p.is_finite() {
                return Err(Error::NonFinite("phi".into()));
            }
        }
        match fam {
            Family::Coherent => {
                need(self.alpha.is_some(), "alpha required")?;
                need(self.beta.is_none(), "beta not accepted")?;
                need(self.r.is_none() && self.phi.is_none(), "squeeze parameters not accepted")?;
                need(self.l.is_none(), "l not accepted")?;
            }
            Family::Cat | Family::KsPlus | Family::KsMinus => {
                need(self.beta.is_some(), "beta required")?;
                need(self.alpha.is_none(), "alpha not accepted")?;
                need(self.r.is_none() && self.phi.is_none(), "squeeze parameters not accepted")?;
                let size = fam.basis_size().unwrap();
                let l = self.l_or_zero();
                need(
                    l < size,
                    &format!("l={l} out of range (basis size {size})"),
                )?;
            }
            Family::Sq | Family::Ss => {
                need(self.r.is_some(), "r required")?;
                need(self.alpha.is_none(), "alpha not accepted")?;
                need(self.beta.is_none(), "beta not accepted")?;
                need(self.l.is_none(), "l not accepted")?;
            }
            Family::Ssd => {
                need(self.r.is_some(), "r required")?;
                need(self.alpha.is_some(), "alpha required")?;
                need(self.beta.is_none(), "beta not accepted")?;
                need(self.l.is_none(), "l not accepted")?;
            }
        }
        Ok(())
    }
}

/// Superposition coefficients fbar_{k1,k0} of the four-component basis:
/// k0 = 0 row all ones; k0 = 1 row (1, 1, -1, -1). The closed form is
/// 2^{k0/2} [sin((2 k1 + 1) pi / 4)]^{k0}.
pub struct FbarTable;

const FBAR: [[f64; 4]; 2] = [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, -1.0, -1.0]];

impl FbarTable {
    pub fn get(k1: usize, k0: usize) -> f64 {
        FBAR[k0][k1]
    }

    /// Same values from the trigonometric closed form, used to cross-check
    /// the table entries.
    pub fn closed_form(k1: usize, k0: usize) -> f64 {
        let s = ((2 * k1 + 1) as f64 * FRAC_PI_4).sin();
        2f64.powf(k0 as f64 / 2.0) * s.powi(k0 as i32)
    }
}

/// The four cube roots of unity ladder i^k.
fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Base (pre-photon-add, pre-normalization) construction. The family's
/// superposition is summed with its bare coefficients, so the squared norm
/// carries the branch overlaps; the analytic moment table is defined against
/// exactly this unnormalized vector.
pub fn base_state(spec: &StateSpec, cutoff: usize) -> Result<FockVector> {
    spec.validate()?;
    if cutoff < 1 {
        return Err(Error::InvalidSpec("cutoff must be at least 1".into()));
    }
    build_base(spec, cutoff)
}

fn build_base(spec: &StateSpec, cutoff: usize) -> Result<FockVector> {
    match spec.family {
        Family::Coherent => fock::coherent(spec.alpha.unwrap(), cutoff),
        Family::Cat => {
            let b = spec.beta.unwrap();
            let l = spec.l_or_zero();
            let mut acc = fock::coherent(b, cutoff)?;
            let other = fock::coherent(-b, cutoff)?;
            let phase = C64::from_polar(1.0, l as f64 * PI); // e^{i l pi} = (-1)^l
            acc = acc.add(&other.scale(phase))?;
            Ok(acc)
        }
        Family::KsPlus | Family::KsMinus => {
            let b = spec.beta.unwrap();
            let l = spec.l_or_zero();
            let k0 = if spec.family == Family::KsPlus { 0 } else { 1 };
            let mut amp = vec![C64::ZERO; cutoff + 1];
            for k in 0..4u32 {
                let coeff = C64::from_polar(1.0, -(l as f64) * (k as f64) * FRAC_PI_2)
                    * FbarTable::get(k as usize, k0);
                let branch = fock::coherent(i_pow(k) * b, cutoff)?;
                for (slot, a) in amp.iter_mut().zip(branch.amplitudes()) {
                    *slot += coeff * a;
                }
            }
            FockVector::new(amp)
        }
        Family::Sq => {
            let (r, phi) = (spec.r.unwrap(), spec.phi.unwrap_or(0.0));
            fock::squeeze_guard(r, cutoff)?;
            fock::apply_squeeze_op(&FockVector::vacuum(cutoff), r, phi)
        }
        Family::Ss => {
            let (r, phi) = (spec.r.unwrap(), spec.phi.unwrap_or(0.0));
            fock::squeeze_guard(r, cutoff)?;
            let plus = fock::apply_squeeze_op(&FockVector::vacuum(cutoff), r, phi)?;
            let minus = fock::apply_squeeze_op(&FockVector::vacuum(cutoff), -r, phi)?;
            plus.add(&minus)
        }
        Family::Ssd => {
            let (r, phi) = (spec.r.unwrap(), spec.phi.unwrap_or(0.0));
            let a = spec.alpha.unwrap();
            fock::squeeze_guard(r, cutoff)?;
            let sup = fock::coherent(a, cutoff)?.add(&fock::coherent(-a, cutoff)?)?;
            fock::apply_squeeze_op(&sup, r, phi)
        }
    }
}

/// Full pipeline: base state, then n_add creations or n_sub annihilations,
/// then normalization. The returned vector's tail_mass reflects the entire
/// construction; callers gate on it via the active tolerance.
pub fn build_state(spec: &StateSpec, cutoff: usize) -> Result<FockVector> {
    spec.validate()?;
    if cutoff < 1 {
        return Err(Error::InvalidSpec("cutoff must be at least 1".into()));
    }
    let mut v = build_base(spec, cutoff)?;
    for _ in 0..spec.n_add {
        v = fock::apply_create(&v);
    }
    for _ in 0..spec.n_sub {
        v = fock::apply_annihilate(&v);
    }
    v.normalize()
}

/// Smallest ladder cutoff (32, 64, ..., 4096) at which the full construction
/// passes both the generator-norm guards and the tail predicate tail < eps.
pub fn auto_cutoff(spec: &StateSpec, eps: f64) -> Result<usize> {
    spec.validate()?;
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::InvalidSpec("eps must lie in (0, 1e-3]".into()));
    }
    for n in fock::cutoff_ladder() {
        match build_state(spec, n) {
            Ok(v) => {
                if v.tail_mass() < eps {
                    return Ok(n);
                }
            }
            // A guard rejection at this rung just means the band is too
            // narrow; climb. Anything else is a real failure.
            Err(Error::GuardRejected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::CutoffCeiling { max: MAX_CUTOFF })
}

pub fn build_state_auto(spec: &StateSpec, eps: f64) -> Result<(FockVector, usize)> {
    let n = auto_cutoff(spec, eps)?;
    Ok((build_state(spec, n)?, n))
}

/// <Parity> = sum_n (-1)^n |c_n|^2 of a normalized vector.
pub fn parity_expectation(v: &FockVector) -> f64 {
    v.amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| if n % 2 == 0 { c.norm_sqr() } else { -c.norm_sqr() })
        .sum()
}

// ---------------------------------------------------------------------------
// Pair resolution for the equal-sensitivity comparisons.

/// Comparison labels. The `prstrg` group compares a photon-added Gaussian
/// superposition against a cat/four-component target; the `trgtrg` group
/// compares a photon-added target state against a pristine one of larger
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairLabel {
    #[serde(rename = "prstrg-1")]
    Prstrg1,
    #[serde(rename = "prstrg-2")]
    Prstrg2,
    #[serde(rename = "prstrg-3")]
    Prstrg3,
    #[serde(rename = "trgtrgn-1")]
    Trgtrgn1,
    #[serde(rename = "trgtrgp-2")]
    Trgtrgp2,
    #[serde(rename = "trgtrgE-3")]
    TrgtrgE3,
}

impl PairLabel {
    pub const ALL: [PairLabel; 6] = [
        PairLabel::Prstrg1,
        PairLabel::Prstrg2,
        PairLabel::Prstrg3,
        PairLabel::Trgtrgn1,
        PairLabel::Trgtrgp2,
        PairLabel::TrgtrgE3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PairLabel::Prstrg1 => "prstrg-1",
            PairLabel::Prstrg2 => "prstrg-2",
            PairLabel::Prstrg3 => "prstrg-3",
            PairLabel::Trgtrgn1 => "trgtrgn-1",
            PairLabel::Trgtrgp2 => "trgtrgp-2",
            PairLabel::TrgtrgE3 => "trgtrgE-3",
        }
    }

    pub fn parse(s: &str) -> Result<PairLabel> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown pair label '{s}'")))
    }

    pub fn target_family(&self) -> Family {
        match self {
            PairLabel::Prstrg1 | PairLabel::Trgtrgn1 => Family::KsMinus,
            PairLabel::Prstrg2 | PairLabel::Trgtrgp2 => Family::KsPlus,
            PairLabel::Prstrg3 | PairLabel::TrgtrgE3 => Family::Cat,
        }
    }

    pub fn is_proposed_vs_target(&self) -> bool {
        matches!(
            self,
            PairLabel::Prstrg1 | PairLabel::Prstrg2 | PairLabel::Prstrg3
        )
    }

    /// Target basis label that parity-matches n photon additions on this
    /// pair's source. For the prstrg group the source parity is (-1)^n; for
    /// the trgtrg group the source label shifts by n within the family.
    pub fn target_l(&self, n: u32, source_l: u32) -> u32 {
        match self {
            // (1 + e^{i n pi}) / 2: even n -> 1, odd n -> 0.
            PairLabel::Prstrg1 => 1 - n % 2,
            PairLabel::Prstrg2 => n % 4,
            PairLabel::Prstrg3 => n % 2,
            PairLabel::Trgtrgn1 | PairLabel::TrgtrgE3 => (source_l + n) % 2,
            PairLabel::Trgtrgp2 => (source_l + n) % 4,
        }
    }

    /// Unit phase multiplying the superposition amplitudes of both members.
    /// Four-component minus-sector comparisons sit on the pi/4 diagonal;
    /// the squeezed-vacuum vs cat comparison puts the cat lobes on the
    /// imaginary axis so that its anti-squeezed quadrature can match
    /// (on the real axis the squeezed side is sub-shot-noise along the
    /// probe direction and the constraint has no solution at all).
    pub fn default_beta_phase(&self) -> C64 {
        match self {
            PairLabel::Prstrg1 | PairLabel::Trgtrgn1 => C64::from_polar(1.0, FRAC_PI_4),
            PairLabel::Prstrg3 => C64::new(0.0, 1.0),
            _ => C64::new(1.0, 0.0),
        }
    }

    /// Probe direction aligned with the lobe axis fixed by the beta phase.
    pub fn default_theta(&self) -> f64 {
        match self {
            PairLabel::Prstrg1 | PairLabel::Trgtrgn1 => FRAC_PI_4,
            PairLabel::Prstrg3 => FRAC_PI_2,
            _ => 0.0,
        }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSpec {
    pub label: PairLabel,
    /// Photon-addition count applied to the source member.
    pub n: u32,
    /// Basis label of the source member (trgtrg group only; default 0).
    #[serde(default)]
    pub source_l: u32,
}

/// Free parameters at one grid/solver point.
#[derive(Debug, Clone, Copy)]
pub struct PairParams {
    /// Squeeze magnitude of the proposed state (prstrg group).
    pub r: f64,
    /// Source amplitude magnitude: SSD displacement for prstrg-1, the
    /// pristine member's |beta| for the trgtrg group. Unused by prstrg-2/3.
    pub alpha: f64,
    /// Target amplitude magnitude |beta|.
    pub beta: f64,
    /// Unit phase applied to every superposition amplitude in the pair.
    pub beta_phase: C64,
}

/// Expand a pair label plus parameters into the two concrete state specs
/// (source-with-additions, pristine target). Both come out parity-matched.
pub fn resolve_pair(pair: &PairSpec, params: &PairParams) -> Result<(StateSpec, StateSpec)> {
    let ph = params.beta_phase;
    if (ph.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec("beta_phase must have unit modulus".into()));
    }
    let tl = pair.label.target_l(pair.n, pair.source_l);
    let target_family = pair.label.target_family();
    let target = StateSpec::new(target_family)
        .with_beta(ph * params.beta)
        .with_l(tl);
    let proposed = match pair.label {
        PairLabel::Prstrg1 => StateSpec::new(Family::Ssd)
            .with_r(params.r)
            .with_alpha(C64::new(params.alpha, 0.0))
            .with_n_add(pair.n),
        PairLabel::Prstrg2 => StateSpec::new(Family::Ss)
            .with_r(params.r)
            .with_n_add(pair.n),
        PairLabel::Prstrg3 => StateSpec::new(Family::Sq)
            .with_r(params.r)
            .with_n_add(pair.n),
        PairLabel::Trgtrgn1 | PairLabel::Trgtrgp2 | PairLabel::TrgtrgE3 => {
            if let Some(size) = target_family.basis_size() {
                if pair.source_l >= size {
                    return Err(Error::InvalidSpec(format!(
                        "source_l={} out of range (basis size {size})",
                        pair.source_l
                    )));
                }
            }
            StateSpec::new(target_family)
                .with_beta(ph * params.alpha)
                .with_l(pair.source_l)
                .with_n_add(pair.n)
        }
    };
    proposed.validate()?;
    target.validate()?;
    Ok((proposed, target))
}
