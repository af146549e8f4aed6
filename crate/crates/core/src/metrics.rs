//! Scalar observables: displacement-sensing quantum Fisher information (QFI),
//! fidelity, photon statistics, the predicted energy shifts under photon
//! addition/subtraction, and the small-parameter operator limits.
//!
//! QFI convention. The generator is G(th) = ad e^{i th} + a e^{-i th}. Two
//! normalizations circulate: Var(G) itself ("appendix", vacuum value 1) and
//! 4 Var(G/2) scaled to the shot-noise anchor F_Q(coherent) = 4 ("intro",
//! i.e. 4 Var(G)). Equal-QFI loci are invariant under the global factor, so
//! both conventions are carried side by side; `Convention::Appendix` is the
//! default and `--convention intro` selects the anchored variant.

use crate::error::{Error, Result};
use crate::fock::{self, FockVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Appendix,
    Intro,
}

impl Convention {
    pub fn scale(&self) -> f64 {
        match self {
            Convention::Appendix => 1.0,
            Convention::Intro => 4.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::Appendix => "appendix",
            Convention::Intro => "intro",
        }
    }
}

/// First and second moments of G(th) on an arbitrary (not necessarily
/// normalized) vector, via the three amplitude sums <ad>, <ad^2>, <n>.
/// Exact for the truncated vector; no operator matrices are materialized.
pub fn generator_moments(v: &FockVector, theta: f64) -> (f64, f64) {
    let amp = v.amplitudes();
    let n2 = v.norm_sqr();
    let mut ad = C64::ZERO; // <ad>
    let mut ad2 = C64::ZERO; // <ad^2>
    let mut nbar = 0.0; // <n>
    for (n, c) in amp.iter().enumerate() {
        nbar += n as f64 * c.norm_sqr();
        if n + 1 < amp.len() {
            ad += amp[n + 1].conj() * c * ((n + 1) as f64).sqrt();
        }
        if n + 2 < amp.len() {
            ad2 += amp[n + 2].conj() * c * (((n + 1) * (n + 2)) as f64).sqrt();
        }
    }
    ad /= n2;
    ad2 /= n2;
    nbar /= n2;
    let e1 = C64::from_polar(1.0, theta);
    let g_mean = 2.0 * (e1 * ad).re;
    let g_sq = 2.0 * (e1 * e1 * ad2).re + 2.0 * nbar + 1.0;
    (g_mean, g_sq)
}

/// Var G(th): the convention-free core of the QFI.
pub fn var_g(v: &FockVector, theta: f64) -> f64 {
    let (m, s) = generator_moments(v, theta);
    s - m * m
}

/// Displacement-sensing QFI of a normalized vector under the chosen
/// convention, gated on the truncation tolerance.
pub fn qfi_displacement(
    v: &FockVector,
    theta: f64,
    convention: Convention,
    eps: f64,
) -> Result<f64> {
    v.check_unflagged(eps)?;
    Ok(convention.scale() * var_g(v, theta))
}

/// |<a|b>|^2 on matching cutoffs, normalized by both norms.
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    let ov = a.inner(b)?;
    let denom = a.norm_sqr() * b.norm_sqr();
    if denom <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(ov.norm_sqr() / denom)
}

/// (<n>, <Dn^2>) by direct Fock sums, normalized by the squared norm.
pub fn mean_photon(v: &FockVector) -> (f64, f64) {
    let n2 = v.norm_sqr();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (n, c) in v.amplitudes().iter().enumerate() {
        let w = c.norm_sqr();
        m1 += n as f64 * w;
        m2 += (n * n) as f64 * w;
    }
    m1 /= n2;
    m2 /= n2;
    (m1, m2 - m1 * m1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PaPs {
    Pa,
    Ps,
}

/// Post-operation mean photon number predicted from the pre-operation
/// statistics alone: PA -> var/(mean+1) + mean + 1, PS -> var/mean + mean - 1.
pub fn predicted_pa_ps_energy(mean: f64, variance: f64, which: PaPs) -> Result<f64> {
    if mean < 0.0 || variance < 0.0 {
        return Err(Error::InvalidSpec("moments must be nonnegative".into()));
    }
    match which {
        PaPs::Pa => Ok(variance / (mean + 1.0) + mean + 1.0),
        PaPs::Ps => {
            if mean == 0.0 {
                Err(Error::InvalidSpec(
                    "photon subtraction undefined at mean 0 (a|0> = 0)".into(),
                ))
            } else {
                Ok(variance / mean + mean - 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    SqueezeDiff,
    DisplaceDiff,
}

/// Fidelity between normalize((S[r] - S[-r])^n |0>) and |2n> (squeeze_diff),
/// or normalize((D[a] - D[-a])^n |0>) and |n> (displace_diff), at operator
/// parameter `param`. Probes the claimed small-parameter operator limits.
pub fn small_param_limit_check(
    kind: LimitKind,
    n: u32,
    param: f64,
    cutoff: usize,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidSpec("n must be >= 1".into()));
    }
    if param <= 0.0 || !param.is_finite() {
        return Err(Error::InvalidSpec("param must be positive".into()));
    }
    let mut v = FockVector::vacuum(cutoff);
    for _ in 0..n {
        let (plus, minus) = match kind {
            LimitKind::SqueezeDiff => {
                fock::squeeze_guard(param, cutoff)?;
                (
                    fock::apply_squeeze_op(&v, param, 0.0)?,
                    fock::apply_squeeze_op(&v, -param, 0.0)?,
                )
            }
            LimitKind::DisplaceDiff => {
                let a = C64::new(param, 0.0);
                fock::displace_guard(a, cutoff)?;
                (
                    fock::apply_displacement(&v, a)?,
                    fock::apply_displacement(&v, -a)?,
                )
            }
        };
        v = plus.add(&minus.scale(C64::new(-1.0, 0.0)))?;
    }
    let v = v.normalize()?;
    let target_index = match kind {
        LimitKind::SqueezeDiff => 2 * n as usize,
        LimitKind::DisplaceDiff => n as usize,
    };
    if target_index > cutoff {
        return Err(Error::InvalidSpec("cutoff below target index".into()));
    }
    fidelity(&v, &FockVector::basis(target_index, cutoff))
}

/// Bundled scalar report for one state and probe direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub convention: Convention,
    pub theta: f64,
    /// Headline QFI under `convention`.
    pub qfi: f64,
    /// Var G (vacuum anchor 1).
    pub qfi_var_g: f64,
    /// 4 Var(G/2); numerically equal to qfi_var_g, reported for the factor-4
    /// cross-check.
    pub qfi_x4: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    pub mean_n: f64,
    pub var_n: f64,
    pub parity: f64,
    pub cutoff: usize,
    pub tail_mass: f64,
}

pub fn metric_report(
    v: &FockVector,
    theta: f64,
    convention: Convention,
    eps: f64,
) -> Result<MetricReport> {
    v.check_unflagged(eps)?;
    let vg = var_g(v, theta);
    let (mean_n, var_n) = mean_photon(v);
    Ok(MetricReport {
        convention,
        theta,
        qfi: convention.scale() * vg,
        qfi_var_g: vg,
        qfi_x4: vg,
        fidelity: None,
        mean_n,
        var_n,
        parity: crate::states::parity_expectation(v) / v.norm_sqr(),
        cutoff: v.cutoff(),
        tail_mass: v.tail_mass(),
    })
}
