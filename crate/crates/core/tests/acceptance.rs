//! Acceptance suite: one test per shipped guarantee, each printing a single
//! PASS/FAIL line (visible with --nocapture; failures always show theirs).
//! Tolerances are pinned here in code. Two criteria are documented-red:
//! the locus fidelity floor at high addition counts and the n=2 operator
//! difference limits are not attainable, and the tests say so rather than
//! bending the bound.

use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::time::Instant;

use subplanck::fock::{self, FockVector};
use subplanck::loci::{GridRange, LocusConfig};
use subplanck::metrics::{self, Convention, LimitKind, PaPs};
use subplanck::oracle;
use subplanck::phasespace;
use subplanck::states::{build_state, build_state_auto, Family, PairLabel, StateSpec};
use subplanck::DEFAULT_EPS;

fn report(id: &str, pass: bool, detail: &str) {
    println!("acceptance {id} [{}] {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance {id} FAILED: {detail}");
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn build(spec: &StateSpec) -> FockVector {
    build_state_auto(spec, DEFAULT_EPS).expect("state builds").0
}

#[test]
fn c01_moment_series_agrees_with_fock_over_random_sample() {
    let start = Instant::now();
    let rep = oracle::verify_sample(11, 200).expect("sample runs");
    let secs = start.elapsed().as_secs_f64();
    let pass = rep.pass && secs <= 120.0;
    report(
        "01 dual-path moments",
        pass,
        &format!(
            "{} moment + {} qfi samples, max rel dev {:.3e} (moments) / {:.3e} (qfi), \
             bound 1e-8, {:.1}s of 120s",
            rep.moment_samples, rep.qfi_samples, rep.max_dev_moment, rep.max_dev_qfi, secs
        ),
    );
}

#[test]
fn c02_small_displacement_overlap_expands_to_qfi() {
    // O(lambda) = 1 - |lambda|^2 F_Q/4 + O(lambda^3) with F_Q on the vacuum=4
    // scale. D(|l|e^{i phi}) = exp(i|l| G(phi - pi/2)), and Var G has period
    // pi, so the probe direction is phi + pi/2 up to an irrelevant sign.
    let states = [
        StateSpec::new(Family::Cat).with_beta(c(1.0, 0.0)),
        StateSpec::new(Family::Cat).with_beta(c(2.0, 0.0)),
        StateSpec::new(Family::KsPlus).with_beta(c(1.0, 0.0)),
        StateSpec::new(Family::KsPlus).with_beta(c(1.5, 0.0)),
        StateSpec::new(Family::Ssd).with_r(0.3).with_alpha(c(1.0, 0.0)),
    ];
    let mag = 1e-3;
    let mut worst = 0.0f64;
    for spec in &states {
        let v = build(spec);
        for k in 0..8 {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
            let lambda = C64::from_polar(mag, phi);
            let o = phasespace::overlap_field(&v, lambda).unwrap();
            let fq = metrics::qfi_displacement(
                &v,
                phi + std::f64::consts::FRAC_PI_2,
                Convention::Intro,
                DEFAULT_EPS,
            )
            .unwrap();
            let dev = (o - (1.0 - mag * mag * fq / 4.0)).abs();
            worst = worst.max(dev);
        }
    }
    report(
        "02 overlap-QFI expansion",
        worst <= 1e-9,
        &format!("5 states x 8 directions at |lambda|=1e-3, worst |dev| {worst:.3e}, bound 1e-9"),
    );
}

#[test]
fn c03_added_and_subtracted_photon_energy_matches_prediction() {
    let grid: Vec<StateSpec> = vec![
        StateSpec::new(Family::Coherent).with_alpha(c(0.5, 0.0)),
        StateSpec::new(Family::Coherent).with_alpha(c(1.0, 0.0)),
        StateSpec::new(Family::Coherent).with_alpha(c(1.5, 0.5)),
        StateSpec::new(Family::Sq).with_r(0.2),
        StateSpec::new(Family::Sq).with_r(0.5),
        StateSpec::new(Family::Cat).with_beta(c(1.0, 0.0)),
        StateSpec::new(Family::Cat).with_beta(c(1.5, 0.0)).with_l(1),
        StateSpec::new(Family::KsPlus).with_beta(c(1.0, 0.0)),
        StateSpec::new(Family::KsPlus).with_beta(c(1.5, 0.0)).with_l(2),
        StateSpec::new(Family::KsMinus).with_beta(c(1.2, 0.0)).with_l(1),
        StateSpec::new(Family::Ss).with_r(0.3),
        StateSpec::new(Family::Ss).with_r(0.5),
        StateSpec::new(Family::Ssd).with_r(0.3).with_alpha(c(1.0, 0.0)),
    ];
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for base in &grid {
        let v0 = build(base).normalize().unwrap();
        let (mean, var) = metrics::mean_photon(&v0);
        for which in [PaPs::Pa, PaPs::Ps] {
            let predicted = metrics::predicted_pa_ps_energy(mean, var, which).unwrap();
            let mut spec = base.clone();
            match which {
                PaPs::Pa => spec.n_add = 1,
                PaPs::Ps => spec.n_sub = 1,
            }
            let v1 = build(&spec).normalize().unwrap();
            let (measured, _) = metrics::mean_photon(&v1);
            let dev = (predicted - measured).abs() / measured.abs().max(1e-12);
            worst = worst.max(dev);
            checked += 1;
        }
    }
    report(
        "03 post-add/subtract energy",
        worst <= 1e-8,
        &format!("{checked} family/op combinations, worst rel dev {worst:.3e}, bound 1e-8"),
    );
}

#[test]
fn c04_annihilation_eigenstate_residuals() {
    // a^2 fixes both cat parities at beta^2; a^4 fixes every four-component
    // superposition at beta^4 (the i^k beta orbits are closed under a^4).
    // Pinned cutoff 128: at the auto cutoff the top two basis amplitudes
    // (~5e-8 for beta=2) dominate the residual and mask the identity.
    let deep = |spec: &StateSpec| build_state(spec, 128).expect("state builds");
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for &beta in &[1.0, 1.5, 2.0] {
        for l in 0..2 {
            let v = deep(&StateSpec::new(Family::Cat).with_beta(c(beta, 0.0)).with_l(l))
                .normalize()
                .unwrap();
            let w = fock::apply_annihilate(&fock::apply_annihilate(&v));
            let resid = w.add(&v.scale(c(-beta * beta, 0.0))).unwrap().norm() / (beta * beta);
            worst = worst.max(resid);
            checked += 1;
        }
        let mut ks_cases: Vec<StateSpec> = (0..4)
            .map(|l| StateSpec::new(Family::KsPlus).with_beta(c(beta, 0.0)).with_l(l))
            .collect();
        ks_cases.extend(
            (0..2).map(|l| StateSpec::new(Family::KsMinus).with_beta(c(beta, 0.0)).with_l(l)),
        );
        for spec in &ks_cases {
            let v = deep(spec).normalize().unwrap();
            let mut w = v.clone();
            for _ in 0..4 {
                w = fock::apply_annihilate(&w);
            }
            let b4 = beta.powi(4);
            let resid = w.add(&v.scale(c(-b4, 0.0))).unwrap().norm() / b4;
            worst = worst.max(resid);
            checked += 1;
        }
    }
    report(
        "04 eigenstate residuals",
        worst <= 1e-8,
        &format!("{checked} states, worst residual {worst:.3e}, bound 1e-8"),
    );
}

#[test]
fn c05_central_fringe_area_shrinks_with_additions_and_amplitude() {
    let start = Instant::now();
    let cfa = |family: Family, beta: f64, n: u32| -> f64 {
        let spec = StateSpec::new(family).with_beta(c(beta, 0.0)).with_n_add(n);
        let v = build(&spec);
        phasespace::central_fringe_area(&v, 64).unwrap().cfa
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for (family, beta) in [(Family::Cat, 2.0), (Family::KsPlus, 1.5)] {
        let vals: Vec<f64> = (0..3).map(|n| cfa(family, beta, n)).collect();
        let mono = vals.windows(2).all(|w| w[1] < w[0]);
        ok &= mono;
        notes.push(format!(
            "{:?} beta={beta} over n: {:.4} > {:.4} > {:.4} ({})",
            family, vals[0], vals[1], vals[2],
            if mono { "decreasing" } else { "NOT decreasing" }
        ));
    }
    for family in [Family::Cat, Family::KsPlus] {
        let vals: Vec<f64> = [1.5, 2.0, 2.5].iter().map(|&b| cfa(family, b, 0)).collect();
        let mono = vals.windows(2).all(|w| w[1] < w[0]);
        ok &= mono;
        notes.push(format!(
            "{:?} over beta: {:.4} > {:.4} > {:.4} ({})",
            family, vals[0], vals[1], vals[2],
            if mono { "decreasing" } else { "NOT decreasing" }
        ));
    }
    let v = build(&StateSpec::new(Family::Cat).with_beta(c(2.0, 0.0)));
    let zero = phasespace::first_zero(&v, std::f64::consts::FRAC_PI_2)
        .unwrap()
        .expect("zero exists");
    let target = std::f64::consts::PI / 8.0;
    let zero_ok = (zero - target).abs() <= 0.05 * target;
    ok &= zero_ok;
    notes.push(format!(
        "first zero {zero:.6} vs pi/8 {target:.6} ({})",
        if zero_ok { "within 5%" } else { "OUT of 5%" }
    ));
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 300.0;
    report(
        "05 fringe-area survey",
        ok,
        &format!("{}; {:.1}s of 300s", notes.join("; "), secs),
    );
}

/// Group solved points as alpha -> (n -> beta), keying alpha by grid index.
fn beta_by_alpha(points: &[subplanck::loci::LocusPoint]) -> BTreeMap<u64, BTreeMap<u32, f64>> {
    let mut out: BTreeMap<u64, BTreeMap<u32, f64>> = BTreeMap::new();
    for p in points {
        let alpha = p.params["alpha"];
        out.entry((alpha * 1e6).round() as u64).or_default().insert(p.n, p.beta);
    }
    out
}

#[test]
fn c06_equal_qfi_loci_enhance_amplitude_and_grow_with_n() {
    let mut ok = true;
    let mut notes = Vec::new();
    for pair in [PairLabel::Trgtrgn1, PairLabel::Trgtrgp2, PairLabel::TrgtrgE3] {
        let mut cfg = LocusConfig::new(pair);
        cfg.n_values = vec![1, 2, 3];
        cfg.alpha_range = GridRange::new(0.5, 2.0, 0.1);
        let run = subplanck::loci::solve_equal_qfi(&cfg).unwrap();
        let complete = run.points.len() == 48 && run.omitted.is_empty();
        let enhanced = run
            .points
            .iter()
            .all(|p| p.beta > p.params["alpha"]);
        let grouped = beta_by_alpha(&run.points);
        let growing = grouped.values().all(|by_n| {
            let betas: Vec<f64> = by_n.values().copied().collect();
            by_n.len() == 3 && betas.windows(2).all(|w| w[1] > w[0])
        });
        ok &= complete && enhanced && growing;
        notes.push(format!(
            "{}: {} pts, enhanced={enhanced}, growing-in-n={growing}",
            pair.as_str(),
            run.points.len()
        ));
    }
    report(
        "06 amplitude enhancement",
        ok,
        &format!("|alpha| 0.5..2.0 step 0.1, n 1..3: {}", notes.join("; ")),
    );
}

#[test]
fn c07_locus_fidelity_maxima() {
    // Documented-red at n=3,4: the achievable maxima sit near 0.75 on this
    // locus, short of the 0.8 floor the run is held to. The assertion stays
    // honest instead of chasing the bound; see the accompanying notes.
    let mut cfg = LocusConfig::new(PairLabel::Prstrg1);
    cfg.n_values = vec![1, 2, 3, 4];
    let set = subplanck::loci::solve_and_sweep(&cfg).unwrap();
    let max_fid = |pred: &dyn Fn(&subplanck::loci::LocusPoint) -> bool| -> f64 {
        set.points
            .iter()
            .filter(|p| pred(p))
            .filter_map(|p| p.fidelity)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let m1 = max_fid(&|p| p.n == 1 && p.beta <= 1.8);
    let mut ok = m1 >= 0.9;
    let mut notes = vec![format!("n=1 max fid {m1:.4} (floor 0.9, beta<=1.8)")];
    for n in [2u32, 3, 4] {
        let m = max_fid(&|p| p.n == n);
        ok &= m >= 0.8;
        notes.push(format!("n={n} max fid {m:.4} (floor 0.8)"));
    }

    let mut cfg2 = LocusConfig::new(PairLabel::Prstrg2);
    cfg2.n_values = vec![0, 1, 2, 3, 4];
    let set2 = subplanck::loci::solve_and_sweep(&cfg2).unwrap();
    let mut peak_beta = Vec::new();
    for n in 0..=4u32 {
        let best = set2
            .points
            .iter()
            .filter(|p| p.n == n && p.fidelity.is_some())
            .max_by(|a, b| a.fidelity.partial_cmp(&b.fidelity).unwrap());
        peak_beta.push(best.map(|p| p.beta).unwrap_or(f64::NAN));
    }
    let nondec = peak_beta.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    ok &= nondec;
    notes.push(format!(
        "peak-fidelity beta by n: {:?} ({})",
        peak_beta.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>(),
        if nondec { "non-decreasing" } else { "NOT non-decreasing" }
    ));
    report("07 locus fidelity maxima", ok, &notes.join("; "));
}

#[test]
fn c08_operator_difference_small_parameter_limits() {
    // Documented-red at n=2: the second-order operator differences do not
    // converge to the bare Fock targets. The squared construction picks up
    // a fixed admixture, capping the fidelities at 6/7 (squeeze) and 2/3
    // (displace) as the parameter vanishes. n=1 is clean.
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in [LimitKind::SqueezeDiff, LimitKind::DisplaceDiff] {
        for n in [1u32, 2] {
            let fid = metrics::small_param_limit_check(kind, n, 1e-3, 32).unwrap();
            let pass = fid >= 1.0 - 1e-4;
            ok &= pass;
            notes.push(format!("{kind:?} n={n}: fid {fid:.6} ({})", if pass { "ok" } else { "below 1-1e-4" }));
        }
    }
    report("08 operator-difference limits", ok, &notes.join("; "));
}

#[test]
fn c09_direction_dependence_dichotomy() {
    let thetas: Vec<f64> = (0..16).map(|k| k as f64 * std::f64::consts::PI / 16.0).collect();
    let spread = |family: Family, l: u32| -> f64 {
        let v = build(&StateSpec::new(family).with_beta(c(1.5, 0.0)).with_l(l));
        let vals: Vec<f64> =
            thetas.iter().map(|&t| metrics::var_g(&v, t) / v.norm_sqr().max(1.0)).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (hi - lo) / mean
    };
    let ks_plus = spread(Family::KsPlus, 0);
    let cat = spread(Family::Cat, 0);
    let ks_minus = spread(Family::KsMinus, 0);
    let ok = ks_plus <= 1e-8 && cat > 1e-3 && ks_minus > 1e-3;
    report(
        "09 direction dichotomy",
        ok,
        &format!(
            "rel spread over 16 directions at beta=1.5: plus-sector {ks_plus:.3e} (<=1e-8), \
             cat {cat:.4} (>1e-3), minus-sector {ks_minus:.4} (>1e-3)"
        ),
    );
}

#[test]
fn c10_solved_loci_invariant_under_qfi_convention() {
    let mut samples = 0usize;
    let mut worst = 0.0f64;
    let mut configs = Vec::new();
    let mut cfg_a = LocusConfig::new(PairLabel::TrgtrgE3);
    cfg_a.n_values = vec![1, 2];
    cfg_a.alpha_range = GridRange::new(0.5, 2.0, 0.1);
    configs.push(cfg_a);
    let mut cfg_b = LocusConfig::new(PairLabel::Prstrg2);
    cfg_b.n_values = vec![1, 2];
    cfg_b.r_range = GridRange::new(0.0, 1.2, 0.1);
    configs.push(cfg_b);
    for cfg in configs {
        let mut intro = cfg.clone();
        intro.convention = Convention::Intro;
        let run_a = subplanck::loci::solve_equal_qfi(&cfg).unwrap();
        let run_b = subplanck::loci::solve_equal_qfi(&intro).unwrap();
        assert_eq!(run_a.points.len(), run_b.points.len(), "point sets must align");
        for (pa, pb) in run_a.points.iter().zip(&run_b.points) {
            assert_eq!(pa.n, pb.n);
            assert_eq!(pa.params, pb.params);
            worst = worst.max((pa.beta - pb.beta).abs());
            samples += 1;
        }
    }
    let ok = samples >= 50 && worst <= 1e-7;
    report(
        "10 convention invariance",
        ok,
        &format!("{samples} solved points, worst |delta beta| {worst:.3e}, bound 1e-7"),
    );
}
