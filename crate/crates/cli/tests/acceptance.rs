//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p zs-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zs_core::bounds::{epsilon_r, properness_sweep, systole_bound_check};
use zs_core::conformal::{
    funnel_zero_volume, heat_invariants, polyakov_logD1, zero_volume, Bump, ConformalFactor, FinitePartOptions,
    FunnelChart,
};
use zs_core::special::{
    digamma, log_barnes_gamma2, log_z_infinity, z_infinity_asymptotics, EULER_GAMMA,
};
use zs_core::spectrum::{brute_force_spectrum, enumerate, systole, LengthSpectrum};
use zs_core::surface::{build_cylinder, build_pants, PantsSpec, SurfaceModel};
use zs_core::zeta::{
    counting_exponent, cylinder_resonances, find_zeros, huber_extract_lengths, log_zeta, log_zeta_cylinder,
    winding_number, CylinderZeta, HuberOptions, Rect, ZeroFinderOptions, ZetaOptions,
};
use zs_core::ZsError;

type Check = fn() -> Result<String, String>;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pants(a: f64, b: f64, c: f64) -> SurfaceModel {
    build_pants(PantsSpec::new(a, b, c).unwrap()).unwrap()
}

fn cylinder_resonance_anchor() -> Result<String, String> {
    let rect = Rect::new(-5.5, 0.5, -35.0, 35.0).map_err(|e| e.to_string())?;
    let mut total = 0;
    for length in [0.5, 1.0, 2.0] {
        let f = CylinderZeta::new(length, rect.re_min).map_err(|e| e.to_string())?;
        let zeros = find_zeros(&f, &rect, &ZeroFinderOptions::default()).map_err(|e| e.to_string())?;
        let n_max = (35.0 * length / (2.0 * PI)).floor() as i64;
        let mut lattice = Vec::new();
        for k in 0..=5 {
            for n in -n_max..=n_max {
                lattice.push(cx(-(k as f64), 2.0 * PI * n as f64 / length));
            }
        }
        ensure(zeros.len() == lattice.len(), || format!("l = {length}: {} zeros, {} expected", zeros.len(), lattice.len()))?;
        for z in &lattice {
            let hit = zeros.iter().any(|q| (q.location - z).norm() < 1e-8 && q.multiplicity == 2);
            ensure(hit, || format!("l = {length}: no double zero within 1e-8 of {z}"))?;
        }
        let w = winding_number(&f, &rect, 1e-10).map_err(|e| e.to_string())?;
        ensure(w == 2 * lattice.len() as i64, || format!("l = {length}: winding {w}"))?;
        total += lattice.len();
    }
    Ok(format!("{total} double zeros on three lattices"))
}

fn quadratic_counting() -> Result<String, String> {
    let length = 1.0;
    let n_max = (80.0 * length / (2.0 * PI)).ceil() as u32 + 1;
    let rs = cylinder_resonances(length, 81, n_max).map_err(|e| e.to_string())?;
    let radii: Vec<f64> = (10..=80).map(|r| r as f64).collect();
    let e = counting_exponent(&rs, &radii).ok_or("no exponent")?;
    ensure((1.9..=2.1).contains(&e), || format!("exponent {e}"))?;
    Ok(format!("exponent {e:.4}"))
}

fn pants_systole() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let l = [rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0)];
        let s = pants(l[0], l[1], l[2]);
        let m = l.iter().cloned().fold(f64::INFINITY, f64::min);
        let ls = enumerate(&s, m + 0.5).map_err(|e| e.to_string())?;
        let sys = systole(&ls).map_err(|e| e.to_string())?;
        worst = worst.max((sys - m).abs());
        ensure((sys - m).abs() <= 1e-10, || format!("{l:?}: systole {sys}"))?;
    }
    Ok(format!("25 triples, max deviation {worst:.1e}"))
}

fn oracle_equivalence() -> Result<String, String> {
    let mut counts = Vec::new();
    for (a, b, c) in [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0)] {
        let s = pants(a, b, c);
        let fast = enumerate(&s, 4.0).map_err(|e| e.to_string())?;
        let slow = brute_force_spectrum(&s, 4.0, 12).map_err(|e| e.to_string())?;
        let words = |v: &[zs_core::spectrum::GeodesicClass]| {
            v.iter().map(|c| (c.word.to_string(), c.oriented_multiplicity)).collect::<Vec<_>>()
        };
        ensure(words(&fast.classes) == words(&slow), || format!("({a}, {b}, {c}): class sets differ"))?;
        ensure(slow.iter().all(|c| c.word.len() <= 10), || "brute force still finding classes at depth 11".into())?;
        counts.push(slow.len());
    }
    Ok(format!("{counts:?} classes"))
}

fn huber_round_trip() -> Result<String, String> {
    let s = pants(1.0, 2.0, 3.0);
    let ls = enumerate(&s, 8.0).map_err(|e| e.to_string())?;
    let sampler = |s: f64| Ok(log_zeta(&ls, cx(s, 0.0), &ZetaOptions::default())?.value.re);
    let got = huber_extract_lengths(sampler, 3, &HuberOptions::default()).map_err(|e| e.to_string())?;
    let expected = [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
    ensure(got.len() == 3, || format!("{got:?}"))?;
    for (g, e) in got.iter().zip(expected) {
        ensure((g.0 - e.0).abs() < 1e-6 && g.1 == e.1, || format!("pants: {got:?}"))?;
    }
    // The cylinder has a single primitive length; the extractor must return
    // it and then report that no further length is visible.
    let f = |s: f64| Ok(log_zeta_cylinder(2.0, cx(s, 0.0), None)?.value.re);
    match huber_extract_lengths(f, 3, &HuberOptions::default()) {
        Err(ZsError::PrecisionExhausted { partial }) => {
            ensure(partial.len() == 1 && (partial[0].0 - 2.0).abs() < 1e-6 && partial[0].1 == 2.0, || {
                format!("cylinder: {partial:?}")
            })?;
        }
        other => return Err(format!("cylinder: {other:?}")),
    }
    Ok("pants(1,2,3) three lengths; cylinder(2) its only length".into())
}

/// `-1/s - gamma + sum_k s/(k(s+k))` with an integral tail.
fn digamma_series(s: Complex64) -> Complex64 {
    let n = 200_000;
    let sum: Complex64 = (1..=n).map(|k| s / (k as f64 * (s + k as f64))).sum();
    -1.0 / s - EULER_GAMMA + sum + (1.0 + s / (n as f64 + 0.5)).ln()
}

fn special_functions() -> Result<String, String> {
    let psi = digamma(cx(1.0, 0.0)).map_err(|e| e.to_string())?;
    ensure((psi + EULER_GAMMA).norm() < 1e-13, || format!("psi(1) = {psi}"))?;
    let g = log_barnes_gamma2(cx(1.0, 0.0)).map_err(|e| e.to_string())?;
    ensure(g.norm() < 1e-13, || format!("log Gamma2(1) = {g}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = cx(rng.gen_range(1.0..10.0), rng.gen_range(-5.0..5.0));
        let chi = -1i64;
        let h = 1e-4;
        let fd = (log_z_infinity(s + h, chi).map_err(|e| e.to_string())?
            - log_z_infinity(s - h, chi).map_err(|e| e.to_string())?)
            / (2.0 * h);
        let lhs = fd / (chi as f64 * (2.0 * s - 1.0));
        let d = (lhs - (digamma_series(s) - 1.0)).norm();
        worst = worst.max(d);
        ensure(d < 1e-8, || format!("log-derivative identity at {s}: {d:e}"))?;
    }

    for tail_terms in [0usize, 1, 2] {
        let mut prev: Option<f64> = None;
        for s in [10.0, 20.0, 40.0, 80.0] {
            let s = cx(s, 0.0);
            let exact = log_z_infinity(s, -1).map_err(|e| e.to_string())?;
            let approx = z_infinity_asymptotics(s, -1, tail_terms).map_err(|e| e.to_string())?;
            let r = (exact - approx.value).norm();
            if let (Some(p), true) = (prev, r > 1e-11 * exact.norm()) {
                let expected = 4f64.powi(tail_terms as i32 + 1);
                let ratio = p / r;
                ensure(ratio > expected / 4.0 && ratio < expected * 4.0, || {
                    format!("L = {tail_terms}, s = {s}: ratio {ratio}, expected ~{expected}")
                })?;
            }
            prev = Some(r);
        }
    }
    Ok(format!("identity max deviation {worst:.1e}"))
}

fn zeta_decay() -> Result<String, String> {
    let ls: LengthSpectrum = enumerate(&pants(1.0, 2.0, 3.0), 8.0).map_err(|e| e.to_string())?;
    let l0 = systole(&ls).map_err(|e| e.to_string())?;
    let eval = |s: f64| log_zeta(&ls, cx(s, 0.0), &ZetaOptions::default()).map(|v| v.value.norm());
    let grid: Vec<f64> = (0..=112).map(|i| 2.0 + 0.25 * i as f64).collect();
    let mut scaled = Vec::new();
    for &s in &grid {
        scaled.push(eval(s).map_err(|e| e.to_string())? * (s * l0).exp());
    }
    // C is fitted on [2, 5] and then checked on the whole ray
    let c = scaled[..=12].iter().cloned().fold(0.0, f64::max);
    for (s, v) in grid.iter().zip(&scaled) {
        ensure(*v <= c * (1.0 + 1e-12), || format!("s = {s}: {v} > C = {c}"))?;
    }
    Ok(format!("C = {c:.6}"))
}

fn random_bump(rng: &mut ChaCha8Rng, amplitude: f64) -> Bump {
    Bump {
        amplitude,
        center: rng.gen_range(-1.0..1.0),
        width: rng.gen_range(0.4..1.2),
        radius: rng.gen_range(1.0..2.0),
        beta: rng.gen_range(-0.6..0.6),
        mode: rng.gen_range(0..4),
        phase: rng.gen_range(0.0..2.0 * PI),
    }
}

fn chart() -> FunnelChart {
    FunnelChart::new(1.0, -4.0, 4.0, 321, 64).unwrap()
}

fn heat_invariants_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let bump = random_bump(&mut rng, 0.1);
        let cf = ConformalFactor::from_bump(chart(), &bump).map_err(|e| e.to_string())?;
        let h = heat_invariants(&cf).map_err(|e| e.to_string())?;
        ensure(h.a1.abs() <= h.errors[1], || format!("a1 = {} > {}", h.a1, h.errors[1]))?;
        let (lo, hi) = bump.support();
        let inner = |t: f64| {
            quadrature::double_exponential::integrate(|q| (2.0 * bump.eval(t, q)).exp_m1(), 0.0, 2.0 * PI, 1e-15)
                .integral
        };
        let oracle =
            quadrature::double_exponential::integrate(|t| t.cosh() / (2.0 * PI) * inner(t), lo, hi, 1e-14).integral
                / (4.0 * PI);
        worst = worst.max((h.a0 - oracle).abs());
        ensure((h.a0 - oracle).abs() < 1e-8, || format!("a0 {} vs oracle {oracle}", h.a0))?;
    }
    Ok(format!("a0 max deviation {worst:.1e}"))
}

fn finite_part_anchors() -> Result<String, String> {
    let opts = FinitePartOptions::default();
    let mut worst: f64 = 0.0;
    for l in [0.5, 1.0, 2.0, 5.0] {
        let v = funnel_zero_volume(l, &opts).map_err(|e| e.to_string())?.value;
        worst = worst.max(v.abs());
        ensure(v.abs() < 1e-6, || format!("funnel l = {l}: {v}"))?;
    }
    for (a, b, c) in [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0)] {
        let v = zero_volume(&pants(a, b, c), &opts).map_err(|e| e.to_string())?;
        worst = worst.max((v - 2.0 * PI).abs());
        ensure((v - 2.0 * PI).abs() < 1e-6, || format!("pants ({a}, {b}, {c}): {v}"))?;
    }
    let v = zero_volume(&build_cylinder(1.0).unwrap(), &opts).map_err(|e| e.to_string())?;
    ensure(v.abs() < 1e-6, || format!("cylinder: {v}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn polyakov_linearization() -> Result<String, String> {
    let bump = Bump { amplitude: 1.0, center: 0.3, width: 0.7, radius: 1.6, beta: 0.3, mode: 1, phase: 0.0 };
    let cf = ConformalFactor::from_bump(chart(), &bump).map_err(|e| e.to_string())?;
    let mean = cf.chart().integrate(cf.values());
    let remainder = |eps: f64| -> Result<f64, String> {
        Ok(polyakov_logD1(&cf.scaled(eps)).map_err(|e| e.to_string())?.value - eps * mean / (6.0 * PI))
    };
    let c2 = remainder(1e-2)? / 1e-4;
    let c3 = remainder(1e-3)? / 1e-6;
    ensure((c2 - c3).abs() < 1e-6 * c2.abs(), || format!("quadratic remainders {c2} vs {c3}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let bump = random_bump(&mut rng, 0.5);
        let cf = ConformalFactor::from_bump(chart(), &bump).map_err(|e| e.to_string())?;
        let p = polyakov_logD1(&cf).map_err(|e| e.to_string())?.value;
        let q = polyakov_logD1(&cf.rotated(11)).map_err(|e| e.to_string())?.value;
        let turned = ConformalFactor::from_bump(chart(), &Bump { phase: bump.phase + 0.377, ..bump })
            .map_err(|e| e.to_string())?;
        let r = polyakov_logD1(&turned).map_err(|e| e.to_string())?.value;
        ensure((q - p).abs() < 1e-10 && (r - p).abs() < 1e-10, || format!("rotation: {p} {q} {r}"))?;
    }
    Ok(format!("quadratic coefficient {c2:.6e}"))
}

fn bounds_suite() -> Result<String, String> {
    for r in [0.1, 0.5, 1.0, 2.0f64.ln(), 3.0, 10.0] {
        let e = epsilon_r(r).map_err(|e| e.to_string())?;
        let direct = -0.5 * (1.0 - (-r).exp()).ln();
        ensure((e - direct).abs() < 1e-14, || format!("eps_R({r}) = {e} vs {direct}"))?;
    }
    ensure(matches!(epsilon_r(0.0), Err(ZsError::InvalidR(_))), || "R = 0 accepted".into())?;
    // (surface, spectrum cutoff): the cutoff must leave enough classes for the
    // exponent estimate behind Z(1) while staying inside the word budget.
    let surfaces = [
        (build_cylinder(0.5).unwrap(), 0.0),
        (build_cylinder(2.0).unwrap(), 0.0),
        (pants(1.5, 1.5, 1.5), 11.0),
        (pants(1.0, 2.0, 3.0), 14.0),
        (pants(2.0, 2.0, 2.0), 14.0),
        (pants(2.0, 3.0, 4.0), 14.0),
    ];
    for (s, cutoff) in &surfaces {
        let r = systole_bound_check(s, *cutoff).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("systole bound fails: {r:?}"))?;
    }
    let rows = properness_sweep(&[2.0, 3.0, 4.0, 5.0], 7.0).map_err(|e| e.to_string())?;
    ensure(rows.windows(2).all(|w| w[1].neg_log_z1 < w[0].neg_log_z1 && w[1].systole > w[0].systole), || {
        format!("sweep not monotone: {rows:?}")
    })?;
    Ok(format!("{} surfaces, sweep of {}", surfaces.len(), rows.len()))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

fn determinism() -> Result<String, String> {
    let commands: Vec<Vec<String>> = vec![
        vec!["spectrum".into(), data("pants123.json"), "--lmax".into(), "8".into()],
        vec!["zeta".into(), data("pants123.json"), "--s-grid".into(), "1.5,6,10".into(), "--lmax".into(), "8".into()],
        vec!["detz".into(), data("pants333.json"), "--s".into(), "2,1".into(), "--lmax".into(), "12".into()],
        vec!["resonances".into(), "--cylinder".into(), "1".into(), "--rect".into(), "-3.5".into(), "0.5".into(), "-14".into(), "14".into()],
        vec!["invariants".into(), data("bump_chart.json")],
        vec!["sweep".into(), "--pants-uniform".into(), "--lmin".into(), "2".into(), "--lmax".into(), "5".into(), "--steps".into(), "4".into()],
        vec!["bounds".into(), data("pants123.json")],
    ];
    for cmd in &commands {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "8"] {
            let out = Command::new(env!("CARGO_BIN_EXE_zs"))
                .arg("--threads")
                .arg(threads)
                .args(cmd)
                .env_remove("ZS_PRECISION")
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{} failed: {}", cmd[0], String::from_utf8_lossy(&out.stderr)))?;
            outputs.push(out.stdout);
        }
        ensure(outputs[0] == outputs[1] && outputs[0] == outputs[2], || format!("{} differs across threads", cmd[0]))?;
    }
    Ok(format!("{} commands x 3 thread budgets", commands.len()))
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("cylinder resonance anchor", cylinder_resonance_anchor),
        ("quadratic counting", quadratic_counting),
        ("pants systole", pants_systole),
        ("oracle equivalence", oracle_equivalence),
        ("huber round trip", huber_round_trip),
        ("special-function identities", special_functions),
        ("zeta decay", zeta_decay),
        ("heat invariants", heat_invariants_check),
        ("finite-part anchors", finite_part_anchors),
        ("polyakov linearization", polyakov_linearization),
        ("bounds suite", bounds_suite),
        ("determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
