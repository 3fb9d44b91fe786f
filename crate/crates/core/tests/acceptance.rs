//! The nine acceptance criteria, run in order with one pass/fail line each.
//! Run with `cargo test -p esslab --test acceptance -- --nocapture` to see
//! the summary.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use esslab::cmv::{cmv_band_arcs, PeriodicVerblunsky};
use esslab::criteria::{
    chihara_check, cmv_limit_form_check, krein_check, limit_form_check, JacobiWindow, TargetSet, EXACT_TOL, KREIN_TOL,
};
use esslab::esscore::{
    corpus, discriminant_spectrum, essential_spectrum, truncation_spectrum, verify_theorem, with_scrambled_prefix,
    EssOptions, Persistence,
};
use esslab::jacobi::{band_spectrum, FiniteJacobi, PeriodicJacobi};
use esslab::localization::{commutator_c_norm, localization_sum_bound, localize_trial, partition_identity_residual};
use esslab::sequences::{CustomParams, CustomTail, Family, ScenarioKind};
use esslab::spectra::{excess, hausdorff_distance, RealSpectralSet};
use esslab::{ScenarioSpec, SeqRule, SpectralSet};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

// ---------------------------------------------------------------------------

fn free_jacobi() -> Outcome {
    let spec = ScenarioSpec::free_jacobi();
    let ess = essential_spectrum(&spec, &EssOptions::new()).map_err(err)?;
    let s = ess.set.as_line().ok_or("not a line set")?;
    check(s.intervals().len() == 1 && s.points().is_empty(), format!("{:?}", s.intervals()))?;
    let [lo, hi] = s.intervals()[0];
    check((lo + 2.0).abs() <= 1e-10 && (hi - 2.0).abs() <= 1e-10, format!("edges {lo}, {hi}"))?;
    let disc = discriminant_spectrum(&spec).map_err(err)?;
    check(hausdorff_distance(&disc, &ess.set).map_err(err)? <= 1e-10, "discriminant edges differ")?;
    let cloud = truncation_spectrum(&spec, 2000, Some(Persistence::default_for(2000))).map_err(err)?;
    let d = hausdorff_distance(&cloud, &RealSpectralSet::interval(-2.0, 2.0)).map_err(err)?;
    check(d <= 0.01, format!("truncation distance {d}"))?;
    Ok(format!("edges [{lo}, {hi}], N=2000 distance {d:.2e}"))
}

fn period_two() -> Outcome {
    let p = PeriodicJacobi::new(vec![1.0, 1.0], vec![1.0, -1.0]).map_err(err)?;
    let bands = band_spectrum(&p).map_err(err)?;
    // Δ(x) = x² − 3 for this period; Δ = ±2 gives x² = 5 and x² = 1
    let mut edges: Vec<f64> = [5.0f64, 1.0].iter().flat_map(|q| [-q.sqrt(), q.sqrt()]).collect();
    edges.sort_by(f64::total_cmp);
    let got: Vec<f64> = bands.intervals().iter().flat_map(|iv| [iv[0], iv[1]]).collect();
    check(got.len() == 4, format!("{:?}", bands.intervals()))?;
    let worst = got.iter().zip(&edges).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(worst <= 1e-8, format!("edge error {worst}"))?;
    let spec = ScenarioSpec::periodic_jacobi(vec![1.0, 1.0], vec![1.0, -1.0]).map_err(err)?;
    let cloud = truncation_spectrum(&spec, 2000, Some(Persistence::default_for(2000))).map_err(err)?;
    let d = hausdorff_distance(&cloud, &bands).map_err(err)?;
    check(d <= 0.02, format!("truncation distance {d}"))?;
    Ok(format!("edge error {worst:.1e}, N=2000 distance {d:.2e}"))
}

fn cmv_constant() -> Outcome {
    let a = 0.5f64;
    let arcs = cmv_band_arcs(&PeriodicVerblunsky::new(vec![C::new(a, 0.0)]).map_err(err)?).map_err(err)?;
    let pieces = arcs.arcs();
    check(pieces.len() == 1, format!("{pieces:?}"))?;
    // cos(θ/2) = √(1 − a²) at the edges
    let edge = 2.0 * (1.0 - a * a).sqrt().acos();
    let e0 = (pieces[0][0] - edge).abs();
    let e1 = (pieces[0][1] - (TAU - edge)).abs();
    check(e0 <= 1e-8 && e1 <= 1e-8, format!("edges {:?} vs {edge}", pieces[0]))?;
    check((edge - PI / 3.0).abs() < 1e-12, "edge formula")?;
    let spec = ScenarioSpec::periodic_cmv(vec![C::new(a, 0.0)]).map_err(err)?;
    let cloud = truncation_spectrum(&spec, 1000, Some(Persistence::default_for(1000))).map_err(err)?;
    let d = hausdorff_distance(&cloud, &arcs).map_err(err)?;
    check(d <= 0.05, format!("zero distance {d}"))?;
    Ok(format!("edge errors {e0:.1e}, {e1:.1e}, N=1000 distance {d:.2e}"))
}

fn decaying_a() -> Outcome {
    let spec = ScenarioSpec::decaying_a(
        SeqRule::Power { scale: 1.0, exponent: -0.5 },
        SeqRule::Periodic { values: vec![1.0, -1.0] },
    )
    .map_err(err)?;
    let ess = essential_spectrum(&spec, &EssOptions::new()).map_err(err)?;
    let s = ess.set.as_line().ok_or("not a line set")?;
    check(s.intervals().is_empty() && s.points() == [-1.0, 1.0], format!("{:?} {:?}", s.intervals(), s.points()))?;
    let cloud = truncation_spectrum(&spec, 4000, Some(Persistence { sizes: (4000, 6000), delta: 0.02 })).map_err(err)?;
    check(!cloud.is_empty(), "no persistent points")?;
    let e = excess(&cloud, &RealSpectralSet::from_points(vec![-1.0, 1.0])).map_err(err)?;
    check(e <= 0.05, format!("farthest persistent point at {e}"))?;
    Ok(format!("sigma_ess = {{-1, 1}}, {} persistent points within {e:.2e}", cloud.len()))
}

fn theorem(tag: &str, budget: &[usize]) -> Outcome {
    let r = verify_theorem(tag, budget, &EssOptions::new()).map_err(err)?;
    let ds: Vec<String> = r.distances.iter().map(|d| format!("{}:{:.4}", d.n, d.hausdorff)).collect();
    check(r.monotone, format!("not monotone: {}", ds.join(" ")))?;
    let last = r.distances.last().ok_or("empty schedule")?;
    check(last.hausdorff <= 0.1, format!("final distance {}", last.hausdorff))?;
    check(r.passed, format!("identity gap {:?}", r.identity_gap))?;
    Ok(format!("distances {}", ds.join(" ")))
}

fn barrios_lopez() -> Outcome {
    theorem("thm-5-6", &[500, 1000, 2000, 4000])
}

fn slipped_cosine() -> Outcome {
    theorem("thm-5-2", &[1000, 2000, 5000])
}

// ---------------------------------------------------------------------------

fn random_window(rng: &mut ChaCha8Rng, len: usize) -> FiniteJacobi {
    let b = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let a = (1..len).map(|_| rng.gen_range(0.1..1.5)).collect();
    FiniteJacobi::new(b, a).expect("valid window")
}

fn localization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for _ in 0..1000 {
        let len = rng.gen_range(16..120);
        let l = rng.gen_range(2..16);
        let m = random_window(&mut rng, len);
        let lambda = rng.gen_range(-3.0..3.0);
        let phi: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = localize_trial(&m, lambda, &phi, l).map_err(err)?;
        let (lhs, rhs) = localization_sum_bound(&m, lambda, &phi, l).map_err(err)?;
        if t.ratio * t.ratio > t.bound * t.bound * (1.0 + 1e-12) || lhs > rhs * (1.0 + 1e-10) {
            violations += 1;
        }
    }
    check(violations == 0, format!("{violations} violations"))?;
    let mut worst = 0.0f64;
    for l in [2usize, 3, 4, 7, 16, 64, 256] {
        let r = partition_identity_residual(l, 2 * l as u64, 2 * l as u64 + 20 * l as u64).map_err(err)?;
        check(!r.boundary, "bulk range flagged as boundary")?;
        worst = worst.max(r.residual);
    }
    check(worst < 1e-12, format!("partition residual {worst}"))?;
    let spec = ScenarioSpec::free_jacobi();
    let mut norms = Vec::new();
    for k in 2..=8 {
        let l = 1usize << k;
        let lo = 4 * l as u64;
        norms.push((l, commutator_c_norm(&spec, l, lo, lo + 8 * l as u64 - 1).map_err(err)?));
    }
    let scaled: Vec<f64> = norms.iter().map(|(_, c)| c.scaled).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    check(hi / lo <= 2.0, format!("||C|| L^2 ranges over [{lo}, {hi}]"))?;
    let mut ratios = Vec::new();
    for w in norms.windows(2) {
        if w[0].0 >= 8 {
            let r = w[1].1.norm / w[0].1.norm;
            check((0.2..=0.3).contains(&r), format!("ratio {r} at L = {}", w[0].0))?;
            ratios.push(r);
        }
    }
    Ok(format!(
        "0/1000 violations, residual {worst:.1e}, ||C|| L^2 in [{lo:.2}, {hi:.2}], ratios {:.3}..{:.3}",
        ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        ratios.iter().cloned().fold(0.0, f64::max)
    ))
}

// ---------------------------------------------------------------------------

/// Isolated sites on a target, or coupled pairs `(b₁, b₂, a)` with
/// `b₁ + b₂ = x₁ + x₂` and `a² = −(b₁ − x₁)(b₁ − x₂)`.
fn jacobi_instance(rng: &mut ChaCha8Rng, x1: f64, x2: f64, sites: usize) -> JacobiWindow {
    let mut b = Vec::new();
    let mut a = Vec::new();
    while b.len() < sites {
        if !b.is_empty() {
            a.push(0.0);
        }
        if rng.gen_bool(0.5) {
            b.push(if rng.gen_bool(0.5) { x1 } else { x2 });
        } else {
            let b1 = rng.gen_range(x1..x2);
            b.push(b1);
            b.push(x1 + x2 - b1);
            a.push((-(b1 - x1) * (b1 - x2)).sqrt());
        }
    }
    JacobiWindow { b, a }
}

fn unit(t: f64) -> C {
    C::from_polar(1.0, t)
}

/// Unimodular steps `α_m = −λ̄α_{m−1}`, or 2×2 blocks with eigenvalues
/// `λ₁, λ₂`: `α_m = s̄u`, `α_{m+1} = λ̄₁λ̄₂u`, `s = e^{iψ}(−cos δ + it)`.
fn cmv_instance(rng: &mut ChaCha8Rng, l: [C; 2], len: usize) -> Vec<C> {
    let psi = 0.5 * (l[0] * l[1]).arg();
    let delta = l[0].arg() - psi;
    let mut out = vec![unit(rng.gen_range(0.0..TAU))];
    while out.len() < len {
        let u = *out.last().unwrap();
        if rng.gen_bool(0.5) {
            out.push(-l[rng.gen_range(0..2)].conj() * u);
        } else {
            let bound = 0.98 * delta.sin().abs();
            let s = unit(psi) * C::new(-delta.cos(), rng.gen_range(-bound..=bound));
            out.push(s.conj() * u);
            out.push((l[0] * l[1]).conj() * u);
        }
    }
    out
}

fn jacobi_table(a: SeqRule, b: SeqRule) -> ScenarioSpec {
    let tail = CustomTail { a: Some(a), b: Some(b), ..Default::default() };
    ScenarioSpec::new(Family::Jacobi, ScenarioKind::CustomTable(CustomParams { tail, ..Default::default() }))
        .expect("valid table")
}

fn criteria_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let x1 = rng.gen_range(-3.0..2.0);
        let x2 = x1 + rng.gen_range(0.2..3.0);
        let mut w = jacobi_instance(&mut rng, x1, x2, 24);
        let r = limit_form_check(&w, x1, x2, EXACT_TOL).map_err(err)?;
        check(r.holds_a && r.holds_b, format!("jacobi trial {trial}: {r:?}"))?;
        worst = worst.max(r.residual_a).max(r.residual_b);
        let i = rng.gen_range(1..w.b.len() - 1);
        w.b[i] += rng.gen_range(0.05..0.5);
        let r = limit_form_check(&w, x1, x2, EXACT_TOL).map_err(err)?;
        check(r.equivalent && !r.holds_a, format!("broken jacobi trial {trial}: {r:?}"))?;
    }
    for trial in 0..1000 {
        let t1 = rng.gen_range(0.0..TAU);
        let l = [unit(t1), unit(t1 + rng.gen_range(0.2..TAU - 0.2))];
        let mut w = cmv_instance(&mut rng, l, 24);
        let r = cmv_limit_form_check(&w, l[0], l[1], EXACT_TOL).map_err(err)?;
        check(r.holds_a && r.holds_b, format!("cmv trial {trial}: {r:?}"))?;
        worst = worst.max(r.residual_a).max(r.residual_b);
        let i = rng.gen_range(2..w.len() - 2);
        w[i] *= unit(rng.gen_range(0.1..1.0));
        let r = cmv_limit_form_check(&w, l[0], l[1], EXACT_TOL).map_err(err)?;
        check(r.equivalent && !r.holds_a, format!("broken cmv trial {trial}: {r:?}"))?;
    }
    check(worst <= EXACT_TOL, format!("exact residual {worst}"))?;

    // Krein and Chihara verdicts over every Jacobi scenario in the corpus
    let mut cases: Vec<(ScenarioSpec, [f64; 2])> = corpus()
        .into_iter()
        .filter(|s| s.family == Family::Jacobi)
        .flat_map(|s| [(s.clone(), [-1.0, 1.0]), (s, [0.0, 3.0])])
        .collect();
    let paired = jacobi_table(
        SeqRule::Interleave { rules: vec![SeqRule::Power { scale: 1.0, exponent: -1.0 }, SeqRule::constant(1.0)] },
        SeqRule::constant(0.0),
    );
    cases.push((paired.clone(), [-1.0, 1.0]));
    cases.push((paired, [-0.5, 1.0]));
    cases.push((jacobi_table(SeqRule::constant(0.0), SeqRule::Periodic { values: vec![1.0, -1.0] }), [-1.0, 1.0]));
    let fast = ScenarioSpec::decaying_a(
        SeqRule::Power { scale: 1.0, exponent: -1.0 },
        SeqRule::Periodic { values: vec![1.0, -1.0] },
    )
    .map_err(err)?;
    cases.push((fast.clone(), [-1.0, 1.0]));
    cases.push((fast, [0.0, 1.0]));
    let mut holding = 0;
    for (spec, [x1, x2]) in &cases {
        let targets = TargetSet::line(vec![*x1, *x2]).map_err(err)?;
        let k = krein_check(spec, &targets, 4000, KREIN_TOL).map_err(err)?;
        let c = chihara_check(spec, *x1, *x2, 4000, KREIN_TOL).map_err(err)?;
        check(k.verdict == c.verdict, format!("{} with {x1}, {x2}: {:?} vs {:?}", spec.label(), k.verdict, c.verdict))?;
        holding += k.holds() as usize;
    }
    Ok(format!(
        "2000 constructed instances, max exact residual {worst:.1e}; {} corpus cases agree ({holding} hold)",
        cases.len()
    ))
}

fn prefix_invariance() -> Outcome {
    let opts = EssOptions::new();
    let specs = corpus();
    for spec in &specs {
        let a = essential_spectrum(spec, &opts).map_err(err)?;
        let b = essential_spectrum(&with_scrambled_prefix(spec, 100), &opts).map_err(err)?;
        check(bits(&a.set) == bits(&b.set), format!("{} changed", spec.label()))?;
    }
    Ok(format!("{} scenarios bit-identical", specs.len()))
}

fn bits(s: &SpectralSet) -> Vec<u64> {
    let comps: Vec<[f64; 2]> = match s {
        SpectralSet::Line(r) => r.intervals().iter().copied().chain(r.points().iter().map(|p| [*p, *p])).collect(),
        SpectralSet::Circle(c) => c.pieces().iter().copied().chain(c.points().iter().map(|p| [*p, *p])).collect(),
    };
    comps.iter().flat_map(|c| [c[0].to_bits(), c[1].to_bits()]).collect()
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_suite() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("1 free Jacobi", Duration::from_secs(5), free_jacobi),
        ("2 period-2 Jacobi", Duration::from_secs(10), period_two),
        ("3 CMV alpha = 0.5", Duration::from_secs(30), cmv_constant),
        ("4 a_n -> 0, b = (-1)^n", Duration::from_secs(60), decaying_a),
        ("5 rotated alpha = 0.5 e^{i sqrt n}", Duration::from_secs(300), barrios_lopez),
        ("6 b_n = cos(n + sqrt n)", Duration::from_secs(300), slipped_cosine),
        ("7 localization", Duration::from_secs(120), localization),
        ("8 criteria equivalences", Duration::from_secs(120), criteria_equivalences),
        ("9 prefix invariance", Duration::from_secs(60), prefix_invariance),
    ];
    let mut failed = Vec::new();
    for (name, limit, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let took = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > limit => Err(format!("{msg}; took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs())),
            other => other,
        };
        match &outcome {
            Ok(msg) => println!("PASS  criterion {name:<36} {:>7.2}s  {msg}", took.as_secs_f64()),
            Err(msg) => {
                println!("FAIL  criterion {name:<36} {:>7.2}s  {msg}", took.as_secs_f64());
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
