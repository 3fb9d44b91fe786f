//! Right limits: exact structural sets per scenario class, a numeric
//! window-clustering detector, and spectra of two-sided limits.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmv::{cmv_band_arcs, paraorthogonal_zeros, PeriodicVerblunsky, TwoSidedCmv};
use crate::error::{Error, Result};
use crate::jacobi::{band_spectrum, eigenvalue_range, eigenvalues, sturm_count, FiniteJacobi, PeriodicJacobi, TwoSidedJacobi};
use crate::sequences::{
    eval_trig, period2_member, window, Family, Param, ParamWindow, ScenarioKind, ScenarioSpec, SeqRule, Slip, Term,
    TorusFamily,
};
use crate::spectra::{
    cloud_to_set, hausdorff_distance, union_and_close, CircleSpectralSet, PointCloud, RealSpectralSet, SpectralSet,
    UnionDiagnostics, DEFAULT_MERGE_TOL,
};

/// Raw windows shorter than this carry too little information.
pub const MIN_RAW_WINDOW: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "operator", rename_all = "snake_case")]
pub enum LimitMember {
    Jacobi(TwoSidedJacobi),
    Cmv(TwoSidedCmv),
}

impl LimitMember {
    pub fn tag(&self) -> &'static str {
        match self {
            LimitMember::Jacobi(j) => j.tag(),
            LimitMember::Cmv(c) => c.tag(),
        }
    }

    pub fn entry(&self, m: i64) -> Option<Param> {
        match self {
            LimitMember::Jacobi(j) => j.entry(m).map(|(a, b)| Param::Jacobi { a, b }),
            LimitMember::Cmv(c) => c.entry(m).map(Param::Cmv),
        }
    }

    /// Sites `−l..=l` as a window centered at the origin.
    pub fn window(&self, l: u64) -> ParamWindow {
        let values = (-(l as i64)..=l as i64).map(|m| self.entry(m)).collect();
        ParamWindow { center: 0, halfwidth: l, values }
    }
}

/// Parametrized families of right limits, sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LimitFamily {
    /// `b_m = Re W(2π q m / p + x)`, `a_m = a[(m + s) mod len]`, over `x ∈ [0, 2π)` and shifts `s`.
    SlippedJacobi { terms: Vec<Term>, period: usize, q: i64, a: Vec<f64> },
    /// `{λ · (core shifted by s)}` over `λ ∈ ∂𝔻` and all shifts.
    CmvRotation { core: Vec<Complex64> },
    /// The period-2 isospectral torus through `(a, b)`.
    JacobiPeriod2 { a: [f64; 2], b: [f64; 2] },
    /// `V_x(m) = W(x + m·freqs)` over `x ∈ 𝕋^d`.
    QuasiTorus { terms: Vec<Term>, freqs: Vec<f64>, a: f64, family: Family, irrational: bool },
}

impl LimitFamily {
    pub fn parameter(&self) -> &'static str {
        match self {
            LimitFamily::SlippedJacobi { .. } => "phase x in [0, 2pi)",
            LimitFamily::CmvRotation { .. } => "rotation lambda = e^{it}, t in [0, 2pi)",
            LimitFamily::JacobiPeriod2 { .. } => "torus angle t in [0, 2pi)",
            LimitFamily::QuasiTorus { .. } => "phase x on the torus",
        }
    }

    fn dimension(&self) -> usize {
        match self {
            LimitFamily::QuasiTorus { freqs, .. } => freqs.len(),
            _ => 1,
        }
    }

    /// Members grouped by parameter value, `grid` points per dimension.
    pub fn sample(&self, grid: usize) -> Result<Vec<Vec<LimitMember>>> {
        let grid = grid.max(1);
        let ts = |k: usize| TAU * k as f64 / grid as f64;
        Ok(match self {
            LimitFamily::SlippedJacobi { terms, period, q, a } => {
                let la = a.len().max(1);
                let len = lcm(*period, la);
                let mut out = Vec::with_capacity(grid);
                for k in 0..grid {
                    let x = ts(k);
                    let mut group = Vec::with_capacity(la);
                    for s in 0..la {
                        let b = (0..len)
                            .map(|m| {
                                let r = (q.rem_euclid(*period as i64) as usize * (m % period)) % period;
                                eval_trig(terms, &[TAU * r as f64 / *period as f64 + x]).re
                            })
                            .collect();
                        let aa = (0..len).map(|m| if a.is_empty() { 1.0 } else { a[(m + s) % la] }).collect();
                        group.push(jacobi_periodic_member(aa, b)?);
                    }
                    out.push(group);
                }
                out
            }
            LimitFamily::CmvRotation { core } => {
                let base = PeriodicVerblunsky::new(core.clone())?;
                (0..grid)
                    .map(|k| {
                        let lambda = Complex64::from_polar(1.0, ts(k));
                        (0..base.period())
                            .map(|s| LimitMember::Cmv(TwoSidedCmv::PeriodicCore { core: base.shifted(s), lambda }))
                            .collect()
                    })
                    .collect()
            }
            LimitFamily::JacobiPeriod2 { a, b } => (0..grid)
                .map(|k| {
                    let (aa, bb) = period2_member(*a, *b, ts(k));
                    let core = PeriodicJacobi::new(aa.to_vec(), bb.to_vec())?;
                    Ok(vec![
                        LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(core.clone())),
                        LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(core.shifted(1))),
                    ])
                })
                .collect::<Result<_>>()?,
            LimitFamily::QuasiTorus { terms, freqs, a, family, .. } => {
                let d = freqs.len();
                let total = grid.checked_pow(d as u32).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
                (0..total)
                    .map(|mut idx| {
                        let phase: Vec<f64> = (0..d)
                            .map(|_| {
                                let k = idx % grid;
                                idx /= grid;
                                ts(k)
                            })
                            .collect();
                        vec![qp_member(terms, freqs, *a, *family, phase)]
                    })
                    .collect()
            }
        })
    }
}

fn qp_member(terms: &[Term], freqs: &[f64], a: f64, family: Family, phase: Vec<f64>) -> LimitMember {
    match family {
        Family::Jacobi => {
            LimitMember::Jacobi(TwoSidedJacobi::QuasiPeriodic { terms: terms.to_vec(), freqs: freqs.to_vec(), phase, a })
        }
        Family::Cmv => LimitMember::Cmv(TwoSidedCmv::QuasiPeriodic { terms: terms.to_vec(), freqs: freqs.to_vec(), phase }),
    }
}

// Periodic Jacobi data as a member; zero off-diagonals split it into blocks.
fn jacobi_periodic_member(a: Vec<f64>, b: Vec<f64>) -> Result<LimitMember> {
    let p = b.len();
    match a.iter().position(|x| *x == 0.0) {
        None => Ok(LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(PeriodicJacobi::new(a, b)?))),
        Some(z) => {
            // start right after a zero coupling so that blocks are not cut
            let start = (z + 1) % p;
            let mut blocks = Vec::new();
            let (mut bb, mut aa) = (Vec::new(), Vec::new());
            for k in 0..p {
                let j = (start + k) % p;
                bb.push(b[j]);
                if a[j] == 0.0 {
                    blocks.push(FiniteJacobi::new(std::mem::take(&mut bb), std::mem::take(&mut aa))?);
                } else {
                    aa.push(a[j]);
                }
            }
            Ok(LimitMember::Jacobi(TwoSidedJacobi::BlockSum { blocks }))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub subsequence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub parameter: String,
    pub grid: usize,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RightLimitSet {
    pub family: Family,
    pub members: Vec<LimitMember>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<LimitFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    pub provenance: Provenance,
}

impl RightLimitSet {
    fn finite(family: Family, members: Vec<LimitMember>, kind: &str, subsequence: impl Into<String>) -> Self {
        Self {
            family,
            members,
            generator: None,
            sampling: None,
            provenance: Provenance { kind: kind.into(), subsequence: subsequence.into() },
        }
    }

    fn sampled(family: Family, generator: LimitFamily, grid: usize, kind: &str, subsequence: impl Into<String>) -> Result<Self> {
        let members = generator.sample(grid)?.into_iter().flatten().collect();
        Ok(Self {
            family,
            members,
            sampling: Some(Sampling { parameter: generator.parameter().into(), grid, dimension: generator.dimension() }),
            generator: Some(generator),
            provenance: Provenance { kind: kind.into(), subsequence: subsequence.into() },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// How a slowly varying phase behaves at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
enum SlipLimit {
    /// Converges to the value.
    Fixed(f64),
    /// Unbounded with vanishing increments, so every phase mod `2π` is a limit.
    Dense,
}

fn slip_limit(slip: &Slip) -> SlipLimit {
    match slip {
        Slip::Zero => SlipLimit::Fixed(0.0),
        Slip::Sqrt { scale } | Slip::Log { scale } | Slip::Power { scale, .. } => {
            if *scale == 0.0 {
                SlipLimit::Fixed(0.0)
            } else {
                SlipLimit::Dense
            }
        }
        Slip::Table { tail, .. } => slip_limit(tail),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    /// Grid points per dimension for parametrized families.
    pub grid: usize,
    /// Grid for quasi-periodic tori in more than one dimension.
    pub grid_multi: usize,
    /// Largest denominator of the periodic approximants (Jacobi).
    pub qp_max_denominator: u64,
    /// Largest denominator of the periodic approximants (CMV).
    pub qp_cmv_max_denominator: u64,
    /// Phase offsets per approximant cell.
    pub qp_phase_grid: usize,
    pub merge_tol: f64,
    /// Gap tolerance when converting raw-window eigenvalue clouds to sets.
    pub raw_gap_tol: f64,
    pub eig_tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            grid: 32,
            grid_multi: 8,
            qp_max_denominator: 512,
            qp_cmv_max_denominator: 64,
            qp_phase_grid: 32,
            merge_tol: DEFAULT_MERGE_TOL,
            raw_gap_tol: 0.05,
            eig_tol: 1e-12,
        }
    }
}

/// Structural right-limit set of a scenario. The prefix never matters.
pub fn right_limit_set(spec: &ScenarioSpec, opts: &LimitOptions) -> Result<RightLimitSet> {
    let fam = spec.family;
    let kind = spec.kind.name();
    let grid = opts.grid;
    match (&spec.kind, fam) {
        (ScenarioKind::Periodic(p), Family::Jacobi) => {
            let n = p.b.len();
            let a: Vec<f64> = if p.a.is_empty() { vec![1.0; n] } else { p.a.clone() };
            let members = (0..n)
                .map(|s| {
                    jacobi_periodic_member((0..n).map(|j| a[(j + s) % n]).collect(), (0..n).map(|j| p.b[(j + s) % n]).collect())
                })
                .collect::<Result<_>>()?;
            Ok(RightLimitSet::finite(fam, members, kind, format!("n_j = {n}j + s, s = 0..{n}")))
        }
        (ScenarioKind::Periodic(p), Family::Cmv) => {
            let core = PeriodicVerblunsky::new(p.alpha.clone())?;
            let n = core.period();
            let members = (0..n)
                .map(|s| LimitMember::Cmv(TwoSidedCmv::PeriodicCore { core: core.shifted(s), lambda: Complex64::new(1.0, 0.0) }))
                .collect();
            Ok(RightLimitSet::finite(fam, members, kind, format!("n_j = {n}j + s, s = 0..{n}")))
        }
        (ScenarioKind::SlippedPeriodic(p), Family::Jacobi) => {
            let generator = LimitFamily::SlippedJacobi { terms: p.terms.clone(), period: p.period, q: p.q, a: p.a.clone() };
            match slip_limit(&p.slip) {
                SlipLimit::Dense => RightLimitSet::sampled(
                    fam,
                    generator,
                    grid,
                    kind,
                    "n_j with 2pi q n_j/p + f(n_j) -> x mod 2pi; every x occurs since f is unbounded with vanishing increments",
                ),
                SlipLimit::Fixed(c) => {
                    // phases 2π q s / p + c for the p residues
                    let la = p.a.len().max(1);
                    let len = lcm(p.period, la);
                    let mut members = Vec::new();
                    for s in 0..len {
                        let b = (0..len).map(|m| spec_b_slipped(p.terms.as_slice(), p.period, p.q, s + m, c)).collect();
                        let a = (0..len).map(|m| if p.a.is_empty() { 1.0 } else { p.a[(s + m) % la] }).collect();
                        members.push(jacobi_periodic_member(a, b)?);
                    }
                    Ok(RightLimitSet::finite(fam, members, kind, format!("n_j = {len}j + s with the slip converging to {c}")))
                }
            }
        }
        (ScenarioKind::SlippedPeriodic(p), Family::Cmv) => {
            let core = PeriodicVerblunsky::new(p.alpha.clone())?;
            match slip_limit(&p.slip) {
                SlipLimit::Dense => RightLimitSet::sampled(
                    fam,
                    LimitFamily::CmvRotation { core: core.alpha.clone() },
                    grid,
                    kind,
                    "n_j with e^{i f(n_j)} -> lambda; every lambda occurs",
                ),
                SlipLimit::Fixed(c) => {
                    let lambda = Complex64::from_polar(1.0, c);
                    let members = (0..core.period())
                        .map(|s| LimitMember::Cmv(TwoSidedCmv::PeriodicCore { core: core.shifted(s), lambda }))
                        .collect();
                    Ok(RightLimitSet::finite(fam, members, kind, format!("n_j = pj + s, slip converging to {c}")))
                }
            }
        }
        (ScenarioKind::QuasiPeriodic(p), _) => {
            let limits: Vec<SlipLimit> = (0..p.freqs.len()).map(|j| p.slips.get(j).map_or(SlipLimit::Fixed(0.0), slip_limit)).collect();
            let dense = p.irrational || limits.contains(&SlipLimit::Dense);
            let d = p.freqs.len();
            let generator = LimitFamily::QuasiTorus {
                terms: p.terms.clone(),
                freqs: p.freqs.clone(),
                a: p.a,
                family: fam,
                irrational: p.irrational,
            };
            if dense {
                let g = if d == 1 { grid } else { opts.grid_multi };
                RightLimitSet::sampled(fam, generator, g, kind, "n_j with theta(n_j) -> x; the orbit is dense in the torus")
            } else {
                // rational frequencies and convergent slips: the phases actually
                // visited far out along the stream
                let n0: u64 = 1 << 20;
                let members = (0..grid as u64)
                    .map(|k| {
                        let n = n0 + k;
                        let phase = (0..d)
                            .map(|j| {
                                let c = match limits[j] {
                                    SlipLimit::Fixed(c) => c,
                                    SlipLimit::Dense => 0.0,
                                };
                                crate::sequences::reduced_phase(p.freqs[j], n, c + p.phase0.get(j).copied().unwrap_or(0.0))
                            })
                            .collect();
                        qp_member(&p.terms, &p.freqs, p.a, fam, phase)
                    })
                    .collect();
                Ok(RightLimitSet::finite(fam, members, kind, format!("phases theta(n) for n = 2^20 .. 2^20 + {grid}")))
            }
        }
        (ScenarioKind::Sparse(p), Family::Jacobi) => {
            let members = vec![
                LimitMember::Jacobi(TwoSidedJacobi::free()),
                LimitMember::Jacobi(TwoSidedJacobi::FiniteBump { a: p.bump_a.clone(), b: p.bump_b.clone() }),
            ];
            Ok(RightLimitSet::finite(fam, members, kind, "n_j in the gaps (free limit) or n_j = x_j + s (bump translates)"))
        }
        (ScenarioKind::Sparse(p), Family::Cmv) => {
            let members = vec![
                LimitMember::Cmv(TwoSidedCmv::PeriodicCore {
                    core: PeriodicVerblunsky::new(vec![Complex64::new(0.0, 0.0)])?,
                    lambda: Complex64::new(1.0, 0.0),
                }),
                LimitMember::Cmv(TwoSidedCmv::FiniteBump { alpha: p.bump_alpha.clone() }),
            ];
            Ok(RightLimitSet::finite(fam, members, kind, "n_j in the gaps (free limit) or n_j = x_j + s (bump translates)"))
        }
        (ScenarioKind::DecayingA(p), _) => {
            let prof = p.b.profile()?;
            let v = prof.values;
            let n = v.len();
            let members = (0..n)
                .map(|s| LimitMember::Jacobi(TwoSidedJacobi::Diagonal { b: (0..n).map(|j| v[(j + s) % n]).collect() }))
                .collect();
            Ok(RightLimitSet::finite(fam, members, kind, format!("n_j = {n}j + s; a_n -> 0 and b_n runs through its limit points")))
        }
        (ScenarioKind::TorusAsymptotic(p), _) => {
            let pert = p.perturbation.profile()?;
            if pert.values.iter().any(|v| *v != 0.0) {
                return Err(Error::Scenario("torus perturbation must tend to zero".into()));
            }
            let lim = slip_limit(&p.slip);
            match &p.torus {
                TorusFamily::JacobiTranslates { a, b } => {
                    let n = b.len();
                    let members = (0..n)
                        .map(|s| jacobi_periodic_member((0..n).map(|j| a[(j + s) % n]).collect(), (0..n).map(|j| b[(j + s) % n]).collect()))
                        .collect::<Result<_>>()?;
                    Ok(RightLimitSet::finite(fam, members, kind, "every cyclic translate of the torus"))
                }
                TorusFamily::JacobiPeriod2 { a, b } => match lim {
                    SlipLimit::Dense => RightLimitSet::sampled(
                        fam,
                        LimitFamily::JacobiPeriod2 { a: *a, b: *b },
                        grid,
                        kind,
                        "n_j with t(n_j) -> t; every torus point occurs",
                    ),
                    SlipLimit::Fixed(c) => {
                        let (aa, bb) = period2_member(*a, *b, c);
                        let core = PeriodicJacobi::new(aa.to_vec(), bb.to_vec())?;
                        let members = vec![
                            LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(core.clone())),
                            LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(core.shifted(1))),
                        ];
                        Ok(RightLimitSet::finite(fam, members, kind, format!("torus parameter converging to {c}")))
                    }
                },
                TorusFamily::CmvRotation { core } => match lim {
                    SlipLimit::Dense => RightLimitSet::sampled(
                        fam,
                        LimitFamily::CmvRotation { core: core.clone() },
                        grid,
                        kind,
                        "n_j with e^{i t(n_j)} -> lambda; every lambda occurs",
                    ),
                    SlipLimit::Fixed(c) => {
                        let base = PeriodicVerblunsky::new(core.clone())?;
                        let lambda = Complex64::from_polar(1.0, c);
                        let members = (0..base.period())
                            .map(|s| LimitMember::Cmv(TwoSidedCmv::PeriodicCore { core: base.shifted(s), lambda }))
                            .collect();
                        Ok(RightLimitSet::finite(fam, members, kind, format!("rotation converging to e^{{i{c}}}")))
                    }
                },
            }
        }
        (ScenarioKind::BarriosLopez(p), _) => {
            let core = vec![Complex64::new(p.a, 0.0)];
            match slip_limit(&p.slip) {
                SlipLimit::Dense => RightLimitSet::sampled(
                    fam,
                    LimitFamily::CmvRotation { core },
                    grid,
                    kind,
                    "n_j with e^{i f(n_j)} -> lambda; the constant sequences lambda a",
                ),
                SlipLimit::Fixed(c) => {
                    let member = LimitMember::Cmv(TwoSidedCmv::PeriodicCore {
                        core: PeriodicVerblunsky::new(core)?,
                        lambda: Complex64::from_polar(1.0, c),
                    });
                    Ok(RightLimitSet::finite(fam, vec![member], kind, format!("phase converging to {c}")))
                }
            }
        }
        (ScenarioKind::CustomTable(_), _) => Err(Error::UnsupportedClass(kind.into())),
    }
}

fn spec_b_slipped(terms: &[Term], period: usize, q: i64, n: usize, c: f64) -> f64 {
    let r = (q.rem_euclid(period as i64) as usize * (n % period)) % period;
    eval_trig(terms, &[TAU * r as f64 / period as f64 + c]).re
}

// ---------------------------------------------------------------------------
// numeric detector

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCluster {
    pub representative: ParamWindow,
    pub centers: Vec<u64>,
    /// Sup-norm spread of the members around the representative.
    pub radius: f64,
    /// Fraction of the top-decade centers that fall in this cluster.
    pub late_density: f64,
    /// No member among the top-decade centers.
    pub transient: bool,
}

/// Greedy sup-norm clustering of stream windows of half-width `l`.
pub fn detect_right_limits(spec: &ScenarioSpec, l: u64, centers: &[u64], eps: f64) -> Result<Vec<LimitCluster>> {
    if centers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("centers must be strictly increasing".into()));
    }
    if let Some(c) = centers.first() {
        if *c <= l {
            return Err(Error::InvalidArgument(format!("smallest center {c} must exceed the half-width {l}")));
        }
    }
    let windows: Vec<ParamWindow> = centers.par_iter().map(|c| window(spec, *c, l)).collect();
    let mut clusters: Vec<LimitCluster> = Vec::new();
    for w in windows {
        let best = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.representative.sup_dist(&w)))
            .filter(|(_, d)| *d <= eps)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((i, d)) => {
                clusters[i].centers.push(w.center);
                clusters[i].radius = clusters[i].radius.max(d);
            }
            None => clusters.push(LimitCluster {
                centers: vec![w.center],
                representative: w,
                radius: 0.0,
                late_density: 0.0,
                transient: true,
            }),
        }
    }
    let top = centers.last().copied().unwrap_or(0);
    let late_from = top / 10;
    let late_total = centers.iter().filter(|c| **c >= late_from).count().max(1);
    for c in &mut clusters {
        let late = c.centers.iter().filter(|x| **x >= late_from).count();
        c.late_density = late as f64 / late_total as f64;
        c.transient = late == 0;
    }
    Ok(clusters)
}

/// Smallest sup distance between the member's central window and the stream
/// windows at the given centers.
pub fn recurrence_distance(spec: &ScenarioSpec, member: &LimitMember, l: u64, centers: &[u64]) -> f64 {
    let target = member.window(l);
    centers.par_iter().map(|c| window(spec, *c, l).sup_dist(&target)).reduce(|| f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// spectra of limits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSpectrum {
    pub set: SpectralSet,
    /// Numerical stand-in rather than an exact structural computation.
    pub approximate: bool,
}

impl LimitSpectrum {
    fn exact(set: impl Into<SpectralSet>) -> Self {
        Self { set: set.into(), approximate: false }
    }
}

pub fn limit_spectrum(member: &LimitMember, opts: &LimitOptions) -> Result<LimitSpectrum> {
    match member {
        LimitMember::Jacobi(j) => jacobi_limit_spectrum(j, opts),
        LimitMember::Cmv(c) => cmv_limit_spectrum(c, opts),
    }
}

fn jacobi_limit_spectrum(j: &TwoSidedJacobi, opts: &LimitOptions) -> Result<LimitSpectrum> {
    match j {
        TwoSidedJacobi::PeriodicCore(p) => Ok(LimitSpectrum::exact(band_spectrum(p)?)),
        TwoSidedJacobi::Diagonal { b } => {
            let finite: Vec<f64> = b.iter().copied().filter(|x| x.is_finite()).collect();
            let below = b.contains(&f64::NEG_INFINITY);
            let above = b.contains(&f64::INFINITY);
            Ok(LimitSpectrum::exact(RealSpectralSet::from_points(finite).with_flags(below, above)))
        }
        TwoSidedJacobi::BlockSum { blocks } => {
            let pts: Vec<f64> = blocks.iter().flat_map(|blk| eigenvalues(blk, opts.eig_tol)).collect();
            Ok(LimitSpectrum::exact(RealSpectralSet::from_points(pts)))
        }
        TwoSidedJacobi::FiniteBump { a, b } => {
            let len = a.len().max(b.len()) as i64;
            let margin = 400 + 4 * len;
            let m = j.section(-margin, len + margin)?;
            // free chain: continuous spectrum [−2, 2]; bound states lie outside
            let edge = 1e-9;
            let below = sturm_count(&m, -2.0 - edge);
            let above = sturm_count(&m, 2.0 + edge);
            let mut pts = eigenvalue_range(&m, 0, below, opts.eig_tol);
            pts.extend(eigenvalue_range(&m, above, m.len(), opts.eig_tol));
            Ok(LimitSpectrum::exact(RealSpectralSet::new(vec![[-2.0, 2.0]], pts)))
        }
        TwoSidedJacobi::QuasiPeriodic { terms, freqs, phase, a } => {
            Ok(LimitSpectrum { set: qp_jacobi_spectrum(terms, freqs, phase, *a, opts)?.into(), approximate: true })
        }
        TwoSidedJacobi::RawWindow { b, .. } => {
            if b.len() < MIN_RAW_WINDOW {
                return Err(Error::TooSmallWindow { got: b.len(), need: MIN_RAW_WINDOW });
            }
            let TwoSidedJacobi::RawWindow { center, .. } = j else { unreachable!() };
            let lo = -(*center as i64);
            let m = j.section(lo, lo + b.len() as i64 - 1)?;
            let cloud = PointCloud::line(eigenvalues(&m, opts.eig_tol));
            Ok(LimitSpectrum { set: cloud_to_set(&cloud, opts.raw_gap_tol)?, approximate: true })
        }
    }
}

fn cmv_limit_spectrum(c: &TwoSidedCmv, opts: &LimitOptions) -> Result<LimitSpectrum> {
    match c {
        TwoSidedCmv::PeriodicCore { core, lambda } => Ok(LimitSpectrum::exact(cmv_band_arcs(&core.rotated(*lambda))?)),
        TwoSidedCmv::Unimodular { alpha } => {
            // the extended CMV matrix is diagonal with entries −ᾱ_{j+1} α_j
            let p = alpha.len();
            let pts = (0..p).map(|j| (-(alpha[(j + 1) % p].conj()) * alpha[j]).arg().rem_euclid(TAU)).collect();
            Ok(LimitSpectrum::exact(CircleSpectralSet::from_points(pts)))
        }
        // a free CMV matrix has the whole circle as spectrum; a finite bump
        // cannot add anything outside it
        TwoSidedCmv::FiniteBump { .. } => Ok(LimitSpectrum::exact(CircleSpectralSet::full())),
        TwoSidedCmv::QuasiPeriodic { terms, freqs, phase } => {
            Ok(LimitSpectrum { set: qp_cmv_spectrum(terms, freqs, phase, opts)?.into(), approximate: true })
        }
        TwoSidedCmv::RawWindow { values, .. } => {
            if values.len() < MIN_RAW_WINDOW {
                return Err(Error::TooSmallWindow { got: values.len(), need: MIN_RAW_WINDOW });
            }
            let zeros = paraorthogonal_zeros(&values[..values.len() - 1], Complex64::new(1.0, 0.0), 1e-12)?;
            Ok(LimitSpectrum { set: cloud_to_set(&PointCloud::circle(zeros), opts.raw_gap_tol)?, approximate: true })
        }
    }
}

/// Last continued-fraction convergent `p/q` of `w` with `q ≤ qmax`.
pub fn best_rational(w: f64, qmax: u64) -> (i64, u64) {
    let (mut h1, mut h2) = (1i64, 0i64);
    let (mut k1, mut k2) = (0u64, 1u64);
    let mut x = w;
    let mut best = (w.round() as i64, 1u64);
    for _ in 0..64 {
        let a = x.floor();
        let h = a as i64 * h1 + h2;
        let k = a as u64 * k1 + k2;
        if k > qmax {
            break;
        }
        best = (h, k);
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        let frac = x - a;
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    best
}

/// Common denominator `q ≤ qmax` and numerators approximating `freqs / 2π`.
pub fn simultaneous_approximant(freqs: &[f64], qmax: u64) -> (Vec<i64>, u64) {
    let w: Vec<f64> = freqs.iter().map(|f| (f / TAU).rem_euclid(1.0)).collect();
    if w.len() == 1 {
        let (p, q) = best_rational(w[0], qmax);
        return (vec![p], q);
    }
    let err = |q: u64| w.iter().map(|x| (x * q as f64 - (x * q as f64).round()).abs()).fold(0.0, f64::max);
    let q = (1..=qmax.max(1)).min_by(|a, b| err(*a).total_cmp(&err(*b))).unwrap_or(1);
    (w.iter().map(|x| (x * q as f64).round() as i64).collect(), q)
}

// Phase offsets spanning one approximant cell in each dimension.
fn approximant_offsets(d: usize, q: u64, per_dim: usize) -> Vec<Vec<f64>> {
    let cell = TAU / q as f64;
    let total = per_dim.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let k = idx % per_dim;
                    idx /= per_dim;
                    cell * k as f64 / per_dim as f64
                })
                .collect()
        })
        .collect()
}

/// Union over phase offsets of the spectra of periodic approximants.
pub fn qp_jacobi_spectrum(terms: &[Term], freqs: &[f64], phase: &[f64], a: f64, opts: &LimitOptions) -> Result<RealSpectralSet> {
    let d = freqs.len();
    if a == 0.0 {
        // multiplication operator: the range of Re W over the torus
        let per = if d == 1 { 4096 } else { 64 };
        let vals: Vec<f64> =
            approximant_offsets(d, 1, per).iter().map(|x| eval_trig(terms, x).re).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(RealSpectralSet::interval(lo, hi));
    }
    let (nums, q) = simultaneous_approximant(freqs, opts.qp_max_denominator);
    let per = if d == 1 { opts.qp_phase_grid } else { opts.grid_multi };
    let sets: Vec<RealSpectralSet> = approximant_offsets(d, q, per)
        .par_iter()
        .map(|off| {
            let b: Vec<f64> = (0..q)
                .map(|m| {
                    let th: Vec<f64> = (0..d)
                        .map(|j| phase[j] + off[j] + TAU * ((nums[j] * m as i64).rem_euclid(q as i64)) as f64 / q as f64)
                        .collect();
                    eval_trig(terms, &th).re
                })
                .collect();
            band_spectrum(&PeriodicJacobi::new(vec![a; q as usize], b)?)
        })
        .collect::<Result<_>>()?;
    Ok(RealSpectralSet::union_all(&sets, opts.merge_tol).0)
}

pub fn qp_cmv_spectrum(terms: &[Term], freqs: &[f64], phase: &[f64], opts: &LimitOptions) -> Result<CircleSpectralSet> {
    let d = freqs.len();
    let (nums, q) = simultaneous_approximant(freqs, opts.qp_cmv_max_denominator);
    let per = if d == 1 { opts.qp_phase_grid } else { opts.grid_multi };
    let sets: Vec<CircleSpectralSet> = approximant_offsets(d, q, per)
        .par_iter()
        .map(|off| {
            let alpha: Vec<Complex64> = (0..q)
                .map(|m| {
                    let th: Vec<f64> = (0..d)
                        .map(|j| phase[j] + off[j] + TAU * ((nums[j] * m as i64).rem_euclid(q as i64)) as f64 / q as f64)
                        .collect();
                    eval_trig(terms, &th)
                })
                .collect();
            cmv_band_arcs(&PeriodicVerblunsky::new(alpha)?)
        })
        .collect::<Result<_>>()?;
    Ok(CircleSpectralSet::union_all(&sets, opts.merge_tol).0)
}

// Members known to share a spectrum get the same key: cyclic translates of
// a periodic core, global rotations of a CMV core, and all phases of an
// irrational quasi-periodic family.
fn spectral_key(member: &LimitMember, phase_independent: bool) -> String {
    fn bits(v: impl Iterator<Item = f64>) -> Vec<u64> {
        v.map(|x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
    }
    match member {
        LimitMember::Jacobi(TwoSidedJacobi::PeriodicCore(p)) => {
            let n = p.period();
            let best = (0..n)
                .map(|s| {
                    let q = p.shifted(s);
                    bits(q.a.iter().chain(&q.b).copied())
                })
                .min()
                .unwrap_or_default();
            format!("pj:{best:?}")
        }
        LimitMember::Cmv(TwoSidedCmv::PeriodicCore { core, .. }) => {
            let n = core.period();
            let best = (0..n)
                .map(|s| {
                    let q = core.shifted(s);
                    let pivot = q.alpha.iter().find(|z| z.norm() > 0.0).map_or(Complex64::new(1.0, 0.0), |z| z / z.norm());
                    bits(q.alpha.iter().flat_map(|z| {
                        let w = z * pivot.conj();
                        [w.re, w.im]
                    }))
                })
                .min()
                .unwrap_or_default();
            format!("pc:{best:?}")
        }
        LimitMember::Jacobi(TwoSidedJacobi::QuasiPeriodic { terms, freqs, a, .. }) if phase_independent => {
            format!("qj:{}", serde_json::to_string(&(terms, freqs, a)).unwrap_or_default())
        }
        LimitMember::Cmv(TwoSidedCmv::QuasiPeriodic { terms, freqs, .. }) if phase_independent => {
            format!("qc:{}", serde_json::to_string(&(terms, freqs)).unwrap_or_default())
        }
        other => format!("m:{}", serde_json::to_string(other).unwrap_or_default()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetSpectrum {
    pub set: SpectralSet,
    pub union: UnionDiagnostics,
    pub approximate: bool,
    pub members: usize,
    pub distinct_spectra: usize,
    /// Grid actually used for parametrized families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    pub refined: bool,
    /// Largest Hausdorff distance between spectra at neighbouring grid points.
    pub sampling_gap: f64,
    /// One closed set per member, or per sampled parameter value for families.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contributions: Vec<SpectralSet>,
}

fn spectra_of(groups: &[Vec<LimitMember>], phase_independent: bool, opts: &LimitOptions) -> Result<(Vec<SpectralSet>, bool, usize)> {
    let flat: Vec<&LimitMember> = groups.iter().flatten().collect();
    let keys: Vec<String> = flat.iter().map(|m| spectral_key(m, phase_independent)).collect();
    let mut first: HashMap<&str, usize> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        first.entry(k.as_str()).or_insert(i);
    }
    let mut distinct: Vec<usize> = first.values().copied().collect();
    distinct.sort_unstable();
    let computed: Vec<LimitSpectrum> = distinct.par_iter().map(|i| limit_spectrum(flat[*i], opts)).collect::<Result<_>>()?;
    let by_key: HashMap<&str, &LimitSpectrum> = distinct.iter().zip(&computed).map(|(i, s)| (keys[*i].as_str(), s)).collect();
    let approximate = computed.iter().any(|s| s.approximate);
    // one set per group: the union over the members at that parameter value
    let mut out = Vec::with_capacity(groups.len());
    let mut idx = 0;
    for g in groups {
        let sets: Vec<SpectralSet> = (idx..idx + g.len()).map(|i| by_key[keys[i].as_str()].set.clone()).collect();
        idx += g.len();
        out.push(union_and_close(&sets, opts.merge_tol)?.0);
    }
    Ok((out, approximate, distinct.len()))
}

fn neighbour_gap(sets: &[SpectralSet]) -> f64 {
    if sets.len() < 2 {
        return 0.0;
    }
    (0..sets.len())
        .map(|k| hausdorff_distance(&sets[k], &sets[(k + 1) % sets.len()]).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// `⋃ σ(J^(r))` over the right-limit set, closed up at the merge tolerance.
/// Families are refined once when neighbouring samples differ by more than
/// ten merge tolerances.
pub fn right_limit_spectrum(rl: &RightLimitSet, opts: &LimitOptions) -> Result<LimitSetSpectrum> {
    let phase_independent = matches!(rl.generator, Some(LimitFamily::QuasiTorus { irrational: true, .. }));
    let (groups, grid) = match (&rl.generator, &rl.sampling) {
        (Some(g), Some(s)) => (g.sample(s.grid)?, Some(s.grid)),
        _ => (rl.members.iter().map(|m| vec![m.clone()]).collect(), None),
    };
    let (mut sets, mut approximate, mut distinct) = spectra_of(&groups, phase_independent, opts)?;
    let mut gap = if grid.is_some() { neighbour_gap(&sets) } else { 0.0 };
    let mut refined = false;
    let mut grid = grid;
    if let (Some(g), Some(n)) = (&rl.generator, grid) {
        if gap >= 10.0 * opts.merge_tol {
            let finer = g.sample(2 * n)?;
            let (s2, a2, d2) = spectra_of(&finer, phase_independent, opts)?;
            gap = neighbour_gap(&s2);
            sets = s2;
            approximate = a2;
            distinct = d2;
            refined = true;
            grid = Some(2 * n);
        }
    }
    let (set, union) = union_and_close(&sets, opts.merge_tol)?;
    Ok(LimitSetSpectrum {
        set,
        union,
        approximate,
        members: groups.iter().map(|g| g.len()).sum(),
        distinct_spectra: distinct,
        grid,
        refined,
        sampling_gap: gap,
        contributions: sets,
    })
}

/// Profile helper used by DecayingA scenarios: limit points of a rule.
pub fn limit_points(rule: &SeqRule) -> Result<Vec<f64>> {
    let mut v = rule.profile()?.values;
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{PeriodicParams, Positions, SparseParams};

    fn opts() -> LimitOptions {
        LimitOptions::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn periodic_has_its_translates() {
        let spec = ScenarioSpec::periodic_jacobi(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        assert_eq!(rl.members.len(), 2);
        assert_eq!(rl.members[0].entry(0), Some(Param::Jacobi { a: 1.0, b: 1.0 }));
        assert_eq!(rl.members[1].entry(0), Some(Param::Jacobi { a: 1.0, b: -1.0 }));
        // translation closure: shifting a member gives another member
        for m in &rl.members {
            let shifted: Vec<Option<Param>> = (-5..=5).map(|k| m.entry(k + 1)).collect();
            assert!(rl.members.iter().any(|o| (-5..=5).map(|k| o.entry(k)).collect::<Vec<_>>() == shifted));
        }
        let json = rl.to_json().unwrap();
        assert!(json.contains("periodic_core") && json.contains("\"kind\": \"periodic\""));
    }

    #[test]
    fn decaying_a_gives_diagonal_limits() {
        let spec = ScenarioSpec::decaying_a(
            SeqRule::Power { scale: 1.0, exponent: -1.0 },
            SeqRule::Periodic { values: vec![1.0, -1.0] },
        )
        .unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        assert_eq!(rl.members.len(), 2);
        for m in &rl.members {
            let LimitMember::Jacobi(TwoSidedJacobi::Diagonal { b }) = m else { panic!("{m:?}") };
            assert_eq!(b.len(), 2);
            assert_eq!(b[0], -b[1]);
            assert_eq!(m.entry(0).unwrap().jacobi().unwrap().0, 0.0);
        }
        let s = right_limit_spectrum(&rl, &opts()).unwrap();
        let line = s.set.as_line().unwrap();
        assert_eq!(line.points(), &[-1.0, 1.0]);
        assert!(line.intervals().is_empty());
    }

    #[test]
    fn growing_diagonal_is_flagged() {
        let spec = ScenarioSpec::decaying_a(
            SeqRule::Power { scale: 1.0, exponent: -1.0 },
            SeqRule::Interleave { rules: vec![SeqRule::Power { scale: 1.0, exponent: 0.5 }, SeqRule::constant(0.3)] },
        )
        .unwrap();
        let s = right_limit_spectrum(&right_limit_set(&spec, &opts()).unwrap(), &opts()).unwrap();
        let line = s.set.as_line().unwrap();
        assert!(line.unbounded_above() && !line.unbounded_below());
        assert_eq!(line.points(), &[0.3]);
    }

    #[test]
    fn barrios_lopez_family_and_arc() {
        let spec = ScenarioSpec::barrios_lopez(0.5, Slip::Sqrt { scale: 1.0 }).unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        assert_eq!(rl.members.len(), 32);
        for m in &rl.members {
            let z = m.entry(7).unwrap().alpha().unwrap();
            assert!((z.norm() - 0.5).abs() < 1e-15);
            assert_eq!(m.entry(3), m.entry(7));
        }
        let s = right_limit_spectrum(&rl, &opts()).unwrap();
        // every member has the same arc, so a single spectrum is computed
        assert_eq!(s.distinct_spectra, 1);
        assert!(!s.refined);
        let arcs = s.set.as_circle().unwrap().arcs();
        assert_eq!(arcs.len(), 1);
        assert!((arcs[0][0] - TAU / 6.0).abs() < 1e-9 && (arcs[0][1] - 5.0 * TAU / 6.0).abs() < 1e-9);
    }

    #[test]
    fn sparse_limits_and_bound_states() {
        let p = SparseParams { bump_b: vec![3.0], positions: Positions::Squares, ..Default::default() };
        let spec = ScenarioSpec::new(Family::Jacobi, ScenarioKind::Sparse(p)).unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        assert_eq!(rl.members.len(), 2);
        let s = right_limit_spectrum(&rl, &opts()).unwrap();
        let line = s.set.as_line().unwrap();
        assert_eq!(line.intervals().len(), 1);
        assert!((line.intervals()[0][0] + 2.0).abs() < 1e-12 && (line.intervals()[0][1] - 2.0).abs() < 1e-12);
        // one-site bump of height v: bound state at sign(v)·√(v² + 4)
        assert_eq!(line.points().len(), 1);
        assert!((line.points()[0] - 13f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn custom_table_is_unsupported() {
        let spec = ScenarioSpec::new(Family::Jacobi, ScenarioKind::CustomTable(Default::default())).unwrap();
        assert!(matches!(right_limit_set(&spec, &opts()), Err(Error::UnsupportedClass(_))));
    }

    #[test]
    fn limit_spectrum_examples() {
        let free = limit_spectrum(&LimitMember::Jacobi(TwoSidedJacobi::free()), &opts()).unwrap();
        let iv = free.set.as_line().unwrap().intervals().to_vec();
        assert!(iv.len() == 1 && (iv[0][0] + 2.0).abs() < 1e-12 && (iv[0][1] - 2.0).abs() < 1e-12);
        let d = limit_spectrum(&LimitMember::Jacobi(TwoSidedJacobi::Diagonal { b: vec![1.0, -1.0] }), &opts()).unwrap();
        assert_eq!(d.set.as_line().unwrap().points(), &[-1.0, 1.0]);
        let blk = FiniteJacobi::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let s = limit_spectrum(&LimitMember::Jacobi(TwoSidedJacobi::BlockSum { blocks: vec![blk] }), &opts()).unwrap();
        let pts = s.set.as_line().unwrap().points().to_vec();
        assert!(pts.len() == 2 && (pts[0] + 1.0).abs() < 1e-11 && (pts[1] - 1.0).abs() < 1e-11);
        let raw = TwoSidedJacobi::RawWindow { a: vec![1.0; 10], b: vec![0.0; 10], center: 5 };
        assert!(matches!(limit_spectrum(&LimitMember::Jacobi(raw), &opts()), Err(Error::TooSmallWindow { got: 10, need: 64 })));
        let raw = TwoSidedJacobi::RawWindow { a: vec![1.0; 400], b: vec![0.0; 400], center: 200 };
        let s = limit_spectrum(&LimitMember::Jacobi(raw), &opts()).unwrap();
        assert!(s.approximate);
        let iv = s.set.as_line().unwrap().intervals().to_vec();
        assert_eq!(iv.len(), 1);
        assert!((iv[0][0] + 2.0).abs() < 1e-3 && (iv[0][1] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn unimodular_limit_points() {
        let alpha = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let s = limit_spectrum(&LimitMember::Cmv(TwoSidedCmv::Unimodular { alpha: alpha.clone() }), &opts()).unwrap();
        // oracle: −ᾱ_{j+1} α_j by hand: −(−i)(1) = i, −(1)(i) = −i
        let pts = s.set.as_circle().unwrap().points().to_vec();
        assert_eq!(pts.len(), 2);
        assert!((pts[0] - TAU / 4.0).abs() < 1e-15 && (pts[1] - 3.0 * TAU / 4.0).abs() < 1e-15);
    }

    #[test]
    fn best_rational_examples() {
        assert_eq!(best_rational(1.0 / TAU, 512), (53, 333));
        assert_eq!(best_rational(0.5, 512), (1, 2));
        assert_eq!(best_rational((5f64.sqrt() - 1.0) / 2.0, 100), (55, 89));
        let (nums, q) = simultaneous_approximant(&[TAU * 0.25, TAU * 0.5], 16);
        assert_eq!((nums, q), (vec![1, 2], 4));
    }

    #[test]
    fn qp_spectrum_free_limit() {
        // coupling zero: the approximants are free, spectrum [−2, 2]
        let terms = vec![Term { k: vec![1], c: c(0.0, 0.0) }];
        let s = qp_jacobi_spectrum(&terms, &[1.0], &[0.0], 1.0, &opts()).unwrap();
        assert_eq!(s.intervals().len(), 1);
        assert!((s.intervals()[0][0] + 2.0).abs() < 1e-9 && (s.intervals()[0][1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn qp_family_is_phase_independent_and_recurs() {
        let spec = ScenarioSpec::cos_quasi_periodic(1.0, 1.0, Slip::Sqrt { scale: 1.0 }).unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        assert_eq!(rl.members.len(), 32);
        let s = right_limit_spectrum(&rl, &opts()).unwrap();
        assert_eq!(s.distinct_spectra, 1);
        assert!(s.approximate);
        let m = s.set.as_line().unwrap().measure();
        assert!(m > 1.0 && m < 3.0, "{m}");
        // recurrence at three center scales
        for scale in [10_000u64, 100_000, 1_000_000] {
            let centers: Vec<u64> = (scale..scale + 4000).collect();
            let d = recurrence_distance(&spec, &rl.members[5], 3, &centers);
            assert!(d < 0.05, "scale {scale}: {d}");
        }
    }

    #[test]
    fn detector_periodic() {
        let spec = ScenarioSpec::periodic_jacobi(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let centers: Vec<u64> = (10..=500).collect();
        let cl = detect_right_limits(&spec, 3, &centers, 1e-9).unwrap();
        assert_eq!(cl.len(), 2);
        assert!(cl.iter().all(|c| !c.transient && c.radius == 0.0));
        // the two routes agree on shared windows
        let rl = right_limit_set(&spec, &opts()).unwrap();
        for c in &cl {
            assert!(rl.members.iter().any(|m| m.window(3).sup_dist(&c.representative) < 1e-9));
        }
        assert!(detect_right_limits(&spec, 3, &[3, 10], 1e-9).is_err());
        assert!(detect_right_limits(&spec, 3, &[20, 10], 1e-9).is_err());
    }

    #[test]
    fn detector_decaying_matches_structure() {
        let spec = ScenarioSpec::decaying_a(
            SeqRule::Power { scale: 1.0, exponent: -1.0 },
            SeqRule::Periodic { values: vec![1.0, -1.0] },
        )
        .unwrap();
        let centers: Vec<u64> = (0..200).map(|k| 100_000 + 37 * k).collect();
        let cl = detect_right_limits(&spec, 2, &centers, 1e-4).unwrap();
        assert_eq!(cl.len(), 2);
        let rl = right_limit_set(&spec, &opts()).unwrap();
        for c in &cl {
            assert!(rl.members.iter().any(|m| m.window(2).sup_dist(&c.representative) < 1e-4));
        }
    }

    #[test]
    fn detector_sparse_and_transients() {
        let p = SparseParams { bump_b: vec![1.0], positions: Positions::Squares, ..Default::default() };
        let spec = ScenarioSpec::new(Family::Jacobi, ScenarioKind::Sparse(p)).unwrap();
        // hit bumps at k² and gaps in between
        let mut centers: Vec<u64> = (20..60u64).flat_map(|k| [k * k, k * k + k]).collect();
        centers.sort_unstable();
        let cl = detect_right_limits(&spec, 3, &centers, 1e-9).unwrap();
        assert_eq!(cl.len(), 2);
        assert!(cl.iter().all(|c| !c.transient));
        // a pattern that stops recurring is transient
        let spec = ScenarioSpec::new(
            Family::Jacobi,
            ScenarioKind::Periodic(PeriodicParams { a: vec![1.0], b: vec![0.0], alpha: vec![] }),
        )
        .unwrap()
        .with_prefix(crate::sequences::Prefix { b: vec![0.0; 50].into_iter().chain([5.0]).collect(), ..Default::default() });
        let centers: Vec<u64> = (10..1000).collect();
        let cl = detect_right_limits(&spec, 2, &centers, 1e-9).unwrap();
        assert!(cl.iter().any(|c| c.transient));
        assert!(cl.iter().any(|c| !c.transient && c.late_density == 1.0));
    }

    #[test]
    fn detector_covers_quasi_periodic_phases() {
        let spec = ScenarioSpec::cos_quasi_periodic(1.0, 1.0, Slip::Sqrt { scale: 1.0 }).unwrap();
        let n = 3000;
        let centers: Vec<u64> = (0..n).map(|k| (1e3 * 1e3f64.powf(k as f64 / (n - 1) as f64)).round() as u64).collect::<Vec<_>>();
        let mut centers = centers;
        centers.dedup();
        let cl = detect_right_limits(&spec, 3, &centers, 0.05).unwrap();
        // oracle: the exact family cos(m + x)
        for k in 0..200 {
            let x = TAU * k as f64 / 200.0;
            let exact = ParamWindow {
                center: 0,
                halfwidth: 3,
                values: (-3..=3).map(|m| Some(Param::Jacobi { a: 1.0, b: (m as f64 + x).cos() })).collect(),
            };
            let best = cl.iter().map(|c| c.representative.sup_dist(&exact)).fold(f64::INFINITY, f64::min);
            assert!(best <= 0.1, "x = {x}: {best}");
        }
    }

    #[test]
    fn slipped_jacobi_family_refines() {
        let spec = ScenarioSpec::new(
            Family::Jacobi,
            ScenarioKind::SlippedPeriodic(crate::sequences::SlippedParams {
                period: 3,
                q: 1,
                terms: vec![Term { k: vec![1], c: c(1.0, 0.0) }],
                a: vec![],
                alpha: vec![],
                slip: Slip::Sqrt { scale: 1.0 },
            }),
        )
        .unwrap();
        let rl = right_limit_set(&spec, &opts()).unwrap();
        let s = right_limit_spectrum(&rl, &opts()).unwrap();
        assert!(s.refined);
        assert_eq!(s.grid, Some(64));
        // every member is a period-3 operator whose bands lie inside the union
        for m in rl.members.iter().step_by(5) {
            let ms = limit_spectrum(m, &opts()).unwrap();
            let ex = crate::spectra::excess(&ms.set, &s.set).unwrap();
            assert!(ex < 1e-9);
        }
    }
}
