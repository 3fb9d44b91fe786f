//! Finite essential spectra: Krein's compactness test on ∏(J − x_j),
//! Chihara's three conditions, the limit-form conditions for Jacobi and CMV
//! right limits, Golinskii's tail set, and eigenvalues of the finite blocks
//! a right limit decomposes into.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmv::{refine_root, rho, theta};
use crate::error::{Error, Result};
use crate::jacobi::{eigenvalues, FiniteJacobi};
use crate::sequences::{Family, ScenarioSpec};
use crate::spectra::CircleSpectralSet;

type C = Complex64;

/// Tolerance for limit-form checks on exactly constructed instances.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for limit-form checks on limits read off a stream.
pub const STREAM_TOL: f64 = 1e-6;
/// Default sup-entry threshold for calling ∏(J − x_j) compact.
pub const KREIN_TOL: f64 = 1e-3;

const UNIMODULAR_TOL: f64 = 1e-10;

/// Distinct targets: reals `x_j` for Jacobi, unimodular `λ_j` for CMV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum TargetSet {
    Line(Vec<f64>),
    Circle(Vec<C>),
}

impl TargetSet {
    pub fn line(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("targets must be a nonempty list of finite reals".into()));
        }
        for (i, x) in values.iter().enumerate() {
            if values[..i].contains(x) {
                return Err(Error::InvalidArgument(format!("target {x} is repeated")));
            }
        }
        Ok(TargetSet::Line(values))
    }

    pub fn circle(values: Vec<C>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("targets must be nonempty".into()));
        }
        for (i, z) in values.iter().enumerate() {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("target {z} is not unimodular")));
            }
            if values[..i].iter().any(|w| (w - z).norm() <= 1e-12) {
                return Err(Error::InvalidArgument(format!("target {z} is repeated")));
            }
        }
        Ok(TargetSet::Circle(values))
    }

    pub fn len(&self) -> usize {
        match self {
            TargetSet::Line(v) => v.len(),
            TargetSet::Circle(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn reals(&self) -> Result<&[f64]> {
        match self {
            TargetSet::Line(v) => Ok(v),
            TargetSet::Circle(_) => Err(Error::InvalidArgument("Jacobi criteria need real targets".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// Krein

/// Jacobi coefficients on rows `1..=len`, with `a[0] = 0` closing the half-line.
struct Rows {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn load(spec: &ScenarioSpec, last: u64) -> Result<Self> {
        if spec.family != Family::Jacobi {
            return Err(Error::FamilyMismatch { expected: Family::Jacobi, got: spec.family });
        }
        let mut a = vec![0.0; last as usize + 1];
        let mut b = vec![0.0; last as usize + 1];
        for n in 1..=last {
            let (an, bn) = spec.jacobi_at(n);
            a[n as usize] = an;
            b[n as usize] = bn;
        }
        Ok(Rows { a, b })
    }

    fn a(&self, n: i64) -> f64 {
        if n < 1 {
            0.0
        } else {
            self.a[n as usize]
        }
    }

    fn b(&self, n: i64) -> f64 {
        if n < 1 {
            0.0
        } else {
            self.b[n as usize]
        }
    }

    fn band_row(&self, targets: &[f64], n: u64) -> Vec<f64> {
        let l = targets.len() as i64;
        let n = n as i64;
        let width = (2 * l + 1) as usize;
        let mut v = vec![0.0; width];
        v[l as usize] = 1.0;
        let mut w = vec![0.0; width];
        for &x in targets {
            for (i, slot) in w.iter_mut().enumerate() {
                let c = n - l + i as i64;
                if c < 1 {
                    *slot = 0.0;
                    continue;
                }
                let left = if i > 0 { self.a(c - 1) * v[i - 1] } else { 0.0 };
                let right = if i + 1 < width { self.a(c) * v[i + 1] } else { 0.0 };
                *slot = left + (self.b(c) - x) * v[i] + right;
            }
            std::mem::swap(&mut v, &mut w);
        }
        v
    }
}

/// Row `n` of `P(J) = ∏(J − x_j)`: entries at columns `n − ℓ ..= n + ℓ`
/// (zero for columns before the first row). Rows are 1-based.
pub fn krein_band_entries(spec: &ScenarioSpec, targets: &TargetSet, n: u64) -> Result<Vec<f64>> {
    let x = targets.reals()?;
    if n == 0 {
        return Err(Error::Index(0));
    }
    let rows = Rows::load(spec, n + x.len() as u64)?;
    Ok(rows.band_row(x, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// `{criterion, verdict, witness, decay_profile}`; the profile lists
/// `(first row of dyadic block, sup of entries over the block)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub verdict: Verdict,
    pub witness: Option<u64>,
    pub tail_sup: f64,
    pub decay_profile: Vec<(u64, f64)>,
}

impl CriterionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Dyadic blocks whose start is at least `horizon / MONOTONE_SPAN` must have
/// nonincreasing sups.
const MONOTONE_SPAN: u64 = 16;

fn tail_verdict(criterion: &str, sups: &[f64], horizon: u64, tol: f64) -> CriterionReport {
    // sups[r] for rows r = 1..=horizon (index 0 unused)
    let mut profile = Vec::new();
    let mut start = 1u64;
    while start <= horizon {
        let end = (2 * start - 1).min(horizon);
        let s = (start..=end).map(|r| sups[r as usize]).fold(0.0, f64::max);
        profile.push((start, s));
        start *= 2;
    }
    let tail_sup = (horizon / 2..=horizon).map(|r| sups[r as usize]).fold(0.0, f64::max);
    let small = tail_sup < tol;
    let late: Vec<&(u64, f64)> = profile.iter().filter(|(s, _)| s * MONOTONE_SPAN >= horizon).collect();
    let bump = late.windows(2).find(|w| w[1].1 > w[0].1 * (1.0 + 1e-12)).map(|w| w[1].0);
    let verdict = if small && bump.is_none() { Verdict::Holds } else { Verdict::Fails };
    let witness = match verdict {
        Verdict::Holds => None,
        Verdict::Fails => (1..=horizon).find(|&r| sups[r as usize] >= tol).or(bump),
    };
    CriterionReport { criterion: criterion.into(), verdict, witness, tail_sup, decay_profile: profile }
}

/// Numerical stand-in for compactness of `P(J)`: the band entries over rows
/// `[N/2, N]` stay below `tol` and the dyadic sups are nonincreasing near the
/// horizon. A failing verdict names the first row with an entry `≥ tol`.
pub fn krein_check(spec: &ScenarioSpec, targets: &TargetSet, horizon: u64, tol: f64) -> Result<CriterionReport> {
    let x = targets.reals()?;
    if horizon < 100 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is below 100")));
    }
    let rows = Rows::load(spec, horizon + x.len() as u64)?;
    let mut sups = vec![0.0; horizon as usize + 1];
    for n in 1..=horizon {
        sups[n as usize] = rows.band_row(x, n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    Ok(tail_verdict("krein", &sups, horizon, tol))
}

// ---------------------------------------------------------------------------
// Chihara

/// Left-hand sides of Chihara's conditions at row `n`:
/// `a_n² + a_{n−1}² + (b_n − x₁)(b_n − x₂)`, `a_n(b_n + b_{n+1} − x₁ − x₂)`,
/// `a_n a_{n+1}`.
pub fn chihara_residuals(spec: &ScenarioSpec, x1: f64, x2: f64, n: u64) -> Result<[f64; 3]> {
    if n == 0 {
        return Err(Error::Index(0));
    }
    let rows = Rows::load(spec, n + 1)?;
    Ok(chihara_at(&rows, x1, x2, n as i64))
}

fn chihara_at(rows: &Rows, x1: f64, x2: f64, n: i64) -> [f64; 3] {
    let (a0, a1, a2) = (rows.a(n - 1), rows.a(n), rows.a(n + 1));
    let (b1, b2) = (rows.b(n), rows.b(n + 1));
    [a1 * a1 + a0 * a0 + (b1 - x1) * (b1 - x2), a1 * (b1 + b2 - x1 - x2), a1 * a2]
}

/// Same tail rule as [`krein_check`], applied to the largest Chihara residual.
pub fn chihara_check(spec: &ScenarioSpec, x1: f64, x2: f64, horizon: u64, tol: f64) -> Result<CriterionReport> {
    if horizon < 100 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is below 100")));
    }
    let rows = Rows::load(spec, horizon + 1)?;
    let mut sups = vec![0.0; horizon as usize + 1];
    for n in 1..=horizon {
        sups[n as usize] = chihara_at(&rows, x1, x2, n as i64).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    Ok(tail_verdict("chihara", &sups, horizon, tol))
}

// ---------------------------------------------------------------------------
// limit forms

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFormCheck {
    pub holds_a: bool,
    pub holds_b: bool,
    pub equivalent: bool,
    /// Largest violated quantity of each form (0 when it holds exactly).
    pub residual_a: f64,
    pub residual_b: f64,
}

impl LimitFormCheck {
    fn new(res_a: f64, res_b: f64, tol: f64) -> Self {
        let holds_a = res_a <= tol;
        let holds_b = res_b <= tol;
        LimitFormCheck { holds_a, holds_b, equivalent: holds_a == holds_b, residual_a: res_a, residual_b: res_b }
    }
}

/// A window of a two-sided Jacobi limit; `a[i]` couples sites `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiWindow {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

/// Both forms of the two-target condition on a Jacobi limit, evaluated at
/// every `n` with `b_n..b_{n+2}` inside the window.
///
/// Form A works block by block: `ã_n ã_{n+1} = 0`; isolated sites sit on a
/// target; each coupled pair has trace `x₁ + x₂` and determinant `x₁x₂`.
/// Form B is entrywise: `ã_n² + ã_{n−1}² + (b̃_n − x₁)(b̃_n − x₂) = 0`,
/// `ã_n(b̃_n + b̃_{n+1} − x₁ − x₂) = 0`, `ã_n ã_{n+1} = 0`.
pub fn limit_form_check(w: &JacobiWindow, x1: f64, x2: f64, tol: f64) -> Result<LimitFormCheck> {
    let m = w.b.len();
    if m < 3 || w.a.len() + 1 != m {
        return Err(Error::InvalidArgument("Jacobi window needs b of length ≥ 3 and one fewer a".into()));
    }
    let (s, p) = (x1 + x2, x1 * x2);
    let (a, b) = (&w.a, &w.b);
    let coupled = |v: f64| v.abs() > tol;
    let mut res_a = 0.0f64;
    let mut res_b = 0.0f64;
    for n in 0..m - 2 {
        let prod = (a[n] * a[n + 1]).abs();
        // form A
        res_a = res_a.max(prod);
        if !coupled(a[n]) && !coupled(a[n + 1]) {
            res_a = res_a.max((b[n + 1] - x1).abs().min((b[n + 1] - x2).abs()));
        }
        for k in [n, n + 1] {
            if coupled(a[k]) {
                res_a = res_a.max((b[k] + b[k + 1] - s).abs());
                res_a = res_a.max((b[k] * b[k + 1] - a[k] * a[k] - p).abs());
            }
        }
        // form B
        res_b = res_b.max(prod);
        res_b = res_b.max((a[n] * (b[n] + b[n + 1] - s)).abs());
        res_b = res_b.max((a[n + 1] * (b[n + 1] + b[n + 2] - s)).abs());
        res_b = res_b.max((a[n] * a[n] + a[n + 1] * a[n + 1] + (b[n + 1] - x1) * (b[n + 1] - x2)).abs());
    }
    Ok(LimitFormCheck::new(res_a, res_b, tol))
}

/// Both forms of the two-target condition on a CMV limit `α̃`, evaluated at
/// every `n` with `α̃_{n−1}..α̃_{n+2}` inside the window.
///
/// Form A works block by block: `ρ̃_n ρ̃_{n+1} = 0`; `−ᾱ_{n+1}α_n` is a target
/// when `ρ̃_n = ρ̃_{n+1} = 0`; a block with `ρ̃_n ≠ 0` has trace
/// `−ᾱ_nα_{n−1} − ᾱ_{n+1}α_n = λ₁ + λ₂` and determinant `α_{n−1}ᾱ_{n+1} = λ₁λ₂`.
/// Form B reads the entries of `(G − λ₁)(G − λ₂)` for the GGT matrix `G`:
/// `ρ̃_nρ̃_{n+1} = 0`, `ρ̃_n(G_nn + G_{n+1,n+1} − λ₁ − λ₂) = 0` and
/// `(G_nn − λ₁)(G_nn − λ₂) − ρ̃_n²ᾱ_{n+1}α_{n−1} − ρ̃_{n−1}²ᾱ_nα_{n−2} = 0`,
/// where `G_nn = −ᾱ_nα_{n−1}`.
pub fn cmv_limit_form_check(alpha: &[C], l1: C, l2: C, tol: f64) -> Result<LimitFormCheck> {
    let m = alpha.len();
    if m < 4 {
        return Err(Error::InvalidArgument("CMV window needs at least 4 coefficients".into()));
    }
    if let Some(z) = alpha.iter().find(|z| z.norm() > 1.0 + UNIMODULAR_TOL) {
        return Err(Error::Domain(z.norm()));
    }
    let r: Vec<f64> = alpha.iter().map(|&z| rho(z)).collect();
    let g = |n: usize| -alpha[n].conj() * alpha[n - 1];
    let (s, p) = (l1 + l2, l1 * l2);
    let live = |v: f64| v > tol;
    let mut res_a = 0.0f64;
    let mut res_b = 0.0f64;
    for n in 1..m - 2 {
        let prod = r[n] * r[n + 1];
        // form A
        res_a = res_a.max(prod);
        if !live(r[n]) && !live(r[n + 1]) {
            let w = g(n + 1);
            res_a = res_a.max((w - l1).norm().min((w - l2).norm()));
        }
        for k in [n, n + 1] {
            if live(r[k]) {
                res_a = res_a.max((g(k) + g(k + 1) - s).norm());
                res_a = res_a.max((alpha[k - 1] * alpha[k + 1].conj() - p).norm());
            }
        }
        // form B
        res_b = res_b.max(prod);
        res_b = res_b.max(r[n] * (g(n) + g(n + 1) - s).norm());
        res_b = res_b.max(r[n + 1] * (g(n + 1) + g(n + 2) - s).norm());
        let q = n + 1;
        let diag = (g(q) - l1) * (g(q) - l2)
            - r[q] * r[q] * alpha[q + 1].conj() * alpha[q - 1]
            - r[q - 1] * r[q - 1] * alpha[q].conj() * alpha[q - 2];
        res_b = res_b.max(diag.norm());
    }
    Ok(LimitFormCheck::new(res_a, res_b, tol))
}

// ---------------------------------------------------------------------------
// Golinskii

#[derive(Clone, Debug, PartialEq)]
pub struct GolinskiiReport {
    pub set: CircleSpectralSet,
    /// `max(1 − |α_n|)` over the tail.
    pub max_defect: f64,
    pub warning: Option<String>,
}

/// Largest tail defect `1 − |α_n|` still accepted as `|α_n| → 1`.
pub const GOLINSKII_DEFECT: f64 = 0.1;
const GOLINSKII_CLUSTER: f64 = 1e-2;

/// Limit points of `−ᾱ_{j+1}α_j`, estimated by clustering the arguments over
/// `j ∈ [horizon/2, horizon]`; each cluster is represented by its latest
/// member.
pub fn golinskii_decay_spectrum(spec: &ScenarioSpec, horizon: u64) -> Result<GolinskiiReport> {
    if spec.family != Family::Cmv {
        return Err(Error::FamilyMismatch { expected: Family::Cmv, got: spec.family });
    }
    if horizon < 4 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is too short")));
    }
    let mut reps: Vec<f64> = Vec::new();
    let mut max_defect = 0.0f64;
    let mut prev = spec.alpha_at(horizon / 2);
    for j in horizon / 2..=horizon {
        let next = spec.alpha_at(j + 1);
        max_defect = max_defect.max(1.0 - prev.norm());
        let w = -next.conj() * prev;
        prev = next;
        if w.norm() == 0.0 {
            continue;
        }
        let t = w.arg().rem_euclid(TAU);
        match reps.iter_mut().find(|r| circ(**r, t) <= GOLINSKII_CLUSTER) {
            Some(r) => *r = t,
            None => reps.push(t),
        }
    }
    let warning = (max_defect > GOLINSKII_DEFECT).then(|| {
        format!("|alpha_n| does not approach 1 over the tail: max(1 - |alpha|) = {max_defect:.3}")
    });
    Ok(GolinskiiReport { set: CircleSpectralSet::from_points(reps), max_defect, warning })
}

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

// ---------------------------------------------------------------------------
// finite blocks

/// A finite piece of a right limit: a Jacobi block, or a CMV block given by
/// `α̃_0, …, α̃_k` with unimodular ends and interior coefficients in the disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "block", rename_all = "snake_case")]
pub enum FiniteBlock {
    Jacobi(FiniteJacobi),
    Cmv(Vec<C>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum BlockEigenvalues {
    Line(Vec<f64>),
    /// Angles in `[0, 2π)`.
    Circle(Vec<f64>),
}

/// Largest CMV block handled by [`finite_block_eigs`].
pub const MAX_CMV_BLOCK: usize = 8;

pub fn finite_block_eigs(block: &FiniteBlock) -> Result<BlockEigenvalues> {
    match block {
        FiniteBlock::Jacobi(m) => Ok(BlockEigenvalues::Line(eigenvalues(m, 1e-14))),
        FiniteBlock::Cmv(alpha) => cmv_block_eigs(alpha).map(BlockEigenvalues::Circle),
    }
}

/// The `k × k` unitary `A·B` where `Θ(α̃_j)` acts on rows `(j − 1, j)`, odd `j`
/// in `A` and even `j` in `B`; `B` starts with `−α̃_0` and `ᾱ̃_k` fills the last
/// row of whichever factor leaves it free.
pub fn cmv_block_matrix(alpha: &[C]) -> Result<Vec<Vec<C>>> {
    let k = alpha.len().checked_sub(1).filter(|&k| k >= 1).ok_or_else(|| {
        Error::Structure("a CMV block needs at least two coefficients".into())
    })?;
    if k > MAX_CMV_BLOCK {
        return Err(Error::Structure(format!("block size {k} exceeds {MAX_CMV_BLOCK}")));
    }
    for j in [0, k] {
        if (alpha[j].norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::Structure(format!("end coefficient {j} has modulus {}", alpha[j].norm())));
        }
    }
    let zero = C::new(0.0, 0.0);
    let mut fa = vec![vec![zero; k]; k];
    let mut fb = vec![vec![zero; k]; k];
    fb[0][0] = -alpha[0];
    for j in 1..k {
        let t = theta(alpha[j])?.matrix();
        let f = if j % 2 == 1 { &mut fa } else { &mut fb };
        for (r, row) in t.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                f[j - 1 + r][j - 1 + c] = *v;
            }
        }
    }
    let last = if k % 2 == 1 { &mut fa } else { &mut fb };
    last[k - 1][k - 1] = alpha[k].conj();
    let mut out = vec![vec![zero; k]; k];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = (0..k).map(|l| fa[i][l] * fb[l][j]).sum();
        }
    }
    Ok(out)
}

/// Monic characteristic polynomial, lowest degree first (Faddeev–LeVerrier).
fn char_poly(m: &[Vec<C>]) -> Vec<C> {
    let k = m.len();
    let zero = C::new(0.0, 0.0);
    let mut coeffs = vec![zero; k + 1];
    coeffs[k] = C::new(1.0, 0.0);
    let mut mk = vec![vec![zero; k]; k];
    for step in 1..=k {
        // M_step = A·(M_{step−1} + c_{k−step+1} I)
        let mut shifted = mk.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += coeffs[k - step + 1];
        }
        for (i, row) in mk.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..k).map(|l| m[i][l] * shifted[l][j]).sum();
            }
        }
        let trace: C = (0..k).map(|i| mk[i][i]).sum();
        coeffs[k - step] = -trace / step as f64;
    }
    coeffs
}

fn horner(p: &[C], z: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Roots of the characteristic polynomial of a block, located as sign
/// changes of the real function `e^{−i(arg ω + kθ)/2} p(e^{iθ})`, which is
/// real because `p` is self-inversive (`p_j = ω p̄_{k−j}`, `ω = p_0`).
fn cmv_block_eigs(alpha: &[C]) -> Result<Vec<f64>> {
    let m = cmv_block_matrix(alpha)?;
    let k = m.len();
    let p = char_poly(&m);
    let omega = p[0];
    if (omega.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::Structure(format!("determinant has modulus {}", omega.norm())));
    }
    let inversive = (0..=k).map(|j| (p[j] - omega * p[k - j].conj()).norm()).fold(0.0, f64::max);
    if inversive > UNIMODULAR_TOL {
        return Err(Error::Structure(format!("characteristic polynomial is not self-inversive ({inversive:.2e})")));
    }
    let half = omega.arg();
    let q = |t: f64| (horner(&p, C::from_polar(1.0, t)) * C::from_polar(1.0, -0.5 * (half + k as f64 * t))).re;
    let grid = 512 * k;
    let h = TAU / grid as f64;
    let t0 = 0.37 * h;
    let mut roots = Vec::with_capacity(k);
    let mut prev = q(t0);
    for i in 1..=grid {
        let t = t0 + i as f64 * h;
        let cur = q(t);
        if (prev < 0.0) != (cur < 0.0) {
            roots.push(refine_root(&q, t - h, t, 1e-15).rem_euclid(TAU));
        }
        prev = cur;
    }
    if roots.len() != k {
        return Err(Error::Structure(format!("found {} of {k} unimodular eigenvalues", roots.len())));
    }
    let scale = p.iter().map(|c| c.norm()).sum::<f64>();
    for &t in &roots {
        let r = horner(&p, C::from_polar(1.0, t)).norm();
        if r > UNIMODULAR_TOL * scale {
            return Err(Error::Structure(format!("root at angle {t} leaves residual {r:.2e}")));
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}
