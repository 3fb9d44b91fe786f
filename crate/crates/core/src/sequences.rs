//! Parameter streams for Jacobi and CMV scenarios.
//!
//! A [`ScenarioSpec`] describes a one-sided stream: `(a_n, b_n)` for Jacobi
//! operators, `α_n` for CMV operators, indexed by `n >= 0`. Jacobi
//! truncations read indices `1..=N`; CMV truncations read `0..N`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Jacobi,
    Cmv,
}

/// One entry of a stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Jacobi { a: f64, b: f64 },
    Cmv(Complex64),
}

impl Param {
    pub fn jacobi(self) -> Option<(f64, f64)> {
        match self {
            Param::Jacobi { a, b } => Some((a, b)),
            Param::Cmv(_) => None,
        }
    }

    pub fn alpha(self) -> Option<Complex64> {
        match self {
            Param::Cmv(z) => Some(z),
            Param::Jacobi { .. } => None,
        }
    }

    /// Entrywise distance: sup of the coordinate differences for Jacobi
    /// pairs, modulus of the difference for Verblunsky values.
    pub fn dist(self, other: Param) -> f64 {
        match (self, other) {
            (Param::Jacobi { a, b }, Param::Jacobi { a: a2, b: b2 }) => (a - a2).abs().max((b - b2).abs()),
            (Param::Cmv(x), Param::Cmv(y)) => (x - y).norm(),
            _ => f64::INFINITY,
        }
    }

    pub fn magnitude(self) -> f64 {
        match self {
            Param::Jacobi { a, b } => a.abs().max(b.abs()),
            Param::Cmv(z) => z.norm(),
        }
    }
}

// ---------------------------------------------------------------------------
// phase arithmetic

const TWO_PI_HI: f64 = TAU;
const TWO_PI_LO: f64 = 2.4492935982947064e-16;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `(freq·n + offset) mod 2π`, with the product and the reduction carried in
/// double-double so the phase stays accurate for very large `n`.
pub fn reduced_phase(freq: f64, n: u64, offset: f64) -> f64 {
    let (p, pe) = two_prod(freq, n as f64);
    let (s, se) = two_sum(p, offset);
    let lo = pe + se;
    let k = ((s + lo) / TAU).floor();
    let (kh, khe) = two_prod(k, TWO_PI_HI);
    let (r, re) = two_sum(s, -kh);
    let v = r + (re - khe + lo - k * TWO_PI_LO);
    let v = v.rem_euclid(TAU);
    if v >= TAU {
        0.0
    } else {
        v
    }
}

// ---------------------------------------------------------------------------
// building blocks

/// Real sequence rules, evaluated at absolute stream index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SeqRule {
    Constant { value: f64 },
    /// `values[n mod len]`
    Periodic { values: Vec<f64> },
    /// `scale · max(n, 1)^exponent`
    Power { scale: f64, exponent: f64 },
    /// With `m` rules, index `n` reads rule `n mod m` at `n div m`.
    Interleave { rules: Vec<SeqRule> },
    Sum { rules: Vec<SeqRule> },
    Product { rules: Vec<SeqRule> },
    Table { values: Vec<f64>, tail: Box<SeqRule> },
}

/// Eventual behaviour of a rule: along each residue class mod `values.len()`
/// the rule converges to the listed value (possibly ±∞).
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
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

const MAX_PROFILE_PERIOD: usize = 1 << 16;

impl SeqRule {
    pub fn constant(value: f64) -> Self {
        SeqRule::Constant { value }
    }

    pub fn eval(&self, n: u64) -> f64 {
        match self {
            SeqRule::Constant { value } => *value,
            SeqRule::Periodic { values } => values[(n % values.len() as u64) as usize],
            SeqRule::Power { scale, exponent } => scale * (n.max(1) as f64).powf(*exponent),
            SeqRule::Interleave { rules } => {
                let m = rules.len() as u64;
                rules[(n % m) as usize].eval(n / m)
            }
            SeqRule::Sum { rules } => rules.iter().map(|r| r.eval(n)).sum(),
            SeqRule::Product { rules } => rules.iter().map(|r| r.eval(n)).product(),
            SeqRule::Table { values, tail } => match values.get(n as usize) {
                Some(v) => *v,
                None => tail.eval(n),
            },
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(m.into()));
        match self {
            SeqRule::Periodic { values } if values.is_empty() => bad("periodic rule needs values"),
            SeqRule::Interleave { rules } | SeqRule::Sum { rules } | SeqRule::Product { rules } => {
                if rules.is_empty() {
                    return bad("composite rule needs at least one rule");
                }
                rules.iter().try_for_each(|r| r.check())
            }
            SeqRule::Table { tail, .. } => tail.check(),
            _ => Ok(()),
        }
    }

    /// Limit profile, exact for every rule built from the constructors above.
    pub fn profile(&self) -> Result<Profile> {
        let values = match self {
            SeqRule::Constant { value } => vec![*value],
            SeqRule::Periodic { values } => values.clone(),
            SeqRule::Power { scale, exponent } => {
                let v = if *scale == 0.0 || *exponent < 0.0 {
                    0.0
                } else if *exponent == 0.0 {
                    *scale
                } else {
                    scale.signum() * f64::INFINITY
                };
                vec![v]
            }
            SeqRule::Interleave { rules } => {
                let subs: Vec<Profile> = rules.iter().map(|r| r.profile()).collect::<Result<_>>()?;
                let m = rules.len();
                let inner = subs.iter().fold(1, |acc, p| lcm(acc, p.values.len()));
                let period = m * inner;
                if period > MAX_PROFILE_PERIOD {
                    return Err(Error::Scenario("limit profile period too large".into()));
                }
                (0..period).map(|r| {
                    let p = &subs[r % m].values;
                    p[(r / m) % p.len()]
                })
                .collect()
            }
            SeqRule::Sum { rules } | SeqRule::Product { rules } => {
                let subs: Vec<Profile> = rules.iter().map(|r| r.profile()).collect::<Result<_>>()?;
                let period = subs.iter().fold(1, |acc, p| lcm(acc, p.values.len()));
                if period > MAX_PROFILE_PERIOD {
                    return Err(Error::Scenario("limit profile period too large".into()));
                }
                let sum = matches!(self, SeqRule::Sum { .. });
                let mut out = Vec::with_capacity(period);
                for r in 0..period {
                    let vals = subs.iter().map(|p| p.values[r % p.values.len()]);
                    let v: f64 = if sum { vals.sum() } else { vals.product() };
                    if v.is_nan() {
                        return Err(Error::Scenario("limit profile is indeterminate (∞ − ∞ or 0·∞)".into()));
                    }
                    out.push(v);
                }
                out
            }
            SeqRule::Table { tail, .. } => tail.profile()?.values,
        };
        Ok(Profile { values })
    }
}

/// Slowly varying phase functions `f` with `f(n+1) − f(n) → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[derive(Default)]
pub enum Slip {
    #[default]
    Zero,
    /// `scale · √n`
    Sqrt {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · n^gamma`, `0 < gamma < 1`
    Power {
        gamma: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · ln(1 + n)`
    Log {
        #[serde(default = "one")]
        scale: f64,
    },
    Table { values: Vec<f64>, tail: Box<Slip> },
}

fn one() -> f64 {
    1.0
}


impl Slip {
    pub fn eval(&self, n: u64) -> f64 {
        let x = n as f64;
        match self {
            Slip::Zero => 0.0,
            Slip::Sqrt { scale } => scale * x.sqrt(),
            Slip::Power { gamma, scale } => scale * x.powf(*gamma),
            Slip::Log { scale } => scale * x.ln_1p(),
            Slip::Table { values, tail } => match values.get(n as usize) {
                Some(v) => *v,
                None => tail.eval(n),
            },
        }
    }

    /// `max_{|m| ≤ l} |f(n) − f(n+m)|`, the quantity that must vanish as `n → ∞`.
    pub fn modulus(&self, n: u64, l: u64) -> f64 {
        let f0 = self.eval(n);
        let lo = n.saturating_sub(l);
        (lo..=n + l).map(|m| (self.eval(m) - f0).abs()).fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        match self {
            Slip::Power { gamma, .. } if !(*gamma > 0.0 && *gamma < 1.0) => {
                Err(Error::Scenario(format!("slip exponent {gamma} must lie in (0, 1)")))
            }
            Slip::Table { tail, .. } => tail.check(),
            _ => Ok(()),
        }
    }
}

/// One term `c · e^{i k·θ}` of a trigonometric polynomial on a torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub k: Vec<i64>,
    pub c: Complex64,
}

pub fn eval_trig(terms: &[Term], theta: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        let mut phase = 0.0;
        for (k, th) in t.k.iter().zip(theta) {
            phase += *k as f64 * th;
        }
        acc += t.c * Complex64::from_polar(1.0, phase);
    }
    acc
}

fn cos_term(scale: f64) -> Vec<Term> {
    vec![Term { k: vec![1], c: Complex64::new(scale, 0.0) }]
}

// ---------------------------------------------------------------------------
// scenario parameters

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Complex64>,
}

/// Jacobi: `b_n = Re W(2π q n / period + f(n))`, `a_n = a[n mod len]`.
/// CMV: `α_n = e^{i f(n)} · alpha[n mod len]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlippedParams {
    #[serde(default)]
    pub period: usize,
    #[serde(default = "default_q")]
    pub q: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Complex64>,
    pub slip: Slip,
}

fn default_q() -> i64 {
    1
}

/// `θ_j(n) = freqs[j]·n + slips[j](n) + phase0[j]`; Jacobi streams use
/// `b_n = Re W(θ(n))` with constant `a`, CMV streams use `α_n = W(θ(n))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiParams {
    pub terms: Vec<Term>,
    pub freqs: Vec<f64>,
    #[serde(default)]
    pub slips: Vec<Slip>,
    #[serde(default)]
    pub phase0: Vec<f64>,
    #[serde(default = "one")]
    pub a: f64,
    /// User declaration that `(2π, freqs…)` are rationally independent.
    #[serde(default)]
    pub irrational: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Positions {
    #[default]
    Squares,
    /// `x_k = floor(k^exponent)`, `exponent > 1`
    Power { exponent: f64 },
}

/// Bumps placed at `x_k`: entries `x_k + j` read the bump tables, everything
/// else is free (`a = 1, b = 0` or `α = 0`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bump_a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bump_b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bump_alpha: Vec<Complex64>,
    #[serde(default)]
    pub positions: Positions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayingParams {
    pub a: SeqRule,
    pub b: SeqRule,
}

/// Explicitly parametrized families of periodic sequences, `t ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TorusFamily {
    /// `{λ·core : |λ| = 1}` with `λ = e^{it}`.
    CmvRotation { core: Vec<Complex64> },
    /// Cyclic translates of one periodic Jacobi sequence.
    JacobiTranslates { a: Vec<f64>, b: Vec<f64> },
    /// The full period-2 isospectral torus through `(a, b)`.
    JacobiPeriod2 { a: [f64; 2], b: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub torus: TorusFamily,
    /// Torus parameter along the stream: `t_n = slip(n)`.
    pub slip: Slip,
    /// Added to `b_n` (Jacobi) or to `|α_n|` as a factor `1 + p_n` (CMV).
    #[serde(default = "zero_rule")]
    pub perturbation: SeqRule,
}

fn zero_rule() -> SeqRule {
    SeqRule::constant(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarriosLopezParams {
    pub a: f64,
    pub slip: Slip,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CustomTail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SeqRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<SeqRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<SeqRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Slip>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CustomParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Complex64>,
    #[serde(default)]
    pub tail: CustomTail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ScenarioKind {
    Periodic(PeriodicParams),
    SlippedPeriodic(SlippedParams),
    QuasiPeriodic(QuasiParams),
    Sparse(SparseParams),
    DecayingA(DecayingParams),
    TorusAsymptotic(TorusParams),
    BarriosLopez(BarriosLopezParams),
    CustomTable(CustomParams),
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Periodic(_) => "periodic",
            ScenarioKind::SlippedPeriodic(_) => "slipped_periodic",
            ScenarioKind::QuasiPeriodic(_) => "quasi_periodic",
            ScenarioKind::Sparse(_) => "sparse",
            ScenarioKind::DecayingA(_) => "decaying_a",
            ScenarioKind::TorusAsymptotic(_) => "torus_asymptotic",
            ScenarioKind::BarriosLopez(_) => "barrios_lopez",
            ScenarioKind::CustomTable(_) => "custom_table",
        }
    }
}

/// Finitely many leading entries replaced by explicit values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prefix {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub family: Family,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Prefix>,
}

impl ScenarioSpec {
    pub fn new(family: Family, kind: ScenarioKind) -> Result<Self> {
        let spec = Self { id: None, family, kind, prefix: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_prefix(mut self, prefix: Prefix) -> Self {
        self.prefix = Some(prefix);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn label(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("{:?}/{}", self.family, self.kind.name()).to_lowercase())
    }

    // convenience constructors for the common scenarios

    pub fn free_jacobi() -> Self {
        Self::periodic_jacobi(vec![1.0], vec![0.0]).expect("valid")
    }

    pub fn periodic_jacobi(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(Family::Jacobi, ScenarioKind::Periodic(PeriodicParams { a, b, alpha: vec![] }))
    }

    pub fn periodic_cmv(alpha: Vec<Complex64>) -> Result<Self> {
        Self::new(Family::Cmv, ScenarioKind::Periodic(PeriodicParams { alpha, ..Default::default() }))
    }

    pub fn decaying_a(a: SeqRule, b: SeqRule) -> Result<Self> {
        Self::new(Family::Jacobi, ScenarioKind::DecayingA(DecayingParams { a, b }))
    }

    pub fn barrios_lopez(a: f64, slip: Slip) -> Result<Self> {
        Self::new(Family::Cmv, ScenarioKind::BarriosLopez(BarriosLopezParams { a, slip }))
    }

    /// `b_n = coupling · cos(freq·n + slip(n))`, `a_n = 1`.
    pub fn cos_quasi_periodic(coupling: f64, freq: f64, slip: Slip) -> Result<Self> {
        Self::new(
            Family::Jacobi,
            ScenarioKind::QuasiPeriodic(QuasiParams {
                terms: cos_term(coupling),
                freqs: vec![freq],
                slips: vec![slip],
                phase0: vec![0.0],
                a: 1.0,
                irrational: true,
            }),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        let jac = self.family == Family::Jacobi;
        let check_alpha = |alpha: &[Complex64]| -> Result<()> {
            for z in alpha {
                if z.norm() > 1.0 + 1e-14 {
                    return Err(Error::Domain(z.norm()));
                }
            }
            Ok(())
        };
        let check_a = |a: &[f64]| -> Result<()> {
            if let Some(x) = a.iter().find(|x| !(**x >= 0.0)) {
                return Err(Error::Scenario(format!("off-diagonal entry {x} must be nonnegative")));
            }
            Ok(())
        };
        match &self.kind {
            ScenarioKind::Periodic(p) => {
                if jac {
                    if p.b.is_empty() {
                        return bad("periodic jacobi needs a nonempty b table".into());
                    }
                    if !p.a.is_empty() && p.a.len() != p.b.len() {
                        return bad("periodic a and b tables must have equal length".into());
                    }
                    check_a(&p.a)?;
                } else {
                    if p.alpha.is_empty() {
                        return bad("periodic cmv needs a nonempty alpha table".into());
                    }
                    check_alpha(&p.alpha)?;
                }
            }
            ScenarioKind::SlippedPeriodic(p) => {
                p.slip.check()?;
                if jac {
                    if p.period == 0 || p.terms.is_empty() {
                        return bad("slipped jacobi needs period ≥ 1 and a nonempty W".into());
                    }
                    if p.terms.iter().any(|t| t.k.len() != 1) {
                        return bad("slipped jacobi W is a function of one angle".into());
                    }
                    if gcd(p.q.unsigned_abs() as usize, p.period) != 1 {
                        return bad("q must be coprime to the period".into());
                    }
                    check_a(&p.a)?;
                } else {
                    if p.alpha.is_empty() {
                        return bad("slipped cmv needs a nonempty alpha core".into());
                    }
                    check_alpha(&p.alpha)?;
                }
            }
            ScenarioKind::QuasiPeriodic(p) => {
                let d = p.freqs.len();
                if d == 0 || p.terms.is_empty() {
                    return bad("quasi-periodic scenario needs frequencies and terms".into());
                }
                if p.terms.iter().any(|t| t.k.len() != d) {
                    return bad("every term needs one integer per frequency".into());
                }
                if !p.slips.is_empty() && p.slips.len() != d {
                    return bad("slips must be empty or one per frequency".into());
                }
                if !p.phase0.is_empty() && p.phase0.len() != d {
                    return bad("phase0 must be empty or one per frequency".into());
                }
                p.slips.iter().try_for_each(|s| s.check())?;
                if jac {
                    check_a(&[p.a])?;
                } else {
                    let bound: f64 = p.terms.iter().map(|t| t.c.norm()).sum();
                    if bound > 1.0 + 1e-14 {
                        return bad(format!("Σ|c| = {bound} may leave the unit disk"));
                    }
                }
            }
            ScenarioKind::Sparse(p) => {
                if let Positions::Power { exponent } = p.positions {
                    if !(exponent > 1.0) {
                        return bad("sparse power positions need exponent > 1".into());
                    }
                }
                if jac {
                    check_a(&p.bump_a)?;
                    if p.bump_a.is_empty() && p.bump_b.is_empty() {
                        return bad("sparse jacobi needs a bump".into());
                    }
                } else {
                    check_alpha(&p.bump_alpha)?;
                    if p.bump_alpha.is_empty() {
                        return bad("sparse cmv needs a bump".into());
                    }
                }
            }
            ScenarioKind::DecayingA(p) => {
                if !jac {
                    return Err(Error::FamilyMismatch { expected: Family::Jacobi, got: self.family });
                }
                p.a.check()?;
                p.b.check()?;
                let prof = p.a.profile()?;
                if prof.values.iter().any(|v| *v != 0.0) {
                    return bad("decaying_a requires a_n → 0".into());
                }
                p.b.profile()?;
            }
            ScenarioKind::TorusAsymptotic(p) => {
                p.slip.check()?;
                p.perturbation.check()?;
                match (&p.torus, jac) {
                    (TorusFamily::CmvRotation { core }, false) => {
                        if core.is_empty() {
                            return bad("empty torus core".into());
                        }
                        check_alpha(core)?;
                    }
                    (TorusFamily::JacobiTranslates { a, b }, true) => {
                        if b.is_empty() || a.len() != b.len() {
                            return bad("torus translates need equal nonempty a and b".into());
                        }
                        check_a(a)?;
                    }
                    (TorusFamily::JacobiPeriod2 { a, .. }, true) => {
                        if !(a[0] > 0.0 && a[1] > 0.0) {
                            return bad("period-2 torus needs positive a".into());
                        }
                    }
                    _ => return bad("torus family does not match the operator family".into()),
                }
            }
            ScenarioKind::BarriosLopez(p) => {
                if jac {
                    return Err(Error::FamilyMismatch { expected: Family::Cmv, got: self.family });
                }
                if !(p.a > 0.0 && p.a < 1.0) {
                    return bad("barrios_lopez modulus must lie in (0, 1)".into());
                }
                p.slip.check()?;
            }
            ScenarioKind::CustomTable(p) => {
                if jac {
                    check_a(&p.a)?;
                    if let Some(r) = &p.tail.a {
                        r.check()?;
                    }
                    if let Some(r) = &p.tail.b {
                        r.check()?;
                    }
                } else {
                    check_alpha(&p.alpha)?;
                    if let Some(r) = &p.tail.modulus {
                        r.check()?;
                    }
                }
            }
        }
        if let Some(pre) = &self.prefix {
            check_a(&pre.a)?;
            check_alpha(&pre.alpha)?;
        }
        Ok(())
    }

    /// `(a_n, b_n)`; meaningless for CMV specs.
    pub fn jacobi_at(&self, n: u64) -> (f64, f64) {
        let (mut a, mut b) = self.jacobi_raw(n);
        if let Some(pre) = &self.prefix {
            if let Some(v) = pre.a.get(n as usize) {
                a = *v;
            }
            if let Some(v) = pre.b.get(n as usize) {
                b = *v;
            }
        }
        (a, b)
    }

    /// `α_n`; meaningless for Jacobi specs.
    pub fn alpha_at(&self, n: u64) -> Complex64 {
        if let Some(v) = self.prefix.as_ref().and_then(|p| p.alpha.get(n as usize)) {
            return *v;
        }
        self.alpha_raw(n)
    }

    fn jacobi_raw(&self, n: u64) -> (f64, f64) {
        match &self.kind {
            ScenarioKind::Periodic(p) => {
                let j = (n % p.b.len() as u64) as usize;
                (p.a.get(j).copied().unwrap_or(1.0), p.b[j])
            }
            ScenarioKind::SlippedPeriodic(p) => {
                let r = (p.q.rem_euclid(p.period as i64) as u64 * (n % p.period as u64)) % p.period as u64;
                let theta = TAU * r as f64 / p.period as f64 + p.slip.eval(n);
                let b = eval_trig(&p.terms, &[theta]).re;
                let a = if p.a.is_empty() { 1.0 } else { p.a[(n % p.a.len() as u64) as usize] };
                (a, b)
            }
            ScenarioKind::QuasiPeriodic(p) => (p.a, eval_trig(&p.terms, &quasi_angles(p, n)).re),
            ScenarioKind::Sparse(p) => match sparse_offset(p, n) {
                Some(j) => (p.bump_a.get(j).copied().unwrap_or(1.0), p.bump_b.get(j).copied().unwrap_or(0.0)),
                None => (1.0, 0.0),
            },
            ScenarioKind::DecayingA(p) => (p.a.eval(n), p.b.eval(n)),
            ScenarioKind::TorusAsymptotic(p) => {
                let t = p.slip.eval(n);
                let (a, b) = match &p.torus {
                    TorusFamily::JacobiTranslates { a, b } => {
                        let pp = b.len();
                        let shift = translate_index(t, pp);
                        let j = (n as usize + shift) % pp;
                        (a[j], b[j])
                    }
                    TorusFamily::JacobiPeriod2 { a, b } => {
                        let (aa, bb) = period2_member(*a, *b, t);
                        let j = (n % 2) as usize;
                        (aa[j], bb[j])
                    }
                    TorusFamily::CmvRotation { .. } => (0.0, 0.0),
                };
                (a, b + p.perturbation.eval(n))
            }
            ScenarioKind::CustomTable(p) => {
                let a = p.a.get(n as usize).copied().unwrap_or_else(|| p.tail.a.as_ref().map_or(1.0, |r| r.eval(n)));
                let b = p.b.get(n as usize).copied().unwrap_or_else(|| p.tail.b.as_ref().map_or(0.0, |r| r.eval(n)));
                (a, b)
            }
            ScenarioKind::BarriosLopez(_) => (0.0, 0.0),
        }
    }

    fn alpha_raw(&self, n: u64) -> Complex64 {
        match &self.kind {
            ScenarioKind::Periodic(p) => p.alpha[(n % p.alpha.len() as u64) as usize],
            ScenarioKind::SlippedPeriodic(p) => {
                Complex64::from_polar(1.0, p.slip.eval(n)) * p.alpha[(n % p.alpha.len() as u64) as usize]
            }
            ScenarioKind::QuasiPeriodic(p) => eval_trig(&p.terms, &quasi_angles(p, n)),
            ScenarioKind::Sparse(p) => match sparse_offset(p, n) {
                Some(j) => p.bump_alpha.get(j).copied().unwrap_or_default(),
                None => Complex64::new(0.0, 0.0),
            },
            ScenarioKind::TorusAsymptotic(p) => match &p.torus {
                TorusFamily::CmvRotation { core } => {
                    let z = Complex64::from_polar(1.0, p.slip.eval(n)) * core[(n % core.len() as u64) as usize];
                    z * (1.0 + p.perturbation.eval(n))
                }
                _ => Complex64::new(0.0, 0.0),
            },
            ScenarioKind::BarriosLopez(p) => Complex64::from_polar(p.a, p.slip.eval(n)),
            ScenarioKind::CustomTable(p) => p.alpha.get(n as usize).copied().unwrap_or_else(|| {
                let m = p.tail.modulus.as_ref().map_or(0.0, |r| r.eval(n));
                let ph = p.tail.phase.as_ref().map_or(0.0, |s| s.eval(n));
                Complex64::from_polar(m, ph)
            }),
            ScenarioKind::DecayingA(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn value_at(&self, n: u64) -> Param {
        match self.family {
            Family::Jacobi => {
                let (a, b) = self.jacobi_at(n);
                Param::Jacobi { a, b }
            }
            Family::Cmv => Param::Cmv(self.alpha_at(n)),
        }
    }
}

fn quasi_angles(p: &QuasiParams, n: u64) -> Vec<f64> {
    (0..p.freqs.len())
        .map(|j| {
            let off = p.slips.get(j).map_or(0.0, |s| s.eval(n)) + p.phase0.get(j).copied().unwrap_or(0.0);
            reduced_phase(p.freqs[j], n, off)
        })
        .collect()
}

/// Shift selected by a torus parameter on the discrete family of translates.
pub(crate) fn translate_index(t: f64, p: usize) -> usize {
    ((t.rem_euclid(TAU) / TAU * p as f64).floor() as usize).min(p - 1)
}

/// Member of the period-2 isospectral torus through `(a, b)` at parameter `t`.
/// The torus keeps `b_1 + b_2`, `a_1 a_2`, and `b_1 b_2 − a_1² − a_2²` fixed.
pub fn period2_member(a: [f64; 2], b: [f64; 2], t: f64) -> ([f64; 2], [f64; 2]) {
    let s = b[0] + b[1];
    let prod = a[0] * a[1];
    let c = b[0] * b[1] - a[0] * a[0] - a[1] * a[1];
    // with b = s/2 ± u: a_1² + a_2² = s²/4 − u² − c
    let r = s * s / 4.0 - c;
    let w = (r - 2.0 * prod).max(0.0).sqrt();
    let u = w * t.cos();
    let diff = w * t.sin();
    let sum = (r - u * u + 2.0 * prod).max(0.0).sqrt();
    ([(sum + diff) / 2.0, (sum - diff) / 2.0], [s / 2.0 + u, s / 2.0 - u])
}

fn bump_len(p: &SparseParams) -> usize {
    p.bump_a.len().max(p.bump_b.len()).max(p.bump_alpha.len()).max(1)
}

fn position(p: &SparseParams, k: u64) -> u64 {
    match p.positions {
        Positions::Squares => k * k,
        Positions::Power { exponent } => (k as f64).powf(exponent).floor() as u64,
    }
}

fn first_bump(p: &SparseParams) -> u64 {
    let m = bump_len(p) as u64;
    let mut k = 1;
    while position(p, k + 1) - position(p, k) <= m + 1 || position(p, k) == 0 {
        k += 1;
    }
    k
}

/// Bump positions `x_k` that are actually used (gaps exceed the bump length).
pub fn sparse_positions(p: &SparseParams, up_to: u64) -> Vec<u64> {
    let mut k = first_bump(p);
    let mut out = vec![];
    loop {
        let x = position(p, k);
        if x > up_to {
            return out;
        }
        out.push(x);
        k += 1;
    }
}

fn sparse_offset(p: &SparseParams, n: u64) -> Option<usize> {
    let m = bump_len(p) as u64;
    let k0 = first_bump(p);
    let guess = match p.positions {
        Positions::Squares => (n as f64).sqrt().floor() as u64,
        Positions::Power { exponent } => (n as f64).powf(1.0 / exponent).floor() as u64,
    };
    for k in guess.saturating_sub(1)..=guess + 1 {
        if k < k0 {
            continue;
        }
        let x = position(p, k);
        if x <= n && n < x + m {
            return Some((n - x) as usize);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// operations

/// Stream entry at index `n >= 0`.
pub fn stream_value(spec: &ScenarioSpec, n: i64) -> Result<Param> {
    if n < 0 {
        return Err(Error::Index(n));
    }
    let v = spec.value_at(n as u64);
    if let Param::Cmv(z) = v {
        if z.norm() > 1.0 + 1e-14 {
            return Err(Error::Domain(z.norm()));
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamWindow {
    pub center: u64,
    pub halfwidth: u64,
    /// Entries for `center − L ..= center + L`; `None` below the origin.
    pub values: Vec<Option<Param>>,
}

impl ParamWindow {
    pub fn get(&self, offset: i64) -> Option<Param> {
        let i = offset + self.halfwidth as i64;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied().flatten()
    }

    /// Sup-norm distance over positions present in both windows.
    pub fn sup_dist(&self, other: &ParamWindow) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter_map(|(x, y)| Some(x.as_ref()?.dist(*y.as_ref()?)))
            .fold(0.0, f64::max)
    }
}

pub fn window(spec: &ScenarioSpec, center: u64, l: u64) -> ParamWindow {
    let values = (0..=2 * l)
        .map(|i| {
            let idx = center as i64 + i as i64 - l as i64;
            (idx >= 0).then(|| spec.value_at(idx as u64))
        })
        .collect();
    ParamWindow { center, halfwidth: l, values }
}

/// One-sided stretch `start .. start + len`.
pub fn segment(spec: &ScenarioSpec, start: u64, len: usize) -> Vec<Param> {
    (0..len as u64).map(|i| spec.value_at(start + i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DMetric {
    pub value: f64,
    /// Bound on the neglected terms `n >= N`.
    pub tail_bound: f64,
}

/// `Σ_{n<N} e^{−n} |κ_n − λ_n|` plus the tail bound `2·sup·e^{−N}/(1 − e^{−1})`.
pub fn d_metric(kappa: &[Param], lambda: &[Param], sup: f64) -> Result<DMetric> {
    if kappa.len() != lambda.len() {
        return Err(Error::InvalidArgument(format!(
            "window lengths differ ({} vs {})",
            kappa.len(),
            lambda.len()
        )));
    }
    let mut value = 0.0;
    let mut w = 1.0;
    for (k, l) in kappa.iter().zip(lambda) {
        value += w * k.dist(*l);
        w *= (-1.0f64).exp();
    }
    let n = kappa.len() as f64;
    let tail_bound = 2.0 * sup * (-n).exp() / (1.0 - (-1.0f64).exp());
    Ok(DMetric { value, tail_bound })
}

impl TorusFamily {
    /// Member at parameter `t`, read along indices `start .. start + len`.
    pub fn member_segment(&self, t: f64, start: u64, len: usize) -> Vec<Param> {
        (start..start + len as u64)
            .map(|n| match self {
                TorusFamily::CmvRotation { core } => {
                    Param::Cmv(Complex64::from_polar(1.0, t) * core[(n % core.len() as u64) as usize])
                }
                TorusFamily::JacobiTranslates { a, b } => {
                    let p = b.len();
                    let j = (n as usize + translate_index(t, p)) % p;
                    Param::Jacobi { a: a[j], b: b[j] }
                }
                TorusFamily::JacobiPeriod2 { a, b } => {
                    let (aa, bb) = period2_member(*a, *b, t);
                    let j = (n % 2) as usize;
                    Param::Jacobi { a: aa[j], b: bb[j] }
                }
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        match self {
            TorusFamily::CmvRotation { core } => core.is_empty(),
            TorusFamily::JacobiTranslates { b, .. } => b.is_empty(),
            TorusFamily::JacobiPeriod2 { .. } => false,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            TorusFamily::CmvRotation { core } => core.iter().map(|z| z.norm()).fold(0.0, f64::max),
            TorusFamily::JacobiTranslates { a, b } => {
                a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max)
            }
            TorusFamily::JacobiPeriod2 { a, b } => {
                let r = (0..64).map(|k| {
                    let (aa, bb) = period2_member(*a, *b, TAU * k as f64 / 64.0);
                    aa.iter().chain(&bb).map(|x| x.abs()).fold(0.0, f64::max)
                });
                r.fold(0.0, f64::max) * 1.01
            }
        }
    }
}

/// `min_t d(window, member_t)` over the torus parameter; the window is the
/// stretch of the stream starting at `start`.
pub fn distance_to_torus(window: &[Param], start: u64, torus: &TorusFamily, grid: usize) -> Result<f64> {
    if torus.is_empty() {
        return Err(Error::InvalidArgument("empty torus parametrization".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let sup = torus.sup().max(window.iter().map(|p| p.magnitude()).fold(0.0, f64::max));
    let eval = |t: f64| -> f64 {
        d_metric(window, &torus.member_segment(t, start, window.len()), sup).map_or(f64::INFINITY, |d| d.value)
    };
    let mut step = TAU / grid as f64;
    let (mut best_t, mut best) = (0..grid)
        .map(|k| {
            let t = step * k as f64;
            (t, eval(t))
        })
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    // local refinement around the best grid point
    for _ in 0..60 {
        let prev = best;
        step *= 0.5;
        for t in [best_t - step, best_t + step] {
            let v = eval(t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
        if prev - best < 1e-9 && step < 1e-7 {
            break;
        }
    }
    Ok(best)
}
