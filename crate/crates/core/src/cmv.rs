//! CMV matrices, Szegő recursion, paraorthogonal zeros and the periodic
//! discriminant on the unit circle.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::CircleSpectralSet;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Slack allowed on `|α| ≤ 1` before it counts as a domain error.
pub const DISK_SLACK: f64 = 1e-14;

/// `ρ = √((1 − |α|)(1 + |α|))`, zero on the circle.
pub fn rho(alpha: C) -> f64 {
    let r = alpha.norm();
    if r >= 1.0 - DISK_SLACK {
        0.0
    } else {
        ((1.0 - r) * (1.0 + r)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBlock {
    pub alpha: C,
    pub rho: f64,
}

impl ThetaBlock {
    /// `[[ᾱ, ρ], [ρ, −α]]`
    pub fn matrix(&self) -> [[C; 2]; 2] {
        [[self.alpha.conj(), C::new(self.rho, 0.0)], [C::new(self.rho, 0.0), -self.alpha]]
    }
}

pub fn theta(alpha: C) -> Result<ThetaBlock> {
    let r = alpha.norm();
    if r > 1.0 + DISK_SLACK || !r.is_finite() {
        return Err(Error::Domain(r));
    }
    let alpha = if r > 1.0 { alpha / r } else { alpha };
    Ok(ThetaBlock { alpha, rho: rho(alpha) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Boundary {
    Truncated,
    /// Final coefficient replaced by the unimodular `beta`.
    Paraorthogonal { beta: C },
}

/// Finite CMV matrix in band storage: `rows[i][d]` holds entry `(i, i + d − 2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteCmv {
    pub order: usize,
    pub rows: Vec<[C; 5]>,
    pub boundary: Boundary,
}

impl FiniteCmv {
    pub fn get(&self, i: usize, j: usize) -> C {
        let d = j as i64 - i as i64 + 2;
        if !(0..5).contains(&d) || i >= self.order || j >= self.order {
            return ZERO;
        }
        self.rows[i][d as usize]
    }

    pub fn dense(&self) -> Vec<Vec<C>> {
        (0..self.order).map(|i| (0..self.order).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.order)
            .map(|i| {
                let mut acc = ZERO;
                for d in 0..5 {
                    let j = i as i64 + d as i64 - 2;
                    if j >= 0 && (j as usize) < self.order {
                        acc += self.rows[i][d] * v[j as usize];
                    }
                }
                acc
            })
            .collect()
    }

    /// Nonzero entries as `row,col,re,im`.
    pub fn write_triplets<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row", "col", "re", "im"])?;
        for i in 0..self.order {
            for d in 0..5 {
                let z = self.rows[i][d];
                let j = i as i64 + d as i64 - 2;
                if z != ZERO {
                    wr.write_record([i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }
}

// Block-diagonal factor with Θ(α_j) on (j, j+1) for j ≡ parity (mod 2),
// entries indexed from `lo`; a block cut by the edge keeps its top-left
// entry, an uncovered leading site gets a 1.
fn factor(alpha: &dyn Fn(i64) -> Result<C>, lo: i64, n: usize, parity: i64) -> Result<Vec<[C; 3]>> {
    // rows[i][d] = entry (i, i + d − 1)
    let mut f = vec![[ZERO; 3]; n];
    let hi = lo + n as i64;
    let mut j = lo - 1;
    while j < hi {
        if j.rem_euclid(2) != parity {
            j += 1;
            continue;
        }
        let in0 = j >= lo;
        let in1 = j + 1 < hi;
        if in0 || in1 {
            let m = theta(alpha(j)?)?.matrix();
            let r0 = (j - lo) as usize;
            if in0 {
                f[r0][1] = m[0][0];
            }
            if in0 && in1 {
                f[r0][2] = m[0][1];
                f[r0 + 1][0] = m[1][0];
            }
            if in1 {
                f[(j + 1 - lo) as usize][1] = m[1][1];
            }
        }
        j += 2;
    }
    Ok(f)
}

fn multiply(l: &[[C; 3]], m: &[[C; 3]]) -> Vec<[C; 5]> {
    let n = l.len();
    let mut out = vec![[ZERO; 5]; n];
    for i in 0..n {
        for dl in 0..3 {
            let k = i as i64 + dl as i64 - 1;
            if k < 0 || k as usize >= n || l[i][dl] == ZERO {
                continue;
            }
            for dm in 0..3 {
                let j = k + dm as i64 - 1;
                if j < 0 || j as usize >= n {
                    continue;
                }
                let d = (j - i as i64 + 2) as usize;
                out[i][d] += l[i][dl] * m[k as usize][dm];
            }
        }
    }
    out
}

/// `𝒞 = ℒℳ` with `ℒ = Θ_0 ⊕ Θ_2 ⊕ …` and `ℳ = 1 ⊕ Θ_1 ⊕ Θ_3 ⊕ …`.
pub fn build_cmv(alpha: &[C], boundary: Boundary) -> Result<FiniteCmv> {
    let n = alpha.len();
    if n == 0 {
        return Err(Error::InvalidArgument("a CMV matrix needs at least one coefficient".into()));
    }
    let mut a = alpha.to_vec();
    if let Boundary::Paraorthogonal { beta } = boundary {
        if (beta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("|beta| = {} is not 1", beta.norm())));
        }
        a[n - 1] = beta;
    }
    let get = |j: i64| -> Result<C> {
        if j < 0 {
            // the leading 1 of ℳ: the boundary condition α_{−1} = −1
            Ok(-ONE)
        } else {
            Ok(a[j as usize])
        }
    };
    let l = factor(&get, 0, n, 0)?;
    let m = factor(&get, 0, n, 1)?;
    Ok(FiniteCmv { order: n, rows: multiply(&l, &m), boundary })
}

/// Two-sided Verblunsky table: index `m` reads `values[m + offset]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedTable {
    pub values: Vec<C>,
    pub offset: i64,
}

impl TwoSidedTable {
    pub fn get(&self, m: i64) -> Option<C> {
        let i = m + self.offset;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }
}

/// Window `lo..=hi` of the extended CMV matrix `ℒ̃ℳ̃`, with `Θ_j` acting on
/// sites `(j, j+1)`. Row `i` of the result is site `lo + i`.
pub fn build_extended_cmv_window(table: &TwoSidedTable, lo: i64, hi: i64) -> Result<Vec<[C; 5]>> {
    if hi < lo {
        return Err(Error::InvalidArgument("empty window".into()));
    }
    // entries of rows lo..=hi touch columns lo−2..=hi+2, which needs Θ_{lo−2..=hi+2}
    let (need_lo, need_hi) = (lo - 2, hi + 2);
    let (have_lo, have_hi) = (-table.offset, table.values.len() as i64 - table.offset - 1);
    if need_lo < have_lo || need_hi > have_hi {
        return Err(Error::Window { lo: need_lo, hi: need_hi, table_lo: have_lo, table_hi: have_hi });
    }
    let get = |j: i64| -> Result<C> { table.get(j).ok_or(Error::Index(j)) };
    // build on the padded range so that no block is cut, then crop
    let plo = lo - 2;
    let n = (hi - lo + 5) as usize;
    let l = factor(&get, plo, n, 0)?;
    let m = factor(&get, plo, n, 1)?;
    let full = multiply(&l, &m);
    Ok(full[2..n - 2].to_vec())
}

/// Monic `(Φ_n(z), Φ*_n(z))` by the Szegő recursion.
pub fn szego_phi(alpha: &[C], z: C) -> (C, C) {
    let (mut phi, mut star) = (ONE, ONE);
    for a in alpha {
        let next = z * phi - a.conj() * star;
        star -= a * z * phi;
        phi = next;
    }
    (phi, star)
}

/// Continuous argument of the Blaschke product `zΦ_{n−1}(z)/Φ*_{n−1}(z)` at
/// `z = e^{iθ}`, lifted so that it increases by `2πn` over one turn.
///
/// Uses `arg = nθ − 2 arg Φ*_{n−1}` with `Φ*_{k+1} = Φ*_k (1 − α_k z r_k)`
/// and `r_k = Φ_k/Φ*_k` updated by the Möbius step, so every factor has
/// positive real part and its principal argument is already the lift.
/// The Möbius step is contracting in the gaps, where the polynomials
/// themselves cancel catastrophically.
pub fn blaschke_phase(alpha: &[C], theta: f64) -> f64 {
    let z = C::from_polar(1.0, theta);
    let mut r = ONE;
    let mut star_arg = 0.0;
    for a in alpha {
        let zr = z * r;
        let den = ONE - a * zr;
        star_arg += den.arg();
        r = (zr - a.conj()) / den;
        r /= r.norm();
    }
    (alpha.len() as f64 + 1.0) * theta - 2.0 * star_arg
}

/// Illinois-modified regula falsi on a sign-changing bracket. A bisection
/// step is forced when four steps in a row fail to halve the bracket.
pub(crate) fn refine_root(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    refine_bracket(f, a, b, f(a), f(b), tol)
}

fn refine_bracket(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    let mut checkpoint = (b - a).abs();
    let mut stall = 0;
    for _ in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        let bisect = stall >= 4;
        let mut c = if bisect { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc < 0.0) == (fb < 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        let w = (b - a).abs();
        if w <= 0.5 * checkpoint || bisect {
            checkpoint = w;
            stall = 0;
        } else {
            stall += 1;
        }
    }
    0.5 * (a + b)
}

/// The `n = alpha.len() + 1` zeros of `zΦ_{n−1}(z) − β̄Φ*_{n−1}(z)`, as
/// ascending angles in `[0, 2π)`. They are the points where the Blaschke
/// phase meets `−arg β (mod 2π)`.
pub fn paraorthogonal_zeros(alpha: &[C], beta: C, tol: f64) -> Result<Vec<f64>> {
    if let Some(a) = alpha.iter().find(|a| a.norm() >= 1.0) {
        return Err(Error::Domain(a.norm()));
    }
    if (beta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("|beta| = {} is not 1", beta.norm())));
    }
    let n = alpha.len() + 1;
    let g = |t: f64| blaschke_phase(alpha, t);
    let grid = 4 * n;
    let h = TAU / grid as f64;
    let mut vals: Vec<f64> = (0..grid).map(|k| g(h * k as f64)).collect();
    // exact periodicity; sampling 2π itself can land on the far side of a
    // steep jump caused by a zero of Φ_{n−1} close to z = 1
    vals.push(vals[0] + TAU * n as f64);
    // monotone envelope guards against rounding in flat stretches
    for k in 1..=grid {
        vals[k] = vals[k].max(vals[k - 1]);
    }
    let base = -beta.arg();
    let level_index = |v: f64| ((v - base) / TAU).floor() as i64;
    let mut zeros = Vec::with_capacity(n);
    for k in 0..grid {
        let (a, b) = (h * k as f64, h * (k + 1) as f64);
        let first = level_index(vals[k]) + if vals[k] == base + TAU * level_index(vals[k]) as f64 { 0 } else { 1 };
        let last = level_index(vals[k + 1]) - if vals[k + 1] == base + TAU * level_index(vals[k + 1]) as f64 { 1 } else { 0 };
        for m in first..=last {
            let level = base + TAU * m as f64;
            let t = if vals[k] == level {
                a
            } else {
                let f = |t: f64| if t >= b { vals[k + 1] - level } else { g(t) - level };
                refine_bracket(&f, a, b, vals[k] - level, vals[k + 1] - level, tol)
            };
            zeros.push(if t >= TAU - tol { 0.0 } else { t });
        }
    }
    if zeros.len() != n {
        return Err(Error::Resolution { found: zeros.len(), expected: n, grid });
    }
    zeros.sort_by(f64::total_cmp);
    Ok(zeros)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicVerblunsky {
    pub alpha: Vec<C>,
}

impl PeriodicVerblunsky {
    pub fn new(alpha: Vec<C>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("empty period".into()));
        }
        if let Some(j) = alpha.iter().position(|a| a.norm() >= 1.0 - DISK_SLACK) {
            return Err(Error::DegeneratePeriod(j));
        }
        Ok(Self { alpha })
    }

    pub fn period(&self) -> usize {
        self.alpha.len()
    }

    pub fn rotated(&self, lambda: C) -> Self {
        Self { alpha: self.alpha.iter().map(|a| a * lambda).collect() }
    }

    /// Cyclic translate: entry `j` becomes entry `j + shift`.
    pub fn shifted(&self, shift: usize) -> Self {
        let p = self.period();
        Self { alpha: (0..p).map(|j| self.alpha[(j + shift) % p]).collect() }
    }
}

/// `(D(θ), D'(θ))` as complex numbers; both are real up to rounding.
pub fn cmv_discriminant_complex(p: &PeriodicVerblunsky, theta: f64) -> (C, C) {
    const BIG: f64 = 1.2676506002282294e30;
    let z = C::from_polar(1.0, theta);
    let mut m = [[ONE, ZERO], [ZERO, ONE]];
    let mut dm = [[ZERO, ZERO], [ZERO, ZERO]];
    let mut exp = 0;
    for a in &p.alpha {
        let r = 1.0 / rho(*a);
        let t = [[z * r, -a.conj() * r], [-a * z * r, ONE * r]];
        let dt = [[ONE * r, ZERO], [-a * r, ZERO]];
        let mut nm = [[ZERO; 2]; 2];
        let mut ndm = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                nm[i][j] = t[i][0] * m[0][j] + t[i][1] * m[1][j];
                ndm[i][j] = dt[i][0] * m[0][j] + dt[i][1] * m[1][j] + t[i][0] * dm[0][j] + t[i][1] * dm[1][j];
            }
        }
        m = nm;
        dm = ndm;
        let big = m.iter().chain(dm.iter()).flatten().fold(0.0f64, |acc, v| acc.max(v.norm()));
        if big > BIG {
            for row in m.iter_mut().chain(dm.iter_mut()) {
                for v in row.iter_mut() {
                    *v /= BIG;
                }
            }
            exp += 100;
        }
    }
    let scale = 2f64.powi(exp);
    let pp = p.period() as f64;
    let pre = C::from_polar(1.0, -0.5 * pp * theta);
    let tr = m[0][0] + m[1][1];
    let dtr = dm[0][0] + dm[1][1];
    let d = pre * tr * scale;
    // d/dθ with dz/dθ = iz
    let dd = pre * (C::new(0.0, -0.5 * pp) * tr + C::new(0.0, 1.0) * z * dtr) * scale;
    (d, dd)
}

/// `D(θ) = e^{−ipθ/2} Tr ∏ ρ_j^{−1} [[z, −ᾱ_j], [−α_j z, 1]]`, `z = e^{iθ}`.
/// Returns the real value and the size of the discarded imaginary part.
pub fn cmv_discriminant(p: &PeriodicVerblunsky, theta: f64) -> (f64, f64) {
    let (d, _) = cmv_discriminant_complex(p, theta);
    (d.re, d.im.abs())
}

fn periodic_critical_points(deriv: &dyn Fn(f64) -> f64, period: f64, expected: usize) -> Result<Vec<f64>> {
    let mut pts = 64 * expected.max(1);
    let mut prev = None;
    let mut last = 0;
    for _ in 0..12 {
        let h = period / pts as f64;
        let vals: Vec<f64> = (0..pts).map(|k| deriv(h * k as f64)).collect();
        let cells: Vec<usize> =
            (0..pts).filter(|&k| (vals[k] < 0.0) != (vals[(k + 1) % pts] < 0.0)).collect();
        last = cells.len();
        if cells.len() == expected && prev == Some(expected) {
            return Ok(cells
                .into_iter()
                .map(|k| {
                    let a = h * k as f64;
                    refine_root(deriv, a, a + h, 1e-15)
                })
                .collect());
        }
        prev = Some(cells.len());
        pts *= 2;
    }
    Err(Error::Bracketing {
        resolution: pts / 2,
        detail: format!("found {last} critical points of the discriminant, expected {expected}"),
    })
}

/// Arcs `{θ : |D(θ)| ≤ 2}` in angle coordinates (at most `p` arcs), before
/// merging. The scan runs over `θ ∈ [0, 4π)`, which resolves the
/// half-integer power for odd `p`; results are projected mod `2π`.
pub fn cmv_band_pieces(p: &PeriodicVerblunsky) -> Result<Vec<[f64; 2]>> {
    let period = 2.0 * TAU;
    let d = |t: f64| cmv_discriminant_complex(p, t).0.re;
    let dd = |t: f64| cmv_discriminant_complex(p, t).1.re;
    let crit = periodic_critical_points(&dd, period, 2 * p.period())?;
    let mut arcs = Vec::new();
    let k = crit.len();
    for i in 0..k {
        let x0 = crit[i];
        let x1 = if i + 1 < k { crit[i + 1] } else { crit[0] + period };
        let (d0, d1) = (d(x0), d(x1));
        let increasing = d1 > d0;
        let (dlo, dhi) = if increasing { (d0, d1) } else { (d1, d0) };
        if dhi < -2.0 || dlo > 2.0 {
            continue;
        }
        let edge = |level: f64| {
            let g = |t: f64| d(t) - level;
            refine_root(&g, x0, x1, 1e-15)
        };
        let at_minus = (dlo < -2.0).then(|| edge(-2.0));
        let at_plus = (dhi > 2.0).then(|| edge(2.0));
        let (lo, hi) = if increasing {
            (at_minus.unwrap_or(x0), at_plus.unwrap_or(x1))
        } else {
            (at_plus.unwrap_or(x0), at_minus.unwrap_or(x1))
        };
        arcs.push([lo, hi]);
    }
    Ok(arcs)
}

/// Essential spectrum of the periodic CMV matrix as arcs on the circle.
pub fn cmv_band_arcs(p: &PeriodicVerblunsky) -> Result<CircleSpectralSet> {
    let pieces = cmv_band_pieces(p)?;
    Ok(CircleSpectralSet::new(pieces, vec![]))
}

/// Two-sided (extended) CMV operators used as right limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TwoSidedCmv {
    /// Periodic core rotated by `lambda`.
    PeriodicCore { core: PeriodicVerblunsky, lambda: C },
    /// Every coefficient unimodular, repeating periodically.
    Unimodular { alpha: Vec<C> },
    /// `α ≡ 0` except for sites `0..len`.
    FiniteBump { alpha: Vec<C> },
    /// `α_n = W(θ + n·freqs)`
    QuasiPeriodic { terms: Vec<crate::sequences::Term>, freqs: Vec<f64>, phase: Vec<f64> },
    /// Literal table; `values[center]` is site 0.
    RawWindow { values: Vec<C>, center: usize },
}

impl TwoSidedCmv {
    pub fn tag(&self) -> &'static str {
        match self {
            TwoSidedCmv::PeriodicCore { .. } => "periodic_core",
            TwoSidedCmv::Unimodular { .. } => "unimodular",
            TwoSidedCmv::FiniteBump { .. } => "finite_bump",
            TwoSidedCmv::QuasiPeriodic { .. } => "quasi_periodic",
            TwoSidedCmv::RawWindow { .. } => "raw_window",
        }
    }

    pub fn entry(&self, m: i64) -> Option<C> {
        Some(match self {
            TwoSidedCmv::PeriodicCore { core, lambda } => {
                core.alpha[m.rem_euclid(core.period() as i64) as usize] * lambda
            }
            TwoSidedCmv::Unimodular { alpha } => alpha[m.rem_euclid(alpha.len() as i64) as usize],
            TwoSidedCmv::FiniteBump { alpha } => {
                if m < 0 {
                    ZERO
                } else {
                    alpha.get(m as usize).copied().unwrap_or(ZERO)
                }
            }
            TwoSidedCmv::QuasiPeriodic { terms, freqs, phase } => {
                let th: Vec<f64> = freqs.iter().zip(phase).map(|(f, x)| (x + f * m as f64).rem_euclid(TAU)).collect();
                crate::sequences::eval_trig(terms, &th)
            }
            TwoSidedCmv::RawWindow { values, center } => {
                let i = m + *center as i64;
                if i < 0 {
                    return None;
                }
                *values.get(i as usize)?
            }
        })
    }

    pub fn table(&self, lo: i64, hi: i64) -> Option<TwoSidedTable> {
        let values = (lo..=hi).map(|m| self.entry(m)).collect::<Option<Vec<C>>>()?;
        Some(TwoSidedTable { values, offset: -lo })
    }
}
