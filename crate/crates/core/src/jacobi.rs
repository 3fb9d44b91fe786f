//! Jacobi matrices: truncations, Sturm bisection, Floquet discriminants.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::{eval_trig, Family, ScenarioSpec, Term};
use crate::spectra::RealSpectralSet;

pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Symmetric tridiagonal matrix with diagonal `b` and off-diagonal `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteJacobi {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl FiniteJacobi {
    pub fn new(b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidArgument("a Jacobi matrix needs at least one site".into()));
        }
        if a.len() + 1 != b.len() {
            return Err(Error::InvalidArgument(format!(
                "{} diagonal entries need {} off-diagonal entries, got {}",
                b.len(),
                b.len() - 1,
                a.len()
            )));
        }
        Ok(Self { b, a })
    }

    pub fn free(n: usize) -> Self {
        Self { b: vec![0.0; n], a: vec![1.0; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `[min b − 2 max a, max b + 2 max a]`
    pub fn gershgorin(&self) -> (f64, f64) {
        let amax = self.a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lo = self.b.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let hi = self.b.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
        (lo - 2.0 * amax, hi + 2.0 * amax)
    }

    /// `y = M x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.b.iter().zip(x).map(|(b, v)| b * v).collect();
        for i in 0..n - 1 {
            y[i] += self.a[i] * x[i + 1];
            y[i + 1] += self.a[i] * x[i];
        }
        y
    }

    /// Rows `index,a,b`; the last row has an empty `a`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "a", "b"])?;
        for (i, b) in self.b.iter().enumerate() {
            let a = self.a.get(i).map(|v| v.to_string()).unwrap_or_default();
            wr.write_record([(i + 1).to_string(), a, b.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Principal `N × N` truncation from stream indices `1..=N`.
pub fn truncate(spec: &ScenarioSpec, n: usize) -> Result<FiniteJacobi> {
    truncate_at(spec, 1, n)
}

/// `N × N` block of the stream starting at index `start`.
pub fn truncate_at(spec: &ScenarioSpec, start: u64, n: usize) -> Result<FiniteJacobi> {
    if spec.family != Family::Jacobi {
        return Err(Error::FamilyMismatch { expected: Family::Jacobi, got: spec.family });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("truncation size must be at least 1".into()));
    }
    let mut b = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n - 1);
    for k in 0..n as u64 {
        let (ak, bk) = spec.jacobi_at(start + k);
        b.push(bk);
        if k + 1 < n as u64 {
            a.push(ak);
        }
    }
    Ok(FiniteJacobi { b, a })
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(m: &FiniteJacobi, x: f64) -> usize {
    Sturm::new(m).count(x)
}

// Squared couplings and the pivot floor, shared by many counts on one matrix.
struct Sturm<'a> {
    b: &'a [f64],
    a2: Vec<f64>,
    pivmin: f64,
}

impl<'a> Sturm<'a> {
    fn new(m: &'a FiniteJacobi) -> Self {
        let amax = m.a.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        Self { b: &m.b, a2: m.a.iter().map(|v| v * v).collect(), pivmin: f64::MIN_POSITIVE * amax * amax }
    }

    fn count(&self, x: f64) -> usize {
        let pivmin = self.pivmin;
        let mut count = 0;
        let mut d = self.b[0] - x;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for (bi, a2) in self.b[1..].iter().zip(&self.a2) {
            d = bi - x - a2 / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

fn bisect_all(m: &Sturm, lo: f64, hi: f64, clo: usize, chi: usize, tol: f64, out: &mut Vec<f64>) {
    if chi == clo {
        return;
    }
    if hi - lo <= tol {
        let mid = 0.5 * (lo + hi);
        out.extend(std::iter::repeat_n(mid, chi - clo));
        return;
    }
    let mid = 0.5 * (lo + hi);
    if mid <= lo || mid >= hi {
        out.extend(std::iter::repeat_n(mid, chi - clo));
        return;
    }
    let cm = m.count(mid);
    if chi - clo > 64 {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        rayon::join(
            || bisect_all(m, lo, mid, clo, cm, tol, &mut left),
            || bisect_all(m, mid, hi, cm, chi, tol, &mut right),
        );
        out.extend(left);
        out.extend(right);
    } else {
        bisect_all(m, lo, mid, clo, cm, tol, out);
        bisect_all(m, mid, hi, cm, chi, tol, out);
    }
}

/// All eigenvalues, ascending, each bracketed to width `tol`.
pub fn eigenvalues(m: &FiniteJacobi, tol: f64) -> Vec<f64> {
    let (lo, hi) = m.gershgorin();
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let (lo, hi) = (lo - pad, hi + pad);
    let mut out = Vec::with_capacity(m.len());
    let st = Sturm::new(m);
    bisect_all(&st, lo, hi, st.count(lo), st.count(hi), tol.max(f64::EPSILON), &mut out);
    out
}

/// All eigenvalues, ascending, by implicit QL with Wilkinson shifts. Much
/// faster than bisection for large matrices; accurate to a few ulps of the
/// spectral radius rather than to a fixed bracket.
pub fn eigenvalues_ql(m: &FiniteJacobi) -> Result<Vec<f64>> {
    let n = m.len();
    let mut d = m.b.clone();
    let mut e: Vec<f64> = m.a.clone();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut k = l;
            while k + 1 < n {
                let dd = d[k].abs() + d[k + 1].abs();
                if e[k].abs() <= f64::EPSILON * dd {
                    break;
                }
                k += 1;
            }
            if k == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence { iterations: iter, history: vec![e[l].abs()] });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[k] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = k;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[k] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[k] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues with indices `k_lo..k_hi` in ascending order.
pub fn eigenvalue_range(m: &FiniteJacobi, k_lo: usize, k_hi: usize, tol: f64) -> Vec<f64> {
    let (lo, hi) = m.gershgorin();
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let (lo, hi) = (lo - pad, hi + pad);
    let st = Sturm::new(m);
    // just above eigenvalue k − 1, so exactly k eigenvalues lie below
    let find = |k: usize| -> f64 {
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if st.count(mid) >= k {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    };
    let a = if k_lo == 0 { lo } else { find(k_lo) };
    let b = if k_hi >= m.len() { hi } else { find(k_hi) };
    let mut out = Vec::new();
    bisect_all(&st, a, b, st.count(a), st.count(b), tol, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicJacobi {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PeriodicJacobi {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if b.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidArgument("periodic tables need equal nonempty lengths".into()));
        }
        if let Some(x) = a.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::InvalidArgument(format!("periodic off-diagonal {x} must be positive")));
        }
        Ok(Self { a, b })
    }

    pub fn period(&self) -> usize {
        self.b.len()
    }

    /// Cyclic translate: entry `j` becomes entry `j + shift`.
    pub fn shifted(&self, shift: usize) -> Self {
        let p = self.period();
        let rot = |v: &[f64]| (0..p).map(|j| v[(j + shift) % p]).collect();
        Self { a: rot(&self.a), b: rot(&self.b) }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let amax = self.a.iter().fold(0.0f64, |m, x| m.max(*x));
        let lo = self.b.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let hi = self.b.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
        (lo - 2.0 * amax, hi + 2.0 * amax)
    }
}

const RESCALE: f64 = 1.2676506002282294e30; // 2^100

/// `(Δ(x), Δ'(x))`. The transfer product is renormalized by exact powers of
/// two, so large periods overflow gracefully to `±∞` instead of `NaN`.
pub fn discriminant_with_derivative(p: &PeriodicJacobi, x: f64) -> (f64, f64) {
    let n = p.period();
    // M = A_j ⋯ A_1, dM its x-derivative
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut dm = [[0.0, 0.0], [0.0, 0.0]];
    let mut exp = 0i32;
    for j in 0..n {
        let aj = p.a[j];
        let aprev = p.a[(j + n - 1) % n];
        let t = [[(x - p.b[j]) / aj, -aprev / aj], [1.0, 0.0]];
        let dt = [[1.0 / aj, 0.0], [0.0, 0.0]];
        let mut nm = [[0.0; 2]; 2];
        let mut ndm = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                nm[r][c] = t[r][0] * m[0][c] + t[r][1] * m[1][c];
                ndm[r][c] = dt[r][0] * m[0][c] + dt[r][1] * m[1][c] + t[r][0] * dm[0][c] + t[r][1] * dm[1][c];
            }
        }
        m = nm;
        dm = ndm;
        let big = m.iter().chain(dm.iter()).flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if big > RESCALE {
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] /= RESCALE;
                    dm[r][c] /= RESCALE;
                }
            }
            exp += 100;
        }
    }
    let scale = 2f64.powi(exp);
    ((m[0][0] + m[1][1]) * scale, (dm[0][0] + dm[1][1]) * scale)
}

/// Floquet discriminant: trace of the period transfer matrix.
pub fn discriminant(p: &PeriodicJacobi, x: f64) -> f64 {
    discriminant_with_derivative(p, x).0
}

/// Number of eigenvalues below `x` of the one-period problem with
/// `Δ = level` (`2`: periodic, `−2`: antiperiodic).
///
/// Splitting off site 0 leaves the Dirichlet block on sites `1..p`; by
/// Sylvester's law of inertia the count is the Dirichlet count plus one if
/// the scalar Schur complement is negative. That complement is
/// `det(J − x)/det(D − x)`, and `det(J − x) = (−1)^p ∏a (Δ(x) − level)`.
fn floquet_count(p: &PeriodicJacobi, dirichlet: Option<&FiniteJacobi>, x: f64, level: f64) -> usize {
    let nd = dirichlet.map_or(0, |d| sturm_count(d, x));
    let s = discriminant(p, x) - level;
    let s = if (p.period() + nd).is_multiple_of(2) { s } else { -s };
    nd + usize::from(s < 0.0)
}

fn bisect_counts(count: &dyn Fn(f64) -> usize, lo: f64, hi: f64, clo: usize, chi: usize, out: &mut Vec<f64>) {
    if chi <= clo {
        return;
    }
    let mid = 0.5 * (lo + hi);
    let tol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.extend(std::iter::repeat_n(mid, chi - clo));
        return;
    }
    let cm = count(mid).clamp(clo, chi);
    bisect_counts(count, lo, mid, clo, cm, out);
    bisect_counts(count, mid, hi, cm, chi, out);
}

/// Band spectrum `{x : |Δ(x)| ≤ 2}` of a periodic Jacobi matrix.
///
/// The `2p` band edges are the periodic and antiperiodic eigenvalues,
/// located by bisection on an exact eigenvalue count, so nearly closed gaps
/// need no special resolution. Bands are `[E_{2k}, E_{2k+1}]`; a closed
/// gap makes neighbouring bands touch, and they fuse.
pub fn band_spectrum(p: &PeriodicJacobi) -> Result<RealSpectralSet> {
    let bands = band_edges(p)?;
    Ok(RealSpectralSet::new(bands, vec![]))
}

/// The `p` bands as `[lo, hi]` pairs, before fusing closed gaps.
pub fn band_edges(p: &PeriodicJacobi) -> Result<Vec<[f64; 2]>> {
    let (glo, ghi) = p.gershgorin();
    let pad = 1e-9 * (1.0 + glo.abs().max(ghi.abs()));
    let (glo, ghi) = (glo - pad, ghi + pad);
    let n = p.period();
    let dirichlet = if n > 1 { Some(FiniteJacobi::new(p.b[1..].to_vec(), p.a[1..n - 1].to_vec())?) } else { None };
    let mut edges = Vec::with_capacity(2 * n);
    for level in [2.0, -2.0] {
        let count = |x: f64| floquet_count(p, dirichlet.as_ref(), x, level);
        let (clo, chi) = (count(glo), count(ghi));
        if clo != 0 || chi != n {
            return Err(Error::Bracketing {
                resolution: n,
                detail: format!("eigenvalue count {clo}..{chi} on the Gershgorin interval, expected 0..{n}"),
            });
        }
        bisect_counts(&count, glo, ghi, 0, n, &mut edges);
    }
    edges.sort_by(f64::total_cmp);
    let mut bands: Vec<[f64; 2]> = edges.chunks(2).map(|w| [w[0], w[1]]).collect();
    // Near a closed gap Δ ∓ 2 is quadratic, so its sign is lost within about
    // √ε of the double root. A gap whose midpoint still has |Δ| = 2 up to
    // rounding is numerically closed.
    for k in 0..n.saturating_sub(1) {
        let (g0, g1) = (bands[k][1], bands[k + 1][0]);
        if g1 > g0 {
            let mid = 0.5 * (g0 + g1);
            if discriminant(p, mid).abs() - 2.0 <= CLOSED_GAP_TOL {
                bands[k][1] = mid;
                bands[k + 1][0] = mid;
            }
        }
    }
    Ok(bands)
}

const CLOSED_GAP_TOL: f64 = 1e-13;

/// Two-sided Jacobi operators used as right limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TwoSidedJacobi {
    /// Periodic extension of the core, entry `j` at every site `≡ j mod p`.
    PeriodicCore(PeriodicJacobi),
    /// `a ≡ 0`; diagonal entries repeat periodically and may be `±∞`.
    Diagonal { b: Vec<f64> },
    /// Direct sum of finite blocks, repeated periodically.
    BlockSum { blocks: Vec<FiniteJacobi> },
    /// Free operator (`a = 1, b = 0`) with sites `0..len` replaced.
    FiniteBump { a: Vec<f64>, b: Vec<f64> },
    /// `b_n = Re W(θ + n·freqs)` with constant `a`, frequencies in radians.
    QuasiPeriodic { terms: Vec<Term>, freqs: Vec<f64>, phase: Vec<f64>, a: f64 },
    /// Literal two-sided table around the origin; `b[center]` is site 0.
    RawWindow { a: Vec<f64>, b: Vec<f64>, center: usize },
}

impl TwoSidedJacobi {
    pub fn free() -> Self {
        TwoSidedJacobi::PeriodicCore(PeriodicJacobi { a: vec![1.0], b: vec![0.0] })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TwoSidedJacobi::PeriodicCore(_) => "periodic_core",
            TwoSidedJacobi::Diagonal { .. } => "diagonal",
            TwoSidedJacobi::BlockSum { .. } => "block_sum",
            TwoSidedJacobi::FiniteBump { .. } => "finite_bump",
            TwoSidedJacobi::QuasiPeriodic { .. } => "quasi_periodic",
            TwoSidedJacobi::RawWindow { .. } => "raw_window",
        }
    }

    /// `(a_m, b_m)` at site `m ∈ ℤ`; `a_m` couples `m` and `m + 1`.
    /// Raw windows return `None` outside their table.
    pub fn entry(&self, m: i64) -> Option<(f64, f64)> {
        Some(match self {
            TwoSidedJacobi::PeriodicCore(p) => {
                let j = m.rem_euclid(p.period() as i64) as usize;
                (p.a[j], p.b[j])
            }
            TwoSidedJacobi::Diagonal { b } => (0.0, b[m.rem_euclid(b.len() as i64) as usize]),
            TwoSidedJacobi::BlockSum { blocks } => {
                let total: usize = blocks.iter().map(|b| b.len()).sum();
                let mut r = m.rem_euclid(total as i64) as usize;
                let mut out = (0.0, 0.0);
                for blk in blocks {
                    if r < blk.len() {
                        out = (blk.a.get(r).copied().unwrap_or(0.0), blk.b[r]);
                        break;
                    }
                    r -= blk.len();
                }
                out
            }
            TwoSidedJacobi::FiniteBump { a, b } => {
                if m < 0 {
                    (1.0, 0.0)
                } else {
                    let i = m as usize;
                    (a.get(i).copied().unwrap_or(1.0), b.get(i).copied().unwrap_or(0.0))
                }
            }
            TwoSidedJacobi::QuasiPeriodic { terms, freqs, phase, a } => {
                let theta: Vec<f64> =
                    freqs.iter().zip(phase).map(|(f, x)| crate::sequences::reduced_phase(*f, 0, x + f * m as f64)).collect();
                (*a, eval_trig(terms, &theta).re)
            }
            TwoSidedJacobi::RawWindow { a, b, center } => {
                let i = m + *center as i64;
                if i < 0 || i as usize >= b.len() {
                    return None;
                }
                (a.get(i as usize).copied().unwrap_or(0.0), b[i as usize])
            }
        })
    }

    /// Finite section on sites `lo..=hi`.
    pub fn section(&self, lo: i64, hi: i64) -> Result<FiniteJacobi> {
        let mut b = Vec::new();
        let mut a = Vec::new();
        for m in lo..=hi {
            let (am, bm) = self
                .entry(m)
                .ok_or_else(|| Error::InvalidArgument(format!("site {m} outside the raw window")))?;
            b.push(bm);
            if m < hi {
                a.push(am);
            }
        }
        FiniteJacobi::new(b, a)
    }
}

/// `‖(M − λ)φ‖ / ‖φ‖`; `φ` must vanish on the first and last site.
pub fn weyl_residual(m: &FiniteJacobi, lambda: f64, phi: &[f64]) -> Result<f64> {
    if phi.len() != m.len() {
        return Err(Error::InvalidArgument("trial vector length differs from the window".into()));
    }
    if phi.first().copied().unwrap_or(0.0) != 0.0 || phi.last().copied().unwrap_or(0.0) != 0.0 {
        return Err(Error::Support);
    }
    let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("trial vector is zero".into()));
    }
    let y = m.apply(phi);
    let r = y.iter().zip(phi).map(|(y, p)| (y - lambda * p).powi(2)).sum::<f64>().sqrt();
    Ok(r / norm)
}

/// Generalized eigenfunction of a periodic core at energy `x` in a band,
/// tapered by a tent of half-width `l`, laid out over `len` sites.
/// Returns the real part of the Bloch solution times the taper.
pub fn tapered_bloch(core: &PeriodicJacobi, x: f64, l: usize, len: usize, phase_shift: usize) -> Vec<f64> {
    // Bloch solution by the transfer recursion from a Floquet eigenvector
    let p = core.period();
    let mut mono = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    let step = |j: usize| {
        let aj = core.a[j % p];
        let aprev = core.a[(j + p - 1) % p];
        [[(x - core.b[j % p]) / aj, -aprev / aj], [1.0, 0.0]]
    };
    for j in 0..p {
        let t = step(j + phase_shift);
        let mut nm = mono;
        for r in 0..2 {
            for c in 0..2 {
                nm[r][c] = t[r][0] * mono[0][c] + t[r][1] * mono[1][c];
            }
        }
        mono = nm;
    }
    // eigenvector of the monodromy for an eigenvalue on the unit circle
    let tr = mono[0][0] + mono[1][1];
    let disc = (tr * tr - 4.0).sqrt();
    let mu = (tr + disc) / 2.0;
    let v = if mono[1][0].norm() > 1e-14 {
        [mu - mono[1][1], mono[1][0]]
    } else if mono[0][1].norm() > 1e-14 {
        [mono[0][1], mu - mono[0][0]]
    } else {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    };
    // v = (u_1, u_0)
    let mut u = Vec::with_capacity(len);
    let (mut cur, mut prev) = (v[0], v[1]);
    for j in 0..len {
        u.push(cur);
        let aj = core.a[(j + phase_shift) % p];
        let aprev = core.a[(j + phase_shift + p - 1) % p];
        let next = ((x - core.b[(j + phase_shift) % p]) * cur - aprev * prev) / aj;
        prev = cur;
        cur = next;
    }
    let center = len / 2;
    let taper = |j: usize| -> f64 {
        let d = (j as f64 - center as f64).abs();
        (1.0 - d / l as f64).max(0.0)
    };
    let re: Vec<f64> = u.iter().enumerate().map(|(j, z)| z.re * taper(j)).collect();
    let im: Vec<f64> = u.iter().enumerate().map(|(j, z)| z.im * taper(j)).collect();
    // pick whichever real combination is larger
    let nr: f64 = re.iter().map(|v| v * v).sum();
    let ni: f64 = im.iter().map(|v| v * v).sum();
    if nr >= ni {
        re
    } else {
        im
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::SeqRule;
    use crate::spectra::hausdorff_distance;
    use crate::spectra::PointCloud;
    use std::f64::consts::PI;

    #[test]
    fn truncate_examples() {
        let m = truncate(&ScenarioSpec::free_jacobi(), 2).unwrap();
        assert_eq!((m.b.clone(), m.a.clone()), (vec![0.0, 0.0], vec![1.0]));
        // stream index convention: b_n = table[n mod p], truncation reads n = 1..=N
        let p = ScenarioSpec::periodic_jacobi(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let m = truncate(&p, 3).unwrap();
        assert_eq!(m.b, vec![-1.0, 1.0, -1.0]);
        assert_eq!(m.a, vec![1.0, 1.0]);
        let d = ScenarioSpec::decaying_a(SeqRule::Power { scale: 1.0, exponent: -1.0 }, SeqRule::constant(0.0)).unwrap();
        assert_eq!(truncate(&d, 3).unwrap().a, vec![1.0, 0.5]);
        let cmv = ScenarioSpec::periodic_cmv(vec![Complex64::new(0.5, 0.0)]).unwrap();
        assert!(matches!(truncate(&cmv, 3), Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn sturm_examples() {
        let free = FiniteJacobi::free(3);
        assert_eq!(sturm_count(&free, -0.5), 1);
        assert_eq!(sturm_count(&free, -10.0), 0);
        assert_eq!(sturm_count(&FiniteJacobi::new(vec![5.0], vec![]).unwrap(), 6.0), 1);
        // an exact eigenvalue as shift exercises the pivot guard
        let c = sturm_count(&free, 0.0);
        assert!(c == 1 || c == 2);
    }

    #[test]
    fn eigenvalue_examples() {
        let e = eigenvalues(&FiniteJacobi::free(2), 1e-12);
        assert!((e[0] + 1.0).abs() < 1e-11 && (e[1] - 1.0).abs() < 1e-11);
        let e = eigenvalues(&FiniteJacobi::free(3), 1e-12);
        let want = [-2f64.sqrt(), 0.0, 2f64.sqrt()];
        for (g, w) in e.iter().zip(want) {
            assert!((g - w).abs() < 1e-11);
        }
        assert_eq!(eigenvalues(&FiniteJacobi::new(vec![-1.0], vec![]).unwrap(), 1e-12).len(), 1);
    }

    #[test]
    fn eigenvalues_match_closed_form() {
        let n = 200;
        let e = eigenvalues(&FiniteJacobi::free(n), 1e-12);
        for (k, v) in e.iter().enumerate() {
            let want = 2.0 * ((n - k) as f64 * PI / (n as f64 + 1.0)).cos();
            assert!((v - want).abs() < 1e-11);
        }
    }

    #[test]
    fn ql_agrees_with_bisection() {
        let mut rng = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in [1usize, 2, 3, 10, 137, 600] {
            let b: Vec<f64> = (0..n).map(|_| 4.0 * next() - 2.0).collect();
            let a: Vec<f64> = (1..n).map(|k| if k % 17 == 0 { 0.0 } else { 0.1 + next() }).collect();
            let m = FiniteJacobi::new(b, a).unwrap();
            let x = eigenvalues(&m, 1e-13);
            let y = eigenvalues_ql(&m).unwrap();
            assert_eq!(x.len(), y.len());
            assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-11), "n = {n}");
        }
    }

    #[test]
    fn eigenvalue_range_is_a_slice() {
        let m = truncate(&ScenarioSpec::periodic_jacobi(vec![1.0, 0.7], vec![0.3, -1.0]).unwrap(), 50).unwrap();
        let all = eigenvalues(&m, 1e-12);
        let part = eigenvalue_range(&m, 10, 20, 1e-12);
        assert_eq!(part.len(), 10);
        for (a, b) in part.iter().zip(&all[10..20]) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn discriminant_examples() {
        let free = PeriodicJacobi::new(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(discriminant(&free, 2.0), 2.0);
        assert_eq!(discriminant(&free, 0.7), 0.7);
        let p2 = PeriodicJacobi::new(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap();
        for x in [0.0, 1.0, -1.0, 2.0, -2.0] {
            // oracle: explicit product of the two transfer matrices
            let a1 = [[x - 1.0, -1.0], [1.0, 0.0]];
            let a2 = [[x + 1.0, -1.0], [1.0, 0.0]];
            let tr = a2[0][0] * a1[0][0] + a2[0][1] * a1[1][0] + a2[1][0] * a1[0][1] + a2[1][1] * a1[1][1];
            assert!((discriminant(&p2, x) - tr).abs() < 1e-14);
            assert!((discriminant(&p2, x) - (x * x - 3.0)).abs() < 1e-14);
        }
        let p3 = PeriodicJacobi::new(vec![0.5, 2.0, 1.5], vec![0.1, -0.3, 0.7]).unwrap();
        let x = 1e6;
        let lead = discriminant(&p3, x) / x.powi(3);
        assert!((lead - 1.0 / 1.5).abs() < 1e-5);
    }

    #[test]
    fn discriminant_derivative_matches_difference() {
        let p = PeriodicJacobi::new(vec![0.5, 2.0, 1.5, 1.0], vec![0.1, -0.3, 0.7, 0.0]).unwrap();
        for x in [-1.3, 0.2, 0.9] {
            let h = 1e-6;
            let fd = (discriminant(&p, x + h) - discriminant(&p, x - h)) / (2.0 * h);
            assert!((discriminant_with_derivative(&p, x).1 - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn band_examples() {
        let free = band_spectrum(&PeriodicJacobi::new(vec![1.0], vec![0.0]).unwrap()).unwrap();
        assert_eq!(free.intervals().len(), 1);
        assert!((free.intervals()[0][0] + 2.0).abs() < 1e-12 && (free.intervals()[0][1] - 2.0).abs() < 1e-12);

        let p2 = band_spectrum(&PeriodicJacobi::new(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap()).unwrap();
        let want = [[-(5f64.sqrt()), -1.0], [1.0, 5f64.sqrt()]];
        assert_eq!(p2.intervals().len(), 2);
        for (g, w) in p2.intervals().iter().zip(want) {
            assert!((g[0] - w[0]).abs() < 1e-12 && (g[1] - w[1]).abs() < 1e-12);
        }

        let shifted = band_spectrum(&PeriodicJacobi::new(vec![1.0], vec![0.75]).unwrap()).unwrap();
        assert!((shifted.intervals()[0][0] + 1.25).abs() < 1e-12);
        assert!((shifted.intervals()[0][1] - 2.75).abs() < 1e-12);
    }

    #[test]
    fn closed_gaps_fuse() {
        // period 2 with b ≡ 0, a ≡ 1 is the free operator written twice
        let p = PeriodicJacobi::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let s = band_spectrum(&p).unwrap();
        assert_eq!(s.intervals().len(), 1);
        assert!((s.intervals()[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn band_spectrum_matches_truncation() {
        let spec = ScenarioSpec::periodic_jacobi(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let bands = band_spectrum(&PeriodicJacobi::new(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap()).unwrap();
        let cloud = PointCloud::line(eigenvalues(&truncate(&spec, 2000).unwrap(), 1e-10));
        assert!(hausdorff_distance(&bands, &cloud).unwrap() <= 0.02);
    }

    #[test]
    fn large_period_does_not_overflow() {
        let p = 300;
        let b: Vec<f64> = (0..p).map(|n| (2.0 * PI * 47.0 * n as f64 / p as f64).cos()).collect();
        let core = PeriodicJacobi::new(vec![1.0; p], b).unwrap();
        let (lo, hi) = (-4.0, 4.0);
        assert!(discriminant(&core, lo).is_finite() || discriminant(&core, lo).is_infinite());
        assert!(!discriminant(&core, hi).is_nan());
        let s = band_spectrum(&core).unwrap();
        assert!(s.measure() > 0.5);
    }

    #[test]
    fn weyl_examples() {
        let free = FiniteJacobi::free(5);
        let delta = [0.0, 0.0, 1.0, 0.0, 0.0];
        assert!((weyl_residual(&free, 0.0, &delta).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let diag = FiniteJacobi::new(vec![0.3, 0.7, -0.2], vec![0.0, 0.0]).unwrap();
        assert_eq!(weyl_residual(&diag, 0.7, &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(weyl_residual(&free, 0.0, &[1.0, 0.0, 0.0, 0.0, 0.0]), Err(Error::Support)));
    }

    #[test]
    fn tapered_plane_wave_residual_decays() {
        let theta: f64 = 0.9;
        let lambda = 2.0 * theta.cos();
        let res: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&l| {
                let len = 2 * l + 3;
                let c = len / 2;
                let phi: Vec<f64> = (0..len)
                    .map(|n| {
                        let d = (n as f64 - c as f64).abs();
                        (n as f64 * theta).sin() * (1.0 - d / l as f64).max(0.0)
                    })
                    .collect();
                weyl_residual(&FiniteJacobi::free(len), lambda, &phi).unwrap()
            })
            .collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
        for (r, l) in res.iter().zip([8.0, 16.0, 32.0]) {
            assert!(*r <= 4.0 / l);
        }
    }

    #[test]
    fn bloch_trial_vectors_witness_bands() {
        let core = PeriodicJacobi::new(vec![1.0, 0.6, 1.3], vec![0.4, -0.5, 0.1]).unwrap();
        let bands = band_edges(&core).unwrap();
        let two = TwoSidedJacobi::PeriodicCore(core.clone());
        for band in bands {
            let x = 0.5 * (band[0] + band[1]);
            for l in [32usize, 64] {
                let len = 2 * l + 3;
                let phi = tapered_bloch(&core, x, l, len, 0);
                let m = two.section(0, len as i64 - 1).unwrap();
                let r = weyl_residual(&m, x, &phi).unwrap();
                assert!(r <= 10.0 / l as f64, "{r}");
            }
        }
    }

    #[test]
    fn two_sided_entries() {
        let bs = TwoSidedJacobi::BlockSum { blocks: vec![FiniteJacobi::new(vec![0.0, 0.0], vec![1.0]).unwrap()] };
        assert_eq!(bs.entry(0), Some((1.0, 0.0)));
        assert_eq!(bs.entry(1), Some((0.0, 0.0)));
        assert_eq!(bs.entry(-1), Some((0.0, 0.0)));
        let raw = TwoSidedJacobi::RawWindow { a: vec![1.0; 5], b: vec![0.0; 5], center: 2 };
        assert!(raw.entry(3).is_none());
        assert!(raw.section(-2, 2).is_ok());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        FiniteJacobi::free(2).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,a,b\n1,1,0\n2,,0\n");
    }

    // oracle: band edges are the eigenvalues of the dense periodic and
    // antiperiodic one-period matrices
    #[test]
    fn band_edges_match_dense_floquet_eigenvalues() {
        for (a, b) in [
            (vec![1.0, 0.7, 1.3, 0.9, 1.1], vec![0.3, -0.5, 0.0, 1.2, -0.8]),
            (vec![0.5, 2.0, 1.0], vec![1.0, 1.0, -2.0]),
            (vec![1.0, 1.0], vec![1.0, -1.0]),
        ] {
            let p = a.len();
            let mut want = Vec::new();
            for sign in [1.0, -1.0] {
                let m = nalgebra::DMatrix::from_fn(p, p, |i, j| {
                    let mut v = if i == j { b[i] } else { 0.0 };
                    if j == i + 1 {
                        v += a[i];
                    }
                    if i == j + 1 {
                        v += a[j];
                    }
                    // the corner coupling a_{p−1}, with sign ±1 for θ = 0, π
                    if (i == 0 && j == p - 1) || (i == p - 1 && j == 0) {
                        v += sign * a[p - 1];
                    }
                    v
                });
                want.extend(m.symmetric_eigen().eigenvalues.iter().copied());
            }
            want.sort_by(f64::total_cmp);
            let got: Vec<f64> = band_edges(&PeriodicJacobi::new(a, b).unwrap()).unwrap().into_iter().flatten().collect();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{got:?} vs {want:?}");
            }
        }
    }

}
