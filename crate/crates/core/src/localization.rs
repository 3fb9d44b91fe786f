//! Tent partitions of unity and the localization of Weyl trial vectors:
//! `Σ_α j_α² = 1`, the commutator operator `C = 2Σ_α [j_α, J]*[j_α, J]`, and
//! the choice of one localized piece `j_α φ` with controlled residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{eigenvalue_range, FiniteJacobi};
use crate::sequences::{Family, ScenarioSpec};

/// `ψ_L(n)` for `n = 1..=2L−1`: rising `(n−1)/L`, falling `(2L−1−n)/L`,
/// zero elsewhere, and `c_L = (Σ ψ_L²)^{1/2}`. The pieces are
/// `j_{α,L}(n) = ψ_L(n − α)/c_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentPartition {
    pub l: usize,
    pub psi: Vec<f64>,
    pub c: f64,
    /// `L = 1` gives the zero tent.
    pub degenerate: bool,
}

pub fn tent_values(l: usize) -> Result<TentPartition> {
    if l == 0 {
        return Err(Error::InvalidArgument("tent scale must be at least 1".into()));
    }
    let lf = l as f64;
    let psi: Vec<f64> = (1..=2 * l - 1)
        .map(|n| if n <= l { (n - 1) as f64 / lf } else { (2 * l - 1 - n) as f64 / lf })
        .collect();
    let c = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(TentPartition { l, psi, c, degenerate: c == 0.0 })
}

impl TentPartition {
    pub fn psi_at(&self, n: i64) -> f64 {
        if n < 1 {
            return 0.0;
        }
        self.psi.get(n as usize - 1).copied().unwrap_or(0.0)
    }

    /// `j_{α,L}(n)`
    pub fn j(&self, alpha: i64, n: i64) -> f64 {
        self.psi_at(n - alpha) / self.c
    }

    /// `α` whose piece can be nonzero at site `n`.
    fn alphas_at(&self, n: i64) -> std::ops::RangeInclusive<i64> {
        n - 2 * self.l as i64 + 2..=n - 2
    }

    fn usable(&self) -> Result<()> {
        if self.degenerate {
            Err(Error::InvalidArgument("the L = 1 tent vanishes identically".into()))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResidual {
    /// `sup_n |Σ_{α≥1} j_α(n)² − 1|` over the range.
    pub residual: f64,
    /// The range starts within `2L` of the origin, where the sum is truncated.
    pub boundary: bool,
    /// `(n, Σ_α j_α(n)²)` for the sites where the sum is not 1, when `boundary`.
    pub boundary_sums: Vec<(u64, f64)>,
}

/// Residual of the partition identity over sites `lo..=hi` of the half-line,
/// with pieces `α = 1, 2, …`.
pub fn partition_identity_residual(l: usize, lo: u64, hi: u64) -> Result<PartitionResidual> {
    let tent = tent_values(l)?;
    tent.usable()?;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(format!("bad site range {lo}..={hi}")));
    }
    let boundary = lo < 2 * l as u64;
    let mut residual = 0.0f64;
    let mut sums = Vec::new();
    for n in lo..=hi {
        let n = n as i64;
        let s: f64 = tent.alphas_at(n).filter(|&a| a >= 1).map(|a| tent.j(a, n).powi(2)).sum();
        let r = (s - 1.0).abs();
        residual = residual.max(r);
        if boundary && r > 1e-12 {
            sums.push((n as u64, s));
        }
    }
    Ok(PartitionResidual { residual, boundary, boundary_sums: sums })
}

// ---------------------------------------------------------------------------
// commutator

/// `C` on a window: diagonal and second off-diagonal (the first off-diagonal
/// vanishes, so even and odd sites decouple).
#[derive(Clone, Debug, PartialEq)]
pub struct Commutator {
    pub diag: Vec<f64>,
    /// `off2[i] = C[i, i+2]`
    pub off2: Vec<f64>,
}

impl Commutator {
    /// `C` for the Jacobi matrix with off-diagonal `a` on sites `first..`,
    /// summing `α ≥ 1` (the window's couplings outside are taken as zero).
    pub fn assemble(a: &[f64], first: i64, tent: &TentPartition) -> Result<Self> {
        tent.usable()?;
        let m = a.len() + 1;
        let mut diag = vec![0.0; m];
        let mut off2 = vec![0.0; m.saturating_sub(2)];
        let last = first + m as i64 - 1;
        let a_lo = (first - 2 * tent.l as i64).max(1);
        for alpha in a_lo..=last {
            // d_i = (j(n) − j(n+1)) a_n for the bond (i, i+1), n = first + i
            let d: Vec<f64> = (0..m - 1)
                .map(|i| {
                    let n = first + i as i64;
                    (tent.j(alpha, n) - tent.j(alpha, n + 1)) * a[i]
                })
                .collect();
            for i in 0..m - 1 {
                if d[i] == 0.0 {
                    continue;
                }
                diag[i] += 2.0 * d[i] * d[i];
                diag[i + 1] += 2.0 * d[i] * d[i];
                if i + 1 < m - 1 {
                    off2[i] -= 2.0 * d[i] * d[i + 1];
                }
            }
        }
        Ok(Commutator { diag, off2 })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for (i, e) in self.off2.iter().enumerate() {
            y[i] += e * v[i + 2];
            y[i + 2] += e * v[i];
        }
        y
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// The even- and odd-site chains as tridiagonal matrices.
    pub fn chains(&self) -> [FiniteJacobi; 2] {
        let chain = |parity: usize| {
            let b: Vec<f64> = self.diag.iter().skip(parity).step_by(2).copied().collect();
            let a: Vec<f64> = self.off2.iter().skip(parity).step_by(2).take(b.len().saturating_sub(1)).copied().collect();
            FiniteJacobi { b, a }
        };
        [chain(0), chain(1)]
    }

    /// `‖C‖` as the largest chain eigenvalue, by Sturm bisection.
    pub fn norm_sturm(&self, tol: f64) -> f64 {
        self.chains()
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| eigenvalue_range(c, c.len() - 1, c.len(), tol)[0])
            .fold(0.0, f64::max)
    }

    /// Power iteration from `(−1)^{⌊n/2⌋}` under a sine envelope per chain,
    /// stopped once the Rayleigh quotient changes by less than `rel_tol`.
    pub fn norm_power(&self, rel_tol: f64, max_iter: usize) -> Result<(f64, usize)> {
        let m = self.len();
        let half = [m.div_ceil(2), m / 2];
        let mut v: Vec<f64> = (0..m)
            .map(|i| {
                let k = i / 2;
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s * (std::f64::consts::PI * (k + 1) as f64 / (half[i % 2] + 1) as f64).sin()
            })
            .collect();
        let mut history = Vec::new();
        let mut prev = f64::NAN;
        for it in 1..=max_iter {
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv == 0.0 {
                return Ok((0.0, it));
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let w = self.apply(&v);
            let mu: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            if history.len() < 64 {
                history.push(mu);
            }
            if it > 2 && (mu - prev).abs() <= rel_tol * mu.abs() {
                return Ok((mu, it));
            }
            prev = mu;
            v = w;
        }
        Err(Error::NonConvergence { iterations: max_iter, history })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorNorm {
    pub l: usize,
    pub c_l: f64,
    pub norm: f64,
    /// `‖C‖·L²`
    pub scaled: f64,
    pub iterations: usize,
}

pub const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 200_000;

/// `‖C‖` for the stream's Jacobi matrix on sites `lo..=hi`, by power iteration.
pub fn commutator_c_norm(spec: &ScenarioSpec, l: usize, lo: u64, hi: u64) -> Result<CommutatorNorm> {
    if spec.family != Family::Jacobi {
        return Err(Error::FamilyMismatch { expected: Family::Jacobi, got: spec.family });
    }
    if lo == 0 || hi < lo || ((hi - lo + 1) as usize) < 8 * l {
        return Err(Error::InvalidArgument(format!("window {lo}..={hi} is shorter than 8L = {}", 8 * l)));
    }
    let tent = tent_values(l)?;
    let a: Vec<f64> = (lo..hi).map(|n| spec.jacobi_at(n).0).collect();
    let c = Commutator::assemble(&a, lo as i64, &tent)?;
    let (norm, iterations) = c.norm_power(POWER_TOL, POWER_MAX_ITER)?;
    Ok(CommutatorNorm { l, c_l: tent.c, norm, scaled: norm * (l * l) as f64, iterations })
}

// ---------------------------------------------------------------------------
// localized trial vectors

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedTrial {
    /// Window sites are numbered `1..=len`; pieces `α` range over all
    /// integers whose tent meets the window.
    pub alpha: i64,
    pub vector: Vec<f64>,
    /// `‖(J − λ) j_α φ‖ / ‖j_α φ‖`
    pub ratio: f64,
    /// `(2(‖(J − λ)φ‖/‖φ‖)² + ‖C‖)^{1/2}`
    pub bound: f64,
    pub c_norm: f64,
    pub slack: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn shifted_apply(m: &FiniteJacobi, lambda: f64, v: &[f64]) -> Vec<f64> {
    m.apply(v).iter().zip(v).map(|(y, x)| y - lambda * x).collect()
}

struct Pieces {
    tent: TentPartition,
    comm: Commutator,
}

impl Pieces {
    fn new(m: &FiniteJacobi, l: usize) -> Result<Self> {
        let tent = tent_values(l)?;
        tent.usable()?;
        // every α meeting the window, shifted so that all of them are ≥ 1
        let comm = Commutator::assemble(&m.a, 1 + 2 * l as i64, &tent)?;
        Ok(Pieces { tent, comm })
    }

    fn alphas(&self, len: usize) -> std::ops::RangeInclusive<i64> {
        1 - 2 * self.tent.l as i64..=len as i64
    }

    fn piece(&self, alpha: i64, phi: &[f64]) -> Vec<f64> {
        phi.iter().enumerate().map(|(i, p)| self.tent.j(alpha, i as i64 + 1) * p).collect()
    }
}

/// The piece `j_α φ` with the smallest residual ratio (ties to the smaller
/// `α`), together with the bound it must satisfy.
pub fn localize_trial(m: &FiniteJacobi, lambda: f64, phi: &[f64], l: usize) -> Result<LocalizedTrial> {
    if phi.len() != m.len() {
        return Err(Error::InvalidArgument("trial vector length differs from the window".into()));
    }
    let nphi = norm2(phi);
    if nphi == 0.0 {
        return Err(Error::InvalidArgument("trial vector is zero".into()));
    }
    let pieces = Pieces::new(m, l)?;
    let mut best: Option<(f64, i64, Vec<f64>)> = None;
    for alpha in pieces.alphas(m.len()) {
        let v = pieces.piece(alpha, phi);
        let nv = norm2(&v);
        if nv == 0.0 {
            continue;
        }
        let ratio2 = norm2(&shifted_apply(m, lambda, &v)) / nv;
        if best.as_ref().is_none_or(|(r, _, _)| ratio2 < *r) {
            best = Some((ratio2, alpha, v));
        }
    }
    let (ratio2, alpha, vector) = best.ok_or(Error::DegenerateSupport)?;
    let c_norm = pieces.comm.norm_sturm(1e-14);
    let bound2 = 2.0 * norm2(&shifted_apply(m, lambda, phi)) / nphi + c_norm;
    Ok(LocalizedTrial {
        alpha,
        vector,
        ratio: ratio2.sqrt(),
        bound: bound2.sqrt(),
        c_norm,
        slack: bound2 - ratio2,
    })
}

/// Both sides of `Σ_α ‖A j_α φ‖² ≤ 2‖Aφ‖² + ⟨φ, Cφ⟩` for `A = J − λ`.
pub fn localization_sum_bound(m: &FiniteJacobi, lambda: f64, phi: &[f64], l: usize) -> Result<(f64, f64)> {
    if phi.len() != m.len() {
        return Err(Error::InvalidArgument("trial vector length differs from the window".into()));
    }
    let pieces = Pieces::new(m, l)?;
    let lhs: f64 = pieces
        .alphas(m.len())
        .map(|alpha| norm2(&shifted_apply(m, lambda, &pieces.piece(alpha, phi))))
        .sum();
    let rhs = 2.0 * norm2(&shifted_apply(m, lambda, phi)) + pieces.comm.quadratic_form(phi);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{tapered_bloch, PeriodicJacobi};
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn c_closed(l: usize) -> f64 {
        // Σψ² = [2 Σ_{k<L} k² − (L−1)²]/L²
        let lf = l as f64;
        (((lf - 1.0) * lf * (2.0 * lf - 1.0) / 3.0 - (lf - 1.0).powi(2)) / (lf * lf)).sqrt()
    }

    /// Top of the spectrum of `C` for constant `a` on the whole line:
    /// `(16L − 28)a²/(L²c_L²)`, from `Σ Δψ² = (2L−2)/L²` and
    /// `Σ ΔψΔψ' = (2L−5)/L²`.
    fn free_norm_limit(l: usize, a: f64) -> f64 {
        let lf = l as f64;
        (16.0 * lf - 28.0) * a * a / (lf * lf * c_closed(l).powi(2))
    }

    #[test]
    fn tent_examples() {
        let t = tent_values(2).unwrap();
        assert_eq!(t.psi, vec![0.0, 0.5, 0.0]);
        assert_eq!(t.c, 0.5);
        let t = tent_values(1).unwrap();
        assert_eq!(t.psi, vec![0.0]);
        assert!(t.degenerate);
        let t = tent_values(3).unwrap();
        assert_eq!(t.psi, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert!(tent_values(0).is_err());
    }

    #[test]
    fn tent_normalization_scales_like_root_l() {
        for l in 2..=1024 {
            let t = tent_values(l).unwrap();
            assert!((t.c - c_closed(l)).abs() < 1e-12 * t.c);
            let r = t.c / (l as f64).sqrt();
            assert!((0.35..=0.82).contains(&r), "L = {l}: {r}");
        }
        assert!((tent_values(1 << 14).unwrap().c / 128.0 - (2.0f64 / 3.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn partition_identity() {
        for l in [4, 64] {
            let r = partition_identity_residual(l, 2 * l as u64, 2 * l as u64 + 500).unwrap();
            assert!(!r.boundary);
            assert!(r.residual < 1e-12, "L = {l}: {}", r.residual);
        }
        let r = partition_identity_residual(4, 1, 20).unwrap();
        assert!(r.boundary);
        assert!((r.residual - 1.0).abs() < 1e-12);
        assert_eq!(r.boundary_sums[0], (1, 0.0));
        assert!(partition_identity_residual(1, 10, 20).is_err());
    }

    #[test]
    fn commutator_entries_match_translation_invariant_sums() {
        for l in [3usize, 8, 21] {
            let t = tent_values(l).unwrap();
            let lf = l as f64;
            let a = vec![1.3; 10 * l];
            let c = Commutator::assemble(&a, 4 * l as i64, &t).unwrap();
            let d = 4.0 * (2.0 * lf - 2.0) / (lf * lf) * 1.69 / (t.c * t.c);
            let e = -2.0 * (2.0 * lf - 5.0) / (lf * lf) * 1.69 / (t.c * t.c);
            for i in 1..c.len() - 1 {
                assert!((c.diag[i] - d).abs() < 1e-12, "L = {l}, site {i}");
            }
            for i in 0..c.off2.len() {
                assert!((c.off2[i] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutator_matches_dense_sum_of_squares() {
        let l = 3;
        let t = tent_values(l).unwrap();
        let a: Vec<f64> = (0..19).map(|i| 1.0 + 0.1 * (i as f64).sin()).collect();
        let first = 9i64;
        let m = a.len() + 1;
        let c = Commutator::assemble(&a, first, &t).unwrap();
        let mut dense = DMatrix::<f64>::zeros(m, m);
        for alpha in 1..first + m as i64 {
            let k = DMatrix::from_fn(m, m, |r, s| {
                let (n, q) = (first + r as i64, first + s as i64);
                let jn = t.j(alpha, n);
                let jq = t.j(alpha, q);
                if s == r + 1 {
                    (jn - jq) * a[r]
                } else if r == s + 1 {
                    (jn - jq) * a[s]
                } else {
                    0.0
                }
            });
            dense += 2.0 * k.transpose() * &k;
        }
        for r in 0..m {
            for s in 0..m {
                let want = dense[(r, s)];
                let got = match s as i64 - r as i64 {
                    0 => c.diag[r],
                    2 => c.off2[r],
                    -2 => c.off2[s],
                    _ => 0.0,
                };
                assert!((got - want).abs() < 1e-13, "({r}, {s}): {got} vs {want}");
            }
        }
        let top = SymmetricEigen::new(dense).eigenvalues.max();
        assert!((c.norm_sturm(1e-15) - top).abs() < 1e-12);
    }

    #[test]
    fn free_commutator_norm() {
        let spec = ScenarioSpec::free_jacobi();
        let mut prev: Option<f64> = None;
        let mut scaled = Vec::new();
        for l in [4usize, 8, 16, 32] {
            let lo = 4 * l as u64;
            let r = commutator_c_norm(&spec, l, lo, lo + 8 * l as u64 - 1).unwrap();
            let a = vec![1.0; 8 * l - 1];
            let sturm = Commutator::assemble(&a, lo as i64, &tent_values(l).unwrap()).unwrap().norm_sturm(1e-15);
            assert!((r.norm - sturm).abs() < 1e-6 * sturm, "L = {l}: {} vs {sturm}", r.norm);
            let limit = free_norm_limit(l, 1.0);
            assert!(r.norm <= limit * (1.0 + 1e-12) && r.norm > 0.97 * limit, "L = {l}");
            if let Some(p) = prev {
                let ratio = r.norm / p;
                assert!((0.2..=0.3).contains(&ratio), "L = {l}: {ratio}");
            }
            prev = Some(r.norm);
            scaled.push(r.scaled);
        }
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi / lo <= 2.0);
    }

    #[test]
    fn commutator_is_quadratic_in_a() {
        let one = commutator_c_norm(&ScenarioSpec::free_jacobi(), 8, 64, 127).unwrap();
        let two = commutator_c_norm(&ScenarioSpec::periodic_jacobi(vec![2.0], vec![0.0]).unwrap(), 8, 64, 127).unwrap();
        assert!((two.norm / one.norm - 4.0).abs() < 1e-7);
    }

    #[test]
    fn commutator_window_too_short() {
        assert!(commutator_c_norm(&ScenarioSpec::free_jacobi(), 8, 64, 100).is_err());
        assert!(commutator_c_norm(&ScenarioSpec::free_jacobi(), 1, 64, 100).is_err());
    }

    fn window(seed: u64, len: usize) -> FiniteJacobi {
        let b = (0..len).map(|i| ((i as f64 + 0.3) * (seed as f64 + 1.7)).sin()).collect();
        let a = (0..len - 1).map(|i| 0.5 + ((i as f64) * 0.37 + seed as f64).cos().abs()).collect();
        FiniteJacobi::new(b, a).unwrap()
    }

    #[test]
    fn eigenvector_localizes_within_root_c() {
        let m = window(2, 60);
        let k = DMatrix::from_fn(60, 60, |r, s| {
            if r == s {
                m.b[r]
            } else if s == r + 1 {
                m.a[r]
            } else if r == s + 1 {
                m.a[s]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(k);
        let idx = 17;
        let lambda = eig.eigenvalues[idx];
        let phi: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let r = localize_trial(&m, lambda, &phi, 6).unwrap();
        assert!(r.ratio <= r.c_norm.sqrt() + 1e-8, "{} vs {}", r.ratio, r.c_norm.sqrt());
    }

    #[test]
    fn tapered_bloch_wave_obeys_bound() {
        let core = PeriodicJacobi::new(vec![1.0], vec![0.0]).unwrap();
        let theta = 1.1f64;
        let lambda = 2.0 * theta.cos();
        let phi = tapered_bloch(&core, lambda, 150, 400, 0);
        let m = FiniteJacobi::free(400);
        let r = localize_trial(&m, lambda, &phi, 10).unwrap();
        assert!(r.slack >= 0.0, "{r:?}");
        assert!(r.ratio <= r.bound);
    }

    #[test]
    fn point_mass_is_scaled_by_tents() {
        let m = window(5, 40);
        let k = 20;
        let mut phi = vec![0.0; 40];
        phi[k] = 1.0;
        let lambda = 0.3;
        let r = localize_trial(&m, lambda, &phi, 4).unwrap();
        let nz: Vec<usize> = (0..40).filter(|&i| r.vector[i] != 0.0).collect();
        assert_eq!(nz, vec![k]);
        let direct = norm2(&shifted_apply(&m, lambda, &phi)).sqrt();
        assert!((r.ratio - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_trial_vector_is_rejected() {
        let m = FiniteJacobi::free(30);
        assert!(localize_trial(&m, 0.0, &vec![0.0; 30], 3).is_err());
        assert!(localize_trial(&m, 0.0, &vec![1.0; 30], 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn localization_inequalities(
            seed in 0u64..1000,
            len in 12usize..80,
            l in 2usize..12,
            lambda in -3.0f64..3.0,
            phi in prop::collection::vec(-1.0f64..1.0, 80),
        ) {
            let m = window(seed, len);
            let phi = &phi[..len];
            prop_assume!(norm2(phi) > 1e-6);
            let r = localize_trial(&m, lambda, phi, l).unwrap();
            prop_assert!(r.ratio * r.ratio <= r.bound * r.bound * (1.0 + 1e-12));
            let (lhs, rhs) = localization_sum_bound(&m, lambda, phi, l).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-10), "{} > {}", lhs, rhs);
        }

        #[test]
        fn window_partition_sums_to_one(len in 2usize..60, l in 2usize..20) {
            let m = FiniteJacobi::free(len);
            let p = Pieces::new(&m, l).unwrap();
            for i in 0..len {
                let s: f64 = p.alphas(len).map(|a| p.tent.j(a, i as i64 + 1).powi(2)).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
