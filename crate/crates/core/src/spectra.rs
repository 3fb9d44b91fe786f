//! Spectral sets on the real line and on the unit circle.
//!
//! A set is a finite union of closed intervals (arcs on the circle) plus a
//! finite set of isolated points, always kept in canonical form: components
//! sorted, pairwise disjoint, and separated by more than the merge tolerance.
//! Circle sets are stored as angles in `[0, 2π]`; an arc crossing angle zero
//! is held as two pieces `[0, x]` and `[y, 2π]` and reported as one arc.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for fusing components during unions.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Line,
    Circle,
}

/// Closed subset of the extended real line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RealSpectralSet {
    intervals: Vec<[f64; 2]>,
    points: Vec<f64>,
    unbounded_above: bool,
    unbounded_below: bool,
}

/// Closed subset of the unit circle, in angle coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircleSpectralSet {
    pieces: Vec<[f64; 2]>,
    points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralSet {
    Line(RealSpectralSet),
    Circle(CircleSpectralSet),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

/// A finite multiset of eigenvalues (line) or eigenangles (circle).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub kind: SetKind,
    pub values: Vec<f64>,
    #[serde(default)]
    pub meta: CloudMeta,
}

/// What happened while forming a union.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionDiagnostics {
    /// Components fused across a strictly positive gap below the merge
    /// tolerance. These fusions are the only place where taking the closure
    /// changes the finite-precision union.
    pub closure_fusions: usize,
}

impl UnionDiagnostics {
    pub fn already_closed(&self) -> bool {
        self.closure_fusions == 0
    }
}

// Line canonicalization shared by both geometries.
fn canonical_line(
    mut intervals: Vec<[f64; 2]>,
    mut points: Vec<f64>,
    tol: f64,
    diag: &mut UnionDiagnostics,
) -> (Vec<[f64; 2]>, Vec<f64>) {
    for iv in intervals.iter_mut() {
        if iv[0] > iv[1] {
            iv.swap(0, 1);
        }
    }
    intervals.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    let mut merged: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv[0] - last[1] <= tol => {
                if iv[0] > last[1] {
                    diag.closure_fusions += 1;
                }
                last[1] = last[1].max(iv[1]);
            }
            _ => merged.push(iv),
        }
    }

    points.sort_by(f64::total_cmp);
    let mut kept: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        // absorb into an interval within tolerance, widening it if needed
        let idx = merged.partition_point(|iv| iv[1] < p - tol);
        if idx < merged.len() && merged[idx][0] - tol <= p {
            let iv = &mut merged[idx];
            if p < iv[0] || p > iv[1] {
                diag.closure_fusions += 1;
                iv[0] = iv[0].min(p);
                iv[1] = iv[1].max(p);
            }
            continue;
        }
        match kept.last() {
            Some(&q) if p - q <= tol => {
                if p > q {
                    diag.closure_fusions += 1;
                }
            }
            _ => kept.push(p),
        }
    }
    (merged, kept)
}

impl RealSpectralSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(intervals: Vec<[f64; 2]>, points: Vec<f64>) -> Self {
        Self::with_tol(intervals, points, DEFAULT_MERGE_TOL)
    }

    pub fn with_tol(intervals: Vec<[f64; 2]>, points: Vec<f64>, tol: f64) -> Self {
        let mut diag = UnionDiagnostics::default();
        let (intervals, points) = canonical_line(intervals, points, tol, &mut diag);
        Self { intervals, points, unbounded_above: false, unbounded_below: false }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![[lo, hi]], vec![])
    }

    pub fn from_points(points: Vec<f64>) -> Self {
        Self::new(vec![], points)
    }

    pub fn with_flags(mut self, unbounded_below: bool, unbounded_above: bool) -> Self {
        self.unbounded_below = unbounded_below;
        self.unbounded_above = unbounded_above;
        self
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn unbounded_above(&self) -> bool {
        self.unbounded_above
    }

    pub fn unbounded_below(&self) -> bool {
        self.unbounded_below
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
            && self.points.is_empty()
            && !self.unbounded_above
            && !self.unbounded_below
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    /// Distance from `x` to the finite part of the set.
    pub fn distance_to(&self, x: f64) -> f64 {
        dist_sorted(&self.components_unchecked(), x)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.distance_to(x) <= tol
    }

    fn components_unchecked(&self) -> Vec<[f64; 2]> {
        let mut c: Vec<[f64; 2]> = self.intervals.clone();
        c.extend(self.points.iter().map(|&p| [p, p]));
        c.sort_by(|x, y| x[0].total_cmp(&y[0]));
        c
    }

    /// Closure of the union of `sets`, with the merge diagnostics.
    pub fn union_all(sets: &[RealSpectralSet], tol: f64) -> (Self, UnionDiagnostics) {
        let mut diag = UnionDiagnostics::default();
        let intervals = sets.iter().flat_map(|s| s.intervals.iter().copied()).collect();
        let points = sets.iter().flat_map(|s| s.points.iter().copied()).collect();
        let (intervals, points) = canonical_line(intervals, points, tol, &mut diag);
        let set = Self {
            intervals,
            points,
            unbounded_above: sets.iter().any(|s| s.unbounded_above),
            unbounded_below: sets.iter().any(|s| s.unbounded_below),
        };
        (set, diag)
    }
}

impl CircleSpectralSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { pieces: vec![[0.0, TAU]], points: vec![] }
    }

    /// Arcs are `[start, end]` with `end >= start`, read counterclockwise;
    /// angles may be any real numbers.
    pub fn new(arcs: Vec<[f64; 2]>, points: Vec<f64>) -> Self {
        Self::with_tol(arcs, points, DEFAULT_MERGE_TOL)
    }

    pub fn with_tol(arcs: Vec<[f64; 2]>, points: Vec<f64>, tol: f64) -> Self {
        let mut diag = UnionDiagnostics::default();
        Self::build(arcs, points, tol, &mut diag)
    }

    pub fn arc(start: f64, end: f64) -> Self {
        Self::new(vec![[start, end]], vec![])
    }

    pub fn from_points(points: Vec<f64>) -> Self {
        Self::new(vec![], points)
    }

    fn build(arcs: Vec<[f64; 2]>, points: Vec<f64>, tol: f64, diag: &mut UnionDiagnostics) -> Self {
        let mut pieces = Vec::with_capacity(arcs.len() + 1);
        for [lo, hi] in arcs {
            let len = (hi - lo).abs();
            if len >= TAU - tol {
                return Self::full();
            }
            let start = lo.min(hi).rem_euclid(TAU);
            let end = start + len;
            if end <= TAU {
                pieces.push([start, end]);
            } else {
                pieces.push([start, TAU]);
                pieces.push([0.0, end - TAU]);
            }
        }
        let points: Vec<f64> = points.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        let (mut pieces, mut points) = canonical_line(pieces, points, tol, diag);

        // fuse across angle zero
        if let (Some(first), Some(last)) = (pieces.first().copied(), pieces.last().copied()) {
            let wrap_gap = first[0] + TAU - last[1];
            if wrap_gap <= tol {
                if wrap_gap > 0.0 {
                    diag.closure_fusions += 1;
                }
                if pieces.len() == 1 {
                    return Self { pieces: vec![[0.0, TAU]], points: vec![] };
                }
                pieces[0][0] = 0.0;
                let n = pieces.len();
                pieces[n - 1][1] = TAU;
            }
        }
        if pieces.len() == 1 && pieces[0][1] - pieces[0][0] >= TAU - tol {
            return Self::full();
        }
        // points near 2π that coincide with points or pieces near zero
        points.retain(|&p| {
            let near = |q: f64| circ_dist(p, q) <= tol;
            let on_piece = pieces.iter().any(|pc| near(pc[0]) || near(pc[1]) || (pc[0] <= p && p <= pc[1]));
            !on_piece
        });
        if points.len() >= 2 {
            let first = points[0];
            let last = *points.last().unwrap();
            if first + TAU - last <= tol {
                points.pop();
            }
        }
        Self { pieces, points }
    }

    pub fn is_full(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0] == [0.0, TAU]
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty() && self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Internal split representation inside `[0, 2π]`.
    pub fn pieces(&self) -> &[[f64; 2]] {
        &self.pieces
    }

    /// Arcs with wraparound rejoined: `start` in `[0, 2π)`, `end = start + length`.
    pub fn arcs(&self) -> Vec<[f64; 2]> {
        if self.is_full() {
            return vec![[0.0, TAU]];
        }
        let n = self.pieces.len();
        if n >= 2 && self.pieces[0][0] == 0.0 && self.pieces[n - 1][1] == TAU {
            let mut out: Vec<[f64; 2]> = self.pieces[1..n - 1].to_vec();
            out.push([self.pieces[n - 1][0], TAU + self.pieces[0][1]]);
            out
        } else {
            self.pieces.clone()
        }
    }

    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|p| p[1] - p[0]).sum()
    }

    pub fn distance_to(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        dist_sorted(&periodic_extension(&self.components_unchecked()), t)
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        self.distance_to(theta) <= tol
    }

    fn components_unchecked(&self) -> Vec<[f64; 2]> {
        let mut c: Vec<[f64; 2]> = self.pieces.clone();
        c.extend(self.points.iter().map(|&p| [p, p]));
        c.sort_by(|x, y| x[0].total_cmp(&y[0]));
        c
    }

    pub fn union_all(sets: &[CircleSpectralSet], tol: f64) -> (Self, UnionDiagnostics) {
        let mut diag = UnionDiagnostics::default();
        if sets.iter().any(|s| s.is_full()) {
            return (Self::full(), diag);
        }
        let arcs = sets.iter().flat_map(|s| s.pieces.iter().copied()).collect();
        let points = sets.iter().flat_map(|s| s.points.iter().copied()).collect();
        let set = Self::build(arcs, points, tol, &mut diag);
        (set, diag)
    }
}

impl SpectralSet {
    pub fn kind(&self) -> SetKind {
        match self {
            SpectralSet::Line(_) => SetKind::Line,
            SpectralSet::Circle(_) => SetKind::Circle,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SpectralSet::Line(s) => s.is_empty(),
            SpectralSet::Circle(s) => s.is_empty(),
        }
    }

    pub fn as_line(&self) -> Option<&RealSpectralSet> {
        match self {
            SpectralSet::Line(s) => Some(s),
            SpectralSet::Circle(_) => None,
        }
    }

    pub fn as_circle(&self) -> Option<&CircleSpectralSet> {
        match self {
            SpectralSet::Circle(s) => Some(s),
            SpectralSet::Line(_) => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl From<RealSpectralSet> for SpectralSet {
    fn from(s: RealSpectralSet) -> Self {
        SpectralSet::Line(s)
    }
}

impl From<CircleSpectralSet> for SpectralSet {
    fn from(s: CircleSpectralSet) -> Self {
        SpectralSet::Circle(s)
    }
}

impl PointCloud {
    pub fn line(values: Vec<f64>) -> Self {
        Self { kind: SetKind::Line, values, meta: CloudMeta::default() }
    }

    pub fn circle(values: Vec<f64>) -> Self {
        let values = values.into_iter().map(|t| t.rem_euclid(TAU)).collect();
        Self { kind: SetKind::Circle, values, meta: CloudMeta::default() }
    }

    pub fn with_meta(mut self, size: Option<usize>, scenario: Option<String>) -> Self {
        self.meta = CloudMeta { size, scenario };
        self
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Anything with a well-defined finite geometry for distance computations.
pub trait Geometry {
    fn kind(&self) -> SetKind;
    /// Sorted closed components (points as degenerate intervals).
    fn components(&self) -> Result<Vec<[f64; 2]>>;
}

impl Geometry for RealSpectralSet {
    fn kind(&self) -> SetKind {
        SetKind::Line
    }
    fn components(&self) -> Result<Vec<[f64; 2]>> {
        if self.unbounded_above || self.unbounded_below {
            return Err(Error::Unbounded);
        }
        Ok(self.components_unchecked())
    }
}

impl Geometry for CircleSpectralSet {
    fn kind(&self) -> SetKind {
        SetKind::Circle
    }
    fn components(&self) -> Result<Vec<[f64; 2]>> {
        Ok(self.components_unchecked())
    }
}

impl Geometry for SpectralSet {
    fn kind(&self) -> SetKind {
        SpectralSet::kind(self)
    }
    fn components(&self) -> Result<Vec<[f64; 2]>> {
        match self {
            SpectralSet::Line(s) => s.components(),
            SpectralSet::Circle(s) => s.components(),
        }
    }
}

impl Geometry for PointCloud {
    fn kind(&self) -> SetKind {
        self.kind
    }
    fn components(&self) -> Result<Vec<[f64; 2]>> {
        Ok(self.sorted().into_iter().map(|v| [v, v]).collect())
    }
}

/// Closure of the union; all inputs must share a kind.
pub fn union_and_close(sets: &[SpectralSet], tol: f64) -> Result<(SpectralSet, UnionDiagnostics)> {
    let Some(first) = sets.first() else {
        return Ok((SpectralSet::Line(RealSpectralSet::empty()), UnionDiagnostics::default()));
    };
    let kind = first.kind();
    if let Some(bad) = sets.iter().find(|s| s.kind() != kind) {
        return Err(Error::KindMismatch(kind, bad.kind()));
    }
    Ok(match kind {
        SetKind::Line => {
            let v: Vec<RealSpectralSet> = sets.iter().filter_map(|s| s.as_line().cloned()).collect();
            let (s, d) = RealSpectralSet::union_all(&v, tol);
            (s.into(), d)
        }
        SetKind::Circle => {
            let v: Vec<CircleSpectralSet> = sets.iter().filter_map(|s| s.as_circle().cloned()).collect();
            let (s, d) = CircleSpectralSet::union_all(&v, tol);
            (s.into(), d)
        }
    })
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn periodic_extension(c: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(3 * c.len());
    for shift in [-TAU, 0.0, TAU] {
        out.extend(c.iter().map(|iv| [iv[0] + shift, iv[1] + shift]));
    }
    out
}

// Distance from x to a sorted list of disjoint components.
fn dist_sorted(c: &[[f64; 2]], x: f64) -> f64 {
    if c.is_empty() {
        return f64::INFINITY;
    }
    let idx = c.partition_point(|iv| iv[1] < x);
    let mut best = f64::INFINITY;
    if idx < c.len() {
        best = best.min((c[idx][0] - x).max(0.0));
    }
    if idx > 0 {
        best = best.min(x - c[idx - 1][1]);
    }
    best
}

// sup over a in A of dist(a, B); B sorted, components may touch but not cross.
fn directed(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut worst: f64 = 0.0;
    for iv in a {
        worst = worst.max(dist_sorted(b, iv[0])).max(dist_sorted(b, iv[1]));
        if iv[1] > iv[0] {
            // interior maxima sit at midpoints of gaps of B
            let mut k = b.partition_point(|c| c[1] < iv[0]);
            k = k.saturating_sub(1);
            while k + 1 < b.len() && b[k][1] < iv[1] {
                let mid = 0.5 * (b[k][1] + b[k + 1][0]);
                if mid > iv[0] && mid < iv[1] {
                    worst = worst.max(0.5 * (b[k + 1][0] - b[k][1]));
                }
                k += 1;
            }
        }
    }
    worst
}

/// Hausdorff distance between two nonempty sets (or clouds) of one kind.
/// Circle sets use the arc-length metric.
pub fn hausdorff_distance<A: Geometry + ?Sized, B: Geometry + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch(a.kind(), b.kind()));
    }
    let ca = a.components()?;
    let cb = b.components()?;
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(match a.kind() {
        SetKind::Line => directed(&ca, &cb).max(directed(&cb, &ca)),
        SetKind::Circle => {
            let ea = periodic_extension(&ca);
            let eb = periodic_extension(&cb);
            directed(&ca, &eb).max(directed(&cb, &ea))
        }
    })
}

/// sup over `a` of the distance to `b`: the one-sided containment gap.
pub fn excess<A: Geometry + ?Sized, B: Geometry + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch(a.kind(), b.kind()));
    }
    let ca = a.components()?;
    let cb = b.components()?;
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(match a.kind() {
        SetKind::Line => directed(&ca, &cb),
        SetKind::Circle => directed(&ca, &periodic_extension(&cb)),
    })
}

fn spread(lo: f64, hi: f64, count: usize, out: &mut Vec<f64>) {
    if count <= 1 || hi <= lo {
        out.push(lo);
        if hi > lo {
            out.push(hi);
        }
        return;
    }
    let step = (hi - lo) / (count - 1) as f64;
    out.extend((0..count - 1).map(|k| lo + step * k as f64));
    out.push(hi);
}

/// Points spread over `set` proportionally to component length, endpoints
/// and isolated points always included.
pub fn sample(set: &SpectralSet, n: usize) -> Result<PointCloud> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let (kind, comps, isolated, full) = match set {
        SpectralSet::Line(s) => {
            if s.unbounded_above || s.unbounded_below {
                return Err(Error::Unbounded);
            }
            (SetKind::Line, s.intervals.clone(), s.points.clone(), false)
        }
        SpectralSet::Circle(s) => (SetKind::Circle, s.arcs(), s.points.clone(), s.is_full()),
    };
    let total: f64 = comps.iter().map(|c| c[1] - c[0]).sum();
    let budget = n.saturating_sub(isolated.len()).max(2 * comps.len());
    let mut values = isolated;
    for c in &comps {
        let share = if total > 0.0 { (c[1] - c[0]) / total } else { 0.0 };
        let count = ((budget as f64 * share).round() as usize).max(2);
        if full {
            // the closing endpoint coincides with the opening one
            let step = TAU / count as f64;
            values.extend((0..count).map(|k| step * k as f64));
        } else {
            spread(c[0], c[1], count, &mut values);
        }
    }
    Ok(match kind {
        SetKind::Line => {
            values.sort_by(f64::total_cmp);
            PointCloud::line(values)
        }
        SetKind::Circle => {
            let mut c = PointCloud::circle(values);
            c.values.sort_by(f64::total_cmp);
            c
        }
    })
}

fn runs(sorted: &[f64], gap_tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] >= gap_tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Cluster a cloud into a set: runs with consecutive gaps below `gap_tol`
/// and at least three points become intervals, shorter runs stay points.
pub fn cloud_to_set(cloud: &PointCloud, gap_tol: f64) -> Result<SpectralSet> {
    if gap_tol.is_nan() || gap_tol <= 0.0 {
        return Err(Error::InvalidArgument("gap_tol must be positive".into()));
    }
    let v = cloud.sorted();
    if v.is_empty() {
        return Ok(match cloud.kind {
            SetKind::Line => RealSpectralSet::empty().into(),
            SetKind::Circle => CircleSpectralSet::empty().into(),
        });
    }
    let mut groups: Vec<(f64, f64, usize)> =
        runs(&v, gap_tol).into_iter().map(|(s, e)| (v[s], v[e - 1], e - s)).collect();
    if cloud.kind == SetKind::Circle && groups.len() >= 2 {
        let first = groups[0];
        let last = *groups.last().unwrap();
        if first.0 + TAU - last.1 < gap_tol {
            groups.pop();
            groups[0] = (last.0, first.1 + TAU, first.2 + last.2);
        }
    }
    let mut intervals = Vec::new();
    let mut points = Vec::new();
    for (lo, hi, count) in groups {
        if count >= 3 {
            intervals.push([lo, hi]);
        } else if count == 1 || hi == lo {
            points.push(lo);
        } else {
            points.push(lo);
            points.push(hi);
        }
    }
    Ok(match cloud.kind {
        SetKind::Line => RealSpectralSet::with_tol(intervals, points, 0.0).into(),
        SetKind::Circle => {
            // a single run spanning every gap closes up into the whole circle
            if v.len() >= 3 && intervals.len() == 1 && points.is_empty() && intervals[0][1] - intervals[0][0] >= TAU - gap_tol {
                CircleSpectralSet::full().into()
            } else {
                CircleSpectralSet::with_tol(intervals, points, 0.0).into()
            }
        }
    })
}

#[derive(Serialize, Deserialize)]
struct SetJson {
    kind: SetKind,
    intervals: Vec<[f64; 2]>,
    points: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    unbounded_above: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    unbounded_below: bool,
}

impl Serialize for SpectralSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match self {
            SpectralSet::Line(r) => SetJson {
                kind: SetKind::Line,
                intervals: r.intervals.clone(),
                points: r.points.clone(),
                unbounded_above: r.unbounded_above,
                unbounded_below: r.unbounded_below,
            },
            SpectralSet::Circle(c) => SetJson {
                kind: SetKind::Circle,
                intervals: c.arcs(),
                points: c.points.clone(),
                unbounded_above: false,
                unbounded_below: false,
            },
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = SetJson::deserialize(d)?;
        Ok(match json.kind {
            SetKind::Line => RealSpectralSet::new(json.intervals, json.points)
                .with_flags(json.unbounded_below, json.unbounded_above)
                .into(),
            SetKind::Circle => CircleSpectralSet::new(json.intervals, json.points).into(),
        })
    }
}
