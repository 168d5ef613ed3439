//! Once-differentiable piecewise Möbius transformations and vector fields.
//!
//! A [`PcwMobius`] agrees arcwise with Möbius transformations and is `C¹`
//! across the breakpoints; the set of such maps is a group. The generating
//! elements beyond the Möbius group are the maps [`kappa`], which dilate two
//! distant intervals by `+s` and the complementary arcs by `−s`. A
//! [`PcwField`] is the vector-field analogue; its generators beyond the
//! Möbius fields are the derivatives [`kappa_field`] of `s ↦ κ_s` at `s=0`.
//!
//! The constructive algorithms here follow the inductive existence proofs:
//! [`generator_decompose`] peels one κ factor per round after normalizing
//! three breakpoints, [`interpolate_points`] moves one point at a time with
//! a localized one-parameter family found by bisection, and
//! [`field_span_decompose`] peels one κ-field term after matching three
//! values with a Möbius field.

use crate::fourier::FourierFunction;
use crate::mobius::{
    anticlockwise, interp3, interval_dilation, interval_dilation_field, CirclePoint, Interval,
    MobiusElement, MobiusField,
};
use crate::TOL_GEO;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, thiserror::Error)]
pub enum PcwError {
    #[error("intervals are not distant (closures intersect)")]
    NotDistant,
    #[error("points must be distinct and anticlockwise ordered")]
    BadPoints,
    #[error("points are not localized in the given interval")]
    NotLocalized,
    #[error("decomposition did not converge: {0}")]
    Decompose(String),
    #[error("bisection failed to bracket the target")]
    Bisection,
    #[error(transparent)]
    Mobius(#[from] crate::mobius::MobiusError),
}

// ---------------------------------------------------------------------------
// PcwMobius
// ---------------------------------------------------------------------------

/// A piecewise Möbius transformation.
///
/// `breakpoints` are sorted by angle; piece `k` acts on the arc from
/// `breakpoints[k]` to `breakpoints[k+1]` (cyclically). An element with no
/// breakpoints is a single global Möbius transformation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcwMobius {
    pub breakpoints: Vec<CirclePoint>,
    pub pieces: Vec<MobiusElement>,
}

impl PcwMobius {
    pub fn identity() -> Self {
        PcwMobius::from_mobius(MobiusElement::identity())
    }

    pub fn from_mobius(g: MobiusElement) -> Self {
        PcwMobius { breakpoints: Vec::new(), pieces: vec![g] }
    }

    /// Build from unsorted `(arc start, piece)` pairs covering the circle.
    pub fn from_arcs(mut arcs: Vec<(CirclePoint, MobiusElement)>) -> Self {
        arcs.sort_by(|x, y| x.0.theta.total_cmp(&y.0.theta));
        PcwMobius {
            breakpoints: arcs.iter().map(|a| a.0).collect(),
            pieces: arcs.iter().map(|a| a.1).collect(),
        }
    }

    pub fn is_mobius(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Index of the piece whose arc contains `z` (boundary goes to the arc
    /// starting at the breakpoint).
    fn piece_index(&self, z: &CirclePoint) -> usize {
        let n = self.breakpoints.len();
        if n == 0 {
            return 0;
        }
        match self.breakpoints.iter().rposition(|b| b.theta <= z.theta + 1e-15) {
            Some(k) => k,
            None => n - 1,
        }
    }

    pub fn piece_at(&self, z: &CirclePoint) -> &MobiusElement {
        &self.pieces[self.piece_index(z)]
    }

    pub fn apply(&self, z: &CirclePoint) -> CirclePoint {
        self.piece_at(z).apply(z)
    }

    pub fn derivative(&self, z: &CirclePoint) -> f64 {
        self.piece_at(z).derivative(z)
    }

    /// Merge adjacent pieces whose Möbius elements coincide within `TOL_GEO`.
    pub fn merged(&self) -> PcwMobius {
        let n = self.breakpoints.len();
        if n == 0 {
            return self.clone();
        }
        let mut keep: Vec<(CirclePoint, MobiusElement)> = Vec::new();
        for k in 0..n {
            let prev = if k == 0 { n - 1 } else { k - 1 };
            if !self.pieces[k].approx_eq(&self.pieces[prev]) {
                keep.push((self.breakpoints[k], self.pieces[k]));
            }
        }
        if keep.is_empty() {
            PcwMobius::from_mobius(self.pieces[0])
        } else if keep.len() == 1 {
            PcwMobius::from_mobius(keep[0].1)
        } else {
            PcwMobius::from_arcs(keep)
        }
    }

    /// `self ∘ rhs` (apply `rhs` first). Breakpoints of the result are the
    /// breakpoints of `rhs` together with the `rhs`-preimages of the
    /// breakpoints of `self`; equal adjacent pieces are merged.
    pub fn compose(&self, rhs: &PcwMobius) -> PcwMobius {
        let mut cuts: Vec<CirclePoint> = rhs.breakpoints.clone();
        for b in &self.breakpoints {
            cuts.push(rhs.inverse_point(b));
        }
        if cuts.is_empty() {
            return PcwMobius::from_mobius(self.pieces[0].compose(&rhs.pieces[0]));
        }
        cuts.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        cuts.dedup_by(|a, b| a.dist(b) <= TOL_GEO);
        let arcs: Vec<(CirclePoint, MobiusElement)> = (0..cuts.len())
            .map(|k| {
                let next = cuts[(k + 1) % cuts.len()];
                let gap = (next.theta - cuts[k].theta).rem_euclid(TAU);
                let gap = if gap == 0.0 { TAU } else { gap };
                let sample = CirclePoint::new(cuts[k].theta + 0.5 * gap);
                let inner = rhs.piece_at(&sample);
                let outer = self.piece_at(&inner.apply(&sample));
                (cuts[k], outer.compose(inner))
            })
            .collect();
        PcwMobius::from_arcs(arcs).merged()
    }

    /// Preimage of a point (search the piece whose arc maps over the target).
    fn inverse_point(&self, w: &CirclePoint) -> CirclePoint {
        let n = self.breakpoints.len();
        if n == 0 {
            return self.pieces[0].inverse().apply(w);
        }
        for k in 0..n {
            let z = self.pieces[k].inverse().apply(w);
            if self.arc(k).contains(&z) || z.dist(&self.breakpoints[k]) <= TOL_GEO {
                return z;
            }
        }
        // w sits on a piece-image boundary; take the best candidate.
        (0..n)
            .map(|k| self.pieces[k].inverse().apply(w))
            .min_by(|x, y| self.apply(x).dist(w).total_cmp(&self.apply(y).dist(w)))
            .unwrap()
    }

    pub fn inverse(&self) -> PcwMobius {
        let n = self.breakpoints.len();
        if n == 0 {
            return PcwMobius::from_mobius(self.pieces[0].inverse());
        }
        let arcs: Vec<(CirclePoint, MobiusElement)> = (0..n)
            .map(|k| (self.pieces[k].apply(&self.breakpoints[k]), self.pieces[k].inverse()))
            .collect();
        PcwMobius::from_arcs(arcs)
    }

    fn arc(&self, k: usize) -> Interval {
        let n = self.breakpoints.len();
        Interval { start: self.breakpoints[k], end: self.breakpoints[(k + 1) % n] }
    }

    /// Value and first-derivative continuity report at every breakpoint.
    pub fn c1_check(&self) -> C1Report {
        let n = self.breakpoints.len();
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let z = &self.breakpoints[k];
            let right = &self.pieces[k];
            let left = &self.pieces[(k + n - 1) % n];
            let value_gap = right.apply(z).dist(&left.apply(z));
            let deriv_gap = (right.derivative(z) - left.derivative(z)).abs();
            rows.push(C1Row { breakpoint: *z, value_gap, deriv_gap });
        }
        let ok = rows.iter().all(|r| r.value_gap <= TOL_GEO && r.deriv_gap <= 1e-8);
        C1Report { ok, rows }
    }

    /// `|ψ''_right − ψ''_left|` of the angle map at each breakpoint.
    pub fn c2_defect(&self) -> Vec<f64> {
        let n = self.breakpoints.len();
        (0..n)
            .map(|k| {
                let z = &self.breakpoints[k];
                let right = self.pieces[k].second_derivative(z);
                let left = self.pieces[(k + n - 1) % n].second_derivative(z);
                (right - left).abs()
            })
            .collect()
    }

    /// Strictly positive derivative everywhere (sampled per arc).
    pub fn derivative_positive(&self, samples_per_arc: usize) -> bool {
        let n = self.breakpoints.len().max(1);
        (0..n).all(|k| {
            let (start, len) = if self.breakpoints.is_empty() {
                (0.0, TAU)
            } else {
                let a = self.arc(k);
                (a.start.theta, a.length())
            };
            (0..samples_per_arc).all(|j| {
                let t = start + len * (j as f64 + 0.5) / samples_per_arc as f64;
                self.pieces[k].derivative(&CirclePoint::new(t)) > 0.0
            })
        })
    }

    /// Sup distance to another transformation over `m` uniform samples.
    pub fn sup_distance(&self, other: &PcwMobius, m: usize) -> f64 {
        (0..m)
            .map(|k| {
                let z = CirclePoint::new(TAU * k as f64 / m as f64);
                self.apply(&z).dist(&other.apply(&z))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct C1Row {
    pub breakpoint: CirclePoint,
    pub value_gap: f64,
    pub deriv_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct C1Report {
    pub ok: bool,
    pub rows: Vec<C1Row>,
}

/// Classification of a `C²` defect: above `1e−6` is a genuine kink, below
/// `1e−10` is smooth, in between is flagged rather than decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SmoothClass {
    Kink,
    Smooth,
    Ambiguous,
}

pub fn classify_defect(d: f64) -> SmoothClass {
    if d > 1e-6 {
        SmoothClass::Kink
    } else if d < 1e-10 {
        SmoothClass::Smooth
    } else {
        SmoothClass::Ambiguous
    }
}

// ---------------------------------------------------------------------------
// κ transformations
// ---------------------------------------------------------------------------

/// The two complementary arcs `K₁ = (I₁.end, I₂.start)`, `K₂ = (I₂.end,
/// I₁.start)` determined by two distant intervals.
pub fn complementary_arcs(i1: &Interval, i2: &Interval) -> Result<(Interval, Interval), PcwError> {
    if !i1.distant_from(i2) {
        return Err(PcwError::NotDistant);
    }
    let k1 = Interval::new(i1.end, i2.start).map_err(|_| PcwError::NotDistant)?;
    let k2 = Interval::new(i2.end, i1.start).map_err(|_| PcwError::NotDistant)?;
    Ok((k1, k2))
}

/// `κ^{I₁,I₂}_s`: the piecewise Möbius map equal to `δ^{I_j}_{+s}` on the
/// two distant intervals and to `δ^{K_j}_{−s}` on the complementary arcs.
/// `C¹` because interval dilations have derivative `e^{+s}` at start points
/// and `e^{−s}` at end points; not `C²` at the four endpoints when `s ≠ 0`.
pub fn kappa(i1: &Interval, i2: &Interval, s: f64) -> Result<PcwMobius, PcwError> {
    let (k1, k2) = complementary_arcs(i1, i2)?;
    if s == 0.0 {
        return Ok(PcwMobius::identity());
    }
    Ok(PcwMobius::from_arcs(vec![
        (i1.start, interval_dilation(i1, s)),
        (k1.start, interval_dilation(&k1, -s)),
        (i2.start, interval_dilation(i2, s)),
        (k2.start, interval_dilation(&k2, -s)),
    ]))
}

// ---------------------------------------------------------------------------
// Generator decomposition
// ---------------------------------------------------------------------------

/// One factor of a decomposition into the generating set: a global Möbius
/// transformation or a κ descriptor.
#[derive(Clone, Debug, Serialize)]
pub enum Factor {
    Mobius(MobiusElement),
    Kappa { i1: Interval, i2: Interval, s: f64 },
}

pub fn recompose(factors: &[Factor]) -> Result<PcwMobius, PcwError> {
    let mut acc = PcwMobius::identity();
    for f in factors {
        let next = match f {
            Factor::Mobius(g) => PcwMobius::from_mobius(*g),
            Factor::Kappa { i1, i2, s } => kappa(i1, i2, *s)?,
        };
        acc = acc.compose(&next);
    }
    Ok(acc)
}

/// Write `g` as a product of Möbius elements and κ factors, following the
/// inductive proof: normalize three consecutive breakpoints with a Möbius
/// adjustment, peel one κ factor whose fourth endpoint is the image of the
/// next breakpoint (so the κ kink lands on an existing one), recurse.
pub fn generator_decompose(g: &PcwMobius) -> Result<Vec<Factor>, PcwError> {
    let mut factors: Vec<Factor> = Vec::new();
    let mut current = g.merged();
    let mut guard = 0usize;
    let max_rounds = 2 * g.breakpoints.len().max(1) + 4;
    while !current.is_mobius() {
        guard += 1;
        if guard > max_rounds {
            return Err(PcwError::Decompose(format!(
                "no progress after {guard} rounds ({} breakpoints left)",
                current.breakpoints.len()
            )));
        }
        let m = current.breakpoints.len();
        if m < 4 {
            // C¹ with at most 3 kinks forces a Möbius map; the pieces must
            // agree and merging is legitimate.
            let forced = force_merge(&current)?;
            factors.push(Factor::Mobius(forced));
            return Ok(factors);
        }
        let mut done = false;
        for attempt in 0..m {
            let start = (best_window(&current) + attempt) % m;
            match peel_round(&current, start) {
                Ok((next, phi_inv, i1, i3, s)) if next.breakpoints.len() < m => {
                    factors.push(Factor::Mobius(phi_inv));
                    factors.push(Factor::Kappa { i1, i2: i3, s });
                    current = next;
                    done = true;
                    break;
                }
                _ => continue,
            }
        }
        if !done {
            return Err(PcwError::Decompose(format!(
                "every peel window failed at {m} breakpoints"
            )));
        }
    }
    factors.push(Factor::Mobius(current.pieces[0]));
    Ok(factors)
}

fn force_merge(g: &PcwMobius) -> Result<MobiusElement, PcwError> {
    let g0 = g.pieces[0];
    for p in &g.pieces {
        if g0.dist(p) > 1e-6 {
            return Err(PcwError::Decompose(
                "pieces with <4 breakpoints do not coincide; input violates the C1 invariant"
                    .into(),
            ));
        }
    }
    Ok(g0)
}

/// Starting index whose four consecutive breakpoints are best separated.
fn best_window(g: &PcwMobius) -> usize {
    let m = g.breakpoints.len();
    (0..m)
        .max_by(|&a, &b| window_min_gap(g, a).total_cmp(&window_min_gap(g, b)))
        .unwrap_or(0)
}

fn window_min_gap(g: &PcwMobius, start: usize) -> f64 {
    let m = g.breakpoints.len();
    (0..4)
        .map(|j| {
            let a = g.breakpoints[(start + j) % m].theta;
            let b = g.breakpoints[(start + j + 1) % m].theta;
            (b - a).rem_euclid(TAU)
        })
        .fold(f64::INFINITY, f64::min)
}

/// One peeling round at window `start`; returns the reduced transformation
/// and the factors `φ⁻¹`, `(I₁, I₃, s)` with `g = φ⁻¹ ∘ κ^{I₁,I₃}_s ∘ reduced`.
fn peel_round(
    g: &PcwMobius,
    start: usize,
) -> Result<(PcwMobius, MobiusElement, Interval, Interval, f64), PcwError> {
    let m = g.breakpoints.len();
    let z: Vec<CirclePoint> = (0..4).map(|j| g.breakpoints[(start + j) % m]).collect();
    let w: Vec<CirclePoint> = z.iter().take(3).map(|p| g.apply(p)).collect();
    let phi = interp3(&[w[0], w[1], w[2]], &[z[0], z[1], z[2]])?;
    let adjusted = PcwMobius::from_mobius(phi).compose(g);
    // adjusted fixes z₀,z₁,z₂ and preserves I₁=(z₀,z₁); its piece there is
    // the interval dilation whose parameter shows in the start derivative.
    let i1 = Interval::new(z[0], z[1]).map_err(|_| PcwError::Decompose("tiny arc".into()))?;
    let sample = i1.at(0.5);
    let s = adjusted.piece_at(&sample).derivative(&z[0]).ln();
    // Fourth κ endpoint: the adjusted image of z₃, so the κ kink cancels
    // against an existing breakpoint after composition.
    let e = adjusted.apply(&z[3]);
    let i3 = Interval::new(z[2], e).map_err(|_| PcwError::Decompose("tiny arc".into()))?;
    let kap = kappa(&i1, &i3, -s)?;
    let reduced = kap.compose(&adjusted).merged();
    Ok((reduced, phi.inverse(), i1, i3, s))
}

// ---------------------------------------------------------------------------
// Local N-transitivity
// ---------------------------------------------------------------------------

/// A piecewise Möbius map sending `src[n] ↦ dst[n]`; when `within` is given
/// both point families must lie in it and the result acts identically on its
/// complement. Points are moved one at a time by the localized one-parameter
/// family `β_s = κ^{I₁,K^c}_s ∘ δ^K_s`, the parameter found by bracket
/// expansion and bisection.
pub fn interpolate_points(
    src: &[CirclePoint],
    dst: &[CirclePoint],
    within: Option<Interval>,
) -> Result<PcwMobius, PcwError> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(PcwError::BadPoints);
    }
    if !anticlockwise(src) || !anticlockwise(dst) {
        return Err(PcwError::BadPoints);
    }
    match within {
        Some(i) => {
            for p in src.iter().chain(dst.iter()) {
                if !i.contains(p) {
                    return Err(PcwError::NotLocalized);
                }
            }
            interpolate_localized(src, dst, &i)
        }
        None => {
            if src.len() == 1 {
                let rot = crate::mobius::rotation(dst[0].theta - src[0].theta);
                return Ok(PcwMobius::from_mobius(rot));
            }
            // Align the spans with a Möbius factor, then solve locally.
            let n = src.len();
            let gap_src = Interval::new(src[n - 1], src[0]).map_err(|_| PcwError::BadPoints)?;
            let gap_dst = Interval::new(dst[n - 1], dst[0]).map_err(|_| PcwError::BadPoints)?;
            let phi = interp3(
                &[src[n - 1], gap_src.midpoint(), src[0]],
                &[dst[n - 1], gap_dst.midpoint(), dst[0]],
            )?;
            let moved: Vec<CirclePoint> = src.iter().map(|p| phi.apply(p)).collect();
            let mid = gap_dst.midpoint();
            let margin = 0.25 * closest_gap(&moved, dst, &mid);
            let hole = Interval::from_angles(mid.theta - margin, mid.theta + margin)
                .map_err(|_| PcwError::BadPoints)?;
            let local = interpolate_localized(&moved, dst, &hole.complement())?;
            Ok(local.compose(&PcwMobius::from_mobius(phi)))
        }
    }
}

fn closest_gap(a: &[CirclePoint], b: &[CirclePoint], mid: &CirclePoint) -> f64 {
    a.iter().chain(b.iter()).map(|p| p.dist(mid)).fold(PI, f64::min).max(1e-6)
}

fn interpolate_localized(
    src: &[CirclePoint],
    dst: &[CirclePoint],
    within: &Interval,
) -> Result<PcwMobius, PcwError> {
    let mut gamma = PcwMobius::identity();
    let len = within.length();
    let pos = |p: &CirclePoint| (p.theta - within.start.theta).rem_euclid(TAU);
    for n in 0..src.len() {
        let current = gamma.apply(&src[n]);
        let target = dst[n];
        if current.dist(&target) <= 1e-13 {
            continue;
        }
        // Work strictly past the already-placed targets.
        let placed = if n == 0 { 0.0 } else { pos(&dst[n - 1]) };
        let lo = placed + 0.25 * (pos(&current).min(pos(&target)) - placed);
        let hi = 0.5 * (pos(&current).max(pos(&target)) + len);
        let k = Interval::from_angles(within.start.theta + lo, within.start.theta + hi)
            .map_err(|_| PcwError::BadPoints)?;
        let mover = move_one_point(&current, &target, &k)?;
        gamma = mover.compose(&gamma);
    }
    Ok(gamma)
}

/// The one-point mover of the localized transitivity lemma: find `s` with
/// `β_s(from) = to`, `β_s = κ^{I₁,K^c}_s ∘ δ^K_s`, identity on `K^c`.
pub fn move_one_point(
    from: &CirclePoint,
    to: &CirclePoint,
    k: &Interval,
) -> Result<PcwMobius, PcwError> {
    debug_assert!(k.contains(from) && k.contains(to));
    let len = k.length();
    let pos = |p: &CirclePoint| (p.theta - k.start.theta).rem_euclid(TAU);
    let (a, b) = (pos(from).min(pos(to)), pos(from).max(pos(to)));
    // Inner interval distant from K^c containing both points.
    let i1 = Interval::from_angles(k.start.theta + 0.5 * a, k.start.theta + 0.5 * (b + len))
        .map_err(|_| PcwError::BadPoints)?;
    let kc = k.complement();
    let beta = |s: f64| -> Result<PcwMobius, PcwError> {
        if s == 0.0 {
            return Ok(PcwMobius::identity());
        }
        let kap = kappa(&i1, &kc, s)?;
        let dil = PcwMobius::from_mobius(interval_dilation(k, s));
        Ok(kap.compose(&dil))
    };
    // Signed offset of β_s(from) from the target, measured inside K.
    let offset = |s: f64| -> Result<f64, PcwError> {
        Ok(pos(&beta(s)?.apply(from)) - pos(to))
    };
    let f0 = offset(0.0)?;
    if f0 == 0.0 {
        return beta(0.0);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (mut s_lo, mut s_hi) = (0.0f64, 0.0f64);
    let mut step = 0.5;
    let mut found = false;
    for _ in 0..60 {
        let cand = dir * step;
        let fc = offset(cand)?;
        if fc == 0.0 {
            return beta(cand);
        }
        if fc.signum() != f0.signum() {
            s_lo = cand.min(0.0);
            s_hi = cand.max(0.0);
            found = true;
            break;
        }
        step *= 2.0;
    }
    if !found {
        return Err(PcwError::Bisection);
    }
    let mut best = 0.5 * (s_lo + s_hi);
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        best = mid;
        let fm = offset(mid)?;
        if fm == 0.0 || (s_hi - s_lo) < 1e-15 {
            break;
        }
        if fm.signum() == offset(s_lo)?.signum() {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
        if beta(mid)?.apply(from).dist(to) < 1e-13 {
            break;
        }
    }
    beta(best)
}

// ---------------------------------------------------------------------------
// PcwField
// ---------------------------------------------------------------------------

/// A piecewise Möbius vector field: arcwise in the span of `{1, cosθ, sinθ}`,
/// `C¹` across breakpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcwField {
    pub breakpoints: Vec<CirclePoint>,
    pub pieces: Vec<MobiusField>,
}

impl PcwField {
    pub fn from_field(f: MobiusField) -> Self {
        PcwField { breakpoints: Vec::new(), pieces: vec![f] }
    }

    pub fn zero() -> Self {
        PcwField::from_field(MobiusField::zero())
    }

    pub fn from_arcs(mut arcs: Vec<(CirclePoint, MobiusField)>) -> Self {
        arcs.sort_by(|x, y| x.0.theta.total_cmp(&y.0.theta));
        PcwField {
            breakpoints: arcs.iter().map(|a| a.0).collect(),
            pieces: arcs.iter().map(|a| a.1).collect(),
        }
    }

    fn piece_index(&self, z: &CirclePoint) -> usize {
        let n = self.breakpoints.len();
        if n == 0 {
            return 0;
        }
        match self.breakpoints.iter().rposition(|b| b.theta <= z.theta + 1e-15) {
            Some(k) => k,
            None => n - 1,
        }
    }

    pub fn piece_at(&self, z: &CirclePoint) -> &MobiusField {
        &self.pieces[self.piece_index(z)]
    }

    pub fn eval(&self, z: &CirclePoint) -> f64 {
        self.piece_at(z).eval(z)
    }

    pub fn eval_deriv(&self, z: &CirclePoint) -> f64 {
        self.piece_at(z).eval_deriv(z)
    }

    pub fn is_global(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn merged(&self) -> PcwField {
        let n = self.breakpoints.len();
        if n == 0 {
            return self.clone();
        }
        let close = |x: &MobiusField, y: &MobiusField| x.sub(y).norm() <= 1e-9;
        let mut keep: Vec<(CirclePoint, MobiusField)> = Vec::new();
        for k in 0..n {
            let prev = (k + n - 1) % n;
            if !close(&self.pieces[k], &self.pieces[prev]) {
                keep.push((self.breakpoints[k], self.pieces[k]));
            }
        }
        if keep.is_empty() {
            PcwField::from_field(self.pieces[0])
        } else {
            PcwField::from_arcs(keep)
        }
    }

    /// Pointwise `self + λ·other` on the refined arc structure.
    pub fn add_scaled(&self, other: &PcwField, lambda: f64) -> PcwField {
        let mut cuts: Vec<CirclePoint> =
            self.breakpoints.iter().chain(other.breakpoints.iter()).copied().collect();
        if cuts.is_empty() {
            return PcwField::from_field(self.pieces[0].add(&other.pieces[0].scale(lambda)));
        }
        cuts.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        cuts.dedup_by(|a, b| a.dist(b) <= TOL_GEO);
        let m = cuts.len();
        let arcs: Vec<(CirclePoint, MobiusField)> = (0..m)
            .map(|k| {
                let gap = (cuts[(k + 1) % m].theta - cuts[k].theta).rem_euclid(TAU);
                let gap = if gap == 0.0 { TAU } else { gap };
                let sample = CirclePoint::new(cuts[k].theta + 0.5 * gap);
                (cuts[k], self.piece_at(&sample).add(&other.piece_at(&sample).scale(lambda)))
            })
            .collect();
        PcwField::from_arcs(arcs).merged()
    }

    pub fn sub_field(&self, g: &MobiusField) -> PcwField {
        self.add_scaled(&PcwField::from_field(*g), -1.0)
    }

    pub fn scale(&self, r: f64) -> PcwField {
        PcwField {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(r)).collect(),
        }
    }

    /// Adjoint action of a Möbius transformation: breakpoints move through
    /// `φ`, each arc field is pushed forward.
    pub fn pushforward(&self, phi: &MobiusElement) -> PcwField {
        if self.breakpoints.is_empty() {
            return PcwField::from_field(self.pieces[0].pushforward(phi));
        }
        let arcs: Vec<(CirclePoint, MobiusField)> = (0..self.breakpoints.len())
            .map(|k| (phi.apply(&self.breakpoints[k]), self.pieces[k].pushforward(phi)))
            .collect();
        PcwField::from_arcs(arcs)
    }

    /// `(1/2π) ∮ f dθ`, exact per-arc antiderivatives.
    pub fn mean(&self) -> f64 {
        let n = self.breakpoints.len();
        if n == 0 {
            return self.pieces[0].c0;
        }
        let mut total = 0.0;
        for k in 0..n {
            let a = self.breakpoints[k].theta;
            let len = (self.breakpoints[(k + 1) % n].theta - a).rem_euclid(TAU);
            let len = if len == 0.0 { TAU } else { len };
            let p = &self.pieces[k];
            let prim = |t: f64| p.c0 * t + p.c1 * t.sin() - p.c2 * t.cos();
            total += prim(a + len) - prim(a);
        }
        total / TAU
    }

    /// Minimum over the circle from per-piece closed forms (endpoints plus
    /// the interior critical points of `c1 cos θ + c2 sin θ`).
    pub fn exact_min(&self) -> f64 {
        let n = self.breakpoints.len().max(1);
        let mut best = f64::INFINITY;
        for k in 0..n {
            let (a, len) = if self.breakpoints.is_empty() {
                (0.0, TAU)
            } else {
                let t = self.breakpoints[k].theta;
                let l = (self.breakpoints[(k + 1) % n].theta - t).rem_euclid(TAU);
                (t, if l == 0.0 { TAU } else { l })
            };
            let p = &self.pieces[k];
            let f = |t: f64| p.c0 + p.c1 * t.cos() + p.c2 * t.sin();
            best = best.min(f(a)).min(f(a + len));
            let base = (-p.c2).atan2(-p.c1);
            for cand in [base, base + PI] {
                let off = (cand - a).rem_euclid(TAU);
                if off < len {
                    best = best.min(f(a + off));
                }
            }
        }
        best
    }

    pub fn min_on_grid(&self, m: usize) -> f64 {
        (0..m)
            .map(|k| self.eval(&CirclePoint::new(TAU * k as f64 / m as f64)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Value and first-derivative continuity at the breakpoints.
    pub fn c1_check(&self) -> C1Report {
        let n = self.breakpoints.len();
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let z = &self.breakpoints[k];
            let right = &self.pieces[k];
            let left = &self.pieces[(k + n - 1) % n];
            rows.push(C1Row {
                breakpoint: *z,
                value_gap: (right.eval(z) - left.eval(z)).abs(),
                deriv_gap: (right.eval_deriv(z) - left.eval_deriv(z)).abs(),
            });
        }
        let ok = rows.iter().all(|r| r.value_gap <= 1e-8 && r.deriv_gap <= 1e-7);
        C1Report { ok, rows }
    }
}

/// `a^{I₁,I₂} = d/ds κ^{I₁,I₂}_s |_{s=0}`: equal to `d^{I_j}` on the distant
/// intervals and `−d^{K_j}` on the complementary arcs; `C¹` because `(d^I)'`
/// is `+1` at interval starts and `−1` at ends.
pub fn kappa_field(i1: &Interval, i2: &Interval) -> Result<PcwField, PcwError> {
    let (k1, k2) = complementary_arcs(i1, i2)?;
    Ok(PcwField::from_arcs(vec![
        (i1.start, interval_dilation_field(i1)),
        (k1.start, interval_dilation_field(&k1).scale(-1.0)),
        (i2.start, interval_dilation_field(i2)),
        (k2.start, interval_dilation_field(&k2).scale(-1.0)),
    ]))
}

/// A nonnegative piecewise Möbius field supported in `I` with mean one:
/// a Möbius-transported copy of `a^{I₁,I₂} − d^{I₁}` (zero on `I₁`, strictly
/// positive elsewhere), normalized to unit mean.
pub fn bump_field(i: &Interval) -> Result<PcwField, PcwError> {
    let i1 = Interval::lower();
    let i2 = Interval::from_angles(PI / 4.0, 3.0 * PI / 4.0).unwrap();
    let base = kappa_field(&i1, &i2)?.sub_field(&interval_dilation_field(&i1));
    let phi = interp3(
        &[CirclePoint::new(0.0), CirclePoint::new(PI / 2.0), CirclePoint::new(PI)],
        &[i.at(0.1), i.at(0.5), i.at(0.9)],
    )?;
    let moved = base.pushforward(&phi);
    let mean = moved.mean();
    debug_assert!(mean > 0.0);
    Ok(moved.scale(1.0 / mean))
}

// ---------------------------------------------------------------------------
// Span decomposition of piecewise fields
// ---------------------------------------------------------------------------

/// One κ-field term of a span decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct KappaFieldTerm {
    pub i1: Interval,
    pub i2: Interval,
    pub lambda: f64,
}

/// `a^{I₁,I₂} = −a^{K₁,K₂}` for the complementary pair, so every term has
/// two equivalent forms. Canonical form: `i1` starts at the smallest-angle
/// endpoint of the four.
fn canonical_term(i1: Interval, i2: Interval, lambda: f64) -> KappaFieldTerm {
    let candidates = [
        (i1, i2, lambda),
        (i2, i1, lambda),
        (Interval { start: i1.end, end: i2.start }, Interval { start: i2.end, end: i1.start }, -lambda),
        (Interval { start: i2.end, end: i1.start }, Interval { start: i1.end, end: i2.start }, -lambda),
    ];
    let best = candidates
        .iter()
        .min_by(|x, y| x.0.start.theta.total_cmp(&y.0.start.theta))
        .unwrap();
    KappaFieldTerm { i1: best.0, i2: best.1, lambda: best.2 }
}

/// Write `f = g + Σ λ_k a^{I₁ᵏ,I₂ᵏ}` with `g` a global Möbius field,
/// peeling one κ-field term per round after matching three breakpoint
/// values with a Möbius field.
pub fn field_span_decompose(f: &PcwField) -> Result<(MobiusField, Vec<KappaFieldTerm>), PcwError> {
    let mut global = MobiusField::zero();
    let mut terms: Vec<KappaFieldTerm> = Vec::new();
    let mut rest = f.merged();
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 2 * f.breakpoints.len().max(1) + 4 {
            return Err(PcwError::Decompose("field span peeling stalled".into()));
        }
        if rest.is_global() {
            return Ok((global.add(&rest.pieces[0]), terms));
        }
        let m = rest.breakpoints.len();
        if m < 4 {
            let p0 = rest.pieces[0];
            for p in &rest.pieces {
                if p.sub(&p0).norm() > 1e-6 {
                    return Err(PcwError::Decompose(
                        "field with <4 breakpoints has unequal pieces".into(),
                    ));
                }
            }
            return Ok((global.add(&p0), terms));
        }
        let start = best_field_window(&rest);
        let z: Vec<CirclePoint> = (0..4).map(|j| rest.breakpoints[(start + j) % m]).collect();
        let g = mobius_field_through(
            &z[0],
            &z[1],
            &z[2],
            [rest.eval(&z[0]), rest.eval(&z[1]), rest.eval(&z[2])],
        )?;
        let reduced = rest.sub_field(&g);
        // reduced vanishes at z₀,z₁,z₂; on I₁=(z₀,z₁) it is λ·d^{I₁}.
        let i1 = Interval::new(z[0], z[1]).map_err(|_| PcwError::Decompose("tiny arc".into()))?;
        let i2 = Interval::new(z[2], z[3]).map_err(|_| PcwError::Decompose("tiny arc".into()))?;
        let d1 = interval_dilation_field(&i1);
        let mid = i1.at(0.5);
        let lambda = reduced.eval(&mid) / d1.eval(&mid);
        let next = reduced.add_scaled(&kappa_field(&i1, &i2)?, -lambda).merged();
        if next.breakpoints.len() >= m {
            return Err(PcwError::Decompose(format!(
                "field breakpoints did not drop ({} -> {})",
                m,
                next.breakpoints.len()
            )));
        }
        global = global.add(&g);
        terms.push(canonical_term(i1, i2, lambda));
        rest = next;
    }
}

fn best_field_window(f: &PcwField) -> usize {
    let m = f.breakpoints.len();
    (0..m)
        .max_by(|&a, &b| field_window_min_gap(f, a).total_cmp(&field_window_min_gap(f, b)))
        .unwrap_or(0)
}

fn field_window_min_gap(f: &PcwField, start: usize) -> f64 {
    let m = f.breakpoints.len();
    (0..4)
        .map(|j| {
            let a = f.breakpoints[(start + j) % m].theta;
            let b = f.breakpoints[(start + j + 1) % m].theta;
            (b - a).rem_euclid(TAU)
        })
        .fold(f64::INFINITY, f64::min)
}

/// The unique Möbius field taking prescribed values at three distinct
/// points: a 3×3 solve in the `{1, cosθ, sinθ}` coordinates.
pub fn mobius_field_through(
    z1: &CirclePoint,
    z2: &CirclePoint,
    z3: &CirclePoint,
    values: [f64; 3],
) -> Result<MobiusField, PcwError> {
    let thetas = [z1.theta, z2.theta, z3.theta];
    let mut m = [[0.0f64; 3]; 3];
    for (r, t) in thetas.iter().enumerate() {
        m[r] = [1.0, t.cos(), t.sin()];
    }
    let det = det3(&m);
    if det.abs() < 1e-12 {
        return Err(PcwError::BadPoints);
    }
    let mut cols = [0.0f64; 3];
    for c in 0..3 {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = values[r];
        }
        cols[c] = det3(&mc) / det;
    }
    Ok(MobiusField::new(cols[0], cols[1], cols[2]))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

// ---------------------------------------------------------------------------
// Density: mollified Riemann-sum approximants
// ---------------------------------------------------------------------------

/// The three fixed smooth test fields used by the density checks,
/// truncated by spectral projection.
pub fn density_test_fields() -> Vec<(&'static str, FourierFunction)> {
    vec![
        ("cos_exp_sin", FourierFunction::project(|t| t.cos() * t.sin().exp(), 12, 512)),
        ("poisson_kernel", FourierFunction::project(|t| 1.0 / (2.0 + t.cos()), 12, 512)),
        (
            "low_trig",
            FourierFunction::project(|t| 0.5 + 0.3 * (2.0 * t).sin() + 0.2 * (3.0 * t).cos(), 12, 512),
        ),
    ]
}

/// One step of the density construction.
#[derive(Debug)]
pub struct ApproxStep {
    pub samples: usize,
    pub field: PcwField,
    pub error: f64,
}

/// Piecewise Möbius approximants of a real circle function with finite
/// `‖·‖₃⁄₂` norm: convolve with a shrinking nonnegative mollifier built from
/// [`bump_field`] around `1 ∈ S¹`, discretized as the `N`-term Riemann sum
/// of rotated bump copies; reports `‖f − h_N‖₃⁄₂` per step.
pub fn approx_field(f: &FourierFunction, steps: &[usize]) -> Result<Vec<ApproxStep>, PcwError> {
    let mut out = Vec::with_capacity(steps.len());
    for &n in steps {
        let n = n.max(4);
        let half_width = (PI / 2.0) / n as f64;
        let window =
            Interval::from_angles(-half_width, half_width).map_err(|_| PcwError::BadPoints)?;
        let bump = bump_field(&window)?;
        let bump_hat = crate::fourier::fourier_of_pcw_field(&bump, f.n_max());
        // h_N(z) = (1/N) Σ_k f(θ_k) · bump(e^{−iθ_k} z)
        let mut acc: Option<PcwField> = None;
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let theta_k = TAU * k as f64 / n as f64;
            let weight = f.eval(&CirclePoint::new(theta_k)) / n as f64;
            weights.push((theta_k, weight));
            if weight == 0.0 {
                continue;
            }
            let rotated = bump.pushforward(&crate::mobius::rotation(theta_k));
            acc = Some(match acc {
                None => rotated.scale(weight),
                Some(a) => a.add_scaled(&rotated, weight),
            });
        }
        let field = acc.unwrap_or_else(PcwField::zero);
        // Error in Fourier space: ĥ_N(m) = bump̂(m) · Σ_k w_k e^{−imθ_k}.
        let mut err = 0.0;
        for m in -f.n_max()..=f.n_max() {
            let mut dft = num_complex::Complex64::new(0.0, 0.0);
            for &(theta_k, w) in &weights {
                dft += num_complex::Complex64::from_polar(1.0, -(m as f64) * theta_k) * w;
            }
            let h_hat = bump_hat.coeff(m) * dft;
            err += (f.coeff(m) - h_hat).norm() * (1.0 + (m.abs() as f64).powf(1.5));
        }
        out.push(ApproxStep { samples: n, field, error: err });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::{dilation, rotation, translation};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_distant_pair(rng: &mut impl Rng) -> (Interval, Interval) {
        loop {
            let mut t: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TAU)).collect();
            t.sort_by(f64::total_cmp);
            let mut gaps_ok = true;
            for k in 0..4 {
                let next = if k == 3 { t[0] + TAU } else { t[k + 1] };
                if next - t[k] < 0.35 {
                    gaps_ok = false;
                }
            }
            if !gaps_ok {
                continue;
            }
            let i1 = Interval::from_angles(t[0], t[1]).unwrap();
            let i2 = Interval::from_angles(t[2], t[3]).unwrap();
            assert!(i1.distant_from(&i2));
            return (i1, i2);
        }
    }

    #[test]
    fn kappa_zero_is_identity() {
        let i1 = Interval::from_angles(0.2, 1.0).unwrap();
        let i2 = Interval::from_angles(2.0, 3.0).unwrap();
        assert!(kappa(&i1, &i2, 0.0).unwrap().is_mobius());
    }

    #[test]
    fn kappa_rejects_overlapping_intervals() {
        let i1 = Interval::from_angles(0.0, 2.0).unwrap();
        let i2 = Interval::from_angles(1.0, 3.0).unwrap();
        assert!(matches!(kappa(&i1, &i2, 1.0), Err(PcwError::NotDistant)));
    }

    #[test]
    fn kappa_is_c1_with_expected_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let (i1, i2) = random_distant_pair(&mut rng);
            let s = rng.gen_range(-1.5..1.5);
            let k = kappa(&i1, &i2, s).unwrap();
            let rep = k.c1_check();
            assert!(rep.ok, "c1 failure: {rep:?}");
            assert!(k.derivative_positive(32));
            assert_abs_diff_eq!(
                k.derivative(&i1.start),
                s.exp(),
                epsilon = 1e-8 * s.exp().max(1.0)
            );
            assert_abs_diff_eq!(
                k.piece_at(&i1.at(0.5)).derivative(&i1.end),
                (-s).exp(),
                epsilon = 1e-8 * (-s).exp().max(1.0)
            );
        }
    }

    #[test]
    fn kappa_has_exactly_four_kinks() {
        let i1 = Interval::from_angles(0.3, 1.2).unwrap();
        let i2 = Interval::from_angles(2.4, 4.0).unwrap();
        let k = kappa(&i1, &i2, 1.0).unwrap();
        let defects = k.c2_defect();
        assert_eq!(defects.len(), 4);
        for d in &defects {
            assert_eq!(classify_defect(*d), SmoothClass::Kink, "defect {d}");
        }
    }

    #[test]
    fn pure_mobius_split_at_three_points_has_zero_defects() {
        let g = translation(0.8).compose(&dilation(-0.5));
        let split = PcwMobius::from_arcs(vec![
            (CirclePoint::new(0.5), g),
            (CirclePoint::new(2.0), g),
            (CirclePoint::new(4.0), g),
        ]);
        for d in split.c2_defect() {
            assert_eq!(classify_defect(d), SmoothClass::Smooth);
        }
        assert!(split.merged().is_mobius());
        assert!(split.c1_check().ok);
        assert!(PcwMobius::identity().c2_defect().is_empty());
    }

    #[test]
    fn kappa_one_parameter_group_in_piece_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (i1, i2) = random_distant_pair(&mut rng);
            let (s, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let ks = kappa(&i1, &i2, s).unwrap();
            let kt = kappa(&i1, &i2, t).unwrap();
            let kst = kappa(&i1, &i2, s + t).unwrap();
            let prod = ks.compose(&kt);
            assert_eq!(prod.breakpoints.len(), 4);
            for b in prod.breakpoints.iter() {
                let probe = CirclePoint::new(b.theta + 1e-6);
                assert!(prod.piece_at(&probe).dist(kst.piece_at(&probe)) < 1e-11);
            }
        }
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let i1 = Interval::from_angles(0.1, 1.1).unwrap();
        let i2 = Interval::from_angles(2.2, 3.9).unwrap();
        let k = kappa(&i1, &i2, 0.8).unwrap();
        let prod = k.compose(&k.inverse());
        assert!(prod.is_mobius());
        assert!(prod.pieces[0].is_identity());
        let g = PcwMobius::from_mobius(rotation(1.0));
        let h = PcwMobius::from_mobius(dilation(0.3));
        assert!(g.compose(&h).is_mobius());
    }

    #[test]
    fn generator_decompose_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = PcwMobius::from_mobius(translation(0.7));
        let f = generator_decompose(&g).unwrap();
        assert_eq!(f.len(), 1);
        assert!(recompose(&f).unwrap().sup_distance(&g, 100) < 1e-12);

        let (i1, i2) = random_distant_pair(&mut rng);
        let k = kappa(&i1, &i2, 0.9).unwrap();
        let fk = generator_decompose(&k).unwrap();
        assert!(recompose(&fk).unwrap().sup_distance(&k, 200) < 1e-9);

        for round in 0..10 {
            let (i1, i2) = random_distant_pair(&mut rng);
            let (j1, j2) = random_distant_pair(&mut rng);
            let g = kappa(&i1, &i2, rng.gen_range(-0.8..0.8))
                .unwrap()
                .compose(&PcwMobius::from_mobius(rotation(rng.gen_range(0.0..TAU))))
                .compose(&kappa(&j1, &j2, rng.gen_range(-0.8..0.8)).unwrap());
            let factors = generator_decompose(&g).unwrap();
            let err = recompose(&factors).unwrap().sup_distance(&g, 200);
            assert!(err < 1e-9, "round {round}: sup error {err}");
        }
    }

    #[test]
    fn interpolate_single_point_localized() {
        let i = Interval::from_angles(0.5, 3.0).unwrap();
        let z0 = CirclePoint::new(1.0);
        let z1 = CirclePoint::new(2.2);
        let g = interpolate_points(&[z0], &[z1], Some(i)).unwrap();
        assert!(g.apply(&z0).dist(&z1) < 1e-10);
        for t in [3.5, 4.5, 5.5, 0.2] {
            let z = CirclePoint::new(t);
            assert!(g.apply(&z).dist(&z) < 1e-10, "moved outside point at {t}");
        }
        assert!(g.c1_check().ok);
    }

    #[test]
    fn interpolate_identity_when_src_equals_dst() {
        let pts: Vec<CirclePoint> = [0.4, 1.3, 2.6].iter().map(|&t| CirclePoint::new(t)).collect();
        let g = interpolate_points(&pts, &pts, None).unwrap();
        for p in &pts {
            assert!(g.apply(p).dist(p) < 1e-10);
        }
    }

    #[test]
    fn interpolate_five_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut done = 0;
        while done < 5 {
            let mut s: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..TAU)).collect();
            let mut d: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..TAU)).collect();
            s.sort_by(f64::total_cmp);
            d.sort_by(f64::total_cmp);
            if s.windows(2).any(|w| w[1] - w[0] < 0.25)
                || d.windows(2).any(|w| w[1] - w[0] < 0.25)
                || (TAU - s[4] + s[0]) < 0.25
                || (TAU - d[4] + d[0]) < 0.25
            {
                continue;
            }
            done += 1;
            let src: Vec<CirclePoint> = s.iter().map(|&t| CirclePoint::new(t)).collect();
            let dst: Vec<CirclePoint> = d.iter().map(|&t| CirclePoint::new(t)).collect();
            let g = interpolate_points(&src, &dst, None).unwrap();
            for (a, b) in src.iter().zip(dst.iter()) {
                assert!(g.apply(a).dist(b) < TOL_GEO, "miss: {} -> {}", a.theta, b.theta);
            }
        }
    }

    #[test]
    fn kappa_field_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (i1, i2) = random_distant_pair(&mut rng);
        let a = kappa_field(&i1, &i2).unwrap();
        assert!(a.c1_check().ok, "{:?}", a.c1_check());
        let h = 1e-5;
        let kh = kappa(&i1, &i2, h).unwrap();
        for _ in 0..40 {
            let z = CirclePoint::new(rng.gen_range(0.0..TAU));
            let displaced = kh.apply(&z);
            let delta = (displaced.theta - z.theta + PI).rem_euclid(TAU) - PI;
            assert!(
                (delta / h - a.eval(&z)).abs() < 20.0 * h,
                "finite difference mismatch at θ={}",
                z.theta
            );
        }
        assert_abs_diff_eq!(a.eval(&i1.start), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.eval(&i1.end), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bump_field_nonnegative_unit_mean_supported() {
        let i = Interval::from_angles(1.0, 2.8).unwrap();
        let b = bump_field(&i).unwrap();
        assert!(b.exact_min() >= -1e-12, "min {}", b.exact_min());
        assert!(b.min_on_grid(4096) >= -1e-12);
        assert_abs_diff_eq!(b.mean(), 1.0, epsilon = 1e-10);
        let comp = i.complement();
        for k in 0..64 {
            let z = comp.at((k as f64 + 0.5) / 64.0);
            assert_abs_diff_eq!(b.eval(&z), 0.0, epsilon = 1e-10);
        }
        assert!(b.c1_check().ok);
    }

    #[test]
    fn base_bump_positive_off_support_interval() {
        // a^{I₁,I₂} − d^{I₁} with I₁ = S¹₋: zero on I₁, positive elsewhere.
        let i1 = Interval::lower();
        let i2 = Interval::from_angles(PI / 4.0, 3.0 * PI / 4.0).unwrap();
        let f = kappa_field(&i1, &i2).unwrap().sub_field(&interval_dilation_field(&i1));
        for k in 1..32 {
            let z = i1.at(k as f64 / 32.0);
            assert_abs_diff_eq!(f.eval(&z), 0.0, epsilon = 1e-10);
        }
        for arc in [
            Interval::from_angles(0.0, PI / 4.0).unwrap(),
            i2,
            Interval::from_angles(3.0 * PI / 4.0, PI).unwrap(),
        ] {
            for k in 1..16 {
                assert!(f.eval(&arc.at(k as f64 / 16.0)) > 0.0);
            }
        }
    }

    #[test]
    fn field_span_decompose_exact_per_piece() {
        let g = MobiusField::new(0.3, -0.7, 0.2);
        let (g0, terms) = field_span_decompose(&PcwField::from_field(g)).unwrap();
        assert!(terms.is_empty());
        assert!(g0.sub(&g).norm() < 1e-12);

        let i1 = Interval::from_angles(0.4, 1.3).unwrap();
        let i2 = Interval::from_angles(2.5, 4.2).unwrap();
        let a = kappa_field(&i1, &i2).unwrap();
        let (g0, terms) = field_span_decompose(&a).unwrap();
        assert!(g0.norm() < 1e-9);
        assert_eq!(terms.len(), 1);
        assert_abs_diff_eq!(terms[0].lambda, 1.0, epsilon = 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..5 {
            let (i1, i2) = random_distant_pair(&mut rng);
            let (j1, j2) = random_distant_pair(&mut rng);
            let f = kappa_field(&i1, &i2)
                .unwrap()
                .scale(rng.gen_range(-2.0..2.0))
                .add_scaled(&kappa_field(&j1, &j2).unwrap(), rng.gen_range(-2.0..2.0))
                .add_scaled(
                    &PcwField::from_field(MobiusField::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )),
                    1.0,
                );
            let (g0, terms) = field_span_decompose(&f).unwrap();
            let mut rec = PcwField::from_field(g0);
            for t in &terms {
                rec = rec.add_scaled(&kappa_field(&t.i1, &t.i2).unwrap(), t.lambda);
            }
            for k in 0..200 {
                let z = CirclePoint::new(TAU * k as f64 / 200.0);
                assert!(
                    (rec.eval(&z) - f.eval(&z)).abs() < 1e-8,
                    "pointwise mismatch {}",
                    (rec.eval(&z) - f.eval(&z)).abs()
                );
            }
        }
    }

    #[test]
    fn mobius_field_three_point_interpolation() {
        let z1 = CirclePoint::new(0.3);
        let z2 = CirclePoint::new(2.0);
        let z3 = CirclePoint::new(4.4);
        let g = mobius_field_through(&z1, &z2, &z3, [1.0, -0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(g.eval(&z1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.eval(&z2), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.eval(&z3), 0.25, epsilon = 1e-12);
    }
}
