//! Exact geometry of the Möbius group acting on the unit circle.
//!
//! A Möbius transformation of `S¹` is `φ_{a,b}: z ↦ (az+b)/(b̄z+ā)` with
//! `|a|²−|b|² = 1`; the pair `(a,b)` is kept in a canonical sign so equality
//! is testable. The module provides composition, one-parameter subgroups,
//! dilations associated to an interval, the Cayley transform, unique
//! interpolation through three points, the Iwasawa decomposition and the
//! exponential of Möbius vector fields.
//!
//! Orientation conventions (fixed once, used everywhere):
//! * angles increase anticlockwise, `rotation(α): z ↦ e^{iα}z`;
//! * an [`Interval`] is the open arc swept anticlockwise from `start` to
//!   `end`; travelling anticlockwise one meets `start`, the interior, `end`;
//! * the dilation flow satisfies `δ_s'(+1) = e^{+s}` and `δ_s'(−1) = e^{−s}`,
//!   so the dilation of an interval has derivative `e^{+s}` at its start
//!   point; the generating field is `d(θ) = sin θ` with `d'(±1) = ±1`.

use crate::{TOL_GEO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, thiserror::Error)]
pub enum MobiusError {
    #[error("the Cayley transform is undefined at z = 1")]
    CayleyAtOne,
    #[error("interpolation points must be distinct and anticlockwise ordered")]
    BadTriple,
    #[error("interval endpoints must be distinct")]
    DegenerateInterval,
}

// ---------------------------------------------------------------------------
// Points and intervals
// ---------------------------------------------------------------------------

/// A point of the unit circle, stored as an angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CirclePoint {
    pub theta: f64,
}

impl CirclePoint {
    pub fn new(theta: f64) -> Self {
        CirclePoint { theta: normalize_angle(theta) }
    }

    pub fn from_z(z: Complex64) -> Self {
        CirclePoint::new(z.arg())
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// Distance along the circle (shorter arc), in radians.
    pub fn dist(&self, other: &CirclePoint) -> f64 {
        let d = (self.theta - other.theta).rem_euclid(TAU);
        d.min(TAU - d)
    }

    pub fn approx_eq(&self, other: &CirclePoint) -> bool {
        self.dist(other) <= TOL_GEO
    }
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Open, nonempty, nondense arc, swept anticlockwise from `start` to `end`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Interval {
    pub start: CirclePoint,
    pub end: CirclePoint,
}

impl Interval {
    pub fn new(start: CirclePoint, end: CirclePoint) -> Result<Self, MobiusError> {
        if start.dist(&end) <= TOL_GEO {
            return Err(MobiusError::DegenerateInterval);
        }
        Ok(Interval { start, end })
    }

    pub fn from_angles(a: f64, b: f64) -> Result<Self, MobiusError> {
        Interval::new(CirclePoint::new(a), CirclePoint::new(b))
    }

    /// The upper semicircle `S¹₊ = {Im z > 0}`, start `1`, end `−1`.
    pub fn upper() -> Self {
        Interval { start: CirclePoint::new(0.0), end: CirclePoint::new(PI) }
    }

    /// The lower semicircle `S¹₋`.
    pub fn lower() -> Self {
        Interval { start: CirclePoint::new(PI), end: CirclePoint::new(0.0) }
    }

    /// Arc length in `(0, 2π)`.
    pub fn length(&self) -> f64 {
        let l = (self.end.theta - self.start.theta).rem_euclid(TAU);
        if l == 0.0 {
            TAU
        } else {
            l
        }
    }

    pub fn midpoint(&self) -> CirclePoint {
        CirclePoint::new(self.start.theta + 0.5 * self.length())
    }

    /// Point at fraction `t ∈ (0,1)` of the arc.
    pub fn at(&self, t: f64) -> CirclePoint {
        CirclePoint::new(self.start.theta + t * self.length())
    }

    pub fn contains(&self, p: &CirclePoint) -> bool {
        let off = (p.theta - self.start.theta).rem_euclid(TAU);
        off > TOL_GEO && off < self.length() - TOL_GEO
    }

    /// Interior of the complement.
    pub fn complement(&self) -> Interval {
        Interval { start: self.end, end: self.start }
    }

    /// Closures disjoint.
    pub fn distant_from(&self, other: &Interval) -> bool {
        let eps = 1e-9;
        !self.contains_closure(&other.start, eps)
            && !self.contains_closure(&other.end, eps)
            && !other.contains_closure(&self.start, eps)
            && !other.contains_closure(&self.end, eps)
            && !self.contains(&other.midpoint())
            && !other.contains(&self.midpoint())
    }

    fn contains_closure(&self, p: &CirclePoint, eps: f64) -> bool {
        let off = (p.theta - self.start.theta).rem_euclid(TAU);
        off <= self.length() + eps || off >= TAU - eps
    }
}

/// True when the points are pairwise distinct and in anticlockwise cyclic
/// order (each consecutive gap positive, gaps summing to one full turn).
pub fn anticlockwise(points: &[CirclePoint]) -> bool {
    let n = points.len();
    if n < 3 {
        return true;
    }
    let mut total = 0.0;
    for k in 0..n {
        let gap = (points[(k + 1) % n].theta - points[k].theta).rem_euclid(TAU);
        if gap <= TOL_GEO {
            return false;
        }
        total += gap;
    }
    (total - TAU).abs() < 1e-6
}

// ---------------------------------------------------------------------------
// Möbius elements
// ---------------------------------------------------------------------------

/// `φ_{a,b}: z ↦ (az+b)/(b̄z+ā)` with `|a|²−|b|²=1`, canonical sign.
///
/// `(a,b)` and `(−a,−b)` define the same map; the stored representative has
/// `Re a > 0`, or `Im a > 0` if `Re a = 0`, or `Re b > 0` otherwise.
#[derive(Clone, Copy, Debug)]
pub struct MobiusElement {
    pub a: Complex64,
    pub b: Complex64,
}

impl Serialize for MobiusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MobiusElement", 2)?;
        st.serialize_field("a", &[self.a.re, self.a.im])?;
        st.serialize_field("b", &[self.b.re, self.b.im])?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for MobiusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            a: [f64; 2],
            b: [f64; 2],
        }
        let r = Raw::deserialize(d)?;
        Ok(MobiusElement::new(
            Complex64::new(r.a[0], r.a[1]),
            Complex64::new(r.b[0], r.b[1]),
        ))
    }
}

impl MobiusElement {
    /// Normalize `|a|²−|b|²` to one and pick the canonical sign.
    pub fn new(a: Complex64, b: Complex64) -> Self {
        let norm = (a.norm_sqr() - b.norm_sqr()).sqrt();
        let mut a = a / norm;
        let mut b = b / norm;
        let flip = if a.re != 0.0 {
            a.re < 0.0
        } else if a.im != 0.0 {
            a.im < 0.0
        } else {
            b.re < 0.0
        };
        if flip {
            a = -a;
            b = -b;
        }
        MobiusElement { a, b }
    }

    pub fn identity() -> Self {
        MobiusElement { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    pub fn is_identity(&self) -> bool {
        (self.a - Complex64::new(1.0, 0.0)).norm() < TOL_GEO && self.b.norm() < TOL_GEO
    }

    /// Defect of the defining constraint `|a|²−|b|² = 1`.
    pub fn constraint_defect(&self) -> f64 {
        (self.a.norm_sqr() - self.b.norm_sqr() - 1.0).abs()
    }

    pub fn apply(&self, z: &CirclePoint) -> CirclePoint {
        let zc = z.z();
        let w = (self.a * zc + self.b) / (self.b.conj() * zc + self.a.conj());
        CirclePoint::from_z(w)
    }

    /// `(g(z), g'(z))` with the derivative taken with respect to the angle;
    /// the derivative `1/|b̄z+ā|²` is strictly positive.
    pub fn apply_and_derivative(&self, z: &CirclePoint) -> (CirclePoint, f64) {
        let zc = z.z();
        let w = self.b.conj() * zc + self.a.conj();
        let image = (self.a * zc + self.b) / w;
        (CirclePoint::from_z(image), 1.0 / w.norm_sqr())
    }

    pub fn derivative(&self, z: &CirclePoint) -> f64 {
        self.apply_and_derivative(z).1
    }

    /// Second derivative of the angle map `θ ↦ ψ(θ)`, `e^{iψ(θ)} = g(e^{iθ})`.
    pub fn second_derivative(&self, z: &CirclePoint) -> f64 {
        let zc = z.z();
        let w = self.b.conj() * zc + self.a.conj();
        2.0 * (self.a * self.b.conj() * zc).im / w.norm_sqr().powi(2)
    }

    /// `self ∘ rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &MobiusElement) -> MobiusElement {
        let (a, b) = (self.a, self.b);
        let (c, d) = (rhs.a, rhs.b);
        MobiusElement::new(a * c + b * d.conj(), a * d + b * c.conj())
    }

    pub fn inverse(&self) -> MobiusElement {
        MobiusElement::new(self.a.conj(), -self.b)
    }

    /// Distance between canonical representatives, insensitive to the sign
    /// ambiguity of `(a,b)`.
    pub fn dist(&self, other: &MobiusElement) -> f64 {
        let plus = (self.a - other.a).norm() + (self.b - other.b).norm();
        let minus = (self.a + other.a).norm() + (self.b + other.b).norm();
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &MobiusElement) -> bool {
        self.dist(other) <= TOL_GEO
    }

    /// The corresponding `SL(2,ℝ)` matrix acting on the Cayley line as
    /// `x ↦ (αx+β)/(γx+δ)`, returned row major `[α, β, γ, δ]`.
    pub fn to_sl2r(&self) -> [f64; 4] {
        // a = (α+δ)/2 + i(β−γ)/2,  b = (α−δ)/2 − i(β+γ)/2
        let alpha = self.a.re + self.b.re;
        let delta = self.a.re - self.b.re;
        let beta = self.a.im - self.b.im;
        let gamma = -self.a.im - self.b.im;
        [alpha, beta, gamma, delta]
    }

    /// Inverse of [`Self::to_sl2r`]; `m = [α, β, γ, δ]` must have positive
    /// determinant (it is rescaled to determinant one).
    pub fn from_sl2r(m: [f64; 4]) -> MobiusElement {
        let det = m[0] * m[3] - m[1] * m[2];
        let s = det.sqrt();
        let (alpha, beta, gamma, delta) = (m[0] / s, m[1] / s, m[2] / s, m[3] / s);
        MobiusElement::new(
            Complex64::new((alpha + delta) / 2.0, (beta - gamma) / 2.0),
            Complex64::new((alpha - delta) / 2.0, -(beta + gamma) / 2.0),
        )
    }

    /// Image interval (orientation preserving, so endpoints map to endpoints).
    pub fn apply_interval(&self, i: &Interval) -> Interval {
        Interval { start: self.apply(&i.start), end: self.apply(&i.end) }
    }
}

// ---------------------------------------------------------------------------
// One-parameter subgroups and interval dilations
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneParameterKind {
    Rotation,
    Translation,
    Dilation,
}

/// Closed forms of the three basic one-parameter subgroups.
///
/// * `rotation(α): z ↦ e^{iα} z`;
/// * `translation(a)`: fixes `1`, acts as `x ↦ x + a` on the Cayley line;
/// * `dilation(s)`: fixes `±1`, preserves `S¹₊`, `δ_s'(±1) = e^{±s}`.
pub fn one_parameter(kind: OneParameterKind, param: f64) -> MobiusElement {
    match kind {
        OneParameterKind::Rotation => MobiusElement::new(
            Complex64::from_polar(1.0, param / 2.0),
            Complex64::new(0.0, 0.0),
        ),
        OneParameterKind::Translation => MobiusElement::new(
            Complex64::new(1.0, param / 2.0),
            Complex64::new(0.0, -param / 2.0),
        ),
        OneParameterKind::Dilation => MobiusElement::new(
            Complex64::new((param / 2.0).cosh(), 0.0),
            Complex64::new(-(param / 2.0).sinh(), 0.0),
        ),
    }
}

pub fn rotation(alpha: f64) -> MobiusElement {
    one_parameter(OneParameterKind::Rotation, alpha)
}

pub fn translation(a: f64) -> MobiusElement {
    one_parameter(OneParameterKind::Translation, a)
}

pub fn dilation(s: f64) -> MobiusElement {
    one_parameter(OneParameterKind::Dilation, s)
}

/// A Möbius transformation taking `S¹₊` onto `i`, i.e. `φ(1) = start`,
/// `φ(i) = midpoint`, `φ(−1) = end`.
pub fn map_upper_to(i: &Interval) -> MobiusElement {
    let src = [CirclePoint::new(0.0), CirclePoint::new(PI / 2.0), CirclePoint::new(PI)];
    let dst = [i.start, i.midpoint(), i.end];
    interp3(&src, &dst).expect("triples are anticlockwise by construction")
}

/// The one-parameter group of dilations associated to `I`:
/// `δ^I_s = φ ∘ δ_s ∘ φ⁻¹` for any `φ` with `φ(S¹₊) = I` (the choice does
/// not matter). Fixes both endpoints; derivative `e^{+s}` at `I.start`,
/// `e^{−s}` at `I.end`; satisfies `δ^I_s = δ^{I^c}_{−s}`.
pub fn interval_dilation(i: &Interval, s: f64) -> MobiusElement {
    let phi = map_upper_to(i);
    phi.compose(&dilation(s)).compose(&phi.inverse())
}

// ---------------------------------------------------------------------------
// Cayley transform
// ---------------------------------------------------------------------------

/// `x = i(1+z)/(1−z)`, identifying `S¹ \ {1}` with the real line.
pub fn cayley(z: &CirclePoint) -> Result<f64, MobiusError> {
    if z.dist(&CirclePoint::new(0.0)) <= TOL_GEO {
        return Err(MobiusError::CayleyAtOne);
    }
    // i(1+e^{iθ})/(1−e^{iθ}) = −cot(θ/2)
    Ok(-1.0 / (z.theta / 2.0).tan())
}

/// `z = (x−i)/(x+i)`.
pub fn cayley_inv(x: f64) -> CirclePoint {
    let z = Complex64::new(x, -1.0) / Complex64::new(x, 1.0);
    CirclePoint::from_z(z)
}

// ---------------------------------------------------------------------------
// Three-point interpolation and the Iwasawa decomposition
// ---------------------------------------------------------------------------

/// The unique Möbius transformation mapping three distinct anticlockwise
/// points onto three distinct anticlockwise points.
///
/// Solved on the Cayley line: both triples are rotated so their last point
/// sits at `1` (the infinite point of the line); what remains is the affine
/// map matching the first two coordinates.
pub fn interp3(src: &[CirclePoint; 3], dst: &[CirclePoint; 3]) -> Result<MobiusElement, MobiusError> {
    if !anticlockwise(src) || !anticlockwise(dst) {
        return Err(MobiusError::BadTriple);
    }
    let rot_src = rotation(-src[2].theta);
    let rot_dst = rotation(-dst[2].theta);
    let x: Vec<f64> = (0..2)
        .map(|k| cayley(&rot_src.apply(&src[k])))
        .collect::<Result<_, _>>()?;
    let y: Vec<f64> = (0..2)
        .map(|k| cayley(&rot_dst.apply(&dst[k])))
        .collect::<Result<_, _>>()?;
    let alpha = (y[1] - y[0]) / (x[1] - x[0]);
    debug_assert!(alpha > 0.0, "anticlockwise triples give an orientation-preserving affine map");
    let beta = y[0] - alpha * x[0];
    let affine = MobiusElement::from_sl2r([alpha, beta, 0.0, 1.0]);
    Ok(rot_dst.inverse().compose(&affine).compose(&rot_src))
}

/// `g = ρ_α ∘ τ_a ∘ δ_s`, returned as `(α, a, s)` with `α ∈ [0, 2π)`.
pub fn iwasawa_decompose(g: &MobiusElement) -> (f64, f64, f64) {
    // α is fixed by g(1): rotations are the only factors moving 1.
    let alpha = g.apply(&CirclePoint::new(0.0)).theta;
    let g1 = rotation(-alpha).compose(g);
    // a is fixed by where g1 sends −1: τ_a(−1) = cayley⁻¹(a).
    let w = g1.apply(&CirclePoint::new(PI));
    let a = cayley(&w).expect("g1 fixes 1, so g1(−1) ≠ 1");
    let g2 = translation(-a).compose(&g1);
    // The residue fixes ±1, hence is a dilation: both entries real,
    // g2 = φ_{cosh(s/2), −sinh(s/2)}.
    let s = 2.0 * (-g2.b.re / g2.a.re).atanh();
    (alpha, a, s)
}

pub fn iwasawa_recompose(alpha: f64, a: f64, s: f64) -> MobiusElement {
    rotation(alpha).compose(&translation(a)).compose(&dilation(s))
}

// ---------------------------------------------------------------------------
// Möbius vector fields
// ---------------------------------------------------------------------------

/// A vector field in the real span of `{1, cos θ, sin θ}`, identified with
/// the angular velocity function `f(e^{iθ}) = c0 + c1·cos θ + c2·sin θ`.
///
/// These are exactly the generators of Möbius flows. Named fields:
/// `t = (1 − cos θ)/2` generates translations (`Exp(a·t) = τ_{a/2}`), and
/// `d = sin θ` generates dilations (`Exp(s·d) = δ_s`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusField {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MobiusField {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Self {
        MobiusField { c0, c1, c2 }
    }

    pub fn zero() -> Self {
        MobiusField::new(0.0, 0.0, 0.0)
    }

    /// The constant rotation field.
    pub fn rotation_field() -> Self {
        MobiusField::new(1.0, 0.0, 0.0)
    }

    /// `t(z) = 1/2 − (z + z⁻¹)/4`.
    pub fn translation_field() -> Self {
        MobiusField::new(0.5, -0.5, 0.0)
    }

    /// `d(θ) = sin θ`, with `d'(±1) = ±1`.
    pub fn dilation_field() -> Self {
        MobiusField::new(0.0, 0.0, 1.0)
    }

    pub fn eval(&self, p: &CirclePoint) -> f64 {
        self.c0 + self.c1 * p.theta.cos() + self.c2 * p.theta.sin()
    }

    /// Derivative with respect to the angle.
    pub fn eval_deriv(&self, p: &CirclePoint) -> f64 {
        -self.c1 * p.theta.sin() + self.c2 * p.theta.cos()
    }

    pub fn scale(&self, r: f64) -> Self {
        MobiusField::new(r * self.c0, r * self.c1, r * self.c2)
    }

    pub fn add(&self, o: &MobiusField) -> Self {
        MobiusField::new(self.c0 + o.c0, self.c1 + o.c1, self.c2 + o.c2)
    }

    pub fn sub(&self, o: &MobiusField) -> Self {
        MobiusField::new(self.c0 - o.c0, self.c1 - o.c1, self.c2 - o.c2)
    }

    pub fn norm(&self) -> f64 {
        self.c0.abs() + self.c1.abs() + self.c2.abs()
    }

    /// The traceless `sl(2,ℝ)` matrix `X` with `Exp(u·f) = exp(u·X)` under
    /// the Cayley-line dictionary of [`MobiusElement::to_sl2r`].
    pub fn to_sl2r(&self) -> [f64; 4] {
        [
            -self.c2 / 2.0,
            (self.c0 - self.c1) / 2.0,
            -(self.c0 + self.c1) / 2.0,
            self.c2 / 2.0,
        ]
    }

    pub fn from_sl2r(x: [f64; 4]) -> Self {
        debug_assert!((x[0] + x[3]).abs() < 1e-9);
        MobiusField::new(x[1] - x[2], -x[1] - x[2], -2.0 * x[0])
    }

    /// Pushforward `γ_* f = (γ' f) ∘ γ⁻¹`, again a Möbius field.
    pub fn pushforward(&self, g: &MobiusElement) -> MobiusField {
        let a = g.to_sl2r();
        let x = self.to_sl2r();
        // A X A⁻¹ for det A = 1: A⁻¹ = [δ, −β; −γ, α].
        let (al, be, ga, de) = (a[0], a[1], a[2], a[3]);
        let ax = [
            al * x[0] + be * x[2],
            al * x[1] + be * x[3],
            ga * x[0] + de * x[2],
            ga * x[1] + de * x[3],
        ];
        let axa = [
            ax[0] * de - ax[1] * ga,
            -ax[0] * be + ax[1] * al,
            ax[2] * de - ax[3] * ga,
            -ax[2] * be + ax[3] * al,
        ];
        MobiusField::from_sl2r(axa)
    }
}

/// The generator `d^I` of the dilations associated to `I`:
/// `d^{S¹₊} = d`, in general the pushforward of `d` under any `φ` with
/// `φ(S¹₊) = I`. Vanishes at both endpoints, `(d^I)'(start) = +1`,
/// `(d^I)'(end) = −1`, strictly positive inside `I`.
pub fn interval_dilation_field(i: &Interval) -> MobiusField {
    MobiusField::dilation_field().pushforward(&map_upper_to(i))
}

/// Time-`u` flow of a Möbius field, via the closed-form 2×2 exponential
/// (branching on the sign of the determinant, not ODE integration).
pub fn field_exp(f: &MobiusField, u: f64) -> MobiusElement {
    let x = f.to_sl2r();
    let m = [u * x[0], u * x[1], u * x[2], u * x[3]];
    // exp(M) for traceless M: cosh(μ)·I + sinh(μ)/μ·M with μ² = −det M.
    let det = m[0] * m[3] - m[1] * m[2];
    let (c, k) = if det < 0.0 {
        let mu = (-det).sqrt();
        (mu.cosh(), mu.sinh() / mu)
    } else if det > 0.0 {
        let om = det.sqrt();
        (om.cos(), om.sin() / om)
    } else {
        (1.0, 1.0)
    };
    MobiusElement::from_sl2r([c + k * m[0], k * m[1], k * m[2], c + k * m[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TOL_EXACT;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_element(rng: &mut impl Rng) -> MobiusElement {
        iwasawa_recompose(
            rng.gen_range(0.0..TAU),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    }

    #[test]
    fn compose_identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = random_element(&mut rng);
            assert!(MobiusElement::identity().compose(&g).approx_eq(&g));
            assert!(g.compose(&MobiusElement::identity()).approx_eq(&g));
            assert!(g.compose(&g.inverse()).is_identity());
            assert!(g.inverse().compose(&g).is_identity());
        }
    }

    #[test]
    fn compose_associative_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (g, h, k) = (
                random_element(&mut rng),
                random_element(&mut rng),
                random_element(&mut rng),
            );
            let lhs = g.compose(&h).compose(&k);
            let rhs = g.compose(&h.compose(&k));
            assert!(lhs.dist(&rhs) < TOL_GEO);
        }
    }

    #[test]
    fn dilation_one_parameter_law() {
        for (s, t) in [(0.3, 0.9), (-1.2, 0.4), (2.0, -2.0)] {
            let lhs = dilation(s).compose(&dilation(t));
            assert!(lhs.dist(&dilation(s + t)) < TOL_EXACT);
        }
        assert!(dilation(0.0).is_identity());
    }

    #[test]
    fn dilation_derivative_at_fixed_points_closed_form() {
        // δ_s'(±1) = e^{±s}, exactly as stated.
        for s in [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let d = dilation(s);
            let (p1, d1) = d.apply_and_derivative(&CirclePoint::new(0.0));
            let (pm, dm) = d.apply_and_derivative(&CirclePoint::new(PI));
            assert!(p1.dist(&CirclePoint::new(0.0)) < TOL_EXACT);
            assert!(pm.dist(&CirclePoint::new(PI)) < TOL_EXACT);
            assert_abs_diff_eq!(d1, s.exp(), epsilon = 1e-12 * s.exp().max(1.0));
            assert_abs_diff_eq!(dm, (-s).exp(), epsilon = 1e-12 * (-s).exp().max(1.0));
        }
    }

    #[test]
    fn dilation_preserves_upper_half() {
        let i = CirclePoint::new(PI / 2.0);
        for s in [-4.0, -1.0, 0.7, 3.3] {
            let img = dilation(s).apply(&i);
            assert!(img.theta > 0.0 && img.theta < PI);
        }
    }

    #[test]
    fn translation_fixes_one() {
        for a in [-5.0, -0.3, 0.0, 1.7, 12.0] {
            let img = translation(a).apply(&CirclePoint::new(0.0));
            assert!(img.dist(&CirclePoint::new(0.0)) < TOL_EXACT);
        }
    }

    #[test]
    fn rotations_are_isometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let alpha = rng.gen_range(0.0..TAU);
            let z = CirclePoint::new(rng.gen_range(0.0..TAU));
            let (img, deriv) = rotation(alpha).apply_and_derivative(&z);
            assert!(img.dist(&CirclePoint::new(z.theta + alpha)) < TOL_GEO);
            assert_abs_diff_eq!(deriv, 1.0, epsilon = TOL_EXACT);
        }
    }

    #[test]
    fn scaling_of_translations_by_dilations() {
        // Conjugating a translation by a dilation rescales the parameter by
        // the dilation's multiplier at the translation's finite fixed point
        // (z = −1, where δ_s' = e^{−s}): δ_s ∘ τ_a ∘ δ_{−s} = τ_{e^{−s} a},
        // equivalently δ_{−s} ∘ τ_a ∘ δ_s = τ_{e^{s} a}.
        for (s, a) in [(0.8, 1.3), (-1.1, 0.4), (2.0, -0.7)] {
            let lhs = dilation(-s).compose(&translation(a)).compose(&dilation(s));
            let rhs = translation(s.exp() * a);
            assert!(lhs.dist(&rhs) < 1e-12, "s={s} a={a} dist={}", lhs.dist(&rhs));
        }
    }

    #[test]
    fn cayley_values_and_round_trip() {
        assert_abs_diff_eq!(cayley(&CirclePoint::new(PI)).unwrap(), 0.0, epsilon = TOL_EXACT);
        // cayley(i) = i(1+i)/(1−i) = −1 by substitution.
        assert_abs_diff_eq!(cayley(&CirclePoint::new(PI / 2.0)).unwrap(), -1.0, epsilon = TOL_EXACT);
        assert!(cayley(&CirclePoint::new(0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let z = CirclePoint::new(rng.gen_range(0.01..TAU - 0.01));
            let back = cayley_inv(cayley(&z).unwrap());
            assert!(back.dist(&z) < TOL_GEO);
        }
    }

    #[test]
    fn translation_acts_as_shift_on_cayley_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = rng.gen_range(-4.0..4.0);
            let a = rng.gen_range(-3.0..3.0);
            let img = translation(a).apply(&cayley_inv(x));
            assert_abs_diff_eq!(cayley(&img).unwrap(), x + a, epsilon = 1e-9);
        }
    }

    #[test]
    fn interp3_basic_properties() {
        let src = [CirclePoint::new(0.3), CirclePoint::new(2.0), CirclePoint::new(4.5)];
        assert!(interp3(&src, &src).unwrap().is_identity());

        // A rotated triple must be matched by the rotation itself.
        let alpha = 1.1;
        let dst = [
            CirclePoint::new(0.3 + alpha),
            CirclePoint::new(2.0 + alpha),
            CirclePoint::new(4.5 + alpha),
        ];
        let g = interp3(&src, &dst).unwrap();
        assert!(g.dist(&rotation(alpha)) < 1e-10);

        // Defining property and canonical uniqueness on random instances.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let mut s: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..TAU)).collect();
            let mut d: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..TAU)).collect();
            s.sort_by(f64::total_cmp);
            d.sort_by(f64::total_cmp);
            if s.windows(2).any(|w| w[1] - w[0] < 1e-3) || d.windows(2).any(|w| w[1] - w[0] < 1e-3)
            {
                continue;
            }
            let src: [CirclePoint; 3] = [0, 1, 2].map(|k| CirclePoint::new(s[k]));
            let dst: [CirclePoint; 3] = [0, 1, 2].map(|k| CirclePoint::new(d[k]));
            let g = interp3(&src, &dst).unwrap();
            for k in 0..3 {
                assert!(g.apply(&src[k]).dist(&dst[k]) < TOL_GEO);
            }
            let g2 = interp3(&src, &dst).unwrap();
            assert_eq!(g.a, g2.a);
            assert_eq!(g.b, g2.b);
        }
    }

    #[test]
    fn interp3_rejects_bad_input() {
        let p = CirclePoint::new(0.1);
        let q = CirclePoint::new(1.0);
        let r = CirclePoint::new(2.0);
        assert!(interp3(&[p, p, q], &[p, q, r]).is_err());
        // Clockwise destination triple.
        assert!(interp3(&[p, q, r], &[r, q, p]).is_err());
    }

    #[test]
    fn interval_dilation_properties() {
        assert!(interval_dilation(&Interval::upper(), 0.7).dist(&dilation(0.7)) < 1e-12);

        let i = Interval::from_angles(1.0, 2.5).unwrap();
        for s in [-1.5, 0.4, 2.0] {
            let d = interval_dilation(&i, s);
            let (img_s, deriv_s) = d.apply_and_derivative(&i.start);
            let (img_e, deriv_e) = d.apply_and_derivative(&i.end);
            assert!(img_s.dist(&i.start) < TOL_GEO);
            assert!(img_e.dist(&i.end) < TOL_GEO);
            assert_abs_diff_eq!(deriv_s, s.exp(), epsilon = 1e-10 * s.exp().max(1.0));
            assert_abs_diff_eq!(deriv_e, (-s).exp(), epsilon = 1e-10 * (-s).exp().max(1.0));
            // δ^I_s = δ^{I^c}_{−s}
            let dc = interval_dilation(&i.complement(), -s);
            assert!(d.dist(&dc) < 1e-10);
        }
    }

    #[test]
    fn interval_dilation_independent_of_chart() {
        // Conjugating by a different φ with φ(S¹₊) = I gives the same map.
        let i = Interval::from_angles(0.7, 3.0).unwrap();
        let d1 = interval_dilation(&i, 1.3);
        let phi = interp3(
            &[CirclePoint::new(0.0), CirclePoint::new(1.0), CirclePoint::new(PI)],
            &[i.start, i.at(0.23), i.end],
        )
        .unwrap();
        let d2 = phi.compose(&dilation(1.3)).compose(&phi.inverse());
        assert!(d1.dist(&d2) < 1e-10);
    }

    #[test]
    fn iwasawa_round_trip() {
        let (alpha, a, s) = iwasawa_decompose(&MobiusElement::identity());
        assert_abs_diff_eq!(alpha, 0.0, epsilon = TOL_EXACT);
        assert_abs_diff_eq!(a, 0.0, epsilon = TOL_EXACT);
        assert_abs_diff_eq!(s, 0.0, epsilon = TOL_EXACT);
        let (alpha, a, s) = iwasawa_decompose(&dilation(1.7));
        assert_abs_diff_eq!(alpha, 0.0, epsilon = TOL_EXACT);
        assert_abs_diff_eq!(a, 0.0, epsilon = TOL_EXACT);
        assert_abs_diff_eq!(s, 1.7, epsilon = TOL_EXACT);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let g = random_element(&mut rng);
            let (alpha, a, s) = iwasawa_decompose(&g);
            worst = worst.max(iwasawa_recompose(alpha, a, s).dist(&g));
        }
        assert!(worst < 1e-12, "worst Iwasawa round-trip distance {worst}");
    }

    #[test]
    fn field_exp_reproduces_named_subgroups() {
        for u in [-2.0, -0.5, 0.0, 0.9, 3.1] {
            assert!(field_exp(&MobiusField::rotation_field(), u).dist(&rotation(u)) < 1e-12);
            assert!(field_exp(&MobiusField::dilation_field(), u).dist(&dilation(u)) < 1e-12);
        }
        // Exp(a·t) translates by a/2 on the Cayley line.
        for a in [-1.0, 0.8, 2.2] {
            let g = field_exp(&MobiusField::translation_field(), a);
            assert!(g.dist(&translation(a / 2.0)) < 1e-12);
        }
    }

    #[test]
    fn field_exp_flow_law() {
        let f = MobiusField::new(0.4, -0.9, 1.2);
        for (t, u) in [(0.5, 0.7), (-1.0, 0.3), (2.0, -2.0)] {
            let lhs = field_exp(&f, t).compose(&field_exp(&f, u));
            assert!(lhs.dist(&field_exp(&f, t + u)) < 1e-10);
        }
    }

    #[test]
    fn field_pushforward_matches_flow_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let f = MobiusField::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let g = random_element(&mut rng);
            let t = rng.gen_range(-1.0..1.0);
            let lhs = g.compose(&field_exp(&f, t)).compose(&g.inverse());
            let rhs = field_exp(&f.pushforward(&g), t);
            assert!(lhs.dist(&rhs) < 1e-9);
        }
    }

    #[test]
    fn interval_dilation_field_endpoint_derivatives() {
        let i = Interval::from_angles(0.9, 2.9).unwrap();
        let f = interval_dilation_field(&i);
        assert_abs_diff_eq!(f.eval(&i.start), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.eval(&i.end), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.eval_deriv(&i.start), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.eval_deriv(&i.end), -1.0, epsilon = 1e-9);
        assert!(f.eval(&i.midpoint()) > 0.0);
        assert!(f.eval(&i.complement().midpoint()) < 0.0);
    }

    #[test]
    fn second_derivative_of_translation_at_fixed_point() {
        // The parabolic fixed point of τ_a has ψ'' = a.
        for a in [-1.5, 0.4, 2.0] {
            let g = translation(a);
            assert_abs_diff_eq!(g.second_derivative(&CirclePoint::new(0.0)), a, epsilon = 1e-10);
        }
        // Dilations are odd around their fixed points: ψ''(±1) = 0.
        let d = dilation(1.3);
        assert_abs_diff_eq!(d.second_derivative(&CirclePoint::new(0.0)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn serde_shapes() {
        let g = dilation(0.5);
        let j = serde_json::to_value(&g).unwrap();
        assert!(j.get("a").unwrap().is_array());
        let back: MobiusElement = serde_json::from_value(j).unwrap();
        assert!(back.approx_eq(&g));
        let p = CirclePoint::new(1.25);
        assert_eq!(serde_json::to_value(p).unwrap()["theta"], 1.25);
    }
}
