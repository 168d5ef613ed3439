//! Truncated Fourier representations of real circle functions, the
//! `‖·‖₃⁄₂` norm, mollification and numeric flows.
//!
//! A [`FourierFunction`] stores `f̂_n` for `|n| ≤ N` with the reality
//! constraint `f̂_{−n} = conj(f̂_n)`. Coefficients of piecewise Möbius
//! fields are computed by exact per-arc antiderivatives (no quadrature), so
//! decay-rate assertions are free of integration error.

use crate::mobius::CirclePoint;
use crate::pcw::PcwField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, thiserror::Error)]
pub enum FourierError {
    #[error("mollifier must have mean one (f̂₀ = 1), got {0}")]
    MollifierMean(f64),
    #[error("coefficients violate the reality constraint by {0}")]
    NotReal(f64),
}

/// Truncated Fourier series of a real function on the circle.
#[derive(Clone, Debug)]
pub struct FourierFunction {
    n_max: i64,
    /// `coeffs[(n + n_max) as usize]` is `f̂_n`.
    coeffs: Vec<Complex64>,
    /// Optional decay certificate: `|f̂_n| ≤ cert/|n|³` for `|n| > n_max`.
    pub decay_cert: Option<f64>,
}

impl Serialize for FourierFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FourierFunction", 2)?;
        st.serialize_field("N", &self.n_max)?;
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        st.serialize_field("coeffs", &pairs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for FourierFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "N")]
            n: i64,
            coeffs: Vec<[f64; 2]>,
        }
        let r = Raw::deserialize(d)?;
        if r.coeffs.len() != (2 * r.n + 1) as usize {
            return Err(serde::de::Error::custom("coeffs length must be 2N+1"));
        }
        Ok(FourierFunction {
            n_max: r.n,
            coeffs: r.coeffs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            decay_cert: None,
        })
    }
}

impl FourierFunction {
    pub fn zero(n_max: i64) -> Self {
        FourierFunction {
            n_max,
            coeffs: vec![Complex64::new(0.0, 0.0); (2 * n_max + 1) as usize],
            decay_cert: None,
        }
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.abs() > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.n_max) as usize]
        }
    }

    /// Set `f̂_n` and `f̂_{−n} = conj` in one step, preserving reality.
    pub fn set_pair(&mut self, n: i64, value: Complex64) {
        assert!(n.abs() <= self.n_max);
        self.coeffs[(n + self.n_max) as usize] = value;
        self.coeffs[(-n + self.n_max) as usize] = value.conj();
        if n == 0 {
            assert!(value.im.abs() < 1e-14, "f̂₀ must be real");
            self.coeffs[self.n_max as usize] = Complex64::new(value.re, 0.0);
        }
    }

    /// Raw coefficient write; used by routines that fill both sides.
    pub fn set_raw(&mut self, n: i64, value: Complex64) {
        assert!(n.abs() <= self.n_max);
        self.coeffs[(n + self.n_max) as usize] = value;
    }

    pub fn constant(value: f64, n_max: i64) -> Self {
        let mut f = FourierFunction::zero(n_max);
        f.set_pair(0, Complex64::new(value, 0.0));
        f
    }

    /// Largest violation of `f̂_{−n} = conj(f̂_n)`.
    pub fn reality_defect(&self) -> f64 {
        (0..=self.n_max)
            .map(|n| (self.coeff(-n) - self.coeff(n).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn assert_real(&self) -> Result<(), FourierError> {
        let d = self.reality_defect();
        if d > 1e-9 {
            Err(FourierError::NotReal(d))
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, z: &CirclePoint) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -self.n_max..=self.n_max {
            acc += self.coeff(n) * Complex64::from_polar(1.0, n as f64 * z.theta);
        }
        acc.re
    }

    pub fn eval_deriv(&self, z: &CirclePoint) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -self.n_max..=self.n_max {
            let i_n = Complex64::new(0.0, n as f64);
            acc += i_n * self.coeff(n) * Complex64::from_polar(1.0, n as f64 * z.theta);
        }
        acc.re
    }

    /// The derivative with respect to the angle, `(f')̂_n = i n f̂_n`.
    pub fn derivative(&self) -> FourierFunction {
        let mut out = FourierFunction::zero(self.n_max);
        for n in -self.n_max..=self.n_max {
            out.set_raw(n, Complex64::new(0.0, n as f64) * self.coeff(n));
        }
        out
    }

    pub fn add(&self, other: &FourierFunction) -> FourierFunction {
        let n = self.n_max.max(other.n_max);
        let mut out = FourierFunction::zero(n);
        for k in -n..=n {
            out.set_raw(k, self.coeff(k) + other.coeff(k));
        }
        out
    }

    pub fn sub(&self, other: &FourierFunction) -> FourierFunction {
        let n = self.n_max.max(other.n_max);
        let mut out = FourierFunction::zero(n);
        for k in -n..=n {
            out.set_raw(k, self.coeff(k) - other.coeff(k));
        }
        out
    }

    pub fn scale(&self, r: f64) -> FourierFunction {
        let mut out = FourierFunction::zero(self.n_max);
        for k in -self.n_max..=self.n_max {
            out.set_raw(k, self.coeff(k) * r);
        }
        out
    }

    /// Pointwise product, exact on the truncation (degrees add).
    pub fn multiply(&self, other: &FourierFunction) -> FourierFunction {
        let n = self.n_max + other.n_max;
        let mut out = FourierFunction::zero(n);
        for a in -self.n_max..=self.n_max {
            let ca = self.coeff(a);
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            for b in -other.n_max..=other.n_max {
                let prod = ca * other.coeff(b);
                let idx = a + b;
                out.set_raw(idx, out.coeff(idx) + prod);
            }
        }
        out
    }

    /// Numerical projection of a smooth function onto `|n| ≤ n_max` with a
    /// trapezoidal rule on `samples` points (spectrally accurate).
    pub fn project(f: impl Fn(f64) -> f64, n_max: i64, samples: usize) -> FourierFunction {
        let mut out = FourierFunction::zero(n_max);
        for n in -n_max..=n_max {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..samples {
                let theta = TAU * k as f64 / samples as f64;
                acc += f(theta) * Complex64::from_polar(1.0, -(n as f64) * theta);
            }
            out.set_raw(n, acc / samples as f64);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// Partial `‖f‖₃⁄₂ = Σ |f̂_n| (1 + |n|^{3/2})` plus a rigorous tail bound
/// when a decay certificate is attached (`None` tail = unknown).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormReport {
    pub partial: f64,
    pub tail_bound: Option<f64>,
}

pub fn norm_three_half(f: &FourierFunction) -> NormReport {
    let mut partial = 0.0;
    for n in -f.n_max()..=f.n_max() {
        partial += f.coeff(n).norm() * (1.0 + (n.abs() as f64).powf(1.5));
    }
    let tail_bound = f.decay_cert.map(|c| {
        let n = f.n_max() as f64;
        // Σ_{|m|>N} C/m³ (1+m^{3/2}) ≤ 2C (∫_N^∞ x⁻³ dx + ∫_N^∞ x⁻³ᐟ² dx)
        2.0 * c * (0.5 / (n * n) + 2.0 / n.sqrt())
    });
    NormReport { partial, tail_bound }
}

/// `‖f‖₁ = max|f| + max|f'|`, sampled on a uniform grid.
pub fn norm_c1(f: &FourierFunction, samples: usize) -> f64 {
    let mut max_f: f64 = 0.0;
    let mut max_df: f64 = 0.0;
    for k in 0..samples {
        let z = CirclePoint::new(TAU * k as f64 / samples as f64);
        max_f = max_f.max(f.eval(&z).abs());
        max_df = max_df.max(f.eval_deriv(&z).abs());
    }
    max_f + max_df
}

// ---------------------------------------------------------------------------
// Exact Fourier coefficients of piecewise data
// ---------------------------------------------------------------------------

/// `∫_a^{a+len} e^{ikθ} dθ`, closed form.
fn arc_exp_integral(k: i64, a: f64, len: f64) -> Complex64 {
    if k == 0 {
        Complex64::new(len, 0.0)
    } else {
        let ik = Complex64::new(0.0, k as f64);
        (Complex64::from_polar(1.0, k as f64 * (a + len))
            - Complex64::from_polar(1.0, k as f64 * a))
            / ik
    }
}

/// Exact Fourier coefficients of a piecewise Möbius field: each arc carries
/// `c0 + c1 cos θ + c2 sin θ`, i.e. modes `{−1, 0, 1}`, integrated in closed
/// form against `e^{−inθ}`.
pub fn fourier_of_pcw_field(f: &PcwField, n_max: i64) -> FourierFunction {
    let mut out = FourierFunction::zero(n_max);
    let segments: Vec<(f64, f64, [Complex64; 3])> = if f.breakpoints.is_empty() {
        vec![(0.0, TAU, piece_modes(&f.pieces[0]))]
    } else {
        let m = f.breakpoints.len();
        (0..m)
            .map(|k| {
                let a = f.breakpoints[k].theta;
                let len = (f.breakpoints[(k + 1) % m].theta - a).rem_euclid(TAU);
                let len = if len == 0.0 { TAU } else { len };
                (a, len, piece_modes(&f.pieces[k]))
            })
            .collect()
    };
    for n in -n_max..=n_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, len, modes) in &segments {
            for (j, c) in modes.iter().enumerate() {
                let m = j as i64 - 1;
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                acc += c * arc_exp_integral(m - n, *a, *len);
            }
        }
        out.set_raw(n, acc / TAU);
    }
    out
}

/// Modes `[c_{−1}, c_0, c_{+1}]` of `c0 + c1 cos θ + c2 sin θ`.
fn piece_modes(p: &crate::mobius::MobiusField) -> [Complex64; 3] {
    [
        Complex64::new(p.c1 / 2.0, p.c2 / 2.0),
        Complex64::new(p.c0, 0.0),
        Complex64::new(p.c1 / 2.0, -p.c2 / 2.0),
    ]
}

/// Exact Fourier coefficients of a trigonometric polynomial restricted to
/// the arc `[a, a+len]` and extended by zero; `modes` lists `(m, c_m)`.
pub fn fourier_of_arc_restriction(
    modes: &[(i64, Complex64)],
    a: f64,
    len: f64,
    n_max: i64,
) -> FourierFunction {
    let mut out = FourierFunction::zero(n_max);
    for n in -n_max..=n_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(m, c) in modes {
            acc += c * arc_exp_integral(m - n, a, len);
        }
        out.set_raw(n, acc / TAU);
    }
    out
}

// ---------------------------------------------------------------------------
// Mollification
// ---------------------------------------------------------------------------

/// Convolution `(f ∗ φ)̂_n = f̂_n φ̂_n`; the mollifier must have mean one.
pub fn convolve_smooth(
    f: &FourierFunction,
    mollifier: &FourierFunction,
) -> Result<FourierFunction, FourierError> {
    let m0 = mollifier.coeff(0);
    if (m0 - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(FourierError::MollifierMean(m0.re));
    }
    let n = f.n_max();
    let mut out = FourierFunction::zero(n);
    for k in -n..=n {
        out.set_raw(k, f.coeff(k) * mollifier.coeff(k));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

/// Time-`t` flow of `dθ/dt = f(e^{iθ})`: adaptive embedded Runge–Kutta
/// (Bogacki–Shampine 3(2)) with step tolerance 1e−12.
pub fn flow_exp(f: impl Fn(f64) -> f64, z: &CirclePoint, t: f64) -> CirclePoint {
    if t == 0.0 {
        return *z;
    }
    let mut theta = z.theta;
    let mut remaining = t;
    let dir = t.signum();
    let mut h = 0.05 * dir;
    let tol = 1e-12;
    let mut k1 = f(theta);
    let mut guard = 0;
    while remaining.abs() > 1e-15 {
        guard += 1;
        if guard > 2_000_000 {
            break;
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        let k2 = f(theta + 0.5 * h * k1);
        let k3 = f(theta + 0.75 * h * k2);
        let next = theta + h * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0;
        let k4 = f(next);
        let err = (h * (-5.0 * k1 / 72.0 + k2 / 12.0 + k3 / 9.0 - k4 / 8.0)).abs();
        if err <= tol {
            theta = next;
            remaining -= h;
            k1 = k4;
            let grow = if err == 0.0 { 2.0 } else { (tol / err).powf(1.0 / 3.0).min(2.0) };
            h *= 0.9 * grow.max(0.2);
        } else {
            h *= 0.9 * (tol / err).powf(1.0 / 3.0).max(0.1);
        }
        if h.abs() < 1e-14 {
            h = 1e-14 * dir;
        }
    }
    CirclePoint::new(theta)
}

pub fn flow_exp_fourier(f: &FourierFunction, z: &CirclePoint, t: f64) -> CirclePoint {
    flow_exp(|theta| f.eval(&CirclePoint::new(theta)), z, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::Interval;
    use crate::mobius::{dilation, MobiusField};
    use crate::pcw::{bump_field, kappa_field, PcwField};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_distant_pair(rng: &mut impl Rng) -> (Interval, Interval) {
        loop {
            let mut t: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TAU)).collect();
            t.sort_by(f64::total_cmp);
            let ok = (0..4).all(|k| {
                let next = if k == 3 { t[0] + TAU } else { t[k + 1] };
                next - t[k] >= 0.35
            });
            if !ok {
                continue;
            }
            return (
                Interval::from_angles(t[0], t[1]).unwrap(),
                Interval::from_angles(t[2], t[3]).unwrap(),
            );
        }
    }

    #[test]
    fn constant_field_has_single_coefficient() {
        let f = fourier_of_pcw_field(&PcwField::from_field(MobiusField::new(1.0, 0.0, 0.0)), 8);
        assert_abs_diff_eq!(f.coeff(0).re, 1.0, epsilon = 1e-14);
        for n in 1..=8 {
            assert!(f.coeff(n).norm() < 1e-14);
        }
    }

    #[test]
    fn translation_field_coefficients() {
        // t(z) = 1/2 − (z + z⁻¹)/4: t̂₀ = 1/2, t̂_{±1} = −1/4.
        let f =
            fourier_of_pcw_field(&PcwField::from_field(MobiusField::translation_field()), 4);
        assert_abs_diff_eq!(f.coeff(0).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.coeff(1).re, -0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(f.coeff(-1).re, -0.25, epsilon = 1e-14);
        assert!(f.coeff(2).norm() < 1e-14);
    }

    #[test]
    fn pcw_field_coefficients_match_quadrature_and_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let i1 = Interval::from_angles(0.3, 1.2).unwrap();
        let i2 = Interval::from_angles(2.5, 4.1).unwrap();
        let a = kappa_field(&i1, &i2).unwrap();
        let n_max = 64;
        let f = fourier_of_pcw_field(&a, n_max);
        assert!(f.reality_defect() < 1e-12);
        for _ in 0..5 {
            let n = rng.gen_range(-20i64..20);
            let samples = 200_000;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..samples {
                let theta = TAU * k as f64 / samples as f64;
                acc += a.eval(&CirclePoint::new(theta))
                    * Complex64::from_polar(1.0, -(n as f64) * theta);
            }
            acc /= samples as f64;
            assert!((acc - f.coeff(n)).norm() < 1e-6, "n={n}");
        }
        // Cubic decay |f̂_n| n³ bounded (f'' has bounded variation).
        let c3 = (2..=n_max)
            .map(|n| f.coeff(n).norm() * (n as f64).powi(3))
            .fold(0.0, f64::max);
        assert!(c3 < 100.0, "unexpectedly large cubic-decay constant {c3}");
        // Parseval sanity: sampled max |f| ≤ Σ |f̂_n|.
        let sum: f64 = (-n_max..=n_max).map(|n| f.coeff(n).norm()).sum();
        let max_f = (0..512)
            .map(|k| a.eval(&CirclePoint::new(TAU * k as f64 / 512.0)).abs())
            .fold(0.0, f64::max);
        assert!(max_f <= sum + 1e-9);
    }

    #[test]
    fn norms_zero_and_constant() {
        let z = FourierFunction::zero(16);
        assert_abs_diff_eq!(norm_three_half(&z).partial, 0.0);
        let c = FourierFunction::constant(1.0, 16);
        assert_abs_diff_eq!(norm_three_half(&c).partial, 1.0, epsilon = 1e-14);
        assert!(norm_three_half(&c).tail_bound.is_none());
        let mut with_cert = FourierFunction::constant(1.0, 16);
        with_cert.decay_cert = Some(2.0);
        assert!(norm_three_half(&with_cert).tail_bound.unwrap() > 0.0);
    }

    #[test]
    fn c1_norm_bounded_by_three_half_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let (i1, i2) = random_distant_pair(&mut rng);
            let field = kappa_field(&i1, &i2).unwrap();
            let f = fourier_of_pcw_field(&field, 128);
            let c1 = norm_c1(&f, 512);
            let n32 = norm_three_half(&f).partial;
            assert!(c1 <= n32 + 1e-9, "‖f‖₁={c1} > ‖f‖₃⁄₂={n32}");
        }
    }

    #[test]
    fn convolution_properties() {
        let i = Interval::from_angles(-0.4, 0.4).unwrap();
        let moll = fourier_of_pcw_field(&bump_field(&i).unwrap(), 32);
        assert_abs_diff_eq!(moll.coeff(0).re, 1.0, epsilon = 1e-10);

        let z = convolve_smooth(&FourierFunction::zero(32), &moll).unwrap();
        assert_abs_diff_eq!(norm_three_half(&z).partial, 0.0);

        let bad = FourierFunction::constant(0.5, 8);
        assert!(convolve_smooth(&FourierFunction::zero(8), &bad).is_err());

        // Shrinking supports: ‖f∗φ_k − f‖₃⁄₂ decreasing on a test function.
        let f = FourierFunction::project(|t| t.cos() * (t.sin()).exp(), 24, 512);
        let mut last = f64::INFINITY;
        for width in [1.2, 0.6, 0.3, 0.15] {
            let w = Interval::from_angles(-width, width).unwrap();
            let phi = fourier_of_pcw_field(&bump_field(&w).unwrap(), 24);
            let conv = convolve_smooth(&f, &phi).unwrap();
            let err = norm_three_half(&conv.sub(&f)).partial;
            assert!(err < last, "width {width}: {err} !< {last}");
            last = err;
        }

        // Positivity preserved: f ≥ 0, φ ≥ 0 ⇒ sampled min ≥ −1e−9.
        let pos = FourierFunction::project(|t| 1.0 + 0.9 * t.cos(), 24, 512);
        let conv = convolve_smooth(&pos, &moll).unwrap();
        let min = (0..1024)
            .map(|k| conv.eval(&CirclePoint::new(TAU * k as f64 / 1024.0)))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9);
    }

    #[test]
    fn flow_of_zero_field_is_identity() {
        let z = CirclePoint::new(1.234);
        let img = flow_exp(|_| 0.0, &z, 5.0);
        assert!(img.dist(&z) < 1e-12);
    }

    #[test]
    fn flow_of_dilation_field_matches_mobius_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = MobiusField::dilation_field();
        for _ in 0..20 {
            let z = CirclePoint::new(rng.gen_range(0.0..TAU));
            let s = rng.gen_range(-1.5..1.5);
            let via_flow = flow_exp(|theta| d.eval(&CirclePoint::new(theta)), &z, s);
            let via_exp = dilation(s).apply(&z);
            assert!(via_flow.dist(&via_exp) < 1e-8, "s={s} θ={}", z.theta);
        }
    }

    #[test]
    fn flow_group_law() {
        let f = |theta: f64| 0.3 + 0.2 * theta.cos() + 0.4 * (2.0 * theta).sin();
        let z = CirclePoint::new(0.7);
        for (t, u) in [(0.5, 0.9), (-1.0, 0.4)] {
            let a = flow_exp(f, &flow_exp(f, &z, t), u);
            let b = flow_exp(f, &z, t + u);
            assert!(a.dist(&b) < 1e-8);
        }
    }

    #[test]
    fn flow_displacement_obeys_gronwall_bound() {
        // |Exp(f)(x) − Exp(f_n)(x)| ≤ ‖f−f_n‖₁ e^{‖f‖₁}
        let f = FourierFunction::project(|t| 0.4 * t.sin() + 0.1, 8, 256);
        let mut g = f.clone();
        g.set_pair(2, Complex64::new(0.01, -0.02));
        let nf = norm_c1(&f, 1024);
        let ndiff = norm_c1(&f.sub(&g), 1024);
        let bound = ndiff * nf.exp();
        for k in 0..16 {
            let z = CirclePoint::new(TAU * k as f64 / 16.0);
            let a = flow_exp_fourier(&f, &z, 1.0);
            let b = flow_exp_fourier(&g, &z, 1.0);
            assert!(a.dist(&b) <= bound + 1e-9, "disp {} > bound {}", a.dist(&b), bound);
        }
    }

    #[test]
    fn serde_round_trip() {
        let mut f = FourierFunction::zero(3);
        f.set_pair(1, Complex64::new(0.5, -0.25));
        let j = serde_json::to_string(&f).unwrap();
        let back: FourierFunction = serde_json::from_str(&j).unwrap();
        assert_eq!(back.n_max(), 3);
        assert!((back.coeff(-1) - Complex64::new(0.5, 0.25)).norm() < 1e-15);
    }
}
