//! Truncated smeared stress-energy operators `T(f) = Σ f̂_n L_n` on
//! lowest-weight modules, with energy-bound verification, the ε-uniform
//! commutator-norm estimate, exact `T(f)`–`T(g)` commutators with central
//! term, and the split of the 2-translation generator into two one-sided
//! nonnegative pieces.
//!
//! Operators are kept as the real embedding `[[Re, −Im], [Im, Re]]` of the
//! complex matrix, so Hermitian spectra and operator norms come from real
//! symmetric eigensolvers. `safe_level` records the highest level whose
//! matrix elements are exact images of the algebraic action; identity
//! checks stay below it.

use crate::exact::{GaussRat, Rat, RatMatrix};
use crate::fourier::{fourier_of_arc_restriction, norm_three_half, FourierFunction};
use crate::verma::{onb_tower, partitions, OrthoModule, Partition, VermaModule};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Truncated operators
// ---------------------------------------------------------------------------

/// Dense truncated operator on the stacked levels of a module, stored as
/// the real embedding of its complex matrix.
pub struct TruncatedOperator {
    pub module_tag: String,
    pub n_levels: u32,
    pub safe_level: u32,
    /// Complex dimension (the embedding is `2·dim × 2·dim`).
    pub dim: usize,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
    /// Carried over from the smearing function; `None` means no certificate
    /// was attached and the norm is a bare truncation.
    pub norm_warning: Option<String>,
}

impl TruncatedOperator {
    pub fn zero(tag: &str, n_levels: u32, dim: usize) -> Self {
        TruncatedOperator {
            module_tag: tag.to_string(),
            n_levels,
            safe_level: n_levels,
            dim,
            re: DMatrix::zeros(dim, dim),
            im: DMatrix::zeros(dim, dim),
            norm_warning: None,
        }
    }

    pub fn embedding(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut e = DMatrix::zeros(2 * d, 2 * d);
        e.view_mut((0, 0), (d, d)).copy_from(&self.re);
        e.view_mut((d, d), (d, d)).copy_from(&self.re);
        e.view_mut((0, d), (d, d)).copy_from(&(-&self.im));
        e.view_mut((d, 0), (d, d)).copy_from(&self.im);
        e
    }

    /// `‖Mv‖` for a real vector `v`.
    pub fn apply_norm(&self, v: &DVector<f64>) -> f64 {
        let re = &self.re * v;
        let im = &self.im * v;
        (re.norm_squared() + im.norm_squared()).sqrt()
    }

    /// Largest violation of Hermiticity, `max |M − M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let sym = (&self.re - self.re.transpose()).abs().max();
        let skew = (&self.im + self.im.transpose()).abs().max();
        sym.max(skew)
    }

    /// Smallest eigenvalue (requires Hermitian input; eigenvalues of the
    /// real embedding are those of the complex matrix, doubled). Real
    /// matrices skip the embedding.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.im.abs().max() < 1e-13 {
            symmetric_min_eig(&self.re)
        } else {
            symmetric_min_eig(&self.embedding())
        }
    }

    /// Operator norm via the singular values of the embedding.
    pub fn operator_norm(&self) -> f64 {
        self.embedding().svd(false, false).singular_values.max()
    }

    pub fn add_scaled(&mut self, other: &TruncatedOperator, s: Complex64) {
        self.re += s.re * &other.re - s.im * &other.im;
        self.im += s.re * &other.im + s.im * &other.re;
    }
}

/// `T(f) = Σ_{|n| ≤ cutoff} f̂_n · (compression of L_n)` on a module
/// truncation; the cutoff is `min(2N, n_max(f))`, which between levels
/// `≤ N` reproduces the compression of the full sum exactly.
pub fn smear(f: &FourierFunction, module: &OrthoModule, tag: &str) -> TruncatedOperator {
    let dim = module.total_dim();
    let n = module.n_levels;
    let cutoff = f.n_max().min(2 * n as i64);
    let mut re = DMatrix::zeros(dim, dim);
    let mut im = DMatrix::zeros(dim, dim);
    for k in -cutoff..=cutoff {
        let c = f.coeff(k);
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let m = module.full_matrix(k);
        re += c.re * &m;
        im += c.im * &m;
    }
    let span = cutoff.unsigned_abs() as u32;
    let norm_warning = if f.decay_cert.is_none() && f.n_max() > 2 * n as i64 {
        Some("no decay certificate attached; tail of ‖f‖₃⁄₂ unknown".to_string())
    } else {
        None
    };
    TruncatedOperator {
        module_tag: tag.to_string(),
        n_levels: n,
        safe_level: n.saturating_sub(span.min(n)),
        dim,
        re,
        im,
        norm_warning,
    }
}

// ---------------------------------------------------------------------------
// Energy bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct EnergyBoundReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `‖T(f)v‖ / (√(1+c/12)·‖f‖₃⁄₂·‖(1+L₀)v‖)` observed (≤ 1).
    pub worst_smeared_ratio: f64,
    /// Largest single-mode ratio against `√(1+c/12)(1+|n|^{3/2})‖(1+L₀)v‖`.
    pub worst_mode_ratio: f64,
    /// Largest quadratic ratio `‖T(f₁)T(f₂)v‖ / (r‖(1+L₀²)v‖)`.
    pub worst_quadratic_ratio: f64,
}

fn random_vector_below(
    module: &OrthoModule,
    max_level: u32,
    rng: &mut impl Rng,
) -> DVector<f64> {
    let dim = module.total_dim();
    let mut v = DVector::zeros(dim);
    for k in 0..=max_level.min(module.n_levels) {
        let off = module.level_offset(k);
        for j in 0..module.dims[k as usize] {
            v[off + j] = rng.gen_range(-1.0..1.0);
        }
    }
    v
}

fn weighted_norm(module: &OrthoModule, v: &DVector<f64>, weight: impl Fn(f64) -> f64) -> f64 {
    let l0 = module.l0_diagonal();
    v.iter()
        .zip(l0.iter())
        .map(|(x, e)| (x * weight(*e)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Verify `‖T(f)Ψ‖ ≤ √(1+c/12) ‖f‖₃⁄₂ ‖(1+L₀)Ψ‖`, the single-mode bound
/// `‖L_nΨ‖ ≤ √(1+c/12)(1+|n|^{3/2})‖(1+L₀)Ψ‖` for `|n| ≤ 6`, and the
/// quadratic bound `‖T(f)T(f')Ψ‖ ≤ r‖(1+L₀²)Ψ‖` with
/// `r = 2r₁r₂ + √2·r₁·r₃` assembled from the linear bounds on `f`, `f'`
/// and the derivative of `f'`.
pub fn energy_bound_verify(
    f: &FourierFunction,
    module: &OrthoModule,
    rng: &mut impl Rng,
    trials: usize,
) -> EnergyBoundReport {
    let r0 = (1.0 + module.c / 12.0).sqrt();
    let op = smear(f, module, "energy-bound");
    let f_norm = norm_three_half(f).partial;
    let span = f.n_max().min(module.n_levels as i64) as u32;
    let max_level = module.n_levels.saturating_sub(span);
    // Quadratic data: T(f)T(f) with the commutator correction through f'.
    let fp = f.derivative();
    let op2 = smear(&fp, module, "energy-bound-deriv");
    let r1 = r0 * f_norm;
    let r2 = r1;
    let r3 = r0 * norm_three_half(&fp).partial;
    let quad_r = 2.0 * r1 * r2 + (2.0f64).sqrt() * r1 * r3;
    let _ = &op2;

    let mut violations = 0usize;
    let mut worst_smeared: f64 = 0.0;
    let mut worst_mode: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    let quad_level = module.n_levels.saturating_sub(2 * span);
    for _ in 0..trials {
        let v = random_vector_below(module, max_level, rng);
        if v.norm() == 0.0 {
            continue;
        }
        let rhs = r0 * f_norm * weighted_norm(module, &v, |e| 1.0 + e);
        let lhs = op.apply_norm(&v);
        if rhs > 0.0 {
            worst_smeared = worst_smeared.max(lhs / rhs);
        }
        if lhs > rhs + 1e-9 * rhs.max(1.0) {
            violations += 1;
        }
        // Single-mode bounds.
        for n in -6i64..=6 {
            if n == 0 {
                continue;
            }
            let vn = random_vector_below(
                module,
                module.n_levels.saturating_sub(n.unsigned_abs() as u32),
                rng,
            );
            if vn.norm() == 0.0 {
                continue;
            }
            let ln_v = module.full_matrix(n) * &vn;
            let bound = r0
                * (1.0 + (n.abs() as f64).powf(1.5))
                * weighted_norm(module, &vn, |e| 1.0 + e);
            if bound > 0.0 {
                worst_mode = worst_mode.max(ln_v.norm() / bound);
            }
            if ln_v.norm() > bound + 1e-9 * bound.max(1.0) {
                violations += 1;
            }
        }
        // Quadratic bound on a fresh deeper-truncated vector.
        let vq = random_vector_below(module, quad_level, rng);
        if vq.norm() > 0.0 {
            let re1 = &op.re * (&op.re * &vq) - &op.im * (&op.im * &vq);
            let im1 = &op.re * (&op.im * &vq) + &op.im * (&op.re * &vq);
            let lhs_q = (re1.norm_squared() + im1.norm_squared()).sqrt();
            let rhs_q = quad_r * weighted_norm(module, &vq, |e| 1.0 + e * e);
            if rhs_q > 0.0 {
                worst_quad = worst_quad.max(lhs_q / rhs_q);
            }
            if lhs_q > rhs_q + 1e-9 * rhs_q.max(1.0) {
                violations += 1;
            }
        }
    }
    EnergyBoundReport {
        trials,
        violations,
        worst_smeared_ratio: worst_smeared,
        worst_mode_ratio: worst_mode,
        worst_quadratic_ratio: worst_quad,
    }
}

// ---------------------------------------------------------------------------
// ε-uniform commutator bound
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CommutatorBoundReport {
    pub n: i64,
    pub bound: f64,
    /// Largest `‖[L_n, e^{−εL₀}]v‖/‖v‖` over the ε grid and trial vectors.
    pub observed_sup: f64,
    pub violations: usize,
    /// Largest defect of the per-level factor identity
    /// `[Lₙ, e^{−εL₀}]v_k = (e^{−ε(h+k)} − e^{−ε(h+k−n)}) Lₙ v_k`.
    pub per_level_defect: f64,
}

/// Check `‖[Lₙ, e^{−εL₀}]v‖ ≤ √(3(1+c/12)|n|³)·‖v‖` uniformly over an ε
/// grid, along with the per-level scalar structure of the commutator.
pub fn commutator_norm_bound(
    n: i64,
    module: &OrthoModule,
    eps_grid: &[f64],
    rng: &mut impl Rng,
    trials: usize,
) -> CommutatorBoundReport {
    let bound = (3.0 * (1.0 + module.c / 12.0) * (n.abs() as f64).powi(3)).sqrt();
    let m_n = module.full_matrix(n);
    let l0 = module.l0_diagonal();
    let dim = module.total_dim();
    let mut observed: f64 = 0.0;
    let mut violations = 0usize;
    let mut per_level_defect: f64 = 0.0;
    for &eps in eps_grid {
        let e: DVector<f64> = DVector::from_iterator(dim, l0.iter().map(|x| (-eps * x).exp()));
        // C = M_n E − E M_n with E diagonal.
        let mut c_mat = m_n.clone();
        for col in 0..dim {
            for row in 0..dim {
                c_mat[(row, col)] = m_n[(row, col)] * (e[col] - e[row]);
            }
        }
        for _ in 0..trials {
            let mut v = DVector::zeros(dim);
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            let ratio = (&c_mat * &v).norm() / v.norm();
            observed = observed.max(ratio);
            if ratio > bound + 1e-9 * bound.max(1.0) {
                violations += 1;
            }
        }
        // Per-level factor: on level k the commutator acts as
        // (e^{−ε(h+k)} − e^{−ε(h+k−n)})·L_n.
        for k in 0..=module.n_levels {
            let target = k as i64 - n;
            if target < 0 || target > module.n_levels as i64 {
                continue;
            }
            let factor =
                (-eps * (module.h + k as f64)).exp() - (-eps * (module.h + target as f64)).exp();
            let block = module.block(n, k);
            let off_r = module.level_offset(target as u32);
            let off_c = module.level_offset(k);
            for r in 0..block.nrows() {
                for cc in 0..block.ncols() {
                    let expect = factor * block[(r, cc)];
                    per_level_defect =
                        per_level_defect.max((c_mat[(off_r + r, off_c + cc)] - expect).abs());
                }
            }
        }
    }
    CommutatorBoundReport { n, bound, observed_sup: observed, violations, per_level_defect }
}

// ---------------------------------------------------------------------------
// Exact T(f)–T(g) commutators
// ---------------------------------------------------------------------------

/// A trigonometric polynomial with exact Gaussian-rational coefficients,
/// `f(z) = Σ c_n zⁿ`.
#[derive(Clone, Debug, Default)]
pub struct TrigPoly {
    pub coeffs: BTreeMap<i64, GaussRat>,
}

impl TrigPoly {
    pub fn new() -> Self {
        TrigPoly { coeffs: BTreeMap::new() }
    }

    pub fn monomial(n: i64, c: GaussRat) -> Self {
        let mut t = TrigPoly::new();
        if !c.is_zero() {
            t.coeffs.insert(n, c);
        }
        t
    }

    /// `i·l_n = zⁿ`, the polynomial with `T(i l_n) = L_n`.
    pub fn il(n: i64) -> Self {
        TrigPoly::monomial(n, GaussRat::from_rat(Rat::one()))
    }

    pub fn coeff(&self, n: i64) -> GaussRat {
        self.coeffs.get(&n).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn add_coeff(&mut self, n: i64, c: &GaussRat) {
        let cur = self.coeff(n);
        let sum = &cur + c;
        if sum.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, sum);
        }
    }

    /// Derivative with respect to the angle: `(f')_n = i n f_n`.
    pub fn derivative(&self) -> TrigPoly {
        let mut out = TrigPoly::new();
        for (n, c) in &self.coeffs {
            let i_n = GaussRat::new(Rat::zero(), crate::exact::rint(*n));
            out.add_coeff(*n, &(&i_n * c));
        }
        out
    }

    pub fn multiply(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = TrigPoly::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.add_coeff(a + b, &(ca * cb));
            }
        }
        out
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (n, c) in &other.coeffs {
            out.add_coeff(*n, &(-c.clone()));
        }
        out
    }

    /// `(g,f) = −Σ_n ĝ_{−n} (in)(1−n²) f̂_n`, exact.
    pub fn stress_pairing(g: &TrigPoly, f: &TrigPoly) -> GaussRat {
        let mut acc = GaussRat::zero();
        for (n, fc) in &f.coeffs {
            let gc = g.coeff(-n);
            if gc.is_zero() {
                continue;
            }
            let factor = GaussRat::new(Rat::zero(), crate::exact::rint(*n))
                .scale(&crate::exact::rint(1 - n * n));
            acc = &acc + &(&(&gc * &factor) * fc);
        }
        -acc
    }
}

/// Verma states with Gaussian-rational coefficients (for smearing with
/// complex polynomial coefficients while staying exact).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussState {
    pub terms: BTreeMap<Partition, GaussRat>,
}

impl GaussState {
    pub fn basis(p: Partition) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, GaussRat::from_rat(Rat::one()));
        GaussState { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, p: Partition, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(p) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }
}

/// `T(f)` applied exactly to a Gaussian-rational state on a Verma module.
pub fn smear_state(module: &VermaModule, f: &TrigPoly, v: &GaussState) -> GaussState {
    let mut out = GaussState::default();
    for (n, c) in &f.coeffs {
        for (p, pc) in &v.terms {
            let img = module.apply_basis(*n, p);
            for (q, qc) in &img.terms {
                out.add(q.clone(), (&(c * pc)).scale(qc));
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct TTCommutatorReport {
    pub checked_vectors: usize,
    pub exact: bool,
}

/// Verify `[T(g), T(f)] = i T(gf' − g'f) + i(c/12)(g,f)·𝟙` exactly in
/// rational arithmetic on every basis vector of level
/// `≤ max_level − deg f − deg g`.
pub fn tt_commutator_check(
    module: &VermaModule,
    f: &TrigPoly,
    g: &TrigPoly,
    max_level: u32,
) -> TTCommutatorReport {
    let span = (f.degree() + g.degree()) as u32;
    let bracket = g.multiply(&f.derivative()).sub(&g.derivative().multiply(f));
    let pairing = TrigPoly::stress_pairing(g, f);
    let i_unit = GaussRat::i();
    let central = &i_unit * &pairing.scale(&(&module.params.c * crate::exact::rat(1, 12)));
    let mut checked = 0usize;
    let mut exact = true;
    for k in 0..=max_level.saturating_sub(span) {
        for p in partitions(k) {
            let v = GaussState::basis(p.clone());
            let gf = smear_state(module, g, &smear_state(module, f, &v));
            let fg = smear_state(module, f, &smear_state(module, g, &v));
            let mut lhs = gf;
            for (q, c) in fg.terms {
                lhs.add(q, -c);
            }
            // rhs = i T(bracket) v + central·v
            let mut rhs = smear_state(module, &bracket, &v);
            let mut rhs_i = GaussState::default();
            for (q, c) in rhs.terms {
                rhs_i.add(q, &i_unit * &c);
            }
            rhs = rhs_i;
            rhs.add(p.clone(), central.clone());
            if lhs != rhs {
                exact = false;
            }
            checked += 1;
        }
    }
    TTCommutatorReport { checked_vectors: checked, exact }
}

// ---------------------------------------------------------------------------
// The 2-translation split
// ---------------------------------------------------------------------------

/// `t⁽²⁾(z) = 1/4 − (z² + z⁻²)/8` as a truncated Fourier function.
pub fn t2_function(n_max: i64) -> FourierFunction {
    let mut f = FourierFunction::zero(n_max);
    f.set_pair(0, Complex64::new(0.25, 0.0));
    f.set_pair(2, Complex64::new(-0.125, 0.0));
    f
}

/// The one-sided pieces: `t⁽²⁾₊` equals `t⁽²⁾` on the closed upper
/// semicircle and vanishes on the lower one, and vice versa; computed by
/// exact per-arc integration of the restricted trigonometric polynomial.
pub fn t2_plus(n_max: i64) -> FourierFunction {
    t2_restricted(0.0, PI, n_max)
}

pub fn t2_minus(n_max: i64) -> FourierFunction {
    t2_restricted(PI, PI, n_max)
}

fn t2_restricted(start: f64, len: f64, n_max: i64) -> FourierFunction {
    let modes = [
        (0i64, Complex64::new(0.25, 0.0)),
        (2, Complex64::new(-0.125, 0.0)),
        (-2, Complex64::new(-0.125, 0.0)),
    ];
    fourier_of_arc_restriction(&modes, start, len, n_max)
}

/// Smallest eigenvalue of a real symmetric matrix: dense eigendecomposition
/// for modest sizes, Lanczos with full reorthogonalization beyond that
/// (extreme Ritz values converge to machine precision long before the
/// iteration cap).
pub fn symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    if n <= 600 {
        return nalgebra::SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
    }
    lanczos_min_eig(m, 320)
}

fn lanczos_min_eig(m: &DMatrix<f64>, max_iters: usize) -> f64 {
    let n = m.nrows();
    let iters = max_iters.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(iters);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.7).sin());
    v /= v.norm();
    basis.push(v.clone());
    let mut last_est = f64::INFINITY;
    for k in 0..iters {
        let mut w = m * &basis[k];
        let alpha = w.dot(&basis[k]);
        alphas.push(alpha);
        // Full reorthogonalization, twice, for numerical hygiene.
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w -= c * b;
            }
        }
        let beta = w.norm();
        // Tridiagonal Ritz problem for the current Krylov space.
        let dim = alphas.len();
        let mut t = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            t[(i, i)] = alphas[i];
            if i + 1 < dim {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let est = nalgebra::SymmetricEigen::new(t)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if beta < 1e-12 || (k > 24 && (last_est - est).abs() < 1e-12) {
            return est;
        }
        last_est = est;
        betas.push(beta);
        basis.push(w / beta);
    }
    last_est
}

/// Rotate a real circle function by `alpha` (`g(θ) = f(θ − alpha)`); on the
/// module side this is conjugation by the diagonal unitary `e^{iαL₀}`, so
/// the smeared spectra agree.
pub fn rotate_function(f: &FourierFunction, alpha: f64) -> FourierFunction {
    let mut g = FourierFunction::zero(f.n_max());
    for n in -f.n_max()..=f.n_max() {
        g.set_raw(n, f.coeff(n) * Complex64::from_polar(1.0, -(n as f64) * alpha));
    }
    g
}

#[derive(Debug, Serialize)]
pub struct T2SplitReport {
    pub c: f64,
    pub n_levels: u32,
    /// `max_n |t̂⁽²⁾₊(n) + t̂⁽²⁾₋(n) − t̂⁽²⁾(n)|` at the coefficient cutoff.
    pub coefficient_defect: f64,
    /// `t⁽²⁾(±1)` and `(t⁽²⁾)'(±1)` (all four should vanish).
    pub endpoint_values: [f64; 4],
    pub lambda_min_t2: f64,
    /// Lower bound `−c/32` the compression must respect.
    pub lower_bound: f64,
    pub lambda_min_plus: f64,
    pub lambda_min_minus: f64,
    /// `λ_min` of the positive part at the enlarged cutoff, for the Cauchy
    /// gap `|λ_min(N) − λ_min(N+4)|`.
    pub lambda_min_plus_next: f64,
    pub cauchy_gap: f64,
}

/// Build the vacuum module at central charge `c`, smear `t⁽²⁾` and its two
/// one-sided nonnegative pieces, and report the compression spectra: the
/// two-sided generator is bounded below by `−c/32` (it is the 2-translation
/// generator minus that constant), and the one-sided pieces decrease with
/// the cutoff but stay Cauchy.
///
/// One tower is built at `N+4`; the `N` results come from its principal
/// submatrix (the level blocks of the tower do not depend on the cutoff).
/// The one-sided pieces are even about `∓i`, so rotating them onto the real
/// axis of symmetry turns their coefficients real — a unitary conjugation
/// by `e^{iαL₀}` that leaves the spectrum alone but halves the eigensolve.
pub fn t2_split(c: f64, n_levels: u32, coeff_cutoff: i64) -> T2SplitReport {
    let t2 = t2_function(coeff_cutoff);
    let plus = t2_plus(coeff_cutoff);
    let minus = t2_minus(coeff_cutoff);
    let mut coeff_defect: f64 = 0.0;
    for n in -coeff_cutoff..=coeff_cutoff {
        coeff_defect = coeff_defect.max((plus.coeff(n) + minus.coeff(n) - t2.coeff(n)).norm());
    }
    let one = crate::mobius::CirclePoint::new(0.0);
    let minus_one = crate::mobius::CirclePoint::new(PI);
    let endpoint_values = [
        t2.eval(&one),
        t2.eval(&minus_one),
        t2.eval_deriv(&one),
        t2.eval_deriv(&minus_one),
    ];
    let module = onb_tower(c, 0.0, n_levels + 4);
    let dim_n: usize = module.dims[..=n_levels as usize].iter().sum();

    // t⁽²⁾ has only even modes: even/odd level sectors decouple.
    let op_t2 = smear(&t2, &module, "t2");
    let lam_t2 = {
        let mut best = f64::INFINITY;
        for parity in 0..2u32 {
            let mut idx = Vec::new();
            for k in 0..=n_levels {
                if k % 2 == parity {
                    let off = module.level_offset(k);
                    idx.extend(off..off + module.dims[k as usize]);
                }
            }
            if idx.is_empty() {
                continue;
            }
            let sub =
                DMatrix::from_fn(idx.len(), idx.len(), |i, j| op_t2.re[(idx[i], idx[j])]);
            best = best.min(symmetric_min_eig(&sub));
        }
        best
    };

    let g_plus = rotate_function(&plus, -PI / 2.0);
    let g_minus = rotate_function(&minus, -3.0 * PI / 2.0);
    let op_plus = smear(&g_plus, &module, "t2+");
    let op_minus = smear(&g_minus, &module, "t2-");
    debug_assert!(op_plus.im.abs().max() < 1e-12);
    debug_assert!(op_minus.im.abs().max() < 1e-12);
    let lam_plus_next = symmetric_min_eig(&op_plus.re);
    let lam_plus = symmetric_min_eig(&op_plus.re.view((0, 0), (dim_n, dim_n)).into_owned());
    let lam_minus = symmetric_min_eig(&op_minus.re.view((0, 0), (dim_n, dim_n)).into_owned());
    T2SplitReport {
        c,
        n_levels,
        coefficient_defect: coeff_defect,
        endpoint_values,
        lambda_min_t2: lam_t2,
        lower_bound: -c / 32.0,
        lambda_min_plus: lam_plus,
        lambda_min_minus: lam_minus,
        lambda_min_plus_next: lam_plus_next,
        cauchy_gap: (lam_plus - lam_plus_next).abs(),
    }
}

// ---------------------------------------------------------------------------
// Continuity surrogate
// ---------------------------------------------------------------------------

/// On a fixed truncation, `‖T(f_k) − T(f)‖ ≤ √(1+c/12) ‖f_k − f‖₃⁄₂ (1+h+N)`,
/// the finite-level restatement of strong-resolvent continuity. Returns
/// `(operator_norm, bound)` pairs for a shrinking sequence of perturbations.
pub fn continuity_surrogate(
    f: &FourierFunction,
    perturbations: &[FourierFunction],
    module: &OrthoModule,
) -> Vec<(f64, f64)> {
    let r0 = (1.0 + module.c / 12.0).sqrt();
    let base = smear(f, module, "continuity");
    perturbations
        .iter()
        .map(|fk| {
            let mut diff = smear(fk, module, "continuity");
            diff.add_scaled(&base, Complex64::new(-1.0, 0.0));
            let norm = diff.operator_norm();
            let bound = r0
                * norm_three_half(&fk.sub(f)).partial
                * (1.0 + module.h + module.n_levels as f64);
            (norm, bound)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exact smeared operators on the PBW basis (for JSON export)
// ---------------------------------------------------------------------------

/// Exact matrix of `T(f)` on the stacked Verma PBW basis for a trig
/// polynomial with Gaussian-rational coefficients; returned as separate
/// real and imaginary rational matrices.
pub fn exact_smear_matrix(
    module: &VermaModule,
    f: &TrigPoly,
    n_levels: u32,
) -> (RatMatrix, RatMatrix) {
    let offsets = crate::verma::level_offsets(n_levels);
    let dim = offsets[n_levels as usize + 1];
    let mut re = RatMatrix::zeros(dim, dim);
    let mut im = RatMatrix::zeros(dim, dim);
    for (n, c) in &f.coeffs {
        let op = module.operator_matrix(*n, n_levels);
        for i in 0..dim {
            for j in 0..dim {
                let e = op.matrix.get(i, j);
                if e.is_zero() {
                    continue;
                }
                *re.get_mut(i, j) += &c.re * e;
                *im.get_mut(i, j) += &c.im * e;
            }
        }
    }
    (re, im)
}
