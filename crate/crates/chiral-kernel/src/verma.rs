//! Virasoro lowest-weight (Verma) modules over exact rationals.
//!
//! Basis vectors of level `k` are words `L_{−λ₁}···L_{−λ_j}Φ_h` indexed by
//! partitions `λ₁ ≥ ... ≥ λ_j ≥ 1` of `k`. Acting with any `L_n` is done by
//! commuting it rightward through the word with
//! `[L_n, L_m] = (n−m)L_{n+m} + (c/12)(n³−n)δ_{−n,m}` until it annihilates
//! the lowest-weight vector or weights it; every coefficient stays an exact
//! rational in `(c, h)`.
//!
//! On top of the module action sit the Shapovalov Gram matrices and their
//! exact kernels (singular vectors), the unitarity classification `(c ≥ 1,
//! h ≥ 0)` ∪ discrete series, truncated operator matrices, orthonormalized
//! irreducible quotients, and the vacuum commutator identities.

use crate::exact::{rat, rat_string, rat_to_f64, Rat, RatMatrix};
use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, thiserror::Error)]
pub enum VermaError {
    #[error("quotient module requires unitary parameters; classification was {0:?}")]
    NotUnitary(UnitarityClass),
}

/// Central charge and lowest weight, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirasoroParams {
    pub c: Rat,
    pub h: Rat,
}

impl VirasoroParams {
    pub fn new(c: Rat, h: Rat) -> Self {
        VirasoroParams { c, h }
    }

    pub fn from_i64(c: (i64, i64), h: (i64, i64)) -> Self {
        VirasoroParams { c: rat(c.0, c.1), h: rat(h.0, h.1) }
    }
}

/// A partition, stored weakly decreasing; the empty partition labels `Φ_h`.
pub type Partition = Vec<u32>;

pub fn partition_level(p: &Partition) -> u32 {
    p.iter().sum()
}

/// All partitions of `n` in the fixed basis order: ascending
/// lexicographically in the weakly decreasing representation, so
/// `[1,1,..,1]` comes first and `[n]` last (matching the convention in
/// which the level-2 Gram is `[[4h(2h+1), 6h], [6h, 4h+c/2]]`).
pub fn partitions(n: u32) -> Vec<Partition> {
    fn rec(remaining: u32, min_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            let mut p = prefix.clone();
            p.reverse();
            out.push(p);
            return;
        }
        for part in min_part..=remaining {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    rec(n, 1, &mut prefix, &mut out);
    out
}

/// Partition counts `p(0..=n)` by the pentagonal-number recurrence.
pub fn partition_counts(n: usize) -> Vec<num_bigint::BigUint> {
    use num_bigint::{BigInt, BigUint};
    let mut p = vec![BigUint::from(0u32); n + 1];
    p[0] = BigUint::from(1u32);
    for i in 1..=n {
        let mut acc = BigInt::from(0);
        let mut k: i64 = 1;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 0 { -1 } else { 1 };
            acc += sign * BigInt::from(p[i - g1].clone());
            if g2 <= i {
                acc += sign * BigInt::from(p[i - g2].clone());
            }
            k += 1;
        }
        p[i] = acc.to_biguint().expect("partition counts are nonnegative");
    }
    p
}

/// An exact-rational linear combination of partition basis vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VermaState {
    pub terms: BTreeMap<Partition, Rat>,
}

impl VermaState {
    pub fn zero() -> Self {
        VermaState { terms: BTreeMap::new() }
    }

    pub fn basis(p: Partition) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, Rat::one());
        VermaState { terms }
    }

    pub fn vacuum() -> Self {
        VermaState::basis(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, p: Partition, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(p) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_state(&mut self, other: &VermaState, scale: &Rat) {
        if scale.is_zero() {
            return;
        }
        for (p, v) in &other.terms {
            self.add_term(p.clone(), v * scale);
        }
    }

    pub fn scaled(&self, r: &Rat) -> VermaState {
        let mut out = VermaState::zero();
        out.add_state(self, r);
        out
    }

    pub fn coeff(&self, p: &Partition) -> Rat {
        self.terms.get(p).cloned().unwrap_or_else(Rat::zero)
    }

    /// `Some(level)` when homogeneous (zero states report level `None`).
    pub fn level(&self) -> Option<u32> {
        let mut lvl = None;
        for p in self.terms.keys() {
            let l = partition_level(p);
            match lvl {
                None => lvl = Some(l),
                Some(x) if x != l => return None,
                _ => {}
            }
        }
        lvl
    }

    /// Coordinates in the partition basis of one level.
    pub fn to_vector(&self, level: u32) -> Vec<Rat> {
        partitions(level).iter().map(|p| self.coeff(p)).collect()
    }

    pub fn from_vector(level: u32, v: &[Rat]) -> VermaState {
        let mut out = VermaState::zero();
        for (p, c) in partitions(level).iter().zip(v.iter()) {
            out.add_term(p.clone(), c.clone());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// The module
// ---------------------------------------------------------------------------

/// A Verma module at fixed `(c, h)` with a memoized `L_n` action.
///
/// The memo is keyed on `(n, partition)`; it is interior-mutable and private,
/// so all operations behave as pure functions of the inputs.
pub struct VermaModule {
    pub params: VirasoroParams,
    memo: RefCell<HashMap<(i64, Partition), VermaState>>,
}

impl VermaModule {
    pub fn new(params: VirasoroParams) -> Self {
        VermaModule { params, memo: RefCell::new(HashMap::new()) }
    }

    /// Central term `(c/12)(n³−n)`.
    fn central(&self, n: i64) -> Rat {
        &self.params.c * rat(n * n * n - n, 12)
    }

    /// `L_n` applied to a basis word, fully reduced to the canonical basis.
    pub fn apply_basis(&self, n: i64, word: &Partition) -> VermaState {
        if let Some(hit) = self.memo.borrow().get(&(n, word.clone())) {
            return hit.clone();
        }
        let result = self.apply_basis_uncached(n, word);
        self.memo.borrow_mut().insert((n, word.clone()), result.clone());
        result
    }

    fn apply_basis_uncached(&self, n: i64, word: &Partition) -> VermaState {
        if word.is_empty() {
            return match n.cmp(&0) {
                std::cmp::Ordering::Greater => VermaState::zero(),
                std::cmp::Ordering::Equal => VermaState::vacuum().scaled(&self.params.h),
                std::cmp::Ordering::Less => VermaState::basis(vec![(-n) as u32]),
            };
        }
        let m = word[0] as i64;
        let rest: Partition = word[1..].to_vec();
        if n < 0 && -n >= m {
            // Prepending keeps the word canonical.
            let mut w = word.clone();
            w.insert(0, (-n) as u32);
            return VermaState::basis(w);
        }
        // L_n L_{−m} = (n+m) L_{n−m} + (c/12)(n³−n) δ_{n,m} + L_{−m} L_n
        let mut out = VermaState::zero();
        out.add_state(&self.apply_basis(n - m, &rest), &rat(n + m, 1));
        if n == m {
            out.add_state(&VermaState::basis(rest.clone()), &self.central(n));
        }
        let pushed = self.apply_basis(n, &rest);
        let lowered = self.apply_state(-m, &pushed);
        out.add_state(&lowered, &Rat::one());
        out
    }

    pub fn apply_state(&self, n: i64, state: &VermaState) -> VermaState {
        let mut out = VermaState::zero();
        for (p, coeff) in &state.terms {
            out.add_state(&self.apply_basis(n, p), coeff);
        }
        out
    }

    /// `⟨L_{−λ}Φ, v⟩` for a state `v` of the same level: apply the adjoint
    /// word `L_{λ_j}···L_{λ₁}` (largest part acts first) and read off the
    /// `Φ_h` coefficient.
    pub fn pairing(&self, lambda: &Partition, v: &VermaState) -> Rat {
        let mut state = v.clone();
        for part in lambda {
            state = self.apply_state(*part as i64, &state);
            if state.is_zero() {
                return Rat::zero();
            }
        }
        state.coeff(&Vec::new())
    }

    /// Shapovalov Gram matrix at a level, exact and symmetric.
    pub fn gram_matrix(&self, level: u32) -> RatMatrix {
        let basis = partitions(level);
        let d = basis.len();
        let mut g = RatMatrix::zeros(d, d);
        for j in 0..d {
            let v = VermaState::basis(basis[j].clone());
            for i in 0..=j {
                let e = self.pairing(&basis[i], &v);
                g.set(i, j, e.clone());
                g.set(j, i, e);
            }
        }
        g
    }

    /// Exact determinant and a basis of singular vectors (the Gram kernel);
    /// each kernel vector is annihilated by `L₁` and `L₂` (asserted).
    pub fn gram_kernel(&self, level: u32) -> (Rat, Vec<VermaState>) {
        let g = self.gram_matrix(level);
        let det = g.det();
        let kernel = g
            .kernel()
            .into_iter()
            .map(|v| {
                let state = VermaState::from_vector(level, &v);
                debug_assert!(self.apply_state(1, &state).is_zero());
                debug_assert!(self.apply_state(2, &state).is_zero());
                state
            })
            .collect();
        (det, kernel)
    }

    /// `‖L_{−n}Φ_h‖²`, computed, not assumed (= `2nh + (c/12)(n³−n)`).
    pub fn lowering_norm_sq(&self, n: u32) -> Rat {
        self.pairing(&vec![n], &VermaState::basis(vec![n]))
    }

    /// Exact matrix of `L_n` between the partition bases of all levels
    /// `≤ n_levels`; components landing outside the range are dropped.
    pub fn operator_matrix(&self, n: i64, n_levels: u32) -> ExactOperator {
        let offsets = level_offsets(n_levels);
        let dim = offsets[n_levels as usize + 1];
        let mut m = RatMatrix::zeros(dim, dim);
        for k in 0..=n_levels {
            let target = k as i64 - n;
            if target < 0 || target > n_levels as i64 {
                continue;
            }
            let tgt_basis = partitions(target as u32);
            for (j, p) in partitions(k).iter().enumerate() {
                let img = self.apply_basis(n, p);
                for (i, q) in tgt_basis.iter().enumerate() {
                    let c = img.coeff(q);
                    if !c.is_zero() {
                        m.set(offsets[target as usize] + i, offsets[k as usize] + j, c);
                    }
                }
            }
        }
        ExactOperator { n, n_levels, matrix: m }
    }

    /// `([L_n,L_m] − (n−m)L_{n+m} − (c/12)(n³−n)δ_{−n,m}) v` on one basis
    /// vector, exact; zero iff the Virasoro relation holds there.
    pub fn virasoro_residual(&self, n: i64, m: i64, word: &Partition) -> VermaState {
        let v = VermaState::basis(word.clone());
        let nm = self.apply_state(n, &self.apply_basis(m, word));
        let mn = self.apply_state(m, &self.apply_basis(n, word));
        let mut out = VermaState::zero();
        out.add_state(&nm, &Rat::one());
        out.add_state(&mn, &-Rat::one());
        out.add_state(&self.apply_state(n + m, &v), &-rat(n - m, 1));
        if n + m == 0 {
            out.add_state(&v, &-self.central(n));
        }
        out
    }
}

/// Offsets of each level block in the stacked basis of levels `0..=n`;
/// `offsets[k+1] − offsets[k] = p(k)`.
pub fn level_offsets(n: u32) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for k in 0..=n {
        offsets.push(offsets[k as usize] + partitions(k).len());
    }
    offsets
}

/// Exact truncated operator on the stacked PBW basis.
pub struct ExactOperator {
    pub n: i64,
    pub n_levels: u32,
    pub matrix: RatMatrix,
}

// ---------------------------------------------------------------------------
// Unitarity classification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum UnitarityClass {
    Trivial,
    Continuum,
    Discrete { m: u32, p: u32, q: u32 },
    NonUnitary { witness_level: Option<u32> },
}

/// `c(m) = 1 − 6/((m+2)(m+3))`.
pub fn discrete_c(m: u32) -> Rat {
    Rat::one() - rat(6, ((m as i64) + 2) * ((m as i64) + 3))
}

/// `h_{p,q}(m) = (((m+3)p − (m+2)q)² − 1) / (4(m+2)(m+3))`.
pub fn discrete_h(m: u32, p: u32, q: u32) -> Rat {
    let (m, p, q) = (m as i64, p as i64, q as i64);
    let top = ((m + 3) * p - (m + 2) * q).pow(2) - 1;
    rat(top, 4 * (m + 2) * (m + 3))
}

/// Exact membership test against the classification of unitary irreducible
/// lowest-weight representations: the continuum `c ≥ 1, h ≥ 0` or the
/// discrete series `(c(m), h_{p,q}(m))` with `p ≤ m+1, q ≤ p`. For excluded
/// parameters, a level with non-positive-semidefinite Gram matrix is
/// searched up to `witness_depth` as a computational witness.
pub fn classify_unitarity(module: &VermaModule, witness_depth: u32) -> UnitarityClass {
    let c = &module.params.c;
    let h = &module.params.h;
    if c.is_zero() && h.is_zero() {
        return UnitarityClass::Trivial;
    }
    if !h.is_negative() && *c >= Rat::one() {
        return UnitarityClass::Continuum;
    }
    if !h.is_negative() && !c.is_negative() && *c < Rat::one() {
        // c = c(m) ⟺ (m+2)(m+3) = 6/(1−c) with m a nonnegative integer.
        let target = rat(6, 1) / (Rat::one() - c);
        if target.denom().is_one() {
            let disc = rat(25, 1) + rat(4, 1) * (target - rat(6, 1));
            if !disc.is_negative() && disc.denom().is_one() {
                let root = disc.numer().sqrt();
                if &root * &root == *disc.numer() {
                    let m_num = root - num_bigint::BigInt::from(5);
                    if !m_num.is_negative() && (&m_num % num_bigint::BigInt::from(2)).is_zero() {
                        use num_traits::ToPrimitive;
                        let m = (m_num / num_bigint::BigInt::from(2))
                            .to_u32()
                            .expect("discrete series index fits in u32");
                        for p in 1..=(m + 1) {
                            for q in 1..=p {
                                if discrete_h(m, p, q) == *h {
                                    return UnitarityClass::Discrete { m, p, q };
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut witness = None;
    for level in 1..=witness_depth {
        if module.gram_matrix(level).is_psd().is_err() {
            witness = Some(level);
            break;
        }
    }
    UnitarityClass::NonUnitary { witness_level: witness }
}

// ---------------------------------------------------------------------------
// Orthonormalized quotient modules
// ---------------------------------------------------------------------------

/// An irreducible lowest-weight module truncated at level `N`, in an
/// orthonormal basis: per-level dimensions and the lowering matrices
/// `L_n : level k → level k−n`. Raising matrices are transposes of the
/// lowering ones, by `L_n† = L_{−n}` in an orthonormal basis.
pub struct OrthoModule {
    pub c: f64,
    pub h: f64,
    pub n_levels: u32,
    pub dims: Vec<usize>,
    lower: HashMap<(u32, u32), DMatrix<f64>>,
}

impl OrthoModule {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn level_offset(&self, k: u32) -> usize {
        self.dims[..k as usize].iter().sum()
    }

    /// Block of `L_n` from level `k` to level `k−n` (empty when the target
    /// is out of range).
    pub fn block(&self, n: i64, k: u32) -> DMatrix<f64> {
        let d_k = self.dims[k as usize];
        if n == 0 {
            return DMatrix::from_diagonal_element(d_k, d_k, self.h + k as f64);
        }
        if n > 0 {
            let target = k as i64 - n;
            if target < 0 {
                return DMatrix::zeros(0, d_k);
            }
            self.lower
                .get(&(n as u32, k))
                .cloned()
                .unwrap_or_else(|| DMatrix::zeros(self.dims[target as usize], d_k))
        } else {
            let m = (-n) as u32;
            let src = k + m;
            if src > self.n_levels {
                return DMatrix::zeros(0, d_k);
            }
            self.lower
                .get(&(m, src))
                .map(|b| b.transpose())
                .unwrap_or_else(|| DMatrix::zeros(self.dims[src as usize], d_k))
        }
    }

    /// Dense matrix of `L_n` on the stacked levels `0..=N` (the compression
    /// of `L_n` to the truncation).
    pub fn full_matrix(&self, n: i64) -> DMatrix<f64> {
        let dim = self.total_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..=self.n_levels {
            let target = k as i64 - n;
            if target < 0 || target > self.n_levels as i64 {
                continue;
            }
            let block = self.block(n, k);
            let (r0, c0) = (self.level_offset(target as u32), self.level_offset(k));
            m.view_mut((r0, c0), (block.nrows(), block.ncols())).copy_from(&block);
        }
        m
    }

    /// Diagonal of `L₀` on the stacked basis.
    pub fn l0_diagonal(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.total_dim());
        for k in 0..=self.n_levels {
            d.extend(std::iter::repeat(self.h + k as f64).take(self.dims[k as usize]));
        }
        d
    }

    /// Highest level at which products with total mode span `span` are free
    /// of truncation effects.
    pub fn safe_level(&self, span: u32) -> u32 {
        self.n_levels.saturating_sub(span)
    }
}

/// Exact construction of the irreducible quotient up to level `n_levels`:
/// per level the exact Gram, its exact kernel, an exact complement, and an
/// orthonormal basis from the eigendecomposition of the (positive definite)
/// quotient Gram. Floats appear only after the kernel is removed exactly.
pub fn quotient_module(module: &VermaModule, n_levels: u32) -> Result<OrthoModule, VermaError> {
    let class = classify_unitarity(module, 0);
    if matches!(class, UnitarityClass::NonUnitary { .. }) {
        return Err(VermaError::NotUnitary(class));
    }
    struct LevelData {
        complement: Vec<usize>,
        x: DMatrix<f64>,
        g_rows: RatMatrix,
    }
    let mut levels: Vec<LevelData> = Vec::with_capacity(n_levels as usize + 1);
    let mut dims = Vec::with_capacity(n_levels as usize + 1);
    for k in 0..=n_levels {
        let g = module.gram_matrix(k);
        let p_k = g.rows;
        let mut working = g.clone();
        // Pivot columns are independent modulo the kernel, and for a PSD
        // form the principal submatrix on them is positive definite.
        let complement = working.rref();
        let d = complement.len();
        let mut q = RatMatrix::zeros(d, d);
        for (a, &i) in complement.iter().enumerate() {
            for (b, &j) in complement.iter().enumerate() {
                q.set(a, b, g.get(i, j).clone());
            }
        }
        let mut x = DMatrix::zeros(d, d);
        if d > 0 {
            let eig = nalgebra::SymmetricEigen::new(q.to_f64());
            let max_eig = eig.eigenvalues.iter().cloned().fold(1.0f64, f64::max);
            for (col, lam) in eig.eigenvalues.iter().enumerate() {
                assert!(
                    *lam > 1e-12 * max_eig,
                    "quotient Gram must be positive definite after exact kernel removal \
                     (level {k}, eigenvalue {lam})"
                );
                let scale = 1.0 / lam.sqrt();
                for row in 0..d {
                    x[(row, col)] = eig.eigenvectors[(row, col)] * scale;
                }
            }
        }
        let mut g_rows = RatMatrix::zeros(d, p_k);
        for (a, &i) in complement.iter().enumerate() {
            for j in 0..p_k {
                g_rows.set(a, j, g.get(i, j).clone());
            }
        }
        dims.push(d);
        levels.push(LevelData { complement, x, g_rows });
    }
    // ⟨u'_a, L_n u_j⟩ = (X'ᵀ Z X)_{aj} with Z[:,i] = G'[C',:]·(L_n e_{C_i}).
    let mut lower = HashMap::new();
    for k in 1..=n_levels {
        let src_basis = partitions(k);
        for n in 1..=k {
            let d_t = dims[(k - n) as usize];
            let d_s = dims[k as usize];
            if d_t == 0 || d_s == 0 {
                lower.insert((n, k), DMatrix::zeros(d_t, d_s));
                continue;
            }
            let (src, tgt) = (&levels[k as usize], &levels[(k - n) as usize]);
            let mut z = DMatrix::zeros(d_t, src.complement.len());
            for (col, &i) in src.complement.iter().enumerate() {
                let img = module.apply_basis(n as i64, &src_basis[i]);
                let v = img.to_vector(k - n);
                for (row, val) in tgt.g_rows.mul_vec(&v).iter().enumerate() {
                    z[(row, col)] = rat_to_f64(val);
                }
            }
            lower.insert((n, k), tgt.x.transpose() * z * &src.x);
        }
    }
    Ok(OrthoModule {
        c: rat_to_f64(&module.params.c),
        h: rat_to_f64(&module.params.h),
        n_levels,
        dims,
        lower,
    })
}

/// Float construction of the same orthonormal tower for cutoffs where exact
/// Gram kernels are out of reach: level `k` is spanned by
/// `L₋₁(level k−1) ∪ L₋₂(level k−2)`, whose Gram and lowering actions are
/// assembled from already-orthonormal lower-level matrices, so the
/// ill-conditioned PBW Gram never appears. Rank decisions use a relative
/// eigenvalue threshold; [`quotient_module`] cross-checks this construction
/// at small cutoffs (see tests).
pub fn onb_tower(c: f64, h: f64, n_levels: u32) -> OrthoModule {
    let mut dims: Vec<usize> = vec![1];
    let mut lower: HashMap<(u32, u32), DMatrix<f64>> = HashMap::new();

    let block = |lower: &HashMap<(u32, u32), DMatrix<f64>>,
                 dims: &Vec<usize>,
                 n: i64,
                 k: i64|
     -> DMatrix<f64> {
        if k < 0 {
            return DMatrix::zeros(0, 0);
        }
        let d_k = dims[k as usize];
        if n == 0 {
            return DMatrix::from_diagonal_element(d_k, d_k, h + k as f64);
        }
        if n > 0 {
            let t = k - n;
            if t < 0 {
                return DMatrix::zeros(0, d_k);
            }
            lower
                .get(&(n as u32, k as u32))
                .cloned()
                .unwrap_or_else(|| DMatrix::zeros(dims[t as usize], d_k))
        } else {
            let m = -n;
            let s = k + m;
            if s as usize >= dims.len() {
                return DMatrix::zeros(0, d_k);
            }
            lower
                .get(&(m as u32, s as u32))
                .map(|b| b.transpose())
                .unwrap_or_else(|| DMatrix::zeros(dims[s as usize], d_k))
        }
    };

    for k in 1..=n_levels as i64 {
        let d1 = dims[(k - 1) as usize];
        let d2 = if k >= 2 { dims[(k - 2) as usize] } else { 0 };
        let span = d1 + d2;
        let mut gram = DMatrix::zeros(span, span);
        if d1 > 0 {
            // ⟨L₋₁u, L₋₁u'⟩ = 2(h+k−1) δ + (L₁u, L₁u')
            let m1 = block(&lower, &dims, 1, k - 1);
            let b11 = DMatrix::from_diagonal_element(d1, d1, 2.0 * (h + (k - 1) as f64))
                + m1.transpose() * &m1;
            gram.view_mut((0, 0), (d1, d1)).copy_from(&b11);
        }
        if d1 > 0 && d2 > 0 {
            // ⟨L₋₁u, L₋₂v⟩ = 3⟨u, L₋₁v⟩ + (L₂u, L₁v)
            let raise1 = block(&lower, &dims, -1, k - 2); // d_{k−1} × d_{k−2}
            let m2 = block(&lower, &dims, 2, k - 1);
            let m1low = block(&lower, &dims, 1, k - 2);
            let mut b12 = 3.0 * raise1;
            if m2.nrows() > 0 && m1low.nrows() > 0 {
                b12 += m2.transpose() * m1low;
            }
            gram.view_mut((0, d1), (d1, d2)).copy_from(&b12);
            gram.view_mut((d1, 0), (d2, d1)).copy_from(&b12.transpose());
        }
        if d2 > 0 {
            // ⟨L₋₂v, L₋₂v'⟩ = (4(h+k−2) + c/2) δ + (L₂v, L₂v')
            let m2 = block(&lower, &dims, 2, k - 2);
            let mut b22 =
                DMatrix::from_diagonal_element(d2, d2, 4.0 * (h + (k - 2) as f64) + c / 2.0);
            if m2.nrows() > 0 {
                b22 += m2.transpose() * &m2;
            }
            gram.view_mut((d1, d1), (d2, d2)).copy_from(&b22);
        }
        let (d_k, e) = if span == 0 {
            (0, DMatrix::zeros(0, 0))
        } else {
            let eig = nalgebra::SymmetricEigen::new(gram);
            let max_eig = eig.eigenvalues.iter().cloned().fold(1.0f64, f64::max);
            let kept: Vec<(usize, f64)> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, lam)| **lam > 1e-8 * max_eig)
                .map(|(i, lam)| (i, *lam))
                .collect();
            let mut e = DMatrix::zeros(span, kept.len());
            for (col, (idx, lam)) in kept.iter().enumerate() {
                let scale = 1.0 / lam.sqrt();
                for row in 0..span {
                    e[(row, col)] = eig.eigenvectors[(row, *idx)] * scale;
                }
            }
            (kept.len(), e)
        };
        dims.push(d_k);
        // L_n(L₋₁u) = (n+1)L_{n−1}u + L₋₁(L_n u)
        // L_n(L₋₂v) = (n+2)L_{n−2}v + (c/2)δ_{n,2} v + L₋₂(L_n v)
        for n in 1..=k {
            let d_t = dims[(k - n) as usize];
            if d_t == 0 || d_k == 0 {
                lower.insert((n as u32, k as u32), DMatrix::zeros(d_t, d_k));
                continue;
            }
            let mut on_span = DMatrix::zeros(d_t, span);
            if d1 > 0 {
                let mut a = DMatrix::zeros(d_t, d1);
                let step = block(&lower, &dims, n - 1, k - 1);
                if step.nrows() == d_t && step.ncols() == d1 {
                    a += (n as f64 + 1.0) * step;
                }
                let raise = block(&lower, &dims, -1, k - 1 - n);
                let mn = block(&lower, &dims, n, k - 1);
                if raise.nrows() == d_t && raise.ncols() == mn.nrows() && mn.ncols() == d1 {
                    a += raise * mn;
                }
                on_span.view_mut((0, 0), (d_t, d1)).copy_from(&a);
            }
            if d2 > 0 {
                let mut b = DMatrix::zeros(d_t, d2);
                let step = block(&lower, &dims, n - 2, k - 2);
                if step.nrows() == d_t && step.ncols() == d2 {
                    b += (n as f64 + 2.0) * step;
                }
                if n == 2 {
                    b += DMatrix::from_diagonal_element(d_t, d2, c / 2.0);
                }
                let raise = block(&lower, &dims, -2, k - 2 - n);
                let mn = block(&lower, &dims, n, k - 2);
                if raise.nrows() == d_t && raise.ncols() == mn.nrows() && mn.ncols() == d2 {
                    b += raise * mn;
                }
                on_span.view_mut((0, d1), (d_t, d2)).copy_from(&b);
            }
            lower.insert((n as u32, k as u32), on_span * &e);
        }
    }
    OrthoModule { c, h, n_levels, dims, lower }
}

// ---------------------------------------------------------------------------
// Vacuum identities
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct VacuumIdentityRow {
    pub n: i64,
    /// The difference `[L₂, L_{−n}]Ω − (2+n)L_{−n+2}Ω` lies in the Gram
    /// kernel of its level, i.e. vanishes in the irreducible quotient.
    pub holds_in_quotient: bool,
    /// Exactly zero already in the Verma module.
    pub zero_in_verma: bool,
}

#[derive(Debug, Serialize)]
pub struct VacuumIdentityReport {
    pub c: String,
    pub rows: Vec<VacuumIdentityRow>,
    /// `[L₂, L₋₂]Ω = (c/2)Ω` holds exactly.
    pub n2_central: bool,
}

/// Check `[L₂, L_{−n}]Ω = (2+n)L_{−n+2}Ω` in the `h = 0` quotient for
/// `3 ≤ n ≤ n_max`, and the `n = 2` case `[L₂, L₋₂]Ω = (c/2)Ω`.
pub fn vacuum_identity_check(c: Rat, n_max: u32) -> VacuumIdentityReport {
    let module = VermaModule::new(VirasoroParams::new(c.clone(), Rat::zero()));
    let omega = VermaState::vacuum();
    let mut rows = Vec::new();
    for n in 3..=n_max as i64 {
        // L₂Ω = 0, so the commutator collapses to L₂ L₋ₙ Ω.
        let lhs = module.apply_state(2, &module.apply_state(-n, &omega));
        let rhs = module.apply_state(-(n - 2), &omega).scaled(&rat(2 + n, 1));
        let mut diff = lhs;
        diff.add_state(&rhs, &-Rat::one());
        let zero_in_verma = diff.is_zero();
        let holds_in_quotient = if zero_in_verma {
            true
        } else {
            let level = (n - 2) as u32;
            let g = module.gram_matrix(level);
            g.mul_vec(&diff.to_vector(level)).iter().all(|x| x.is_zero())
        };
        rows.push(VacuumIdentityRow { n, holds_in_quotient, zero_in_verma });
    }
    let lhs = module.apply_state(2, &module.apply_state(-2, &omega));
    let expected = omega.scaled(&(&c * rat(1, 2)));
    let n2_central = lhs == expected;
    VacuumIdentityReport { c: rat_string(&c), rows, n2_central }
}
