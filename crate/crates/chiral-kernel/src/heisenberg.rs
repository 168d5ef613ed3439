//! The U(1) current (Heisenberg) Fock module and the Sugawara construction.
//!
//! Basis vectors are `J_{−λ₁}···J_{−λ_k}Ω` indexed by partitions; the modes
//! satisfy `[J_n, J_m] = n δ_{−n,m}`, `J_n Ω = 0` for `n ≥ 0` and `J₀ = 0`,
//! so the Gram is diagonal with `⟨λ|λ⟩ = Π_i i^{m_i} m_i!`. The normal
//! product `:J²:_n = Σ_{k+n≥−k} J_{−k}J_{k+n} + Σ_{k+n<−k} J_{k+n}J_{−k}`
//! is a finite sum on every finite-energy vector, and `L_n = ½:J²:_n`
//! satisfies the Virasoro relations with central charge one — verified here
//! in exact rational arithmetic.

use crate::exact::{rat, Rat, RatMatrix};
use crate::verma::{level_offsets, partition_counts, partition_level, partitions, Partition};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// An exact-rational combination of Fock basis vectors `J_{−λ}Ω`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockState {
    pub terms: BTreeMap<Partition, Rat>,
}

impl FockState {
    pub fn zero() -> Self {
        FockState { terms: BTreeMap::new() }
    }

    pub fn vacuum() -> Self {
        FockState::basis(Vec::new())
    }

    pub fn basis(p: Partition) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, Rat::one());
        FockState { terms }
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

    pub fn add_state(&mut self, other: &FockState, scale: &Rat) {
        if scale.is_zero() {
            return;
        }
        for (p, v) in &other.terms {
            self.add_term(p.clone(), v * scale);
        }
    }

    pub fn scaled(&self, r: &Rat) -> FockState {
        let mut out = FockState::zero();
        out.add_state(self, r);
        out
    }

    pub fn coeff(&self, p: &Partition) -> Rat {
        self.terms.get(p).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn to_vector(&self, level: u32) -> Vec<Rat> {
        partitions(level).iter().map(|p| self.coeff(p)).collect()
    }
}

/// `⟨λ|λ⟩ = Π_i i^{m_i} · m_i!` (multiplicity `m_i` of part `i`).
pub fn fock_norm_sq(p: &Partition) -> Rat {
    let mut norm = Rat::one();
    let mut i = 0;
    while i < p.len() {
        let part = p[i];
        let mut mult = 0i64;
        while i < p.len() && p[i] == part {
            mult += 1;
            i += 1;
        }
        for j in 1..=mult {
            norm *= rat(part as i64 * j, 1);
        }
    }
    norm
}

/// Diagonal Fock inner product.
pub fn fock_inner(a: &FockState, b: &FockState) -> Rat {
    let mut acc = Rat::zero();
    for (p, ca) in &a.terms {
        let cb = b.coeff(p);
        if !cb.is_zero() {
            acc += ca * &cb * fock_norm_sq(p);
        }
    }
    acc
}

/// Action of `J_n`: negative modes prepend a part (the `J_{−m}` commute),
/// `J₀ = 0`, positive modes contract against equal parts with weight `n`
/// per contraction.
pub fn apply_j_basis(n: i64, word: &Partition) -> FockState {
    if n == 0 {
        return FockState::zero();
    }
    if n < 0 {
        let mut w = word.clone();
        let part = (-n) as u32;
        let pos = w.iter().position(|&x| x < part).unwrap_or(w.len());
        w.insert(pos, part);
        return FockState::basis(w);
    }
    // J_n commutes with every J_{−m} except m = n, each contraction
    // contributing a factor n.
    let part = n as u32;
    let mult = word.iter().filter(|&&x| x == part).count() as i64;
    if mult == 0 {
        return FockState::zero();
    }
    let mut w = word.clone();
    let pos = w.iter().position(|&x| x == part).unwrap();
    w.remove(pos);
    FockState::basis(w).scaled(&rat(n * mult, 1))
}

pub fn apply_j(n: i64, state: &FockState) -> FockState {
    let mut out = FockState::zero();
    for (p, coeff) in &state.terms {
        out.add_state(&apply_j_basis(n, p), coeff);
    }
    out
}

/// `½ :J²:_n` applied to a state, with the normal-ordering boundary taken
/// literally from the two-sum split (this pins the additive constant so
/// that `L₀ Ω = 0` comes out, rather than being imposed).
pub fn sugawara_l(n: i64, state: &FockState) -> FockState {
    let mut out = FockState::zero();
    for (p, coeff) in &state.terms {
        let level = partition_level(p) as i64;
        let reach = level + n.abs() + 2;
        for k in -reach..=reach {
            let (first, second) = if k + n >= -k {
                (-k, k + n) // J_{−k} J_{k+n}
            } else {
                (k + n, -k) // J_{k+n} J_{−k}
            };
            let inner = apply_j_basis(second, p);
            if inner.is_zero() {
                continue;
            }
            let outer = apply_j(first, &inner);
            out.add_state(&outer, &(coeff * rat(1, 2)));
        }
    }
    out
}

/// Residual of the central-charge-one Virasoro relation on one basis word:
/// `([Lₙ,Lₘ] − (n−m)L_{n+m} − (1/12)(n³−n)δ_{−n,m}) v`, exact.
pub fn sugawara_virasoro_residual(n: i64, m: i64, word: &Partition) -> FockState {
    let v = FockState::basis(word.clone());
    let nm = sugawara_l(n, &sugawara_l(m, &v));
    let mn = sugawara_l(m, &sugawara_l(n, &v));
    let mut out = FockState::zero();
    out.add_state(&nm, &Rat::one());
    out.add_state(&mn, &-Rat::one());
    out.add_state(&sugawara_l(n + m, &v), &-rat(n - m, 1));
    if n + m == 0 {
        out.add_state(&v, &-rat(n * n * n - n, 12));
    }
    out
}

/// Exact matrix of `½:J²:_n` on the stacked Fock levels `≤ n_levels`.
pub fn sugawara_matrix(n: i64, n_levels: u32) -> RatMatrix {
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
            let img = sugawara_l(n, &FockState::basis(p.clone()));
            for (i, q) in tgt_basis.iter().enumerate() {
                let c = img.coeff(q);
                if !c.is_zero() {
                    m.set(offsets[target as usize] + i, offsets[k as usize] + j, c);
                }
            }
        }
    }
    m
}

/// Largest hermiticity defect `⟨a, Lₙ b⟩ − ⟨L₋ₙ a, b⟩` over basis pairs of
/// levels `≤ n_levels` (computed state-wise, so free of truncation).
pub fn sugawara_hermiticity_defect(n: i64, n_levels: u32) -> Rat {
    let mut worst = Rat::zero();
    for kb in 0..=n_levels {
        let ka = kb as i64 - n;
        if ka < 0 || ka > n_levels as i64 {
            continue;
        }
        for b in partitions(kb) {
            let lb = sugawara_l(n, &FockState::basis(b.clone()));
            for a in partitions(ka as u32) {
                let fa = FockState::basis(a.clone());
                let lhs = fock_inner(&fa, &lb);
                let rhs = fock_inner(&sugawara_l(-n, &fa), &FockState::basis(b.clone()));
                let d = num_traits::Signed::abs(&(lhs - rhs));
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    worst
}

/// Observed dimension of level `k` of the cyclic Sugawara submodule
/// `M_Ω = span{L_{−λ}Ω}` inside the Fock space (exact rank).
pub fn sugawara_submodule_dim(k: u32) -> usize {
    let parts = partitions(k);
    let fock_basis = partitions(k);
    let mut m = RatMatrix::zeros(fock_basis.len(), parts.len());
    for (col, lambda) in parts.iter().enumerate() {
        // L_{−λ₁}···L_{−λ_j}Ω, applied right to left.
        let mut v = FockState::vacuum();
        for part in lambda.iter().rev() {
            v = sugawara_l(-(*part as i64), &v);
        }
        for (row, q) in fock_basis.iter().enumerate() {
            m.set(row, col, v.coeff(q));
        }
    }
    m.rank()
}

/// Level dimensions and the partial thermal trace
/// `Σ_{k≤N} p(k) e^{−βk}` compared with the Euler product
/// `Π_{n≤N} (1−e^{−βn})⁻¹`, together with a rigorous tail bound for their
/// difference (`p(k) ≤ e^{π√(2k/3)}`).
#[derive(Debug, serde::Serialize)]
pub struct CharacterReport {
    pub dims: Vec<u64>,
    pub beta: f64,
    pub partial_trace: f64,
    pub euler_partial: f64,
    pub tail_bound: f64,
}

pub fn character(n_levels: u32, beta: f64) -> CharacterReport {
    use num_traits::ToPrimitive;
    let n = n_levels as usize;
    let counts = partition_counts(4 * n + 64);
    let dims: Vec<u64> = counts[..=n].iter().map(|c| c.to_u64().unwrap_or(u64::MAX)).collect();
    let q = (-beta).exp();
    let partial_trace: f64 =
        (0..=n).map(|k| counts[k].to_f64().unwrap_or(f64::INFINITY) * q.powi(k as i32)).sum();
    let euler_partial: f64 =
        (1..=n).map(|j| 1.0 / (1.0 - q.powi(j as i32))).product();
    // 0 ≤ euler_partial − partial_trace ≤ Σ_{k>N} p(k) e^{−βk}: sum the
    // table far enough, then close with the Hardy–Ramanujan-type bound
    // p(k) ≤ e^{π√(2k/3)} against the geometric remainder.
    let far = 4 * n + 64;
    let mut tail: f64 = (n + 1..=far)
        .map(|k| counts[k].to_f64().unwrap_or(f64::INFINITY) * q.powi(k as i32))
        .sum();
    let remainder_start = far + 1;
    let pi = std::f64::consts::PI;
    // For k ≥ remainder_start, π√(2k/3) − βk ≤ −βk/2 once k is large enough;
    // bound conservatively by a geometric series in e^{−βk/2} when valid.
    let crossover = (2.0 * pi * pi * 2.0 / 3.0) / (beta * beta);
    let start = (remainder_start as f64).max(crossover).ceil();
    let mut geom = (-beta * start / 2.0).exp() / (1.0 - (-beta / 2.0).exp());
    if start > remainder_start as f64 {
        for k in remainder_start..(start as usize) {
            geom += (pi * (2.0 * k as f64 / 3.0).sqrt() - beta * k as f64).exp();
        }
    }
    tail += geom;
    CharacterReport { dims, beta, partial_trace, euler_partial, tail_bound: tail }
}
