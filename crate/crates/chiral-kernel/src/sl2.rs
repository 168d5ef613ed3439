//! Lowest-weight positive-energy representations of the universal cover of
//! the Möbius group: explicit ladder matrices on the orthonormal basis
//! `{ξ_{h+n}}`, the Casimir, the translation/dilation generators, and the
//! energy bounds `‖e₋Ψ‖ ≤ ‖hΨ‖`, `‖e₊Ψ‖ ≤ ‖(1+h)Ψ‖`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum Sl2Error {
    #[error("lowest weight must be positive, got {0}")]
    NonPositiveWeight(f64),
}

/// Ladder representation with lowest weight `h` truncated at level `N`:
/// `h_op ξ_{h+n} = (h+n) ξ_{h+n}`, `e₊ ξ_{h+n} = √((2h+n)(n+1)) ξ_{h+n+1}`,
/// `e₋ ξ_{h+n} = √((2h+n−1)n) ξ_{h+n−1}`.
pub struct LowestWeightSl2 {
    pub h: f64,
    pub n_levels: usize,
    pub h_op: DMatrix<f64>,
    pub e_plus: DMatrix<f64>,
    pub e_minus: DMatrix<f64>,
}

impl LowestWeightSl2 {
    pub fn build(h: f64, n_levels: usize) -> Result<Self, Sl2Error> {
        if h <= 0.0 {
            return Err(Sl2Error::NonPositiveWeight(h));
        }
        let dim = n_levels + 1;
        let mut h_op = DMatrix::zeros(dim, dim);
        let mut e_plus = DMatrix::zeros(dim, dim);
        let mut e_minus = DMatrix::zeros(dim, dim);
        for n in 0..dim {
            h_op[(n, n)] = h + n as f64;
            if n + 1 < dim {
                e_plus[(n + 1, n)] = ((2.0 * h + n as f64) * (n as f64 + 1.0)).sqrt();
            }
            if n > 0 {
                e_minus[(n - 1, n)] = ((2.0 * h + n as f64 - 1.0) * n as f64).sqrt();
            }
        }
        Ok(LowestWeightSl2 { h, n_levels, h_op, e_plus, e_minus })
    }

    pub fn dim(&self) -> usize {
        self.n_levels + 1
    }

    /// Largest residual of `[e₋,e₊] = 2h_op` and `[e_±, h_op] = ±e_±` on
    /// basis vectors with index `≤ N−1` (where both sides stay in range).
    pub fn relation_residual(&self) -> f64 {
        let dim = self.dim();
        let comm = &self.e_minus * &self.e_plus - &self.e_plus * &self.e_minus;
        let mut worst: f64 = 0.0;
        for n in 0..dim - 1 {
            for r in 0..dim - 1 {
                let expect = if r == n { 2.0 * (self.h + n as f64) } else { 0.0 };
                worst = worst.max((comm[(r, n)] - expect).abs());
            }
        }
        let cp = &self.e_plus * &self.h_op - &self.h_op * &self.e_plus;
        let cm = &self.e_minus * &self.h_op - &self.h_op * &self.e_minus;
        for n in 0..dim - 1 {
            for r in 0..dim {
                worst = worst.max((cp[(r, n)] + self.e_plus[(r, n)]).abs());
                if n >= 1 || r < dim {
                    worst = worst.max((cm[(r, n)] - self.e_minus[(r, n)]).abs());
                }
            }
        }
        worst
    }

    /// `(H² − H − E₊E₋) ξ = (h²−h) ξ`: largest residual over all retained
    /// levels (`E₊E₋` never leaves the range).
    pub fn casimir_residual(&self) -> f64 {
        let casimir = &self.h_op * &self.h_op - &self.h_op - &self.e_plus * &self.e_minus;
        let lambda = self.h * self.h - self.h;
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for n in 0..dim {
            for r in 0..dim {
                let expect = if r == n { lambda } else { 0.0 };
                worst = worst.max((casimir[(r, n)] - expect).abs());
            }
        }
        worst
    }

    /// `T = (H − (E₊+E₋)/2)/2`, `D = (E₊−E₋)/(2i)` realized as the real
    /// antisymmetric matrix `(E₊−E₋)/2` (the representation matrix of `iD`),
    /// and `T_π = (H + (E₊+E₋)/2)/2`, so that `T + T_π = H` exactly.
    pub fn generators_htd(&self) -> Generators {
        let half_sum = (&self.e_plus + &self.e_minus) * 0.5;
        let t = (&self.h_op - &half_sum) * 0.5;
        let t_pi = (&self.h_op + &half_sum) * 0.5;
        let d_skew = (&self.e_plus - &self.e_minus) * 0.5;
        Generators { h: self.h_op.clone(), t, t_pi, d_skew }
    }

    /// Deterministic random-vector battery for the energy bounds
    /// `‖e₋v‖ ≤ ‖h v‖` and `‖e₊v‖ ≤ ‖(1+h)v‖` on vectors supported on
    /// levels `≤ N−1`, plus the per-level closed-form inequality.
    pub fn energy_bounds_check(&self, rng: &mut impl Rng, trials: usize) -> EnergyBoundsReport {
        let dim = self.dim();
        let mut worst_minus: f64 = f64::NEG_INFINITY;
        let mut worst_plus: f64 = f64::NEG_INFINITY;
        for _ in 0..trials {
            let mut v = DVector::zeros(dim);
            for n in 0..dim - 1 {
                v[n] = rng.gen_range(-1.0..1.0);
            }
            let norm_h = (&self.h_op * &v).norm();
            let norm_1h = (&v + &self.h_op * &v).norm();
            let slack_minus = (&self.e_minus * &v).norm() - norm_h;
            let slack_plus = (&self.e_plus * &v).norm() - norm_1h;
            worst_minus = worst_minus.max(slack_minus);
            worst_plus = worst_plus.max(slack_plus);
        }
        // Per-level: ‖e₊ξ_{h+n}‖² = (2h+n)(n+1) ≤ (1+h+n)².
        let mut per_level_ok = true;
        for n in 0..dim - 1 {
            let lhs = (2.0 * self.h + n as f64) * (n as f64 + 1.0);
            let rhs = (1.0 + self.h + n as f64).powi(2);
            if lhs > rhs + 1e-12 {
                per_level_ok = false;
            }
        }
        EnergyBoundsReport {
            worst_minus_slack: worst_minus,
            worst_plus_slack: worst_plus,
            per_level_ok,
        }
    }

    /// Finite-`N` surrogate of the analytic-vector estimate: the growth of
    /// `‖qⁿ ξ_h‖` for `q = h_op + e₊ + e₋` stays below `rⁿ (k+n)!/k!` with
    /// `r` the linear energy-bound constant, on the range where no
    /// truncation occurs.
    pub fn analytic_growth_check(&self, max_power: usize) -> bool {
        let dim = self.dim();
        let q = &self.h_op + &self.e_plus + &self.e_minus;
        // ‖q v‖ ≤ r ‖(1+h_op) v‖ with r = 3 (each of the three terms is
        // bounded by ‖(1+h_op)v‖).
        let r = 3.0f64;
        let mut v = DVector::zeros(dim);
        v[0] = 1.0;
        let k = self.h.ceil();
        let mut bound = 1.0f64;
        for n in 1..=max_power.min(self.n_levels.saturating_sub(1)) {
            v = &q * &v;
            bound *= r * (k + n as f64);
            if v.norm() > bound {
                return false;
            }
        }
        true
    }
}

#[derive(Debug)]
pub struct Generators {
    pub h: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub t_pi: DMatrix<f64>,
    /// Real matrix of `iD` (antisymmetric); `D` itself is `−i` times this.
    pub d_skew: DMatrix<f64>,
}

#[derive(Debug, Serialize)]
pub struct EnergyBoundsReport {
    /// Largest observed `‖e₋v‖ − ‖h v‖` (must be ≤ 0).
    pub worst_minus_slack: f64,
    /// Largest observed `‖e₊v‖ − ‖(1+h)v‖` (must be ≤ 0).
    pub worst_plus_slack: f64,
    pub per_level_ok: bool,
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn build_rejects_nonpositive_weight() {
        assert!(LowestWeightSl2::build(0.0, 10).is_err());
        assert!(LowestWeightSl2::build(-1.0, 10).is_err());
    }

    #[test]
    fn ladder_entries_and_lowest_weight() {
        let rep = LowestWeightSl2::build(0.75, 12).unwrap();
        // e₊ξ_h = √(2h) ξ_{h+1}, e₋ξ_h = 0.
        assert_abs_diff_eq!(rep.e_plus[(1, 0)], (1.5f64).sqrt(), epsilon = 1e-14);
        for r in 0..rep.dim() {
            assert_eq!(rep.e_minus[(r, 0)], 0.0);
        }
        // [e₋,e₊]ξ_{h+n} = 2(h+n)ξ_{h+n} within range.
        assert!(rep.relation_residual() < 1e-10);
    }

    #[test]
    fn casimir_eigenvalue() {
        // h=1 gives 0, h=1/2 gives −1/4.
        let rep1 = LowestWeightSl2::build(1.0, 20).unwrap();
        assert!(rep1.casimir_residual() < 1e-10);
        let rep_half = LowestWeightSl2::build(0.5, 20).unwrap();
        let c = &rep_half.h_op * &rep_half.h_op - &rep_half.h_op
            - &rep_half.e_plus * &rep_half.e_minus;
        assert_abs_diff_eq!(c[(0, 0)], -0.25, epsilon = 1e-12);
        assert!(rep_half.casimir_residual() < 1e-10);
    }

    #[test]
    fn translation_split_is_exact() {
        let rep = LowestWeightSl2::build(1.5, 30).unwrap();
        let g = rep.generators_htd();
        // T + T_π = H exactly in floats: diagonal and off-diagonal entries
        // never share a slot.
        assert_eq!(&g.t + &g.t_pi, g.h);
        // T is the compression of a positive generator.
        assert!(min_eigenvalue(&g.t) >= -1e-10);
        assert!(min_eigenvalue(&g.t_pi) >= -1e-10);
        // iD is antisymmetric.
        assert!((g.d_skew.transpose() + &g.d_skew).abs().max() < 1e-14);
    }

    #[test]
    fn compression_positivity_across_weights() {
        for h in [0.5, 1.0, 2.0] {
            let rep = LowestWeightSl2::build(h, 40).unwrap();
            let g = rep.generators_htd();
            assert!(min_eigenvalue(&g.t) >= -1e-10, "h={h}");
        }
    }

    #[test]
    fn spectrum_of_h_is_h_plus_integers() {
        let rep = LowestWeightSl2::build(0.3, 15).unwrap();
        for n in 0..=15 {
            assert_abs_diff_eq!(rep.h_op[(n, n)], 0.3 + n as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn energy_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for h in [0.5, 1.0, 3.0] {
            let rep = LowestWeightSl2::build(h, 25).unwrap();
            let report = rep.energy_bounds_check(&mut rng, 100);
            assert!(report.worst_minus_slack <= 1e-10, "h={h}: {report:?}");
            assert!(report.worst_plus_slack <= 1e-10, "h={h}: {report:?}");
            assert!(report.per_level_ok);
        }
    }

    #[test]
    fn analytic_growth_surrogate() {
        let rep = LowestWeightSl2::build(1.0, 40).unwrap();
        assert!(rep.analytic_growth_check(30));
    }
}
