//! The extremal affine function `⟨A,z⟩ + B`.
//!
//! The defining linear system pairs the scalar curvature against the
//! Killing potentials `{z_1, …, z_ℓ, 1}` under the measure `p(z) dv`:
//!
//! ```text
//! Σ_s α_s A_s  + α B  + 2β  = 0
//! Σ_s α_rs A_s + α_r B + 2β_r = 0      for every r
//! ```
//!
//! with `α`-moments of `p dv` and `β = ½ ∫ Scal_g p dv`, which the boundary
//! conditions turn into a facet integral plus an interior polynomial
//! integral. Everything is exact; the Gram block is positive definite so
//! the solution is unique.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::calabi::FibrationData;
use crate::linalg;
use crate::poly::{AffineFn, MultiPoly};
use crate::ratio::{rat, Rational};

/// Exact moments entering the extremal linear system.
#[derive(Clone, Debug)]
pub struct MomentSystem {
    pub alpha: Rational,
    pub alpha_r: Vec<Rational>,
    pub alpha_rs: Vec<Vec<Rational>>,
    pub beta: Rational,
    pub beta_r: Vec<Rational>,
}

#[derive(Debug, Error)]
pub enum ExtremalError {
    #[error("extremal linear system is singular (invalid fibration data)")]
    SingularSystem,
}

/// Computes all five moment families exactly.
pub fn build_moment_system(fibration: &FibrationData) -> MomentSystem {
    let p = fibration.polytope();
    let dim = fibration.dim();
    let w = fibration.weight();
    let alpha = p.moment(w);
    let alpha_r: Vec<Rational> = (0..dim)
        .map(|r| p.moment(&(&MultiPoly::var(dim, r) * w)))
        .collect();
    let alpha_rs: Vec<Vec<Rational>> = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|s| {
                    let zrs = &MultiPoly::var(dim, r) * &MultiPoly::var(dim, s);
                    p.moment(&(&zrs * w))
                })
                .collect()
        })
        .collect();
    // β = ∫_∂Δ p dσ + ½ ∫_Δ (Σ_j Scal_j/(⟨p_j,z⟩+c_j)) p dv; the interior
    // integrand is the polynomial Σ_j Scal_j · p/(⟨p_j,z⟩+c_j).
    let scal_poly = fibration.scal_weighted_poly();
    let half = rat(1, 2);
    let beta = p.boundary_moment(w, None) + p.moment(&scal_poly) * half.clone();
    let beta_r: Vec<Rational> = (0..dim)
        .map(|r| {
            let zr = MultiPoly::var(dim, r);
            p.boundary_moment(&(&zr * w), None) + p.moment(&(&zr * &scal_poly)) * half.clone()
        })
        .collect();
    MomentSystem {
        alpha,
        alpha_r,
        alpha_rs,
        beta,
        beta_r,
    }
}

impl MomentSystem {
    /// The `(ℓ+1) × (ℓ+1)` Gram block `[[α_rs, α_r], [α_rᵀ, α]]`.
    pub fn gram(&self) -> Vec<Vec<Rational>> {
        let dim = self.alpha_r.len();
        let mut m: Vec<Vec<Rational>> = Vec::with_capacity(dim + 1);
        for r in 0..dim {
            let mut row = self.alpha_rs[r].clone();
            row.push(self.alpha_r[r].clone());
            m.push(row);
        }
        let mut last = self.alpha_r.clone();
        last.push(self.alpha.clone());
        m.push(last);
        m
    }
}

/// Solves the extremal linear system exactly.
pub fn solve_extremal_affine(fibration: &FibrationData) -> Result<AffineFn, ExtremalError> {
    let system = build_moment_system(fibration);
    solve_from_system(&system)
}

/// Solves from an already-computed moment system.
pub fn solve_from_system(system: &MomentSystem) -> Result<AffineFn, ExtremalError> {
    let dim = system.alpha_r.len();
    let gram = system.gram();
    let two = Rational::from_integer(BigInt::from(2));
    let mut rhs: Vec<Rational> = system.beta_r.iter().map(|b| -(b * two.clone())).collect();
    rhs.push(-(system.beta.clone() * two));
    let sol = linalg::solve(&gram, &rhs).ok_or(ExtremalError::SingularSystem)?;
    let (grad, consts) = sol.split_at(dim);
    Ok(AffineFn::new(grad.to_vec(), consts[0].clone()))
}

/// `Scal⊥` as a function: `z ↦ ⟨A,z⟩ + B + scal(z)`.
pub fn scal_perp<'a>(
    fibration: &FibrationData,
    scal: &'a dyn Fn(&[f64]) -> f64,
) -> Result<impl Fn(&[f64]) -> f64 + 'a, ExtremalError> {
    let affine = solve_extremal_affine(fibration)?;
    Ok(move |z: &[f64]| affine.eval_f64(z) + scal(z))
}

/// Exact variant on rational points.
pub fn scal_perp_exact(
    fibration: &FibrationData,
    scal_at: &Rational,
    z: &[Rational],
) -> Result<Rational, ExtremalError> {
    let affine = solve_extremal_affine(fibration)?;
    Ok(affine.eval(z) + scal_at)
}

/// True when the Gram block is positive definite (leading principal minors
/// all positive). Holds for every valid fibration; exposed for tests.
pub fn gram_positive_definite(system: &MomentSystem) -> bool {
    let gram = system.gram();
    for k in 1..=gram.len() {
        let minor: Vec<Vec<Rational>> = gram[..k].iter().map(|row| row[..k].to_vec()).collect();
        if linalg::det(&minor) <= Rational::zero() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::{make_fibration, BaseFactor};
    use crate::polytope::shapes;
    use crate::ratio::{rat, rat_int};

    #[test]
    fn interval_moment_system() {
        let f = make_fibration(shapes::unit_interval(), vec![]).unwrap();
        let m = build_moment_system(&f);
        assert_eq!(m.alpha, rat_int(1));
        assert_eq!(m.alpha_r, vec![rat(1, 2)]);
        assert_eq!(m.alpha_rs, vec![vec![rat(1, 3)]]);
        assert_eq!(m.beta, rat_int(2));
        assert_eq!(m.beta_r, vec![rat_int(1)]);
        assert!(gram_positive_definite(&m));
    }

    #[test]
    fn simplex_moment_system() {
        let f = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let m = build_moment_system(&f);
        assert_eq!(m.alpha, rat(1, 2));
        assert_eq!(m.alpha_r, vec![rat(1, 6), rat(1, 6)]);
        assert_eq!(m.alpha_rs[0][0], rat(1, 12));
        assert_eq!(m.alpha_rs[1][1], rat(1, 12));
        assert_eq!(m.alpha_rs[0][1], rat(1, 24));
        assert_eq!(m.beta, rat_int(3));
        assert_eq!(m.beta_r, vec![rat_int(1), rat_int(1)]);
        assert!(gram_positive_definite(&m));
    }

    #[test]
    fn interval_extremal_affine_is_fubini_study() {
        let f = make_fibration(shapes::unit_interval(), vec![]).unwrap();
        let a = solve_extremal_affine(&f).unwrap();
        assert_eq!(a.gradient, vec![rat_int(0)]);
        assert_eq!(a.constant, rat_int(-4));
    }

    #[test]
    fn simplex_extremal_affine_is_fubini_study() {
        let f = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let a = solve_extremal_affine(&f).unwrap();
        assert_eq!(a.gradient, vec![rat_int(0), rat_int(0)]);
        assert_eq!(a.constant, rat_int(-12));
    }

    #[test]
    fn permutation_equivariance() {
        // A fibration breaking the z1↔z2 symmetry; swapping coordinates in
        // the data swaps the components of A.
        let factor = BaseFactor::free(1, rat_int(-8), vec![rat_int(1), rat_int(2)], rat_int(1));
        let swapped = BaseFactor::free(1, rat_int(-8), vec![rat_int(2), rat_int(1)], rat_int(1));
        let f1 = make_fibration(shapes::standard_simplex(2), vec![factor]).unwrap();
        let f2 = make_fibration(shapes::standard_simplex(2), vec![swapped]).unwrap();
        let a1 = solve_extremal_affine(&f1).unwrap();
        let a2 = solve_extremal_affine(&f2).unwrap();
        assert_eq!(a1.gradient[0], a2.gradient[1]);
        assert_eq!(a1.gradient[1], a2.gradient[0]);
        assert_eq!(a1.constant, a2.constant);
    }

    #[test]
    fn scal_perp_annihilates_constant_curvature() {
        let f = make_fibration(shapes::unit_interval(), vec![]).unwrap();
        let scal = |_: &[f64]| 4.0;
        let perp = scal_perp(&f, &scal).unwrap();
        assert!(perp(&[0.3]).abs() < 1e-12);
        let f2 = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let scal2 = |_: &[f64]| 12.0;
        let perp2 = scal_perp(&f2, &scal2).unwrap();
        assert!(perp2(&[0.2, 0.3]).abs() < 1e-12);
    }

    #[test]
    fn beta_cancellation_for_single_free_factor() {
        // With one free factor of dimension 1 the interior part of β is
        // ½ Scal_Σ times the polytope volume: the affine cancels exactly.
        let factor = BaseFactor::free(1, rat_int(-8), vec![rat_int(1), rat_int(2)], rat_int(1));
        let f = make_fibration(shapes::standard_simplex(2), vec![factor]).unwrap();
        let m = build_moment_system(&f);
        let boundary = f.polytope().boundary_moment(f.weight(), None);
        let interior = rat(-8, 2) * f.polytope().moment(&MultiPoly::one(2));
        assert_eq!(m.beta, boundary + interior);
    }

    #[test]
    fn translation_covariance() {
        // Translate the simplex by (1, 0) and compensate c ↦ c - ⟨p, t⟩.
        let factor = BaseFactor::free(1, rat_int(-8), vec![rat_int(1), rat_int(2)], rat_int(1));
        let f = make_fibration(shapes::standard_simplex(2), vec![factor]).unwrap();
        let translated = crate::polytope::DelzantPolytope::build(vec![
            (vec![1, 0], rat_int(-1)),
            (vec![0, 1], rat_int(0)),
            (vec![-1, -1], rat_int(2)),
        ])
        .unwrap();
        let factor_t = BaseFactor::free(1, rat_int(-8), vec![rat_int(1), rat_int(2)], rat_int(0));
        let ft = make_fibration(translated, vec![factor_t]).unwrap();
        let a = solve_extremal_affine(&f).unwrap();
        let at = solve_extremal_affine(&ft).unwrap();
        assert_eq!(a.gradient, at.gradient);
        // Constants differ by ⟨A, translation⟩.
        assert_eq!(a.constant, at.constant + at.gradient[0].clone());
    }
}
