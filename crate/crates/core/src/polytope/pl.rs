//! Piecewise-linear convex test functions: finite maxima of affine pieces.

use num_bigint::BigInt;

use crate::poly::AffineFn;
use crate::ratio::Rational;

/// `f(z) = max_k (⟨A_k, z⟩ + B_k)`, convex by construction.
///
/// The canonical probe is the crease function `max(0, ⟨u,z⟩ - t)`, whose
/// crease set is `Δ ∩ {⟨u,z⟩ = t}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlConvexFunction {
    pieces: Vec<AffineFn>,
}

impl PlConvexFunction {
    /// Builds from affine pieces; panics when `pieces` is empty.
    pub fn new(pieces: Vec<AffineFn>) -> Self {
        assert!(!pieces.is_empty(), "at least one affine piece required");
        let nvars = pieces[0].nvars();
        assert!(pieces.iter().all(|p| p.nvars() == nvars));
        PlConvexFunction { pieces }
    }

    /// The crease function `max(0, ⟨u,z⟩ - t)`.
    pub fn crease(u: Vec<i64>, t: Rational) -> Self {
        let nvars = u.len();
        let grad: Vec<Rational> = u
            .iter()
            .map(|&x| Rational::from_integer(BigInt::from(x)))
            .collect();
        PlConvexFunction::new(vec![
            AffineFn::zero(nvars),
            AffineFn::new(grad, -t),
        ])
    }

    pub fn nvars(&self) -> usize {
        self.pieces[0].nvars()
    }

    pub fn pieces(&self) -> &[AffineFn] {
        &self.pieces
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval_f64(z))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn evaluate_exact(&self, z: &[Rational]) -> Rational {
        self.pieces
            .iter()
            .map(|p| p.eval(z))
            .max()
            .expect("nonempty pieces")
    }

    /// True when the function is globally affine (single distinct piece).
    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(|p| p == &self.pieces[0])
    }
}

/// Evaluates a PL convex function at a point.
pub fn pl_evaluate(f: &PlConvexFunction, z: &[f64]) -> f64 {
    f.evaluate(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    #[test]
    fn crease_evaluation() {
        let f = PlConvexFunction::crease(vec![1, 1], rat(3, 10));
        assert!((f.evaluate(&[0.5, 0.1]) - 0.3).abs() < 1e-15);
        assert_eq!(f.evaluate(&[0.1, 0.1]), 0.0);
        let exact = f.evaluate_exact(&[rat(1, 2), rat(1, 10)]);
        assert_eq!(exact, rat(3, 10));
    }

    #[test]
    fn max_of_two_planes() {
        // max(0, z0 - z1) at (0.2, 0.5) is 0.
        let f = PlConvexFunction::crease(vec![1, -1], rat(0, 1));
        assert_eq!(f.evaluate(&[0.2, 0.5]), 0.0);
        assert!((f.evaluate(&[0.5, 0.2]) - 0.3).abs() < 1e-15);
    }
}
