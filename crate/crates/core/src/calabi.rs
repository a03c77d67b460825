//! Data model of the generalized Calabi construction.
//!
//! A fibration over a local product of constant-scalar-curvature factors is
//! encoded by the momentum polytope together with one `(d_j, Scal_j, p_j,
//! c_j)` tuple per factor; the derived weight polynomial
//! `p(z) = Π_j (⟨p_j,z⟩ + c_j)^{d_j}` is the fibre-volume density that turns
//! manifold integrals into polytope integrals. Also carries the slope
//! obstruction for projective bundles over a curve.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::poly::MultiPoly;
use crate::polytope::{DelzantPolytope, VertexDisplay};
use crate::ratfn::RationalFn;
use crate::ratio::{rat_str, Rational};

/// Whether a base factor is a free product factor or a blow-down factor
/// attached to a facet of the polytope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Free,
    Blowdown,
}

/// One CSC factor `(S_j, ω_j)` of the base, as seen by the fibration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseFactor {
    /// Complex dimension `d_j ≥ 1`.
    pub dim: u32,
    /// Constant scalar curvature of the factor.
    pub scal: Rational,
    /// Momentum pairing vector `p_j`.
    pub momentum: Vec<Rational>,
    /// Constant `c_j`.
    pub offset: Rational,
    pub kind: FactorKind,
}

impl BaseFactor {
    pub fn free(dim: u32, scal: Rational, momentum: Vec<Rational>, offset: Rational) -> Self {
        BaseFactor {
            dim,
            scal,
            momentum,
            offset,
            kind: FactorKind::Free,
        }
    }

    pub fn blowdown(dim: u32, momentum: Vec<Rational>, offset: Rational) -> Self {
        // Blow-down factors are projective spaces with the normalized
        // Fubini-Study metric: Scal = 2 d (d + 1).
        let scal = Rational::from_integer(BigInt::from(2 * dim as i64 * (dim as i64 + 1)));
        BaseFactor {
            dim,
            scal,
            momentum,
            offset,
            kind: FactorKind::Blowdown,
        }
    }

    /// `⟨p_j, z⟩ + c_j` as a polynomial.
    pub fn affine_poly(&self) -> MultiPoly {
        MultiPoly::affine(&self.momentum, &self.offset)
    }
}

#[derive(Debug, Error)]
pub enum CalabiError {
    #[error("factor {factor} has dimension 0; factors must have d_j >= 1")]
    NonPositiveDimension { factor: usize },
    #[error("factor {factor} is not positive at vertex ({vertex})")]
    FactorNotPositive { factor: usize, vertex: VertexDisplay },
    #[error("blow-down factor {factor} does not match a facet: {reason}")]
    BlowdownFacetMismatch { factor: usize, reason: String },
}

/// Validated fibration data: polytope, factors and the weight polynomial.
#[derive(Clone, Debug)]
pub struct FibrationData {
    polytope: DelzantPolytope,
    factors: Vec<BaseFactor>,
    weight: MultiPoly,
}

/// Validates the factors against the polytope and assembles the weight
/// polynomial exactly. Positivity of free factors is certified at the
/// vertices (affine functions attain their extrema there).
pub fn make_fibration(
    polytope: DelzantPolytope,
    factors: Vec<BaseFactor>,
) -> Result<FibrationData, CalabiError> {
    let dim = polytope.dim();
    for (j, factor) in factors.iter().enumerate() {
        assert_eq!(factor.momentum.len(), dim, "factor momentum length mismatch");
        if factor.dim == 0 {
            return Err(CalabiError::NonPositiveDimension { factor: j });
        }
        match factor.kind {
            FactorKind::Free => {
                for v in polytope.vertices() {
                    let mut val = factor.offset.clone();
                    for (p, zi) in factor.momentum.iter().zip(v) {
                        val += p * zi;
                    }
                    if !val.is_positive() {
                        return Err(CalabiError::FactorNotPositive {
                            factor: j,
                            vertex: VertexDisplay(v.clone()),
                        });
                    }
                }
            }
            FactorKind::Blowdown => {
                let matching = polytope.halfspaces().iter().position(|h| {
                    h.normal
                        .iter()
                        .map(|&n| Rational::from_integer(BigInt::from(n)))
                        .eq(factor.momentum.iter().cloned())
                        && h.offset == factor.offset
                });
                if matching.is_none() {
                    return Err(CalabiError::BlowdownFacetMismatch {
                        factor: j,
                        reason: format!(
                            "no facet with normal ({}) and offset {}",
                            factor
                                .momentum
                                .iter()
                                .map(rat_str)
                                .collect::<Vec<_>>()
                                .join(", "),
                            rat_str(&factor.offset)
                        ),
                    });
                }
                let expected =
                    Rational::from_integer(BigInt::from(2 * factor.dim as i64 * (factor.dim as i64 + 1)));
                if factor.scal != expected {
                    return Err(CalabiError::BlowdownFacetMismatch {
                        factor: j,
                        reason: format!(
                            "scalar curvature must be 2 d (d + 1) = {}, got {}",
                            rat_str(&expected),
                            rat_str(&factor.scal)
                        ),
                    });
                }
            }
        }
    }
    let mut weight = MultiPoly::one(dim);
    for factor in &factors {
        weight = &weight * &factor.affine_poly().pow(factor.dim);
    }
    Ok(FibrationData {
        polytope,
        factors,
        weight,
    })
}

impl FibrationData {
    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn factors(&self) -> &[BaseFactor] {
        &self.factors
    }

    /// The weight polynomial `p(z) = Π_j (⟨p_j,z⟩+c_j)^{d_j}`.
    pub fn weight(&self) -> &MultiPoly {
        &self.weight
    }

    /// `p(z) / (⟨p_j,z⟩ + c_j)`: a genuine polynomial since `d_j ≥ 1`.
    pub fn weight_without(&self, j: usize) -> MultiPoly {
        let mut out = MultiPoly::one(self.dim());
        for (k, factor) in self.factors.iter().enumerate() {
            let e = if k == j { factor.dim - 1 } else { factor.dim };
            out = &out * &factor.affine_poly().pow(e);
        }
        out
    }

    /// `Σ_j Scal_j · p(z)/(⟨p_j,z⟩+c_j)` — the interior scalar-curvature
    /// contribution times the weight, as an exact polynomial.
    pub fn scal_weighted_poly(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.dim());
        for (j, factor) in self.factors.iter().enumerate() {
            out = &out + &self.weight_without(j).scale(&factor.scal);
        }
        out
    }

    /// `Σ_j Scal_j / (⟨p_j,z⟩+c_j)` as a rational function.
    pub fn scal_sum(&self) -> RationalFn {
        let mut out = RationalFn::zero(self.dim());
        for factor in &self.factors {
            let term = RationalFn::new(
                MultiPoly::constant(self.dim(), factor.scal.clone()),
                factor.affine_poly(),
            );
            out = &out + &term;
        }
        out
    }

    /// `Σ_j Scal_j / (⟨p_j,z⟩+c_j)` evaluated at an interior point.
    pub fn scal_sum_f64(&self, z: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let mut h = crate::ratio::to_f64(&f.offset);
                for (p, zi) in f.momentum.iter().zip(z) {
                    h += crate::ratio::to_f64(p) * zi;
                }
                crate::ratio::to_f64(&f.scal) / h
            })
            .sum()
    }
}

/// Shifts the Kähler class: `c_a ↦ c_a + k` on the free factors only.
pub fn shift_class(fibration: &FibrationData, k: &Rational) -> Result<FibrationData, CalabiError> {
    let factors: Vec<BaseFactor> = fibration
        .factors
        .iter()
        .map(|f| {
            let mut g = f.clone();
            if g.kind == FactorKind::Free {
                g.offset += k;
            }
            g
        })
        .collect();
    make_fibration(fibration.polytope.clone(), factors)
}

/// A direct summand of a vector bundle over a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BundleSummand {
    pub degree: i64,
    pub rank: u32,
}

impl BundleSummand {
    pub fn new(degree: i64, rank: u32) -> Self {
        assert!(rank >= 1, "rank must be at least 1");
        BundleSummand { degree, rank }
    }
}

/// `deg / rank`.
pub fn slope(s: &BundleSummand) -> Rational {
    Rational::new(BigInt::from(s.degree), BigInt::from(s.rank))
}

/// Outcome of the slope obstruction: equal slopes pass; the first unequal
/// pair witnesses a nonzero Futaki invariant, so no CSC Kähler metric
/// exists in any class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlopeCheck {
    Pass,
    Fail {
        first: BundleSummand,
        second: BundleSummand,
    },
}

pub fn csc_slope_obstruction(summands: &[BundleSummand]) -> SlopeCheck {
    assert!(!summands.is_empty(), "at least one summand required");
    let s0 = slope(&summands[0]);
    for s in &summands[1..] {
        if slope(s) != s0 {
            return SlopeCheck::Fail {
                first: summands[0],
                second: *s,
            };
        }
    }
    SlopeCheck::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::shapes;
    use crate::ratio::{rat, rat_int};

    fn simplex_factor(scal: i64, p1: i64, p2: i64, c: Rational) -> BaseFactor {
        BaseFactor::free(1, rat_int(scal), vec![rat_int(p1), rat_int(p2)], c)
    }

    #[test]
    fn bare_polytope_has_unit_weight() {
        let f = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        assert_eq!(f.weight(), &MultiPoly::one(2));
    }

    #[test]
    fn free_factor_weight_is_the_affine() {
        let f = make_fibration(
            shapes::standard_simplex(2),
            vec![simplex_factor(-8, 1, 2, rat_int(1))],
        )
        .unwrap();
        let expected = MultiPoly::affine(&[rat_int(1), rat_int(2)], &rat_int(1));
        assert_eq!(f.weight(), &expected);
    }

    #[test]
    fn rejects_nonpositive_factor() {
        let err = make_fibration(
            shapes::standard_simplex(2),
            vec![simplex_factor(-8, 1, 2, rat_int(0))],
        )
        .unwrap_err();
        match err {
            CalabiError::FactorNotPositive { factor, vertex } => {
                assert_eq!(factor, 0);
                assert_eq!(vertex.0, vec![rat_int(0), rat_int(0)]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_dimension() {
        let err = make_fibration(
            shapes::standard_simplex(2),
            vec![BaseFactor::free(0, rat_int(2), vec![rat_int(0), rat_int(0)], rat_int(1))],
        )
        .unwrap_err();
        assert!(matches!(err, CalabiError::NonPositiveDimension { factor: 0 }));
    }

    #[test]
    fn blowdown_must_match_a_facet() {
        let ok = make_fibration(
            shapes::standard_simplex(2),
            vec![BaseFactor::blowdown(2, vec![rat_int(1), rat_int(0)], rat_int(0))],
        );
        assert!(ok.is_ok());
        let err = make_fibration(
            shapes::standard_simplex(2),
            vec![BaseFactor::blowdown(2, vec![rat_int(1), rat_int(0)], rat_int(1))],
        )
        .unwrap_err();
        assert!(matches!(err, CalabiError::BlowdownFacetMismatch { factor: 0, .. }));
    }

    #[test]
    fn shift_class_moves_free_constants_only() {
        let f = make_fibration(
            shapes::standard_simplex(2),
            vec![simplex_factor(-8, 1, 2, rat_int(1))],
        )
        .unwrap();
        let g = shift_class(&f, &rat_int(2)).unwrap();
        assert_eq!(g.factors()[0].offset, rat_int(3));
        assert!(shift_class(&f, &rat_int(-1)).is_err());
        let id = shift_class(&f, &rat_int(0)).unwrap();
        assert_eq!(id.weight(), f.weight());
    }

    #[test]
    fn shift_class_composes_additively() {
        let f = make_fibration(
            shapes::standard_simplex(2),
            vec![simplex_factor(-8, 1, 2, rat_int(1))],
        )
        .unwrap();
        let a = shift_class(&shift_class(&f, &rat(1, 2)).unwrap(), &rat(1, 3)).unwrap();
        let b = shift_class(&f, &rat(5, 6)).unwrap();
        assert_eq!(a.factors()[0].offset, b.factors()[0].offset);
    }

    #[test]
    fn slopes_and_obstruction() {
        assert_eq!(slope(&BundleSummand::new(4, 2)), rat_int(2));
        assert_eq!(slope(&BundleSummand::new(0, 3)), rat_int(0));
        assert_eq!(slope(&BundleSummand::new(-3, 2)), rat(-3, 2));
        assert_eq!(
            csc_slope_obstruction(&[BundleSummand::new(2, 1), BundleSummand::new(4, 2)]),
            SlopeCheck::Pass
        );
        let fail = csc_slope_obstruction(&[BundleSummand::new(1, 1), BundleSummand::new(2, 1)]);
        assert_eq!(
            fail,
            SlopeCheck::Fail {
                first: BundleSummand::new(1, 1),
                second: BundleSummand::new(2, 1),
            }
        );
        // O ⊕ L1 ⊕ L2 with 0 < p1 < p2 never has equal slopes.
        let fail = csc_slope_obstruction(&[
            BundleSummand::new(0, 1),
            BundleSummand::new(1, 1),
            BundleSummand::new(2, 1),
        ]);
        assert!(matches!(fail, SlopeCheck::Fail { .. }));
    }

    #[test]
    fn obstruction_invariances() {
        let summands = [BundleSummand::new(3, 2), BundleSummand::new(6, 4)];
        assert_eq!(csc_slope_obstruction(&summands), SlopeCheck::Pass);
        let scaled: Vec<BundleSummand> = summands
            .iter()
            .map(|s| BundleSummand::new(3 * s.degree, 3 * s.rank))
            .collect();
        assert_eq!(csc_slope_obstruction(&scaled), SlopeCheck::Pass);
    }

    #[test]
    fn weight_vanishes_exactly_on_blowdown_facet() {
        let f = make_fibration(
            shapes::standard_simplex(2),
            vec![BaseFactor::blowdown(1, vec![rat_int(1), rat_int(0)], rat_int(0))],
        )
        .unwrap();
        assert_eq!(f.weight().eval(&[rat_int(0), rat(1, 2)]), rat_int(0));
        assert!(f.weight().eval(&[rat(1, 4), rat(1, 4)]).is_positive());
        assert_eq!(f.weight().total_degree(), 1);
    }
}
