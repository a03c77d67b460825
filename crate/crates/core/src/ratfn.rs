//! Rational functions `num / den` of multivariate polynomials.
//!
//! This is the exact evaluation path for inverse-Hessian matrix fields of
//! the polynomial-over-affine shape: entries, their derivatives and the
//! Abreu operator all stay in this representation, and "is the zero
//! function" is decided by the numerator alone.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::poly::MultiPoly;
use crate::ratio::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFn {
    num: MultiPoly,
    den: MultiPoly,
}

impl RationalFn {
    /// `num / den`; panics if `den` is the zero polynomial.
    pub fn new(num: MultiPoly, den: MultiPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator polynomial");
        RationalFn { num, den }.reduced()
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        let nvars = p.nvars();
        RationalFn {
            num: p,
            den: MultiPoly::one(nvars),
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Self::from_poly(MultiPoly::zero(nvars))
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(nvars, c))
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    /// True iff this is the zero rational function.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True iff the reduced form has a constant denominator.
    pub fn as_polynomial(&self) -> Option<MultiPoly> {
        if self.den.is_constant() {
            let c = self.den.constant_term();
            Some(self.num.scale(&(Rational::one() / c)))
        } else {
            None
        }
    }

    /// Light normalization: clears the zero numerator, pulls the exact
    /// quotient out when the denominator divides the numerator and fixes the
    /// denominator's leading sign.
    fn reduced(self) -> Self {
        let nvars = self.num.nvars();
        if self.num.is_zero() {
            return RationalFn {
                num: MultiPoly::zero(nvars),
                den: MultiPoly::one(nvars),
            };
        }
        if let Some(q) = self.num.div_exact(&self.den) {
            return RationalFn {
                num: q,
                den: MultiPoly::one(nvars),
            };
        }
        if let Some(lead) = self.den.leading_coeff() {
            if lead.is_negative() {
                let m = Rational::one().neg();
                return RationalFn {
                    num: self.num.scale(&m),
                    den: self.den.scale(&m),
                };
            }
        }
        self
    }

    /// Exact partial derivative by the quotient rule.
    pub fn partial(&self, i: usize) -> RationalFn {
        let dn = self.num.partial(i);
        if self.den.is_constant() {
            return RationalFn::new(dn, self.den.clone());
        }
        let dd = self.den.partial(i);
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        let den = &self.den * &self.den;
        RationalFn::new(num, den)
    }

    /// Exact value at a rational point; `None` if the denominator vanishes.
    pub fn eval(&self, z: &[Rational]) -> Option<Rational> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(z) / d)
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        self.num.eval_f64(z) / self.den.eval_f64(z)
    }
}

impl Add for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        if self.den == rhs.den {
            return RationalFn::new(&self.num + &rhs.num, self.den.clone());
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFn::new(num, &self.den * &rhs.den)
    }
}

impl Sub for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl Mul for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        RationalFn::new(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div for &RationalFn {
    type Output = RationalFn;
    fn div(self, rhs: &RationalFn) -> RationalFn {
        assert!(!rhs.is_zero(), "division by the zero rational function");
        RationalFn::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, rat_int};

    fn l() -> MultiPoly {
        // 1 + z0 + 2 z1
        MultiPoly::affine(&[rat_int(1), rat_int(2)], &rat_int(1))
    }

    #[test]
    fn cancellation_through_reduction() {
        let z0 = MultiPoly::var(2, 0);
        let f = RationalFn::new(&l() * &z0, l());
        assert_eq!(f.as_polynomial().unwrap(), z0);
    }

    #[test]
    fn quotient_rule() {
        // d/dz0 (z0 / L) = (L - z0)/L^2 with L = 1 + z0 + 2 z1
        let z0 = MultiPoly::var(2, 0);
        let f = RationalFn::new(z0.clone(), l());
        let df = f.partial(0);
        let expected = RationalFn::new(&l() - &z0, &l() * &l());
        let cross = &(df.num() * expected.den()) - &(expected.num() * df.den());
        assert!(cross.is_zero());
    }

    #[test]
    fn zero_detection_ignores_denominator() {
        let f = RationalFn::new(MultiPoly::zero(2), l());
        assert!(f.is_zero());
        let g = &f * &RationalFn::constant(2, rat(3, 7));
        assert!(g.is_zero());
    }
}
