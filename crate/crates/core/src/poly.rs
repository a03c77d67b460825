//! Multivariate polynomials with exact rational coefficients.
//!
//! `MultiPoly` stores a canonical term map (no zero coefficients) keyed by
//! exponent vectors, which keeps arithmetic and iteration deterministic.
//! This is the integrand currency of the whole crate: weight polynomials,
//! ansatz entries and moment integrands are all `MultiPoly` values.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::ratio::{rat_str, to_f64, Rational};

/// A polynomial in `nvars` variables over the rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = MultiPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// The coordinate monomial `z_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        let mut p = MultiPoly::zero(nvars);
        p.terms.insert(exps, Rational::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = MultiPoly::zero(nvars);
        for (exps, coeff) in terms {
            assert_eq!(exps.len(), nvars, "exponent vector length mismatch");
            p.add_term(exps, coeff);
        }
        p
    }

    /// `⟨grad, z⟩ + constant` as a degree-one polynomial.
    pub fn affine(grad: &[Rational], constant: &Rational) -> Self {
        let nvars = grad.len();
        let mut p = MultiPoly::constant(nvars, constant.clone());
        for (i, g) in grad.iter().enumerate() {
            if !g.is_zero() {
                let mut exps = vec![0; nvars];
                exps[i] = 1;
                p.add_term(exps, g.clone());
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// Constant term (zero if absent).
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&vec![0; self.nvars])
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, Vec<u32>, Rational> {
        self.terms.iter()
    }

    /// Coefficient of the lex-leading term.
    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.terms.iter().next_back().map(|(_, c)| c)
    }

    fn add_term(&mut self, exps: Vec<u32>, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, a)| (e.clone(), a * c))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = MultiPoly::one(self.nvars);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Exact partial derivative `∂/∂z_i`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (exps, coeff) in &self.terms {
            if exps[i] == 0 {
                continue;
            }
            let mut e = exps.clone();
            e[i] -= 1;
            out.add_term(e, coeff * Rational::from_integer(exps[i].into()));
        }
        out
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        assert_eq!(z.len(), self.nvars);
        let mut acc = Rational::zero();
        for (exps, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (zi, &e) in z.iter().zip(exps) {
                for _ in 0..e {
                    term *= zi;
                }
            }
            acc += term;
        }
        acc
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.nvars);
        let mut acc = 0.0;
        for (exps, coeff) in &self.terms {
            let mut term = to_f64(coeff);
            for (zi, &e) in z.iter().zip(exps) {
                term *= zi.powi(e as i32);
            }
            acc += term;
        }
        acc
    }

    /// Substitutes `z_i = maps[i].0 · t + maps[i].1` (an affine map into new
    /// variables `t`), returning the composed polynomial in `t`.
    pub fn substitute_affine(&self, maps: &[(Vec<Rational>, Rational)]) -> MultiPoly {
        assert_eq!(maps.len(), self.nvars);
        let out_vars = maps.first().map_or(0, |(g, _)| g.len());
        for (g, _) in maps {
            assert_eq!(g.len(), out_vars);
        }
        // Cache powers of each substituted coordinate.
        let images: Vec<MultiPoly> = maps
            .iter()
            .map(|(g, c)| MultiPoly::affine(g, c))
            .collect();
        let max_exp: Vec<u32> = (0..self.nvars)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .zip(&max_exp)
            .map(|(img, &m)| {
                let mut ps = Vec::with_capacity(m as usize + 1);
                ps.push(MultiPoly::one(out_vars));
                for k in 1..=m {
                    let next = &ps[(k - 1) as usize] * img;
                    ps.push(next);
                }
                ps
            })
            .collect();
        let mut out = MultiPoly::zero(out_vars);
        for (exps, coeff) in &self.terms {
            let mut term = MultiPoly::constant(out_vars, coeff.clone());
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Exact division: returns `q` with `self = q · d`, or `None` when `d`
    /// does not divide exactly. Single-divisor multivariate division in lex
    /// order; the remainder test makes the result definitive.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        assert_eq!(self.nvars, d.nvars);
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MultiPoly::zero(self.nvars));
        }
        let (dlead_e, dlead_c) = d.terms.iter().next_back()?;
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(self.nvars);
        loop {
            let Some((rlead_e, rlead_c)) = rem.terms.iter().next_back() else {
                return Some(quot);
            };
            let mut qe = Vec::with_capacity(self.nvars);
            for (re, de) in rlead_e.iter().zip(dlead_e) {
                if re < de {
                    return None;
                }
                qe.push(re - de);
            }
            let qc = rlead_c / dlead_c;
            let mut mono = MultiPoly::zero(self.nvars);
            mono.terms.insert(qe.clone(), qc.clone());
            quot.add_term(qe, qc);
            rem = &rem - &(&mono * d);
        }
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (exps, coeff) in &rhs.terms {
            out.add_term(exps.clone(), coeff.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (exps, coeff) in &rhs.terms {
            out.add_term(exps.clone(), -coeff.clone());
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, coeff) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", rat_str(coeff))?;
            for (i, &e) in exps.iter().enumerate() {
                if e == 1 {
                    write!(f, "*z{i}")?;
                } else if e > 1 {
                    write!(f, "*z{i}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// The affine function `⟨A,z⟩ + B` on momentum coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineFn {
    pub gradient: Vec<Rational>,
    pub constant: Rational,
}

impl AffineFn {
    pub fn new(gradient: Vec<Rational>, constant: Rational) -> Self {
        AffineFn { gradient, constant }
    }

    pub fn zero(nvars: usize) -> Self {
        AffineFn {
            gradient: vec![Rational::zero(); nvars],
            constant: Rational::zero(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        assert_eq!(z.len(), self.gradient.len());
        let mut acc = self.constant.clone();
        for (g, zi) in self.gradient.iter().zip(z) {
            acc += g * zi;
        }
        acc
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        let mut acc = to_f64(&self.constant);
        for (g, zi) in self.gradient.iter().zip(z) {
            acc += to_f64(g) * zi;
        }
        acc
    }

    pub fn to_poly(&self) -> MultiPoly {
        MultiPoly::affine(&self.gradient, &self.constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, rat_int};

    fn z(i: usize) -> MultiPoly {
        MultiPoly::var(2, i)
    }

    #[test]
    fn arithmetic_keeps_canonical_form() {
        let p = &(&z(0) * &z(0)) + &z(1); // z0^2 + z1
        let q = &p - &p;
        assert!(q.is_zero());
        let r = &p * &MultiPoly::constant(2, rat_int(0));
        assert!(r.is_zero());
    }

    #[test]
    fn partial_derivatives() {
        // d/dz0 (z0^2 z1) = 2 z0 z1
        let p = &(&z(0) * &z(0)) * &z(1);
        let dp = p.partial(0);
        let expected = &(&z(0) * &z(1)).scale(&rat_int(2));
        assert_eq!(&dp, expected);
        assert!(p.partial(1).partial(1).is_zero());
    }

    #[test]
    fn evaluation_matches_structure() {
        let p = &(&z(0) * &z(1)).scale(&rat_int(3)) + &MultiPoly::constant(2, rat(1, 2));
        assert_eq!(p.eval(&[rat(1, 2), rat(1, 3)]), rat(1, 1));
        assert!((p.eval_f64(&[0.5, 1.0 / 3.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_substitution_composes() {
        // p(z0, z1) = z0 * z1 with z0 = t, z1 = 1 - t  =>  t - t^2
        let p = &z(0) * &z(1);
        let maps = vec![
            (vec![rat_int(1)], rat_int(0)),
            (vec![rat_int(-1)], rat_int(1)),
        ];
        let q = p.substitute_affine(&maps);
        let t = MultiPoly::var(1, 0);
        let expected = &t - &(&t * &t);
        assert_eq!(q, expected);
    }

    #[test]
    fn exact_division_detects_factors() {
        let l = MultiPoly::affine(&[rat_int(1), rat_int(2)], &rat_int(1)); // 1 + z0 + 2 z1
        let p = &(&l * &l) * &z(0);
        let q = p.div_exact(&l).expect("divides");
        assert_eq!(&q * &l, p);
        assert!(z(0).div_exact(&l).is_none());
    }
}
