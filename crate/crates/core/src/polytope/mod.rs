//! Delzant polytopes and exact integral calculus in lattice normalization.
//!
//! A polytope is held in half-space form `Δ = {z : ⟨u_i,z⟩ + c_i ≥ 0}` with
//! integer inward normals and rational offsets. Vertices are enumerated
//! exactly, the measure `dv` is the Lebesgue measure wedged from lattice
//! generators, and the facet measure `dσ` on `F_i` is fixed by
//! `u_i ∧ dσ = -dv` (equivalently: the lattice measure of the facet once
//! `u_i` is primitive). Interior moments, facet moments and hyperplane
//! sections are all exact over the rationals; floating point appears only
//! in the adaptive quadrature submodule.

mod pl;
mod quadrature;

pub use pl::PlConvexFunction;
pub use quadrature::{quadrature, quadrature_plain, QuadratureResult};

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg;
use crate::poly::MultiPoly;
use crate::ratio::{rat_str, to_f64, Rational};

/// One inequality `⟨normal, z⟩ + offset ≥ 0` with integer inward normal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<i64>,
    pub offset: Rational,
}

impl Halfspace {
    pub fn new(normal: Vec<i64>, offset: Rational) -> Self {
        Halfspace { normal, offset }
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        let mut acc = self.offset.clone();
        for (&n, zi) in self.normal.iter().zip(z) {
            acc += Rational::from_integer(BigInt::from(n)) * zi;
        }
        acc
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        let mut acc = to_f64(&self.offset);
        for (&n, zi) in self.normal.iter().zip(z) {
            acc += n as f64 * zi;
        }
        acc
    }

    /// `⟨normal, z⟩ + offset` as a polynomial.
    pub fn affine_poly(&self) -> MultiPoly {
        let grad: Vec<Rational> = self
            .normal
            .iter()
            .map(|&n| Rational::from_integer(BigInt::from(n)))
            .collect();
        MultiPoly::affine(&grad, &self.offset)
    }
}

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("no halfspaces supplied")]
    NoHalfspaces,
    #[error("halfspace {index} has zero normal")]
    ZeroNormal { index: usize },
    #[error("halfspace {index} has non-primitive normal")]
    NotPrimitive { index: usize },
    #[error("halfspace {index} duplicates an earlier one")]
    DuplicateHalfspace { index: usize },
    #[error("halfspace {index} does not support a facet")]
    RedundantHalfspace { index: usize },
    #[error("polytope is unbounded")]
    NotBounded,
    #[error("feasible region is empty")]
    EmptyRegion,
    #[error("feasible region has empty interior")]
    EmptyInterior,
    #[error("Delzant condition fails at vertex ({vertex})")]
    NotDelzant { vertex: VertexDisplay },
    #[error("section normals do not span a saturated sublattice")]
    NonUnimodularSection,
}

/// Rational vertex formatted for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexDisplay(pub Vec<Rational>);

impl fmt::Display for VertexDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(rat_str).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// A bounded full-dimensional rational polytope in half-space form.
///
/// This is the workhorse for scratch regions (crease cells, hyperplane
/// sections); it does not require the Delzant condition.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vec<Rational>>,
}

impl Polytope {
    /// Builds the polytope, normalizing and deduplicating the inequalities.
    /// Fails when the region is empty, not full-dimensional or unbounded.
    pub fn from_halfspaces(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        ) -> Result<Polytope, PolytopeError> {
        assert!(dim >= 1, "ambient dimension must be at least 1");
        if halfspaces.is_empty() {
            return Err(PolytopeError::NoHalfspaces);
        }
        let mut cleaned: Vec<Halfspace> = Vec::new();
        for hs in halfspaces {
            assert_eq!(hs.normal.len(), dim, "normal length mismatch");
            let mut normal = hs.normal.clone();
            let g = linalg::primitivize(&mut normal);
            if g == 0 {
                // Constant constraint: offset < 0 is infeasible, else vacuous.
                if hs.offset.is_negative() {
                    return Err(PolytopeError::EmptyRegion);
                }
                continue;
            }
            let offset = hs.offset / Rational::from_integer(BigInt::from(g));
            let candidate = Halfspace::new(normal, offset);
            if !cleaned.contains(&candidate) {
                cleaned.push(candidate);
            }
        }
        if cleaned.is_empty() {
            return Err(PolytopeError::NoHalfspaces);
        }
        let vertices = enumerate_vertices(dim, &cleaned);
        if vertices.is_empty() {
            return Err(PolytopeError::EmptyRegion);
        }
        if recession_cone_nontrivial(dim, &cleaned) {
            return Err(PolytopeError::NotBounded);
        }
        if affine_rank(&vertices) < dim {
            return Err(PolytopeError::EmptyInterior);
        }
        Ok(Polytope {
            dim,
            halfspaces: cleaned,
            vertices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    /// Average of the vertices; interior for a full-dimensional polytope.
    pub fn interior_point(&self) -> Vec<Rational> {
        let n = Rational::from_integer(BigInt::from(self.vertices.len() as i64));
        (0..self.dim)
            .map(|i| {
                let mut acc = Rational::zero();
                for v in &self.vertices {
                    acc += &v[i];
                }
                acc / n.clone()
            })
            .collect()
    }

    pub fn contains(&self, z: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| !h.eval(z).is_negative())
    }

    pub fn strictly_contains(&self, z: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| h.eval(z).is_positive())
    }

    pub fn contains_f64(&self, z: &[f64], margin: f64) -> bool {
        self.halfspaces.iter().all(|h| h.eval_f64(z) >= margin)
    }

    /// Largest pairwise vertex distance (for step-size heuristics).
    pub fn diameter_f64(&self) -> f64 {
        let vs: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(to_f64).collect())
            .collect();
        let mut best: f64 = 0.0;
        for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                let d: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                best = best.max(d);
            }
        }
        best
    }

    /// Deterministic fan triangulation from the lexicographically smallest
    /// vertex. Each simplex is a list of `dim + 1` vertices.
    pub fn triangulate(&self) -> Vec<Vec<Vec<Rational>>> {
        if self.dim == 1 {
            let lo = self.vertices.first().unwrap().clone();
            let hi = self.vertices.last().unwrap().clone();
            return vec![vec![lo, hi]];
        }
        let base = self.vertices[0].clone();
        let mut simplices = Vec::new();
        for (i, hs) in self.halfspaces.iter().enumerate() {
            if hs.eval(&base).is_zero() {
                continue; // facets through the base vertex add no volume
            }
            let Ok((facet, frame)) = self.section(i, &[]) else {
                continue; // redundant or lower-dimensional contact
            };
            for simplex_t in facet.triangulate_or_point() {
                let mut simplex = vec![base.clone()];
                for t in simplex_t {
                    simplex.push(frame.to_ambient(&t));
                }
                simplices.push(simplex);
            }
        }
        simplices
    }

    /// Triangulation that also covers the zero-dimensional case (used by the
    /// recursion: the facets of a segment are points).
    fn triangulate_or_point(&self) -> Vec<Vec<Vec<Rational>>> {
        self.triangulate()
    }

    /// Exact `∫ q dv` in the lattice normalization of the coordinates.
    pub fn moment(&self, q: &MultiPoly) -> Rational {
        assert_eq!(q.nvars(), self.dim, "integrand variable count mismatch");
        let mut acc = Rational::zero();
        for simplex in self.triangulate() {
            acc += integrate_over_simplex(&simplex, q);
        }
        acc
    }

    /// Section by the `i`-th halfspace boundary, intersected with `extra`
    /// inequalities, as a polytope in lattice coordinates of the hyperplane.
    pub fn section(
        &self,
        facet: usize,
        extra: &[Halfspace],
    ) -> Result<(Polytope, SectionFrame), PolytopeError> {
        let hs = &self.halfspaces[facet];
        hyperplane_section(
            self.dim,
            &self.halfspaces,
            &[(hs.normal.clone(), hs.offset.clone())],
            extra,
        )
    }

    /// Section by arbitrary equalities `⟨n_k, z⟩ + c_k = 0` (saturated
    /// integer normals), intersected with this polytope and `extra`.
    pub fn section_by(
        &self,
        equalities: &[(Vec<i64>, Rational)],
        extra: &[Halfspace],
    ) -> Result<(Polytope, SectionFrame), PolytopeError> {
        hyperplane_section(self.dim, &self.halfspaces, equalities, extra)
    }

    /// Strictly interior rational sample points: a barycentric grid of the
    /// stated resolution on every triangulation simplex.
    pub fn interior_grid(&self, resolution: usize) -> Vec<Vec<Rational>> {
        let mut out = Vec::new();
        for simplex in self.triangulate() {
            let k = simplex.len();
            if resolution < k {
                out.push(barycenter(&simplex));
                continue;
            }
            let denom = Rational::from_integer(BigInt::from(resolution as i64));
            for comp in compositions(resolution, k) {
                let mut pt = vec![Rational::zero(); self.dim];
                for (a, v) in comp.iter().zip(&simplex) {
                    let w = Rational::from_integer(BigInt::from(*a as i64)) / denom.clone();
                    for (p, vi) in pt.iter_mut().zip(v) {
                        *p += w.clone() * vi;
                    }
                }
                out.push(pt);
            }
        }
        out
    }
}

/// Affine frame of a hyperplane section: `z = origin + Σ t_j basis_j` with
/// `basis` a lattice basis of the section's tangent lattice, so that the
/// induced measure in `t` is the one fixed by `u ∧ dσ = -dv`.
#[derive(Clone, Debug)]
pub struct SectionFrame {
    pub origin: Vec<Rational>,
    pub basis: Vec<Vec<i64>>,
}

impl SectionFrame {
    pub fn section_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_ambient(&self, t: &[Rational]) -> Vec<Rational> {
        assert_eq!(t.len(), self.basis.len());
        let mut z = self.origin.clone();
        for (tj, bj) in t.iter().zip(&self.basis) {
            for (zi, &bji) in z.iter_mut().zip(bj) {
                *zi += tj * Rational::from_integer(BigInt::from(bji));
            }
        }
        z
    }

    pub fn to_ambient_f64(&self, t: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.origin.iter().map(to_f64).collect();
        for (tj, bj) in t.iter().zip(&self.basis) {
            for (zi, &bji) in z.iter_mut().zip(bj) {
                *zi += tj * bji as f64;
            }
        }
        z
    }

    /// Pulls a polynomial in ambient coordinates back to the section.
    pub fn pullback(&self, p: &MultiPoly) -> MultiPoly {
        let maps: Vec<(Vec<Rational>, Rational)> = (0..self.origin.len())
            .map(|i| {
                let grad: Vec<Rational> = self
                    .basis
                    .iter()
                    .map(|bj| Rational::from_integer(BigInt::from(bj[i])))
                    .collect();
                (grad, self.origin[i].clone())
            })
            .collect();
        p.substitute_affine(&maps)
    }

    /// Integer pullback of an ambient integer normal: `basisᵀ · n`.
    pub fn pull_normal(&self, n: &[i64]) -> Vec<i64> {
        self.basis
            .iter()
            .map(|bj| bj.iter().zip(n).map(|(&b, &ni)| b * ni).sum())
            .collect()
    }
}

fn hyperplane_section(
    dim: usize,
    halfspaces: &[Halfspace],
    equalities: &[(Vec<i64>, Rational)],
    extra: &[Halfspace],
) -> Result<(Polytope, SectionFrame), PolytopeError> {
    assert!(!equalities.is_empty());
    assert!(dim > equalities.len(), "section would be zero-dimensional");
    let rows: Vec<Vec<i64>> = equalities.iter().map(|(n, _)| n.clone()).collect();
    let (kernel, pivots) = linalg::kernel_lattice(&rows).ok_or(PolytopeError::NonUnimodularSection)?;
    if kernel.len() != dim - equalities.len() {
        return Err(PolytopeError::NonUnimodularSection);
    }
    // Origin: with ⟨n_k, pivot_j⟩ = δ_kj the point -Σ c_k pivot_k lies on
    // every hyperplane.
    let mut origin = vec![Rational::zero(); dim];
    for ((_, c), pk) in equalities.iter().zip(&pivots) {
        for (oi, &pki) in origin.iter_mut().zip(pk) {
            *oi -= c * Rational::from_integer(BigInt::from(pki));
        }
    }
    let frame = SectionFrame {
        origin,
        basis: kernel,
    };
    let mut pulled: Vec<Halfspace> = Vec::new();
    for hs in halfspaces.iter().chain(extra) {
        let n = frame.pull_normal(&hs.normal);
        let c = hs.eval(&frame.origin);
        if n.iter().all(|&x| x == 0) {
            if c.is_negative() {
                return Err(PolytopeError::EmptyRegion);
            }
            continue;
        }
        pulled.push(Halfspace::new(n, c));
    }
    let poly = Polytope::from_halfspaces(dim - equalities.len(), pulled)?;
    Ok((poly, frame))
}

/// A face of a Delzant polytope: the set of halfspaces active on it, its
/// dimension and the ids of its vertices.
#[derive(Clone, Debug)]
pub struct Face {
    pub active: Vec<usize>,
    pub dim: usize,
    pub vertices: Vec<usize>,
}

/// A Delzant polytope: bounded, full-dimensional, simple, with primitive
/// inward normals forming a lattice basis at every vertex.
#[derive(Clone, Debug)]
pub struct DelzantPolytope {
    poly: Polytope,
    faces: Vec<Face>,
}

impl DelzantPolytope {
    /// Validates the half-space description and derives vertices and the
    /// face lattice.
    pub fn build(halfspaces: Vec<(Vec<i64>, Rational)>) -> Result<Self, PolytopeError> {
        if halfspaces.is_empty() {
            return Err(PolytopeError::NoHalfspaces);
        }
        let dim = halfspaces[0].0.len();
        assert!(dim >= 1, "polytope dimension must be at least 1");
        for (index, (normal, _)) in halfspaces.iter().enumerate() {
            assert_eq!(normal.len(), dim, "normal length mismatch");
            if normal.iter().all(|&x| x == 0) {
                return Err(PolytopeError::ZeroNormal { index });
            }
            let mut copy = normal.clone();
            if linalg::primitivize(&mut copy) != 1 {
                return Err(PolytopeError::NotPrimitive { index });
            }
        }
        for index in 1..halfspaces.len() {
            if halfspaces[..index]
                .iter()
                .any(|(n, _)| *n == halfspaces[index].0)
            {
                return Err(PolytopeError::DuplicateHalfspace { index });
            }
        }
        let hs: Vec<Halfspace> = halfspaces
            .into_iter()
            .map(|(n, c)| Halfspace::new(n, c))
            .collect();
        let poly = Polytope::from_halfspaces(dim, hs)?;
        // Every supplied halfspace must support a genuine facet.
        for index in 0..poly.halfspaces.len() {
            let on_facet: Vec<Vec<Rational>> = poly
                .vertices
                .iter()
                .filter(|v| poly.halfspaces[index].eval(v).is_zero())
                .cloned()
                .collect();
            if on_facet.is_empty() || affine_rank(&on_facet) != dim - 1 {
                return Err(PolytopeError::RedundantHalfspace { index });
            }
        }
        // Delzant vertex condition: exactly dim active normals, |det| = 1.
        let mut active_sets: Vec<Vec<usize>> = Vec::new();
        for v in &poly.vertices {
            let active: Vec<usize> = poly
                .halfspaces
                .iter()
                .enumerate()
                .filter(|(_, h)| h.eval(v).is_zero())
                .map(|(i, _)| i)
                .collect();
            let normals: Vec<Vec<i64>> = active
                .iter()
                .map(|&i| poly.halfspaces[i].normal.clone())
                .collect();
            if active.len() != dim || linalg::det_i64(&normals).abs() != 1 {
                return Err(PolytopeError::NotDelzant {
                    vertex: VertexDisplay(v.clone()),
                });
            }
            active_sets.push(active);
        }
        // Delzant polytopes are simple, so faces are exactly the subsets of
        // the active set at any vertex; the subset is the canonical active
        // set of the face.
        let mut face_keys: BTreeSet<Vec<usize>> = BTreeSet::new();
        for active in &active_sets {
            for mask in 0..(1u32 << active.len()) {
                let subset: Vec<usize> = active
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &i)| i)
                    .collect();
                face_keys.insert(subset);
            }
        }
        let mut faces: Vec<Face> = face_keys
            .into_iter()
            .map(|active| {
                let vertices: Vec<usize> = active_sets
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| active.iter().all(|i| a.contains(i)))
                    .map(|(vi, _)| vi)
                    .collect();
                Face {
                    dim: dim - active.len(),
                    active,
                    vertices,
                }
            })
            .collect();
        faces.sort_by(|a, b| (a.active.len(), &a.active).cmp(&(b.active.len(), &b.active)));
        Ok(DelzantPolytope { poly, faces })
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn polytope(&self) -> &Polytope {
        &self.poly
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.poly.halfspaces
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.poly.vertices
    }

    /// All faces, sorted by codimension then active set; the first entry is
    /// the polytope itself (empty active set).
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn interior_point(&self) -> Vec<Rational> {
        self.poly.interior_point()
    }

    pub fn moment(&self, q: &MultiPoly) -> Rational {
        self.poly.moment(q)
    }

    /// Exact `∫ q dσ` over the selected facets (all facets when `None`),
    /// with `dσ` the lattice facet measure fixed by `u_i ∧ dσ = -dv`.
    pub fn boundary_moment(&self, q: &MultiPoly, facets: Option<&[usize]>) -> Rational {
        let all: Vec<usize> = (0..self.poly.halfspaces.len()).collect();
        let chosen = facets.unwrap_or(&all);
        let mut acc = Rational::zero();
        for &i in chosen {
            acc += self.facet_moment(i, q);
        }
        acc
    }

    fn facet_moment(&self, facet: usize, q: &MultiPoly) -> Rational {
        if self.poly.dim == 1 {
            let v = self
                .poly
                .vertices
                .iter()
                .find(|v| self.poly.halfspaces[facet].eval(v).is_zero())
                .expect("facet of an interval is a vertex");
            return q.eval(v);
        }
        let (sub, frame) = self
            .poly
            .section(facet, &[])
            .expect("validated facet has a full-dimensional section");
        sub.moment(&frame.pullback(q))
    }

    pub fn triangulate(&self) -> Vec<Vec<Vec<Rational>>> {
        self.poly.triangulate()
    }

    pub fn interior_grid(&self, resolution: usize) -> Vec<Vec<Rational>> {
        self.poly.interior_grid(resolution)
    }

    pub fn diameter_f64(&self) -> f64 {
        self.poly.diameter_f64()
    }
}

fn enumerate_vertices(dim: usize, halfspaces: &[Halfspace]) -> Vec<Vec<Rational>> {
    let n = halfspaces.len();
    let mut found: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    if n < dim {
        return Vec::new();
    }
    loop {
        let a: Vec<Vec<Rational>> = subset
            .iter()
            .map(|&i| {
                halfspaces[i]
                    .normal
                    .iter()
                    .map(|&x| Rational::from_integer(BigInt::from(x)))
                    .collect()
            })
            .collect();
        let b: Vec<Rational> = subset
            .iter()
            .map(|&i| -halfspaces[i].offset.clone())
            .collect();
        if let Some(v) = linalg::solve(&a, &b) {
            if halfspaces.iter().all(|h| !h.eval(&v).is_negative()) {
                found.insert(v);
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return found.into_iter().collect();
            }
            k -= 1;
            if subset[k] + 1 <= n - (dim - k) {
                subset[k] += 1;
                for j in k + 1..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn recession_cone_nontrivial(dim: usize, halfspaces: &[Halfspace]) -> bool {
    let mut cone: Vec<Halfspace> = halfspaces
        .iter()
        .map(|h| Halfspace::new(h.normal.clone(), Rational::zero()))
        .collect();
    for j in 0..dim {
        let mut plus = vec![0i64; dim];
        plus[j] = 1;
        let mut minus = vec![0i64; dim];
        minus[j] = -1;
        cone.push(Halfspace::new(plus, Rational::one()));
        cone.push(Halfspace::new(minus, Rational::one()));
    }
    enumerate_vertices(dim, &cone)
        .iter()
        .any(|v| v.iter().any(|x| !x.is_zero()))
}

fn affine_rank(points: &[Vec<Rational>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let rows: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    linalg::rank(&rows)
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Exact integral of `q` over the simplex with the given vertices, using
/// the monomial formula `∫_std x^β dx = β! / (|β| + ℓ)!`.
fn integrate_over_simplex(verts: &[Vec<Rational>], q: &MultiPoly) -> Rational {
    let dim = q.nvars();
    assert_eq!(verts.len(), dim + 1);
    let base = &verts[0];
    let cols: Vec<Vec<Rational>> = verts[1..]
        .iter()
        .map(|v| v.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    // Jacobian matrix has the edge vectors as columns.
    let mat: Vec<Vec<Rational>> = (0..dim)
        .map(|i| (0..dim).map(|j| cols[j][i].clone()).collect())
        .collect();
    let jac = linalg::det(&mat).abs();
    if jac.is_zero() {
        return Rational::zero();
    }
    let maps: Vec<(Vec<Rational>, Rational)> = (0..dim)
        .map(|i| {
            let grad: Vec<Rational> = (0..dim).map(|j| cols[j][i].clone()).collect();
            (grad, base[i].clone())
        })
        .collect();
    let composed = q.substitute_affine(&maps);
    let mut acc = Rational::zero();
    for (exps, coeff) in composed.terms() {
        let total: u32 = exps.iter().sum();
        let mut numer = BigInt::one();
        for &e in exps {
            numer *= factorial(e);
        }
        let denom = factorial(total + dim as u32);
        acc += coeff * Rational::new(numer, denom);
    }
    acc * jac
}

fn barycenter(simplex: &[Vec<Rational>]) -> Vec<Rational> {
    let n = Rational::from_integer(BigInt::from(simplex.len() as i64));
    (0..simplex[0].len())
        .map(|i| {
            let mut acc = Rational::zero();
            for v in simplex {
                acc += &v[i];
            }
            acc / n.clone()
        })
        .collect()
}

/// All compositions of `total` into `parts` strictly positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn rec(total: usize, idx: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let parts = current.len();
        let remaining_slots = parts - idx - 1;
        if idx == parts - 1 {
            current[idx] = total;
            out.push(current.clone());
            return;
        }
        for v in 1..=(total - remaining_slots) {
            current[idx] = v;
            rec(total - v, idx + 1, current, out);
        }
    }
    if parts == 0 || total < parts {
        return out;
    }
    rec(total, 0, &mut current, &mut out);
    out
}

/// Convenience constructors for the polytopes the tests lean on.
pub mod shapes {
    use super::*;

    /// `[0, 1] ⊂ R`.
    pub fn unit_interval() -> DelzantPolytope {
        DelzantPolytope::build(vec![
            (vec![1], Rational::zero()),
            (vec![-1], Rational::one()),
        ])
        .expect("unit interval is Delzant")
    }

    /// Standard simplex `{z_i ≥ 0, 1 - Σ z_i ≥ 0}` in dimension `dim`.
    pub fn standard_simplex(dim: usize) -> DelzantPolytope {
        let mut hs: Vec<(Vec<i64>, Rational)> = (0..dim)
            .map(|i| {
                let mut n = vec![0i64; dim];
                n[i] = 1;
                (n, Rational::zero())
            })
            .collect();
        hs.push((vec![-1i64; dim], Rational::one()));
        DelzantPolytope::build(hs).expect("standard simplex is Delzant")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, rat_int};

    fn poly_1() -> MultiPoly {
        MultiPoly::one(2)
    }

    #[test]
    fn builds_standard_simplex() {
        let p = shapes::standard_simplex(2);
        assert_eq!(p.vertices().len(), 3);
        let expected: Vec<Vec<Rational>> = vec![
            vec![rat_int(0), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(1), rat_int(0)],
        ];
        assert_eq!(p.vertices(), expected.as_slice());
        // faces: 1 polytope + 3 facets + 3 vertices
        assert_eq!(p.faces().len(), 7);
    }

    #[test]
    fn builds_interval() {
        let p = shapes::unit_interval();
        assert_eq!(p.vertices().len(), 2);
        assert_eq!(p.dim(), 1);
    }

    #[test]
    fn rejects_non_delzant_vertex() {
        // {(1,0),0}, {(0,1),0}, {(-1,-2),1}: determinant 2 at vertex (1,0).
        let err = DelzantPolytope::build(vec![
            (vec![1, 0], rat_int(0)),
            (vec![0, 1], rat_int(0)),
            (vec![-1, -2], rat_int(1)),
        ])
        .unwrap_err();
        match err {
            PolytopeError::NotDelzant { vertex } => {
                assert_eq!(vertex.0, vec![rat_int(1), rat_int(0)]);
            }
            other => panic!("expected NotDelzant, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unbounded_and_empty() {
        let err = DelzantPolytope::build(vec![
            (vec![1, 0], rat_int(0)),
            (vec![0, 1], rat_int(0)),
        ])
        .unwrap_err();
        assert!(matches!(err, PolytopeError::NotBounded));

        let err = DelzantPolytope::build(vec![
            (vec![1], rat_int(0)),
            (vec![-1], rat_int(-1)),
        ])
        .unwrap_err();
        assert!(matches!(err, PolytopeError::EmptyRegion));
    }

    #[test]
    fn rejects_redundant_halfspace() {
        let err = DelzantPolytope::build(vec![
            (vec![1, 0], rat_int(0)),
            (vec![0, 1], rat_int(0)),
            (vec![-1, -1], rat_int(1)),
            (vec![1, 1], rat_int(5)),
        ])
        .unwrap_err();
        assert!(matches!(
            err,
            PolytopeError::RedundantHalfspace { index: 3 }
        ));
    }

    #[test]
    fn simplex_moments_match_monomial_formula() {
        let p = shapes::standard_simplex(2);
        assert_eq!(p.moment(&poly_1()), rat(1, 2));
        assert_eq!(p.moment(&MultiPoly::var(2, 0)), rat(1, 6));
        let z0z1 = &MultiPoly::var(2, 0) * &MultiPoly::var(2, 1);
        assert_eq!(p.moment(&z0z1), rat(1, 24));
        let z0sq = &MultiPoly::var(2, 0) * &MultiPoly::var(2, 0);
        assert_eq!(p.moment(&z0sq), rat(1, 12));
    }

    #[test]
    fn boundary_moments_on_simplex() {
        let p = shapes::standard_simplex(2);
        assert_eq!(p.boundary_moment(&poly_1(), None), rat_int(3));
        assert_eq!(p.boundary_moment(&MultiPoly::var(2, 0), None), rat_int(1));
    }

    #[test]
    fn boundary_moments_on_interval() {
        let p = shapes::unit_interval();
        assert_eq!(p.boundary_moment(&MultiPoly::one(1), None), rat_int(2));
        assert_eq!(p.boundary_moment(&MultiPoly::var(1, 0), None), rat_int(1));
    }

    #[test]
    fn moment_additivity_under_splitting() {
        // Split the simplex along z0 = 1/3 and compare with the whole.
        let p = shapes::standard_simplex(2);
        let q = {
            let z0 = MultiPoly::var(2, 0);
            let z1 = MultiPoly::var(2, 1);
            &(&z0 * &z0) + &(&z0 * &z1).scale(&rat_int(3))
        };
        let whole = p.moment(&q);
        let mut left_hs: Vec<Halfspace> = p.halfspaces().to_vec();
        left_hs.push(Halfspace::new(vec![-3, 0], rat_int(1)));
        let mut right_hs: Vec<Halfspace> = p.halfspaces().to_vec();
        right_hs.push(Halfspace::new(vec![3, 0], rat_int(-1)));
        let left = Polytope::from_halfspaces(2, left_hs).unwrap();
        let right = Polytope::from_halfspaces(2, right_hs).unwrap();
        assert_eq!(left.moment(&q) + right.moment(&q), whole);
    }

    #[test]
    fn unimodular_invariance_of_moments() {
        // T(z) = (z0 + z1, z1): image polytope has halfspaces with normals
        // transformed by the inverse transpose.
        let p = shapes::standard_simplex(2);
        let q = &MultiPoly::var(2, 0) * &MultiPoly::var(2, 1);
        // Image polytope: {z0 - z1 >= 0 comes from z0 >= 0}, etc.
        let image = DelzantPolytope::build(vec![
            (vec![1, -1], rat_int(0)),
            (vec![0, 1], rat_int(0)),
            (vec![-1, 0], rat_int(1)),
        ])
        .unwrap();
        // q ∘ T⁻¹ with T⁻¹(w) = (w0 - w1, w1): z0 z1 -> (w0 - w1) w1.
        let w0 = MultiPoly::var(2, 0);
        let w1 = MultiPoly::var(2, 1);
        let q_image = &(&w0 - &w1) * &w1;
        assert_eq!(image.moment(&q_image), p.moment(&q));
    }

    #[test]
    fn interior_grid_is_interior() {
        let p = shapes::standard_simplex(2);
        for z in p.interior_grid(5) {
            assert!(p.polytope().strictly_contains(&z));
        }
    }

    #[test]
    fn simplex_triangulation_has_full_volume_in_dim3() {
        let p = shapes::standard_simplex(3);
        assert_eq!(p.moment(&MultiPoly::one(3)), rat(1, 6));
        assert_eq!(p.moment(&MultiPoly::var(3, 2)), rat(1, 24));
    }

    #[test]
    fn cube_moments() {
        let cube = DelzantPolytope::build(vec![
            (vec![1, 0], rat_int(0)),
            (vec![-1, 0], rat_int(1)),
            (vec![0, 1], rat_int(0)),
            (vec![0, -1], rat_int(1)),
        ])
        .unwrap();
        assert_eq!(cube.moment(&poly_1()), rat_int(1));
        let z0 = MultiPoly::var(2, 0);
        assert_eq!(cube.moment(&z0), rat(1, 2));
        assert_eq!(cube.boundary_moment(&poly_1(), None), rat_int(4));
    }
}
