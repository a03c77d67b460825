//! Inverse-Hessian matrix fields and the weighted Abreu operator.
//!
//! An `HMatrix` is a symmetric field of rational functions on the polytope,
//! the candidate inverse Hessian of a symplectic potential. The module
//! verifies the first-order boundary conditions
//! `H_z(u_i, ·) = 0`, `(dH)_z(u_i, u_i) = 2 u_i` on each facet (exactly for
//! rational entries), samples positivity of the induced form on every face,
//! computes the weighted scalar curvature
//!
//! ```text
//! Scal(z) = Σ_j Scal_j/(⟨p_j,z⟩+c_j) - (1/p) Σ_rs ∂²(p H_rs)/∂z_r ∂z_s
//! ```
//!
//! and the extremal operator `⟨A,z⟩ + B + Scal(z)`, whose vanishing as a
//! rational function characterizes extremal solutions. For matrix fields
//! that are only positive definite (not inverse Hessians) the same formula
//! is the hermitian scalar curvature of the compatible almost-Kähler
//! metric; the integrability check `∂_t (H⁻¹)_rs = ∂_s (H⁻¹)_rt` decides
//! which case one is in.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::calabi::FibrationData;
use crate::extremal::{solve_extremal_affine, ExtremalError};
use crate::linalg;
use crate::poly::MultiPoly;
use crate::polytope::{DelzantPolytope, SectionFrame};
use crate::ratfn::RationalFn;
use crate::ratio::{to_f64, Rational};

#[derive(Debug, Error)]
pub enum AbreuError {
    #[error("matrix entries are not symmetric")]
    NotSymmetric,
    #[error("evaluation point lies on the boundary")]
    PointOnBoundary,
    #[error("finite-difference stencil leaves the interior")]
    EvaluationOnBoundary,
    #[error("H is singular as a matrix of rational functions")]
    SingularH,
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
}

/// Symmetric `S²t*`-valued field of rational functions on the polytope.
#[derive(Clone, Debug)]
pub struct HMatrix {
    dim: usize,
    entries: Vec<Vec<RationalFn>>,
}

impl HMatrix {
    pub fn new(entries: Vec<Vec<RationalFn>>) -> Result<Self, AbreuError> {
        let dim = entries.len();
        assert!(dim >= 1 && entries.iter().all(|row| row.len() == dim));
        for r in 0..dim {
            for s in r + 1..dim {
                if !(&entries[r][s] - &entries[s][r]).is_zero() {
                    return Err(AbreuError::NotSymmetric);
                }
            }
        }
        Ok(HMatrix { dim, entries })
    }

    /// Polynomial entries over an optional common denominator.
    pub fn from_polys(entries: Vec<Vec<MultiPoly>>, den: Option<MultiPoly>) -> Result<Self, AbreuError> {
        let dim = entries.len();
        let den = den.unwrap_or_else(|| MultiPoly::one(dim));
        let rf: Vec<Vec<RationalFn>> = entries
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|p| RationalFn::new(p, den.clone()))
                    .collect()
            })
            .collect();
        HMatrix::new(rf)
    }

    /// The Fubini–Study field `H_rs = 2 (z_r δ_rs - z_r z_s)` on the
    /// standard simplex of the given dimension.
    pub fn fubini_study(dim: usize) -> Self {
        let two = Rational::from_integer(BigInt::from(2));
        let entries: Vec<Vec<MultiPoly>> = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|s| {
                        let zr = MultiPoly::var(dim, r);
                        let zs = MultiPoly::var(dim, s);
                        let mut e = -&(&zr * &zs);
                        if r == s {
                            e = &e + &zr;
                        }
                        e.scale(&two)
                    })
                    .collect()
            })
            .collect();
        HMatrix::from_polys(entries, None).expect("symmetric by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, s: usize) -> &RationalFn {
        &self.entries[r][s]
    }

    pub fn scale(&self, c: &Rational) -> HMatrix {
        let factor = RationalFn::constant(self.dim, c.clone());
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e * &factor).collect())
            .collect();
        HMatrix {
            dim: self.dim,
            entries,
        }
    }

    /// `H(u, ·)` as a vector of rational functions.
    pub fn apply(&self, u: &[i64]) -> Vec<RationalFn> {
        (0..self.dim)
            .map(|s| {
                let mut acc = RationalFn::zero(self.dim);
                for (r, &ur) in u.iter().enumerate() {
                    if ur != 0 {
                        let c = RationalFn::constant(self.dim, Rational::from_integer(BigInt::from(ur)));
                        acc = &acc + &(&c * &self.entries[r][s]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `H(u, v)` as a rational function.
    pub fn pairing(&self, u: &[i64], v: &[i64]) -> RationalFn {
        let mut acc = RationalFn::zero(self.dim);
        for (r, &ur) in u.iter().enumerate() {
            for (s, &vs) in v.iter().enumerate() {
                if ur != 0 && vs != 0 {
                    let c = RationalFn::constant(
                        self.dim,
                        Rational::from_integer(BigInt::from(ur * vs)),
                    );
                    acc = &acc + &(&c * &self.entries[r][s]);
                }
            }
        }
        acc
    }

    pub fn eval_exact(&self, z: &[Rational]) -> Option<Vec<Vec<Rational>>> {
        let mut out = vec![vec![Rational::zero(); self.dim]; self.dim];
        for r in 0..self.dim {
            for s in 0..self.dim {
                out[r][s] = self.entries[r][s].eval(z)?;
            }
        }
        Some(out)
    }

    pub fn eval_f64(&self, z: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|s| self.entries[r][s].eval_f64(z)).collect())
            .collect()
    }

    /// Exact inverse as a matrix of rational functions (adjugate over
    /// determinant). Errors when the determinant is the zero function.
    pub fn inverse(&self) -> Result<Vec<Vec<RationalFn>>, AbreuError> {
        let det = ratfn_det(&self.entries);
        if det.is_zero() {
            return Err(AbreuError::SingularH);
        }
        let n = self.dim;
        let mut out = vec![vec![RationalFn::zero(n); n]; n];
        for r in 0..n {
            for s in 0..n {
                let minor = ratfn_minor(&self.entries, s, r);
                let mut cof = ratfn_det(&minor);
                if (r + s) % 2 == 1 {
                    cof = -&cof;
                }
                out[r][s] = &cof / &det;
            }
        }
        Ok(out)
    }
}

fn ratfn_minor(m: &[Vec<RationalFn>], drop_row: usize, drop_col: usize) -> Vec<Vec<RationalFn>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != drop_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != drop_col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

fn ratfn_det(m: &[Vec<RationalFn>]) -> RationalFn {
    let n = m.len();
    if n == 0 {
        return RationalFn::constant(0, Rational::one());
    }
    let nvars = m[0][0].nvars();
    match n {
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = RationalFn::zero(nvars);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let term = &m[0][j] * &ratfn_det(&ratfn_minor(m, 0, j));
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// Symplectic potentials evaluated pointwise: the canonical Guillemin
/// potential `U₀ = ½ Σ_i (⟨u_i,z⟩+c_i) log(⟨u_i,z⟩+c_i)` plus an optional
/// smooth polynomial perturbation.
#[derive(Clone, Debug)]
pub struct SymplecticPotential {
    polytope: DelzantPolytope,
    perturbation: Option<MultiPoly>,
}

impl SymplecticPotential {
    pub fn guillemin(polytope: DelzantPolytope) -> Self {
        SymplecticPotential {
            polytope,
            perturbation: None,
        }
    }

    pub fn with_perturbation(polytope: DelzantPolytope, phi: MultiPoly) -> Self {
        assert_eq!(phi.nvars(), polytope.dim());
        SymplecticPotential {
            polytope,
            perturbation: Some(phi),
        }
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    /// U(z); continuous up to the boundary (`x log x → 0`).
    pub fn value(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for hs in self.polytope.halfspaces() {
            let h = hs.eval_f64(z);
            if h > 0.0 {
                acc += 0.5 * h * h.ln();
            }
        }
        if let Some(phi) = &self.perturbation {
            acc += phi.eval_f64(z);
        }
        acc
    }

    /// Hess U at an interior point; `None` on or outside the boundary.
    pub fn hessian(&self, z: &[f64]) -> Option<Vec<Vec<f64>>> {
        let dim = self.polytope.dim();
        let mut hess = vec![vec![0.0; dim]; dim];
        for hs in self.polytope.halfspaces() {
            let h = hs.eval_f64(z);
            if h <= 0.0 {
                return None;
            }
            for r in 0..dim {
                for s in 0..dim {
                    hess[r][s] += 0.5 * hs.normal[r] as f64 * hs.normal[s] as f64 / h;
                }
            }
        }
        if let Some(phi) = &self.perturbation {
            for r in 0..dim {
                for s in 0..dim {
                    hess[r][s] += phi.partial(r).partial(s).eval_f64(z);
                }
            }
        }
        Some(hess)
    }

    /// `(Hess U)⁻¹` at an interior point, `None` off the interior or when
    /// the Hessian fails to be invertible.
    pub fn h_matrix(&self, z: &[f64]) -> Option<Vec<Vec<f64>>> {
        invert_f64(&self.hessian(z)?)
    }

    /// `log det Hess U`; `None` off the interior or when the Hessian is not
    /// positive definite.
    pub fn log_det_hessian(&self, z: &[f64]) -> Option<f64> {
        let hess = self.hessian(z)?;
        cholesky_log_det(&hess)
    }

    /// Exact Hessian of the Guillemin part plus perturbation at a rational
    /// interior point.
    pub fn hessian_exact(&self, z: &[Rational]) -> Option<Vec<Vec<Rational>>> {
        let dim = self.polytope.dim();
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let mut hess = vec![vec![Rational::zero(); dim]; dim];
        for hs in self.polytope.halfspaces() {
            let h = hs.eval(z);
            if !h.is_positive() {
                return None;
            }
            for r in 0..dim {
                for s in 0..dim {
                    let num = BigInt::from(hs.normal[r]) * BigInt::from(hs.normal[s]);
                    hess[r][s] += Rational::from_integer(num) * &half / &h;
                }
            }
        }
        if let Some(phi) = &self.perturbation {
            for r in 0..dim {
                for s in 0..dim {
                    hess[r][s] += phi.partial(r).partial(s).eval(z);
                }
            }
        }
        Some(hess)
    }
}

fn invert_f64(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for c in 0..2 * n {
            a[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for c in 0..2 * n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

fn cholesky_log_det(m: &[Vec<f64>]) -> Option<f64> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    let mut log_det = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
                log_det += sum.ln();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(log_det)
}

/// Exact inverse Hessian of the Guillemin potential at an interior point.
pub fn guillemin_h(
    polytope: &DelzantPolytope,
    z: &[Rational],
) -> Result<Vec<Vec<Rational>>, AbreuError> {
    if !polytope.polytope().strictly_contains(z) {
        return Err(AbreuError::PointOnBoundary);
    }
    let potential = SymplecticPotential::guillemin(polytope.clone());
    let hess = potential.hessian_exact(z).ok_or(AbreuError::PointOnBoundary)?;
    linalg::invert(&hess).ok_or(AbreuError::SingularH)
}

/// Per-facet residuals of the first-order boundary conditions.
#[derive(Clone, Debug, Serialize)]
pub struct FacetResidual {
    pub facet: usize,
    /// Max |H(u_i, ·)| over the facet (0 when verified symbolically).
    pub value_residual: f64,
    /// Max |(dH)(u_i,u_i) - 2u_i| over the facet (0 when symbolic).
    pub derivative_residual: f64,
    /// True when both conditions were established exactly.
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub facets: Vec<FacetResidual>,
    pub pass: bool,
    pub tolerance: f64,
}

/// Verifies the boundary conditions on every facet: exactly when the
/// restriction of the entries to the facet is well defined, otherwise at
/// interior sample points of the facet.
pub fn boundary_check(h: &HMatrix, polytope: &DelzantPolytope, tol: f64) -> BoundaryReport {
    assert_eq!(h.dim(), polytope.dim());
    let dim = polytope.dim();
    let mut facets = Vec::new();
    for (i, hs) in polytope.halfspaces().iter().enumerate() {
        let u = &hs.normal;
        let h_u = h.apply(u);
        let pair = h.pairing(u, u);
        let deriv: Vec<RationalFn> = (0..dim)
            .map(|k| {
                let two_uk = RationalFn::constant(
                    dim,
                    Rational::from_integer(BigInt::from(2 * u[k])),
                );
                &pair.partial(k) - &two_uk
            })
            .collect();
        let residual = if dim == 1 {
            let v = polytope
                .vertices()
                .iter()
                .find(|v| hs.eval(v).is_zero())
                .cloned()
                .expect("interval facet is a vertex");
            let value_res = h_u
                .iter()
                .map(|r| r.eval(&v).map_or(f64::INFINITY, |x| to_f64(&x.abs())))
                .fold(0.0f64, f64::max);
            let deriv_res = deriv
                .iter()
                .map(|r| r.eval(&v).map_or(f64::INFINITY, |x| to_f64(&x.abs())))
                .fold(0.0f64, f64::max);
            FacetResidual {
                facet: i,
                value_residual: value_res,
                derivative_residual: deriv_res,
                exact: true,
            }
        } else {
            let (facet_poly, frame) = polytope
                .polytope()
                .section(i, &[])
                .expect("facet section of a Delzant polytope");
            match check_on_facet(&h_u, &deriv, &facet_poly, &frame) {
                Some(res) => res(i),
                None => FacetResidual {
                    facet: i,
                    value_residual: f64::INFINITY,
                    derivative_residual: f64::INFINITY,
                    exact: false,
                },
            }
        };
        facets.push(residual);
    }
    let pass = facets
        .iter()
        .all(|f| f.value_residual <= tol && f.derivative_residual <= tol);
    BoundaryReport {
        facets,
        pass,
        tolerance: tol,
    }
}

type ResidualBuilder = Box<dyn FnOnce(usize) -> FacetResidual>;

fn check_on_facet(
    h_u: &[RationalFn],
    deriv: &[RationalFn],
    facet: &crate::polytope::Polytope,
    frame: &SectionFrame,
) -> Option<ResidualBuilder> {
    // Try the symbolic restriction first.
    let mut exact = true;
    let mut value_res = 0.0f64;
    let mut deriv_res = 0.0f64;
    let mut sample_fns: Vec<(&RationalFn, bool)> = Vec::new();
    for r in h_u {
        match restricted_is_zero(r, frame) {
            Some(true) => {}
            Some(false) | None => {
                exact = false;
                sample_fns.push((r, true));
            }
        }
    }
    for r in deriv {
        match restricted_is_zero(r, frame) {
            Some(true) => {}
            Some(false) | None => {
                exact = false;
                sample_fns.push((r, false));
            }
        }
    }
    if !exact {
        for z_t in facet.interior_grid(6) {
            let z = frame.to_ambient(&z_t);
            for (r, is_value) in &sample_fns {
                let v = r.eval(&z).map_or(f64::INFINITY, |x| to_f64(&x.abs()));
                if *is_value {
                    value_res = value_res.max(v);
                } else {
                    deriv_res = deriv_res.max(v);
                }
            }
        }
    }
    Some(Box::new(move |facet_idx| FacetResidual {
        facet: facet_idx,
        value_residual: value_res,
        derivative_residual: deriv_res,
        exact,
    }))
}

fn restricted_is_zero(r: &RationalFn, frame: &SectionFrame) -> Option<bool> {
    let den_t = frame.pullback(r.den());
    if den_t.is_zero() {
        return None;
    }
    Some(frame.pullback(r.num()).is_zero())
}

/// Positivity sample for one face.
#[derive(Clone, Debug, Serialize)]
pub struct FaceSample {
    /// Index into `polytope.faces()`.
    pub face: usize,
    pub face_dim: usize,
    pub samples: usize,
    /// Minimum eigenvalue of the quotient form over all samples.
    pub min_eigenvalue: f64,
    /// Max |H(z) u| over active normals u (how well H descends).
    pub max_kernel_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub faces: Vec<FaceSample>,
    pub positive: bool,
    pub min_margin: f64,
    pub resolution: usize,
}

/// Samples the face-positivity condition: on each face `F` (vertices are
/// trivial and skipped), `H` must kill the active normals and induce a
/// positive definite form on the quotient. A sampling certificate with
/// margins, not a proof.
pub fn face_positivity(h: &HMatrix, polytope: &DelzantPolytope, resolution: usize) -> PositivityReport {
    assert!(resolution >= 2, "resolution must be at least 2");
    let dim = polytope.dim();
    let mut report_faces = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut kernel_scale = 0.0f64;
    for (face_idx, face) in polytope.faces().iter().enumerate() {
        if face.dim == 0 {
            continue;
        }
        // Sample points of the face interior, in ambient coordinates.
        let points: Vec<Vec<Rational>> = if face.active.is_empty() {
            polytope.interior_grid(resolution)
        } else {
            let equalities: Vec<(Vec<i64>, Rational)> = face
                .active
                .iter()
                .map(|&i| {
                    let hs = &polytope.halfspaces()[i];
                    (hs.normal.clone(), hs.offset.clone())
                })
                .collect();
            let Ok((sub, frame)) = polytope.polytope().section_by(&equalities, &[]) else {
                continue;
            };
            sub.interior_grid(resolution)
                .into_iter()
                .map(|t| frame.to_ambient(&t))
                .collect()
        };
        // Complement basis spanning t / t_F.
        let active_rows: Vec<Vec<Rational>> = face
            .active
            .iter()
            .map(|&i| {
                polytope.halfspaces()[i]
                    .normal
                    .iter()
                    .map(|&x| Rational::from_integer(BigInt::from(x)))
                    .collect()
            })
            .collect();
        let complement = complement_basis(dim, &active_rows);
        let mut min_eig = f64::INFINITY;
        let mut kernel_res = 0.0f64;
        for z in &points {
            let Some(hz) = h.eval_exact(z) else {
                min_eig = f64::NEG_INFINITY;
                continue;
            };
            for row in &hz {
                for x in row {
                    kernel_scale = kernel_scale.max(to_f64(&x.abs()));
                }
            }
            for &i in &face.active {
                let u = &polytope.halfspaces()[i].normal;
                for s in 0..dim {
                    let mut acc = Rational::zero();
                    for (r, &ur) in u.iter().enumerate() {
                        acc += Rational::from_integer(BigInt::from(ur)) * &hz[r][s];
                    }
                    kernel_res = kernel_res.max(to_f64(&acc.abs()));
                }
            }
            let q: Vec<Vec<f64>> = complement
                .iter()
                .map(|va| {
                    complement
                        .iter()
                        .map(|vb| {
                            let mut acc = Rational::zero();
                            for (r, ar) in va.iter().enumerate() {
                                for (s, bs) in vb.iter().enumerate() {
                                    acc += ar * bs * &hz[r][s];
                                }
                            }
                            to_f64(&acc)
                        })
                        .collect()
                })
                .collect();
            let eigs = linalg::sym_eigenvalues(&q);
            if let Some(&e) = eigs.first() {
                min_eig = min_eig.min(e);
            }
        }
        min_margin = min_margin.min(min_eig);
        report_faces.push(FaceSample {
            face: face_idx,
            face_dim: face.dim,
            samples: points.len(),
            min_eigenvalue: min_eig,
            max_kernel_residual: kernel_res,
        });
    }
    let kernel_tol = 1e-9 * (1.0 + kernel_scale);
    let positive = report_faces
        .iter()
        .all(|f| f.min_eigenvalue > 0.0 && f.max_kernel_residual <= kernel_tol)
        && min_margin > 0.0;
    PositivityReport {
        faces: report_faces,
        positive,
        min_margin,
        resolution,
    }
}

fn complement_basis(dim: usize, active_rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut rows: Vec<Vec<Rational>> = active_rows.to_vec();
    let mut complement = Vec::new();
    let base_rank = linalg::rank(&rows);
    let mut rank = base_rank;
    for j in 0..dim {
        let mut e = vec![Rational::zero(); dim];
        e[j] = Rational::one();
        rows.push(e.clone());
        let new_rank = linalg::rank(&rows);
        if new_rank > rank {
            rank = new_rank;
            complement.push(e);
        } else {
            rows.pop();
        }
    }
    complement
}

/// The weighted Abreu scalar curvature of `H` as an exact rational
/// function.
pub fn abreu_scalar(h: &HMatrix, fibration: &FibrationData) -> RationalFn {
    assert_eq!(h.dim(), fibration.dim());
    let dim = h.dim();
    let weight = RationalFn::from_poly(fibration.weight().clone());
    let mut double_div = RationalFn::zero(dim);
    for r in 0..dim {
        for s in 0..dim {
            let ph = &weight * h.entry(r, s);
            double_div = &double_div + &ph.partial(r).partial(s);
        }
    }
    &fibration.scal_sum() - &(&double_div / &weight)
}

/// The extremal operator `P(H) = ⟨A,z⟩ + B + Scal(H)`; identically zero
/// exactly when `H` solves the extremal equation.
pub fn p_lambda(h: &HMatrix, fibration: &FibrationData) -> Result<RationalFn, AbreuError> {
    let affine = solve_extremal_affine(fibration)?;
    let affine_fn = RationalFn::from_poly(affine.to_poly());
    Ok(&affine_fn + &abreu_scalar(h, fibration))
}

/// Finite-difference evaluation of the weighted scalar curvature for
/// black-box matrix fields (central differences, Richardson extrapolated).
pub fn abreu_scalar_fd(
    h: &dyn Fn(&[f64]) -> Option<Vec<Vec<f64>>>,
    fibration: &FibrationData,
    z: &[f64],
    step: Option<f64>,
) -> Result<f64, AbreuError> {
    let dim = fibration.dim();
    assert_eq!(z.len(), dim);
    let diameter = fibration.polytope().diameter_f64();
    let h_step = step.unwrap_or(1e-5 * diameter);
    let margin = 2.5 * h_step;
    if !fibration.polytope().polytope().contains_f64(z, margin) {
        return Err(AbreuError::EvaluationOnBoundary);
    }
    let weight = fibration.weight();
    let ph = |point: &[f64]| -> Option<Vec<Vec<f64>>> {
        let m = h(point)?;
        let p = weight.eval_f64(point);
        Some(
            m.iter()
                .map(|row| row.iter().map(|x| x * p).collect())
                .collect(),
        )
    };
    let mut double_div = 0.0;
    for r in 0..dim {
        for s in 0..dim {
            let d = second_partial(&ph, z, r, s, h_step).ok_or(AbreuError::EvaluationOnBoundary)?;
            double_div += d;
        }
    }
    let p = weight.eval_f64(z);
    Ok(fibration.scal_sum_f64(z) - double_div / p)
}

/// Finite-difference extremal operator.
pub fn p_lambda_fd(
    h: &dyn Fn(&[f64]) -> Option<Vec<Vec<f64>>>,
    fibration: &FibrationData,
    z: &[f64],
    step: Option<f64>,
) -> Result<f64, AbreuError> {
    let affine = solve_extremal_affine(fibration)?;
    Ok(affine.eval_f64(z) + abreu_scalar_fd(h, fibration, z, step)?)
}

/// Second partial of `(r,s)`-entry of the matrix-valued `g`, Richardson
/// extrapolated from steps `h` and `h/2`.
fn second_partial(
    g: &dyn Fn(&[f64]) -> Option<Vec<Vec<f64>>>,
    z: &[f64],
    r: usize,
    s: usize,
    h: f64,
) -> Option<f64> {
    let entry = |point: &[f64]| -> Option<f64> { g(point).map(|m| m[r][s]) };
    let stencil = |h: f64| -> Option<f64> {
        if r == s {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[r] += h;
            zm[r] -= h;
            Some((entry(&zp)? - 2.0 * entry(z)? + entry(&zm)?) / (h * h))
        } else {
            let mut zpp = z.to_vec();
            let mut zpm = z.to_vec();
            let mut zmp = z.to_vec();
            let mut zmm = z.to_vec();
            zpp[r] += h;
            zpp[s] += h;
            zpm[r] += h;
            zpm[s] -= h;
            zmp[r] -= h;
            zmp[s] += h;
            zmm[r] -= h;
            zmm[s] -= h;
            Some((entry(&zpp)? - entry(&zpm)? - entry(&zmp)? + entry(&zmm)?) / (4.0 * h * h))
        }
    };
    let d_h = stencil(h)?;
    let d_h2 = stencil(h / 2.0)?;
    Some((4.0 * d_h2 - d_h) / 3.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityReport {
    /// True when every Hessian-symmetry relation vanished symbolically.
    pub exact_zero: bool,
    /// Max sampled violation when not exactly zero.
    pub residual: f64,
    pub pass: bool,
}

/// Checks the Hessian condition on `G = H⁻¹` over the simply connected
/// interior: `∂G_rs/∂z_t = ∂G_rt/∂z_s` for all triples. Decided exactly;
/// the residual of a failing field is sampled on an interior grid.
pub fn integrability_check(
    h: &HMatrix,
    polytope: &DelzantPolytope,
    tol: f64,
) -> Result<IntegrabilityReport, AbreuError> {
    assert_eq!(h.dim(), polytope.dim());
    let dim = h.dim();
    if dim == 1 {
        // One variable: every field is a Hessian inverse.
        return Ok(IntegrabilityReport {
            exact_zero: true,
            residual: 0.0,
            pass: true,
        });
    }
    let g = h.inverse()?;
    let mut relations: Vec<RationalFn> = Vec::new();
    for r in 0..dim {
        for s in 0..dim {
            for t in s + 1..dim {
                let rel = &g[r][s].partial(t) - &g[r][t].partial(s);
                if !rel.is_zero() {
                    relations.push(rel);
                }
            }
        }
    }
    if relations.is_empty() {
        return Ok(IntegrabilityReport {
            exact_zero: true,
            residual: 0.0,
            pass: true,
        });
    }
    let mut residual = 0.0f64;
    for z in polytope.interior_grid(6) {
        for rel in &relations {
            if let Some(v) = rel.eval(&z) {
                residual = residual.max(to_f64(&v.abs()));
            }
        }
    }
    Ok(IntegrabilityReport {
        exact_zero: false,
        residual,
        pass: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::make_fibration;
    use crate::polytope::shapes;
    use crate::ratio::{rat, rat_int};

    #[test]
    fn guillemin_h_closed_forms() {
        let interval = shapes::unit_interval();
        let h = guillemin_h(&interval, &[rat(1, 2)]).unwrap();
        assert_eq!(h[0][0], rat(1, 2));

        let simplex = shapes::standard_simplex(2);
        let h = guillemin_h(&simplex, &[rat(1, 3), rat(1, 3)]).unwrap();
        assert_eq!(h[0][0], rat(4, 9));
        assert_eq!(h[0][1], rat(-2, 9));
        assert_eq!(h[1][1], rat(4, 9));

        assert!(matches!(
            guillemin_h(&simplex, &[rat_int(0), rat(1, 2)]),
            Err(AbreuError::PointOnBoundary)
        ));
    }

    #[test]
    fn guillemin_matches_fubini_study_on_simplex() {
        let simplex = shapes::standard_simplex(2);
        let fs = HMatrix::fubini_study(2);
        for z in [
            vec![rat(1, 3), rat(1, 3)],
            vec![rat(1, 5), rat(2, 5)],
            vec![rat(1, 7), rat(1, 2)],
        ] {
            let h = guillemin_h(&simplex, &z).unwrap();
            let f = fs.eval_exact(&z).unwrap();
            assert_eq!(h, f);
        }
    }

    #[test]
    fn guillemin_symmetry_under_coordinate_swap() {
        let simplex = shapes::standard_simplex(2);
        let h = guillemin_h(&simplex, &[rat(1, 5), rat(3, 10)]).unwrap();
        let h_swapped = guillemin_h(&simplex, &[rat(3, 10), rat(1, 5)]).unwrap();
        assert_eq!(h[0][0], h_swapped[1][1]);
        assert_eq!(h[0][1], h_swapped[1][0]);
    }

    #[test]
    fn boundary_check_fubini_study_exact() {
        let simplex = shapes::standard_simplex(2);
        let fs = HMatrix::fubini_study(2);
        let report = boundary_check(&fs, &simplex, 1e-12);
        assert!(report.pass);
        for f in &report.facets {
            assert!(f.exact);
            assert_eq!(f.value_residual, 0.0);
            assert_eq!(f.derivative_residual, 0.0);
        }
    }

    #[test]
    fn boundary_check_identity_fails_everywhere() {
        let simplex = shapes::standard_simplex(2);
        let ident = HMatrix::from_polys(
            vec![
                vec![MultiPoly::one(2), MultiPoly::zero(2)],
                vec![MultiPoly::zero(2), MultiPoly::one(2)],
            ],
            None,
        )
        .unwrap();
        let report = boundary_check(&ident, &simplex, 1e-9);
        assert!(!report.pass);
        for f in &report.facets {
            assert!(f.value_residual > 0.5);
        }
    }

    #[test]
    fn boundary_check_interval() {
        let interval = shapes::unit_interval();
        // H = 2 z (1 - z)
        let z = MultiPoly::var(1, 0);
        let h = HMatrix::from_polys(
            vec![vec![(&z - &(&z * &z)).scale(&rat_int(2))]],
            None,
        )
        .unwrap();
        let report = boundary_check(&h, &interval, 1e-12);
        assert!(report.pass, "report: {report:?}");
    }

    #[test]
    fn abreu_scalar_constants() {
        let interval = make_fibration(shapes::unit_interval(), vec![]).unwrap();
        let z = MultiPoly::var(1, 0);
        let h1 = HMatrix::from_polys(vec![vec![(&z - &(&z * &z)).scale(&rat_int(2))]], None).unwrap();
        let scal = abreu_scalar(&h1, &interval);
        assert_eq!(scal.as_polynomial().unwrap(), MultiPoly::constant(1, rat_int(4)));

        let simplex = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let scal = abreu_scalar(&HMatrix::fubini_study(2), &simplex);
        assert_eq!(scal.as_polynomial().unwrap(), MultiPoly::constant(2, rat_int(12)));
    }

    #[test]
    fn p_lambda_vanishes_for_fubini_study() {
        let simplex = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let p = p_lambda(&HMatrix::fubini_study(2), &simplex).unwrap();
        assert!(p.is_zero());
        // Scaling H halves the curvature but not the affine part.
        let scaled = HMatrix::fubini_study(2).scale(&rat_int(2));
        let p = p_lambda(&scaled, &simplex).unwrap();
        assert!(!p.is_zero());
    }

    #[test]
    fn integrability_exact_for_hessian_inverses() {
        let simplex = shapes::standard_simplex(2);
        let report = integrability_check(&HMatrix::fubini_study(2), &simplex, 1e-12).unwrap();
        assert!(report.exact_zero);

        let interval = shapes::unit_interval();
        let z = MultiPoly::var(1, 0);
        let h = HMatrix::from_polys(vec![vec![(&z - &(&z * &z)).scale(&rat_int(2))]], None).unwrap();
        let report = integrability_check(&h, &interval, 1e-12).unwrap();
        assert!(report.exact_zero);
    }

    #[test]
    fn face_positivity_fubini_study() {
        let simplex = shapes::standard_simplex(2);
        let report = face_positivity(&HMatrix::fubini_study(2), &simplex, 20);
        assert!(report.positive, "{report:?}");
        assert!(report.min_margin > 0.0);
        let neg = HMatrix::fubini_study(2).scale(&rat_int(-1));
        let report = face_positivity(&neg, &simplex, 8);
        assert!(!report.positive);
    }

    #[test]
    fn guillemin_limit_toward_facet() {
        // Approaching {z0 = 0}: |H u| → 0 linearly, (dH)(u,u) → 2u.
        let simplex = shapes::standard_simplex(2);
        let pot = SymplecticPotential::guillemin(simplex.clone());
        let u = [1.0, 0.0];
        let mut prev_norm = f64::INFINITY;
        for k in 2..7 {
            let d = 10f64.powi(-k);
            let z = [d, 0.4];
            let h = pot.h_matrix(&z).unwrap();
            let norm = (h[0][0] * u[0] + h[0][1] * u[1]).abs()
                + (h[1][0] * u[0] + h[1][1] * u[1]).abs();
            assert!(norm < prev_norm);
            assert!(norm < 10.0 * d, "norm {norm} at distance {d}");
            prev_norm = norm;
            // (dH)(u,u) ≈ 2 u by finite differences along z0.
            let hp = pot.h_matrix(&[d + 1e-8, 0.4]).unwrap();
            let deriv0 = (hp[0][0] - h[0][0]) / 1e-8;
            if k >= 5 {
                assert!((deriv0 - 2.0).abs() < 0.05, "deriv {deriv0} at {d}");
            }
        }
    }

    #[test]
    fn fd_scalar_matches_exact_for_fubini_study() {
        let fib = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let fs = HMatrix::fubini_study(2);
        let h_fn = move |z: &[f64]| -> Option<Vec<Vec<f64>>> { Some(fs.eval_f64(z)) };
        let v = abreu_scalar_fd(&h_fn, &fib, &[0.3, 0.25], None).unwrap();
        assert!((v - 12.0).abs() < 1e-5, "value {v}");
    }

    #[test]
    fn fd_scalar_dimension_three() {
        // CP^3: Scal = 2 ℓ (ℓ + 2) = 30 for ℓ = 3.
        let fib = make_fibration(shapes::standard_simplex(3), vec![]).unwrap();
        let pot = SymplecticPotential::guillemin(shapes::standard_simplex(3));
        let h_fn = move |z: &[f64]| pot.h_matrix(z);
        let v = abreu_scalar_fd(&h_fn, &fib, &[0.2, 0.25, 0.3], None).unwrap();
        assert!((v - 30.0).abs() < 1e-3, "value {v}");
    }

    #[test]
    fn fd_requires_interior_point() {
        let fib = make_fibration(shapes::standard_simplex(2), vec![]).unwrap();
        let fs = HMatrix::fubini_study(2);
        let h_fn = move |z: &[f64]| -> Option<Vec<Vec<f64>>> { Some(fs.eval_f64(z)) };
        assert!(matches!(
            abreu_scalar_fd(&h_fn, &fib, &[0.0, 0.2], None),
            Err(AbreuError::EvaluationOnBoundary)
        ));
    }
}
