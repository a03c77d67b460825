//! Adaptive numerical integration over polytopes.
//!
//! Strategy: triangulate, apply a pair of interior-node Grundmann–Möller
//! rules (degrees 5 and 7) per simplex, and refine the worst cell by
//! longest-edge bisection until the summed error estimate meets the
//! tolerance. Integrands with integrable boundary singularities (the
//! `log det Hess U` family) defeat plain refinement in dimension ≥ 2, so a
//! second phase integrates over a sequence of boundary-shrunken copies of
//! the polytope and removes the `ε log ε`-type truncation terms by
//! Richardson-style extrapolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ratio::to_f64;

use super::Polytope;

/// Outcome of an adaptive integration. `converged == false` means the
/// budget ran out; `value` and `error` still carry the best estimate.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

const MAX_CELLS: usize = 60_000;

/// Grundmann–Möller rule of index `s` (degree `2s+1`) on the standard
/// n-simplex, as barycentric points with weights summing to `1/n!`.
fn gm_rule(n: usize, s: usize) -> Vec<(Vec<f64>, f64)> {
    let d = (2 * s + 1) as i32;
    let mut rule = Vec::new();
    for i in 0..=s {
        let denom = (d + n as i32 - 2 * i as i32) as f64;
        let mut coeff = if i % 2 == 0 { 1.0 } else { -1.0 };
        coeff *= 0.25f64.powi(s as i32);
        // (d + n - 2i)^d / (i! (d + n - i)!)
        coeff *= denom.powi(d);
        let mut fact = 1.0;
        for k in 2..=i {
            fact *= k as f64;
        }
        for k in 2..=(d as usize + n - i) {
            fact *= k as f64;
        }
        coeff /= fact;
        for beta in weak_compositions(s - i, n + 1) {
            let lambda: Vec<f64> = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            rule.push((lambda, coeff));
        }
    }
    rule
}

/// All weak compositions of `total` into `parts` nonnegative integers.
fn weak_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(total: usize, idx: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if idx == cur.len() - 1 {
            cur[idx] = total;
            out.push(cur.clone());
            return;
        }
        for v in 0..=total {
            cur[idx] = v;
            rec(total - v, idx + 1, cur, out);
        }
    }
    if parts == 0 {
        return out;
    }
    rec(total, 0, &mut cur, &mut out);
    out
}

struct Cell {
    verts: Vec<Vec<f64>>,
    value: f64,
    error: f64,
    id: u64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| self.id.cmp(&other.id))
    }
}

struct Rules {
    low: Vec<(Vec<f64>, f64)>,
    high: Vec<(Vec<f64>, f64)>,
    factorial: f64,
}

impl Rules {
    fn for_dim(n: usize) -> Rules {
        let mut factorial = 1.0;
        for k in 2..=n {
            factorial *= k as f64;
        }
        Rules {
            low: gm_rule(n, 2),
            high: gm_rule(n, 3),
            factorial,
        }
    }

    /// Evaluates both rules; returns (value, error estimate, evals).
    fn apply(&self, verts: &[Vec<f64>], volume: f64, f: &mut dyn FnMut(&[f64]) -> f64) -> (f64, f64, usize) {
        let scale = volume * self.factorial;
        let mut evals = 0;
        let mut apply_one = |rule: &[(Vec<f64>, f64)], evals: &mut usize| -> f64 {
            let mut acc = 0.0;
            let dim = verts[0].len();
            let mut point = vec![0.0; dim];
            for (lambda, w) in rule {
                for p in point.iter_mut() {
                    *p = 0.0;
                }
                for (l, v) in lambda.iter().zip(verts) {
                    for (p, vi) in point.iter_mut().zip(v) {
                        *p += l * vi;
                    }
                }
                acc += w * f(&point);
                *evals += 1;
            }
            acc * scale
        };
        let hi = apply_one(&self.high, &mut evals);
        let lo = apply_one(&self.low, &mut evals);
        let err = (hi - lo).abs() + 1e-16 * hi.abs();
        (hi, err, evals)
    }
}

fn simplex_volume(verts: &[Vec<f64>]) -> f64 {
    let n = verts.len() - 1;
    let mut m: Vec<Vec<f64>> = (1..=n)
        .map(|k| verts[k].iter().zip(&verts[0]).map(|(a, b)| a - b).collect())
        .collect();
    // Gaussian elimination determinant.
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()));
        let Some(p) = pivot else { return 0.0 };
        if m[p][col].abs() < 1e-300 {
            return 0.0;
        }
        m.swap(col, p);
        if p != col {
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut factorial = 1.0;
    for k in 2..=n {
        factorial *= k as f64;
    }
    det.abs() / factorial
}

fn triangulation_f64(p: &Polytope) -> Vec<Vec<Vec<f64>>> {
    p.triangulate()
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|v| v.iter().map(to_f64).collect())
                .collect()
        })
        .collect()
}

fn adaptive_over_simplices(
    simplices: Vec<Vec<Vec<f64>>>,
    f: &mut dyn FnMut(&[f64]) -> f64,
    tol: f64,
    budget: usize,
) -> QuadratureResult {
    let dim = simplices[0].len() - 1;
    let rules = Rules::for_dim(dim);
    let mut heap: BinaryHeap<Cell> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    let mut evaluations = 0;
    let mut total_value = 0.0;
    let mut total_error = 0.0;
    let push = |verts: Vec<Vec<f64>>,
                    heap: &mut BinaryHeap<Cell>,
                    evaluations: &mut usize,
                    total_value: &mut f64,
                    total_error: &mut f64,
                    next_id: &mut u64,
                    f: &mut dyn FnMut(&[f64]) -> f64| {
        let volume = simplex_volume(&verts);
        if volume <= 0.0 {
            return;
        }
        let (value, mut error, ev) = rules.apply(&verts, volume, f);
        if !value.is_finite() {
            error = f64::INFINITY;
        }
        *evaluations += ev;
        *total_value += if value.is_finite() { value } else { 0.0 };
        *total_error += error;
        heap.push(Cell {
            verts,
            value: if value.is_finite() { value } else { 0.0 },
            error,
            id: {
                *next_id += 1;
                *next_id
            },
        });
    };
    for s in simplices {
        push(
            s,
            &mut heap,
            &mut evaluations,
            &mut total_value,
            &mut total_error,
            &mut next_id,
            f,
        );
    }
    while total_error > tol && evaluations < budget && heap.len() < MAX_CELLS {
        let Some(worst) = heap.pop() else { break };
        total_value -= worst.value;
        total_error -= worst.error;
        if worst.error == 0.0 {
            // Nothing left to gain; put it back and stop.
            total_value += worst.value;
            total_error += worst.error;
            heap.push(worst);
            break;
        }
        // Longest-edge bisection.
        let mut best = (0usize, 1usize);
        let mut best_len = -1.0;
        for i in 0..worst.verts.len() {
            for j in i + 1..worst.verts.len() {
                let len: f64 = worst.verts[i]
                    .iter()
                    .zip(&worst.verts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if len > best_len {
                    best_len = len;
                    best = (i, j);
                }
            }
        }
        if best_len <= 1e-26 {
            // Degenerate cell: cannot refine further.
            total_value += worst.value;
            total_error += worst.error;
            heap.push(worst);
            break;
        }
        let mid: Vec<f64> = worst.verts[best.0]
            .iter()
            .zip(&worst.verts[best.1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut child_a = worst.verts.clone();
        child_a[best.0] = mid.clone();
        let mut child_b = worst.verts;
        child_b[best.1] = mid;
        push(
            child_a,
            &mut heap,
            &mut evaluations,
            &mut total_value,
            &mut total_error,
            &mut next_id,
            f,
        );
        push(
            child_b,
            &mut heap,
            &mut evaluations,
            &mut total_value,
            &mut total_error,
            &mut next_id,
            f,
        );
    }
    QuadratureResult {
        value: total_value,
        error: total_error,
        converged: total_error <= tol,
        evaluations,
    }
}

/// Adaptive quadrature on the full polytope, no singularity handling.
/// All rule nodes are strictly interior.
pub fn quadrature_plain(
    p: &Polytope,
    f: &mut dyn FnMut(&[f64]) -> f64,
    tol: f64,
    budget: usize,
) -> QuadratureResult {
    adaptive_over_simplices(triangulation_f64(p), f, tol, budget)
}

/// Integrates over boundary-shrunken copies `x0 + (1-ε)(Δ - x0)` and
/// extrapolates `ε → 0` against the basis `{1, ε ln ε, ε, ε² ln ε, ε², ε³}`,
/// which covers integrable logarithmic boundary singularities.
fn quadrature_shrinking(
    p: &Polytope,
    f: &mut dyn FnMut(&[f64]) -> f64,
    tol: f64,
) -> QuadratureResult {
    let x0: Vec<f64> = p.interior_point().iter().map(to_f64).collect();
    let base = triangulation_f64(p);
    let inner_tol = (tol / 64.0).max(1e-13);
    let mut eps_values: Vec<f64> = Vec::new();
    let mut integrals: Vec<f64> = Vec::new();
    let mut evaluations = 0;
    let mut prev_extrap: Option<f64> = None;
    let mut best = QuadratureResult {
        value: 0.0,
        error: f64::INFINITY,
        converged: false,
        evaluations: 0,
    };
    for k in 0..22 {
        let eps = 0.25 * 0.5f64.powi(k);
        let shrunk: Vec<Vec<Vec<f64>>> = base
            .iter()
            .map(|s| {
                s.iter()
                    .map(|v| {
                        v.iter()
                            .zip(&x0)
                            .map(|(vi, xi)| xi + (1.0 - eps) * (vi - xi))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let inner = adaptive_over_simplices(shrunk, f, inner_tol, 400_000);
        evaluations += inner.evaluations;
        eps_values.push(eps);
        integrals.push(inner.value);
        if integrals.len() >= 4 {
            let take = integrals.len().min(6);
            let eps_tail = &eps_values[integrals.len() - take..];
            let int_tail = &integrals[integrals.len() - take..];
            if let Some(extrap) = extrapolate_log(eps_tail, int_tail) {
                let step_err = prev_extrap.map_or(f64::INFINITY, |prev| (extrap - prev).abs());
                let error = step_err + 4.0 * inner_tol;
                if error < best.error {
                    best = QuadratureResult {
                        value: extrap,
                        error,
                        converged: error <= tol,
                        evaluations,
                    };
                }
                if error <= tol {
                    best.evaluations = evaluations;
                    return best;
                }
                prev_extrap = Some(extrap);
            }
        }
    }
    best.evaluations = evaluations;
    best
}

/// Fits `I(ε) = I* + a ε ln ε + b ε + c ε² ln ε + d ε² + e ε³` on the given
/// samples (least cases drop trailing terms) and returns `I*`.
fn extrapolate_log(eps: &[f64], vals: &[f64]) -> Option<f64> {
    let m = eps.len();
    let nterms = m.min(6);
    let basis = |e: f64, j: usize| -> f64 {
        match j {
            0 => 1.0,
            1 => e * e.ln(),
            2 => e,
            3 => e * e * e.ln(),
            4 => e * e,
            _ => e * e * e,
        }
    };
    // Normal equations of the least-squares fit.
    let mut ata = vec![vec![0.0; nterms]; nterms];
    let mut atb = vec![0.0; nterms];
    for (&e, &v) in eps.iter().zip(vals) {
        let row: Vec<f64> = (0..nterms).map(|j| basis(e, j)).collect();
        for i in 0..nterms {
            for j in 0..nterms {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    solve_f64(&mut ata, &mut atb).map(|x| x[0])
}

fn solve_f64(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Adaptive estimate of `∫_Δ f dv` with absolute error ≤ `tol` when
/// possible. The integrand needs to be evaluable on the interior only;
/// integrable logarithmic boundary singularities are handled by the
/// boundary-shrinking phase.
pub fn quadrature(p: &Polytope, f: &mut dyn FnMut(&[f64]) -> f64, tol: f64) -> QuadratureResult {
    assert!(tol > 0.0, "tolerance must be positive");
    let budget = if p.dim() == 1 { 400_000 } else { 1_500_000 };
    let direct = quadrature_plain(p, f, tol, budget);
    if direct.converged {
        return direct;
    }
    let shrunk = quadrature_shrinking(p, f, tol);
    let mut result = if shrunk.error < direct.error {
        shrunk
    } else {
        direct
    };
    result.evaluations += if shrunk.error < direct.error {
        direct.evaluations
    } else {
        shrunk.evaluations
    };
    result
}
