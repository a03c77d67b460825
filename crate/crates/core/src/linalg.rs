//! Small exact linear algebra and lattice utilities.
//!
//! Everything here operates on the tiny matrices this crate produces
//! (dimension = polytope dimension plus one at most), so the simple
//! algorithms are the right ones: fraction-free Gaussian elimination over
//! the rationals, integer column reduction for kernel lattices, and a
//! Jacobi sweep for the float eigenvalue certificates.

use num_integer::Integer;
use crate::ratio::Rational;

/// Solves `A x = b` exactly. Returns `None` when `A` is singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for c in col..=n {
            m[col][c] = &m[col][c] / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let delta = &f * &m[col][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Exact determinant by elimination.
pub fn det(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let mut acc = Rational::from_integer(1.into());
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            acc = -acc;
        }
        let p = m[col][col].clone();
        acc *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &p;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
    }
    acc
}

/// Exact inverse of a square rational matrix.
pub fn invert(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::from_integer(1.into());
        cols.push(solve(a, &e)?);
    }
    // `cols[j]` is the j-th column of the inverse.
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Rank of a rational matrix (rows may exceed columns).
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for c in 0..ncols {
                    let delta = &f * &m[rank][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Integer determinant for the Delzant vertex test (small matrices).
pub fn det_i64(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    match n {
        0 => 1,
        1 => a[0][0] as i128,
        2 => a[0][0] as i128 * a[1][1] as i128 - a[0][1] as i128 * a[1][0] as i128,
        _ => {
            let mut acc: i128 = 0;
            for j in 0..n {
                let minor: Vec<Vec<i64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                acc += sign * a[0][j] as i128 * det_i64(&minor);
            }
            acc
        }
    }
}

/// Divides an integer vector by the gcd of its entries; returns the gcd.
/// The zero vector is returned unchanged with gcd 0.
pub fn primitivize(v: &mut [i64]) -> i64 {
    let mut g: i64 = 0;
    for &x in v.iter() {
        g = g.gcd(&x);
    }
    if g > 1 {
        for x in v.iter_mut() {
            *x /= g;
        }
    }
    g
}

/// Integer basis of the kernel lattice `{v : M v = 0}` of an integer matrix
/// (rows of `m`), via unimodular column reduction. For each processed row a
/// pivot column is fixed; the surviving columns span the kernel. Also
/// returns, for the single-row case, a column with pairing one against the
/// row (used to anchor facet frames); `None` when the rows do not reduce to
/// unit pivots (cannot happen for saturated lattices such as Delzant face
/// normals).
pub fn kernel_lattice(m: &[Vec<i64>]) -> Option<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let nrows = m.len();
    if nrows == 0 {
        return None;
    }
    let ncols = m[0].len();
    // cols[j] is a column of the evolving unimodular matrix U; reduced[i][j]
    // tracks m · U.
    let mut cols: Vec<Vec<i64>> = (0..ncols)
        .map(|j| (0..ncols).map(|i| i64::from(i == j)).collect())
        .collect();
    let mut red: Vec<Vec<i64>> = m.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    for row in 0..nrows {
        // Clear this row on the non-pivot columns by gcd steps.
        loop {
            let mut free: Vec<usize> = (0..ncols)
                .filter(|j| !pivots.contains(j) && red[row][*j] != 0)
                .collect();
            if free.len() <= 1 {
                break;
            }
            // Combine the two smallest-magnitude entries.
            free.sort_by_key(|&j| red[row][j].abs());
            let (ja, jb) = (free[0], free[1]);
            let q = red[row][jb].div_euclid(red[row][ja]);
            for r in 0..nrows {
                red[r][jb] -= q * red[r][ja];
            }
            for k in 0..ncols {
                let delta = q * cols[ja][k];
                cols[jb][k] -= delta;
            }
        }
        let pivot = (0..ncols).find(|j| !pivots.contains(j) && red[row][*j] != 0);
        if let Some(j) = pivot {
            if red[row][j].abs() != 1 {
                return None;
            }
            if red[row][j] == -1 {
                for r in 0..nrows {
                    red[r][j] = -red[r][j];
                }
                for k in 0..ncols {
                    cols[j][k] = -cols[j][k];
                }
            }
            // Clear the remaining kernel-candidate columns against it.
            for jj in 0..ncols {
                if jj != j && !pivots.contains(&jj) && red[row][jj] != 0 {
                    let q = red[row][jj];
                    for r in 0..nrows {
                        red[r][jj] -= q * red[r][j];
                    }
                    for k in 0..ncols {
                        let delta = q * cols[j][k];
                        cols[jj][k] -= delta;
                    }
                }
            }
            pivots.push(j);
        }
    }
    let kernel: Vec<Vec<i64>> = (0..ncols)
        .filter(|j| !pivots.contains(j))
        .map(|j| cols[j].clone())
        .collect();
    let pivot_cols: Vec<Vec<i64>> = pivots.iter().map(|&j| cols[j].clone()).collect();
    Some((kernel, pivot_cols))
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi sweeps,
/// ascending order.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j].abs();
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{rat, rat_int};

    #[test]
    fn exact_solve_and_det() {
        let a = vec![
            vec![rat_int(2), rat_int(1)],
            vec![rat_int(1), rat_int(3)],
        ];
        let b = vec![rat_int(5), rat_int(10)];
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(3)]);
        assert_eq!(det(&a), rat_int(5));
        let inv = invert(&a).unwrap();
        assert_eq!(inv[0][0], rat(3, 5));
        assert_eq!(inv[0][1], rat(-1, 5));
    }

    #[test]
    fn kernel_of_primitive_row() {
        let (kernel, pivots) = kernel_lattice(&[vec![2, 3]]).unwrap();
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        assert_eq!(2 * k[0] + 3 * k[1], 0);
        assert!(k[0] != 0 || k[1] != 0);
        let w0 = &pivots[0];
        assert_eq!(2 * w0[0] + 3 * w0[1], 1);
    }

    #[test]
    fn kernel_of_two_rows_in_three_vars() {
        let rows = vec![vec![1, 0, 0], vec![0, 1, 1]];
        let (kernel, _) = kernel_lattice(&rows).unwrap();
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        assert_eq!(k[0], 0);
        assert_eq!(k[1] + k[2], 0);
        assert_eq!(k[1].abs(), 1);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let e = sym_eigenvalues(&a);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn integer_determinants() {
        assert_eq!(det_i64(&[vec![1, 0], vec![0, 1]]), 1);
        assert_eq!(det_i64(&[vec![1, 0], vec![-1, -2]]), -2);
        assert_eq!(
            det_i64(&[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]]),
            1
        );
    }
}
