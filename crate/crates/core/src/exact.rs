//! Exact rational linear algebra: row reduction, rank, null spaces and a
//! Phase-I simplex for positive conservation laws.

use num::integer::Integer;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn to_rational(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<i64>]) -> usize {
    rref(&mut to_rational(rows)).len()
}

/// Basis of `{x : M x = 0}` for the matrix with the given rows and `cols`
/// columns, each vector scaled to a primitive integer vector whose first
/// non-zero entry is positive.
pub fn nullspace(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut m = to_rational(rows);
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); cols];
            x[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -m[r][f].clone();
            }
            primitive(&x)
        })
        .collect()
}

/// Clears denominators and divides by the gcd; the first non-zero entry is
/// made positive.
pub fn primitive(x: &[Q]) -> Vec<BigInt> {
    let lcm = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = x.iter().map(|v| (v * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return ints;
    }
    let sign = ints.iter().find(|v| !v.is_zero()).map_or(BigInt::one(), |v| v.signum());
    ints.into_iter().map(|v| v / &g * &sign).collect()
}

pub fn to_i64(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(ToPrimitive::to_i64).collect()
}

/// Finds `x` with `A x = b`, `x >= 0`, or `None` if infeasible.
///
/// Phase-I simplex on exact rationals with Bland's rule, so it terminates
/// on degenerate problems.
pub fn feasible_point(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m == 0 {
        return Some(vec![Q::zero(); n]);
    }
    // Tableau columns: n originals, m artificials, rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = vec![Q::zero(); width];
        for j in 0..n {
            row[j] = if flip { -a[i][j].clone() } else { a[i][j].clone() };
        }
        row[n + i] = Q::one();
        row[width - 1] = if flip { -b[i].clone() } else { b[i].clone() };
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Objective row holds reduced costs of minimizing the artificial sum.
    let mut obj = vec![Q::zero(); width];
    for row in &t {
        for j in 0..width {
            if j < n || j == width - 1 {
                obj[j] -= &row[j];
            }
        }
    }
    loop {
        let Some(enter) = (0..n + m).find(|&j| obj[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (pr, _) = leave?;
        pivot(&mut t, &mut obj, pr, enter);
        basis[pr] = enter;
    }
    if !obj[width - 1].is_zero() {
        return None;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<Q>], obj: &mut [Q], pr: usize, pc: usize) {
    let inv = t[pr][pc].recip();
    for v in t[pr].iter_mut() {
        *v = &*v * &inv;
    }
    let prow = t[pr].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != pr && !row[pc].is_zero() {
            let f = row[pc].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= &f * p;
            }
        }
    }
    if !obj[pc].is_zero() {
        let f = obj[pc].clone();
        for (v, p) in obj.iter_mut().zip(&prow) {
            *v -= &f * p;
        }
    }
}

/// A strictly positive integer vector `T` with `T . xi = 0` for every row
/// `xi`, if one exists.
pub fn positive_annihilator(rows: &[Vec<i64>], cols: usize) -> Option<Vec<BigInt>> {
    // Substitute T = 1 + u with u >= 0: M u = -M 1.
    let a = to_rational(rows);
    let b: Vec<Q> = rows.iter().map(|r| -q(r.iter().sum())).collect();
    let u = feasible_point(&a, &b)?;
    let t: Vec<Q> = u.into_iter().map(|v| v + Q::one()).collect();
    debug_assert_eq!(t.len(), cols);
    Some(primitive(&t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn rank_and_nullspace_of_simple_network() {
        let rows = vec![vec![-1, 1], vec![1, -1]];
        assert_eq!(rank(&rows), 1);
        assert_eq!(nullspace(&rows, 2), vec![ints(&[1, 1])]);
    }

    #[test]
    fn nullspace_vectors_annihilate_rows() {
        let rows = vec![vec![1, -2, 0, 3], vec![0, 1, -1, 0], vec![2, 0, -4, 6]];
        for v in nullspace(&rows, 4) {
            for r in &rows {
                let dot: BigInt = r.iter().zip(&v).map(|(a, b)| BigInt::from(*a) * b).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn positive_law_exists_only_when_conservative() {
        assert_eq!(positive_annihilator(&[vec![-1, 1], vec![1, -1]], 2), Some(ints(&[1, 1])));
        assert_eq!(positive_annihilator(&[vec![1]], 1), None);
        // A -> B, B -> A + C: C grows, no positive law.
        assert_eq!(positive_annihilator(&[vec![-1, 1, 0], vec![1, -1, 1]], 3), None);
    }

    #[test]
    fn infeasible_system_is_detected() {
        let a = vec![vec![q(1), q(1)]];
        assert!(feasible_point(&a, &[q(-1)]).is_none());
        let x = feasible_point(&a, &[q(3)]).unwrap();
        assert_eq!(&x[0] + &x[1], q(3));
    }
}
