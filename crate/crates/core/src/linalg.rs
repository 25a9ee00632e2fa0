//! Exact rational linear algebra: rank, nullspace, linear solves, and a
//! Fourier-Motzkin feasibility search for strictly positive vectors.
//!
//! Sizes here are tiny (at most a few dozen rows), so plain fraction
//! arithmetic is fine.

use num_traits::{One, Signed, Zero};

use crate::Rat;

/// Reduced row echelon form in place; returns pivot column per pivot row.
pub fn rref(m: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].clone().recip();
        for j in c..cols {
            m[r][j] = &m[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let s = &m[r][j] * &f;
                    m[i][j] = &m[i][j] - &s;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank(m: &[Vec<Rat>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

/// Basis of the right nullspace `{x : Mx = 0}`.
pub fn nullspace(m: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut work = m.to_vec();
    let pivots = rref(&mut work);
    let mut basis = Vec::new();
    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -work[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Any particular solution of `Mx = b` (free variables set to zero), or
/// `None` when inconsistent.
pub fn solve(m: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut work: Vec<Vec<Rat>> = m
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut work);
    for i in 0..rows {
        let lhs_zero = work[i][..cols].iter().all(|x| x.is_zero());
        if lhs_zero && !work[i][cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        if pc < cols {
            x[pc] = work[row][cols].clone();
        } else {
            return None; // pivot in the RHS column
        }
    }
    Some(x)
}

/// One linear inequality `coeffs . x >= bound`.
#[derive(Clone, Debug)]
struct Constraint {
    coeffs: Vec<Rat>,
    bound: Rat,
}

/// Find any `x` with `coeffs_i . x >= bound_i` for all i, by Fourier-Motzkin
/// elimination with deterministic back-substitution (tight lower bound when
/// one exists). Returns `None` when infeasible.
pub fn fourier_motzkin(system: &[(Vec<Rat>, Rat)], nvars: usize) -> Option<Vec<Rat>> {
    let mut stages: Vec<Vec<Constraint>> = Vec::with_capacity(nvars);
    let mut current: Vec<Constraint> = system
        .iter()
        .map(|(c, b)| Constraint { coeffs: c.clone(), bound: b.clone() })
        .collect();

    for v in (0..nvars).rev() {
        stages.push(current.clone());
        let mut next: Vec<Constraint> = Vec::new();
        let (mut lowers, mut uppers) = (Vec::new(), Vec::new());
        for c in &current {
            let a = &c.coeffs[v];
            if a.is_zero() {
                next.push(c.clone());
            } else if a.is_positive() {
                lowers.push(c.clone());
            } else {
                uppers.push(c.clone());
            }
        }
        for lo in &lowers {
            for up in &uppers {
                // a_lo > 0, a_up < 0: scale and add so the v-terms cancel.
                let s_lo = -up.coeffs[v].clone();
                let s_up = lo.coeffs[v].clone();
                let mut coeffs = vec![Rat::zero(); v];
                for (j, slot) in coeffs.iter_mut().enumerate() {
                    *slot = &lo.coeffs[j] * &s_lo + &up.coeffs[j] * &s_up;
                }
                let bound = &lo.bound * &s_lo + &up.bound * &s_up;
                next.push(Constraint { coeffs, bound });
            }
        }
        for c in &mut next {
            c.coeffs.truncate(v);
        }
        current = next;
    }

    if current.iter().any(|c| c.bound.is_positive()) {
        return None; // a constant constraint 0 >= c with c > 0
    }

    // stages[k] holds the system over x_0..x_{nvars-1-k}; substitute forward.
    let mut x = vec![Rat::zero(); nvars];
    for v in 0..nvars {
        let stage = &stages[nvars - 1 - v];
        let mut lower: Option<Rat> = None;
        let mut upper: Option<Rat> = None;
        for c in stage {
            let a = &c.coeffs[v];
            if a.is_zero() {
                continue;
            }
            let mut rest = c.bound.clone();
            for j in 0..v {
                rest -= &c.coeffs[j] * &x[j];
            }
            let ratio = &rest / a;
            if a.is_positive() {
                lower = Some(match lower {
                    Some(l) if l >= ratio => l,
                    _ => ratio,
                });
            } else {
                upper = Some(match upper {
                    Some(u) if u <= ratio => u,
                    _ => ratio,
                });
            }
        }
        x[v] = match (lower, upper) {
            (Some(l), _) => l,
            (None, Some(u)) => u,
            (None, None) => Rat::zero(),
        };
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Int;

    fn r(n: i64) -> Rat {
        Rat::from_integer(Int::from(n))
    }

    fn mat(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
        rows.iter().map(|row| row.iter().map(|&x| r(x)).collect()).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let m = mat(&[&[-1, 1], &[2, -2]]);
        assert_eq!(rank(&m), 1);
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 1);
        // (1, 1) direction
        assert_eq!(ns[0][0], ns[0][1]);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = mat(&[&[1, 1], &[1, -1]]);
        let x = solve(&m, &[r(3), r(1)]).unwrap();
        assert_eq!(x, vec![r(2), r(1)]);
        let bad = mat(&[&[1, 1], &[2, 2]]);
        assert!(solve(&bad, &[r(1), r(3)]).is_none());
    }

    #[test]
    fn fourier_motzkin_feasible_box() {
        // x0 >= 1, -x0 >= -3 (x0 <= 3), x0 + x1 >= 4
        let sys = vec![
            (vec![r(1), r(0)], r(1)),
            (vec![r(-1), r(0)], r(-3)),
            (vec![r(1), r(1)], r(4)),
        ];
        let x = fourier_motzkin(&sys, 2).unwrap();
        assert!(x[0] >= r(1) && x[0] <= r(3));
        assert!(&x[0] + &x[1] >= r(4));
    }

    #[test]
    fn fourier_motzkin_infeasible() {
        // x >= 2 and x <= 1
        let sys = vec![(vec![r(1)], r(2)), (vec![r(-1)], r(-1))];
        assert!(fourier_motzkin(&sys, 1).is_none());
    }
}
