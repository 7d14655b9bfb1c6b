//! Phase-one simplex with exact rational pivots and Bland's rule.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Minimises the total residual of `A x = b` over `x >= 0`.
///
/// Rows flagged `soft` get a free two-sided residual (`e+ - e-`, both costed);
/// the other rows get a one-sided artificial variable. The system is feasible
/// exactly when the returned minimum is zero.
pub fn min_residual(a: &[Vec<Rational>], b: &[Rational], soft: &[bool]) -> Rational {
    let m = a.len();
    assert_eq!(b.len(), m);
    assert_eq!(soft.len(), m);
    let nx = a.first().map_or(0, |r| r.len());
    let n_aux: usize = soft.iter().map(|s| if *s { 2 } else { 1 }).sum();
    let ncol = nx + n_aux;

    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut cost = vec![Rational::zero(); ncol];
    let mut next = nx;
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rational> = a[i].iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        row.resize(ncol, Rational::zero());
        row[next] = Rational::one();
        cost[next] = Rational::one();
        basis.push(next);
        next += 1;
        if soft[i] {
            row[next] = -Rational::one();
            cost[next] = Rational::one();
            next += 1;
        }
        tab.push(row);
        rhs.push(if flip { -b[i].clone() } else { b[i].clone() });
    }

    // Reduced costs r_j = c_j - sum_i c_{B_i} T_ij; all basic costs start at 1.
    let mut red: Vec<Rational> = (0..ncol)
        .map(|j| tab.iter().fold(cost[j].clone(), |acc, row| acc - &row[j]))
        .collect();
    let mut obj: Rational = rhs.iter().cloned().sum();

    loop {
        let Some(enter) = (0..ncol).find(|&j| red[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if tab[i][enter].is_positive() {
                let q = &rhs[i] / &tab[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lq)) => q < *lq || (q == *lq && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, q));
                }
            }
        }
        // The objective is bounded below by zero, so a leaving row always exists.
        let (r, _) = leave.expect("phase-one objective is bounded");
        let p = tab[r][enter].clone();
        for v in tab[r].iter_mut() {
            *v /= &p;
        }
        rhs[r] /= &p;
        let pivot_row = tab[r].clone();
        let pivot_rhs = rhs[r].clone();
        for i in 0..m {
            if i == r || tab[i][enter].is_zero() {
                continue;
            }
            let f = tab[i][enter].clone();
            for j in 0..ncol {
                if !pivot_row[j].is_zero() {
                    let d = &f * &pivot_row[j];
                    tab[i][j] -= d;
                }
            }
            rhs[i] -= &f * &pivot_rhs;
        }
        let f = red[enter].clone();
        for j in 0..ncol {
            if !pivot_row[j].is_zero() {
                red[j] -= &f * &pivot_row[j];
            }
        }
        obj += &f * &pivot_rhs;
        basis[r] = enter;
    }
    obj
}
