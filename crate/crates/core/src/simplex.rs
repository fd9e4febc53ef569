//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `max c.y` subject to `A y <= b`, `y >= 0`. The problems fed in here
//! are tiny (a few coordinates, one row per ancestor cut plus the box), so a
//! full tableau is the simplest thing that is also robust.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SimplexOutcome<T> {
    Optimal(Vec<T>),
    Infeasible,
}

const MAX_PIVOTS: usize = 10_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl<T: Real> Tableau<T> {
    #[inline]
    fn rhs(&self, r: usize) -> T {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v = *v / p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            let f = row[col];
            if i == r || f.is_zero() {
                continue;
            }
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            row[col] = T::zero();
        }
        let f = self.obj[col];
        if !f.is_zero() {
            for (v, &pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            self.obj[col] = T::zero();
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Bland's rule iterations over the allowed columns. `Ok(false)` means the
    /// objective is unbounded.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        let tol = T::pivot_tol();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::LpStall {
                    iterations: self.pivots,
                    rows: self.rows.len(),
                    cols: self.width,
                });
            }
            let Some(col) = (0..allowed).find(|&j| self.obj[j] < -tol) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a <= tol {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best - tol || ((ratio - best).abs() <= tol && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, col);
        }
    }
}

/// Maximizes `c.y` over `{y >= 0 : A y <= b}`.
pub(crate) fn maximize<T: Real>(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<SimplexOutcome<T>> {
    let m = a.len();
    let n = c.len();
    let negative: Vec<bool> = b.iter().map(|&v| v < T::zero()).collect();
    let k = negative.iter().filter(|&&neg| neg).count();
    let width = n + m + k;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![T::zero(); width + 1];
        let sign = if negative[i] { -T::one() } else { T::one() };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[width] = sign * b[i];
        if negative[i] {
            row[art] = T::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        obj: vec![T::zero(); width + 1],
        basis,
        width,
        pivots: 0,
    };

    if k > 0 {
        // Phase I: maximize -(sum of artificials).
        for j in n + m..width {
            tab.obj[j] = T::one();
        }
        for r in 0..m {
            if tab.basis[r] >= n + m {
                for j in 0..=width {
                    tab.obj[j] = tab.obj[j] - tab.rows[r][j];
                }
            }
        }
        if !tab.run(width)? {
            unreachable!("phase one objective is bounded above by zero");
        }
        if tab.obj[width] < -T::feasibility_tol() {
            return Ok(SimplexOutcome::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible; rows
        // where that fails are redundant and their artificial stays at zero.
        for r in 0..m {
            if tab.basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| tab.rows[r][j].abs() > T::pivot_tol()) {
                    tab.pivot(r, col);
                }
            }
        }
    }

    // Phase II.
    tab.obj = vec![T::zero(); width + 1];
    for (o, &cj) in tab.obj.iter_mut().zip(&c[..n]) {
        *o = -cj;
    }
    for r in 0..m {
        let col = tab.basis[r];
        let f = tab.obj[col];
        if !f.is_zero() {
            for j in 0..=width {
                tab.obj[j] = tab.obj[j] - f * tab.rows[r][j];
            }
        }
    }
    if !tab.run(n + m)? {
        return Err(Error::Input("linear program is unbounded".into()));
    }
    let mut y = vec![T::zero(); n];
    for (r, &col) in tab.basis.iter().enumerate() {
        if col < n {
            y[col] = tab.rhs(r).max(T::zero());
        }
    }
    Ok(SimplexOutcome::Optimal(y))
}
