//! Dense-tableau phase-one simplex for the relaxation.
//!
//! Slow (the tableau has `(m + n) x (nm + m + 2n)` entries) but simple enough
//! to serve as a cross-check of the crossover route on small instances.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::num::Rational;

struct Tableau {
    rows: Vec<Vec<Rational>>,
    objective: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.objective.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            *v *= &inv;
        }
        let pivot = self.rows[row].clone();
        let eliminate = |target: &mut Vec<Rational>| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for (t, p) in target.iter_mut().zip(&pivot) {
                if !p.is_zero() {
                    *t -= &factor * p;
                }
            }
        };
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r != row {
                eliminate(other);
            }
        }
        eliminate(&mut self.objective);
        self.basis[row] = col;
    }
}

/// A basic feasible solution of the relaxation, found by minimising the sum of
/// artificial variables with Bland's rule.
pub fn feasible_vertex(instance: &Instance) -> Result<Vec<Vec<Rational>>> {
    let n = instance.agent_count();
    let m = instance.item_count();
    let nf = n * m;
    let slack = nf;
    let surplus = nf + m;
    let artificial = nf + m + n;
    let cols = nf + m + 2 * n;
    let width = cols + 1;

    let mut rows = vec![vec![Rational::zero(); width]; m + n];
    let mut basis = Vec::with_capacity(m + n);
    for j in 0..m {
        for i in 0..n {
            rows[j][i * m + j] = Rational::from_integer(1.into());
        }
        rows[j][slack + j] = Rational::from_integer(1.into());
        rows[j][cols] = Rational::from_integer(1.into());
        basis.push(slack + j);
    }
    for i in 0..n {
        let r = m + i;
        for j in 0..m {
            rows[r][i * m + j] = instance.value(i, j).clone();
        }
        rows[r][surplus + i] = Rational::from_integer((-1).into());
        rows[r][artificial + i] = Rational::from_integer(1.into());
        rows[r][cols] = instance.total_value(i) * instance.entitlement(i);
        basis.push(artificial + i);
    }
    let mut objective = vec![Rational::zero(); width];
    for row in &rows[m..] {
        for (k, v) in row.iter().enumerate() {
            if k < artificial || k == cols {
                objective[k] -= v;
            }
        }
    }
    let mut t = Tableau {
        rows,
        objective,
        basis,
    };

    while let Some(enter) = (0..artificial).find(|&k| t.objective[k].is_negative()) {
        let rhs = t.rhs();
        let mut leave: Option<(usize, Rational)> = None;
        for (r, row) in t.rows.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let q = &row[rhs] / &row[enter];
            let better = match &leave {
                None => true,
                Some((best_r, best_q)) => q < *best_q || (q == *best_q && t.basis[r] < t.basis[*best_r]),
            };
            if better {
                leave = Some((r, q));
            }
        }
        let (row, _) = leave.expect("phase one is bounded below");
        t.pivot(row, enter);
    }
    if !t.objective[t.rhs()].is_zero() {
        return Err(Error::InvalidAssignment("relaxation has no feasible point".into()));
    }
    for r in 0..t.rows.len() {
        if t.basis[r] >= artificial {
            if let Some(k) = (0..artificial).find(|&k| !t.rows[r][k].is_zero()) {
                t.pivot(r, k);
            }
        }
    }

    let rhs = t.rhs();
    let mut f = vec![vec![Rational::zero(); m]; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nf {
            f[b / m][b % m] = t.rows[r][rhs].clone();
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    #[test]
    fn two_by_three() {
        let inst = Instance::new(
            vec![vec![int(1), int(2), int(3)], vec![int(3), int(2), int(1)]],
            vec![ratio(1, 2), ratio(1, 2)],
        )
        .unwrap();
        let f = feasible_vertex(&inst).unwrap();
        for j in 0..3 {
            assert!(&f[0][j] + &f[1][j] <= int(1));
        }
        for i in 0..2 {
            let got: Rational = (0..3).map(|j| inst.value(i, j) * &f[i][j]).sum();
            assert!(got >= int(3));
        }
        assert!(super::super::vertex::is_vertex(&inst, &f));
    }
}
