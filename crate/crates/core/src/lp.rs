//! Dense two-phase simplex over exact rationals.
//!
//! Problems have the form `maximize c·x` subject to rows `a_k·x (≤|≥|=) b_k`
//! and `x ≥ 0`. Pivoting follows Bland's rule, so the method terminates.
//! Infeasible problems come with a Farkas certificate that can be checked
//! independently with [`verify_farkas`].

use num_traits::{One, Signed, Zero};

use crate::model::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Maximized.
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        x: Vec<Rational>,
    },
    /// `z` with `z_k ≥ 0` on `≤` rows, `z_k ≤ 0` on `≥` rows, `Σ z_k a_k ≥ 0`
    /// componentwise and `Σ z_k b_k < 0`.
    Infeasible {
        farkas: Vec<Rational>,
    },
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        solve(self)
    }
}

/// Checks a Farkas certificate against `lp`'s constraints.
pub fn verify_farkas(lp: &LinearProgram, z: &[Rational]) -> bool {
    if z.len() != lp.constraints.len() {
        return false;
    }
    let signs_ok = lp
        .constraints
        .iter()
        .zip(z)
        .all(|(c, zk)| match c.relation {
            Relation::Le => !zk.is_negative(),
            Relation::Ge => !zk.is_positive(),
            Relation::Eq => true,
        });
    let columns_ok = (0..lp.num_vars).all(|j| {
        let s: Rational = lp
            .constraints
            .iter()
            .zip(z)
            .map(|(c, zk)| &c.coeffs[j] * zk)
            .sum();
        !s.is_negative()
    });
    let rhs: Rational = lp
        .constraints
        .iter()
        .zip(z)
        .map(|(c, zk)| &c.rhs * zk)
        .sum();
    signs_ok && columns_ok && rhs.is_negative()
}

struct Tableau {
    /// Rows of `[A | b]`.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let inv = self.rows[r][col].recip();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Maximizes `cost` over the columns in `allowed`.
    fn optimize(&mut self, cost: &[Rational], allowed: &[bool]) -> Step {
        loop {
            let entering = (0..self.width).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced: Rational = self
                    .rows
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &b)| &cost[b] * &row[j])
                    .sum();
                cost[j] > reduced
            });
            let Some(col) = entering else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &leave {
                    None => true,
                    Some((best, q)) => {
                        ratio < *q || (ratio == *q && self.basis[r] < self.basis[*best])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Step::Unbounded;
            };
            self.pivot(r, col);
        }
    }

    fn value(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| &cost[b] * self.rhs(r))
            .sum()
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars;
    let k = lp.constraints.len();
    // columns: x (n) | slacks (one per inequality) | artificials (k)
    let mut slack_of = vec![None; k];
    let mut slacks = 0;
    for (r, c) in lp.constraints.iter().enumerate() {
        if c.relation != Relation::Eq {
            slack_of[r] = Some(n + slacks);
            slacks += 1;
        }
    }
    let art0 = n + slacks;
    let width = art0 + k;
    let mut flipped = vec![false; k];
    let mut rows = Vec::with_capacity(k);
    for (r, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); width + 1];
        row[..n].clone_from_slice(&c.coeffs);
        if let Some(s) = slack_of[r] {
            row[s] = match c.relation {
                Relation::Le => Rational::one(),
                _ => -Rational::one(),
            };
        }
        row[width] = c.rhs.clone();
        if c.rhs.is_negative() {
            flipped[r] = true;
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        row[art0 + r] = Rational::one();
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (art0..art0 + k).collect(),
        width,
    };

    let mut phase1 = vec![Rational::zero(); width];
    for c in phase1.iter_mut().skip(art0) {
        *c = -Rational::one();
    }
    let everything = vec![true; width];
    t.optimize(&phase1, &everything);
    if t.value(&phase1).is_negative() {
        // y = c_B B⁻¹ for the phase-1 problem; z = y on the original signs
        let farkas = (0..k)
            .map(|r| {
                let y: Rational = t
                    .rows
                    .iter()
                    .zip(&t.basis)
                    .map(|(row, &b)| &phase1[b] * &row[art0 + r])
                    .sum();
                if flipped[r] {
                    y
                } else {
                    -y
                }
            })
            .map(|z| -z)
            .collect();
        return LpOutcome::Infeasible { farkas };
    }

    // drive artificials out of the basis; rows that cannot be pivoted are redundant
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= art0 {
            match (0..art0).find(|&j| !t.rows[r][j].is_zero()) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost = vec![Rational::zero(); width];
    cost[..n].clone_from_slice(&lp.objective);
    let mut allowed = vec![true; width];
    for a in allowed.iter_mut().skip(art0) {
        *a = false;
    }
    match t.optimize(&cost, &allowed) {
        Step::Unbounded => LpOutcome::Unbounded,
        Step::Optimal => {
            let mut x = vec![Rational::zero(); n];
            for (r, &b) in t.basis.iter().enumerate() {
                if b < n {
                    x[b] = t.rhs(r).clone();
                }
            }
            LpOutcome::Optimal {
                value: t.value(&cost),
                x,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{int, rat};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn small_maximization() {
        // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6, x ≤ 3
        let mut lp = LinearProgram::new(2);
        lp.objective = v(&[3, 2]);
        lp.add(v(&[1, 1]), Relation::Le, int(4));
        lp.add(v(&[1, 3]), Relation::Le, int(6));
        lp.add(v(&[1, 0]), Relation::Le, int(3));
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(11),
                x: v(&[3, 1])
            }
        );
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y (max −x − y), x + 2y = 3, x ≥ 1/2
        let mut lp = LinearProgram::new(2);
        lp.objective = v(&[-1, -1]);
        lp.add(v(&[1, 2]), Relation::Eq, int(3));
        lp.add(v(&[1, 0]), Relation::Ge, rat(1, 2));
        match lp.solve() {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, rat(-7, 4));
                assert_eq!(x, vec![rat(1, 2), rat(5, 4)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_with_certificate() {
        // x + y ≤ 1, x + y ≥ 2
        let mut lp = LinearProgram::new(2);
        lp.add(v(&[1, 1]), Relation::Le, int(1));
        lp.add(v(&[1, 1]), Relation::Ge, int(2));
        let LpOutcome::Infeasible { farkas } = lp.solve() else {
            panic!("expected infeasible");
        };
        assert!(verify_farkas(&lp, &farkas));
    }

    #[test]
    fn infeasible_negative_rhs_equality() {
        // x = −1 with x ≥ 0
        let mut lp = LinearProgram::new(1);
        lp.add(v(&[1]), Relation::Eq, int(-1));
        let LpOutcome::Infeasible { farkas } = lp.solve() else {
            panic!("expected infeasible");
        };
        assert!(verify_farkas(&lp, &farkas));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let mut lp = LinearProgram::new(2);
        lp.objective = v(&[1, 0]);
        lp.add(v(&[1, 1]), Relation::Eq, int(1));
        lp.add(v(&[2, 2]), Relation::Eq, int(2));
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(1),
                x: v(&[1, 0])
            }
        );
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = v(&[1]);
        lp.add(v(&[1]), Relation::Ge, int(1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn bogus_certificate_rejected() {
        let mut lp = LinearProgram::new(1);
        lp.add(v(&[1]), Relation::Le, int(1));
        assert!(!verify_farkas(&lp, &[int(1)]));
        assert!(!verify_farkas(&lp, &[int(-1)]));
    }
}
