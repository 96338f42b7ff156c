//! Dense two-phase primal simplex over exact rationals with Bland's rule.
//! Meant for the tiny relaxations solved by the oracle, where exactness
//! matters more than speed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_from(r: &crate::model::Rational) -> Q {
    Q::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

/// `minimize c^T x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: Q,
    pub x: Vec<Q>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, objective: vec![Q::zero(); n_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn objective_at(&self, x: &[Q]) -> Q {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Exact feasibility of `x`.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        x.len() == self.n_vars
            && x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| {
                let lhs: Q = c.coeffs.iter().map(|(j, a)| a * &x[*j]).sum();
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    obj: Vec<Q>,
    basis: Vec<usize>,
    rhs: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |row: &mut Vec<Q>| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Reduced costs for `cost` under the current basis.
    fn price(&mut self, cost: &[Q]) {
        let mut obj: Vec<Q> = cost.to_vec();
        obj.push(Q::zero());
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    obj[j] -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        loop {
            let Some(c) = (0..self.rhs).find(|&j| allowed(j) && self.obj[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.rhs] / &row[c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let (r, _) = best.ok_or(Error::LpUnbounded)?;
            self.pivot(r, c);
        }
    }
}

/// Sparse coefficients, relation and right-hand side of one row.
type Row = (Vec<(usize, Q)>, Relation, Q);

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.n_vars;
    let m = lp.constraints.len();
    // normalize to nonnegative right-hand sides
    let rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs.is_negative() {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|(j, a)| (*j, -a)).collect(), flipped, -&c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs.clone())
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art;
    let rhs = width;

    let mut t = Tableau { rows: Vec::with_capacity(m), obj: Vec::new(), basis: Vec::with_capacity(m), rhs };
    let (mut s, mut a) = (n, n + n_slack);
    for (coeffs, rel, b) in rows {
        let mut row = vec![Q::zero(); width + 1];
        for (j, v) in coeffs {
            row[j] += v;
        }
        row[rhs] = b;
        match rel {
            Relation::Le => {
                row[s] = Q::one();
                t.basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -Q::one();
                row[a] = Q::one();
                t.basis.push(a);
                s += 1;
                a += 1;
            }
            Relation::Eq => {
                row[a] = Q::one();
                t.basis.push(a);
                a += 1;
            }
        }
        t.rows.push(row);
    }
    let is_art = |j: usize| j >= n + n_slack && j < width;

    // phase 1: minimize the sum of artificials
    let cost1: Vec<Q> = (0..width).map(|j| if is_art(j) { Q::one() } else { Q::zero() }).collect();
    t.price(&cost1);
    t.run(&|j| j < width)?;
    if !t.obj[rhs].is_zero() {
        return Err(Error::LpInfeasible);
    }
    // drive remaining (zero-level) artificials out of the basis
    let mut i = 0;
    while i < t.rows.len() {
        if is_art(t.basis[i]) {
            match (0..n + n_slack).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    // redundant equality
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // phase 2
    let mut cost2 = lp.objective.clone();
    cost2.resize(width, Q::zero());
    t.price(&cost2);
    t.run(&|j| !is_art(j))?;

    let mut x = vec![Q::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][rhs].clone();
        }
    }
    Ok(LpSolution { value: lp.objective_at(&x), x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(-3, 1), q(-5, 1)];
        lp.add(vec![(0, q(1, 1))], Relation::Le, q(4, 1));
        lp.add(vec![(1, q(2, 1))], Relation::Le, q(12, 1));
        lp.add(vec![(0, q(3, 1)), (1, q(2, 1))], Relation::Le, q(18, 1));
        let s = solve(&lp).unwrap();
        assert_eq!(s.value, q(-36, 1));
        assert_eq!(s.x, vec![q(2, 1), q(6, 1)]);
    }

    #[test]
    fn equalities_and_lower_bounds() {
        // min x + 2y s.t. x + y = 1, y >= 1/3
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(1, 1), q(2, 1)];
        lp.add(vec![(0, q(1, 1)), (1, q(1, 1))], Relation::Eq, q(1, 1));
        lp.add(vec![(1, q(1, 1))], Relation::Ge, q(1, 3));
        let s = solve(&lp).unwrap();
        assert_eq!(s.value, q(4, 3));
        assert!(lp.is_feasible(&s.x));
    }

    #[test]
    fn redundant_equality() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![q(1, 1), q(1, 1)];
        lp.add(vec![(0, q(1, 1)), (1, q(1, 1))], Relation::Eq, q(2, 1));
        lp.add(vec![(0, q(2, 1)), (1, q(2, 1))], Relation::Eq, q(4, 1));
        assert_eq!(solve(&lp).unwrap().value, q(2, 1));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, q(1, 1))], Relation::Le, q(-1, 1));
        assert!(matches!(solve(&lp), Err(Error::LpInfeasible)));
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![q(-1, 1)];
        lp.add(vec![(0, q(1, 1))], Relation::Ge, q(1, 1));
        assert!(matches!(solve(&lp), Err(Error::LpUnbounded)));
    }
}
