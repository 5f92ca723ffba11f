//! Dense two-phase simplex with Bland's rule, generic over the scalar.
//!
//! Over [`Rational`](crate::scalar::Rational) every pivot is exact, so the
//! optimal value and point can be replayed without tolerance.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

impl<S> Constraint<S> {
    pub fn new(coeffs: Vec<S>, relation: Relation, rhs: S) -> Self {
        Constraint { coeffs, relation, rhs }
    }
}

/// Maximize `objective . x` subject to the constraints; variables are
/// nonnegative unless marked free.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { objective: vec![S::zero(); num_vars], constraints: Vec::new(), free: vec![false; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn maximize(mut self, objective: Vec<S>) -> Self {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
        self
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn solve(&self) -> LpOutcome<S> {
        solve(self)
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    obj: Vec<S>,
    basis: Vec<usize>,
    cols: usize,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, r: usize) -> &S {
        &self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row, &pivot_row, c);
            }
        }
        eliminate(&mut self.obj, &pivot_row, c);
        self.basis[r] = c;
    }

    /// Runs Bland's rule on columns `< limit`. Returns false if unbounded.
    fn optimize(&mut self, limit: usize) -> bool {
        loop {
            let Some(c) = (0..limit).find(|&j| self.obj[j].is_negative_tol()) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.rhs(r).clone() / a.clone();
                let better = match &best {
                    None => true,
                    Some((br, b)) => ratio < *b && !ratio.eq_tol(b) || ratio.eq_tol(b) && self.basis[r] < self.basis[*br],
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

fn eliminate<S: Scalar>(row: &mut [S], pivot_row: &[S], c: usize) {
    let f = row[c].clone();
    if f.is_zero() {
        return;
    }
    for (v, p) in row.iter_mut().zip(pivot_row) {
        *v = v.clone() - f.clone() * p.clone();
    }
}

fn solve<S: Scalar>(lp: &LinearProgram<S>) -> LpOutcome<S> {
    let n = lp.num_vars();
    // Column layout: split variables, then slack/surplus, then artificials.
    let mut col_of = Vec::with_capacity(n);
    let mut split = 0;
    for j in 0..n {
        col_of.push(split);
        split += if lp.free[j] { 2 } else { 1 };
    }
    let m = lp.constraints.len();
    let slacks = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let mut normalized = Vec::with_capacity(m);
    for c in &lp.constraints {
        let mut row = vec![S::zero(); split];
        for j in 0..n {
            row[col_of[j]] = c.coeffs[j].clone();
            if lp.free[j] {
                row[col_of[j] + 1] = -c.coeffs[j].clone();
            }
        }
        let (mut rel, mut rhs) = (c.relation, c.rhs.clone());
        if rhs.is_negative() {
            row.iter_mut().for_each(|v| *v = -v.clone());
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        normalized.push((row, rel, rhs));
    }
    let artificials = normalized.iter().filter(|(_, rel, _)| *rel != Relation::Le).count();
    let cols = split + slacks + artificials;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (split, split + slacks);
    for (row, rel, rhs) in normalized {
        let mut full = row;
        full.resize(cols + 1, S::zero());
        full[cols] = rhs;
        match rel {
            Relation::Le => {
                full[next_slack] = S::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                full[next_slack] = -S::one();
                next_slack += 1;
                full[next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                full[next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(full);
    }
    let art_start = split + slacks;
    let mut t = Tableau { rows, obj: vec![S::zero(); cols + 1], basis, cols };

    if artificials > 0 {
        for j in art_start..cols {
            t.obj[j] = S::one();
        }
        for r in 0..m {
            if t.basis[r] >= art_start {
                let row = t.rows[r].clone();
                for (o, v) in t.obj.iter_mut().zip(&row) {
                    *o = o.clone() - v.clone();
                }
            }
        }
        t.optimize(cols);
        // obj[cols] holds minus the sum of artificials.
        if t.obj[cols].is_negative_tol() {
            return LpOutcome::Infeasible;
        }
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&j| !t.rows[r][j].is_zero() && !t.rows[r][j].eq_tol(&S::zero())) {
                    Some(c) => {
                        t.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        for row in t.rows.iter_mut() {
            row.drain(art_start..cols);
        }
        t.cols = art_start;
    }

    let cols = t.cols;
    t.obj = vec![S::zero(); cols + 1];
    for j in 0..n {
        t.obj[col_of[j]] = -lp.objective[j].clone();
        if lp.free[j] {
            t.obj[col_of[j] + 1] = lp.objective[j].clone();
        }
    }
    for r in 0..t.rows.len() {
        let row = t.rows[r].clone();
        eliminate(&mut t.obj, &row, t.basis[r]);
    }
    if !t.optimize(cols) {
        return LpOutcome::Unbounded;
    }
    let mut raw = vec![S::zero(); cols];
    for (r, &b) in t.basis.iter().enumerate() {
        raw[b] = t.rhs(r).clone();
    }
    let x: Vec<S> = (0..n)
        .map(|j| if lp.free[j] { raw[col_of[j]].clone() - raw[col_of[j] + 1].clone() } else { raw[col_of[j]].clone() })
        .collect();
    let value = lp.objective.iter().zip(&x).fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone());
    LpOutcome::Optimal { x, value }
}
