//! Exact-rational two-phase simplex with dual values, Farkas certificates and
//! unbounded rays.
//!
//! Every user row keeps its index through the solve (there is no presolve), so
//! `dual[i]` always belongs to `rows[i]`. Duals are reported as the
//! sensitivity of the optimal value to the row's right-hand side.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exactmath::{fmt_rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObjSense {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    #[default]
    Bland,
    /// Most negative reduced cost, falling back to Bland after a run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpVar {
    pub name: String,
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rat)>,
    pub sense: Sense,
    pub rhs: Rat,
    /// Provenance label, carried into reports.
    pub tag: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LPProblem {
    pub sense: ObjSense,
    pub objective: Vec<Rat>,
    pub obj_const: Rat,
    pub vars: Vec<LpVar>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LPSolution {
    pub status: LpStatus,
    pub value: Rat,
    pub primal: Vec<Rat>,
    pub dual: Vec<Rat>,
    /// Basic standard-form columns, and the user rows whose slack is basic.
    pub basis_cols: Vec<usize>,
    pub basic_slack_rows: Vec<usize>,
    /// For infeasible problems: row multipliers `y` in the orientation where
    /// every row reads `a·x ≤ b` (`≥` rows negated), scaled so `yᵀb = −1`.
    /// Over free variables this is the classic certificate checked by
    /// [`verify_farkas`].
    pub farkas: Option<Vec<Rat>>,
    /// For unbounded problems: an improving direction in user variables.
    pub ray: Option<Vec<Rat>>,
}

impl LPProblem {
    pub fn new(sense: ObjSense) -> Self {
        LPProblem { sense, ..Default::default() }
    }

    /// Adds a variable with bounds `lower ≤ x ≤ upper` (`None` = infinite).
    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rat>, upper: Option<Rat>, cost: Rat) -> usize {
        self.vars.push(LpVar { name: name.into(), lower, upper });
        self.objective.push(cost);
        self.vars.len() - 1
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>, cost: Rat) -> usize {
        self.add_var(name, Some(Rat::zero()), None, cost)
    }

    pub fn add_free(&mut self, name: impl Into<String>, cost: Rat) -> usize {
        self.add_var(name, None, None, cost)
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rat)>, sense: Sense, rhs: Rat, tag: impl Into<String>) -> usize {
        let mut merged: Vec<(usize, Rat)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|(j, _)| *j);
        for (j, v) in sorted {
            assert!(j < self.vars.len(), "row references unknown variable {j}");
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|(_, v)| !v.is_zero());
        self.rows.push(LpRow { coeffs: merged, sense, rhs, tag: tag.into() });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn row_activity(&self, i: usize, x: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (j, v) in &self.rows[i].coeffs {
            s += v * &x[*j];
        }
        s
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        let mut s = self.obj_const.clone();
        for (c, v) in self.objective.iter().zip(x) {
            if !c.is_zero() {
                s += c * v;
            }
        }
        s
    }

    /// Checks bounds and rows exactly.
    pub fn is_feasible(&self, x: &[Rat]) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        for (v, xi) in self.vars.iter().zip(x) {
            if v.lower.as_ref().is_some_and(|l| xi < l) || v.upper.as_ref().is_some_and(|u| xi > u) {
                return false;
            }
        }
        (0..self.rows.len()).all(|i| {
            let a = self.row_activity(i, x);
            match self.rows[i].sense {
                Sense::Le => a <= self.rows[i].rhs,
                Sense::Ge => a >= self.rows[i].rhs,
                Sense::Eq => a == self.rows[i].rhs,
            }
        })
    }

    /// CPLEX-style LP text. Coefficients are written as decimals when exact,
    /// otherwise as fractions in a trailing comment per row.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        let name = |j: usize| sanitize(&self.vars[j].name, j);
        let term = |c: &Rat, j: usize| -> String {
            let sign = if c.is_negative() { "-" } else { "+" };
            format!("{sign} {} {}", lp_number(&c.abs()), name(j))
        };
        s.push_str(if self.sense == ObjSense::Min { "Minimize\n obj:" } else { "Maximize\n obj:" });
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                let _ = write!(s, " {}", term(c, j));
            }
        }
        let _ = writeln!(s, "\n\\ constant term {}", fmt_rat(&self.obj_const));
        s.push_str("Subject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " r{i}:");
            for (j, c) in &r.coeffs {
                let _ = write!(s, " {}", term(c, *j));
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", lp_number(&r.rhs));
            let _ = writeln!(s, " \\ {} exact rhs {}", r.tag, fmt_rat(&r.rhs));
        }
        s.push_str("Bounds\n");
        for (j, v) in self.vars.iter().enumerate() {
            match (&v.lower, &v.upper) {
                (None, None) => {
                    let _ = writeln!(s, " {} free", name(j));
                }
                (l, u) => {
                    let lo = l.as_ref().map(lp_number).unwrap_or_else(|| "-inf".into());
                    let hi = u.as_ref().map(lp_number).unwrap_or_else(|| "+inf".into());
                    let _ = writeln!(s, " {lo} <= {} <= {hi}", name(j));
                }
            }
        }
        s.push_str("End\n");
        s
    }
}

fn sanitize(n: &str, j: usize) -> String {
    let clean: String = n.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if clean.is_empty() { format!("v{j}") } else { format!("{clean}_{j}") }
}

fn lp_number(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    // finite decimal only when the denominator is 2^a 5^b
    let mut d = r.denom().clone();
    let two = num_bigint::BigInt::from(2);
    let five = num_bigint::BigInt::from(5);
    let mut digits = 0usize;
    while (&d % &two).is_zero() || (&d % &five).is_zero() {
        if (&d % &two).is_zero() {
            d /= &two;
        } else {
            d /= &five;
        }
        digits += 1;
    }
    if d.is_one() {
        crate::exactmath::approx_rat(r, digits.max(1))
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// How a user variable maps onto nonnegative standard columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = shift + sign·s`.
    Single { col: usize, shift: Rat, sign: Rat },
    /// `x = s⁺ − s⁻`.
    Split { pos: usize, neg: usize },
}

struct Tableau {
    t: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    obj: Vec<Rat>,
    obj_rhs: Rat,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.t[r][c].recip();
        let nz: Vec<usize> = (0..self.ncols).filter(|&j| !self.t[r][j].is_zero()).collect();
        for &j in &nz {
            self.t[r][j] *= &inv;
        }
        self.rhs[r] *= &inv;
        let prow: Vec<(usize, Rat)> = nz.iter().map(|&j| (j, self.t[r][j].clone())).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.t.len() {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for (j, v) in &prow {
                let d = &f * v;
                self.t[i][*j] -= d;
            }
            if !prhs.is_zero() {
                let d = &f * &prhs;
                self.rhs[i] -= d;
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (j, v) in &prow {
                let d = &f * v;
                self.obj[*j] -= d;
            }
            let d = &f * &prhs;
            self.obj_rhs -= d;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations; `allowed` filters entering columns.
    /// Returns `Err(col)` when column `col` proves unboundedness.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool, rule: PivotRule) -> Result<(), usize> {
        let mut degenerate_run = 0usize;
        loop {
            let use_bland = rule == PivotRule::Bland || degenerate_run > 50;
            let entering = if use_bland {
                (0..self.ncols).find(|&j| allowed(j) && self.obj[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..self.ncols {
                    if allowed(j) && self.obj[j].is_negative() && best.is_none_or(|b| self.obj[j] < self.obj[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.t.len() {
                if self.t[i][c].is_positive() {
                    let ratio = &self.rhs[i] / &self.t[i][c];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Err(c) };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }
}

pub fn lp_solve(p: &LPProblem) -> LPSolution {
    lp_solve_with(p, PivotRule::Bland)
}

pub fn lp_solve_with(p: &LPProblem, rule: PivotRule) -> LPSolution {
    let nuser = p.vars.len();
    let mrows = p.rows.len();
    // objective in minimization form
    let flip = if p.sense == ObjSense::Max { -Rat::one() } else { Rat::one() };

    // variable mapping onto structural columns
    let mut maps = Vec::with_capacity(nuser);
    let mut ncol = 0usize;
    let mut bound_rows: Vec<(usize, Rat)> = Vec::new(); // (structural col, upper)
    for v in &p.vars {
        match (&v.lower, &v.upper) {
            (Some(l), u) => {
                maps.push(VarMap::Single { col: ncol, shift: l.clone(), sign: Rat::one() });
                if let Some(u) = u {
                    assert!(u >= l, "variable {} has empty bounds", v.name);
                    bound_rows.push((ncol, u - l));
                }
                ncol += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Single { col: ncol, shift: u.clone(), sign: -Rat::one() });
                ncol += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncol, neg: ncol + 1 });
                ncol += 2;
            }
        }
    }
    let nstruct = ncol;
    let total_rows = mrows + bound_rows.len();

    // row data in structural columns: (coeffs, sense, rhs)
    let mut rows: Vec<(Vec<(usize, Rat)>, Sense, Rat)> = Vec::with_capacity(total_rows);
    for r in &p.rows {
        let mut rhs = r.rhs.clone();
        let mut coeffs = Vec::new();
        for (j, a) in &r.coeffs {
            match &maps[*j] {
                VarMap::Single { col, shift, sign } => {
                    rhs -= a * shift;
                    coeffs.push((*col, a * sign));
                }
                VarMap::Split { pos, neg } => {
                    coeffs.push((*pos, a.clone()));
                    coeffs.push((*neg, -a.clone()));
                }
            }
        }
        rows.push((coeffs, r.sense, rhs));
    }
    for (col, ub) in &bound_rows {
        rows.push((vec![(*col, Rat::one())], Sense::Le, ub.clone()));
    }

    // structural costs and constant from shifts
    let mut cost = vec![Rat::zero(); nstruct];
    for (j, m) in maps.iter().enumerate() {
        let c = &p.objective[j] * &flip;
        match m {
            VarMap::Single { col, sign, .. } => {
                cost[*col] = &c * sign;
            }
            VarMap::Split { pos, neg } => {
                cost[*pos] = c.clone();
                cost[*neg] = -c;
            }
        }
    }

    // slack columns
    let mut slack_of_row = vec![None; total_rows];
    let mut ncols = nstruct;
    for (i, (_, sense, _)) in rows.iter().enumerate() {
        if *sense != Sense::Eq {
            slack_of_row[i] = Some(ncols);
            ncols += 1;
        }
    }
    let art0 = ncols;
    ncols += total_rows;

    let mut t = vec![vec![Rat::zero(); ncols]; total_rows];
    let mut rhs = vec![Rat::zero(); total_rows];
    let mut row_sign = vec![Rat::one(); total_rows];
    for (i, (coeffs, sense, b)) in rows.iter().enumerate() {
        for (j, a) in coeffs {
            t[i][*j] += a;
        }
        if let Some(s) = slack_of_row[i] {
            t[i][s] = if *sense == Sense::Le { Rat::one() } else { -Rat::one() };
        }
        rhs[i] = b.clone();
        if rhs[i].is_negative() {
            row_sign[i] = -Rat::one();
            for v in t[i].iter_mut() {
                if !v.is_zero() {
                    *v = -v.clone();
                }
            }
            rhs[i] = -rhs[i].clone();
        }
        t[i][art0 + i] = Rat::one();
    }

    // Rows whose slack enters with +1 start on the slack; the rest on an
    // artificial. Phase 1 minimizes the sum of the basic artificials.
    let start: Vec<usize> = (0..total_rows)
        .map(|i| match slack_of_row[i] {
            Some(s) if t[i][s].is_positive() => s,
            _ => art0 + i,
        })
        .collect();
    let art_cost: Vec<Rat> = start.iter().map(|&b| if b >= art0 { Rat::one() } else { Rat::zero() }).collect();
    let mut obj = vec![Rat::zero(); ncols];
    let mut obj_rhs = Rat::zero();
    for i in (0..total_rows).filter(|&i| start[i] >= art0) {
        for j in 0..art0 {
            if !t[i][j].is_zero() {
                obj[j] -= &t[i][j];
            }
        }
        obj_rhs -= &rhs[i];
    }
    let mut tab = Tableau { t, rhs, obj, obj_rhs, basis: start, ncols };
    tab.run(&|j| j < art0, rule).expect("phase 1 is bounded below");

    let phase1_value = -tab.obj_rhs.clone();
    if phase1_value.is_positive() {
        // phase-1 duals: y_i = cost minus reduced cost of artificial i
        let y_std: Vec<Rat> = (0..total_rows).map(|i| &art_cost[i] - &tab.obj[art0 + i]).collect();
        // multipliers on rows as written (a·x {≤,≥,=} b')
        let u: Vec<Rat> = (0..total_rows).map(|i| &y_std[i] * &row_sign[i]).collect();
        // normalize to a·x ≤ b orientation: v = -u; scale to vᵀb' = -1
        let mut v: Vec<Rat> = u.iter().map(|x| -x).collect();
        let vb: Rat = (0..total_rows).map(|i| &v[i] * &rows[i].2).fold(Rat::zero(), |a, b| a + b);
        assert!(vb.is_negative(), "phase-1 dual must separate");
        let scale = -vb.recip();
        for x in v.iter_mut() {
            *x *= &scale;
        }
        // express the user-row part; bound rows fold into variable bounds
        let mut far = vec![Rat::zero(); mrows];
        for i in 0..mrows {
            far[i] = match p.rows[i].sense {
                Sense::Ge => -v[i].clone(),
                _ => v[i].clone(),
            };
        }
        return LPSolution {
            status: LpStatus::Infeasible,
            value: Rat::zero(),
            primal: vec![],
            dual: vec![],
            basis_cols: vec![],
            basic_slack_rows: vec![],
            farkas: Some(far),
            ray: None,
        };
    }

    // drive artificials out of the basis where possible
    for r in 0..total_rows {
        if tab.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&j| !tab.t[r][j].is_zero()) {
                tab.pivot(r, c);
            }
        }
    }

    // phase 2 objective
    let mut obj = vec![Rat::zero(); ncols];
    obj[..nstruct].clone_from_slice(&cost);
    let mut obj_rhs = Rat::zero();
    for r in 0..total_rows {
        let b = tab.basis[r];
        let cb = if b < nstruct { cost[b].clone() } else { Rat::zero() };
        if cb.is_zero() {
            continue;
        }
        for j in 0..ncols {
            if !tab.t[r][j].is_zero() {
                obj[j] -= &cb * &tab.t[r][j];
            }
        }
        obj_rhs -= &cb * &tab.rhs[r];
    }
    tab.obj = obj;
    tab.obj_rhs = obj_rhs;

    let std_point = |tab: &Tableau| {
        let mut xs = vec![Rat::zero(); art0];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < art0 {
                xs[b] = tab.rhs[r].clone();
            }
        }
        xs
    };
    let to_user = |xs: &[Rat], with_shift: bool| -> Vec<Rat> {
        maps.iter()
            .map(|m| match m {
                VarMap::Single { col, shift, sign } => {
                    let base = &xs[*col] * sign;
                    if with_shift { base + shift } else { base }
                }
                VarMap::Split { pos, neg } => &xs[*pos] - &xs[*neg],
            })
            .collect()
    };

    if let Err(c) = tab.run(&|j| j < art0, rule) {
        let mut dir = vec![Rat::zero(); art0];
        dir[c] = Rat::one();
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < art0 && !tab.t[r][c].is_zero() {
                dir[b] = -tab.t[r][c].clone();
            }
        }
        let x = to_user(&std_point(&tab), true);
        return LPSolution {
            status: LpStatus::Unbounded,
            value: Rat::zero(),
            primal: x,
            dual: vec![],
            basis_cols: tab.basis.clone(),
            basic_slack_rows: vec![],
            farkas: None,
            ray: Some(to_user(&dir, false)),
        };
    }

    let xs = std_point(&tab);
    let primal = to_user(&xs, true);
    let value = p.objective_value(&primal);
    let y_std: Vec<Rat> = (0..total_rows).map(|i| -tab.obj[art0 + i].clone()).collect();
    let y_all: Vec<Rat> = (0..total_rows).map(|i| &y_std[i] * &row_sign[i] * &flip).collect();

    // exact strong duality: value = Σ y_i b'_i + constant
    let mut dual_value = p.obj_const.clone();
    for (j, m) in maps.iter().enumerate() {
        if let VarMap::Single { shift, .. } = m {
            dual_value += &p.objective[j] * shift;
        }
    }
    for (i, (_, _, b)) in rows.iter().enumerate() {
        if !y_all[i].is_zero() {
            dual_value += &y_all[i] * b;
        }
    }
    assert_eq!(dual_value, value, "strong duality violated");

    let basic_slack_rows = (0..mrows)
        .filter(|&i| slack_of_row[i].is_some_and(|s| tab.basis.contains(&s)))
        .collect();
    LPSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual: y_all[..mrows].to_vec(),
        basis_cols: tab.basis.clone(),
        basic_slack_rows,
        farkas: None,
        ray: None,
    }
}

/// Outcome of a feasibility query over free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rat>),
    Infeasible(Vec<Rat>),
}

/// Feasibility of `rows` over `nvars` free variables.
pub fn lp_feasible(nvars: usize, rows: &[LpRow]) -> Feasibility {
    let mut p = LPProblem::new(ObjSense::Min);
    for j in 0..nvars {
        p.add_free(format!("x{j}"), Rat::zero());
    }
    for r in rows {
        p.add_row(r.coeffs.clone(), r.sense, r.rhs.clone(), r.tag.clone());
    }
    let s = lp_solve(&p);
    match s.status {
        LpStatus::Infeasible => Feasibility::Infeasible(s.farkas.expect("certificate")),
        _ => Feasibility::Feasible(s.primal),
    }
}

/// Checks a Farkas vector for `rows` over free variables: `y ≥ 0` on
/// inequality rows, `Σ y_i a_i = 0`, `yᵀb < 0` in the `≤` orientation.
pub fn verify_farkas(nvars: usize, rows: &[LpRow], y: &[Rat]) -> bool {
    if y.len() != rows.len() {
        return false;
    }
    let mut comb = vec![Rat::zero(); nvars];
    let mut yb = Rat::zero();
    for (r, yi) in rows.iter().zip(y) {
        let s = if r.sense == Sense::Ge { -Rat::one() } else { Rat::one() };
        if r.sense != Sense::Eq && yi.is_negative() {
            return false;
        }
        for (j, a) in &r.coeffs {
            comb[*j] += yi * a * &s;
        }
        yb += yi * &r.rhs * &s;
    }
    comb.iter().all(|c| c.is_zero()) && yb.is_negative()
}

/// Feasibility of `A ν = b, ν ≥ 0` returning the first basic solution.
pub fn nonneg_combination(cols: &[Vec<Rat>], target: &[Rat]) -> Option<Vec<Rat>> {
    let mut p = LPProblem::new(ObjSense::Min);
    for j in 0..cols.len() {
        p.add_nonneg(format!("nu{j}"), Rat::zero());
    }
    for (i, b) in target.iter().enumerate() {
        let coeffs = cols.iter().enumerate().map(|(j, c)| (j, c[i].clone())).collect();
        p.add_row(coeffs, Sense::Eq, b.clone(), format!("coord{i}"));
    }
    let s = lp_solve(&p);
    (s.status == LpStatus::Optimal).then_some(s.primal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{int, rat};
    use crate::polyhedra::{enumerate_vertices_oracle, HPolyhedron};
    use rand::{Rng, SeedableRng};

    #[test]
    fn trivial_min() {
        let mut p = LPProblem::new(ObjSense::Min);
        p.add_nonneg("x", int(1));
        let s = lp_solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, int(0));
    }

    #[test]
    fn inner_lp_with_x_fixed() {
        // objective of the bilinear example at x = (0,2): 140 y2 - 360 over Py
        let mut p = LPProblem::new(ObjSense::Min);
        p.obj_const = int(-360);
        let y1 = p.add_nonneg("y1", int(0));
        let y2 = p.add_nonneg("y2", int(140));
        p.add_row(vec![(y1, int(1)), (y2, int(-1))], Sense::Ge, int(-2), "a");
        p.add_row(vec![(y1, int(-3)), (y2, int(2))], Sense::Ge, int(-6), "b");
        p.add_row(vec![(y1, int(-3)), (y2, int(-4))], Sense::Ge, int(-15), "c");
        let s = lp_solve(&p);
        assert_eq!(s.value, int(-360));
        assert_eq!(s.primal[y2], int(0));
    }

    #[test]
    fn farkas_for_contradictory_bounds() {
        let rows = vec![
            LpRow { coeffs: vec![(0, int(1))], sense: Sense::Ge, rhs: int(1), tag: "x>=1".into() },
            LpRow { coeffs: vec![(0, int(1))], sense: Sense::Le, rhs: int(0), tag: "x<=0".into() },
        ];
        match lp_feasible(1, &rows) {
            Feasibility::Infeasible(y) => {
                assert_eq!(y, vec![int(1), int(1)]);
                assert!(verify_farkas(1, &rows, &y));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert_eq!(lp_feasible(2, &[]), Feasibility::Feasible(vec![int(0), int(0)]));
    }

    #[test]
    fn redundant_point_weights() {
        // (0,7/13,45/13) as a combination of (0,0,4) and (0,1,3), homogenized
        let cols = vec![vec![int(1), int(0), int(0), int(4)], vec![int(1), int(0), int(1), int(3)]];
        let target = vec![int(1), int(0), rat(7, 13), rat(45, 13)];
        let nu = nonneg_combination(&cols, &target).unwrap();
        assert_eq!(nu, vec![rat(6, 13), rat(7, 13)]);
    }

    #[test]
    fn unbounded_ray_and_bounds() {
        let mut p = LPProblem::new(ObjSense::Max);
        let x = p.add_nonneg("x", int(1));
        let y = p.add_var("y", Some(int(-2)), Some(int(3)), int(1));
        p.add_row(vec![(x, int(1)), (y, int(-1))], Sense::Ge, int(0), "r");
        let s = lp_solve(&p);
        assert_eq!(s.status, LpStatus::Unbounded);
        let d = s.ray.unwrap();
        assert!(d[x].is_positive());

        let mut q = LPProblem::new(ObjSense::Max);
        let y = q.add_var("y", Some(int(-2)), Some(int(3)), int(2));
        let z = q.add_var("z", None, Some(int(5)), int(1));
        q.add_row(vec![(y, int(1)), (z, int(1))], Sense::Le, int(4), "cap");
        let s = lp_solve(&q);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, int(7));
        assert_eq!(s.primal, vec![int(3), int(1)]);
    }

    #[test]
    fn cycling_instance_terminates() {
        // Beale's example; cycles under the textbook largest-coefficient rule
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let mut p = LPProblem::new(ObjSense::Min);
            let x: Vec<usize> = [rat(-3, 4), int(150), rat(-1, 50), int(6)]
                .into_iter()
                .enumerate()
                .map(|(i, c)| p.add_nonneg(format!("x{i}"), c))
                .collect();
            p.add_row(vec![(x[0], rat(1, 4)), (x[1], int(-60)), (x[2], rat(-1, 25)), (x[3], int(9))], Sense::Le, int(0), "a");
            p.add_row(vec![(x[0], rat(1, 2)), (x[1], int(-90)), (x[2], rat(-1, 50)), (x[3], int(3))], Sense::Le, int(0), "b");
            p.add_row(vec![(x[2], int(1))], Sense::Le, int(1), "c");
            let s = lp_solve_with(&p, rule);
            assert_eq!(s.status, LpStatus::Optimal);
            assert_eq!(s.value, rat(-1, 20));
        }
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 30 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(n + 1..=n + 4);
            let mut a = Vec::new();
            let mut b = Vec::new();
            for _ in 0..m {
                a.push((0..n).map(|_| int(rng.gen_range(-4..=4))).collect::<Vec<_>>());
                b.push(int(rng.gen_range(1..=8)));
            }
            // box keeps the region bounded
            for i in 0..n {
                let mut r = vec![int(0); n];
                r[i] = int(1);
                a.push(r.clone());
                b.push(int(5));
                r[i] = int(-1);
                a.push(r);
                b.push(int(5));
            }
            let poly = HPolyhedron::new(a.clone(), b.clone());
            let c: Vec<Rat> = (0..n).map(|_| int(rng.gen_range(-5..=5))).collect();
            let verts = enumerate_vertices_oracle(&poly).unwrap();
            let best = verts.iter().map(|v| crate::exactmath::linalg::dot(&c, v)).min().unwrap();
            let mut p = LPProblem::new(ObjSense::Min);
            for (j, cj) in c.iter().enumerate() {
                p.add_free(format!("x{j}"), cj.clone());
            }
            for (row, bi) in a.iter().zip(&b) {
                p.add_row(row.iter().cloned().enumerate().collect(), Sense::Le, bi.clone(), "r");
            }
            let rule = if checked % 2 == 0 { PivotRule::Bland } else { PivotRule::Dantzig };
            let s = lp_solve_with(&p, rule);
            assert_eq!(s.status, LpStatus::Optimal);
            assert_eq!(s.value, best);
            assert!(p.is_feasible(&s.primal));
            // dual feasibility for a min problem with ≤ rows: y ≤ 0, Aᵀy = c
            for j in 0..n {
                let mut col = Rat::zero();
                for (i, row) in a.iter().enumerate() {
                    assert!(!s.dual[i].is_positive());
                    col += &s.dual[i] * &row[j];
                }
                assert_eq!(col, c[j]);
            }
            checked += 1;
        }
    }

    #[test]
    fn lp_text_export() {
        let mut p = LPProblem::new(ObjSense::Min);
        let x = p.add_nonneg("x", rat(1, 3));
        p.add_row(vec![(x, rat(5, 2))], Sense::Ge, int(1), "lower");
        let s = p.to_lp_text();
        assert!(s.contains("Minimize"));
        assert!(s.contains("2.5 x_0 >= 1"));
        assert!(s.contains("1/3 x_0"));
    }
}
