//! LP relaxations of disjoint bilinear (DBP) and affine-convex (AC) programs.
//!
//! The convex set `C` of the AC form is a polytope `Py`, so every model here
//! is an [`LPProblem`]. Rows carry provenance tags that survive into reports.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd_engine::{dd_run, DDError, DDOptions, DDRun, DDState, InitMode, StepCase};
use crate::exactmath::{fmt_rat, rat_serde, ratmat_serde, ratvec_serde, Mono, Poly, Rat, RatFun};
use crate::lp_exact::{lp_solve, LPProblem, LPSolution, LpStatus, ObjSense, Sense};
use crate::polyhedra::{combinations, enumerate_vertices_oracle, HPolyhedron, PolytopeJson};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RelaxError {
    #[error("{0} is unbounded")]
    UnboundedInput(String),
    #[error("{0} is empty")]
    EmptyInput(String),
    #[error("level {k} is too low: {}", kbar_text(*.kbar))]
    LevelTooLow { k: usize, kbar: Option<usize> },
    #[error("P is not the unit box")]
    NotBox,
    #[error("point is not feasible: {0}")]
    InfeasiblePoint(String),
    #[error("bad instance: {0}")]
    BadInstance(String),
    #[error(transparent)]
    DD(#[from] DDError),
}

fn kbar_text(kbar: Option<usize>) -> String {
    match kbar {
        Some(b) => format!("first admissible level is k̄ = {b}"),
        None => "no admissible level exists for this order".into(),
    }
}

fn zero_rat() -> Rat {
    Rat::zero()
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// `min xᵀQy + cxᵀx + cyᵀy + c0` over `x ∈ P`, `y ∈ Py`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DBPInstance {
    pub q: Vec<Vec<Rat>>,
    pub cx: Vec<Rat>,
    pub cy: Vec<Rat>,
    pub c0: Rat,
    pub p: HPolyhedron,
    pub py: HPolyhedron,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DbpJson {
    #[serde(rename = "Q", with = "ratmat_serde")]
    q: Vec<Vec<Rat>>,
    #[serde(default, with = "ratvec_serde")]
    cx: Vec<Rat>,
    #[serde(default, with = "ratvec_serde")]
    cy: Vec<Rat>,
    #[serde(default = "zero_rat", with = "rat_serde")]
    c0: Rat,
    #[serde(rename = "P")]
    p: PolytopeJson,
    #[serde(rename = "Py")]
    py: PolytopeJson,
}

impl DBPInstance {
    pub fn new(q: Vec<Vec<Rat>>, cx: Vec<Rat>, cy: Vec<Rat>, c0: Rat, p: HPolyhedron, py: HPolyhedron) -> Result<Self, RelaxError> {
        let (n, ny) = (p.n, py.n);
        let cx = if cx.is_empty() { vec![Rat::zero(); n] } else { cx };
        let cy = if cy.is_empty() { vec![Rat::zero(); ny] } else { cy };
        if q.len() != n || q.iter().any(|r| r.len() != ny) {
            return Err(RelaxError::BadInstance(format!("Q must be {n}×{ny}")));
        }
        if cx.len() != n || cy.len() != ny {
            return Err(RelaxError::BadInstance("cx/cy length mismatch".into()));
        }
        Ok(DBPInstance { q, cx, cy, c0, p, py })
    }

    pub fn n(&self) -> usize {
        self.p.n
    }

    pub fn ny(&self) -> usize {
        self.py.n
    }

    pub fn objective(&self, x: &[Rat], y: &[Rat]) -> Rat {
        let mut v = self.c0.clone();
        for j in 0..self.n() {
            v += &self.cx[j] * &x[j];
            for l in 0..self.ny() {
                v += &self.q[j][l] * &x[j] * &y[l];
            }
        }
        for l in 0..self.ny() {
            v += &self.cy[l] * &y[l];
        }
        v
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let j: DbpJson = serde_json::from_str(s).map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
        let p = j.p.to_hpoly().map_err(|e| e.to_string())?;
        let py = j.py.to_hpoly().map_err(|e| e.to_string())?;
        DBPInstance::new(j.q, j.cx, j.cy, j.c0, p, py).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DbpJson {
            q: self.q.clone(),
            cx: self.cx.clone(),
            cy: self.cy.clone(),
            c0: self.c0.clone(),
            p: self.p.to_json(),
            py: self.py.to_json(),
        })
        .expect("serializable")
    }

    /// The same objective written as `g0(y) + Σ x_j g_j(y)` with affine `g`.
    pub fn as_ac(&self) -> ACInstance {
        let mut g = Vec::with_capacity(self.n() + 1);
        let mut g0 = vec![self.c0.clone()];
        g0.extend(self.cy.iter().cloned());
        g.push(GFun::affine(g0));
        for j in 0..self.n() {
            let mut gj = vec![self.cx[j].clone()];
            gj.extend(self.q[j].iter().cloned());
            g.push(GFun::affine(gj));
        }
        ACInstance { p: self.p.clone(), py: self.py.clone(), g, varrho: self.n() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GKind {
    Affine,
    MaxAffine,
}

/// `max_p (p_0 + p_{1:}ᵀ y)`; a single piece when affine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GFun {
    #[serde(rename = "type")]
    pub kind: GKind,
    #[serde(with = "ratmat_serde")]
    pub pieces: Vec<Vec<Rat>>,
}

impl GFun {
    pub fn affine(coeffs: Vec<Rat>) -> Self {
        GFun { kind: GKind::Affine, pieces: vec![coeffs] }
    }

    pub fn max_affine(pieces: Vec<Vec<Rat>>) -> Self {
        GFun { kind: GKind::MaxAffine, pieces }
    }

    pub fn eval(&self, y: &[Rat]) -> Rat {
        self.pieces
            .iter()
            .map(|p| p[1..].iter().zip(y).fold(p[0].clone(), |acc, (a, b)| acc + a * b))
            .max()
            .expect("at least one piece")
    }
}

/// `min g0(y) + Σ x_i g_i(y)` over `x ∈ P`, `y ∈ Py`; `g_1..g_ϱ` are affine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ACInstance {
    pub p: HPolyhedron,
    pub py: HPolyhedron,
    pub g: Vec<GFun>,
    pub varrho: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AcJson {
    #[serde(rename = "P")]
    p: PolytopeJson,
    #[serde(rename = "Py")]
    py: PolytopeJson,
    g: Vec<GFun>,
}

impl ACInstance {
    /// Checks shapes and that the non-affine `g_i` form a suffix.
    pub fn new(p: HPolyhedron, py: HPolyhedron, g: Vec<GFun>) -> Result<Self, RelaxError> {
        if g.len() != p.n + 1 {
            return Err(RelaxError::BadInstance(format!("need {} functions g, got {}", p.n + 1, g.len())));
        }
        for (i, f) in g.iter().enumerate() {
            if f.pieces.is_empty() || f.pieces.iter().any(|pc| pc.len() != py.n + 1) {
                return Err(RelaxError::BadInstance(format!("g{i} pieces must have length {}", py.n + 1)));
            }
            if f.kind == GKind::Affine && f.pieces.len() != 1 {
                return Err(RelaxError::BadInstance(format!("affine g{i} has several pieces")));
            }
        }
        let varrho = g[1..].iter().take_while(|f| f.kind == GKind::Affine).count();
        if g[1 + varrho..].iter().any(|f| f.kind == GKind::Affine) {
            return Err(RelaxError::BadInstance("affine g_i must precede the max-affine ones".into()));
        }
        Ok(ACInstance { p, py, g, varrho })
    }

    pub fn n(&self) -> usize {
        self.p.n
    }

    pub fn objective(&self, x: &[Rat], y: &[Rat]) -> Rat {
        let mut v = self.g[0].eval(y);
        for (j, xj) in x.iter().enumerate() {
            v += xj * self.g[j + 1].eval(y);
        }
        v
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let j: AcJson = serde_json::from_str(s).map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
        let p = j.p.to_hpoly().map_err(|e| e.to_string())?;
        let py = j.py.to_hpoly().map_err(|e| e.to_string())?;
        ACInstance::new(p, py, j.g).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(AcJson { p: self.p.to_json(), py: self.py.to_json(), g: self.g.clone() }).expect("serializable")
    }

    fn init_mode(&self) -> InitMode {
        if self.varrho == self.n() {
            InitMode::Default
        } else {
            InitMode::PartialOrthant(self.varrho)
        }
    }
}

/// Errors out unless `p` is nonempty and bounded.
pub fn check_bounded(p: &HPolyhedron, what: &str) -> Result<(), RelaxError> {
    for i in 0..p.n {
        for sense in [ObjSense::Min, ObjSense::Max] {
            let mut lp = LPProblem::new(sense);
            let x: Vec<usize> = (0..p.n).map(|j| lp.add_free(format!("x{j}"), if j == i { Rat::one() } else { Rat::zero() })).collect();
            add_hpoly_rows(&mut lp, &x, p, what);
            match lp_solve(&lp).status {
                LpStatus::Infeasible => return Err(RelaxError::EmptyInput(what.into())),
                LpStatus::Unbounded => return Err(RelaxError::UnboundedInput(what.into())),
                LpStatus::Optimal => {}
            }
        }
    }
    Ok(())
}

fn add_hpoly_rows(lp: &mut LPProblem, vars: &[usize], p: &HPolyhedron, tag: &str) {
    for (r, (a, b)) in p.a.iter().zip(&p.b).enumerate() {
        let coeffs = vars.iter().zip(a).map(|(&v, c)| (v, c.clone())).collect();
        lp.add_row(coeffs, Sense::Le, b.clone(), format!("{tag}{r}"));
    }
}

// ---------------------------------------------------------------------------
// Column models: hull LP and the level-k hierarchy
// ---------------------------------------------------------------------------

/// LP over scaled copies `(λ_i, y^i) ∈ λ_i·(1 × Py)` of generator columns.
#[derive(Debug, Clone)]
pub struct ColumnLp {
    pub lp: LPProblem,
    /// Columns in `(x0; x)`; `x0 = 1` for vertices, `0` for rays.
    pub columns: Vec<Vec<Rat>>,
    pub lambda: Vec<usize>,
    /// `ycol[i][l]` is `y^i_l`.
    pub ycol: Vec<Vec<usize>>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    /// `py_rows[i][r]`: row scaling `Py` row `r` by column `i`.
    pub py_rows: Vec<Vec<usize>>,
    /// Linear precision rows `Σ_i R_{j,i} λ_i = (1; x)_j`.
    pub lin_rows: Vec<usize>,
    pub level: usize,
    pub order: Vec<usize>,
}

fn columns_lp(columns: &[Vec<Rat>], g: &[GFun], py: &HPolyhedron) -> Result<ColumnLp, RelaxError> {
    let n = g.len() - 1;
    let ny = py.n;
    let mut lp = LPProblem::new(ObjSense::Min);
    let x: Vec<usize> = (1..=n).map(|j| lp.add_free(format!("x{j}"), Rat::zero())).collect();
    let y: Vec<usize> = (1..=ny).map(|l| lp.add_free(format!("y{l}"), Rat::zero())).collect();
    let mut lambda = Vec::new();
    let mut ycol = Vec::new();
    let mut py_rows = Vec::new();
    for (i, col) in columns.iter().enumerate() {
        let lam = lp.add_nonneg(format!("lambda{}", i + 1), Rat::zero());
        let ys: Vec<usize> = (1..=ny).map(|l| lp.add_free(format!("Y{l}_{}", i + 1), Rat::zero())).collect();
        let mut rows = Vec::new();
        for (r, (a, b)) in py.a.iter().zip(&py.b).enumerate() {
            let mut coeffs = vec![(lam, b.clone())];
            coeffs.extend(ys.iter().zip(a).map(|(&v, c)| (v, -c)));
            rows.push(lp.add_row(coeffs, Sense::Ge, Rat::zero(), format!("py{r}[{}]", i + 1)));
        }
        for (j, rj) in col.iter().enumerate() {
            if rj.is_zero() {
                continue;
            }
            match g[j].kind {
                GKind::Affine => {
                    let pc = &g[j].pieces[0];
                    lp.objective[lam] += rj * &pc[0];
                    for (l, &v) in ys.iter().enumerate() {
                        lp.objective[v] += rj * &pc[l + 1];
                    }
                }
                GKind::MaxAffine => {
                    if rj.is_negative() {
                        return Err(RelaxError::BadInstance(format!("column {} has negative entry for max-affine g{j}", i + 1)));
                    }
                    let t = lp.add_free(format!("t{j}_{}", i + 1), rj.clone());
                    for (pi, pc) in g[j].pieces.iter().enumerate() {
                        let mut coeffs = vec![(t, Rat::one()), (lam, -&pc[0])];
                        coeffs.extend(ys.iter().zip(&pc[1..]).map(|(&v, c)| (v, -c)));
                        lp.add_row(coeffs, Sense::Ge, Rat::zero(), format!("epi{j}.{pi}[{}]", i + 1));
                    }
                }
            }
        }
        lambda.push(lam);
        ycol.push(ys);
        py_rows.push(rows);
    }
    let mut lin_rows = Vec::new();
    let coeffs = lambda.iter().zip(columns).map(|(&v, c)| (v, c[0].clone())).collect();
    lin_rows.push(lp.add_row(coeffs, Sense::Eq, Rat::one(), "sum_lambda"));
    for j in 1..=n {
        let mut coeffs: Vec<(usize, Rat)> = lambda.iter().zip(columns).map(|(&v, c)| (v, c[j].clone())).collect();
        coeffs.push((x[j - 1], -Rat::one()));
        lin_rows.push(lp.add_row(coeffs, Sense::Eq, Rat::zero(), format!("x{j}")));
    }
    for l in 0..ny {
        let mut coeffs: Vec<(usize, Rat)> = ycol.iter().map(|ys| (ys[l], Rat::one())).collect();
        coeffs.push((y[l], -Rat::one()));
        lp.add_row(coeffs, Sense::Eq, Rat::zero(), format!("y{}", l + 1));
    }
    Ok(ColumnLp { lp, columns: columns.to_vec(), lambda, ycol, x, y, py_rows, lin_rows, level: 0, order: vec![] })
}

/// Convex-hull reformulation over the vertices of `P` (vertex oracle order).
pub fn build_hull_lp(inst: &DBPInstance) -> Result<ColumnLp, RelaxError> {
    check_bounded(&inst.p, "P")?;
    check_bounded(&inst.py, "Py")?;
    let verts = enumerate_vertices_oracle(&inst.p).map_err(|e| RelaxError::BadInstance(e.to_string()))?;
    hull_lp_over(inst, &verts)
}

/// Hull LP with a caller-chosen vertex order.
pub fn hull_lp_over(inst: &DBPInstance, vertices: &[Vec<Rat>]) -> Result<ColumnLp, RelaxError> {
    let cols: Vec<Vec<Rat>> = vertices
        .iter()
        .map(|v| std::iter::once(Rat::one()).chain(v.iter().cloned()).collect())
        .collect();
    columns_lp(&cols, &inst.as_ac().g, &inst.py)
}

/// Brute-force optimum over vertex pairs of `P × Py`.
pub fn dbp_vertex_oracle(inst: &DBPInstance) -> Result<Rat, RelaxError> {
    let vp = enumerate_vertices_oracle(&inst.p).map_err(|e| RelaxError::BadInstance(e.to_string()))?;
    let vy = enumerate_vertices_oracle(&inst.py).map_err(|e| RelaxError::BadInstance(e.to_string()))?;
    vp.iter()
        .flat_map(|x| vy.iter().map(move |y| inst.objective(x, y)))
        .min()
        .ok_or_else(|| RelaxError::EmptyInput("P × Py".into()))
}

/// Brute-force AC optimum: for each vertex of `P`, a convex LP in `y`.
pub fn ac_vertex_oracle(inst: &ACInstance) -> Result<Rat, RelaxError> {
    let vp = enumerate_vertices_oracle(&inst.p).map_err(|e| RelaxError::BadInstance(e.to_string()))?;
    let mut best: Option<Rat> = None;
    for v in &vp {
        let mut col = vec![Rat::one()];
        col.extend(v.iter().cloned());
        let m = columns_lp(&[col], &inst.g, &inst.py)?;
        let s = lp_solve(&m.lp);
        if s.status != LpStatus::Optimal {
            return Err(RelaxError::BadInstance(format!("vertex subproblem is {:?}", s.status)));
        }
        if best.as_ref().is_none_or(|b| s.value < *b) {
            best = Some(s.value);
        }
    }
    best.ok_or_else(|| RelaxError::EmptyInput("P".into()))
}

/// Instance accepted by [`build_level_lp`].
#[derive(Debug, Clone, Copy)]
pub enum LevelInput<'a> {
    Dbp(&'a DBPInstance),
    Ac(&'a ACInstance),
}

impl LevelInput<'_> {
    fn p(&self) -> &HPolyhedron {
        match self {
            LevelInput::Dbp(d) => &d.p,
            LevelInput::Ac(a) => &a.p,
        }
    }

    fn run(&self, order: &[usize]) -> Result<DDRun, RelaxError> {
        let init = match self {
            LevelInput::Dbp(_) => InitMode::Default,
            LevelInput::Ac(a) => a.init_mode(),
        };
        Ok(dd_run(self.p(), order, DDOptions { init, prune: false })?)
    }

    /// Bounded `P^t` for DBP; empty lineality for AC.
    fn admissible(&self, st: &DDState) -> bool {
        match self {
            LevelInput::Dbp(_) => st.gen.l.is_empty() && !st.gen.r.is_empty() && st.gen.r.iter().all(|r| r[0].is_positive()),
            LevelInput::Ac(_) => st.gen.l.is_empty() && !st.gen.r.is_empty(),
        }
    }
}

/// First admissible level along `order`.
pub fn first_admissible_level(inst: LevelInput, order: &[usize]) -> Result<Option<usize>, RelaxError> {
    let run = inst.run(order)?;
    Ok(run.levels.iter().position(|s| inst.admissible(s)))
}

/// Level-`k` relaxation over the generators of `P^k` along `order`.
pub fn build_level_lp(inst: LevelInput, k: usize, order: &[usize]) -> Result<ColumnLp, RelaxError> {
    let run = inst.run(order)?;
    if k >= run.levels.len() {
        return Err(RelaxError::BadInstance(format!("level {k} exceeds the order length {}", order.len())));
    }
    let st = &run.levels[k];
    if !inst.admissible(st) {
        let kbar = run.levels.iter().position(|s| inst.admissible(s));
        return Err(RelaxError::LevelTooLow { k, kbar });
    }
    let (cols, g, py) = match inst {
        LevelInput::Dbp(d) => {
            let cols: Vec<Vec<Rat>> = st.gen.r.iter().map(|r| r.iter().map(|v| v / &r[0]).collect()).collect();
            (cols, d.as_ac().g, &d.py)
        }
        LevelInput::Ac(a) => (st.gen.r.clone(), a.g.clone(), &a.py),
    };
    let mut m = columns_lp(&cols, &g, py)?;
    m.level = k;
    m.order = order[..k].to_vec();
    Ok(m)
}

/// `min` with fixing rows `x = x̄`, `y = ȳ`: the convex envelope at `(x̄, ȳ)`.
pub fn envelope_eval(inst: &DBPInstance, xbar: &[Rat], ybar: &[Rat]) -> Result<Rat, RelaxError> {
    if xbar.len() != inst.n() || !inst.p.contains(xbar) {
        return Err(RelaxError::InfeasiblePoint("x̄ ∉ P".into()));
    }
    if ybar.len() != inst.ny() || !inst.py.contains(ybar) {
        return Err(RelaxError::InfeasiblePoint("ȳ ∉ Py".into()));
    }
    let mut m = build_hull_lp(inst)?;
    for (j, v) in xbar.iter().enumerate() {
        m.lp.add_row(vec![(m.x[j], Rat::one())], Sense::Eq, v.clone(), format!("fix_x{}", j + 1));
    }
    for (l, v) in ybar.iter().enumerate() {
        m.lp.add_row(vec![(m.y[l], Rat::one())], Sense::Eq, v.clone(), format!("fix_y{}", l + 1));
    }
    let s = lp_solve(&m.lp);
    match s.status {
        LpStatus::Optimal => Ok(s.value),
        st => Err(RelaxError::BadInstance(format!("envelope LP is {st:?}"))),
    }
}

// ---------------------------------------------------------------------------
// RLT baselines
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RltFlavor {
    Level1General,
    BoxLevel(usize),
}

/// Products of `P` rows with `Py` rows plus the rows themselves, over
/// `x`, `y` and `w_{jl} = x_j y_l` (variables in that order).
pub fn rlt_level1(inst: &DBPInstance) -> LPProblem {
    let (n, ny) = (inst.n(), inst.ny());
    let mut lp = LPProblem::new(ObjSense::Min);
    let x: Vec<usize> = (1..=n).map(|j| lp.add_free(format!("x{j}"), inst.cx[j - 1].clone())).collect();
    let y: Vec<usize> = (1..=ny).map(|l| lp.add_free(format!("y{l}"), inst.cy[l - 1].clone())).collect();
    let mut w = vec![Vec::new(); n];
    for (j, wj) in w.iter_mut().enumerate() {
        for l in 0..ny {
            wj.push(lp.add_free(format!("xy{}{}", j + 1, l + 1), inst.q[j][l].clone()));
        }
    }
    lp.obj_const = inst.c0.clone();
    add_hpoly_rows(&mut lp, &x, &inst.p, "P");
    add_hpoly_rows(&mut lp, &y, &inst.py, "Py");
    // (b_r − a_r x)(d_s − c_s y) ≥ 0
    for (r, (a, b)) in inst.p.a.iter().zip(&inst.p.b).enumerate() {
        for (s, (c, d)) in inst.py.a.iter().zip(&inst.py.b).enumerate() {
            let mut coeffs = Vec::new();
            for j in 0..n {
                coeffs.push((x[j], -(&a[j] * d)));
            }
            for l in 0..ny {
                coeffs.push((y[l], -(b * &c[l])));
            }
            for j in 0..n {
                for l in 0..ny {
                    coeffs.push((w[j][l], &a[j] * &c[l]));
                }
            }
            lp.add_row(coeffs, Sense::Ge, -(b * d), format!("P{r}*Py{s}"));
        }
    }
    lp
}

/// Affine row `c + aᵀx + dᵀy ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRow {
    pub c: Rat,
    pub a: Vec<Rat>,
    pub d: Vec<Rat>,
}

/// Level-`k` RLT over `[0,1]^n`: variables are multilinear monomials `x^S`
/// and `y_l x^S`, keyed by `(S, l)`.
#[derive(Debug, Clone)]
pub struct BoxRlt {
    pub lp: LPProblem,
    pub vars: BTreeMap<(Vec<usize>, Option<usize>), usize>,
}

impl BoxRlt {
    pub fn var(&self, s: &[usize], l: Option<usize>) -> Option<usize> {
        self.vars.get(&(s.to_vec(), l)).copied()
    }
}

type Sparse = BTreeMap<(Vec<usize>, Option<usize>), Rat>;

fn union(s: &[usize], extra: usize) -> Vec<usize> {
    let mut v = s.to_vec();
    if !v.contains(&extra) {
        v.push(extra);
        v.sort_unstable();
    }
    v
}

/// Product-factor RLT for `[0,1]^n` with mixed rows and a bilinear objective
/// `c0 + cxᵀx + cyᵀy + xᵀQy`.
#[allow(clippy::too_many_arguments)]
pub fn box_rlt_lp(n: usize, ny: usize, rows: &[MixedRow], q: &[Vec<Rat>], cx: &[Rat], cy: &[Rat], c0: &Rat, k: usize) -> BoxRlt {
    assert!(k >= 1 && k <= n, "box RLT level must lie in 1..=n");
    let mut out = BoxRlt { lp: LPProblem::new(ObjSense::Min), vars: BTreeMap::new() };
    out.lp.obj_const = c0.clone();
    let var = |out: &mut BoxRlt, s: &[usize], l: Option<usize>| -> usize {
        if let Some(&v) = out.vars.get(&(s.to_vec(), l)) {
            return v;
        }
        let name = format!(
            "{}x[{}]",
            l.map(|l| format!("y{}", l + 1)).unwrap_or_default(),
            s.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
        );
        let v = out.lp.add_free(name, Rat::zero());
        out.vars.insert((s.to_vec(), l), v);
        v
    };
    let emit = |out: &mut BoxRlt, expr: &Sparse, tag: String| {
        let mut coeffs = Vec::new();
        let mut rhs = Rat::zero();
        for ((s, l), c) in expr {
            if s.is_empty() && l.is_none() {
                rhs -= c;
            } else {
                coeffs.push((var(out, s, *l), c.clone()));
            }
        }
        out.lp.add_row(coeffs, Sense::Ge, rhs, tag);
    };
    for t in combinations(n, k) {
        for mask in 0..(1usize << k) {
            let s: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| t[b]).collect();
            let rest: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 0).map(|b| t[b]).collect();
            // x^S (1−x)^{T∖S} = Σ_{S'⊆T∖S} (−1)^{|S'|} x^{S∪S'}
            let mut factor: BTreeMap<Vec<usize>, Rat> = BTreeMap::new();
            for sub in 0..(1usize << rest.len()) {
                let mut u = s.clone();
                let mut sign = Rat::one();
                for (b, &i) in rest.iter().enumerate() {
                    if sub >> b & 1 == 1 {
                        u.push(i);
                        sign = -sign;
                    }
                }
                u.sort_unstable();
                *factor.entry(u).or_insert_with(Rat::zero) += sign;
            }
            let label = format!(
                "F[{}|{}]",
                s.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
                rest.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
            );
            let base: Sparse = factor.iter().map(|(u, c)| ((u.clone(), None), c.clone())).collect();
            emit(&mut out, &base, label.clone());
            for (ri, row) in rows.iter().enumerate() {
                let mut expr: Sparse = BTreeMap::new();
                for (u, fc) in &factor {
                    if !row.c.is_zero() {
                        *expr.entry((u.clone(), None)).or_insert_with(Rat::zero) += fc * &row.c;
                    }
                    for (j, a) in row.a.iter().enumerate() {
                        if !a.is_zero() {
                            *expr.entry((union(u, j), None)).or_insert_with(Rat::zero) += fc * a;
                        }
                    }
                    for (l, d) in row.d.iter().enumerate() {
                        if !d.is_zero() {
                            *expr.entry((u.clone(), Some(l))).or_insert_with(Rat::zero) += fc * d;
                        }
                    }
                }
                expr.retain(|_, v| !v.is_zero());
                emit(&mut out, &expr, format!("{label}*row{ri}"));
            }
        }
    }
    for j in 0..n {
        let v = var(&mut out, &[j], None);
        out.lp.objective[v] += &cx[j];
        for l in 0..ny {
            if !q[j][l].is_zero() {
                let v = var(&mut out, &[j], Some(l));
                out.lp.objective[v] += &q[j][l];
            }
        }
    }
    for l in 0..ny {
        let v = var(&mut out, &[], Some(l));
        out.lp.objective[v] += &cy[l];
    }
    out
}

/// Rows of `P` as `c + aᵀx + dᵀy ≥ 0` with `d = 0`, and of `Py` with `a = 0`.
pub fn mixed_rows_y(py: &HPolyhedron, n: usize) -> Vec<MixedRow> {
    py.a
        .iter()
        .zip(&py.b)
        .map(|(a, b)| MixedRow { c: b.clone(), a: vec![Rat::zero(); n], d: a.iter().map(|v| -v).collect() })
        .collect()
}

pub fn build_rlt_baseline(inst: &DBPInstance, flavor: RltFlavor) -> Result<LPProblem, RelaxError> {
    match flavor {
        RltFlavor::Level1General => Ok(rlt_level1(inst)),
        RltFlavor::BoxLevel(k) => {
            if !is_unit_box(&inst.p) {
                return Err(RelaxError::NotBox);
            }
            if k == 0 || k > inst.n() {
                return Err(RelaxError::BadInstance(format!("box level {k} outside 1..={}", inst.n())));
            }
            let rows = mixed_rows_y(&inst.py, inst.n());
            Ok(box_rlt_lp(inst.n(), inst.ny(), &rows, &inst.q, &inst.cx, &inst.cy, &inst.c0, k).lp)
        }
    }
}

/// Whether the rows of `p` are exactly `0 ≤ x_i ≤ 1` up to order and positive scaling.
pub fn is_unit_box(p: &HPolyhedron) -> bool {
    let mut want: BTreeSet<(usize, bool)> = (0..p.n).flat_map(|i| [(i, false), (i, true)]).collect();
    for (a, b) in p.a.iter().zip(&p.b) {
        let nz: Vec<usize> = (0..p.n).filter(|&j| !a[j].is_zero()).collect();
        if nz.len() != 1 {
            return false;
        }
        let i = nz[0];
        let upper = a[i].is_positive();
        let ok = if upper { b == &a[i] } else { b.is_zero() };
        if !ok || !want.remove(&(i, upper)) {
            return false;
        }
    }
    want.is_empty()
}

/// Pairwise products `ℓ_r ℓ_s ≥ 0` (`r ≤ s`) of the rows of `p`, linearized
/// over `x_1..x_n` followed by `x_{ij}` for `i ≤ j`.
pub fn rlt_self_products(p: &HPolyhedron) -> LPProblem {
    let n = p.n;
    let mut lp = LPProblem::new(ObjSense::Min);
    let x: Vec<usize> = (1..=n).map(|j| lp.add_free(format!("x{j}"), Rat::zero())).collect();
    let mut xx = vec![vec![usize::MAX; n]; n];
    for i in 0..n {
        for j in i..n {
            xx[i][j] = lp.add_free(format!("x{}{}", i + 1, j + 1), Rat::zero());
            xx[j][i] = xx[i][j];
        }
    }
    // ℓ_r = b_r − a_r x
    for r in 0..p.m() {
        for s in r..p.m() {
            let (ar, br, as_, bs) = (&p.a[r], &p.b[r], &p.a[s], &p.b[s]);
            let mut coeffs = Vec::new();
            for j in 0..n {
                coeffs.push((x[j], -(br * &as_[j]) - bs * &ar[j]));
            }
            for i in 0..n {
                for j in 0..n {
                    coeffs.push((xx[i][j], &ar[i] * &as_[j]));
                }
            }
            lp.add_row(coeffs, Sense::Ge, -(br * bs), format!("l{r}*l{s}"));
        }
    }
    lp
}

// ---------------------------------------------------------------------------
// Ledger chains
// ---------------------------------------------------------------------------

/// Feasibility LP at a fixed point `x̄`: one `(θ^t, μ^t ≥ 0)` block per level,
/// chained by the ledger relations, with level 0 fixed to its value at `(1; x̄)`.
/// Requires an unpruned run.
pub fn ledger_chain_lp(run: &DDRun, xbar: &[Rat]) -> LPProblem {
    assert!(!run.options.prune, "ledger chains need the unpruned run");
    let mut lp = LPProblem::new(ObjSense::Min);
    let mut point = vec![Rat::one()];
    point.extend(xbar.iter().cloned());
    let block = |lp: &mut LPProblem, st: &DDState, t: usize| -> (Vec<usize>, Vec<usize>) {
        let th = (0..st.q()).map(|h| lp.add_free(format!("theta{t}_{h}"), Rat::zero())).collect();
        let mu: Vec<usize> = (0..st.p()).map(|i| lp.add_free(format!("mu{t}_{i}"), Rat::zero())).collect();
        // Explicit sign rows keep Farkas certificates over free variables.
        for (i, &v) in mu.iter().enumerate() {
            lp.add_row(vec![(v, Rat::one())], Sense::Ge, Rat::zero(), format!("mu{t}_{i}>=0"));
        }
        (th, mu)
    };
    let Some(first) = run.steps.first() else { return lp };
    let (mut th, mut mu) = block(&mut lp, &first.before, 0);
    for (h, v) in th.iter().enumerate() {
        lp.add_row(vec![(*v, Rat::one())], Sense::Eq, first.before.theta[h].eval(&point), format!("theta0_{h}"));
    }
    for (i, v) in mu.iter().enumerate() {
        let val = first.before.table().eval(&first.before.mu[i], &point).expect("level-0 coordinates are polynomial");
        lp.add_row(vec![(*v, Rat::one())], Sense::Eq, val, format!("mu0_{i}"));
    }
    for (t, step) in run.steps.iter().enumerate() {
        let (nth, nmu) = block(&mut lp, &step.after, t + 1);
        let e = &step.entry;
        if e.case == StepCase::Ray && e.npos.is_empty() {
            for (s, &i) in e.nzero.iter().enumerate() {
                lp.add_row(vec![(mu[i], Rat::one()), (nmu[s], -Rat::one())], Sense::Eq, Rat::zero(), format!("keep{}", t + 1));
            }
            for &j in &e.nneg {
                lp.add_row(vec![(mu[j], Rat::one())], Sense::Eq, Rat::zero(), format!("zero{}", t + 1));
            }
            for (a, b) in th.iter().zip(&nth) {
                lp.add_row(vec![(*a, Rat::one()), (*b, -Rat::one())], Sense::Eq, Rat::zero(), format!("theta{}", t + 1));
            }
        } else {
            let q0 = th.len();
            for (old, row) in e.m_rows(nth.len()) {
                let lhs = if old < q0 { th[old] } else { mu[old - q0] };
                let mut coeffs = vec![(lhs, Rat::one())];
                for (c, v) in row.iter().enumerate() {
                    let var = if c < nth.len() { nth[c] } else { nmu[c - nth.len()] };
                    coeffs.push((var, -v));
                }
                lp.add_row(coeffs, Sense::Eq, Rat::zero(), format!("ledger{}_{old}", t + 1));
            }
        }
        th = nth;
        mu = nmu;
    }
    lp
}

// ---------------------------------------------------------------------------
// Linear part of the tightened hierarchy
// ---------------------------------------------------------------------------

/// Variable `w_{d,α,ℓ}` standing for `y_ℓ x^α / d(x)` (`ℓ = None`: no `y`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WKey {
    /// Primitive denominator, positive on the interior of `P`, over `(x0; x)`
    /// with `x0` absent.
    pub den: Poly,
    pub alpha: Mono,
    pub ell: Option<usize>,
}

/// Linear expression over model variables plus a constant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Lin {
    terms: BTreeMap<usize, Rat>,
    constant: Rat,
}

impl Lin {
    fn add_scaled(&mut self, other: &Lin, c: &Rat) {
        if c.is_zero() {
            return;
        }
        for (v, a) in &other.terms {
            let e = self.terms.entry(*v).or_insert_with(Rat::zero);
            *e += a * c;
            if e.is_zero() {
                self.terms.remove(v);
            }
        }
        self.constant += &other.constant * c;
    }

    fn var(v: usize) -> Lin {
        Lin { terms: BTreeMap::from([(v, Rat::one())]), constant: Rat::zero() }
    }
}

/// Model options for [`build_de_linear_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DeOptions {
    /// Largest `|Θ|` in the constraint-product sign rows; defaults to the
    /// largest numerator degree among the coordinates.
    pub theta_cap: Option<usize>,
    /// Worker threads for the per-order double description runs.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct RelaxModel {
    pub level: usize,
    pub orders: Vec<Vec<usize>>,
    pub lp: LPProblem,
    pub wkeys: Vec<WKey>,
    pub wvars: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub theta_cap: usize,
    /// Distinct normalized denominators, in first-use order.
    pub denominators: Vec<Poly>,
}

impl RelaxModel {
    pub fn w(&self, key: &WKey) -> Option<usize> {
        self.wkeys.iter().position(|k| k == key).map(|i| self.wvars[i])
    }
}

struct DeBuilder {
    nv: usize,
    lp: LPProblem,
    index: HashMap<WKey, usize>,
    keys: Vec<WKey>,
    vars: Vec<usize>,
    dens: Vec<Poly>,
    den_ids: HashMap<Poly, usize>,
    xref: Vec<Rat>,
    seen_rows: HashSet<(Vec<(usize, Rat)>, Rat, u8)>,
}

fn dehom_poly(p: &Poly) -> Poly {
    p.substitute(0, &Rat::one())
}

/// `num/den` rescaled so the denominator is primitive and positive at `xref`.
pub fn normalize_denominator(num: &Poly, den: &Poly, xref: &[Rat]) -> (Poly, Poly) {
    let (c, mut prim) = den.primitive();
    let mut c = c;
    if prim.eval(xref).is_negative() {
        prim = -&prim;
        c = -c;
    }
    (num.scale(&c.recip()), prim)
}

/// Coefficients of `num/den` against the denominator `target`
/// (`num/den = Σ c_α x^α / target`); `None` if `target/den` is not polynomial.
pub fn linearize_over(f: &RatFun, target: &Poly) -> Option<Vec<(Mono, Rat)>> {
    let scaled = &f.num().clone() * target;
    let q = scaled.exact_div(f.den())?;
    Some(q.terms().map(|(m, c)| (m.clone(), c.clone())).collect())
}

impl DeBuilder {
    fn new(n: usize, xref: Vec<Rat>) -> Self {
        DeBuilder {
            nv: n + 1,
            lp: LPProblem::new(ObjSense::Min),
            index: HashMap::new(),
            keys: Vec::new(),
            vars: Vec::new(),
            dens: Vec::new(),
            den_ids: HashMap::new(),
            xref,
            seen_rows: HashSet::new(),
        }
    }

    fn den_id(&mut self, d: &Poly) -> usize {
        if let Some(&i) = self.den_ids.get(d) {
            return i;
        }
        self.dens.push(d.clone());
        self.den_ids.insert(d.clone(), self.dens.len() - 1);
        self.dens.len() - 1
    }

    fn w(&mut self, key: WKey) -> usize {
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let d = self.den_id(&key.den);
        let exps: Vec<String> = key.alpha.0[1..].iter().map(|e| e.to_string()).collect();
        let name = format!("w[d{d};{}{}]", exps.join(","), key.ell.map(|l| format!(";y{}", l + 1)).unwrap_or_default());
        let v = self.lp.add_free(name, Rat::zero());
        self.index.insert(key.clone(), v);
        self.keys.push(key);
        self.vars.push(v);
        v
    }

    fn is_one(&self, key: &WKey) -> bool {
        key.ell.is_none() && key.alpha.degree() == 0 && key.den.is_constant()
    }

    /// Linearization of `y_ℓ · num/den` with `x0 = 1`.
    fn lin_parts(&mut self, num: &Poly, den: &Poly, ell: Option<usize>) -> Lin {
        let (num, den) = normalize_denominator(&dehom_poly(num), &dehom_poly(den), &self.xref);
        let mut out = Lin::default();
        for (m, c) in num.terms() {
            let key = WKey { den: den.clone(), alpha: m.clone(), ell };
            if self.is_one(&key) {
                out.constant += c;
            } else {
                let v = self.w(key);
                *out.terms.entry(v).or_insert_with(Rat::zero) += c;
            }
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    fn lin(&mut self, f: &RatFun, ell: Option<usize>) -> Lin {
        self.lin_parts(f.num(), f.den(), ell)
    }

    fn x(&mut self, j: usize) -> usize {
        self.w(WKey { den: Poly::one(self.nv), alpha: Mono::unit(self.nv, j), ell: None })
    }

    fn y(&mut self, l: usize) -> usize {
        self.w(WKey { den: Poly::one(self.nv), alpha: Mono::one(self.nv), ell: Some(l) })
    }

    fn emit(&mut self, lin: &Lin, sense: Sense, tag: String) {
        let coeffs: Vec<(usize, Rat)> = lin.terms.iter().map(|(v, c)| (*v, c.clone())).collect();
        let rhs = -lin.constant.clone();
        if coeffs.is_empty() {
            return;
        }
        let key = (coeffs.clone(), rhs.clone(), sense as u8);
        if self.seen_rows.insert(key) {
            self.lp.add_row(coeffs, sense, rhs, tag);
        }
    }
}

/// Linearized coordinates of one state.
struct LevelLin {
    theta: Vec<Lin>,
    theta_y: Vec<Vec<Lin>>,
    mu: Vec<Lin>,
    mu_y: Vec<Vec<Lin>>,
}

fn level_lin(b: &mut DeBuilder, st: &DDState, ny: usize) -> LevelLin {
    let mut out = LevelLin { theta: vec![], theta_y: vec![], mu: vec![], mu_y: vec![] };
    for t in &st.theta {
        let f = RatFun::from_poly(t.clone());
        out.theta.push(b.lin(&f, None));
        out.theta_y.push((0..ny).map(|l| b.lin(&f, Some(l))).collect());
    }
    for f in st.mu_ratfuns() {
        out.mu.push(b.lin(&f, None));
        out.mu_y.push((0..ny).map(|l| b.lin(&f, Some(l))).collect());
    }
    out
}

/// Flat polynomial of a coordinate with no denominator factors.
fn flat_product(st: &DDState, c: &crate::dd_engine::Coord) -> Poly {
    let nv = st.n + 1;
    let mut p = Poly::constant(nv, c.coef.clone());
    for (f, e) in &c.factors {
        p = &p * &st.table().factor(*f).flat.pow(*e as u32);
    }
    p
}

/// Top-level summands of a coordinate's numerator as flat polynomials, with
/// the flat denominator.
fn summands(st: &DDState, i: usize) -> (Vec<Poly>, Poly) {
    let table = st.table();
    let (num, den) = table.split(&st.mu[i]);
    let den_flat = flat_product(st, &den);
    let leaf = table.leaf_poly(&num).expect("numerator part has no denominator");
    let images = table.leaf_images();
    let parts = leaf
        .terms()
        .map(|(m, c)| Poly::from_terms(leaf.nvars(), [(m.clone(), c.clone())]).compose(images))
        .collect();
    (parts, den_flat)
}

fn interior_reference(p: &HPolyhedron) -> Result<Vec<Rat>, RelaxError> {
    let verts = enumerate_vertices_oracle(p).map_err(|e| RelaxError::BadInstance(e.to_string()))?;
    if verts.is_empty() {
        return Err(RelaxError::EmptyInput("P".into()));
    }
    let k = Rat::from_integer(verts.len().into());
    let mut c = vec![Rat::one()];
    for j in 0..p.n {
        c.push(verts.iter().map(|v| v[j].clone()).fold(Rat::zero(), |a, b| a + b) / &k);
    }
    if !p.strictly_inside(&c[1..]) {
        return Err(RelaxError::BadInstance("P is not full-dimensional".into()));
    }
    Ok(c)
}

fn run_orders(p: &HPolyhedron, orders: &[Vec<usize>], jobs: usize) -> Result<Vec<DDRun>, RelaxError> {
    let opts = DDOptions { init: InitMode::Default, prune: false };
    if jobs <= 1 || orders.len() <= 1 {
        return orders.iter().map(|o| dd_run(p, o, opts).map_err(RelaxError::from)).collect();
    }
    let chunk = orders.len().div_ceil(jobs);
    let results: Vec<Result<Vec<DDRun>, RelaxError>> = std::thread::scope(|sc| {
        let handles: Vec<_> = orders
            .chunks(chunk)
            .map(|part| sc.spawn(move || part.iter().map(|o| dd_run(p, o, opts).map_err(RelaxError::from)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub fn build_de_linear(inst: &DBPInstance, k: usize, orders: &[Vec<usize>], theta_cap: Option<usize>) -> Result<RelaxModel, RelaxError> {
    build_de_linear_with(inst, k, orders, DeOptions { theta_cap, jobs: 1 })
}

/// Linear relaxation over `w_{d,α,ℓ}` assembled from every order in `orders`:
/// ledger links, non-negativity and `Py` scaling per numerator summand,
/// constraint-product sign rows and the disaggregated objective.
pub fn build_de_linear_with(inst: &DBPInstance, k: usize, orders: &[Vec<usize>], opts: DeOptions) -> Result<RelaxModel, RelaxError> {
    let (n, ny) = (inst.n(), inst.ny());
    let m = inst.p.m();
    if orders.is_empty() {
        return Err(RelaxError::BadInstance("no orders given".into()));
    }
    if k == 0 || k > m {
        return Err(RelaxError::LevelTooLow { k, kbar: Some(1) });
    }
    let mut sorted: Vec<Vec<usize>> = orders.to_vec();
    sorted.sort();
    sorted.dedup();
    for o in &sorted {
        if o.len() != k {
            return Err(RelaxError::BadInstance(format!("order {o:?} does not have length {k}")));
        }
    }
    let xref = interior_reference(&inst.p)?;
    let runs = run_orders(&inst.p, &sorted, opts.jobs)?;
    for run in &runs {
        if !run.state.e_rows.is_empty() {
            return Err(RelaxError::BadInstance("an implied equality was found; P is not full-dimensional".into()));
        }
    }
    let eta = runs
        .iter()
        .flat_map(|r| r.levels.iter().skip(1))
        .flat_map(|s| s.mu_ratfuns())
        .map(|f| dehom_poly(f.num()).degree() as usize)
        .max()
        .unwrap_or(0);
    let theta_cap = opts.theta_cap.unwrap_or(eta);
    let mut b = DeBuilder::new(n, xref);
    let x: Vec<usize> = (1..=n).map(|j| b.x(j)).collect();
    let y: Vec<usize> = (0..ny).map(|l| b.y(l)).collect();
    for (r, (a, rhs)) in inst.p.a.iter().zip(&inst.p.b).enumerate() {
        let lin = Lin { terms: x.iter().zip(a).map(|(&v, c)| (v, -c)).collect(), constant: rhs.clone() };
        b.emit(&lin, Sense::Ge, format!("P{r}"));
    }
    for (r, (a, rhs)) in inst.py.a.iter().zip(&inst.py.b).enumerate() {
        let lin = Lin { terms: y.iter().zip(a).map(|(&v, c)| (v, -c)).collect(), constant: rhs.clone() };
        b.emit(&lin, Sense::Ge, format!("Py{r}"));
    }
    let row_polys: Vec<Poly> = (0..m)
        .map(|r| {
            let mut coeffs = vec![inst.p.b[r].clone()];
            coeffs.extend(inst.p.a[r].iter().map(|v| -v));
            Poly::linear(&coeffs)
        })
        .collect();
    let z: Vec<usize> = (0..n)
        .map(|j| {
            if inst.q[j].iter().all(|v| v.is_zero()) {
                usize::MAX
            } else {
                b.lp.add_free(format!("z{}", j + 1), Rat::one())
            }
        })
        .collect();
    let mut prodcons_done: HashSet<Poly> = HashSet::new();
    for (oi, run) in runs.iter().enumerate() {
        let tagp = format!("s{oi}");
        let states: Vec<&DDState> = std::iter::once(&run.steps[0].before).chain(run.steps.iter().map(|s| &s.after)).collect();
        let lins: Vec<LevelLin> = states.iter().map(|st| level_lin(&mut b, st, ny)).collect();
        for (t, step) in run.steps.iter().enumerate() {
            let (prev, next) = (&lins[t], &lins[t + 1]);
            let q0 = prev.theta.len();
            let q1 = next.theta.len();
            for (old, row) in step.entry.m_rows(q1) {
                for ell in std::iter::once(None).chain((0..ny).map(Some)) {
                    let pick = |ll: &LevelLin, idx: usize, q: usize| -> Lin {
                        match (idx < q, ell) {
                            (true, None) => ll.theta[idx].clone(),
                            (true, Some(l)) => ll.theta_y[idx][l].clone(),
                            (false, None) => ll.mu[idx - q].clone(),
                            (false, Some(l)) => ll.mu_y[idx - q][l].clone(),
                        }
                    };
                    let mut lin = pick(prev, old, q0);
                    for (c, v) in row.iter().enumerate() {
                        lin.add_scaled(&pick(next, c, q1), &-v);
                    }
                    let tag = match ell {
                        None => format!("{tagp}.recurse{}[{old}]", t + 1),
                        Some(l) => format!("{tagp}.recurse_y{}{}[{old}]", l + 1, t + 1),
                    };
                    b.emit(&lin, Sense::Eq, tag);
                }
            }
            let st = states[t + 1];
            let mut level_dens: Vec<Poly> = Vec::new();
            for i in 0..st.p() {
                let (parts, den) = summands(st, i);
                let pieces: Vec<Poly> = if parts.len() > 1 { parts } else { vec![flat_product(st, &st.table().split(&st.mu[i]).0)] };
                for (si, part) in pieces.iter().enumerate() {
                    let base = b.lin_parts(part, &den, None);
                    b.emit(&base, Sense::Ge, format!("{tagp}.nonneg{}[{i}.{si}]", t + 1));
                    let ys: Vec<Lin> = (0..ny).map(|l| b.lin_parts(part, &den, Some(l))).collect();
                    for (r, (a, rhs)) in inst.py.a.iter().zip(&inst.py.b).enumerate() {
                        let mut lin = Lin::default();
                        lin.add_scaled(&base, rhs);
                        for (l, yl) in ys.iter().enumerate() {
                            lin.add_scaled(yl, &-&a[l]);
                        }
                        b.emit(&lin, Sense::Ge, format!("{tagp}.yscale{}[{i}.{si}]py{r}", t + 1));
                    }
                }
                let (_, dn) = normalize_denominator(&Poly::one(n + 1), &dehom_poly(&den), &b.xref);
                if !level_dens.contains(&dn) {
                    level_dens.push(dn);
                }
            }
            for dn in level_dens {
                if dn.is_constant() || !prodcons_done.insert(dn.clone()) {
                    continue;
                }
                for size in 0..=theta_cap.min(m) {
                    for theta in combinations(m, size) {
                        let num = theta.iter().fold(Poly::one(n + 1), |acc, &r| &acc * &row_polys[r]);
                        let lin = b.lin_parts(&num, &dn, None);
                        let label: Vec<String> = theta.iter().map(|r| r.to_string()).collect();
                        b.emit(&lin, Sense::Ge, format!("prodcons[{}]/d{}", label.join(","), b.den_ids[&dn]));
                    }
                }
            }
        }
        // z_j ≥ Σ_l Q_jl y_l (R_{j,:} μ + L_{j,:} θ)
        let st = states[k];
        let last = &lins[k];
        for j in 1..=n {
            if z[j - 1] == usize::MAX {
                continue;
            }
            let mut lin = Lin::var(z[j - 1]);
            for l in 0..ny {
                let qjl = &inst.q[j - 1][l];
                if qjl.is_zero() {
                    continue;
                }
                for (i, r) in st.gen.r.iter().enumerate() {
                    lin.add_scaled(&last.mu_y[i][l], &-(qjl * &r[j]));
                }
                for (h, lv) in st.gen.l.iter().enumerate() {
                    lin.add_scaled(&last.theta_y[h][l], &-(qjl * &lv[j]));
                }
            }
            b.emit(&lin, Sense::Ge, format!("{tagp}.obj{j}"));
        }
    }
    for j in 0..n {
        b.lp.objective[x[j]] += &inst.cx[j];
    }
    for l in 0..ny {
        b.lp.objective[y[l]] += &inst.cy[l];
    }
    b.lp.obj_const = inst.c0.clone();
    Ok(RelaxModel {
        level: k,
        orders: sorted,
        lp: b.lp,
        wkeys: b.keys,
        wvars: b.vars,
        x,
        y,
        z: z.into_iter().filter(|&v| v != usize::MAX).collect(),
        theta_cap,
        denominators: b.dens,
    })
}

/// Every length-`k` sequence of distinct rows of an `m`-row system.
pub fn all_k_orders(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for r in 0..m {
            if !cur.contains(&r) {
                cur.push(r);
                rec(m, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(m, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Counting over products of simplices
// ---------------------------------------------------------------------------

/// For `(Λ_q)^n`: the number of product factors `Π_{i∈T} x_{i j_i}` with
/// `|T| = k`, and the number of distinct monomials after substituting
/// `x_{iq} = 1 − Σ_{j<q} x_{ij}` and expanding.
pub fn simplex_product_counts(n: usize, q: usize, k: usize) -> (usize, usize) {
    let nv = n * (q - 1);
    let var = |i: usize, j: usize| -> Poly {
        if j + 1 < q {
            Poly::var(nv, i * (q - 1) + j)
        } else {
            (0..q - 1).fold(Poly::one(nv), |acc, t| &acc - &Poly::var(nv, i * (q - 1) + t))
        }
    };
    let mut factors = 0;
    let mut monos: BTreeSet<Vec<u32>> = BTreeSet::new();
    for t in combinations(n, k) {
        let total = q.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            let mut p = Poly::one(nv);
            for &i in &t {
                p = &p * &var(i, c % q);
                c /= q;
            }
            factors += 1;
            monos.extend(p.terms().map(|(m, _)| m.0.clone()));
        }
    }
    (factors, monos.len())
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `Σ_{i=0..k} C(n,i)(q−1)^i`.
pub fn simplex_monomial_formula(n: usize, q: usize, k: usize) -> usize {
    (0..=k).map(|i| binom(n, i) * (q - 1).pow(i as u32)).sum()
}

pub fn simplex_factor_formula(n: usize, q: usize, k: usize) -> usize {
    binom(n, k) * q.pow(k as u32)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRow {
    pub k: usize,
    pub status: String,
    pub value: Option<String>,
    /// Reference value minus level value.
    pub gap: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub status: String,
    pub value: Option<String>,
    /// Nonzero primal entries by variable name.
    pub primal: BTreeMap<String, String>,
    /// Nonzero duals as `(row tag, value)`.
    pub duals: Vec<(String, String)>,
    pub gap_table: Vec<GapRow>,
}

pub fn solve_and_report(lp: &LPProblem) -> (LPSolution, Report) {
    let s = lp_solve(lp);
    let optimal = s.status == LpStatus::Optimal;
    let report = Report {
        status: format!("{:?}", s.status).to_lowercase(),
        value: optimal.then(|| fmt_rat(&s.value)),
        primal: if optimal {
            lp.vars.iter().zip(&s.primal).filter(|(_, v)| !v.is_zero()).map(|(var, v)| (var.name.clone(), fmt_rat(v))).collect()
        } else {
            BTreeMap::new()
        },
        duals: if optimal {
            lp.rows.iter().zip(&s.dual).filter(|(_, v)| !v.is_zero()).map(|(r, v)| (r.tag.clone(), fmt_rat(v))).collect()
        } else {
            vec![]
        },
        gap_table: vec![],
    };
    (s, report)
}

/// Values of the level hierarchy for `k = k̄..=|order|` against the last level.
pub fn gap_table(inst: LevelInput, order: &[usize]) -> Result<Vec<GapRow>, RelaxError> {
    let kbar = first_admissible_level(inst, order)?.ok_or(RelaxError::LevelTooLow { k: order.len(), kbar: None })?;
    let mut vals = Vec::new();
    for k in kbar..=order.len() {
        let m = build_level_lp(inst, k, order)?;
        let s = lp_solve(&m.lp);
        vals.push((k, s));
    }
    let reference = vals.last().filter(|(_, s)| s.status == LpStatus::Optimal).map(|(_, s)| s.value.clone());
    Ok(vals
        .into_iter()
        .map(|(k, s)| {
            let ok = s.status == LpStatus::Optimal;
            GapRow {
                k,
                status: format!("{:?}", s.status).to_lowercase(),
                value: ok.then(|| fmt_rat(&s.value)),
                gap: match (&reference, ok) {
                    (Some(r), true) => Some(fmt_rat(&(r - &s.value))),
                    _ => None,
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd_engine::{bounds_first_order, dd_run};
    use crate::exactmath::{int, rat, rf_equal};
    use crate::lp_exact::verify_farkas;
    use proptest::prelude::*;

    fn ex62() -> DBPInstance {
        DBPInstance::from_json_str(include_str!("../tests/data/ex62.json")).unwrap()
    }

    fn geq(rows: &[&[i64]]) -> HPolyhedron {
        let rows: Vec<Vec<Rat>> = rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect();
        HPolyhedron::from_geq_rows(&rows)
    }

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&t| int(t)).collect()
    }

    /// `c0 + c1 x1 + ...` with no `x0` term.
    fn aff(c: &[i64]) -> Poly {
        let mut v = vec![int(0)];
        v.extend(c[1..].iter().map(|&t| int(t)));
        &Poly::linear(&v) + &Poly::constant(c.len(), int(c[0]))
    }

    fn value(lp: &LPProblem) -> Rat {
        let s = lp_solve(lp);
        assert_eq!(s.status, LpStatus::Optimal);
        s.value
    }

    /// `xy` over `[0,1]²`.
    fn xy_box() -> DBPInstance {
        DBPInstance::new(vec![ints(&[1])], vec![], vec![], int(0), HPolyhedron::unit_box(1), HPolyhedron::unit_box(1)).unwrap()
    }

    #[test]
    fn ex62_hull_value_and_duals() {
        let inst = ex62();
        let m = build_hull_lp(&inst).unwrap();
        let verts: Vec<Vec<Rat>> = m.columns.iter().map(|c| c[1..].to_vec()).collect();
        let (s, rep) = solve_and_report(&m.lp);
        assert_eq!(s.value, int(-360));
        assert_eq!(dbp_vertex_oracle(&inst).unwrap(), int(-360));
        assert_eq!(inst.objective(&ints(&[0, 2]), &ints(&[0, 0])), int(-360));
        let col = |v: &[Rat]| 1 + verts.iter().position(|w| w == v).unwrap();
        let mut want = vec![
            (format!("py1[{}]", col(&ints(&[0, -3]))), "150".to_string()),
            (format!("py2[{}]", col(&[int(3), rat(3, 2)])), "42".into()),
            (format!("py3[{}]", col(&ints(&[1, 3]))), "63".into()),
            (format!("py4[{}]", col(&ints(&[0, 2]))), "140".into()),
            ("sum_lambda".into(), "-360".into()),
        ];
        want.sort();
        let mut got = rep.duals.clone();
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn zero_q_reduces_to_separate_lps() {
        let mut inst = ex62();
        inst.q = vec![vec![int(0); 2]; 2];
        let m = build_hull_lp(&inst).unwrap();
        // min 180x1 − 180x2 over P plus min −180y1 + 204y2 over Py: −360 each.
        assert_eq!(value(&m.lp), int(-720));
    }

    #[test]
    fn ex62_level_hierarchy() {
        let inst = ex62();
        let order = bounds_first_order(&inst.p);
        assert_eq!(order, vec![3, 0, 1, 2]);
        let li = LevelInput::Dbp(&inst);
        assert_eq!(first_admissible_level(li, &order).unwrap(), Some(3));
        for k in 0..3 {
            assert_eq!(build_level_lp(li, k, &order).unwrap_err(), RelaxError::LevelTooLow { k, kbar: Some(3) });
        }
        let v3 = value(&build_level_lp(li, 3, &order).unwrap().lp);
        let v4 = value(&build_level_lp(li, 4, &order).unwrap().lp);
        assert!(v3 <= v4);
        assert_eq!(v4, int(-360));
        let gaps = gap_table(li, &order).unwrap();
        assert_eq!(gaps.len(), 2);
        assert_eq!(gaps[1].gap.as_deref(), Some("0"));
    }

    #[test]
    fn ex62_rlt_level1() {
        let inst = ex62();
        let lp = build_rlt_baseline(&inst, RltFlavor::Level1General).unwrap();
        assert_eq!(value(&lp), rat(-12060, 23));
        let printed: Vec<Rat> = [12, 30, 18, 12, 12, 36, -36, 18].iter().map(|&v| rat(v, 23)).collect();
        assert!(lp.is_feasible(&printed));
        assert_eq!(lp.objective_value(&printed), rat(-12060, 23));
    }

    #[test]
    fn box_rlt_rejects_general_p() {
        assert_eq!(build_rlt_baseline(&ex62(), RltFlavor::BoxLevel(1)).unwrap_err(), RelaxError::NotBox);
    }

    #[test]
    fn envelope_of_xy() {
        let inst = xy_box();
        assert_eq!(envelope_eval(&inst, &ints(&[1]), &ints(&[1])).unwrap(), int(1));
        assert_eq!(envelope_eval(&inst, &[rat(1, 2)], &[rat(1, 2)]).unwrap(), int(0));
        assert!(matches!(envelope_eval(&inst, &ints(&[2]), &ints(&[0])), Err(RelaxError::InfeasiblePoint(_))));
        let e = ex62();
        assert_eq!(envelope_eval(&e, &ints(&[0, 2]), &ints(&[0, 0])).unwrap(), int(-360));
    }

    #[test]
    fn unbounded_inputs_are_rejected() {
        let mut inst = ex62();
        inst.py = geq(&[&[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(build_hull_lp(&inst).unwrap_err(), RelaxError::UnboundedInput("Py".into()));
        inst.py = geq(&[&[-1, 1, 0], &[0, -1, 0]]);
        assert_eq!(build_hull_lp(&inst).unwrap_err(), RelaxError::EmptyInput("Py".into()));
    }

    #[test]
    fn ex53_linearized_mu3() {
        let p = geq(&[&[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1], &[7, -1, -4, -1], &[5, -2, -1, -1], &[4, -1, -1, -1]]);
        let run = dd_run(&p, &(0..6).collect::<Vec<_>>(), DDOptions { init: InitMode::Orthant, prune: false }).unwrap();
        let (verts, mus) = run.state.dehomogenized().unwrap();
        let i = verts.iter().position(|v| v[1..] == ints(&[0, 0, 4])[..]).unwrap();
        let mu = &mus[i];
        let nv = 4;
        let x = |i| Poly::var(nv, i);
        let c = |v: i64| Poly::constant(nv, int(v));
        let d = [
            &c(5) * &(&x(1) * &x(1)),
            &c(12) * &(&x(1) * &x(2)),
            &c(9) * &(&x(3) * &x(1)),
            &c(7) * &(&x(2) * &x(2)),
            &c(11) * &(&x(3) * &x(2)),
            &c(4) * &(&x(3) * &x(3)),
            aff(&[140, -55, -63, -48]),
        ]
        .iter()
        .fold(Poly::zero(nv), |a, t| &a + t);
        let d3 = &d * &aff(&[-35, 5, 7, 5]);
        let coeffs = linearize_over(mu, &d3).unwrap();
        let coef = |e: [u32; 4]| coeffs.iter().find(|(m, _)| m.0 == e).map(|(_, c)| c.clone()).unwrap_or_default();
        assert_eq!(coef([0, 0, 0, 1]), int(-1225));
        assert_eq!(coef([0, 0, 0, 4]), int(5));
        let back: Poly = Poly::from_terms(nv, coeffs.into_iter());
        assert!(rf_equal(mu, &RatFun::new(back, d3).unwrap()));
    }

    #[test]
    fn ex62_de_bounds_ddr() {
        let inst = ex62();
        let order = bounds_first_order(&inst.p);
        for k in [3, 4] {
            let ddr = value(&build_level_lp(LevelInput::Dbp(&inst), k, &order).unwrap().lp);
            let de = build_de_linear(&inst, k, &[order[..k].to_vec()], None).unwrap();
            let v = value(&de.lp);
            assert!(v >= ddr, "k = {k}: {v} < {ddr}");
            assert!(v <= int(-360));
        }
    }

    #[test]
    fn single_row_orders_imply_rlt1() {
        let inst = ex62();
        let de = build_de_linear(&inst, 1, &all_k_orders(inst.p.m(), 1), None).unwrap();
        let rlt = rlt_level1(&inst);
        let (n, ny) = (inst.n(), inst.ny());
        let nv = n + 1;
        // RLT variables x, y, xy map onto w(1, e_j), w(1, 0; l), w(1, e_j; l).
        let mut map = Vec::new();
        for j in 1..=n {
            map.push(de.w(&WKey { den: Poly::one(nv), alpha: Mono::unit(nv, j), ell: None }));
        }
        for l in 0..ny {
            map.push(de.w(&WKey { den: Poly::one(nv), alpha: Mono::one(nv), ell: Some(l) }));
        }
        for j in 1..=n {
            for l in 0..ny {
                map.push(de.w(&WKey { den: Poly::one(nv), alpha: Mono::unit(nv, j), ell: Some(l) }));
            }
        }
        let map: Vec<usize> = map.into_iter().map(|v| v.expect("RLT variable present in the model")).collect();
        for row in &rlt.rows {
            let mut lp = de.lp.clone();
            lp.objective = vec![Rat::zero(); lp.num_vars()];
            lp.obj_const = Rat::zero();
            // Orient every row as a·v ≥ b.
            let s = if row.sense == Sense::Le { -Rat::one() } else { Rat::one() };
            for (v, c) in &row.coeffs {
                lp.objective[map[*v]] += c * &s;
            }
            assert!(value(&lp) >= &row.rhs * &s, "row {} not implied", row.tag);
            if row.sense == Sense::Eq {
                lp.objective.iter_mut().for_each(|c| *c = -c.clone());
                assert!(value(&lp) >= -row.rhs.clone(), "row {} not implied", row.tag);
            }
        }
    }

    #[test]
    fn de_rejects_lower_dimensional_p() {
        let mut inst = xy_box();
        inst.p = geq(&[&[0, 1], &[0, -1]]);
        assert!(build_de_linear(&inst, 1, &[vec![0]], None).is_err());
    }

    #[test]
    fn simplex_counting_identity() {
        for n in 1..=4 {
            for q in 2..=4 {
                for k in 1..=n {
                    let (f, m) = simplex_product_counts(n, q, k);
                    assert_eq!(f, simplex_factor_formula(n, q, k));
                    assert_eq!(m, simplex_monomial_formula(n, q, k), "n={n} q={q} k={k}");
                }
            }
        }
    }

    #[test]
    fn ex41_self_products_and_chain() {
        let p = HPolyhedron::from_geq_rows(
            &[[0, 3, -1], [0, -1, 4], [1, 10, -10], [1, 1, -3]].map(|r| ints(&r)),
        );
        let lp = rlt_self_products(&p);
        assert!(lp.is_feasible(&ints(&[-1, -1, 40, 13, 4])));
        assert!(!p.contains(&ints(&[-1, -1])));
        let run = dd_run(&p, &[0, 1, 2, 3], DDOptions::default()).unwrap();
        let chain = ledger_chain_lp(&run, &ints(&[-1, -1]));
        let s = lp_solve(&chain);
        assert_eq!(s.status, LpStatus::Infeasible);
        let y = s.farkas.expect("Farkas certificate");
        assert!(verify_farkas(chain.num_vars(), &chain.rows, &y));
        // A point of P gives a feasible chain.
        let inside = [rat(1, 20), rat(3, 20)];
        assert_eq!(lp_solve(&ledger_chain_lp(&run, &inside)).status, LpStatus::Optimal);
    }

    fn small_dbp(q: Vec<i64>, cx: Vec<i64>, cy: Vec<i64>, cut: (i64, i64, i64)) -> DBPInstance {
        // P: 0 ≤ x ≤ 3 with a cut; Py: the triangle y ≥ 0, y1 + y2 ≤ 2.
        let p = geq(&[&[0, 1, 0], &[0, 0, 1], &[3, -1, 0], &[3, 0, -1], &[cut.0 + 6, -cut.1, -cut.2]]);
        let py = geq(&[&[0, 1, 0], &[0, 0, 1], &[2, -1, -1]]);
        DBPInstance::new(vec![ints(&q[..2]), ints(&q[2..])], ints(&cx), ints(&cy), int(0), p, py).unwrap()
    }

    fn ac_instance(g0: Vec<i64>, g1: Vec<i64>, pieces: Vec<Vec<i64>>) -> ACInstance {
        let p = geq(&[&[0, 0, 1], &[1, 1, 0], &[2, -1, 0], &[3, 0, -1], &[4, -1, -1]]);
        let py = geq(&[&[0, 1, 0], &[0, 0, 1], &[2, -1, -1]]);
        let g = vec![GFun::affine(ints(&g0)), GFun::affine(ints(&g1)), GFun::max_affine(pieces.iter().map(|p| ints(p)).collect())];
        ACInstance::new(p, py, g).unwrap()
    }

    #[test]
    fn ac_instance_validation() {
        let p = HPolyhedron::unit_box(1);
        let py = HPolyhedron::unit_box(1);
        let bad = vec![GFun::affine(ints(&[0, 1])), GFun::affine(ints(&[0]))];
        assert!(ACInstance::new(p.clone(), py.clone(), bad).is_err());
        let g = vec![GFun::affine(ints(&[0, 1])), GFun::max_affine(vec![ints(&[0, 1]), ints(&[1, -1])])];
        assert_eq!(ACInstance::new(p, py, g).unwrap().varrho, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hull_matches_vertex_pairs(
            q in prop::collection::vec(-5i64..=5, 4),
            cx in prop::collection::vec(-5i64..=5, 2),
            cy in prop::collection::vec(-5i64..=5, 2),
            cut in (-2i64..=2, 1i64..=3, 1i64..=3),
        ) {
            let inst = small_dbp(q, cx, cy, cut);
            let hull = value(&build_hull_lp(&inst).unwrap().lp);
            prop_assert_eq!(hull.clone(), dbp_vertex_oracle(&inst).unwrap());
            let m = inst.p.m();
            let order: Vec<usize> = (0..m).collect();
            let li = LevelInput::Dbp(&inst);
            let kbar = first_admissible_level(li, &order).unwrap().unwrap();
            let mut prev: Option<Rat> = None;
            for k in kbar..=m {
                let v = value(&build_level_lp(li, k, &order).unwrap().lp);
                prop_assert!(v <= hull);
                if let Some(p) = &prev {
                    prop_assert!(&v >= p);
                }
                prev = Some(v);
            }
            prop_assert_eq!(prev.unwrap(), hull);
        }

        #[test]
        fn box_rlt_top_level_is_exact(
            q in prop::collection::vec(-5i64..=5, 4),
            cx in prop::collection::vec(-5i64..=5, 2),
            cy in prop::collection::vec(-5i64..=5, 2),
        ) {
            let py = geq(&[&[0, 1, 0], &[0, 0, 1], &[2, -1, -1]]);
            let inst = DBPInstance::new(vec![ints(&q[..2]), ints(&q[2..])], ints(&cx), ints(&cy), int(0), HPolyhedron::unit_box(2), py).unwrap();
            let hull = value(&build_hull_lp(&inst).unwrap().lp);
            let v1 = value(&build_rlt_baseline(&inst, RltFlavor::BoxLevel(1)).unwrap());
            let v2 = value(&build_rlt_baseline(&inst, RltFlavor::BoxLevel(2)).unwrap());
            prop_assert!(v1 <= v2);
            prop_assert_eq!(v2, hull);
        }

        #[test]
        fn ac_levels_monotone_and_exact(
            g0 in prop::collection::vec(-4i64..=4, 3),
            g1 in prop::collection::vec(-4i64..=4, 3),
            pieces in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 1..=3),
            rot in 0usize..5,
        ) {
            let inst = ac_instance(g0, g1, pieces);
            let mut order: Vec<usize> = (0..inst.p.m()).collect();
            order.rotate_left(rot);
            let li = LevelInput::Ac(&inst);
            let opt = ac_vertex_oracle(&inst).unwrap();
            let Some(kbar) = first_admissible_level(li, &order).unwrap() else {
                return Err(TestCaseError::fail("no admissible level"));
            };
            // None stands for an unbounded level (value −∞).
            let mut prev: Option<Rat> = None;
            for k in kbar..=order.len() {
                let s = lp_solve(&build_level_lp(li, k, &order).unwrap().lp);
                let v = match s.status {
                    LpStatus::Optimal => Some(s.value),
                    LpStatus::Unbounded => None,
                    LpStatus::Infeasible => return Err(TestCaseError::fail("infeasible level")),
                };
                if let Some(v) = &v {
                    prop_assert!(v <= &opt);
                }
                if prev.is_some() {
                    prop_assert!(v >= prev);
                }
                prev = v;
            }
            prop_assert_eq!(prev, Some(opt));
        }
    }
}
