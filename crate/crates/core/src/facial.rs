//! Facial disjunctive programs: the level-`k` hierarchy, barycentric
//! indicators of face products, and the indicator substitution.
//!
//! `x` stacks the block variables `x_1, …, x_{n_p}`; faces are
//! `F_ij = {x_i ∈ P_i | τ − πᵀx_i ≤ 0}` for a cut valid on `P_i`. The coupling
//! cone is the nonnegative orthant plus equalities, so every model is an LP.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd_engine::{bounds_first_order, dd_run, rf_sum, DDOptions, InitMode};
use crate::exactmath::{rat_serde, ratvec_serde, rf_combine, Poly, Rat, RatFun, RfOp};
use crate::lp_exact::{lp_solve, LPProblem, LpStatus, ObjSense, Sense};
use crate::polyhedra::{combinations, enumerate_vertices_oracle, HPolyhedron, PolytopeJson};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FacialError {
    #[error("faces {j1} and {j2} of block {block} share vertex {vertex}")]
    FacesShareVertices { block: usize, j1: usize, j2: usize, vertex: usize },
    #[error("block {block}, face {face}: {msg}")]
    BadFace { block: usize, face: usize, msg: String },
    #[error("level {k} outside 1..={np}")]
    BadLevel { k: usize, np: usize },
    #[error("bad instance: {0}")]
    BadInstance(String),
}

/// `τ − πᵀx_i ≥ 0` on `P_i`, tight exactly on the face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub tau: Rat,
    pub pi: Vec<Rat>,
    /// Indices into the block's vertex list `E_i(j)`.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub p: HPolyhedron,
    /// Vertices in oracle order.
    pub vertices: Vec<Vec<Rat>>,
    pub faces: Vec<Face>,
}

/// `bᵀx + dᵀy ≤ c` or `= c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingRow {
    pub b: Vec<Rat>,
    pub d: Vec<Rat>,
    pub c: Rat,
    pub equality: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FDPInstance {
    pub blocks: Vec<Block>,
    pub ny: usize,
    pub coupling: Vec<CouplingRow>,
    /// Costs on `(x, y)`.
    pub objective: Vec<Rat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FaceJson {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rat")]
    tau: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ratvec")]
    pi: Option<Vec<Rat>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<usize>>,
}

mod opt_rat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => rat_serde::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.is_null() {
            return Ok(None);
        }
        rat_serde::value_to_rat(&v).map(Some).map_err(serde::de::Error::custom)
    }
}

mod opt_ratvec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Vec<Rat>>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => ratvec_serde::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rat>>, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Null => Ok(None),
            serde_json::Value::Array(items) => {
                items.iter().map(rat_serde::value_to_rat).collect::<Result<Vec<_>, _>>().map(Some).map_err(serde::de::Error::custom)
            }
            _ => Err(serde::de::Error::custom("pi must be an array")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockJson {
    #[serde(rename = "P")]
    p: PolytopeJson,
    faces: Vec<FaceJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CouplingJson {
    #[serde(with = "ratvec_serde")]
    coeffs: Vec<Rat>,
    sense: String,
    #[serde(with = "rat_serde")]
    rhs: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FdpJson {
    blocks: Vec<BlockJson>,
    #[serde(default)]
    ny: usize,
    #[serde(default)]
    coupling: Vec<CouplingJson>,
    #[serde(with = "ratvec_serde")]
    objective: Vec<Rat>,
}

/// `(τ, π, vertex list)`; give the cut, the list, or both.
pub type FaceSpec = (Option<Rat>, Option<Vec<Rat>>, Option<Vec<usize>>);

impl Block {
    /// Resolves faces given as cuts, vertex lists, or both (checked to agree).
    pub fn new(p: HPolyhedron, faces: Vec<FaceSpec>, index: usize) -> Result<Self, FacialError> {
        let vertices = enumerate_vertices_oracle(&p).map_err(|e| FacialError::BadInstance(e.to_string()))?;
        if vertices.is_empty() {
            return Err(FacialError::BadInstance(format!("block {index} is empty")));
        }
        let mut out = Vec::new();
        for (j, (tau, pi, verts)) in faces.into_iter().enumerate() {
            let bad = |msg: &str| FacialError::BadFace { block: index, face: j, msg: msg.into() };
            let face = match (tau, pi, verts) {
                (Some(tau), Some(pi), listed) => {
                    if pi.len() != p.n {
                        return Err(bad("π has the wrong length"));
                    }
                    let slack = |v: &[Rat]| v.iter().zip(&pi).fold(tau.clone(), |acc, (a, b)| acc - a * b);
                    if vertices.iter().any(|v| slack(v).is_negative()) {
                        return Err(bad("cut is not valid for the block"));
                    }
                    let on: Vec<usize> = (0..vertices.len()).filter(|&r| slack(&vertices[r]).is_zero()).collect();
                    if on.is_empty() {
                        return Err(bad("face is empty"));
                    }
                    if let Some(mut l) = listed {
                        l.sort_unstable();
                        if l != on {
                            return Err(bad("vertex list disagrees with the cut"));
                        }
                    }
                    Face { tau, pi, vertices: on }
                }
                (None, None, Some(mut listed)) => {
                    listed.sort_unstable();
                    listed.dedup();
                    if listed.is_empty() || listed.iter().any(|&r| r >= vertices.len()) {
                        return Err(bad("vertex indices out of range"));
                    }
                    // Sum of the rows tight at every listed vertex.
                    let tight: Vec<usize> = (0..p.m()).filter(|&r| listed.iter().all(|&v| p.slack(r, &vertices[v]).is_zero())).collect();
                    let tau = tight.iter().fold(Rat::zero(), |a, &r| a + &p.b[r]);
                    let pi: Vec<Rat> = (0..p.n).map(|c| tight.iter().fold(Rat::zero(), |a, &r| a + &p.a[r][c])).collect();
                    let on: Vec<usize> = (0..vertices.len()).filter(|&r| tight.iter().all(|&t| p.slack(t, &vertices[r]).is_zero())).collect();
                    if on != listed {
                        return Err(bad("listed vertices do not form a face"));
                    }
                    Face { tau, pi, vertices: on }
                }
                _ => return Err(bad("give either (tau, pi) or a vertex list")),
            };
            out.push(face);
        }
        Ok(Block { p, vertices, faces: out })
    }

    pub fn n(&self) -> usize {
        self.p.n
    }

    /// Vertices lying on some face.
    pub fn covered(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.faces.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        s.into_iter().collect()
    }

    fn check_disjoint(&self, index: usize) -> Result<(), FacialError> {
        for j1 in 0..self.faces.len() {
            for j2 in j1 + 1..self.faces.len() {
                if let Some(&v) = self.faces[j1].vertices.iter().find(|v| self.faces[j2].vertices.contains(v)) {
                    return Err(FacialError::FacesShareVertices { block: index, j1, j2, vertex: v });
                }
            }
        }
        Ok(())
    }
}

impl FDPInstance {
    pub fn new(blocks: Vec<Block>, ny: usize, coupling: Vec<CouplingRow>, objective: Vec<Rat>) -> Result<Self, FacialError> {
        let inst = FDPInstance { blocks, ny, coupling, objective };
        let n = inst.n();
        if inst.objective.len() != n + ny {
            return Err(FacialError::BadInstance(format!("objective needs {} entries", n + ny)));
        }
        if inst.coupling.iter().any(|r| r.b.len() != n || r.d.len() != ny) {
            return Err(FacialError::BadInstance("coupling row has the wrong length".into()));
        }
        if inst.blocks.iter().any(|b| b.faces.is_empty()) {
            return Err(FacialError::BadInstance("every block needs a face".into()));
        }
        Ok(inst)
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let j: FdpJson = serde_json::from_str(s).map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
        let mut blocks = Vec::new();
        for (i, b) in j.blocks.into_iter().enumerate() {
            let p = b.p.to_hpoly().map_err(|e| e.to_string())?;
            let faces = b.faces.into_iter().map(|f| (f.tau, f.pi, f.vertices)).collect();
            blocks.push(Block::new(p, faces, i).map_err(|e| e.to_string())?);
        }
        let n: usize = blocks.iter().map(|b| b.n()).sum();
        let mut coupling = Vec::new();
        for r in j.coupling {
            if r.coeffs.len() != n + j.ny {
                return Err(format!("coupling row needs {} coefficients", n + j.ny));
            }
            let (mut b, mut d, mut c) = (r.coeffs[..n].to_vec(), r.coeffs[n..].to_vec(), r.rhs);
            let equality = match r.sense.as_str() {
                "<=" => false,
                "=" | "==" => true,
                ">=" => {
                    b.iter_mut().for_each(|v| *v = -v.clone());
                    d.iter_mut().for_each(|v| *v = -v.clone());
                    c = -c;
                    false
                }
                s => return Err(format!("unknown sense '{s}'")),
            };
            coupling.push(CouplingRow { b, d, c, equality });
        }
        FDPInstance::new(blocks, j.ny, coupling, j.objective).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = FdpJson {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    p: b.p.to_json(),
                    faces: b.faces.iter().map(|f| FaceJson { tau: Some(f.tau.clone()), pi: Some(f.pi.clone()), vertices: Some(f.vertices.clone()) }).collect(),
                })
                .collect(),
            ny: self.ny,
            coupling: self
                .coupling
                .iter()
                .map(|r| CouplingJson {
                    coeffs: r.b.iter().chain(&r.d).cloned().collect(),
                    sense: if r.equality { "=".into() } else { "<=".into() },
                    rhs: r.c.clone(),
                })
                .collect(),
            objective: self.objective.clone(),
        };
        serde_json::to_value(j).expect("serializable")
    }

    pub fn np(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(|b| b.n()).sum()
    }

    /// First global index of block `i`.
    pub fn offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|b| b.n()).sum()
    }

    fn block_of(&self, j: usize) -> usize {
        let mut acc = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            acc += b.n();
            if j < acc {
                return i;
            }
        }
        panic!("variable {j} outside every block")
    }

    pub fn check_assumption(&self) -> Result<(), FacialError> {
        self.blocks.iter().enumerate().try_for_each(|(i, b)| b.check_disjoint(i))
    }

    /// All selections `s ∈ J^S`.
    pub fn selections(&self, s: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &i in s {
            out = out
                .into_iter()
                .flat_map(|pre| {
                    (0..self.blocks[i].faces.len()).map(move |j| {
                        let mut v = pre.clone();
                        v.push(j);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

/// `(S, s)`.
pub type Cell = (Vec<usize>, Vec<usize>);

#[derive(Debug, Clone)]
pub struct FDRModel {
    pub level: usize,
    pub lp: LPProblem,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub gamma: BTreeMap<Cell, usize>,
    pub u: BTreeMap<Cell, Vec<usize>>,
    pub w: BTreeMap<Cell, Vec<usize>>,
}

/// Linearized level-`k` relaxation: `γ^{S,s} ≥ 0` with `u ≈ γx`, `w ≈ γy`.
pub fn build_fdr_level(inst: &FDPInstance, k: usize) -> Result<FDRModel, FacialError> {
    let np = inst.np();
    if k == 0 || k > np {
        return Err(FacialError::BadLevel { k, np });
    }
    inst.check_assumption()?;
    let (n, ny) = (inst.n(), inst.ny);
    let mut lp = LPProblem::new(ObjSense::Min);
    let x: Vec<usize> = (1..=n).map(|j| lp.add_free(format!("x{j}"), inst.objective[j - 1].clone())).collect();
    let y: Vec<usize> = (1..=ny).map(|l| lp.add_free(format!("y{l}"), inst.objective[n + l - 1].clone())).collect();
    let mut model = FDRModel { level: k, lp, x, y, gamma: BTreeMap::new(), u: BTreeMap::new(), w: BTreeMap::new() };
    for sset in combinations(np, k) {
        let sels = inst.selections(&sset);
        let label = |s: &[usize]| -> String {
            sset.iter().zip(s).map(|(i, j)| format!("{}:{}", i + 1, j + 1)).collect::<Vec<_>>().join(",")
        };
        for s in &sels {
            let lab = label(s);
            let lp = &mut model.lp;
            let g = lp.add_nonneg(format!("gamma[{lab}]"), Rat::zero());
            let u: Vec<usize> = (1..=n).map(|j| lp.add_free(format!("u{j}[{lab}]"), Rat::zero())).collect();
            let w: Vec<usize> = (1..=ny).map(|l| lp.add_free(format!("w{l}[{lab}]"), Rat::zero())).collect();
            // γ (B x + D y − c) ≤ 0
            for (ri, row) in inst.coupling.iter().enumerate() {
                let mut coeffs: Vec<(usize, Rat)> = vec![(g, -row.c.clone())];
                coeffs.extend(u.iter().zip(&row.b).filter(|(_, c)| !c.is_zero()).map(|(&v, c)| (v, c.clone())));
                coeffs.extend(w.iter().zip(&row.d).filter(|(_, c)| !c.is_zero()).map(|(&v, c)| (v, c.clone())));
                let sense = if row.equality { Sense::Eq } else { Sense::Le };
                lp.add_row(coeffs, sense, Rat::zero(), format!("cone{ri}[{lab}]"));
            }
            // γ x_i ∈ γ P_i
            for (i, b) in inst.blocks.iter().enumerate() {
                let off = inst.offset(i);
                for (r, (a, rhs)) in b.p.a.iter().zip(&b.p.b).enumerate() {
                    let mut coeffs: Vec<(usize, Rat)> = vec![(g, -rhs.clone())];
                    coeffs.extend(a.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(c, v)| (u[off + c], v.clone())));
                    lp.add_row(coeffs, Sense::Le, Rat::zero(), format!("scale{}.{r}[{lab}]", i + 1));
                }
            }
            // γ (τ − πᵀx_i) ≤ 0
            for (&i, &j) in sset.iter().zip(s) {
                let f = &inst.blocks[i].faces[j];
                let off = inst.offset(i);
                let mut coeffs: Vec<(usize, Rat)> = vec![(g, f.tau.clone())];
                coeffs.extend(f.pi.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(c, v)| (u[off + c], -v)));
                lp.add_row(coeffs, Sense::Le, Rat::zero(), format!("face{}[{lab}]", i + 1));
            }
            model.gamma.insert((sset.clone(), s.clone()), g);
            model.u.insert((sset.clone(), s.clone()), u);
            model.w.insert((sset.clone(), s.clone()), w);
        }
        let cells: Vec<Cell> = sels.iter().map(|s| (sset.clone(), s.clone())).collect();
        let setlab = sset.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
        let lp = &mut model.lp;
        let coeffs = cells.iter().map(|c| (model.gamma[c], Rat::one())).collect();
        lp.add_row(coeffs, Sense::Eq, Rat::one(), format!("sum_gamma[{setlab}]"));
        for j in 0..n {
            let mut coeffs: Vec<(usize, Rat)> = cells.iter().map(|c| (model.u[c][j], Rat::one())).collect();
            coeffs.push((model.x[j], -Rat::one()));
            lp.add_row(coeffs, Sense::Eq, Rat::zero(), format!("sum_u{}[{setlab}]", j + 1));
        }
        for l in 0..ny {
            let mut coeffs: Vec<(usize, Rat)> = cells.iter().map(|c| (model.w[c][l], Rat::one())).collect();
            coeffs.push((model.y[l], -Rat::one()));
            lp.add_row(coeffs, Sense::Eq, Rat::zero(), format!("sum_w{}[{setlab}]", l + 1));
        }
    }
    Ok(model)
}

/// Optimum over `FD` by enumerating every full face selection.
pub fn fdp_brute_force(inst: &FDPInstance) -> Result<Option<Rat>, FacialError> {
    inst.check_assumption()?;
    let all: Vec<usize> = (0..inst.np()).collect();
    let (n, ny) = (inst.n(), inst.ny);
    let mut best: Option<Rat> = None;
    for s in inst.selections(&all) {
        let mut lp = LPProblem::new(ObjSense::Min);
        let v: Vec<usize> = (0..n + ny).map(|j| lp.add_free(format!("v{j}"), inst.objective[j].clone())).collect();
        for (i, b) in inst.blocks.iter().enumerate() {
            let off = inst.offset(i);
            for (a, rhs) in b.p.a.iter().zip(&b.p.b) {
                lp.add_row(a.iter().enumerate().map(|(c, t)| (v[off + c], t.clone())).collect(), Sense::Le, rhs.clone(), "P");
            }
            let f = &b.faces[s[i]];
            lp.add_row(f.pi.iter().enumerate().map(|(c, t)| (v[off + c], t.clone())).collect(), Sense::Ge, f.tau.clone(), "face");
        }
        for row in &inst.coupling {
            let coeffs = row.b.iter().chain(&row.d).enumerate().map(|(j, t)| (v[j], t.clone())).collect();
            lp.add_row(coeffs, if row.equality { Sense::Eq } else { Sense::Le }, row.c.clone(), "coupling");
        }
        let sol = lp_solve(&lp);
        match sol.status {
            LpStatus::Optimal => {
                if best.as_ref().is_none_or(|b| sol.value < *b) {
                    best = Some(sol.value);
                }
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => return Err(FacialError::BadInstance("a disjunct is unbounded".into())),
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Barycentric indicators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Indicator {
    pub eta: RatFun,
    /// `E_i(s_i)` for each `i ∈ S`.
    pub vertex_sets: Vec<Vec<usize>>,
    /// `λ_{ir}` per block over `(x0; x)`, in the block's vertex order.
    pub lambdas: Vec<Vec<RatFun>>,
}

/// Barycentric coordinates of every block, lifted to `(x0; x)`.
pub fn block_lambdas(inst: &FDPInstance) -> Result<Vec<Vec<RatFun>>, FacialError> {
    let nv = inst.n() + 1;
    let mut out = Vec::new();
    for (i, b) in inst.blocks.iter().enumerate() {
        let run = dd_run(&b.p, &bounds_first_order(&b.p), DDOptions { init: InitMode::Default, prune: true })
            .map_err(|e| FacialError::BadInstance(e.to_string()))?;
        let (verts, lams) = run.state.dehomogenized().map_err(|e| FacialError::BadInstance(e.to_string()))?;
        let off = inst.offset(i);
        let mut images = vec![Poly::var(nv, 0)];
        images.extend((1..=b.n()).map(|c| Poly::var(nv, off + c)));
        let mut ordered = vec![None; b.vertices.len()];
        for (v, f) in verts.iter().zip(&lams) {
            let r = b.vertices.iter().position(|w| w[..] == v[1..]).ok_or_else(|| FacialError::BadInstance("DD vertex missing from the oracle".into()))?;
            ordered[r] = Some(RatFun::new(f.num().compose(&images), f.den().compose(&images)).expect("nonzero denominator"));
        }
        out.push(ordered.into_iter().map(|f| f.expect("every vertex has a coordinate")).collect());
    }
    Ok(out)
}

/// `η^{S,s} = Π_{i∈S} Σ_{r∈E_i(s_i)} λ_{ir}`.
pub fn barycentric_indicator(inst: &FDPInstance, sset: &[usize], s: &[usize]) -> Result<Indicator, FacialError> {
    inst.check_assumption()?;
    let lambdas = block_lambdas(inst)?;
    Ok(indicator_from(inst, &lambdas, sset, s))
}

pub fn indicator_from(inst: &FDPInstance, lambdas: &[Vec<RatFun>], sset: &[usize], s: &[usize]) -> Indicator {
    let nv = inst.n() + 1;
    let mut eta = RatFun::constant(nv, Rat::one());
    let mut vertex_sets = Vec::new();
    for (&i, &j) in sset.iter().zip(s) {
        let e = inst.blocks[i].faces[j].vertices.clone();
        let part: Vec<RatFun> = e.iter().map(|&r| lambdas[i][r].clone()).collect();
        eta = rf_combine(&eta, &rf_sum(&part, nv), RfOp::Mul).expect("product");
        vertex_sets.push(e);
    }
    Indicator { eta, vertex_sets, lambdas: lambdas.to_vec() }
}

// ---------------------------------------------------------------------------
// Indicator substitution
// ---------------------------------------------------------------------------

/// Multiplier of a product of block coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extra {
    One,
    X(usize),
    Y(usize),
}

/// `M(S, r, e)` stands for `Π_{i∈S} λ_{i r_i}(x) · e`.
pub type MKey = (Vec<usize>, Vec<usize>, Extra);

#[derive(Debug, Clone)]
pub struct SubstitutedModel {
    pub lp: LPProblem,
    pub m: BTreeMap<MKey, usize>,
}

type Expr = BTreeMap<usize, Rat>;

fn add_to(e: &mut Expr, v: usize, c: Rat) {
    if c.is_zero() {
        return;
    }
    let slot = e.entry(v).or_insert_with(Rat::zero);
    *slot += c;
    if slot.is_zero() {
        e.remove(&v);
    }
}

struct Subst<'a> {
    inst: &'a FDPInstance,
    k: usize,
    covered: Vec<Vec<usize>>,
    model: SubstitutedModel,
}

impl Subst<'_> {
    fn var(&mut self, key: &MKey) -> usize {
        if let Some(&v) = self.model.m.get(key) {
            return v;
        }
        let (sset, r, e) = key;
        let name = format!(
            "M[{}|{}|{}]",
            sset.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
            r.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
            match e {
                Extra::One => "1".into(),
                Extra::X(j) => format!("x{}", j + 1),
                Extra::Y(l) => format!("y{}", l + 1),
            }
        );
        let v = if *e == Extra::One { self.model.lp.add_nonneg(name, Rat::zero()) } else { self.model.lp.add_free(name, Rat::zero()) };
        self.model.m.insert(key.clone(), v);
        v
    }

    /// Linear form for `Π_{i∈T} λ_{ir_i} · e`, aggregating over blocks
    /// `ℓ ∉ T` in increasing order down to level `k` (`via` forces the first).
    fn agg(&mut self, t: &[usize], r: &[usize], e: Extra, via: Option<usize>) -> Expr {
        // χ rule: x_j inside a block of T becomes the vertex entry.
        if let Extra::X(j) = e {
            let b = self.inst.block_of(j);
            if let Some(pos) = t.iter().position(|&i| i == b) {
                let val = self.inst.blocks[b].vertices[r[pos]][j - self.inst.offset(b)].clone();
                let mut one = self.agg(t, r, Extra::One, via);
                one.values_mut().for_each(|c| *c *= &val);
                one.retain(|_, c| !c.is_zero());
                return one;
            }
        }
        if t.len() == self.k {
            let v = self.var(&(t.to_vec(), r.to_vec(), e));
            return BTreeMap::from([(v, Rat::one())]);
        }
        let ell = via.unwrap_or_else(|| (0..self.inst.np()).find(|i| !t.contains(i)).expect("a block outside T"));
        let mut out = Expr::new();
        for &rl in &self.covered[ell].clone() {
            let pos = t.partition_point(|&i| i < ell);
            let mut t2 = t.to_vec();
            t2.insert(pos, ell);
            let mut r2 = r.to_vec();
            r2.insert(pos, rl);
            let sub = self.agg(&t2, &r2, e, None);
            for (v, c) in sub {
                add_to(&mut out, v, c);
            }
        }
        out
    }
}

/// Indicator-substituted level-`k` model: `γ`, `u`, `w` written through
/// `M(S, r, e)` with the annihilation and `χ` rules, plus the equalities that
/// make aggregation over any `ℓ ∉ T` agree down to `(1, x, y)`.
pub fn substitute_indicators(inst: &FDPInstance, model: &FDRModel) -> SubstitutedModel {
    let k = model.level;
    let (n, ny) = (inst.n(), inst.ny);
    let covered: Vec<Vec<usize>> = inst.blocks.iter().map(|b| b.covered()).collect();
    let mut st = Subst { inst, k, covered, model: SubstitutedModel { lp: model.lp.clone(), m: BTreeMap::new() } };
    for (cell, &g) in &model.gamma {
        let (sset, s) = cell;
        let sets: Vec<Vec<usize>> = sset.iter().zip(s).map(|(&i, &j)| inst.blocks[i].faces[j].vertices.clone()).collect();
        let mut rs: Vec<Vec<usize>> = vec![vec![]];
        for e in &sets {
            rs = rs.into_iter().flat_map(|pre| e.iter().map(move |&r| [pre.clone(), vec![r]].concat())).collect();
        }
        let link = |st: &mut Subst, var: usize, extra: Extra, tag: String| {
            let mut expr = Expr::new();
            for r in &rs {
                for (v, c) in st.agg(sset, r, extra, None) {
                    add_to(&mut expr, v, c);
                }
            }
            let mut coeffs: Vec<(usize, Rat)> = expr.into_iter().collect();
            coeffs.push((var, -Rat::one()));
            st.model.lp.add_row(coeffs, Sense::Eq, Rat::zero(), tag);
        };
        link(&mut st, g, Extra::One, "eta".into());
        for j in 0..n {
            link(&mut st, model.u[cell][j], Extra::X(j), format!("eta*x{}", j + 1));
        }
        for l in 0..ny {
            link(&mut st, model.w[cell][l], Extra::Y(l), format!("eta*y{}", l + 1));
        }
    }
    // Consistency: every aggregation path from T to level k gives the same form.
    let extras: Vec<Extra> = std::iter::once(Extra::One).chain((0..n).map(Extra::X)).chain((0..ny).map(Extra::Y)).collect();
    for size in 0..k {
        for t in combinations(inst.np(), size) {
            let mut rts: Vec<Vec<usize>> = vec![vec![]];
            for &i in &t {
                let cov = st.covered[i].clone();
                rts = rts.into_iter().flat_map(|pre| cov.iter().map(move |&r| [pre.clone(), vec![r]].concat())).collect();
            }
            for r in &rts {
                for &e in &extras {
                    if let Extra::X(j) = e {
                        if t.contains(&inst.block_of(j)) {
                            continue;
                        }
                    }
                    let canon = st.agg(&t, r, e, None);
                    let target: Expr = if size == 0 {
                        match e {
                            Extra::One => Expr::new(),
                            Extra::X(j) => BTreeMap::from([(model.x[j], Rat::one())]),
                            Extra::Y(l) => BTreeMap::from([(model.y[l], Rat::one())]),
                        }
                    } else {
                        canon.clone()
                    };
                    let rhs = if size == 0 && e == Extra::One { Rat::one() } else { Rat::zero() };
                    for ell in (0..inst.np()).filter(|i| !t.contains(i)) {
                        let other = st.agg(&t, r, e, Some(ell));
                        if size > 0 && other == canon {
                            continue;
                        }
                        let mut expr = other;
                        for (v, c) in &target {
                            add_to(&mut expr, *v, -c.clone());
                        }
                        if expr.is_empty() {
                            continue;
                        }
                        let tag = format!("consistency[{}|{ell}]", t.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","));
                        st.model.lp.add_row(expr.into_iter().collect(), Sense::Eq, rhs.clone(), tag);
                    }
                }
            }
        }
    }
    st.model
}

/// 0-1 instance: `n_p` unit intervals with faces `{0}` and `{1}`.
pub fn zero_one_instance(np: usize, ny: usize, coupling: Vec<CouplingRow>, objective: Vec<Rat>) -> Result<FDPInstance, FacialError> {
    let blocks = (0..np)
        .map(|i| {
            Block::new(
                HPolyhedron::unit_box(1),
                vec![(Some(Rat::zero()), Some(vec![-Rat::one()]), None), (Some(Rat::one()), Some(vec![Rat::one()]), None)],
                i,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    FDPInstance::new(blocks, ny, coupling, objective)
}
