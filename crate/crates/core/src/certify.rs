//! Polynomial optimality certificates for disjoint bilinear programs.
//!
//! With duals `u ≥ 0` on the scaled `Py` rows, reduced costs `r ≥ 0` on the
//! `λ` columns and `z(x)` the common denominator of the barycentric
//! coordinates, substituting `λ = λ(x)`, `Y^i = y λ_i(x)` into the hull LP's
//! Lagrangian gives
//!
//! `z(x)·(obj(x,y) − δ) = Σ u_{ri} (zλ_i)(x) ℓ^y_r(y) + Σ r_i (zλ_i)(x)`,
//!
//! and each `zλ_i` expands into nonnegative products of constraint values.
//! Polynomials here live over `(x_1..x_n, y_1..y_ny)`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd_engine::{bounds_first_order, dd_run, Coord, DDError, DDOptions, DDState, InitMode, Leaf};
use crate::exactmath::{fmt_rat, rat_serde, Poly, Rat};
use crate::lp_exact::{lp_solve, LPSolution, LpStatus};
use crate::polyhedra::enumerate_vertices_oracle;
use crate::relaxation::{check_bounded, hull_lp_over, ColumnLp, DBPInstance, RelaxError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("hull LP is {0:?}, not optimal")]
    NotOptimal(LpStatus),
    #[error("LP column {col} does not match coordinate column {col}")]
    OrderMismatch { col: usize },
    #[error("P has a recession direction; certificates need a polytope")]
    Unbounded,
    #[error("leaf {0} is not a constraint of P")]
    UncertifiedLeaf(String),
    #[error("free column {0} has nonzero reduced cost")]
    FreeReducedCost(String),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    DD(#[from] DDError),
}

/// `weight · Π_{r ∈ pfactors} ℓ_r(x) · ℓ^y_{yfactor}(y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertTerm {
    #[serde(with = "rat_serde")]
    pub weight: Rat,
    pub pfactors: Vec<usize>,
    pub yfactor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "rat_serde")]
    pub delta: Rat,
    pub zpoly: Poly,
    pub terms: Vec<CertTerm>,
    #[serde(rename = "identityRhs")]
    pub identity_rhs: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub ok: bool,
    pub diagnostic: Option<String>,
}

impl Verdict {
    fn fail(msg: impl Into<String>) -> Self {
        Verdict { ok: false, diagnostic: Some(msg.into()) }
    }
}

fn nvars(inst: &DBPInstance) -> usize {
    inst.n() + inst.ny()
}

/// `b_r − a_r·x` in the certificate universe.
pub fn p_row(inst: &DBPInstance, r: usize) -> Poly {
    affine_row(nvars(inst), 0, &inst.p.a[r], &inst.p.b[r])
}

/// `d_s − c_s·y` in the certificate universe.
pub fn py_row(inst: &DBPInstance, s: usize) -> Poly {
    affine_row(nvars(inst), inst.n(), &inst.py.a[s], &inst.py.b[s])
}

fn affine_row(nv: usize, offset: usize, a: &[Rat], b: &Rat) -> Poly {
    let mut p = Poly::constant(nv, b.clone());
    for (j, c) in a.iter().enumerate() {
        p = &p - &Poly::var(nv, offset + j).scale(c);
    }
    p
}

/// `obj(x, y)` in the certificate universe.
pub fn objective_poly(inst: &DBPInstance) -> Poly {
    let nv = nvars(inst);
    let n = inst.n();
    let mut p = Poly::constant(nv, inst.c0.clone());
    for j in 0..n {
        p = &p + &Poly::var(nv, j).scale(&inst.cx[j]);
        for l in 0..inst.ny() {
            if !inst.q[j][l].is_zero() {
                p = &p + &(&Poly::var(nv, j) * &Poly::var(nv, n + l)).scale(&inst.q[j][l]);
            }
        }
    }
    for l in 0..inst.ny() {
        p = &p + &Poly::var(nv, n + l).scale(&inst.cy[l]);
    }
    p
}

/// Maps a polynomial over `(x0; x)` into the universe with `x0 = 1`.
fn embed_x(p: &Poly, inst: &DBPInstance) -> Poly {
    let nv = nvars(inst);
    let mut images = vec![Poly::one(nv)];
    images.extend((0..inst.n()).map(|j| Poly::var(nv, j)));
    p.compose(&images)
}

pub fn term_poly(inst: &DBPInstance, t: &CertTerm) -> Poly {
    let mut p = Poly::constant(nvars(inst), t.weight.clone());
    for &r in &t.pfactors {
        p = &p * &p_row(inst, r);
    }
    if let Some(s) = t.yfactor {
        p = &p * &py_row(inst, s);
    }
    p
}

/// Reads the certificate off an optimal hull LP whose columns follow the
/// vertex order of `state` (a bounded final DD state).
pub fn extract_certificate(inst: &DBPInstance, hull: &ColumnLp, sol: &LPSolution, state: &DDState) -> Result<Certificate, CertifyError> {
    if sol.status != LpStatus::Optimal {
        return Err(CertifyError::NotOptimal(sol.status));
    }
    if state.gen.r.iter().any(|r| !r[0].is_positive()) || !state.gen.l.is_empty() {
        return Err(CertifyError::Unbounded);
    }
    if hull.columns.len() != state.p() {
        return Err(CertifyError::OrderMismatch { col: hull.columns.len().min(state.p()) });
    }
    for (i, (col, r)) in hull.columns.iter().zip(&state.gen.r).enumerate() {
        let v: Vec<Rat> = r.iter().map(|t| t / &r[0]).collect();
        if *col != v {
            return Err(CertifyError::OrderMismatch { col: i });
        }
    }
    let table = state.table();
    let coords = state.dehomogenized_coords();
    // z = Π f^{max negative exponent}
    let mut zexp: BTreeMap<usize, i32> = BTreeMap::new();
    for c in &coords {
        for (&f, &e) in &c.factors {
            if e < 0 {
                let v = zexp.entry(f).or_insert(0);
                *v = (*v).max(-e);
            }
        }
    }
    let z = Coord { coef: Rat::one(), factors: zexp };
    let zflat = table.flat(&z);
    let zpoly = embed_x(zflat.num(), inst);
    debug_assert!(zflat.den().is_constant());
    let zpoly = zpoly.scale(&zflat.den().constant_term().recip());

    // reduced costs r = c − Aᵀy
    let lp = &hull.lp;
    let mut reduced = lp.objective.clone();
    for (row, y) in lp.rows.iter().zip(&sol.dual) {
        if y.is_zero() {
            continue;
        }
        for (j, a) in &row.coeffs {
            reduced[*j] -= a * y;
        }
    }
    for (j, v) in lp.vars.iter().enumerate() {
        if v.lower.is_none() && v.upper.is_none() && !reduced[j].is_zero() {
            return Err(CertifyError::FreeReducedCost(v.name.clone()));
        }
    }

    let mut terms = Vec::new();
    for (i, c) in coords.iter().enumerate() {
        let zl = c.mul(&z);
        let leaf = table.leaf_poly(&zl).expect("z clears every denominator");
        let u: Vec<(usize, Rat)> = hull.py_rows[i]
            .iter()
            .enumerate()
            .filter(|(_, &row)| !sol.dual[row].is_zero())
            .map(|(s, &row)| (s, sol.dual[row].clone()))
            .collect();
        let r_i = &reduced[hull.lambda[i]];
        for (mono, coef) in leaf.terms() {
            let mut pf = Vec::new();
            for (v, &e) in mono.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let lf = table.leaf_of_var(v);
                if lf == Leaf::X0 {
                    continue;
                }
                let row = state.leaf_row(lf).ok_or_else(|| CertifyError::UncertifiedLeaf(format!("{lf:?}")))?;
                pf.extend(std::iter::repeat_n(row, e as usize));
            }
            pf.sort_unstable();
            for (s, us) in &u {
                terms.push(CertTerm { weight: us * coef, pfactors: pf.clone(), yfactor: Some(*s) });
            }
            if !r_i.is_zero() {
                terms.push(CertTerm { weight: r_i * coef, pfactors: pf, yfactor: None });
            }
        }
    }
    let identity_rhs = terms.iter().fold(Poly::zero(nvars(inst)), |acc, t| &acc + &term_poly(inst, t));
    Ok(Certificate { delta: sol.value.clone(), zpoly, terms, identity_rhs })
}

/// DD run (bounds-first order, pruned), hull LP over its vertices, and the
/// extracted certificate.
/// With `Q = 0` the problem separates and the certificate is plain LP
/// duality with `z = 1`.
pub fn certify(inst: &DBPInstance) -> Result<(Certificate, LPSolution, ColumnLp), CertifyError> {
    check_bounded(&inst.p, "P")?;
    check_bounded(&inst.py, "Py")?;
    let order = bounds_first_order(&inst.p);
    let run = dd_run(&inst.p, &order, DDOptions { init: InitMode::Default, prune: true })?;
    let verts: Vec<Vec<Rat>> = run.state.gen.r.iter().map(|r| r[1..].iter().map(|t| t / &r[0]).collect()).collect();
    let hull = hull_lp_over(inst, &verts)?;
    let sol = lp_solve(&hull.lp);
    let cert = if inst.q.iter().flatten().all(|v| v.is_zero()) {
        separable_certificate(inst)?
    } else {
        extract_certificate(inst, &hull, &sol, &run.state)?
    };
    Ok((cert, sol, hull))
}

/// `cxᵀx + cyᵀy + c0 − δ = Σ w_r ℓ_r(x) + Σ v_s ℓ^y_s(y)` from the duals of
/// the two separate LPs.
pub fn separable_certificate(inst: &DBPInstance) -> Result<Certificate, CertifyError> {
    let nv = nvars(inst);
    let mut delta = inst.c0.clone();
    let mut terms = Vec::new();
    for (poly, costs, is_x) in [(&inst.p, &inst.cx, true), (&inst.py, &inst.cy, false)] {
        let mut lp = crate::lp_exact::LPProblem::new(crate::lp_exact::ObjSense::Min);
        let vars: Vec<usize> = costs.iter().enumerate().map(|(j, c)| lp.add_free(format!("v{j}"), c.clone())).collect();
        for (r, (a, b)) in poly.a.iter().zip(&poly.b).enumerate() {
            let coeffs = vars.iter().zip(a).map(|(&v, c)| (v, c.clone())).collect();
            lp.add_row(coeffs, crate::lp_exact::Sense::Le, b.clone(), format!("r{r}"));
        }
        let s = lp_solve(&lp);
        if s.status != LpStatus::Optimal {
            return Err(CertifyError::NotOptimal(s.status));
        }
        delta += &s.value;
        for (r, y) in s.dual.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            let (pfactors, yfactor) = if is_x { (vec![r], None) } else { (vec![], Some(r)) };
            terms.push(CertTerm { weight: -y, pfactors, yfactor });
        }
    }
    let identity_rhs = terms.iter().fold(Poly::zero(nv), |acc, t| &acc + &term_poly(inst, t));
    Ok(Certificate { delta, zpoly: Poly::one(nv), terms, identity_rhs })
}

pub fn verify_certificate(inst: &DBPInstance, cert: &Certificate) -> Verdict {
    verify_certificate_seeded(inst, cert, 0)
}

/// Exact identity, nonnegative weights, and `z > 0` at the vertex average
/// and at 20 seeded strictly positive vertex combinations.
pub fn verify_certificate_seeded(inst: &DBPInstance, cert: &Certificate, seed: u64) -> Verdict {
    let nv = nvars(inst);
    if cert.zpoly.nvars() != nv || cert.identity_rhs.nvars() != nv {
        return Verdict::fail("polynomials live in the wrong number of variables");
    }
    for (k, t) in cert.terms.iter().enumerate() {
        if t.weight.is_negative() {
            return Verdict::fail(format!("negative weight (term {k})"));
        }
        if t.pfactors.iter().any(|&r| r >= inst.p.m()) || t.yfactor.is_some_and(|s| s >= inst.py.m()) {
            return Verdict::fail(format!("term {k} names a missing constraint"));
        }
    }
    let rhs = cert.terms.iter().fold(Poly::zero(nv), |acc, t| &acc + &term_poly(inst, t));
    if rhs != cert.identity_rhs {
        return Verdict::fail("identity rhs does not match its terms");
    }
    let lhs = &cert.zpoly * &(&objective_poly(inst) - &Poly::constant(nv, cert.delta.clone()));
    if lhs != rhs {
        return Verdict::fail("identity residual nonzero");
    }
    let verts = match enumerate_vertices_oracle(&inst.p) {
        Ok(v) if !v.is_empty() => v,
        _ => return Verdict::fail("P has no vertices"),
    };
    let pad = |x: Vec<Rat>| -> Vec<Rat> { x.into_iter().chain(std::iter::repeat_n(Rat::zero(), inst.ny())).collect() };
    let k = Rat::from_integer(verts.len().into());
    let avg: Vec<Rat> = (0..inst.n()).map(|j| verts.iter().map(|v| v[j].clone()).fold(Rat::zero(), |a, b| a + b) / &k).collect();
    if !cert.zpoly.eval(&pad(avg)).is_positive() {
        return Verdict::fail("z not positive at the vertex average");
    }
    for (s, x) in interior_samples(&verts, 20, seed).into_iter().enumerate() {
        if !cert.zpoly.eval(&pad(x)).is_positive() {
            return Verdict::fail(format!("z not positive at interior sample {s}"));
        }
    }
    Verdict { ok: true, diagnostic: None }
}

/// Convex combinations of `verts` with strictly positive rational weights.
pub fn interior_samples(verts: &[Vec<Rat>], count: usize, seed: u64) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = verts.first().map_or(0, |v| v.len());
    (0..count)
        .map(|_| {
            let w: Vec<i64> = verts.iter().map(|_| rng.gen_range(1..=20)).collect();
            let total = Rat::from_integer(w.iter().sum::<i64>().into());
            (0..n)
                .map(|j| verts.iter().zip(&w).map(|(v, &wi)| &v[j] * Rat::from_integer(wi.into())).fold(Rat::zero(), |a, b| a + b) / &total)
                .collect()
        })
        .collect()
}

fn universe_names(inst: &DBPInstance) -> Vec<String> {
    (1..=inst.n()).map(|j| format!("x{j}")).chain((1..=inst.ny()).map(|l| format!("y{l}"))).collect()
}

/// Human-readable `z(x)·(obj − δ) = Σ terms`.
pub fn render_identity(inst: &DBPInstance, cert: &Certificate) -> String {
    let names = universe_names(inst);
    let obj = objective_poly(inst).render(Some(&names));
    let mut terms: Vec<String> = Vec::new();
    for t in &cert.terms {
        let mut parts = vec![fmt_rat(&t.weight)];
        parts.extend(t.pfactors.iter().map(|r| format!("ℓ{}(x)", r + 1)));
        if let Some(s) = t.yfactor {
            parts.push(format!("ℓy{}(y)", s + 1));
        }
        terms.push(parts.join("·"));
    }
    format!(
        "({})·(({}) − ({})) = {}",
        cert.zpoly.render(Some(&names)),
        obj,
        fmt_rat(&cert.delta),
        if terms.is_empty() { "0".into() } else { terms.join(" + ") }
    )
}

/// Certificate JSON with the verdict and a rendering of the identity.
pub fn certificate_json(inst: &DBPInstance, cert: &Certificate, verdict: &Verdict) -> serde_json::Value {
    let names = universe_names(inst);
    let mut v = serde_json::to_value(cert).expect("serializable");
    let obj = v.as_object_mut().expect("object");
    obj.insert("z".into(), cert.zpoly.render(Some(&names)).into());
    obj.insert("identity".into(), render_identity(inst, cert).into());
    obj.insert("verified".into(), verdict.ok.into());
    if let Some(d) = &verdict.diagnostic {
        obj.insert("diagnostic".into(), d.clone().into());
    }
    v
}
