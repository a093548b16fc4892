//! H-representations, homogenization to cones, dehomogenization of
//! ray/coordinate pairs and a brute-force vertex oracle.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactmath::{fmt_rat, linalg, MathError, Rat, RatFun};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("no {0} linearly independent rows exist")]
    NotFullRank(usize),
    #[error("malformed polytope: {0}")]
    Malformed(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// `{x ∈ ℝⁿ | Ax ≤ b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolyhedron {
    pub n: usize,
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub names: Vec<String>,
}

impl HPolyhedron {
    pub fn new(a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Self {
        assert_eq!(a.len(), b.len(), "row count of A must equal length of b");
        let n = a.first().map(|r| r.len()).unwrap_or(0);
        HPolyhedron::with_dim(n, a, b)
    }

    pub fn with_dim(n: usize, a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Self {
        assert_eq!(a.len(), b.len(), "row count of A must equal length of b");
        assert!(a.iter().all(|r| r.len() == n), "ragged constraint matrix");
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        HPolyhedron { n, a, b, names }
    }

    /// Builds from rows `c0 + cᵀx ≥ 0` given as `[c0, c1, ..., cn]`.
    pub fn from_geq_rows(rows: &[Vec<Rat>]) -> Self {
        let n = rows.first().map(|r| r.len() - 1).unwrap_or(0);
        let a = rows.iter().map(|r| r[1..].iter().map(|v| -v).collect()).collect();
        let b = rows.iter().map(|r| r[0].clone()).collect();
        HPolyhedron::with_dim(n, a, b)
    }

    /// Unit box `[0,1]ⁿ` as rows `x_i ≥ 0` followed by `x_i ≤ 1`.
    pub fn unit_box(n: usize) -> Self {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            let mut r = vec![Rat::zero(); n];
            r[i] = -Rat::one();
            a.push(r);
            b.push(Rat::zero());
        }
        for i in 0..n {
            let mut r = vec![Rat::zero(); n];
            r[i] = Rat::one();
            a.push(r);
            b.push(Rat::one());
        }
        HPolyhedron::with_dim(n, a, b)
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// Slack `b_i - A_i x`.
    pub fn slack(&self, i: usize, x: &[Rat]) -> Rat {
        &self.b[i] - linalg::dot(&self.a[i], x)
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        (0..self.m()).all(|i| !self.slack(i, x).is_negative())
    }

    pub fn strictly_inside(&self, x: &[Rat]) -> bool {
        (0..self.m()).all(|i| self.slack(i, x).is_positive())
    }

    /// Cartesian product, rows of `self` first.
    pub fn product(&self, other: &HPolyhedron) -> HPolyhedron {
        let n = self.n + other.n;
        let mut a = Vec::new();
        for r in &self.a {
            let mut row = r.clone();
            row.extend(std::iter::repeat_n(Rat::zero(), other.n));
            a.push(row);
        }
        for r in &other.a {
            let mut row = vec![Rat::zero(); self.n];
            row.extend(r.iter().cloned());
            a.push(row);
        }
        let mut b = self.b.clone();
        b.extend(other.b.iter().cloned());
        let mut p = HPolyhedron::with_dim(n, a, b);
        p.names = self.names.iter().chain(&other.names).cloned().collect();
        p
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            variables: self.names.clone(),
            constraints: self
                .a
                .iter()
                .zip(&self.b)
                .map(|(r, b)| ConstraintJson {
                    coeffs: r.iter().map(fmt_rat).collect(),
                    sense: "<=".into(),
                    rhs: fmt_rat(b),
                })
                .collect(),
        }
    }
}

/// User-facing polytope format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub variables: Vec<String>,
    pub constraints: Vec<ConstraintJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub coeffs: Vec<String>,
    pub sense: String,
    pub rhs: String,
}

impl PolytopeJson {
    /// Converts to `Ax ≤ b`, splitting equalities into two rows.
    pub fn to_hpoly(&self) -> Result<HPolyhedron, PolyError> {
        let n = self.variables.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(PolyError::Malformed(format!(
                    "constraint {k} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            let row: Vec<Rat> = c
                .coeffs
                .iter()
                .map(|s| crate::exactmath::parse_rat(s))
                .collect::<Result<_, _>>()?;
            let rhs = crate::exactmath::parse_rat(&c.rhs)?;
            match c.sense.as_str() {
                "<=" => {
                    a.push(row);
                    b.push(rhs);
                }
                ">=" => {
                    a.push(row.iter().map(|v| -v).collect());
                    b.push(-rhs);
                }
                "=" | "==" => {
                    a.push(row.iter().map(|v| -v).collect());
                    b.push(-rhs.clone());
                    a.push(row);
                    b.push(rhs);
                }
                s => return Err(PolyError::Malformed(format!("unknown sense '{s}'"))),
            }
        }
        let mut p = HPolyhedron::with_dim(n, a, b);
        p.names = self.variables.clone();
        Ok(p)
    }
}

/// Cone `{(x0;x) | Ā(x0;x) ≥ 0, x0 ≥ 0}` with `Ā = (b, −A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomCone {
    pub n: usize,
    pub abar: Vec<Vec<Rat>>,
}

impl HomCone {
    pub fn m(&self) -> usize {
        self.abar.len()
    }

    /// Row `k` as a linear form in `(x0, x1, ..., xn)`.
    pub fn row_form(&self, k: usize) -> crate::exactmath::Poly {
        crate::exactmath::Poly::linear(&self.abar[k])
    }
}

pub fn homogenize(p: &HPolyhedron) -> HomCone {
    let abar = p
        .a
        .iter()
        .zip(&p.b)
        .map(|(row, bi)| {
            let mut r = Vec::with_capacity(p.n + 1);
            r.push(bi.clone());
            r.extend(row.iter().map(|v| -v));
            r
        })
        .collect();
    HomCone { n: p.n, abar }
}

/// Rays and lineality directions, stored as column vectors of length `n+1`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GeneratorRep {
    #[serde(with = "crate::exactmath::ratmat_serde")]
    pub r: Vec<Vec<Rat>>,
    #[serde(with = "crate::exactmath::ratmat_serde")]
    pub l: Vec<Vec<Rat>>,
}

/// Scales each ray with positive first entry to first entry 1 and multiplies
/// its coordinate by that entry; substitutes `x0 = 1` everywhere.
pub fn dehomogenize(rays: &[Vec<Rat>], mu: &[RatFun]) -> Result<(Vec<Vec<Rat>>, Vec<RatFun>), MathError> {
    assert_eq!(rays.len(), mu.len(), "one coordinate per ray");
    let one = Rat::one();
    let mut out_r = Vec::with_capacity(rays.len());
    let mut out_mu = Vec::with_capacity(mu.len());
    for (col, f) in rays.iter().zip(mu) {
        let r0 = &col[0];
        let g = f.substitute(0, &one)?;
        if r0.is_positive() {
            let inv = r0.recip();
            out_r.push(col.iter().map(|v| v * &inv).collect());
            out_mu.push(g.scale(r0));
        } else {
            out_r.push(col.clone());
            out_mu.push(g);
        }
    }
    Ok((out_r, out_mu))
}

/// Vertex set by brute force over all n-subsets of rows, sorted.
pub fn enumerate_vertices_oracle(p: &HPolyhedron) -> Result<Vec<Vec<Rat>>, PolyError> {
    let n = p.n;
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    if linalg::rank(&p.a) < n {
        return Err(PolyError::NotFullRank(n));
    }
    let mut found = BTreeSet::new();
    for subset in combinations(p.m(), n) {
        let a: Vec<Vec<Rat>> = subset.iter().map(|&i| p.a[i].clone()).collect();
        let b: Vec<Rat> = subset.iter().map(|&i| p.b[i].clone()).collect();
        if let Some(x) = linalg::solve(&a, &b) {
            if p.contains(&x) {
                found.insert(x);
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// All `k`-subsets of `0..m` in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}
