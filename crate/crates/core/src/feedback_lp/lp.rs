//! Exact vertex enumeration for tiny linear programs.
//!
//! Every basic solution is found by solving one square system per subset of
//! tight facets. With ten variables and a couple of dozen constraints this is
//! a few thousand eliminations, cheap enough to serve as an oracle and simple
//! enough to trust.

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 10;
pub const MAX_CONSTRAINTS: usize = 24;

const FEAS_TOL: f64 = 1e-9;
const DISTINCT_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-12;

/// One row `a · x <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, bound: f64) -> Self {
        Self { coeffs, bound }
    }

    /// `a · x >= bound`, stored negated.
    pub fn ge(coeffs: Vec<f64>, bound: f64) -> Self {
        Self {
            coeffs: coeffs.into_iter().map(|c| -c).collect(),
            bound: -bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// No other feasible vertex (further than 1e-7 away) attains the optimum.
    pub unique: bool,
}

/// Maximizes `objective · x` subject to `constraints` and `x_v >= 0` for
/// every `v` with `nonneg[v]`.
///
/// Ties between optimal vertices go to the lexicographically smallest `x`.
pub fn solve_small_lp(
    objective: &[f64],
    constraints: &[Constraint],
    nonneg: &[bool],
) -> Result<LpSolution> {
    if objective.len() > MAX_VARS || constraints.len() > MAX_CONSTRAINTS {
        return Err(Error::InvalidInput(format!(
            "vertex enumeration limited to {MAX_VARS} variables and {MAX_CONSTRAINTS} \
             constraints, got {} and {}",
            objective.len(),
            constraints.len()
        )));
    }
    solve_by_vertices(objective, constraints, nonneg)
}

/// Same as [`solve_small_lp`] without the size guard. Cost grows as
/// `C(facets, vars)`.
pub(crate) fn solve_by_vertices(
    objective: &[f64],
    constraints: &[Constraint],
    nonneg: &[bool],
) -> Result<LpSolution> {
    let n = objective.len();
    if n == 0 {
        return Err(Error::InvalidInput("LP needs at least one variable".into()));
    }
    if nonneg.len() != n || constraints.iter().any(|c| c.coeffs.len() != n) {
        return Err(Error::DimensionMismatch(
            "LP rows must match the variable count".into(),
        ));
    }
    if objective
        .iter()
        .chain(
            constraints
                .iter()
                .flat_map(|c| c.coeffs.iter().chain([&c.bound])),
        )
        .any(|x| !x.is_finite())
    {
        return Err(Error::InvalidInput("LP data must be finite".into()));
    }

    // A box far outside the data keeps the region bounded. The optimum only
    // touches it when the program is unbounded.
    let scale = 1.0
        + constraints
            .iter()
            .map(|c| c.bound.abs())
            .fold(0.0, f64::max);
    let big = 1e7 * scale;

    let mut facets: Vec<Constraint> = constraints.to_vec();
    for v in 0..n {
        if nonneg[v] {
            facets.push(Constraint::le(unit(n, v, -1.0), 0.0));
        }
    }
    let first_box = facets.len();
    let mut boxes: Vec<usize> = Vec::new();
    for v in 0..n {
        if objective[v] > 0.0 || !nonneg[v] {
            facets.push(Constraint::le(unit(n, v, 1.0), big));
            boxes.push(v);
        }
        if !nonneg[v] {
            facets.push(Constraint::le(unit(n, v, -1.0), big));
            boxes.push(v);
        }
    }

    let m = facets.len();
    if m < n {
        return Err(Error::Unbounded);
    }
    let mut vertices: Vec<(Vec<f64>, bool)> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_subset(&facets, &idx, n) {
            if facets
                .iter()
                .all(|f| dot(&f.coeffs, &x) <= f.bound + FEAS_TOL * (1.0 + f.bound.abs()))
            {
                let on_box = idx
                    .iter()
                    .any(|&f| f >= first_box && objective[boxes[f - first_box]] != 0.0);
                vertices.push((x, on_box));
            }
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    if vertices.is_empty() {
        return Err(Error::Infeasible);
    }

    let best = vertices
        .iter()
        .map(|(x, _)| dot(objective, x))
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = FEAS_TOL * (1.0 + best.abs());
    let mut optimal: Vec<&(Vec<f64>, bool)> = vertices
        .iter()
        .filter(|(x, _)| dot(objective, x) >= best - tol)
        .collect();
    if optimal.iter().any(|(_, on_box)| *on_box) {
        return Err(Error::Unbounded);
    }
    optimal.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let x = optimal[0].0.clone();
    let unique = optimal
        .iter()
        .all(|(y, _)| y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= DISTINCT_TOL));
    let value = dot(objective, &x);
    Ok(LpSolution { x, value, unique })
}

fn unit(n: usize, v: usize, s: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[v] = s;
    e
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > DISTINCT_TOL {
            return x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}

/// Advances `idx` to the next `k`-subset of `0..m` in lexicographic order.
fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the square system formed by the chosen facets held at equality.
fn solve_subset(facets: &[Constraint], rows: &[usize], n: usize) -> Option<Vec<f64>> {
    let w = n + 1;
    let mut a = vec![0.0; n * w];
    for (r, &f) in rows.iter().enumerate() {
        a[r * w..r * w + n].copy_from_slice(&facets[f].coeffs);
        a[r * w + n] = facets[f].bound;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * w + col].abs() > a[piv * w + col].abs() {
                piv = r;
            }
        }
        if a[piv * w + col].abs() < PIVOT_TOL {
            return None;
        }
        if piv != col {
            for c in 0..w {
                a.swap(piv * w + c, col * w + c);
            }
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * w + col] / a[col * w + col];
            if f != 0.0 {
                for c in col..w {
                    a[r * w + c] -= f * a[col * w + c];
                }
            }
        }
    }
    Some((0..n).map(|r| a[r * w + n] / a[r * w + r]).collect())
}
