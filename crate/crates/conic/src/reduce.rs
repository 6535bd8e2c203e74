//! Conversion of a [`Problem`] into the standard conic form used by the
//! interior-point iteration:
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  G x + s = h,  s ∈ K
//! ```
//!
//! Along the way fixed variables are substituted, singleton rows become
//! bounds, opposite row pairs with equal right-hand sides become equalities,
//! and cones whose radius is identically zero collapse into equalities. These
//! steps are exact; they keep the iteration away from problems without a
//! strict interior.

use std::collections::HashMap;

use crate::cones::ConeDims;
use crate::problem::{Affine, Problem, Sense};

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, Default)]
pub struct Csc {
    pub rows: usize,
    pub cols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csc {
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> Csc {
        t.sort_by_key(|a| (a.1, a.0));
        let mut colptr = vec![0; cols + 1];
        let mut rowind = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            rowind.push(r);
            vals.push(v);
            colptr[c + 1] += 1;
            last = Some((r, c));
        }
        for c in 0..cols {
            colptr[c + 1] += colptr[c];
        }
        Csc {
            rows,
            cols,
            colptr,
            rowind,
            vals,
        }
    }

    /// `y += M x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.cols {
            let xc = x[c];
            if xc != 0.0 {
                for p in self.colptr[c]..self.colptr[c + 1] {
                    y[self.rowind[p]] += self.vals[p] * xc;
                }
            }
        }
    }

    /// `y += Mᵀ x`
    pub fn tmul_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.cols {
            let mut acc = 0.0;
            for p in self.colptr[c]..self.colptr[c + 1] {
                acc += self.vals[p] * x[self.rowind[p]];
            }
            y[c] += acc;
        }
    }
}

/// Standard-form data plus the map back to the original variables.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub c: Vec<f64>,
    pub a: Csc,
    pub b: Vec<f64>,
    pub g: Csc,
    pub h: Vec<f64>,
    pub dims: ConeDims,
    /// Column of each original variable in the reduced problem, if free.
    pub column: Vec<Option<usize>>,
    /// Values of original variables that were fixed during reduction.
    pub fixed: Vec<f64>,
}

impl StandardForm {
    pub fn num_free(&self) -> usize {
        self.c.len()
    }

    /// Expand a reduced solution to the original variable space.
    pub fn expand(&self, xr: &[f64]) -> Vec<f64> {
        self.column
            .iter()
            .zip(&self.fixed)
            .map(|(col, &f)| col.map_or(f, |c| xr[c]))
            .collect()
    }
}

/// Outcome of the reduction.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Reduction {
    Standard(StandardForm),
    Infeasible(String),
    Unbounded(String),
}

/// Tightest `≤` and `≥` right-hand sides seen for one coefficient pattern.
type Sides = (Option<f64>, Option<f64>);

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

#[derive(Debug, Clone)]
struct Cone {
    entries: Vec<Affine>,
    bound: Affine,
}

fn tol_for(v: f64, tol: f64) -> f64 {
    tol * (1.0 + v.abs())
}

struct Reducer {
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed: Vec<Option<f64>>,
    tol: f64,
}

impl Reducer {
    fn fix(&mut self, j: usize, v: f64) -> Result<(), String> {
        let t = tol_for(v, self.tol);
        if v < self.lower[j] - t || v > self.upper[j] + t {
            return Err(format!(
                "variable {j} forced to {v} outside [{}, {}]",
                self.lower[j], self.upper[j]
            ));
        }
        let v = v.clamp(self.lower[j], self.upper[j]);
        self.fixed[j] = Some(v);
        self.lower[j] = v;
        self.upper[j] = v;
        Ok(())
    }

    fn tighten(&mut self, j: usize, lo: f64, hi: f64) -> Result<(), String> {
        if lo > self.lower[j] {
            self.lower[j] = lo;
        }
        if hi < self.upper[j] {
            self.upper[j] = hi;
        }
        let (l, u) = (self.lower[j], self.upper[j]);
        if l > u + tol_for(u, self.tol) {
            return Err(format!("bounds of variable {j} cross: [{l}, {u}]"));
        }
        if l.is_finite() && u.is_finite() && u - l <= 1e-12 * (1.0 + l.abs()) {
            let mid = if l > u { 0.5 * (l + u) } else { l };
            self.fixed[j] = Some(mid);
            self.lower[j] = mid;
            self.upper[j] = mid;
        }
        Ok(())
    }

    fn substitute(&self, terms: &mut Vec<(usize, f64)>) -> f64 {
        let mut shift = 0.0;
        terms.retain(|&(j, a)| match self.fixed[j] {
            Some(v) => {
                shift += a * v;
                false
            }
            None => a != 0.0,
        });
        shift
    }
}

fn merge_terms(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t = terms.to_vec();
    t.sort_by_key(|p| p.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (j, a) in t {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|p| p.1 != 0.0);
    out
}

/// Reduce `problem` to standard form. `tol` is the feasibility tolerance used
/// to decide contradictions among constant rows.
pub fn reduce(problem: &Problem, tol: f64) -> Reduction {
    match reduce_inner(problem, tol) {
        Ok(r) => r,
        Err(msg) => Reduction::Infeasible(msg),
    }
}

fn reduce_inner(problem: &Problem, tol: f64) -> Result<Reduction, String> {
    let n = problem.num_vars();
    let mut red = Reducer {
        lower: problem.lower.clone(),
        upper: problem.upper.clone(),
        fixed: vec![None; n],
        tol,
    };
    for j in 0..n {
        red.tighten(j, f64::NEG_INFINITY, f64::INFINITY)?;
    }
    let mut rows: Vec<Option<Row>> = problem
        .linear
        .iter()
        .map(|r| {
            Some(Row {
                terms: merge_terms(&r.terms),
                sense: r.sense,
                rhs: r.rhs,
            })
        })
        .collect();
    let mut cones: Vec<Option<Cone>> = problem
        .cones
        .iter()
        .map(|c| {
            Some(Cone {
                entries: c
                    .entries
                    .iter()
                    .map(|e| Affine {
                        terms: merge_terms(&e.terms),
                        constant: e.constant,
                    })
                    .collect(),
                bound: Affine {
                    terms: merge_terms(&c.bound.terms),
                    constant: c.bound.constant,
                },
            })
        })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for slot in rows.iter_mut() {
            let Some(row) = slot.as_mut() else { continue };
            let shift = red.substitute(&mut row.terms);
            row.rhs -= shift;
            match row.terms.len() {
                0 => {
                    let t = tol_for(row.rhs, tol);
                    let ok = match row.sense {
                        Sense::Le => row.rhs >= -t,
                        Sense::Ge => row.rhs <= t,
                        Sense::Eq => row.rhs.abs() <= t,
                    };
                    if !ok {
                        return Err(format!(
                            "constant row violated: 0 {:?} {}",
                            row.sense, row.rhs
                        ));
                    }
                    *slot = None;
                }
                1 => {
                    let (j, a) = row.terms[0];
                    let v = row.rhs / a;
                    match (row.sense, a > 0.0) {
                        (Sense::Eq, _) => red.fix(j, v)?,
                        (Sense::Le, true) | (Sense::Ge, false) => {
                            red.tighten(j, f64::NEG_INFINITY, v)?
                        }
                        (Sense::Ge, true) | (Sense::Le, false) => {
                            red.tighten(j, v, f64::INFINITY)?
                        }
                    }
                    *slot = None;
                    changed = true;
                }
                _ => {}
            }
        }
        let mut extra_rows = Vec::new();
        for slot in cones.iter_mut() {
            let Some(cone) = slot.as_mut() else { continue };
            let shift = red.substitute(&mut cone.bound.terms);
            cone.bound.constant += shift;
            for e in cone.entries.iter_mut() {
                let s = red.substitute(&mut e.terms);
                e.constant += s;
            }
            cone.entries
                .retain(|e| !(e.terms.is_empty() && e.constant == 0.0));
            let entries_constant = cone.entries.iter().all(|e| e.terms.is_empty());
            if cone.bound.terms.is_empty() {
                let radius = cone.bound.constant;
                let cnorm = cone
                    .entries
                    .iter()
                    .map(|e| e.constant * e.constant)
                    .sum::<f64>()
                    .sqrt();
                if radius < -tol_for(radius, tol) {
                    return Err(format!("cone radius is negative constant {radius}"));
                }
                if radius <= tol_for(radius, tol) {
                    // Every entry must vanish.
                    for e in &cone.entries {
                        match e.terms.len() {
                            0 => {
                                if e.constant.abs() > tol_for(0.0, tol) {
                                    return Err("cone with zero radius has nonzero entry".into());
                                }
                            }
                            1 => {
                                let (j, a) = e.terms[0];
                                red.fix(j, -e.constant / a)?;
                            }
                            _ => extra_rows.push(Row {
                                terms: e.terms.clone(),
                                sense: Sense::Eq,
                                rhs: -e.constant,
                            }),
                        }
                    }
                    *slot = None;
                    changed = true;
                } else if entries_constant {
                    if cnorm > radius + tol_for(radius, tol) {
                        return Err("constant cone violated".into());
                    }
                    *slot = None;
                    changed = true;
                }
            } else if entries_constant {
                let cnorm = cone
                    .entries
                    .iter()
                    .map(|e| e.constant * e.constant)
                    .sum::<f64>()
                    .sqrt();
                extra_rows.push(Row {
                    terms: cone.bound.terms.clone(),
                    sense: Sense::Ge,
                    rhs: cnorm - cone.bound.constant,
                });
                *slot = None;
                changed = true;
            }
        }
        rows.extend(extra_rows.into_iter().map(Some));

        // Variables touching no row or cone sit at their cheapest bound.
        let mut used = vec![false; n];
        for row in rows.iter().flatten() {
            for &(j, _) in &row.terms {
                used[j] = true;
            }
        }
        for cone in cones.iter().flatten() {
            for &(j, _) in cone
                .bound
                .terms
                .iter()
                .chain(cone.entries.iter().flat_map(|e| e.terms.iter()))
            {
                used[j] = true;
            }
        }
        for j in 0..n {
            if used[j] || red.fixed[j].is_some() {
                continue;
            }
            let c = problem.objective[j];
            let target = if c > 0.0 {
                red.lower[j]
            } else if c < 0.0 {
                red.upper[j]
            } else {
                0.0f64.clamp(red.lower[j], red.upper[j])
            };
            if !target.is_finite() {
                return Ok(Reduction::Unbounded(format!(
                    "variable {j} is unbounded in its cost direction"
                )));
            }
            red.fix(j, target)?;
            changed = true;
        }
    }

    // Pair opposite inequalities with identical coefficients into equalities.
    let mut keyed: HashMap<Vec<(usize, u64)>, Sides> = HashMap::new();
    let mut order: Vec<Vec<(usize, u64)>> = Vec::new();
    let mut plain: Vec<Row> = Vec::new();
    for row in rows.into_iter().flatten() {
        if row.sense == Sense::Eq {
            plain.push(row);
            continue;
        }
        let lead = row.terms[0].1;
        let scale = lead.abs();
        let flip = lead < 0.0;
        let key: Vec<(usize, u64)> = row
            .terms
            .iter()
            .map(|&(j, a)| {
                let v = if flip { -a / scale } else { a / scale };
                (j, v.to_bits())
            })
            .collect();
        let rhs = if flip {
            -row.rhs / scale
        } else {
            row.rhs / scale
        };
        let sense = match (row.sense, flip) {
            (Sense::Le, false) | (Sense::Ge, true) => Sense::Le,
            _ => Sense::Ge,
        };
        let entry = keyed.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (None, None)
        });
        match sense {
            Sense::Le => entry.0 = Some(entry.0.map_or(rhs, |v: f64| v.min(rhs))),
            _ => entry.1 = Some(entry.1.map_or(rhs, |v: f64| v.max(rhs))),
        }
    }
    let mut eq_rows: Vec<Row> = plain;
    let mut ineq_rows: Vec<Row> = Vec::new();
    for key in order {
        let (le, ge) = keyed[&key];
        let terms: Vec<(usize, f64)> = key
            .iter()
            .map(|&(j, bits)| (j, f64::from_bits(bits)))
            .collect();
        match (le, ge) {
            (Some(u), Some(l)) => {
                let t = tol_for(u, tol);
                if l > u + t {
                    return Err(format!("row range crosses: {l} > {u}"));
                }
                if u - l <= 1e-12 * (1.0 + u.abs()) {
                    eq_rows.push(Row {
                        terms,
                        sense: Sense::Eq,
                        rhs: 0.5 * (u + l),
                    });
                } else {
                    ineq_rows.push(Row {
                        terms: terms.clone(),
                        sense: Sense::Le,
                        rhs: u,
                    });
                    ineq_rows.push(Row {
                        terms,
                        sense: Sense::Ge,
                        rhs: l,
                    });
                }
            }
            (Some(u), None) => ineq_rows.push(Row {
                terms,
                sense: Sense::Le,
                rhs: u,
            }),
            (None, Some(l)) => ineq_rows.push(Row {
                terms,
                sense: Sense::Ge,
                rhs: l,
            }),
            (None, None) => unreachable!(),
        }
    }

    // Renumber free variables.
    let mut column = vec![None; n];
    let mut nfree = 0;
    for j in 0..n {
        if red.fixed[j].is_none() {
            column[j] = Some(nfree);
            nfree += 1;
        }
    }
    let fixed: Vec<f64> = red.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut c = vec![0.0; nfree];
    for j in 0..n {
        if let Some(k) = column[j] {
            c[k] = problem.objective[j];
        }
    }
    let col = |j: usize| column[j].expect("fixed variable survived substitution");

    let mut at = Vec::new();
    let mut b = Vec::with_capacity(eq_rows.len());
    for (r, row) in eq_rows.iter().enumerate() {
        for &(j, a) in &row.terms {
            at.push((r, col(j), a));
        }
        b.push(row.rhs);
    }
    let a = Csc::from_triplets(eq_rows.len(), nfree, at);

    let mut gt = Vec::new();
    let mut h = Vec::new();
    for row in &ineq_rows {
        let r = h.len();
        let sign = if row.sense == Sense::Le { 1.0 } else { -1.0 };
        for &(j, a) in &row.terms {
            gt.push((r, col(j), sign * a));
        }
        h.push(sign * row.rhs);
    }
    for j in 0..n {
        if let Some(k) = column[j] {
            if red.lower[j].is_finite() {
                gt.push((h.len(), k, -1.0));
                h.push(-red.lower[j]);
            }
            if red.upper[j].is_finite() {
                gt.push((h.len(), k, 1.0));
                h.push(red.upper[j]);
            }
        }
    }
    let orthant = h.len();
    let mut soc = Vec::new();
    for cone in cones.into_iter().flatten() {
        soc.push(cone.entries.len() + 1);
        for e in std::iter::once(&cone.bound).chain(cone.entries.iter()) {
            // s = e(x) = h − G x
            for &(j, a) in &e.terms {
                gt.push((h.len(), col(j), -a));
            }
            h.push(e.constant);
        }
    }
    let g = Csc::from_triplets(h.len(), nfree, gt);
    Ok(Reduction::Standard(StandardForm {
        c,
        a,
        b,
        g,
        h,
        dims: ConeDims { orthant, soc },
        column,
        fixed,
    }))
}
