//! Export of a model in CPLEX LP text format. Cone rows `‖a(x)‖ ≤ b(x)` are
//! written as quadratic rows `Σ a_k(x)² − b(x)² ≤ 0`.

use std::collections::BTreeMap;
use std::fmt::Write;

use octsvm_conic::{Affine, Sense};

use super::{Family, Layout, MinlpModel, VarKind};

fn fmt_num(v: f64) -> String {
    // Shortest representation that round-trips.
    format!("{v:?}")
}

fn linear_expr(names: &[String], terms: &[(usize, f64)]) -> String {
    let mut out = String::new();
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k == 0 {
            if a < 0.0 {
                out.push_str("- ");
            }
        } else {
            out.push_str(if a < 0.0 { " - " } else { " + " });
        }
        let _ = write!(out, "{} {}", fmt_num(a.abs()), names[j]);
    }
    if out.is_empty() {
        out.push_str("0 ");
        out.push_str(&names[0]);
    }
    out
}

struct Quadratic {
    quad: BTreeMap<(usize, usize), f64>,
    lin: BTreeMap<usize, f64>,
    constant: f64,
}

impl Quadratic {
    fn new() -> Quadratic {
        Quadratic {
            quad: BTreeMap::new(),
            lin: BTreeMap::new(),
            constant: 0.0,
        }
    }

    /// Add `sign · a(x)²`.
    fn add_square(&mut self, a: &Affine, sign: f64) {
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, aj) in &a.terms {
            *terms.entry(j).or_insert(0.0) += aj;
        }
        let terms: Vec<(usize, f64)> = terms.into_iter().collect();
        for (p, &(j, aj)) in terms.iter().enumerate() {
            *self.quad.entry((j, j)).or_insert(0.0) += sign * aj * aj;
            for &(k, ak) in &terms[p + 1..] {
                *self.quad.entry((j, k)).or_insert(0.0) += sign * 2.0 * aj * ak;
            }
            *self.lin.entry(j).or_insert(0.0) += sign * 2.0 * a.constant * aj;
        }
        self.constant += sign * a.constant * a.constant;
    }
}

fn family_label(f: Family) -> String {
    f.to_string()
}

/// Render `model` as LP text.
pub fn write_lp(model: &MinlpModel) -> String {
    let names: Vec<String> = model.vars.iter().map(|v| v.name.clone()).collect();
    let mut out = String::new();
    let title = match model.layout {
        Layout::Octsvm(_) => "OCTSVM",
        Layout::Resvm(_) => "RE-SVM",
    };
    let _ = writeln!(
        out,
        "\\ {title} model: {} variables, {} linear rows, {} cone rows",
        names.len(),
        model.rows.len(),
        model.cones.len()
    );
    out.push_str("Minimize\n obj: ");
    let obj: Vec<(usize, f64)> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.cost != 0.0)
        .map(|(j, v)| (j, v.cost))
        .collect();
    out.push_str(&linear_expr(&names, &obj));
    out.push_str("\nSubject To\n");

    let mut counters: BTreeMap<Family, usize> = BTreeMap::new();
    for row in &model.rows {
        let c = counters.entry(row.family).or_insert(0);
        *c += 1;
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(
            out,
            " {}_{}: {} {} {}",
            family_label(row.family),
            c,
            linear_expr(&names, &row.terms),
            op,
            fmt_num(row.rhs)
        );
    }
    for cone in &model.cones {
        let c = counters.entry(cone.family).or_insert(0);
        *c += 1;
        let mut q = Quadratic::new();
        for e in &cone.entries {
            q.add_square(e, 1.0);
        }
        q.add_square(&cone.bound, -1.0);
        let lin: Vec<(usize, f64)> = q
            .lin
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&j, &v)| (j, v))
            .collect();
        let mut expr = if lin.is_empty() {
            String::new()
        } else {
            linear_expr(&names, &lin)
        };
        let quad: Vec<((usize, usize), f64)> = q
            .quad
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&k, &v)| (k, v))
            .collect();
        if !quad.is_empty() {
            expr.push_str(if expr.is_empty() { "[ " } else { " + [ " });
            for (k, ((a, b), v)) in quad.iter().enumerate() {
                if k > 0 {
                    expr.push_str(if *v < 0.0 { " - " } else { " + " });
                } else if *v < 0.0 {
                    expr.push_str("- ");
                }
                if a == b {
                    let _ = write!(expr, "{} {} ^2", fmt_num(v.abs()), names[*a]);
                } else {
                    let _ = write!(expr, "{} {} * {}", fmt_num(v.abs()), names[*a], names[*b]);
                }
            }
            expr.push_str(" ]");
        }
        let _ = writeln!(
            out,
            " {}_{}: {} <= {}",
            family_label(cone.family),
            c,
            expr,
            fmt_num(-q.constant)
        );
    }

    out.push_str("Bounds\n");
    for v in &model.vars {
        if v.kind == VarKind::Binary {
            continue;
        }
        let _ = writeln!(
            out,
            " {} <= {} <= {}",
            fmt_num(v.lower),
            v.name,
            fmt_num(v.upper)
        );
    }
    out.push_str("Binaries\n");
    for v in model.vars.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}
