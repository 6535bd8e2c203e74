//! Modeling-level description of a second-order cone program.

use crate::ConicError;

/// Affine expression `Σ coef·x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn var(j: usize) -> Self {
        Self::scaled(j, 1.0)
    }

    pub fn scaled(j: usize, coef: f64) -> Self {
        Affine {
            terms: vec![(j, coef)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn with_term(mut self, j: usize, coef: f64) -> Self {
        self.terms.push((j, coef));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `Σ terms  (sense)  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `‖(entries)‖₂ ≤ bound`
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub entries: Vec<Affine>,
    pub bound: Affine,
}

impl SocConstraint {
    pub fn violation(&self, x: &[f64]) -> f64 {
        let norm = self
            .entries
            .iter()
            .map(|e| e.eval(x).powi(2))
            .sum::<f64>()
            .sqrt();
        (norm - self.bound.eval(x)).max(0.0)
    }
}

/// Minimize `objective·x + objective_constant` subject to variable bounds,
/// linear rows and second-order cone rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Problem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub linear: Vec<LinearConstraint>,
    pub cones: Vec<SocConstraint>,
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn add_linear(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.linear.push(LinearConstraint { terms, sense, rhs });
    }

    pub fn add_soc(&mut self, entries: Vec<Affine>, bound: Affine) {
        self.cones.push(SocConstraint { entries, bound });
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(ConicError::Dimension(format!(
                "{} costs but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || !self.objective[j].is_finite() {
                return Err(ConicError::NonFinite(format!("variable {j}")));
            }
        }
        let check = |terms: &[(usize, f64)], what: &str| -> Result<(), ConicError> {
            for &(j, a) in terms {
                if j >= n {
                    return Err(ConicError::UnknownVariable {
                        index: j,
                        context: what.to_string(),
                    });
                }
                if !a.is_finite() {
                    return Err(ConicError::NonFinite(what.to_string()));
                }
            }
            Ok(())
        };
        for (r, row) in self.linear.iter().enumerate() {
            check(&row.terms, &format!("linear row {r}"))?;
            if !row.rhs.is_finite() {
                return Err(ConicError::NonFinite(format!("rhs of linear row {r}")));
            }
        }
        for (k, cone) in self.cones.iter().enumerate() {
            let what = format!("cone {k}");
            check(&cone.bound.terms, &what)?;
            for e in &cone.entries {
                check(&e.terms, &what)?;
                if !e.constant.is_finite() {
                    return Err(ConicError::NonFinite(what.clone()));
                }
            }
            if !cone.bound.constant.is_finite() {
                return Err(ConicError::NonFinite(what));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.objective_constant
    }

    /// Largest violation over bounds, linear rows and cones.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.linear {
            worst = worst.max(row.violation(x));
        }
        for cone in &self.cones {
            worst = worst.max(cone.violation(x));
        }
        worst
    }
}
