//! Problem and solution types shared by the LP and MILP solvers.

use crate::error::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// A single linear row `Σ coeff·x (rel) rhs`, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: Option<String>,
}

/// Linear program over bounded continuous variables.
///
/// Bounds may be infinite on either side; `objective_offset` is added to the
/// reported objective value and does not affect the optimal point.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub var_names: Vec<Option<String>>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            objective_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
            constraints: Vec::new(),
            var_names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a variable and returns its column index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(None);
        self.objective.len() - 1
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        let idx = self.add_var(cost, lower, upper);
        self.var_names[idx] = Some(name.into());
        idx
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
            name: None,
        });
        self.constraints.len() - 1
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let idx = self.add_constraint(terms, relation, rhs);
        self.constraints[idx].name = Some(name.into());
        idx
    }

    /// Objective value of `x` including the constant offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.var_names.len() != n {
            return Err(LpError::Dimension(format!(
                "{} objective entries but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if !self.objective_offset.is_finite() {
            return Err(LpError::NonFinite("objective offset".into()));
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFinite(format!("objective coefficient of x{j}")));
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds { var: j, lower: lo, upper: hi });
            }
            if lo > hi {
                return Err(LpError::InvalidBounds { var: j, lower: lo, upper: hi });
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, a) in &c.terms {
                if j >= n {
                    return Err(LpError::Dimension(format!("row {i} references x{j} but only {n} variables exist")));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("coefficient of x{j} in row {i}")));
                }
            }
        }
        Ok(())
    }
}

/// Linear program with integrality restrictions on a subset of columns.
#[derive(Clone, Debug, PartialEq)]
pub struct MipProblem {
    pub lp: LinearProgram,
    pub integer_vars: Vec<usize>,
    pub binary_vars: Vec<usize>,
}

impl MipProblem {
    pub fn new(lp: LinearProgram) -> Self {
        Self {
            lp,
            integer_vars: Vec::new(),
            binary_vars: Vec::new(),
        }
    }

    /// Adds a `{0,1}` column.
    pub fn add_binary(&mut self, cost: f64) -> usize {
        let j = self.lp.add_var(cost, 0.0, 1.0);
        self.binary_vars.push(j);
        j
    }

    pub fn add_named_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.lp.add_named_var(name, cost, 0.0, 1.0);
        self.binary_vars.push(j);
        j
    }

    pub fn add_integer(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        let j = self.lp.add_var(cost, lower, upper);
        self.integer_vars.push(j);
        j
    }

    /// Sorted, deduplicated union of the integer and binary index sets.
    pub fn integral_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.integer_vars.iter().chain(&self.binary_vars).copied().collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn validate(&self) -> Result<(), LpError> {
        self.lp.validate()?;
        let n = self.lp.num_vars();
        for &j in self.integer_vars.iter().chain(&self.binary_vars) {
            if j >= n {
                return Err(LpError::Dimension(format!("integer index {j} out of range ({n} variables)")));
            }
        }
        for &j in &self.binary_vars {
            if self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0 {
                return Err(LpError::InvalidBounds {
                    var: j,
                    lower: self.lp.lower[j],
                    upper: self.lp.upper[j],
                });
            }
        }
        for &j in &self.integer_vars {
            if !self.lp.lower[j].is_finite() || !self.lp.upper[j].is_finite() {
                return Err(LpError::UnboundedInteger(j));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal values; empty when no feasible point is known.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals in the sense of the original problem (LP only).
    pub duals: Vec<f64>,
    /// Reduced costs of the structural columns (LP only).
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Branch-and-bound nodes explored (MIP only).
    pub nodes: usize,
    /// Best proven bound (MIP only; equals `objective` for LPs).
    pub bound: f64,
}

impl Solution {
    pub(crate) fn without_point(status: SolveStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            nodes: 0,
            bound: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Relative gap between incumbent and bound, `|obj - bound| / max(1, |obj|)`.
    pub fn gap(&self) -> f64 {
        if self.objective.is_finite() && self.bound.is_finite() {
            (self.objective - self.bound).abs() / self.objective.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    }
}
