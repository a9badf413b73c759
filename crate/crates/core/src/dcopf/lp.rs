//! Minimal LP model and the solver interface behind the DC-OPF.
//!
//! Models are always minimization problems with bounded variables and
//! `<=`, `>=` or `=` rows. Backends take `&self` and keep no state between
//! calls, so one backend can serve many threads.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolutionStatus};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpVar {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel {
    pub vars: Vec<LpVar>,
    pub rows: Vec<LpRow>,
}

impl LpModel {
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(LpVar {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum()
    }

    pub fn row_activity(&self, row: &LpRow, x: &[f64]) -> f64 {
        row.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| {
            let lhs = self.row_activity(r, x);
            match r.sense {
                Sense::Le => (lhs - r.rhs).max(0.0),
                Sense::Ge => (r.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - r.rhs).abs(),
            }
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Human-readable equation listing.
    pub fn listing(&self) -> String {
        let mut out = String::from("minimize\n ");
        let obj: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.cost != 0.0)
            .map(|v| format!("{:+} {}", v.cost, v.name))
            .collect();
        out.push_str(if obj.is_empty() { "0" } else { "" });
        out.push_str(&obj.join(" "));
        out.push_str("\nsubject to\n");
        for row in &self.rows {
            let lhs: Vec<String> = row
                .terms
                .iter()
                .map(|&(j, a)| format!("{:+} {}", a, self.vars[j].name))
                .collect();
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {}: {} {} {}", row.name, lhs.join(" "), op, row.rhs);
        }
        out.push_str("bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("LP solver failed: {0}")]
    Numerical(String),
}

pub trait LpBackend: Send + Sync {
    fn solve(&self, model: &LpModel) -> Result<LpSolution, LpError>;
}

/// Sparse primal simplex from the `microlp` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexBackend;

impl LpBackend for SimplexBackend {
    fn solve(&self, model: &LpModel) -> Result<LpSolution, LpError> {
        let started = Instant::now();
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = model
            .vars
            .iter()
            .map(|v| problem.add_var(v.cost, (v.lower, v.upper)))
            .collect();
        for row in &model.rows {
            let terms: Vec<_> = row.terms.iter().map(|&(j, a)| (vars[j], a)).collect();
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(terms.as_slice(), op, row.rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Numerical(other.to_string()),
        })?;
        let stats = outcome.stats();
        let solution = outcome
            .into_solution()
            .map_err(|_| LpError::Numerical("solve interrupted".into()))?;
        if solution.status() != SolutionStatus::Optimal {
            return Err(LpError::Numerical("optimality not proven".into()));
        }
        let values: Vec<f64> = vars.iter().map(|&v| solution.var_value_raw(v)).collect();
        Ok(LpSolution {
            objective: model.objective(&values),
            values,
            iterations: stats.lp_iterations,
            elapsed: started.elapsed(),
        })
    }
}
