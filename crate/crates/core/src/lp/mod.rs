//! Linear programming in maximize form: `max c.x` subject to `a.x <= b` rows
//! and per-variable box bounds.
//!
//! Exact mode runs a dense-tableau two-phase simplex over `BigRational` with
//! Bland's rule, so optimal points satisfy every constraint with no slack
//! error. Float mode runs the same tableau over `f64` (Dantzig pricing with a
//! Bland fallback on degenerate stalls) and verifies the answer against the
//! caller's tolerance before returning it.

mod revised;
mod simplex;

use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::num::{format_rational, Rational};

pub use simplex::{optimal_value, solve};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    Float { tolerance: f64 },
}

impl Mode {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    pub fn float() -> Self {
        Mode::Float {
            tolerance: Self::DEFAULT_TOLERANCE,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Exact
    }
}

/// One `terms . x <= rhs` row. Terms are sparse `(variable, coefficient)`
/// pairs; repeated indices are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        Constraint { terms, rhs }
    }

    pub fn dense(coefficients: &[Rational], rhs: Rational) -> Self {
        let terms = coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.clone()))
            .collect();
        Constraint { terms, rhs }
    }

    pub fn activity(&self, point: &[Rational]) -> Rational {
        self.terms
            .iter()
            .fold(Rational::zero(), |acc, (j, a)| acc + a * &point[*j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    /// `None` is an unbounded side.
    pub lower: Vec<Option<Rational>>,
    pub upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    /// All variables start in `[0, +inf)` with zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            lower: vec![Some(Rational::zero()); num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn set_objective(&mut self, var: usize, coefficient: Rational) {
        self.objective[var] = coefficient;
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, Rational)>, rhs: Rational) {
        self.constraints.push(Constraint::new(terms, rhs));
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::MalformedLp(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.lower.len() != self.num_vars || self.upper.len() != self.num_vars {
            return Err(Error::MalformedLp("bound vectors do not match num_vars".into()));
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = row.terms.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(Error::MalformedLp(format!(
                    "constraint {r} references variable {j} of {}",
                    self.num_vars
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, point: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(point)
            .fold(Rational::zero(), |acc, (c, x)| acc + c * x)
    }

    /// Exact feasibility of `point` against every row and bound.
    pub fn is_feasible(&self, point: &[Rational]) -> bool {
        point.len() == self.num_vars
            && (0..self.num_vars).all(|j| {
                self.lower[j].as_ref().is_none_or(|l| &point[j] >= l)
                    && self.upper[j].as_ref().is_none_or(|u| &point[j] <= u)
            })
            && self.constraints.iter().all(|c| c.activity(point) <= c.rhs)
    }

    /// Plain-text dump with exact fractions, one constraint per line.
    pub fn to_text(&self) -> String {
        fn linear(terms: &[(usize, Rational)]) -> String {
            if terms.is_empty() {
                return "0".to_string();
            }
            terms
                .iter()
                .enumerate()
                .map(|(idx, (j, a))| {
                    let sign = if a.is_negative() { "- " } else if idx > 0 { "+ " } else { "" };
                    format!("{sign}{} x{j}", format_rational(&a.abs()))
                })
                .collect::<Vec<_>>()
                .join(" ")
        }
        let mut out = String::from("maximize\n");
        let obj: Vec<(usize, Rational)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.clone()))
            .collect();
        let _ = writeln!(out, "  obj: {}", linear(&obj));
        out.push_str("subject to\n");
        for (r, row) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "  c{r}: {} <= {}", linear(&row.terms), format_rational(&row.rhs));
        }
        out.push_str("bounds\n");
        for j in 0..self.num_vars {
            let line = match (&self.lower[j], &self.upper[j]) {
                (None, None) => format!("x{j} free"),
                (Some(l), None) => format!("x{j} >= {}", format_rational(l)),
                (None, Some(u)) => format!("x{j} <= {}", format_rational(u)),
                (Some(l), Some(u)) => format!("{} <= x{j} <= {}", format_rational(l), format_rational(u)),
            };
            let _ = writeln!(out, "  {line}");
        }
        out.push_str("end\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: Option<Rational>,
    pub point: Option<Vec<Rational>>,
    /// Row multipliers (one per constraint), present iff optimal.
    pub duals: Option<Vec<Rational>>,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective_value: None,
            point: None,
            duals: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective and point of an optimal solution; anything else is reported
    /// as a solver error naming `context`.
    pub fn into_optimal(self, context: &str) -> Result<(Rational, Vec<Rational>)> {
        match (self.status, self.objective_value, self.point) {
            (LpStatus::Optimal, Some(v), Some(x)) => Ok((v, x)),
            (status, _, _) => Err(Error::Solver(format!("{context}: LP finished with status {status:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    pub primal_value: Rational,
    /// Dual objective; `None` when the multipliers admit no finite bound.
    pub dual_value: Option<Rational>,
}

impl CertificateReport {
    pub fn ok(&self) -> bool {
        self.primal_feasible
            && self.dual_feasible
            && self.dual_value.as_ref().is_some_and(|d| *d >= self.primal_value)
    }
}

/// Reduced costs `c - A^T y` for row multipliers `y`.
pub(crate) fn reduced_costs(lp: &LinearProgram, dual: &[Rational]) -> Vec<Rational> {
    let mut r = lp.objective.clone();
    for (row, y) in lp.constraints.iter().zip(dual) {
        if y.is_zero() {
            continue;
        }
        for (j, a) in &row.terms {
            r[*j] -= a * y;
        }
    }
    r
}

/// Weak-duality check. The dual of `max c.x, Ax <= b, l <= x <= u` with row
/// multipliers `y >= 0` has value `b.y + sum_j max_{l_j <= x_j <= u_j} r_j x_j`
/// where `r = c - A^T y`; it is feasible iff every such maximum is finite.
pub fn check_certificate(lp: &LinearProgram, primal: &[Rational], dual: &[Rational]) -> Result<CertificateReport> {
    lp.validate()?;
    if primal.len() != lp.num_vars {
        return Err(Error::DimensionMismatch(format!(
            "primal point has {} entries for {} variables",
            primal.len(),
            lp.num_vars
        )));
    }
    if dual.len() != lp.constraints.len() {
        return Err(Error::DimensionMismatch(format!(
            "dual point has {} entries for {} constraints",
            dual.len(),
            lp.constraints.len()
        )));
    }
    let primal_feasible = lp.is_feasible(primal);
    let primal_value = lp.objective_value(primal);

    let mut dual_feasible = dual.iter().all(|y| !y.is_negative());
    let mut value = lp
        .constraints
        .iter()
        .zip(dual)
        .fold(Rational::zero(), |acc, (row, y)| acc + &row.rhs * y);
    for (j, r) in reduced_costs(lp, dual).iter().enumerate() {
        if r.is_positive() {
            match &lp.upper[j] {
                Some(u) => value += r * u,
                None => dual_feasible = false,
            }
        } else if r.is_negative() {
            match &lp.lower[j] {
                Some(l) => value += r * l,
                None => dual_feasible = false,
            }
        }
    }
    Ok(CertificateReport {
        primal_feasible,
        dual_feasible,
        primal_value,
        dual_value: dual_feasible.then_some(value),
    })
}
