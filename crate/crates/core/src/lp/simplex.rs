use num_traits::{Signed, Zero};

use super::revised;
use super::{check_certificate, LinearProgram, LpSolution, LpStatus, Mode};
use crate::error::{Error, Result};
use crate::num::{from_f64, to_f64, Rational};

/// Arithmetic the tableau needs; implemented exactly for `Rational` and with
/// fixed zero tolerances for `f64`.
trait Scalar: Clone + std::fmt::Debug {
    const EXACT: bool;
    fn nil() -> Self;
    fn one() -> Self;
    fn negligible(&self) -> bool;
    /// Structural zero, ignoring any tolerance.
    fn is_exact_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn neg(&self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// `self -= factor * x`
    fn sub_mul(&mut self, factor: &Self, x: &Self);
    fn less(&self, other: &Self) -> bool;
    fn magnitude(&self) -> f64;
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn nil() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn negligible(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn sub_mul(&mut self, factor: &Self, x: &Self) {
        *self -= factor * x;
    }
    fn less(&self, other: &Self) -> bool {
        self < other
    }
    fn magnitude(&self) -> f64 {
        to_f64(&self.abs())
    }
}

const FLOAT_EPS: f64 = 1e-9;
const FLOAT_DROP: f64 = 1e-14;

impl Scalar for f64 {
    const EXACT: bool = false;
    fn nil() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn negligible(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn sub_mul(&mut self, factor: &Self, x: &Self) {
        *self -= factor * x;
        if self.abs() < FLOAT_DROP {
            *self = 0.0;
        }
    }
    fn less(&self, other: &Self) -> bool {
        self < other
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// x = offset + y
    Shift { col: usize, offset: Rational },
    /// x = offset - y
    Reflect { col: usize, offset: Rational },
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
}

/// `max cost.y` s.t. `rows y <= rhs`, `y >= 0`. The first `original_rows`
/// rows correspond one-to-one with the caller's constraints; the rest are
/// finite upper bounds.
struct StandardForm {
    rows: Vec<Vec<(usize, Rational)>>,
    rhs: Vec<Rational>,
    cost: Vec<Rational>,
    num_cols: usize,
    vars: Vec<VarMap>,
    original_rows: usize,
}

impl StandardForm {
    /// `None` when the bounds alone are contradictory.
    fn build(lp: &LinearProgram) -> Option<StandardForm> {
        let mut vars = Vec::with_capacity(lp.num_vars);
        let mut num_cols = 0;
        let mut bound_rows = Vec::new();
        for j in 0..lp.num_vars {
            let map = match (&lp.lower[j], &lp.upper[j]) {
                (Some(l), upper) => {
                    let col = num_cols;
                    num_cols += 1;
                    if let Some(u) = upper {
                        if u < l {
                            return None;
                        }
                        bound_rows.push((col, u - l));
                    }
                    VarMap::Shift { col, offset: l.clone() }
                }
                (None, Some(u)) => {
                    let col = num_cols;
                    num_cols += 1;
                    VarMap::Reflect { col, offset: u.clone() }
                }
                (None, None) => {
                    let pos = num_cols;
                    num_cols += 2;
                    VarMap::Split { pos, neg: pos + 1 }
                }
            };
            vars.push(map);
        }

        let mut rows = Vec::with_capacity(lp.constraints.len() + bound_rows.len());
        let mut rhs = Vec::with_capacity(rows.capacity());
        for constraint in &lp.constraints {
            let mut dense: Vec<(usize, Rational)> = Vec::with_capacity(constraint.terms.len());
            let mut b = constraint.rhs.clone();
            for (j, a) in &constraint.terms {
                match &vars[*j] {
                    VarMap::Shift { col, offset } => {
                        b -= a * offset;
                        dense.push((*col, a.clone()));
                    }
                    VarMap::Reflect { col, offset } => {
                        b -= a * offset;
                        dense.push((*col, -a));
                    }
                    VarMap::Split { pos, neg } => {
                        dense.push((*pos, a.clone()));
                        dense.push((*neg, -a));
                    }
                }
            }
            rows.push(merge_terms(dense));
            rhs.push(b);
        }
        let original_rows = rows.len();
        for (col, width) in bound_rows {
            rows.push(vec![(col, Rational::from_integer(1.into()))]);
            rhs.push(width);
        }

        let mut cost = vec![<Rational as Zero>::zero(); num_cols];
        for (j, c) in lp.objective.iter().enumerate() {
            match &vars[j] {
                VarMap::Shift { col, .. } => cost[*col] += c,
                VarMap::Reflect { col, .. } => cost[*col] -= c,
                VarMap::Split { pos, neg } => {
                    cost[*pos] += c;
                    cost[*neg] -= c;
                }
            }
        }
        Some(StandardForm {
            rows,
            rhs,
            cost,
            num_cols,
            vars,
            original_rows,
        })
    }

    fn recover<F>(&self, y: &[F], convert: impl Fn(&F) -> Rational) -> Vec<Rational> {
        self.vars
            .iter()
            .map(|map| match map {
                VarMap::Shift { col, offset } => offset + convert(&y[*col]),
                VarMap::Reflect { col, offset } => offset - convert(&y[*col]),
                VarMap::Split { pos, neg } => convert(&y[*pos]) - convert(&y[*neg]),
            })
            .collect()
    }
}

fn merge_terms(mut terms: Vec<(usize, Rational)>) -> Vec<(usize, Rational)> {
    terms.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match out.last_mut() {
            Some((last, acc)) if *last == j => *acc += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|(_, a)| !Zero::is_zero(a));
    out
}

enum Outcome<F> {
    Infeasible,
    Unbounded,
    /// Structural column values and one multiplier per standard-form row.
    Optimal { y: Vec<F>, duals: Vec<F> },
}

#[derive(Clone, Copy, PartialEq)]
enum Pricing {
    Bland,
    Dantzig,
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    /// Reduced costs of the real objective; the last entry is the value.
    obj: Vec<F>,
    obj_value: F,
    /// Phase-one reduced costs (maximize minus the artificial sum).
    aux: Option<(Vec<F>, F)>,
    num_struct: usize,
    num_slack: usize,
    num_cols: usize,
    /// Standard-form row index of each tableau row (rows may be dropped).
    row_origin: Vec<usize>,
}

impl<F: Scalar> Tableau<F> {
    fn new(struct_rows: Vec<Vec<(usize, F)>>, rhs: Vec<F>, cost: Vec<F>, num_struct: usize) -> Self {
        let m = struct_rows.len();
        let negated: Vec<bool> = rhs.iter().map(|b| b.is_neg()).collect();
        let num_art = negated.iter().filter(|&&n| n).count();
        let num_cols = num_struct + m + num_art;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut out_rhs = Vec::with_capacity(m);
        let mut art = num_struct + m;
        for (r, (terms, b)) in struct_rows.into_iter().zip(rhs).enumerate() {
            let mut row = vec![F::nil(); num_cols];
            if negated[r] {
                for (j, a) in terms {
                    row[j] = a.neg();
                }
                row[num_struct + r] = F::one().neg();
                row[art] = F::one();
                basis.push(art);
                art += 1;
                out_rhs.push(b.neg());
            } else {
                for (j, a) in terms {
                    row[j] = a;
                }
                row[num_struct + r] = F::one();
                basis.push(num_struct + r);
                out_rhs.push(b);
            }
            rows.push(row);
        }
        let mut obj = vec![F::nil(); num_cols];
        for (j, c) in cost.iter().enumerate() {
            obj[j] = c.neg();
        }
        let aux = (num_art > 0).then(|| {
            let mut d = vec![F::nil(); num_cols];
            let mut value = F::nil();
            for r in (0..m).filter(|&r| negated[r]) {
                for (j, a) in rows[r].iter().enumerate() {
                    if j < num_struct + m && !a.is_exact_zero() {
                        d[j].sub_mul(&F::one(), a);
                    }
                }
                value.sub_mul(&F::one(), &out_rhs[r]);
            }
            (d, value)
        });
        Tableau {
            rows,
            rhs: out_rhs,
            basis,
            obj,
            obj_value: F::nil(),
            aux,
            num_struct,
            num_slack: m,
            num_cols,
            row_origin: (0..m).collect(),
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.num_struct + self.num_slack
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.rows[r][q].clone();
        let pivot_cols: Vec<usize> = (0..self.num_cols).filter(|&c| !self.rows[r][c].is_exact_zero() || c == q).collect();
        for &c in &pivot_cols {
            self.rows[r][c] = self.rows[r][c].div(&piv);
        }
        self.rows[r][q] = F::one();
        self.rhs[r] = self.rhs[r].div(&piv);
        let pivot_row: Vec<(usize, F)> = pivot_cols.iter().map(|&c| (c, self.rows[r][c].clone())).collect();
        let pivot_rhs = self.rhs[r].clone();

        let eliminate = |row: &mut Vec<F>, value: &mut F| {
            let factor = row[q].clone();
            if factor.is_exact_zero() {
                return;
            }
            for (c, a) in &pivot_row {
                row[*c].sub_mul(&factor, a);
            }
            row[q] = F::nil();
            value.sub_mul(&factor, &pivot_rhs);
        };
        for s in 0..self.rows.len() {
            if s != r {
                let (row, value) = (&mut self.rows[s], &mut self.rhs[s]);
                eliminate(row, value);
            }
        }
        eliminate(&mut self.obj, &mut self.obj_value);
        if let Some((d, v)) = self.aux.as_mut() {
            eliminate(d, v);
        }
        self.basis[r] = q;
    }

    fn entering(&self, costs: &[F], allow_artificial: bool, pricing: Pricing) -> Option<usize> {
        let limit = if allow_artificial { self.num_cols } else { self.num_struct + self.num_slack };
        match pricing {
            Pricing::Bland => (0..limit).find(|&j| costs[j].is_neg()),
            Pricing::Dantzig => {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if costs[j].is_neg() && best.is_none_or(|b| costs[j].less(&costs[b])) {
                        best = Some(j);
                    }
                }
                best
            }
        }
    }

    /// Minimum-ratio row for entering column `q`; ties go to the lowest
    /// basic variable (Bland) or the largest pivot (Dantzig, float only).
    fn leaving(&self, q: usize, pricing: Pricing) -> Option<usize> {
        let mut best: Option<(usize, F)> = None;
        for r in 0..self.rows.len() {
            let a = &self.rows[r][q];
            if !a.is_pos() {
                continue;
            }
            let ratio = self.rhs[r].div(a);
            let better = match &best {
                None => true,
                Some((b, best_ratio)) => {
                    if F::EXACT {
                        ratio.less(best_ratio) || (!best_ratio.less(&ratio) && self.basis[r] < self.basis[*b])
                    } else {
                        let (x, y) = (ratio.magnitude() * sign(&ratio), best_ratio.magnitude() * sign(best_ratio));
                        let tie = (x - y).abs() <= 1e-12 * (1.0 + y.abs());
                        if tie {
                            match pricing {
                                Pricing::Bland => self.basis[r] < self.basis[*b],
                                Pricing::Dantzig => a.magnitude() > self.rows[*b][q].magnitude(),
                            }
                        } else {
                            x < y
                        }
                    }
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    /// Runs simplex on the selected objective row. `Ok(false)` means unbounded.
    fn optimize(&mut self, phase_one: bool, exact_bland: bool) -> Result<bool> {
        let mut pricing = if exact_bland { Pricing::Bland } else { Pricing::Dantzig };
        let mut degenerate_streak = 0usize;
        let cap = 200 * (self.rows.len() + self.num_cols) + 10_000;
        for _ in 0..cap {
            let costs = if phase_one { &self.aux.as_ref().expect("phase one row").0 } else { &self.obj };
            let Some(q) = self.entering(costs, phase_one, pricing) else {
                return Ok(true);
            };
            let Some(r) = self.leaving(q, pricing) else {
                return Ok(false);
            };
            if !exact_bland {
                if self.rhs[r].negligible() {
                    degenerate_streak += 1;
                    if degenerate_streak > 50 {
                        pricing = Pricing::Bland;
                    }
                } else {
                    degenerate_streak = 0;
                    pricing = Pricing::Dantzig;
                }
            }
            self.pivot(r, q);
        }
        Err(Error::Solver("simplex iteration limit reached".into()))
    }

    fn run(mut self, exact_bland: bool) -> Result<Outcome<F>> {
        if self.aux.is_some() {
            let bounded = self.optimize(true, exact_bland)?;
            if !bounded {
                return Err(Error::Solver("phase one reported unbounded".into()));
            }
            let (_, value) = self.aux.as_ref().unwrap();
            if value.is_neg() {
                return Ok(Outcome::Infeasible);
            }
            // Drive zero-level artificials out of the basis; rows where that is
            // impossible are redundant and dropped.
            let mut r = 0;
            while r < self.rows.len() {
                if self.is_artificial(self.basis[r]) {
                    let limit = self.num_struct + self.num_slack;
                    let mut best: Option<usize> = None;
                    for j in 0..limit {
                        let a = &self.rows[r][j];
                        if !a.negligible() && best.is_none_or(|b| a.magnitude() > self.rows[r][b].magnitude()) {
                            best = Some(j);
                            if F::EXACT {
                                break;
                            }
                        }
                    }
                    match best {
                        Some(j) => self.pivot(r, j),
                        None => {
                            self.rows.remove(r);
                            self.rhs.remove(r);
                            self.basis.remove(r);
                            self.row_origin.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
            self.aux = None;
        }
        if !self.optimize(false, exact_bland)? {
            return Ok(Outcome::Unbounded);
        }
        let mut y = vec![F::nil(); self.num_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.num_struct {
                y[b] = self.rhs[r].clone();
            }
        }
        let duals = (0..self.num_slack).map(|r| self.obj[self.num_struct + r].clone()).collect();
        Ok(Outcome::Optimal { y, duals })
    }
}

fn sign<F: Scalar>(x: &F) -> f64 {
    if x.is_neg() {
        -1.0
    } else {
        1.0
    }
}

pub fn solve(lp: &LinearProgram, mode: Mode) -> Result<LpSolution> {
    solve_with(lp, mode, true)
}

/// Optimal objective value only. In float mode this skips converting the
/// primal and dual vectors to rationals.
pub fn optimal_value(lp: &LinearProgram, mode: Mode, context: &str) -> Result<Rational> {
    let solution = solve_with(lp, mode, false)?;
    match (solution.status, solution.objective_value) {
        (LpStatus::Optimal, Some(v)) => Ok(v),
        (status, _) => Err(Error::Solver(format!("{context}: LP finished with status {status:?}"))),
    }
}

fn solve_with(lp: &LinearProgram, mode: Mode, with_point: bool) -> Result<LpSolution> {
    lp.validate()?;
    let standard = || StandardForm::build(lp).ok_or(());
    match mode {
        Mode::Exact => match standard() {
            Ok(sf) => match exact_from_basis(lp) {
                Some(solution) => Ok(solution),
                None => solve_exact(lp, &sf),
            },
            Err(()) => Ok(LpSolution::without_point(LpStatus::Infeasible)),
        },
        Mode::Float { tolerance } => match solve_revised(lp, tolerance, with_point) {
            Ok(solution) => Ok(solution),
            Err(err) => {
                log::debug!("revised simplex failed ({err}); retrying on the tableau");
                match standard() {
                    Ok(sf) => solve_float(lp, &sf, tolerance),
                    Err(()) => Ok(LpSolution::without_point(LpStatus::Infeasible)),
                }
            }
        },
    }
}

fn solve_exact(lp: &LinearProgram, sf: &StandardForm) -> Result<LpSolution> {
    let tableau = Tableau::<Rational>::new(sf.rows.clone(), sf.rhs.clone(), sf.cost.clone(), sf.num_cols);
    match tableau.run(true)? {
        Outcome::Infeasible => Ok(LpSolution::without_point(LpStatus::Infeasible)),
        Outcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded)),
        Outcome::Optimal { y, duals } => {
            let point = sf.recover(&y, |v| v.clone());
            let duals: Vec<Rational> = duals[..sf.original_rows].to_vec();
            let report = check_certificate(lp, &point, &duals)?;
            if !report.primal_feasible || report.dual_value.as_ref() != Some(&report.primal_value) {
                return Err(Error::Solver(format!(
                    "exact optimum failed self-check (primal feasible: {}, dual feasible: {})",
                    report.primal_feasible, report.dual_feasible
                )));
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective_value: Some(report.primal_value),
                point: Some(point),
                duals: Some(duals),
            })
        }
    }
}

/// `f64` image of an LP, converted once and shared by the solver and the
/// verifier.
struct FloatImage {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FloatImage {
    fn new(lp: &LinearProgram) -> Self {
        FloatImage {
            rows: lp
                .constraints
                .iter()
                .map(|c| c.terms.iter().map(|(j, a)| (*j, to_f64(a))).collect())
                .collect(),
            rhs: lp.constraints.iter().map(|c| to_f64(&c.rhs)).collect(),
            objective: lp.objective.iter().map(to_f64).collect(),
            lower: lp.lower.iter().map(|l| l.as_ref().map_or(f64::NEG_INFINITY, to_f64)).collect(),
            upper: lp.upper.iter().map(|u| u.as_ref().map_or(f64::INFINITY, to_f64)).collect(),
        }
    }
}

/// Runs the revised simplex on the scaled float image and undoes the scaling.
fn run_revised(lp: &LinearProgram, img: &FloatImage) -> Result<revised::Status> {
    let row_scale: Vec<f64> = img
        .rows
        .iter()
        .map(|row| {
            let max = row.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
            if max > 0.0 {
                1.0 / max
            } else {
                1.0
            }
        })
        .collect();
    let cost_max = img.objective.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let cost_scale = if cost_max > 0.0 { 1.0 / cost_max } else { 1.0 };
    let mut cols = vec![Vec::new(); lp.num_vars];
    for (r, (row, s)) in img.rows.iter().zip(&row_scale).enumerate() {
        for &(j, a) in row {
            cols[j].push((r, a * s));
        }
    }
    for col in &mut cols {
        col.sort_by_key(|(r, _)| *r);
        col.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
    }
    if img.lower.iter().zip(&img.upper).any(|(l, u)| l > u) {
        return Ok(revised::Status::Infeasible);
    }
    let problem = revised::Problem {
        cols,
        rhs: img.rhs.iter().zip(&row_scale).map(|(b, s)| b * s).collect(),
        cost: img.objective.iter().map(|c| c * cost_scale).collect(),
        lower: img.lower.clone(),
        upper: img.upper.clone(),
    };
    Ok(match revised::solve(&problem)? {
        revised::Status::Optimal { x, duals, state } => {
            let x = x
                .iter()
                .zip(img.lower.iter().zip(&img.upper))
                .map(|(&v, (&lo, &hi))| {
                    let v = if v.abs() < FLOAT_DROP { 0.0 } else { v };
                    v.clamp(lo, hi)
                })
                .collect();
            let duals = duals
                .iter()
                .zip(&row_scale)
                .map(|(d, s)| (d * s / cost_scale).max(0.0))
                .collect();
            revised::Status::Optimal { x, duals, state }
        }
        other => other,
    })
}

fn solve_revised(lp: &LinearProgram, tolerance: f64, with_point: bool) -> Result<LpSolution> {
    let img = FloatImage::new(lp);
    match run_revised(lp, &img)? {
        revised::Status::Infeasible => Ok(LpSolution::without_point(LpStatus::Infeasible)),
        revised::Status::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded)),
        revised::Status::Optimal { x, duals, .. } => finish_float(&img, x, duals, tolerance, with_point),
    }
}

/// Rebuilds the vertex and duals of the float optimal basis in exact
/// arithmetic. Returns `None` when the basis is singular or not optimal for
/// the exact data; callers then fall back to the exact tableau.
fn exact_from_basis(lp: &LinearProgram) -> Option<LpSolution> {
    let img = FloatImage::new(lp);
    let state = match run_revised(lp, &img) {
        Ok(revised::Status::Optimal { state, .. }) => state,
        _ => return None,
    };
    let n = lp.num_vars;
    let mut x = vec![Rational::zero(); n];
    let mut basic = Vec::new();
    for j in 0..n {
        match state[j] {
            revised::BASIC => basic.push(j),
            revised::AT_LOWER | revised::FIXED => x[j] = lp.lower[j].clone()?,
            revised::AT_UPPER => x[j] = lp.upper[j].clone()?,
            _ => {}
        }
    }
    let tight: Vec<usize> = (0..lp.constraints.len()).filter(|r| state[n + r] != revised::BASIC).collect();
    if tight.len() != basic.len() {
        return None;
    }
    let column: Vec<Option<usize>> = {
        let mut c = vec![None; n];
        for (k, &j) in basic.iter().enumerate() {
            c[j] = Some(k);
        }
        c
    };
    let k = basic.len();
    let mut matrix = vec![vec![Rational::zero(); k]; k];
    let mut rhs = Vec::with_capacity(k);
    for (i, &r) in tight.iter().enumerate() {
        let row = &lp.constraints[r];
        let mut b = row.rhs.clone();
        for (j, a) in &row.terms {
            match column[*j] {
                Some(c) => matrix[i][c] += a,
                None => b -= a * &x[*j],
            }
        }
        rhs.push(b);
    }
    let transpose: Vec<Vec<Rational>> = (0..k).map(|c| (0..k).map(|i| matrix[i][c].clone()).collect()).collect();
    let costs: Vec<Rational> = basic.iter().map(|&j| lp.objective[j].clone()).collect();
    let values = solve_square(matrix, rhs)?;
    let multipliers = solve_square(transpose, costs)?;
    for (&j, v) in basic.iter().zip(values) {
        x[j] = v;
    }
    let mut duals = vec![Rational::zero(); lp.constraints.len()];
    for (&r, y) in tight.iter().zip(multipliers) {
        duals[r] = y;
    }
    let report = check_certificate(lp, &x, &duals).ok()?;
    if !report.ok() || report.dual_value.as_ref() != Some(&report.primal_value) {
        return None;
    }
    Some(LpSolution {
        status: LpStatus::Optimal,
        objective_value: Some(report.primal_value),
        point: Some(x),
        duals: Some(duals),
    })
}

/// Gaussian elimination over the rationals; `None` if singular.
fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in &mut a[col][col..] {
            *v *= &inv;
        }
        b[col] *= &inv;
        let (head, tail) = a.split_at_mut(col + 1);
        let prow = &head[col];
        for (offset, row) in tail.iter_mut().enumerate() {
            let f = row[col].clone();
            if f.is_zero() {
                continue;
            }
            for c in col..k {
                if !prow[c].is_zero() {
                    row[c] -= &f * &prow[c];
                }
            }
            let bc = b[col].clone();
            b[col + 1 + offset] -= f * bc;
        }
    }
    for col in (0..k).rev() {
        let mut v = b[col].clone();
        for c in col + 1..k {
            if !a[col][c].is_zero() {
                v -= &a[col][c] * &b[c];
            }
        }
        b[col] = v;
    }
    Some(b)
}

fn finish_float(
    img: &FloatImage,
    x: Vec<f64>,
    duals: Vec<f64>,
    tolerance: f64,
    with_point: bool,
) -> Result<LpSolution> {
    let objective = verify_float(img, &x, &duals, tolerance)?;
    let rational = |v: &f64| from_f64(*v).unwrap_or_default();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: Some(rational(&objective)),
        point: with_point.then(|| x.iter().map(rational).collect()),
        duals: with_point.then(|| duals.iter().map(rational).collect()),
    })
}

fn solve_float(lp: &LinearProgram, sf: &StandardForm, tolerance: f64) -> Result<LpSolution> {
    let row_scale: Vec<f64> = sf
        .rows
        .iter()
        .map(|row| {
            let max = row.iter().map(|(_, a)| to_f64(a).abs()).fold(0.0, f64::max);
            if max > 0.0 {
                1.0 / max
            } else {
                1.0
            }
        })
        .collect();
    let cost_max = sf.cost.iter().map(|c| to_f64(c).abs()).fold(0.0, f64::max);
    let cost_scale = if cost_max > 0.0 { 1.0 / cost_max } else { 1.0 };
    let rows: Vec<Vec<(usize, f64)>> = sf
        .rows
        .iter()
        .zip(&row_scale)
        .map(|(row, s)| row.iter().map(|(j, a)| (*j, to_f64(a) * s)).collect())
        .collect();
    let rhs: Vec<f64> = sf.rhs.iter().zip(&row_scale).map(|(b, s)| to_f64(b) * s).collect();
    let cost: Vec<f64> = sf.cost.iter().map(|c| to_f64(c) * cost_scale).collect();

    let tableau = Tableau::<f64>::new(rows, rhs, cost, sf.num_cols);
    match tableau.run(false)? {
        Outcome::Infeasible => Ok(LpSolution::without_point(LpStatus::Infeasible)),
        Outcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded)),
        Outcome::Optimal { y, duals } => {
            let y: Vec<f64> = y.into_iter().map(|v| if v.abs() < FLOAT_DROP { 0.0 } else { v.max(0.0) }).collect();
            let x = sf.recover(&y, |v| from_f64(*v).unwrap_or_default());
            let img = FloatImage::new(lp);
            let x: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(j, v)| to_f64(v).clamp(img.lower[j], img.upper[j]))
                .collect();
            let duals: Vec<f64> = duals[..sf.original_rows]
                .iter()
                .zip(&row_scale)
                .map(|(d, s)| (d * s / cost_scale).max(0.0))
                .collect();
            finish_float(&img, x, duals, tolerance, true)
        }
    }
}

/// Primal feasibility, dual feasibility and the duality gap, each relative
/// to the magnitude of the data involved. Returns the primal objective.
fn verify_float(img: &FloatImage, x: &[f64], duals: &[f64], tolerance: f64) -> Result<f64> {
    let mut primal_obj = 0.0;
    let mut obj_scale = 0.0f64;
    for (c, v) in img.objective.iter().zip(x) {
        primal_obj += c * v;
        obj_scale += (c * v).abs();
    }
    let mut reduced = img.objective.clone();
    let mut dual_obj = 0.0;
    for ((row, &b), &y) in img.rows.iter().zip(&img.rhs).zip(duals) {
        let mut activity = 0.0;
        let mut scale = 0.0f64;
        for &(j, a) in row {
            activity += a * x[j];
            scale = scale.max(a.abs());
            reduced[j] -= a * y;
        }
        if activity - b > tolerance * (1.0 + b.abs() + scale) {
            return Err(Error::Solver(format!(
                "float solution violates a row by {:e}",
                activity - b
            )));
        }
        dual_obj += b * y;
    }
    let cost_scale = img.objective.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let reduced_tol = tolerance.max(1e-9) * 1e3 * (1.0 + cost_scale);
    for (j, &r) in reduced.iter().enumerate() {
        let (lo, hi) = (img.lower[j], img.upper[j]);
        let bound = if r > 0.0 { hi } else if r < 0.0 { lo } else { continue };
        if bound.is_finite() {
            dual_obj += r * bound;
        } else if r.abs() > reduced_tol {
            return Err(Error::Solver(format!("float dual infeasible on variable {j} ({r:e})")));
        }
    }
    let gap = (dual_obj - primal_obj).abs();
    if gap > tolerance.max(1e-9) * 1e3 * (1.0 + obj_scale) {
        return Err(Error::Solver(format!(
            "float duality gap {gap:e} (primal {primal_obj}, dual {dual_obj})"
        )));
    }
    Ok(primal_obj)
}
