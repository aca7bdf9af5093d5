//! Bounded-variable revised simplex over `f64`.
//!
//! Columns stay sparse and box bounds are handled in the ratio test, so the
//! per-pivot work is `O(rows^2 + nnz)` instead of the tableau's
//! `O(rows * cols)`. The basis inverse is kept dense and refactored
//! periodically to limit drift.

use crate::error::{Error, Result};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_LIMIT: usize = 60;
const PRICING_SEGMENTS: usize = 8;

pub(crate) struct Problem {
    /// Column-major structural matrix: `cols[j]` holds `(row, a_rj)`.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) enum Status {
    /// `state` covers the structurals followed by one slack per row.
    Optimal { x: Vec<f64>, duals: Vec<f64>, state: Vec<u8> },
    Infeasible,
    Unbounded,
}

pub(crate) const BASIC: u8 = 0;
pub(crate) const AT_LOWER: u8 = 1;
pub(crate) const AT_UPPER: u8 = 2;
/// Free nonbasic variable parked at zero.
pub(crate) const AT_ZERO: u8 = 3;
/// Nonbasic with `lower == upper`; never priced.
pub(crate) const FIXED: u8 = 4;

struct Solver {
    rows: usize,
    structural: usize,
    /// Flat column storage for structural, slack and artificial columns.
    start: Vec<usize>,
    index: Vec<usize>,
    value: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<u8>,
    basis: Vec<usize>,
    /// Row-major dense `B^-1`.
    binv: Vec<f64>,
    since_refactor: usize,
    cursor: usize,
}

impl Solver {
    fn new(p: &Problem) -> Self {
        let rows = p.rhs.len();
        let n = p.cols.len();
        let mut start = Vec::with_capacity(n + 2 * rows + 1);
        let mut index = Vec::new();
        let mut value = Vec::new();
        for col in &p.cols {
            start.push(index.len());
            for &(r, a) in col {
                index.push(r);
                value.push(a);
            }
        }
        for r in 0..rows {
            start.push(index.len());
            index.push(r);
            value.push(1.0);
        }

        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.resize(n + rows, 0.0);
        upper.resize(n + rows, f64::INFINITY);
        let mut x = vec![0.0; n + rows];
        let mut state = vec![AT_ZERO; n + rows];
        for j in 0..n {
            if lower[j].is_finite() {
                x[j] = lower[j];
                state[j] = AT_LOWER;
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                state[j] = AT_UPPER;
            }
        }
        let mut residual = p.rhs.clone();
        for (j, col) in p.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(r, a) in col {
                    residual[r] -= a * x[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(rows);
        let mut diag = Vec::with_capacity(rows);
        for (r, &res) in residual.iter().enumerate() {
            if res >= -PRIMAL_TOL {
                basis.push(n + r);
                x[n + r] = res.max(0.0);
                state[n + r] = BASIC;
                diag.push(1.0);
            } else {
                // An artificial column -e_r carries the deficit.
                basis.push(x.len());
                start.push(index.len());
                index.push(r);
                value.push(-1.0);
                x.push(-res);
                state.push(BASIC);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                state[n + r] = AT_LOWER;
                diag.push(-1.0);
            }
        }
        start.push(index.len());
        for j in 0..x.len() {
            if state[j] != BASIC && upper[j] - lower[j] <= 0.0 {
                state[j] = FIXED;
            }
        }
        let mut binv = vec![0.0; rows * rows];
        for (r, d) in diag.into_iter().enumerate() {
            binv[r * rows + r] = d;
        }
        Solver {
            rows,
            structural: n,
            start,
            index,
            value,
            rhs: p.rhs.clone(),
            lower,
            upper,
            x,
            state,
            basis,
            binv,
            since_refactor: 0,
            cursor: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.x.len()
    }

    fn artificials(&self) -> std::ops::Range<usize> {
        self.structural + self.rows..self.ncols()
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.start[j]..self.start[j + 1];
        self.index[range.clone()].iter().copied().zip(self.value[range].iter().copied())
    }

    /// `B^-1 a_j`
    fn ftran(&self, j: usize, alpha: &mut [f64]) {
        let m = self.rows;
        alpha.iter_mut().for_each(|a| *a = 0.0);
        for (r, a) in self.column(j) {
            for (i, out) in alpha.iter_mut().enumerate() {
                *out += self.binv[i * m + r] * a;
            }
        }
    }

    /// Rebuilds `B^-1` by Gauss-Jordan with partial pivoting and recomputes
    /// the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<()> {
        let m = self.rows;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for (r, v) in self.column(j) {
                a[r * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (piv, best) = (c..m)
                .map(|r| (r, a[r * m + c].abs()))
                .fold((c, -1.0), |acc, t| if t.1 > acc.1 { t } else { acc });
            if best < 1e-12 {
                return Err(Error::Solver("singular basis during refactorization".into()));
            }
            if piv != c {
                for k in 0..m {
                    a.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            let (a_pivot, inv_pivot) = (a[c * m..(c + 1) * m].to_vec(), inv[c * m..(c + 1) * m].to_vec());
            for r in (0..m).filter(|&r| r != c) {
                let f = a[r * m + c];
                if f != 0.0 {
                    for (v, p) in a[r * m..(r + 1) * m].iter_mut().zip(&a_pivot) {
                        *v -= f * p;
                    }
                    for (v, p) in inv[r * m..(r + 1) * m].iter_mut().zip(&inv_pivot) {
                        *v -= f * p;
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;

        let mut residual = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.state[j] == BASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (r, v) in self.column(j) {
                residual[r] -= v * xj;
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&residual).map(|(b, r)| b * r).sum();
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.rows;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = cost[j];
            if c != 0.0 {
                for (yk, b) in y.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    /// Partial Dantzig pricing: scans segments of columns starting after the
    /// last entering column and stops at the first segment that offers a
    /// candidate. Under Bland the first eligible column overall wins.
    fn price(&mut self, cost: &[f64], y: &[f64], bland: bool) -> Option<(usize, f64, f64)> {
        let ncols = self.ncols();
        let segment = if bland { ncols } else { ncols.div_ceil(PRICING_SEGMENTS).max(1) };
        let origin = if bland { 0 } else { self.cursor };
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_score = 0.0;
        for offset in 0..ncols {
            if offset > 0 && offset % segment == 0 && best.is_some() {
                break;
            }
            let j = (origin + offset) % ncols;
            let st = self.state[j];
            if st == BASIC || st == FIXED {
                continue;
            }
            let mut d = cost[j];
            for k in self.start[j]..self.start[j + 1] {
                d -= self.value[k] * y[self.index[k]];
            }
            let dir = match st {
                AT_LOWER if d > DUAL_TOL => 1.0,
                AT_UPPER if d < -DUAL_TOL => -1.0,
                AT_ZERO if d.abs() > DUAL_TOL => d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir, d));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir, d));
            }
        }
        if let Some((j, _, _)) = best {
            self.cursor = (j + 1) % ncols;
        }
        best
    }

    /// Largest step along column `q` keeping every basic variable in its box,
    /// and the row that blocks it (`None` for a bound flip). Near-ties go to
    /// the largest pivot, or the lowest basic index under Bland.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> (f64, Option<(usize, bool)>) {
        let mut min_limit = f64::INFINITY;
        for (i, &al) in alpha.iter().enumerate() {
            if let Some((limit, _)) = self.row_limit(i, al * dir) {
                min_limit = min_limit.min(limit);
            }
        }
        let flip = self.upper[q] - self.lower[q];
        if flip <= min_limit {
            return (flip, None);
        }
        let slack = 1e-12 * (1.0 + min_limit);
        let mut chosen: Option<(usize, bool, f64)> = None;
        for (i, &al) in alpha.iter().enumerate() {
            let Some((limit, to_upper)) = self.row_limit(i, al * dir) else { continue };
            if limit > min_limit + slack {
                continue;
            }
            let size = al.abs();
            let take = match chosen {
                None => true,
                Some((ci, _, csize)) => {
                    if bland {
                        self.basis[i] < self.basis[ci]
                    } else {
                        size > csize
                    }
                }
            };
            if take {
                chosen = Some((i, to_upper, size));
            }
        }
        let (i, to_upper, _) = chosen.expect("some row attains the minimum ratio");
        (min_limit, Some((i, to_upper)))
    }

    fn row_limit(&self, i: usize, a: f64) -> Option<(f64, bool)> {
        if a.abs() <= PIVOT_TOL {
            return None;
        }
        let b = self.basis[i];
        let (limit, to_upper) = if a > 0.0 {
            ((self.x[b] - self.lower[b]).max(0.0) / a, false)
        } else {
            ((self.upper[b] - self.x[b]).max(0.0) / -a, true)
        };
        limit.is_finite().then_some((limit, to_upper))
    }

    /// Swaps column `q` into basis row `p`, updating `B^-1` and the duals.
    fn pivot(&mut self, p: usize, q: usize, alpha: &[f64], d_q: f64, y: &mut [f64]) {
        let m = self.rows;
        self.basis[p] = q;
        self.state[q] = BASIC;
        let piv = alpha[p];
        let (head, rest) = self.binv.split_at_mut(p * m);
        let (prow, tail) = rest.split_at_mut(m);
        prow.iter_mut().for_each(|v| *v /= piv);
        for (i, &f) in alpha.iter().enumerate() {
            if i == p || f == 0.0 {
                continue;
            }
            let row = if i < p {
                &mut head[i * m..(i + 1) * m]
            } else {
                &mut tail[(i - p - 1) * m..(i - p) * m]
            };
            for (v, pv) in row.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
        }
        for (yk, pv) in y.iter_mut().zip(prow.iter()) {
            *yk += d_q * pv;
        }
        self.since_refactor += 1;
    }

    /// Maximizes `cost . x`; `Ok(false)` means unbounded.
    fn optimize(&mut self, cost: &[f64]) -> Result<bool> {
        let m = self.rows;
        let mut alpha = vec![0.0; m];
        let mut degenerate = 0usize;
        let cap = 50 * (self.ncols() + m) + 10_000;
        let mut y = self.duals(cost);
        for _ in 0..cap {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                y = self.duals(cost);
            }
            let bland = degenerate > DEGENERATE_LIMIT;
            let Some((q, dir, d_q)) = self.price(cost, &y, bland) else {
                return Ok(true);
            };
            self.ftran(q, &mut alpha);
            let (step, leave) = self.ratio_test(q, dir, &alpha, bland);
            if !step.is_finite() {
                return Ok(false);
            }
            if step <= PRIMAL_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            let delta = step * dir;
            self.x[q] += delta;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * delta;
                }
            }
            match leave {
                None => {
                    let (value, state) = if dir > 0.0 {
                        (self.upper[q], AT_UPPER)
                    } else {
                        (self.lower[q], AT_LOWER)
                    };
                    self.x[q] = value;
                    self.state[q] = state;
                }
                Some((p, to_upper)) => {
                    let out = self.basis[p];
                    let (value, state) = if to_upper {
                        (self.upper[out], AT_UPPER)
                    } else {
                        (self.lower[out], AT_LOWER)
                    };
                    self.x[out] = value;
                    self.state[out] = if self.upper[out] - self.lower[out] <= 0.0 { FIXED } else { state };
                    self.pivot(p, q, &alpha, d_q, &mut y);
                }
            }
        }
        Err(Error::Solver("revised simplex iteration limit reached".into()))
    }
}

pub(crate) fn solve(p: &Problem) -> Result<Status> {
    let mut s = Solver::new(p);
    let n = s.structural;
    if !s.artificials().is_empty() {
        let mut cost = vec![0.0; s.ncols()];
        for j in s.artificials() {
            cost[j] = -1.0;
        }
        if !s.optimize(&cost)? {
            return Err(Error::Solver("phase one reported unbounded".into()));
        }
        s.refactor()?;
        let infeasibility: f64 = s.artificials().map(|j| s.x[j]).sum();
        let scale = 1.0 + p.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-7 * scale {
            return Ok(Status::Infeasible);
        }
        for j in s.artificials() {
            s.upper[j] = 0.0;
            if s.state[j] != BASIC {
                s.x[j] = 0.0;
                s.state[j] = FIXED;
            }
        }
    }
    let mut cost = p.cost.clone();
    cost.resize(s.ncols(), 0.0);
    if !s.optimize(&cost)? {
        return Ok(Status::Unbounded);
    }
    s.refactor()?;
    let duals = s.duals(&cost);
    let mut state = s.state[..n + s.rows].to_vec();
    for j in s.artificials() {
        // A basic artificial sits at zero and spans the same unit column as its slack.
        if s.state[j] == BASIC {
            state[n + s.index[s.start[j]]] = BASIC;
        }
    }
    Ok(Status::Optimal { x: s.x[..n].to_vec(), duals, state })
}
