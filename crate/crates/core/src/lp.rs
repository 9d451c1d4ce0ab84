//! Canonical-form dense linear programs and a bounded-variable simplex
//! solver.
//!
//! Problems are stated as `min cᵀx` subject to `Ax ≤ b` and elementwise
//! bounds `l ≤ x ≤ u` (entries of `l`/`u` may be infinite). The solver is a
//! two-phase revised simplex over bounded variables with an explicit dense
//! basis inverse:
//!
//! * phase 1 installs artificial columns on rows whose slack starts
//!   negative and minimizes their sum;
//! * pricing is Dantzig's rule with lowest-index tie-breaking, switching to
//!   Bland's rule after a run of degenerate steps so cycling terminates;
//! * the basis inverse is refactorized periodically and before optimality
//!   is declared, and every `Optimal` answer is re-verified against the raw
//!   problem data.
//!
//! The procedure is fully deterministic: identical problems produce
//! identical solutions, bit for bit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float;
use crate::linalg::{axpy, dot, DenseMatrix, DenseVector};

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A dense linear program `min cᵀx : Ax ≤ b, l ≤ x ≤ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: DenseVector,
    constraint_matrix: DenseMatrix,
    rhs: DenseVector,
    lower_bounds: DenseVector,
    upper_bounds: DenseVector,
}

impl LpProblem {
    /// Validates dimensions, finiteness of `c`, `A`, `b`, and bound order.
    /// Bound entries may be `-inf`/`+inf` to mark absent bounds.
    pub fn new(
        objective: DenseVector,
        constraint_matrix: DenseMatrix,
        rhs: DenseVector,
        lower_bounds: DenseVector,
        upper_bounds: DenseVector,
    ) -> Result<Self> {
        let d = objective.len();
        let m = constraint_matrix.rows();
        if constraint_matrix.cols() != d {
            return Err(Error::Shape(format!(
                "constraint matrix is {}x{}, expected {} columns",
                m,
                constraint_matrix.cols(),
                d
            )));
        }
        if rhs.len() != m {
            return Err(Error::Shape(format!(
                "rhs length {} does not match {m} rows",
                rhs.len()
            )));
        }
        if lower_bounds.len() != d || upper_bounds.len() != d {
            return Err(Error::Shape("bound vectors must have one entry per variable".into()));
        }
        if !objective.all_finite() || !constraint_matrix.all_finite() || !rhs.all_finite() {
            return Err(Error::Domain("objective, matrix and rhs must be finite".into()));
        }
        for j in 0..d {
            let (lo, hi) = (lower_bounds.get(j), upper_bounds.get(j));
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Domain(format!("invalid bounds [{lo}, {hi}] for variable {j}")));
            }
            if lo > hi {
                return Err(Error::Domain(format!(
                    "lower bound {lo} exceeds upper bound {hi} for variable {j}"
                )));
            }
        }
        Ok(Self {
            objective,
            constraint_matrix,
            rhs,
            lower_bounds,
            upper_bounds,
        })
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    #[inline]
    pub fn num_constraints(&self) -> usize {
        self.constraint_matrix.rows()
    }

    pub fn objective(&self) -> &DenseVector {
        &self.objective
    }

    pub fn constraint_matrix(&self) -> &DenseMatrix {
        &self.constraint_matrix
    }

    pub fn rhs(&self) -> &DenseVector {
        &self.rhs
    }

    pub fn lower_bounds(&self) -> &DenseVector {
        &self.lower_bounds
    }

    pub fn upper_bounds(&self) -> &DenseVector {
        &self.upper_bounds
    }

    /// Generous iteration budget that still terminates pathological cases.
    pub fn default_max_iters(&self) -> usize {
        50 * (self.num_vars() + self.num_constraints())
    }

    /// Worst violation of `Ax ≤ b` at `x` (0 when feasible).
    pub fn row_violation(&self, x: &DenseVector) -> f64 {
        let ax = self.constraint_matrix.matvec(x);
        (0..self.num_constraints())
            .fold(0.0f64, |m, i| m.max(ax.get(i) - self.rhs.get(i)))
    }

    /// Worst violation of the variable bounds at `x`.
    pub fn bound_violation(&self, x: &DenseVector) -> f64 {
        (0..self.num_vars()).fold(0.0f64, |m, j| {
            m.max(self.lower_bounds.get(j) - x.get(j))
                .max(x.get(j) - self.upper_bounds.get(j))
        })
    }
}

/// Solver output. `x` and `objective_value` are meaningful for `Optimal`
/// status and are best-effort iterates otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DenseVector,
    pub objective_value: f64,
    pub iterations: usize,
}

/// Per-row feasibility tolerance enforced on `Optimal` solutions.
pub const FEAS_TOL: f64 = 1e-7;
/// Bound tolerance enforced on `Optimal` solutions.
pub const BOUND_TOL: f64 = 1e-9;

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const STEP_EPS: f64 = 1e-12;
const DEGEN_TRIP: usize = 32;
const REFACTOR_PERIOD: usize = 100;

/// Solves `problem` with the bounded-variable simplex. `max_iters = 0`
/// selects the default budget. Solve failures that are answers
/// (infeasible, unbounded, iteration limit) come back in the status;
/// `Err` is reserved for malformed input and numerical breakdown.
pub fn solve_lp(problem: &LpProblem, max_iters: usize) -> Result<LpSolution> {
    let budget = if max_iters == 0 {
        problem.default_max_iters()
    } else {
        max_iters
    };
    let mut simplex = Simplex::new(problem);
    let status = simplex.run(budget)?;
    let x = simplex.structural_solution();
    let objective_value = problem.objective.dot(&x);
    if status == LpStatus::Optimal {
        let rviol = problem.row_violation(&x);
        let bviol = problem.bound_violation(&x);
        if rviol > FEAS_TOL || bviol > BOUND_TOL {
            return Err(Error::Numerical(format!(
                "solution failed the feasibility recheck (rows {rviol:e}, bounds {bviol:e})"
            )));
        }
    }
    Ok(LpSolution {
        status,
        x,
        objective_value,
        iterations: simplex.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone, Copy)]
enum ColKind {
    Structural(usize),
    Slack(usize),
    Artificial(usize),
}

struct Simplex<'a> {
    problem: &'a LpProblem,
    m: usize,
    d: usize,
    n_total: usize,
    /// Structural columns of `A`, column-major (`d` columns of length `m`).
    acols: Vec<f64>,
    kind: Vec<ColKind>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    /// Current value of every nonbasic variable.
    value: Vec<f64>,
    basis: Vec<usize>,
    /// Dense basis inverse, row-major `m x m`.
    binv: Vec<f64>,
    /// Values of the basic variables, by row.
    xb: Vec<f64>,
    iterations: usize,
    degen_streak: usize,
    bland: bool,
    since_refactor: usize,
    // scratch buffers
    y: Vec<f64>,
    w: Vec<f64>,
}

enum StepOutcome {
    Stepped,
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(problem: &'a LpProblem) -> Self {
        let m = problem.num_constraints();
        let d = problem.num_vars();
        let mut acols = vec![0.0; d * m];
        for i in 0..m {
            let row = problem.constraint_matrix.row(i);
            for (j, &v) in row.iter().enumerate() {
                acols[j * m + i] = v;
            }
        }

        let mut kind: Vec<ColKind> = (0..d).map(ColKind::Structural).collect();
        kind.extend((0..m).map(ColKind::Slack));
        let mut lo = vec![0.0; d + m];
        let mut hi = vec![f64::INFINITY; d + m];
        lo[..d].copy_from_slice(problem.lower_bounds.as_slice());
        hi[..d].copy_from_slice(problem.upper_bounds.as_slice());

        let mut state = Vec::with_capacity(d + m);
        let mut value = vec![0.0; d + m];
        for j in 0..d {
            if lo[j].is_finite() {
                state.push(VarState::AtLower);
                value[j] = lo[j];
            } else if hi[j].is_finite() {
                state.push(VarState::AtUpper);
                value[j] = hi[j];
            } else {
                state.push(VarState::Free);
                value[j] = 0.0;
            }
        }
        state.extend(core::iter::repeat(VarState::AtLower).take(m));

        // residual slack values at the initial nonbasic point
        let mut r = vec![0.0; m];
        for i in 0..m {
            r[i] = problem.rhs.get(i);
        }
        for j in 0..d {
            let v = value[j];
            if v != 0.0 {
                for i in 0..m {
                    r[i] -= acols[j * m + i] * v;
                }
            }
        }

        let mut basis = vec![0usize; m];
        let mut binv = vec![0.0; m * m];
        let mut xb = vec![0.0; m];
        let mut cost = vec![0.0; d + m];
        let mut lo_all = lo;
        let mut hi_all = hi;
        let mut any_artificial = false;
        for i in 0..m {
            if r[i] >= 0.0 {
                let slack = d + i;
                basis[i] = slack;
                state[slack] = VarState::Basic(i);
                xb[i] = r[i];
                binv[i * m + i] = 1.0;
            } else {
                // slack stays nonbasic at 0; artificial column -e_i carries
                // the infeasibility with value -r_i > 0
                let art = kind.len();
                kind.push(ColKind::Artificial(i));
                lo_all.push(0.0);
                hi_all.push(f64::INFINITY);
                value.push(0.0);
                cost.push(1.0);
                state.push(VarState::Basic(i));
                basis[i] = art;
                xb[i] = -r[i];
                binv[i * m + i] = -1.0;
                any_artificial = true;
            }
        }

        let n_total = kind.len();
        let mut s = Self {
            problem,
            m,
            d,
            n_total,
            acols,
            kind,
            lo: lo_all,
            hi: hi_all,
            cost,
            state,
            value,
            basis,
            binv,
            xb,
            iterations: 0,
            degen_streak: 0,
            bland: false,
            since_refactor: 0,
            y: vec![0.0; m],
            w: vec![0.0; m],
        };
        if !any_artificial {
            s.install_phase2_costs();
        }
        s
    }

    fn in_phase1(&self) -> bool {
        self.n_total > self.d + self.m && self.cost[self.d..].iter().any(|&c| c != 0.0)
    }

    fn install_phase2_costs(&mut self) {
        for j in 0..self.n_total {
            self.cost[j] = match self.kind[j] {
                ColKind::Structural(s) => self.problem.objective.get(s),
                _ => 0.0,
            };
        }
    }

    /// Locks every artificial variable at zero after a successful phase 1.
    fn retire_artificials(&mut self) {
        for j in (self.d + self.m)..self.n_total {
            self.lo[j] = 0.0;
            self.hi[j] = 0.0;
            if !matches!(self.state[j], VarState::Basic(_)) {
                self.state[j] = VarState::AtLower;
                self.value[j] = 0.0;
            }
        }
    }

    fn run(&mut self, budget: usize) -> Result<LpStatus> {
        if self.in_phase1() {
            match self.iterate(budget)? {
                StepOutcome::Optimal => {}
                StepOutcome::Unbounded => {
                    // phase-1 objective is bounded below by zero; reaching
                    // here means numerical trouble
                    return Err(Error::Numerical("phase 1 reported unbounded".into()));
                }
                StepOutcome::Stepped => return Ok(LpStatus::IterationLimit),
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| matches!(self.kind[self.basis[i]], ColKind::Artificial(_)))
                .map(|i| self.xb[i].max(0.0))
                .sum();
            let scale = 1.0 + self.problem.rhs.norm_inf();
            if infeas > FEAS_TOL * scale {
                return Ok(LpStatus::Infeasible);
            }
            self.retire_artificials();
            self.install_phase2_costs();
            self.bland = false;
            self.degen_streak = 0;
        }
        match self.iterate(budget)? {
            StepOutcome::Optimal => Ok(LpStatus::Optimal),
            StepOutcome::Unbounded => Ok(LpStatus::Unbounded),
            StepOutcome::Stepped => Ok(LpStatus::IterationLimit),
        }
    }

    /// Runs pivots until the current phase is optimal, unbounded, or the
    /// shared iteration budget is spent. Optimality is only declared on a
    /// freshly refactorized basis.
    fn iterate(&mut self, budget: usize) -> Result<StepOutcome> {
        loop {
            if self.iterations >= budget {
                return Ok(StepOutcome::Stepped);
            }
            match self.step()? {
                StepOutcome::Stepped => {}
                StepOutcome::Unbounded => return Ok(StepOutcome::Unbounded),
                StepOutcome::Optimal => {
                    if self.since_refactor == 0 {
                        return Ok(StepOutcome::Optimal);
                    }
                    self.refactorize()?;
                }
            }
        }
    }

    fn step(&mut self) -> Result<StepOutcome> {
        self.compute_duals();
        let Some((enter, dir)) = self.choose_entering() else {
            return Ok(StepOutcome::Optimal);
        };
        self.transformed_column(enter);

        // ratio test over basic variables plus the entering variable's own
        // opposite bound
        let own_range = self.hi[enter] - self.lo[enter];
        let mut best_t = if own_range.is_finite() { own_range } else { f64::INFINITY };
        let mut leaving: Option<usize> = None;
        let mut leaving_pivot = 0.0f64;
        for r in 0..self.m {
            let wr = self.w[r];
            if float::abs(wr) <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * wr;
            let b = self.basis[r];
            let ratio = if rate > 0.0 {
                if self.hi[b].is_finite() {
                    ((self.hi[b] - self.xb[r]) / rate).max(0.0)
                } else {
                    continue;
                }
            } else if self.lo[b].is_finite() {
                ((self.xb[r] - self.lo[b]) / -rate).max(0.0)
            } else {
                continue;
            };
            let tie = ratio <= best_t + STEP_EPS && ratio + STEP_EPS >= best_t;
            if ratio + STEP_EPS < best_t || (tie && self.prefer_leaving(r, wr, leaving, leaving_pivot)) {
                best_t = best_t.min(ratio);
                leaving = Some(r);
                leaving_pivot = wr;
            }
        }

        if best_t == f64::INFINITY {
            return Ok(StepOutcome::Unbounded);
        }
        self.iterations += 1;
        if best_t <= STEP_EPS {
            self.degen_streak += 1;
            if self.degen_streak > DEGEN_TRIP {
                self.bland = true;
            }
        } else {
            self.degen_streak = 0;
        }

        match leaving {
            None => {
                // bound flip: the entering variable crosses to its other bound
                let t = best_t;
                for r in 0..self.m {
                    self.xb[r] += -dir * self.w[r] * t;
                }
                let (new_state, new_value) = if dir > 0.0 {
                    (VarState::AtUpper, self.hi[enter])
                } else {
                    (VarState::AtLower, self.lo[enter])
                };
                self.state[enter] = new_state;
                self.value[enter] = new_value;
                Ok(StepOutcome::Stepped)
            }
            Some(r_star) => {
                let t = best_t;
                let entering_value = self.value[enter] + dir * t;
                for r in 0..self.m {
                    if r != r_star {
                        self.xb[r] += -dir * self.w[r] * t;
                    }
                }
                let leave = self.basis[r_star];
                let rate = -dir * self.w[r_star];
                let (ls, lv) = if rate > 0.0 {
                    (VarState::AtUpper, self.hi[leave])
                } else {
                    (VarState::AtLower, self.lo[leave])
                };
                self.state[leave] = ls;
                self.value[leave] = lv;
                self.basis[r_star] = enter;
                self.state[enter] = VarState::Basic(r_star);
                self.xb[r_star] = entering_value;
                self.update_binv(r_star);
                self.since_refactor += 1;
                if self.since_refactor >= REFACTOR_PERIOD {
                    self.refactorize()?;
                }
                Ok(StepOutcome::Stepped)
            }
        }
    }

    /// Deterministic leaving-row preference among (near-)tied ratios:
    /// Bland mode picks the lowest variable index, otherwise the larger
    /// pivot magnitude wins with the lower row index as the final tie cut.
    fn prefer_leaving(
        &self,
        candidate_row: usize,
        candidate_pivot: f64,
        current: Option<usize>,
        current_pivot: f64,
    ) -> bool {
        let Some(cur) = current else { return true };
        if self.bland {
            self.basis[candidate_row] < self.basis[cur]
        } else {
            let (ca, cb) = (float::abs(candidate_pivot), float::abs(current_pivot));
            if ca != cb {
                ca > cb
            } else {
                candidate_row < cur
            }
        }
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        self.y[..m].fill(0.0);
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                axpy(cb, &self.binv[r * m..(r + 1) * m], &mut self.y);
            }
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let m = self.m;
        match self.kind[j] {
            ColKind::Structural(s) => {
                self.cost[j] - dot(&self.y, &self.acols[s * m..(s + 1) * m])
            }
            ColKind::Slack(i) => self.cost[j] - self.y[i],
            ColKind::Artificial(i) => self.cost[j] + self.y[i],
        }
    }

    /// Entering choice: Dantzig's rule (most violating reduced cost, lowest
    /// index on ties) or Bland's rule (lowest eligible index) once the
    /// degeneracy counter has tripped. Returns the column and direction.
    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            match self.state[j] {
                VarState::Basic(_) => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                VarState::AtLower => {
                    let rc = self.reduced_cost(j);
                    if rc < -RC_TOL {
                        if self.bland {
                            return Some((j, 1.0));
                        }
                        if best.map_or(true, |(_, _, v)| -rc > v) {
                            best = Some((j, 1.0, -rc));
                        }
                    }
                }
                VarState::AtUpper => {
                    let rc = self.reduced_cost(j);
                    if rc > RC_TOL {
                        if self.bland {
                            return Some((j, -1.0));
                        }
                        if best.map_or(true, |(_, _, v)| rc > v) {
                            best = Some((j, -1.0, rc));
                        }
                    }
                }
                VarState::Free => {
                    let rc = self.reduced_cost(j);
                    if float::abs(rc) > RC_TOL {
                        let dir = if rc < 0.0 { 1.0 } else { -1.0 };
                        if self.bland {
                            return Some((j, dir));
                        }
                        if best.map_or(true, |(_, _, v)| float::abs(rc) > v) {
                            best = Some((j, dir, float::abs(rc)));
                        }
                    }
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// `w = B⁻¹ column(enter)`.
    fn transformed_column(&mut self, enter: usize) {
        let m = self.m;
        match self.kind[enter] {
            ColKind::Structural(s) => {
                let col = &self.acols[s * m..(s + 1) * m];
                for r in 0..m {
                    self.w[r] = dot(&self.binv[r * m..(r + 1) * m], col);
                }
            }
            ColKind::Slack(i) => {
                for r in 0..m {
                    self.w[r] = self.binv[r * m + i];
                }
            }
            ColKind::Artificial(i) => {
                for r in 0..m {
                    self.w[r] = -self.binv[r * m + i];
                }
            }
        }
    }

    /// Elementary row update of the basis inverse after pivoting on
    /// `w[r_star]`.
    fn update_binv(&mut self, r_star: usize) {
        let m = self.m;
        let pivot = self.w[r_star];
        let pivot_row: Vec<f64> = self.binv[r_star * m..(r_star + 1) * m].to_vec();
        for r in 0..m {
            if r == r_star {
                continue;
            }
            let f = self.w[r] / pivot;
            if f != 0.0 {
                axpy(-f, &pivot_row, &mut self.binv[r * m..(r + 1) * m]);
            }
        }
        let row = &mut self.binv[r_star * m..(r_star + 1) * m];
        for bi in row.iter_mut() {
            *bi /= pivot;
        }
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recomputes the basic values from the raw data.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (r, &col) in self.basis.iter().enumerate() {
            match self.kind[col] {
                ColKind::Structural(s) => {
                    for i in 0..m {
                        b[i * m + r] = self.acols[s * m + i];
                    }
                }
                ColKind::Slack(i) => b[i * m + r] = 1.0,
                ColKind::Artificial(i) => b[i * m + r] = -1.0,
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = float::abs(b[col * m + col]);
            for r in (col + 1)..m {
                let v = float::abs(b[r * m + col]);
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val <= 1e-12 {
                return Err(Error::Numerical("singular basis during refactorization".into()));
            }
            if piv_row != col {
                for j in 0..m {
                    b.swap(col * m + j, piv_row * m + j);
                    inv.swap(col * m + j, piv_row * m + j);
                }
            }
            let p = b[col * m + col];
            for j in 0..m {
                b[col * m + j] /= p;
                inv[col * m + j] /= p;
            }
            let b_pivot = b[col * m..(col + 1) * m].to_vec();
            let inv_pivot = inv[col * m..(col + 1) * m].to_vec();
            for r in 0..m {
                if r != col {
                    let f = b[r * m + col];
                    if f != 0.0 {
                        axpy(-f, &b_pivot, &mut b[r * m..(r + 1) * m]);
                        axpy(-f, &inv_pivot, &mut inv[r * m..(r + 1) * m]);
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basic_values();
        self.since_refactor = 0;
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        // rhs minus the contribution of nonbasic variables
        let mut r = vec![0.0; m];
        for i in 0..m {
            r[i] = self.problem.rhs.get(i);
        }
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.value[j];
            if v == 0.0 {
                continue;
            }
            match self.kind[j] {
                ColKind::Structural(s) => {
                    axpy(-v, &self.acols[s * m..(s + 1) * m], &mut r);
                }
                ColKind::Slack(i) => r[i] -= v,
                ColKind::Artificial(i) => r[i] += v,
            }
        }
        for row in 0..m {
            self.xb[row] = dot(&self.binv[row * m..(row + 1) * m], &r);
        }
    }

    /// Structural part of the current point, with violations inside the
    /// bound tolerance snapped onto the bound.
    fn structural_solution(&self) -> DenseVector {
        let mut x = vec![0.0; self.d];
        for j in 0..self.d {
            let v = match self.state[j] {
                VarState::Basic(r) => self.xb[r],
                _ => self.value[j],
            };
            let (lo, hi) = (self.lo[j], self.hi[j]);
            let v = if v < lo && v >= lo - BOUND_TOL {
                lo
            } else if v > hi && v <= hi + BOUND_TOL {
                hi
            } else {
                v
            };
            x[j] = v;
        }
        DenseVector::from_vec(x)
    }
}
