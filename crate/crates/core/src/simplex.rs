//! Dense two-phase revised simplex with Bland's anti-cycling rule.
//!
//! Solves min c·x subject to A·x = b, x ≥ 0. The basis inverse is kept
//! explicitly and updated by row operations on each pivot; Bland's rule
//! (smallest eligible index enters, smallest basic variable leaves on ties)
//! guarantees termination even on degenerate problems.

/// Equality-form linear program. Rows with negative right-hand side are
/// sign-flipped internally.
#[derive(Debug, Clone)]
pub struct StandardFormLp {
    /// Minimized objective, one coefficient per structural variable.
    pub objective: Vec<f64>,
    /// Dense constraint rows.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve(lp: &StandardFormLp, pivot_tol: f64, max_iterations: usize) -> SimplexSolution {
    let m = lp.rows.len();
    let n = lp.objective.len();

    // normalize rhs ≥ 0
    let mut columns = vec![vec![0.0; m]; n];
    let mut rhs = lp.rhs.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        debug_assert_eq!(row.len(), n, "constraint row length mismatch");
        let flip = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        rhs[i] *= flip;
        for (j, &v) in row.iter().enumerate() {
            columns[j][i] = v * flip;
        }
    }

    // artificial variables n..n+m form the initial basis
    let mut state = Tableau {
        columns,
        n,
        m,
        basis: (n..n + m).collect(),
        basis_inverse: identity(m),
        basic_values: rhs,
        iterations: 0,
        pivot_tol,
        max_iterations,
    };

    // Phase 1: minimize the sum of artificials.
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    match state.run(&phase1_cost, n + m) {
        RunOutcome::Optimal => {}
        RunOutcome::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
        RunOutcome::IterationCap => {
            return state.finish(SimplexStatus::IterationCap, &lp.objective)
        }
    }
    let infeasibility: f64 = state
        .basis
        .iter()
        .zip(&state.basic_values)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v)
        .sum();
    if infeasibility > 1e-7 {
        return state.finish(SimplexStatus::Infeasible, &lp.objective);
    }
    state.drive_out_artificials();

    // Phase 2: real objective, artificials barred from entering.
    let phase2_cost = |j: usize| if j < n { lp.objective[j] } else { 0.0 };
    let status = match state.run(&phase2_cost, n) {
        RunOutcome::Optimal => SimplexStatus::Optimal,
        RunOutcome::Unbounded => SimplexStatus::Unbounded,
        RunOutcome::IterationCap => SimplexStatus::IterationCap,
    };
    state.finish(status, &lp.objective)
}

enum RunOutcome {
    Optimal,
    Unbounded,
    IterationCap,
}

struct Tableau {
    /// Structural columns only; artificial column j ≥ n is the unit vector
    /// e_{j−n} and handled implicitly.
    columns: Vec<Vec<f64>>,
    n: usize,
    m: usize,
    basis: Vec<usize>,
    basis_inverse: Vec<Vec<f64>>,
    basic_values: Vec<f64>,
    iterations: usize,
    pivot_tol: f64,
    max_iterations: usize,
}

impl Tableau {
    fn column(&self, j: usize) -> Column<'_> {
        if j < self.n {
            Column::Dense(&self.columns[j])
        } else {
            Column::Unit(j - self.n)
        }
    }

    /// B⁻¹·A_j.
    fn transformed_column(&self, j: usize) -> Vec<f64> {
        match self.column(j) {
            Column::Unit(row) => (0..self.m).map(|i| self.basis_inverse[i][row]).collect(),
            Column::Dense(col) => (0..self.m)
                .map(|i| {
                    let inv_row = &self.basis_inverse[i];
                    col.iter().zip(inv_row).map(|(a, b)| a * b).sum()
                })
                .collect(),
        }
    }

    /// Runs Bland-rule pivots for the given cost function over variables
    /// 0..limit (artificials excluded in phase 2 via `limit`).
    fn run(&mut self, cost: &dyn Fn(usize) -> f64, limit: usize) -> RunOutcome {
        loop {
            if self.iterations >= self.max_iterations {
                return RunOutcome::IterationCap;
            }

            // simplex multipliers y = c_B·B⁻¹
            let mut y = vec![0.0; self.m];
            for (i, &bj) in self.basis.iter().enumerate() {
                let cb = cost(bj);
                if cb != 0.0 {
                    for (yc, inv) in y.iter_mut().zip(&self.basis_inverse[i]) {
                        *yc += cb * inv;
                    }
                }
            }

            // Bland: first eligible index enters
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost(j) - self.price(j, &y);
                if reduced < -self.pivot_tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(entering) = entering else {
                return RunOutcome::Optimal;
            };

            let direction = self.transformed_column(entering);
            let Some(leaving_row) = self.ratio_test(&direction) else {
                return RunOutcome::Unbounded;
            };

            self.pivot(entering, leaving_row, &direction);
            self.iterations += 1;
        }
    }

    /// y·A_j.
    fn price(&self, j: usize, y: &[f64]) -> f64 {
        match self.column(j) {
            Column::Unit(row) => y[row],
            Column::Dense(col) => col.iter().zip(y).map(|(a, b)| a * b).sum(),
        }
    }

    /// Minimum-ratio test; ties broken by smallest basic variable index
    /// (Bland).
    fn ratio_test(&self, direction: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in direction.iter().enumerate() {
            if d <= self.pivot_tol {
                continue;
            }
            let ratio = self.basic_values[i] / d;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br - 1e-12
                        || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                    {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, entering: usize, leaving_row: usize, direction: &[f64]) {
        let pivot_value = direction[leaving_row];

        // update B⁻¹: scale the pivot row, eliminate elsewhere
        let scale = 1.0 / pivot_value;
        for v in &mut self.basis_inverse[leaving_row] {
            *v *= scale;
        }
        self.basic_values[leaving_row] *= scale;
        for i in 0..self.m {
            if i == leaving_row {
                continue;
            }
            let factor = direction[i];
            if factor == 0.0 {
                continue;
            }
            for col in 0..self.m {
                let delta = factor * self.basis_inverse[leaving_row][col];
                self.basis_inverse[i][col] -= delta;
            }
            self.basic_values[i] -= factor * self.basic_values[leaving_row];
        }
        self.basis[leaving_row] = entering;
    }

    /// Pivots any artificial still basic at level zero onto a structural
    /// column; rows with no eligible column are redundant and left alone.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.m {
            if self.basis[row] < self.n {
                continue;
            }
            let candidate = (0..self.n)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.transformed_column(j)[row].abs() > self.pivot_tol);
            if let Some(j) = candidate {
                let direction = self.transformed_column(j);
                self.pivot(j, row, &direction);
                self.iterations += 1;
            }
        }
    }

    fn finish(self, status: SimplexStatus, objective: &[f64]) -> SimplexSolution {
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.basic_values[i].max(0.0);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        SimplexSolution {
            status,
            x,
            objective: value,
            iterations: self.iterations,
        }
    }
}

enum Column<'a> {
    Dense(&'a [f64]),
    Unit(usize),
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]; m];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}
