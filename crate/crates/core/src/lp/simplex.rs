//! Bounded-variable primal simplex on a dense tableau.
//!
//! Works on the form `min cᵀx  s.t.  A x = b,  l ≤ x ≤ u` where bounds may be
//! infinite. Nonbasic variables sit at a finite bound (or at zero when free).
//! Phase one starts from a crash basis of singleton columns plus artificials.
//! After phase one the solver is reusable: every call to [`Simplex::minimize`]
//! starts from the last optimal basis, which makes long sequences of
//! objectives over the same polytope cheap.

use nalgebra::linalg::LU;

use crate::Matrix;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    rows: usize,
    ncols: usize,
    a: Matrix,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Row-major `rows × ncols` tableau `B⁻¹A`.
    tab: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic variable, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    x: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    since_refresh: usize,
    iterations: usize,
}

impl Simplex {
    /// Runs phase one. Returns the infeasibility status when the polytope is
    /// empty (or phase one hits its iteration cap).
    pub fn new(a: &Matrix, b: &[f64], lower: &[f64], upper: &[f64]) -> Result<Self, LpStatus> {
        let (rows, n) = a.shape();
        assert_eq!(b.len(), rows);
        assert_eq!(lower.len(), n);
        assert_eq!(upper.len(), n);
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Err(LpStatus::Infeasible);
        }
        let mut x: Vec<f64> = (0..n)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();
        let mut resid: Vec<f64> = b.to_vec();
        for j in 0..n {
            if x[j] != 0.0 {
                for i in 0..rows {
                    resid[i] -= a[(i, j)] * x[j];
                }
            }
        }

        // Singleton columns (one nonzero) can seed the basis directly.
        let mut singleton: Vec<Vec<usize>> = vec![Vec::new(); rows];
        for j in 0..n {
            let col = a.column(j);
            let mut nz = col.iter().enumerate().filter(|(_, v)| **v != 0.0);
            if let (Some((i, _)), None) = (nz.next(), nz.next()) {
                singleton[i].push(j);
            }
        }
        let mut basis = vec![usize::MAX; rows];
        let mut diag = vec![0.0; rows];
        let mut art_sign: Vec<(usize, f64)> = Vec::new();
        for i in 0..rows {
            for &j in &singleton[i] {
                let aij = a[(i, j)];
                let v = x[j] + resid[i] / aij;
                if v >= lower[j] - 1e-12 && v <= upper[j] + 1e-12 && !basis.contains(&j) {
                    x[j] = v.clamp(lower[j], upper[j]);
                    basis[i] = j;
                    diag[i] = aij;
                    break;
                }
            }
            if basis[i] == usize::MAX {
                let s = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
                basis[i] = n + art_sign.len();
                diag[i] = s;
                art_sign.push((i, s));
            }
        }

        let n_art = art_sign.len();
        let ncols = n + n_art;
        let mut a_ext = Matrix::zeros(rows, ncols);
        a_ext.columns_mut(0, n).copy_from(a);
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        for (k, &(i, s)) in art_sign.iter().enumerate() {
            a_ext[(i, n + k)] = s;
            x.push(resid[i].abs());
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
        let mut tab = vec![0.0; rows * ncols];
        for i in 0..rows {
            let inv = 1.0 / diag[i];
            for j in 0..ncols {
                tab[i * ncols + j] = a_ext[(i, j)] * inv;
            }
        }
        let mut row_of = vec![usize::MAX; ncols];
        for (i, &j) in basis.iter().enumerate() {
            row_of[j] = i;
        }
        let mut s = Simplex {
            rows,
            ncols,
            a: a_ext,
            b: b.to_vec(),
            lower: lo,
            upper: up,
            tab,
            basis,
            row_of,
            x,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            since_refresh: 0,
            iterations: 0,
        };
        if n_art > 0 {
            let mut c = vec![0.0; ncols];
            c[n..].iter_mut().for_each(|v| *v = 1.0);
            let status = s.optimize(&c);
            if status != LpStatus::Optimal {
                return Err(if status == LpStatus::Unbounded { LpStatus::Infeasible } else { status });
            }
            let infeas: f64 = s.x[n..].iter().sum();
            let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if infeas > 1e-8 * scale {
                return Err(LpStatus::Infeasible);
            }
            s.drop_artificials(n);
        }
        Ok(s)
    }

    pub fn num_vars(&self) -> usize {
        self.ncols
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Minimizes `cᵀx` starting from the current (feasible) basis.
    pub fn minimize(&mut self, c: &[f64]) -> LpStatus {
        assert_eq!(c.len(), self.ncols);
        self.optimize(c)
    }

    pub fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.ncols + j]
    }

    fn optimize(&mut self, c: &[f64]) -> LpStatus {
        self.cost = c.to_vec();
        self.recompute_reduced_costs();
        let limit = 100 * (self.rows + self.ncols) + 1000;
        let refresh_every = self.rows.max(100);
        let mut degenerate = 0usize;
        let mut steps = 0usize;
        loop {
            if steps > limit {
                return LpStatus::IterationLimit;
            }
            if self.since_refresh >= refresh_every {
                self.refresh();
            }
            let bland = degenerate > DEGENERATE_STREAK;
            let Some((j, dir)) = self.price(bland) else {
                if self.since_refresh > 0 {
                    // Confirm optimality on a freshly factored basis.
                    self.refresh();
                    continue;
                }
                return if self.primal_feasible() { LpStatus::Optimal } else { LpStatus::IterationLimit };
            };
            steps += 1;
            self.iterations += 1;

            // Harris ratio test: bound the step with every row relaxed by
            // FEAS_TOL, then take the largest pivot among rows blocking
            // within that step. A bound flip of the entering variable wins
            // when it is no longer than the chosen row's step.
            let mut theta_max = f64::INFINITY;
            for r in 0..self.rows {
                let alpha = dir * self.entry(r, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let room = self.room(r, alpha);
                if room.is_finite() {
                    theta_max = theta_max.min((room.max(0.0) + FEAS_TOL) / alpha.abs());
                }
            }
            let flip = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, f64, f64)> = None;
            for r in 0..self.rows {
                let alpha = dir * self.entry(r, j);
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let room = self.room(r, alpha);
                if !room.is_finite() {
                    continue;
                }
                let ratio = room.max(0.0) / alpha.abs();
                if ratio > theta_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((r0, _, _)) if bland => self.basis[r] < self.basis[r0],
                    Some((_, a0, _)) => alpha.abs() > a0.abs(),
                };
                if better {
                    leave = Some((r, alpha, ratio));
                }
            }
            let (theta, leave) = match leave {
                Some((_, _, ratio)) if flip <= ratio => (flip, None),
                Some((r, alpha, ratio)) => (ratio, Some((r, alpha))),
                None => (flip, None),
            };
            if !theta.is_finite() {
                return LpStatus::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            self.x[j] += dir * theta;
            for r in 0..self.rows {
                let t = self.entry(r, j);
                if t != 0.0 {
                    let bv = self.basis[r];
                    self.x[bv] -= dir * theta * t;
                }
            }
            match leave {
                None => {
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((r, alpha)) => {
                    let bv = self.basis[r];
                    self.x[bv] = if alpha > 0.0 { self.lower[bv] } else { self.upper[bv] };
                    self.pivot(r, j);
                }
            }
        }
    }

    /// Entering variable and direction (+1 increase, −1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.row_of[j] != usize::MAX || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -OPT_TOL && self.x[j] < self.upper[j] {
                1.0
            } else if dj > OPT_TOL && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let piv = self.tab[r * nc + j];
        let inv = 1.0 / piv;
        let mut nz: Vec<usize> = Vec::new();
        for k in 0..nc {
            let v = &mut self.tab[r * nc + k];
            if *v != 0.0 {
                *v *= inv;
                nz.push(k);
            }
        }
        self.tab[r * nc + j] = 1.0;
        let prow: Vec<f64> = nz.iter().map(|&k| self.tab[r * nc + k]).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.tab[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * nc..(i + 1) * nc];
            for (&k, &p) in nz.iter().zip(&prow) {
                row[k] -= f * p;
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for (&k, &p) in nz.iter().zip(&prow) {
                self.d[k] -= f * p;
            }
            self.d[j] = 0.0;
        }
        let old = self.basis[r];
        self.row_of[old] = usize::MAX;
        self.basis[r] = j;
        self.row_of[j] = r;
        self.since_refresh += 1;
    }

    /// Distance the basic variable of row `r` can move before its bound.
    fn room(&self, r: usize, alpha: f64) -> f64 {
        let bv = self.basis[r];
        if alpha > 0.0 {
            self.x[bv] - self.lower[bv]
        } else {
            self.upper[bv] - self.x[bv]
        }
    }

    fn primal_feasible(&self) -> bool {
        let scale = 1.0 + self.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-7 * scale;
        self.basis.iter().all(|&j| self.x[j] >= self.lower[j] - tol && self.x[j] <= self.upper[j] + tol)
    }

    fn recompute_reduced_costs(&mut self) {
        let nc = self.ncols;
        self.d = self.cost.clone();
        for r in 0..self.rows {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.tab[r * nc..(r + 1) * nc];
                for (d, t) in self.d.iter_mut().zip(row) {
                    *d -= cb * t;
                }
            }
        }
        for &bv in &self.basis {
            self.d[bv] = 0.0;
        }
    }

    /// Rebuilds `B⁻¹A`, basic values and reduced costs from the original data
    /// to wash out accumulated rounding.
    fn refresh(&mut self) {
        self.since_refresh = 0;
        if self.rows == 0 {
            return;
        }
        let bmat = Matrix::from_columns(&self.basis.iter().map(|&j| self.a.column(j)).collect::<Vec<_>>());
        let lu = LU::new(bmat);
        let Some(t) = lu.solve(&self.a) else {
            return;
        };
        let mut rhs = nalgebra::DVector::from_column_slice(&self.b);
        for j in 0..self.ncols {
            if self.row_of[j] == usize::MAX && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
            }
        }
        let Some(xb) = lu.solve(&rhs) else {
            return;
        };
        for i in 0..self.rows {
            for j in 0..self.ncols {
                self.tab[i * self.ncols + j] = t[(i, j)];
            }
            self.x[self.basis[i]] = xb[i];
        }
        self.recompute_reduced_costs();
    }

    /// Pivots zero-valued artificials out of the basis, deletes redundant rows
    /// and removes the artificial columns.
    fn drop_artificials(&mut self, n: usize) {
        let mut r = 0;
        while r < self.rows {
            let bv = self.basis[r];
            if bv < n {
                r += 1;
                continue;
            }
            self.x[bv] = 0.0;
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..n {
                let v = self.entry(r, j).abs();
                if self.row_of[j] == usize::MAX && v > best_abs {
                    best_abs = v;
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => self.remove_row(r),
            }
        }
        let nc = self.ncols;
        let mut tab = Vec::with_capacity(self.rows * n);
        for i in 0..self.rows {
            tab.extend_from_slice(&self.tab[i * nc..i * nc + n]);
        }
        self.tab = tab;
        self.ncols = n;
        self.a = self.a.columns(0, n).into_owned();
        self.x.truncate(n);
        self.lower.truncate(n);
        self.upper.truncate(n);
        self.row_of.truncate(n);
        self.cost = vec![0.0; n];
        self.d = vec![0.0; n];
    }

    fn remove_row(&mut self, r: usize) {
        let nc = self.ncols;
        self.tab.drain(r * nc..(r + 1) * nc);
        let bv = self.basis.remove(r);
        self.row_of[bv] = usize::MAX;
        for (i, &j) in self.basis.iter().enumerate() {
            self.row_of[j] = i;
        }
        self.b.remove(r);
        self.a = self.a.clone().remove_row(r);
        self.rows -= 1;
    }
}
