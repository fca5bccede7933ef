//! Dense linear programming: a bounded-variable simplex, brute-force vertex
//! enumeration for small polytopes, and exact maximization of the
//! linear-fractional objective behind the CMZ perturbation bound.

mod fractional;
mod simplex;
mod vertices;

pub use fractional::{
    charnes_cooper_max_ratio, charnes_cooper_max_ratio_with, check_denominator_positive,
    max_weighted_abs, FractionalOptions, FractionalSolution,
};
pub use simplex::{LpStatus, Simplex};
pub use vertices::enumerate_vertices;

use crate::error::{check_dim, Result};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `opt cᵀx  s.t.  eq_a x = eq_b,  ineq_a x ≤ ineq_b,  lower ≤ x ≤ upper`.
///
/// Missing lower bounds default to 0 and missing upper bounds to +∞; use
/// `f64::NEG_INFINITY` / `f64::INFINITY` entries for free variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vector,
    pub sense: Sense,
    pub eq_a: Matrix,
    pub eq_b: Vector,
    pub ineq_a: Matrix,
    pub ineq_b: Vector,
    pub var_lower: Option<Vector>,
    pub var_upper: Option<Vector>,
}

impl LinearProgram {
    pub fn new(objective: Vector, sense: Sense) -> Self {
        let d = objective.len();
        LinearProgram {
            objective,
            sense,
            eq_a: Matrix::zeros(0, d),
            eq_b: Vector::zeros(0),
            ineq_a: Matrix::zeros(0, d),
            ineq_b: Vector::zeros(0),
            var_lower: None,
            var_upper: None,
        }
    }

    pub fn with_eq(mut self, a: Matrix, b: Vector) -> Self {
        self.eq_a = a;
        self.eq_b = b;
        self
    }

    pub fn with_ineq(mut self, a: Matrix, b: Vector) -> Self {
        self.ineq_a = a;
        self.ineq_b = b;
        self
    }

    pub fn with_bounds(mut self, lower: Vector, upper: Vector) -> Self {
        self.var_lower = Some(lower);
        self.var_upper = Some(upper);
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        check_dim("lp eq_a columns", d, self.eq_a.ncols())?;
        check_dim("lp eq_b", self.eq_a.nrows(), self.eq_b.len())?;
        check_dim("lp ineq_a columns", d, self.ineq_a.ncols())?;
        check_dim("lp ineq_b", self.ineq_a.nrows(), self.ineq_b.len())?;
        if let Some(l) = &self.var_lower {
            check_dim("lp var_lower", d, l.len())?;
        }
        if let Some(u) = &self.var_upper {
            check_dim("lp var_upper", d, u.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// The optimizer, present only when `status` is optimal.
    pub x: Option<Vector>,
    pub objective_value: f64,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution { status, x: None, objective_value: f64::NAN }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `p` with the two-phase bounded simplex. Inequality rows get slack
/// variables; the solver's crash basis uses them when they are feasible.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution> {
    p.validate()?;
    let d = p.dim();
    let (me, mi) = (p.eq_a.nrows(), p.ineq_a.nrows());
    let mut a = Matrix::zeros(me + mi, d + mi);
    a.view_mut((0, 0), (me, d)).copy_from(&p.eq_a);
    a.view_mut((me, 0), (mi, d)).copy_from(&p.ineq_a);
    for i in 0..mi {
        a[(me + i, d + i)] = 1.0;
    }
    let b: Vec<f64> = p.eq_b.iter().chain(p.ineq_b.iter()).copied().collect();
    let mut lower = vec![0.0; d + mi];
    let mut upper = vec![f64::INFINITY; d + mi];
    if let Some(l) = &p.var_lower {
        lower[..d].copy_from_slice(l.as_slice());
    }
    if let Some(u) = &p.var_upper {
        upper[..d].copy_from_slice(u.as_slice());
    }
    let mut simplex = match Simplex::new(&a, &b, &lower, &upper) {
        Ok(s) => s,
        Err(status) => return Ok(LpSolution::failed(status)),
    };
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut c = vec![0.0; d + mi];
    for j in 0..d {
        c[j] = sign * p.objective[j];
    }
    let status = simplex.minimize(&c);
    if status != LpStatus::Optimal {
        return Ok(LpSolution::failed(status));
    }
    let x = Vector::from_column_slice(&simplex.x()[..d]);
    let objective_value = p.objective.dot(&x);
    Ok(LpSolution { status, x: Some(x), objective_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_box() {
        let p = LinearProgram::new(dvector![1.0], Sense::Minimize)
            .with_bounds(dvector![0.0], dvector![1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x.unwrap()[0], 0.0);
    }

    #[test]
    fn equality_sum() {
        let p = LinearProgram::new(dvector![1.0, 1.0], Sense::Minimize)
            .with_eq(dmatrix![1.0, 1.0], dvector![1.0])
            .with_bounds(dvector![0.0, 0.0], dvector![1.0, 1.0]);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let p = LinearProgram::new(dvector![1.0], Sense::Minimize)
            .with_eq(dmatrix![1.0], dvector![2.0])
            .with_bounds(dvector![0.0], dvector![1.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
        let p = LinearProgram::new(dvector![1.0], Sense::Maximize);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
        let p = LinearProgram::new(dvector![1.0, -1.0], Sense::Minimize)
            .with_ineq(dmatrix![1.0, 1.0], dvector![3.0])
            .with_bounds(dvector![f64::NEG_INFINITY, 0.0], dvector![f64::INFINITY, 2.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables() {
        // min x + y with x free, y ≥ 0, x - y ≥ -1 ... x ≥ -1 + y, and x + 2y ≥ 1
        let p = LinearProgram::new(dvector![1.0, 1.0], Sense::Minimize)
            .with_ineq(dmatrix![-1.0, 1.0; -1.0, -2.0], dvector![1.0, -1.0])
            .with_bounds(dvector![f64::NEG_INFINITY, 0.0], dvector![f64::INFINITY, f64::INFINITY]);
        let s = solve_lp(&p).unwrap();
        // vertex at x = -1/3, y = 2/3
        assert!((s.objective_value - 1.0 / 3.0).abs() < 1e-12);
    }

    /// Random bounded LP in `d` variables: box [-1, 2]^d, a few inequality
    /// rows and optionally one equality row through a known feasible point.
    fn random_lp(d: usize, seed: u64) -> LinearProgram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = Vector::from_fn(d, |_, _| rng.random_range(-0.5..1.5));
        let mi = rng.random_range(0..=d + 1);
        let ineq_a = Matrix::from_fn(mi, d, |_, _| rng.random_range(-1.0..1.0));
        let ineq_b = &ineq_a * &x0 + Vector::from_fn(mi, |_, _| rng.random_range(0.0..1.0));
        let me = rng.random_range(0..2);
        let eq_a = Matrix::from_fn(me, d, |_, _| rng.random_range(-1.0..1.0));
        let eq_b = &eq_a * &x0;
        let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
        LinearProgram::new(Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)), sense)
            .with_eq(eq_a, eq_b)
            .with_ineq(ineq_a, ineq_b)
            .with_bounds(Vector::from_element(d, -1.0), Vector::from_element(d, 2.0))
    }

    fn as_polytope(p: &LinearProgram) -> (Matrix, Vector) {
        let d = p.dim();
        let mi = p.ineq_a.nrows();
        let mut a = Matrix::zeros(mi + 2 * d, d);
        let mut b = Vector::zeros(mi + 2 * d);
        a.rows_mut(0, mi).copy_from(&p.ineq_a);
        b.rows_mut(0, mi).copy_from(&p.ineq_b);
        let (l, u) = (p.var_lower.as_ref().unwrap(), p.var_upper.as_ref().unwrap());
        for j in 0..d {
            a[(mi + j, j)] = 1.0;
            b[mi + j] = u[j];
            a[(mi + d + j, j)] = -1.0;
            b[mi + d + j] = -l[j];
        }
        (a, b)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_vertex_enumeration(d in 1usize..=6, seed in any::<u64>()) {
            let p = random_lp(d, seed);
            let s = solve_lp(&p).unwrap();
            prop_assert_eq!(s.status, LpStatus::Optimal);
            let (a, b) = as_polytope(&p);
            let verts = enumerate_vertices(&a, &b, &p.eq_a, &p.eq_b).unwrap();
            prop_assert!(!verts.is_empty());
            let vals = verts.iter().map(|v| p.objective.dot(v));
            let best = match p.sense {
                Sense::Minimize => vals.fold(f64::INFINITY, f64::min),
                Sense::Maximize => vals.fold(f64::NEG_INFINITY, f64::max),
            };
            prop_assert!((s.objective_value - best).abs() < 1e-8, "{} vs {}", s.objective_value, best);

            // feasibility of the returned point
            let x = s.x.unwrap();
            let scale = 1.0 + p.ineq_b.amax().max(p.eq_b.amax());
            prop_assert!((&p.eq_a * &x - &p.eq_b).amax() <= 1e-8 * scale);
            prop_assert!((&a * &x - &b).max() <= 1e-8 * scale);

            // no feasible improving direction among small moves toward vertices
            let sign = if p.sense == Sense::Minimize { 1.0 } else { -1.0 };
            for v in &verts {
                let y = &x + (v - &x) * 1e-3;
                prop_assert!(sign * (p.objective.dot(&y) - s.objective_value) >= -1e-9);
            }
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Klee–Minty style cube in 6-D plus duplicated rows for degeneracy.
        let d = 6;
        let mut a = Matrix::zeros(2 * d, d);
        let mut b = Vector::zeros(2 * d);
        for i in 0..d {
            for j in 0..i {
                a[(i, j)] = 2f64.powi((i - j + 1) as i32);
            }
            a[(i, i)] = 1.0;
            b[i] = 5f64.powi(i as i32 + 1);
            let row = a.row(i).clone_owned();
            a.row_mut(d + i).copy_from(&row);
            b[d + i] = b[i];
        }
        let c = Vector::from_fn(d, |j, _| 2f64.powi((d - 1 - j) as i32));
        let p = LinearProgram::new(c, Sense::Maximize).with_ineq(a, b);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 5f64.powi(d as i32)).abs() < 1e-6 * 5f64.powi(d as i32));
    }
}
