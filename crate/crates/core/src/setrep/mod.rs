//! Set representations and their algebra: zonotopes, intervals, constrained
//! zonotopes, matrix zonotopes and constrained matrix zonotopes.

mod constrained;
mod matrix;
mod zonotope;

pub use constrained::{cmz_times_cz, cz_coefficient_bounds, cz_membership, sample_coefficient_set, ConstrainedZonotope};
pub use matrix::{matrix_times_cmz, mz_sample, mz_times_zonotope, ConstrainedMatrixZonotope, MatrixZonotope};
pub use zonotope::{
    interval_hull, zono_cartesian_product, zono_linear_map, zono_minkowski_sum, zono_reduce_girard,
    Zonotope,
};

pub(crate) use zonotope::{check_box, girard_reduce_columns, hcat};

use crate::error::{check_dim, Error, Result};
use crate::lp::{LpStatus, Simplex};
use crate::{Matrix, Vector};

/// Absolute tolerance on the L1 residual of membership LPs.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lower: Vector,
    pub upper: Vector,
}

impl Interval {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("interval", lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Invalid("interval lower bound exceeds upper bound".into()));
        }
        Ok(Interval { lower, upper })
    }

    pub fn from_center_radius(c: &Vector, r: &Vector) -> Self {
        Interval { lower: c - r, upper: c + r }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vector {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn radius(&self) -> Vector {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn widths(&self) -> Vector {
        &self.upper - &self.lower
    }

    /// Product of the side lengths.
    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim()
            && (0..x.len()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }
}

/// Componentwise range of each coefficient over a coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBounds {
    pub lower: Vector,
    pub upper: Vector,
}

impl CoefficientBounds {
    pub fn unit(k: usize) -> Self {
        CoefficientBounds { lower: Vector::from_element(k, -1.0), upper: Vector::from_element(k, 1.0) }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Largest magnitude the product of coefficients `i` (here) and `j`
    /// (in `other`) can take: the max of the four corner products.
    pub fn product_magnitude(&self, i: usize, other: &CoefficientBounds, j: usize) -> f64 {
        let (a, b) = (self.lower[i], self.upper[i]);
        let (c, d) = (other.lower[j], other.upper[j]);
        (a * c).abs().max((a * d).abs()).max((b * c).abs()).max((b * d).abs())
    }

    pub fn concat(parts: &[&CoefficientBounds]) -> Self {
        let lower: Vec<f64> = parts.iter().flat_map(|p| p.lower.iter().copied()).collect();
        let upper: Vec<f64> = parts.iter().flat_map(|p| p.upper.iter().copied()).collect();
        CoefficientBounds { lower: Vector::from_vec(lower), upper: Vector::from_vec(upper) }
    }
}

/// Minimal L1 residual `‖Gξ − t‖₁ + ‖Aξ − b‖₁` over the unit box, where `A`
/// acts on the leading `A.ncols()` coefficients. Zero (to tolerance) iff
/// `t` is in the set.
pub(crate) fn box_membership_residual(g: &Matrix, t: &Vector, a: &Matrix, b: &Vector) -> Result<f64> {
    box_membership(g, t, a, b).map(|(r, _)| r)
}

/// As [`box_membership_residual`], also returning the coefficients found.
pub(crate) fn box_membership(g: &Matrix, t: &Vector, a: &Matrix, b: &Vector) -> Result<(f64, Vector)> {
    let (n, k) = g.shape();
    let q = if a.ncols() == 0 { 0 } else { a.nrows() };
    let rows = n + q;
    let nv = k + 2 * rows;
    let mut m = Matrix::zeros(rows, nv);
    m.view_mut((0, 0), (n, k)).copy_from(g);
    if q > 0 {
        m.view_mut((n, 0), (q, a.ncols())).copy_from(a);
    }
    for i in 0..rows {
        m[(i, k + i)] = 1.0;
        m[(i, k + rows + i)] = -1.0;
    }
    let rhs: Vec<f64> = t.iter().chain(b.iter().take(q)).copied().collect();
    let mut lower = vec![-1.0; nv];
    let mut upper = vec![1.0; nv];
    for j in k..nv {
        lower[j] = 0.0;
        upper[j] = f64::INFINITY;
    }
    let mut lp = Simplex::new(&m, &rhs, &lower, &upper).map_err(|s| Error::Lp(format!("membership phase one: {s:?}")))?;
    let mut c = vec![0.0; nv];
    c[k..].iter_mut().for_each(|v| *v = 1.0);
    match lp.minimize(&c) {
        LpStatus::Optimal => Ok((lp.objective().max(0.0), Vector::from_column_slice(&lp.x()[..k]))),
        s => Err(Error::Lp(format!("membership LP ended with {s:?}"))),
    }
}

/// Connected components of the column-interaction graph of `a` (columns
/// sharing a nonzero row are linked). Columns without nonzeros are left out.
pub(crate) fn constraint_components(a: &Matrix) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (q, k) = a.shape();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut row_first = vec![usize::MAX; q];
    for i in 0..q {
        let mut first = usize::MAX;
        for j in 0..k {
            if a[(i, j)] != 0.0 {
                if first == usize::MAX {
                    first = j;
                } else {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, j));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        row_first[i] = first;
    }
    let mut used = vec![false; k];
    for i in 0..q {
        for j in 0..k {
            if a[(i, j)] != 0.0 {
                used[j] = true;
            }
        }
    }
    let mut comp_of = vec![usize::MAX; k];
    let mut comps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for j in 0..k {
        if !used[j] {
            continue;
        }
        let r = find(&mut parent, j);
        if comp_of[r] == usize::MAX {
            comp_of[r] = comps.len();
            comps.push((Vec::new(), Vec::new()));
        }
        comps[comp_of[r]].0.push(j);
    }
    for (i, &first) in row_first.iter().enumerate() {
        if first != usize::MAX {
            let r = find(&mut parent, first);
            comps[comp_of[r]].1.push(i);
        }
    }
    comps
}

/// Rows of `a` without any nonzero entry must have `b ≈ 0`; otherwise the
/// constraint set is empty. Such rows belong to no component.
pub(crate) fn zero_rows_consistent(a: &Matrix, b: &Vector) -> bool {
    let scale = b.amax().max(1.0);
    (0..b.len()).all(|i| b[i].abs() <= 1e-9 * scale || (a.ncols() > 0 && a.row(i).iter().any(|v| *v != 0.0)))
}

/// Warm-started simplex over one constraint component with box bounds.
pub(crate) fn component_simplex(a: &Matrix, b: &Vector, cols: &[usize], rows: &[usize]) -> Result<Simplex> {
    let sub = Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
    let rhs: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
    let k = cols.len();
    Simplex::new(&sub, &rhs, &vec![-1.0; k], &vec![1.0; k]).map_err(|s| match s {
        LpStatus::Infeasible => Error::EmptyCoefficientSet,
        s => Error::Lp(format!("coefficient set phase one: {s:?}")),
    })
}
