use crate::error::{check_dim, Error, Result};
use crate::{Matrix, Vector};

use super::{box_membership, box_membership_residual, Interval, MEMBERSHIP_TOL};

/// `{c + Gξ : ‖ξ‖∞ ≤ 1}`. Generators are the columns of `G`; zero columns
/// are allowed and a zonotope without generators is a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: Vector,
    generators: Matrix,
}

impl Zonotope {
    pub fn new(center: Vector, generators: Matrix) -> Result<Self> {
        check_dim("zonotope generators rows", center.len(), generators.nrows())?;
        Ok(Zonotope { center, generators })
    }

    pub fn singleton(center: Vector) -> Self {
        let n = center.len();
        Zonotope { center, generators: Matrix::zeros(n, 0) }
    }

    /// Axis-aligned box as a zonotope with one generator per nonzero radius.
    pub fn from_interval(iv: &Interval) -> Self {
        let c = iv.center();
        let r = iv.radius();
        let cols: Vec<Vector> = (0..r.len())
            .filter(|&i| r[i] > 0.0)
            .map(|i| {
                let mut g = Vector::zeros(r.len());
                g[i] = r[i];
                g
            })
            .collect();
        let g = if cols.is_empty() { Matrix::zeros(c.len(), 0) } else { Matrix::from_columns(&cols) };
        Zonotope { center: c, generators: g }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn generators(&self) -> &Matrix {
        &self.generators
    }

    pub fn into_parts(self) -> (Vector, Matrix) {
        (self.center, self.generators)
    }

    /// `c + Gξ` for a coefficient vector in the unit box.
    pub fn point(&self, coeffs: &Vector) -> Result<Vector> {
        check_dim("zonotope coefficients", self.num_generators(), coeffs.len())?;
        check_box(coeffs)?;
        Ok(&self.center + &self.generators * coeffs)
    }

    /// L1 residual of the best box-feasible representation of `x`.
    pub fn membership_residual(&self, x: &Vector) -> Result<f64> {
        check_dim("zonotope membership", self.dim(), x.len())?;
        box_membership_residual(&self.generators, &(x - &self.center), &Matrix::zeros(0, 0), &Vector::zeros(0))
    }

    /// Box coefficients reproducing `x`, if `x` is a member.
    pub fn coefficients_of(&self, x: &Vector) -> Result<Option<Vector>> {
        check_dim("zonotope membership", self.dim(), x.len())?;
        let (r, xi) = box_membership(&self.generators, &(x - &self.center), &Matrix::zeros(0, 0), &Vector::zeros(0))?;
        Ok((r <= MEMBERSHIP_TOL).then_some(xi))
    }

    /// Membership by feasibility LP with absolute tolerance `1e-9`.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        Ok(self.membership_residual(x)? <= MEMBERSHIP_TOL)
    }
}

pub(crate) fn check_box(coeffs: &Vector) -> Result<()> {
    let m = coeffs.amax();
    if m > 1.0 + 1e-12 || !m.is_finite() {
        return Err(Error::CoefficientOutOfBox(m));
    }
    Ok(())
}

pub fn zono_linear_map(r: &Matrix, z: &Zonotope) -> Result<Zonotope> {
    check_dim("zono_linear_map", r.ncols(), z.dim())?;
    Ok(Zonotope { center: r * &z.center, generators: r * &z.generators })
}

pub fn zono_minkowski_sum(z1: &Zonotope, z2: &Zonotope) -> Result<Zonotope> {
    check_dim("zono_minkowski_sum", z1.dim(), z2.dim())?;
    Ok(Zonotope { center: &z1.center + &z2.center, generators: hcat(&z1.generators, &z2.generators) })
}

pub fn zono_cartesian_product(z1: &Zonotope, z2: &Zonotope) -> Zonotope {
    let (n1, n2) = (z1.dim(), z2.dim());
    let (g1, g2) = (z1.num_generators(), z2.num_generators());
    let mut center = Vector::zeros(n1 + n2);
    center.rows_mut(0, n1).copy_from(&z1.center);
    center.rows_mut(n1, n2).copy_from(&z2.center);
    let mut g = Matrix::zeros(n1 + n2, g1 + g2);
    g.view_mut((0, 0), (n1, g1)).copy_from(&z1.generators);
    g.view_mut((n1, g1), (n2, g2)).copy_from(&z2.generators);
    Zonotope { center, generators: g }
}

pub(crate) fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    let mut g = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    g.columns_mut(0, a.ncols()).copy_from(a);
    g.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    g
}

/// Girard's reduction score `‖g‖₁ − ‖g‖∞`.
fn girard_score(g: nalgebra::DVectorView<f64>) -> f64 {
    g.iter().map(|v| v.abs()).sum::<f64>() - g.amax()
}

/// Reduces `gens` to at most `cap` columns by boxing the columns with the
/// smallest Girard scores. Kept columns stay in their original order and the
/// box generators (nonzero ones only) are appended.
pub(crate) fn girard_reduce_columns(gens: &Matrix, cap: usize) -> Matrix {
    let (n, k) = gens.shape();
    if k <= cap {
        return gens.clone();
    }
    let keep = cap.saturating_sub(n);
    let scores: Vec<f64> = gens.column_iter().map(|c| girard_score(c.as_view())).collect();
    let mut order: Vec<usize> = (0..k).collect();
    // Stable: equal scores keep their original relative order.
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let boxed = &order[..k - keep];
    let mut kept = order[k - keep..].to_vec();
    kept.sort_unstable();
    let mut radius = Vector::zeros(n);
    for &j in boxed {
        for i in 0..n {
            radius[i] += gens[(i, j)].abs();
        }
    }
    let nbox = radius.iter().filter(|r| **r > 0.0).count();
    let mut out = Matrix::zeros(n, kept.len() + nbox);
    for (t, &j) in kept.iter().enumerate() {
        out.set_column(t, &gens.column(j));
    }
    let mut t = kept.len();
    for i in 0..n {
        if radius[i] > 0.0 {
            out[(i, t)] = radius[i];
            t += 1;
        }
    }
    out
}

/// Girard order reduction to at most `order · n` generators (`order` below
/// one is treated as one).
pub fn zono_reduce_girard(z: &Zonotope, order: usize) -> Zonotope {
    let cap = order.max(1) * z.dim();
    Zonotope { center: z.center.clone(), generators: girard_reduce_columns(&z.generators, cap) }
}

pub fn interval_hull(z: &Zonotope) -> Interval {
    let rad = abs_row_sums(&z.generators);
    Interval::from_center_radius(&z.center, &rad)
}

fn abs_row_sums(g: &Matrix) -> Vector {
    Vector::from_fn(g.nrows(), |i, _| g.row(i).iter().map(|v| v.abs()).sum())
}
