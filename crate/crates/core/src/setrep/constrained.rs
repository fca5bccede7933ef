use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::lp::LpStatus;
use crate::{Matrix, Vector};

use super::{zero_rows_consistent, 
    box_membership_residual, component_simplex, constraint_components, girard_reduce_columns,
    CoefficientBounds, ConstrainedMatrixZonotope, Interval, Zonotope, MEMBERSHIP_TOL,
};

/// `{c + Gξ : Aξ = b, ‖ξ‖∞ ≤ 1}`.
///
/// The constraint matrix is stored for the leading `num_constrained()`
/// coefficients only; the remaining generators have all-zero constraint
/// columns. Operations keep constrained generators first so that order
/// reduction can work on the unconstrained tail.
#[derive(Debug, Clone)]
pub struct ConstrainedZonotope {
    center: Vector,
    generators: Matrix,
    con_a: Matrix,
    con_b: Vector,
}

impl ConstrainedZonotope {
    /// Validates shapes and checks by LP that the coefficient set is nonempty.
    pub fn new(center: Vector, generators: Matrix, con_a: Matrix, con_b: Vector) -> Result<Self> {
        check_dim("constrained zonotope generators rows", center.len(), generators.nrows())?;
        check_dim("constrained zonotope rhs", con_a.nrows(), con_b.len())?;
        if con_a.nrows() > 0 {
            check_dim("constrained zonotope constraint columns", generators.ncols(), con_a.ncols())?;
        }
        let used = (0..con_a.ncols()).rev().find(|&j| con_a.column(j).iter().any(|v| *v != 0.0)).map_or(0, |j| j + 1);
        let con_a = if con_a.nrows() == 0 { Matrix::zeros(0, 0) } else { con_a.columns(0, used).into_owned() };
        if !zero_rows_consistent(&con_a, &con_b) {
            return Err(Error::EmptyCoefficientSet);
        }
        let z = ConstrainedZonotope { center, generators, con_a, con_b };
        z.coefficient_feasible()?;
        Ok(z)
    }

    pub fn from_zonotope(z: &Zonotope) -> Self {
        ConstrainedZonotope {
            center: z.center().clone(),
            generators: z.generators().clone(),
            con_a: Matrix::zeros(0, 0),
            con_b: Vector::zeros(0),
        }
    }

    /// Caller guarantees shape consistency and a nonempty coefficient set
    /// (e.g. inherited from operands).
    pub(crate) fn from_parts(center: Vector, generators: Matrix, con_a: Matrix, con_b: Vector) -> Self {
        debug_assert_eq!(center.len(), generators.nrows());
        debug_assert!(con_a.ncols() <= generators.ncols());
        debug_assert_eq!(con_a.nrows(), con_b.len());
        let con_a = if con_a.nrows() == 0 { Matrix::zeros(0, 0) } else { con_a };
        ConstrainedZonotope { center, generators, con_a, con_b }
    }

    fn coefficient_feasible(&self) -> Result<()> {
        for (cols, rows) in constraint_components(&self.con_a) {
            component_simplex(&self.con_a, &self.con_b, &cols, &rows)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.con_b.len()
    }

    /// Number of leading coefficients that appear in the constraints.
    pub fn num_constrained(&self) -> usize {
        self.con_a.ncols()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn generators(&self) -> &Matrix {
        &self.generators
    }

    /// Constraint columns of the leading constrained coefficients.
    pub fn con_a_prefix(&self) -> &Matrix {
        &self.con_a
    }

    /// Full `q × γ` constraint matrix (zero-padded).
    pub fn con_a(&self) -> Matrix {
        let mut a = Matrix::zeros(self.num_constraints(), self.num_generators());
        a.columns_mut(0, self.con_a.ncols()).copy_from(&self.con_a);
        a
    }

    pub fn con_b(&self) -> &Vector {
        &self.con_b
    }

    pub fn is_unconstrained(&self) -> bool {
        self.num_constraints() == 0
    }

    /// `c + Gξ`; the constraints are not checked.
    pub fn point(&self, coeffs: &Vector) -> Result<Vector> {
        check_dim("constrained zonotope coefficients", self.num_generators(), coeffs.len())?;
        super::check_box(coeffs)?;
        Ok(&self.center + &self.generators * coeffs)
    }

    /// Drops the constraints.
    pub fn to_zonotope(&self) -> Zonotope {
        Zonotope::new(self.center.clone(), self.generators.clone()).expect("shapes checked")
    }

    pub fn coefficient_bounds(&self) -> Result<CoefficientBounds> {
        cz_coefficient_bounds(&self.con_a, &self.con_b, self.num_generators())
    }

    pub fn membership_residual(&self, x: &Vector) -> Result<f64> {
        check_dim("constrained zonotope membership", self.dim(), x.len())?;
        box_membership_residual(&self.generators, &(x - &self.center), &self.con_a, &self.con_b)
    }

    /// Tight interval hull: unconstrained generators contribute `Σ|g|`, every
    /// constraint component contributes its exact LP support values.
    pub fn interval_hull(&self) -> Result<Interval> {
        let n = self.dim();
        let comps = constraint_components(&self.con_a);
        let mut in_comp = vec![false; self.num_generators()];
        let mut lower = self.center.clone();
        let mut upper = self.center.clone();
        for (cols, rows) in &comps {
            for &j in cols {
                in_comp[j] = true;
            }
            let mut lp = component_simplex(&self.con_a, &self.con_b, cols, rows)?;
            for i in 0..n {
                let g: Vec<f64> = cols.iter().map(|&j| self.generators[(i, j)]).collect();
                if g.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                upper[i] += -solve(&mut lp, &neg)?;
                lower[i] += solve(&mut lp, &g)?;
            }
        }
        for j in 0..self.num_generators() {
            if !in_comp[j] {
                for i in 0..n {
                    let v = self.generators[(i, j)].abs();
                    lower[i] -= v;
                    upper[i] += v;
                }
            }
        }
        Ok(Interval { lower, upper })
    }

    pub fn linear_map(&self, r: &Matrix) -> Result<Self> {
        check_dim("constrained zonotope linear map", r.ncols(), self.dim())?;
        Ok(ConstrainedZonotope {
            center: r * &self.center,
            generators: r * &self.generators,
            con_a: self.con_a.clone(),
            con_b: self.con_b.clone(),
        })
    }

    /// Minkowski sum with a zonotope: its generators join the unconstrained tail.
    pub fn minkowski_sum_zonotope(&self, z: &Zonotope) -> Result<Self> {
        check_dim("constrained zonotope minkowski sum", self.dim(), z.dim())?;
        Ok(ConstrainedZonotope {
            center: &self.center + z.center(),
            generators: super::hcat(&self.generators, z.generators()),
            con_a: self.con_a.clone(),
            con_b: self.con_b.clone(),
        })
    }

    /// General Minkowski sum with block-diagonal constraints.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim("constrained zonotope minkowski sum", self.dim(), other.dim())?;
        let (k1, k2) = (self.num_constrained(), other.num_constrained());
        let n = self.dim();
        let (g1, g2) = (&self.generators, &other.generators);
        let total = g1.ncols() + g2.ncols();
        let mut g = Matrix::zeros(n, total);
        g.columns_mut(0, k1).copy_from(&g1.columns(0, k1));
        g.columns_mut(k1, k2).copy_from(&g2.columns(0, k2));
        let u1 = g1.ncols() - k1;
        g.columns_mut(k1 + k2, u1).copy_from(&g1.columns(k1, u1));
        g.columns_mut(k1 + k2 + u1, g2.ncols() - k2).copy_from(&g2.columns(k2, g2.ncols() - k2));
        let (con_a, con_b) = block_diag(&self.con_a, &self.con_b, &other.con_a, &other.con_b);
        Ok(ConstrainedZonotope { center: &self.center + &other.center, generators: g, con_a, con_b })
    }

    /// `self × z` with `z` unconstrained.
    pub fn cartesian_product_zonotope(&self, z: &Zonotope) -> Self {
        let (n1, n2) = (self.dim(), z.dim());
        let (k1, k2) = (self.num_generators(), z.num_generators());
        let mut center = Vector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(&self.center);
        center.rows_mut(n1, n2).copy_from(z.center());
        let mut g = Matrix::zeros(n1 + n2, k1 + k2);
        g.view_mut((0, 0), (n1, k1)).copy_from(&self.generators);
        g.view_mut((n1, k1), (n2, k2)).copy_from(z.generators());
        ConstrainedZonotope { center, generators: g, con_a: self.con_a.clone(), con_b: self.con_b.clone() }
    }

    /// Girard reduction restricted to the unconstrained tail: the total stays
    /// within `order · n` generators unless the constrained generators alone
    /// exceed that, in which case the tail collapses to at most `n` box
    /// generators. Constrained generators are never touched.
    pub fn reduce(&self, order: usize) -> Self {
        let n = self.dim();
        let cap = order.max(1) * n;
        let kc = self.num_constrained();
        let tail = self.num_generators() - kc;
        let tail_cap = cap.saturating_sub(kc).max(n);
        if tail <= tail_cap {
            return self.clone();
        }
        let reduced = girard_reduce_columns(&self.generators.columns(kc, tail).into_owned(), tail_cap);
        let mut g = Matrix::zeros(n, kc + reduced.ncols());
        g.columns_mut(0, kc).copy_from(&self.generators.columns(0, kc));
        g.columns_mut(kc, reduced.ncols()).copy_from(&reduced);
        ConstrainedZonotope { center: self.center.clone(), generators: g, con_a: self.con_a.clone(), con_b: self.con_b.clone() }
    }

    /// Random members of the coefficient set; see [`sample_coefficient_set`].
    pub fn sample_coefficients<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<Vector>> {
        sample_coefficient_set(&self.con_a, &self.con_b, self.num_generators(), count, rng)
    }
}

fn solve(lp: &mut crate::lp::Simplex, c: &[f64]) -> Result<f64> {
    match lp.minimize(c) {
        LpStatus::Optimal => Ok(lp.objective()),
        s => Err(Error::Lp(format!("support LP ended with {s:?}"))),
    }
}

pub(crate) fn block_diag(a1: &Matrix, b1: &Vector, a2: &Matrix, b2: &Vector) -> (Matrix, Vector) {
    let (q1, q2) = (b1.len(), b2.len());
    let (c1, c2) = (a1.ncols(), a2.ncols());
    if q2 == 0 {
        return (a1.clone(), b1.clone());
    }
    // A constrained second block must sit after the full first prefix.
    let mut a = Matrix::zeros(q1 + q2, c1 + c2);
    if q1 > 0 {
        a.view_mut((0, 0), (q1, c1)).copy_from(a1);
    }
    a.view_mut((q1, c1), (q2, c2)).copy_from(a2);
    let mut b = Vector::zeros(q1 + q2);
    b.rows_mut(0, q1).copy_from(b1);
    b.rows_mut(q1, q2).copy_from(b2);
    (a, b)
}

/// Per-coordinate minima and maxima over `{Aξ = b, ‖ξ‖∞ ≤ 1}` for `γ`
/// coefficients; `A` may cover only the leading coefficients (the rest are
/// free in `[-1, 1]`).
///
/// The LPs are solved per connected component of the constraints with a
/// warm-started simplex. A coordinate whose running extreme over the points
/// visited so far already reached ±1 needs no LP of its own.
pub fn cz_coefficient_bounds(con_a: &Matrix, con_b: &Vector, gamma: usize) -> Result<CoefficientBounds> {
    check_dim("coefficient bounds rhs", con_a.nrows(), con_b.len())?;
    let q = con_b.len();
    let a = if q == 0 { Matrix::zeros(0, 0) } else { con_a.clone() };
    if a.ncols() > gamma {
        return Err(Error::DimensionMismatch { op: "coefficient bounds columns", expected: gamma, got: a.ncols() });
    }
    if !zero_rows_consistent(&a, con_b) {
        return Err(Error::EmptyCoefficientSet);
    }
    let mut out = CoefficientBounds::unit(gamma);
    for (cols, rows) in constraint_components(&a) {
        let mut lp = component_simplex(&a, con_b, &cols, &rows)?;
        let k = cols.len();
        let mut lo: Vec<f64> = lp.x().to_vec();
        let mut hi: Vec<f64> = lo.clone();
        let mut c = vec![0.0; k];
        for t in 0..k {
            for (sign, done) in [(-1.0, hi[t] >= 1.0 - 1e-12), (1.0, lo[t] <= -1.0 + 1e-12)] {
                if done {
                    continue;
                }
                c[t] = sign;
                solve(&mut lp, &c)?;
                c[t] = 0.0;
                for (s, &x) in lp.x().iter().enumerate() {
                    lo[s] = lo[s].min(x);
                    hi[s] = hi[s].max(x);
                }
            }
        }
        for (t, &j) in cols.iter().enumerate() {
            out.lower[j] = lo[t].clamp(-1.0, 1.0);
            out.upper[j] = hi[t].clamp(-1.0, 1.0);
        }
    }
    Ok(out)
}

/// Random points of `{Aξ = b, ‖ξ‖∞ ≤ 1}`: per constraint component, random
/// convex combinations of LP vertices reached from random objectives;
/// unconstrained coordinates are uniform in `[-1, 1]`.
pub fn sample_coefficient_set<R: Rng>(
    con_a: &Matrix,
    con_b: &Vector,
    gamma: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vector>> {
    let q = con_b.len();
    let a = if q == 0 { Matrix::zeros(0, 0) } else { con_a.clone() };
    let comps = constraint_components(&a);
    let mut constrained = vec![false; gamma];
    let mut vertex_sets: Vec<(Vec<usize>, Vec<Vec<f64>>)> = Vec::new();
    for (cols, rows) in comps {
        let mut lp = component_simplex(&a, con_b, &cols, &rows)?;
        let k = cols.len();
        let nv = (2 * k).clamp(4, 24);
        let mut verts = Vec::with_capacity(nv);
        for _ in 0..nv {
            let c: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            solve(&mut lp, &c)?;
            verts.push(lp.x().to_vec());
        }
        for &j in &cols {
            constrained[j] = true;
        }
        vertex_sets.push((cols, verts));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut xi = Vector::from_fn(gamma, |j, _| if constrained[j] { 0.0 } else { rng.random_range(-1.0..=1.0) });
        for (cols, verts) in &vertex_sets {
            let w: Vec<f64> = verts.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            for (v, wt) in verts.iter().zip(&w) {
                for (t, &j) in cols.iter().enumerate() {
                    xi[j] += wt / total * v[t];
                }
            }
            for &j in cols {
                xi[j] = xi[j].clamp(-1.0, 1.0);
            }
        }
        out.push(xi);
    }
    Ok(out)
}

/// Membership of `point` by feasibility LP (residual tolerance `1e-9`).
/// LP breakdowns are returned as errors, distinct from `Ok(false)`.
pub fn cz_membership(zc: &ConstrainedZonotope, point: &Vector) -> Result<bool> {
    Ok(zc.membership_residual(point)? <= MEMBERSHIP_TOL)
}

/// Over-approximation of `{Nx : N ∈ 𝒩, x ∈ Z_c}` as a constrained zonotope.
///
/// With `N = C_N + Σ ξ_N⁽ⁱ⁾G_N⁽ⁱ⁾` and `x = c_z + Σ ξ_z⁽ʲ⁾g_z⁽ʲ⁾` the product is
/// `C_N c_z + Σ ξ_N⁽ⁱ⁾G_N⁽ⁱ⁾c_z + Σ ξ_z⁽ʲ⁾C_N g_z⁽ʲ⁾ + Σ ξ_N⁽ⁱ⁾ξ_z⁽ʲ⁾G_N⁽ⁱ⁾g_z⁽ʲ⁾`.
/// The first two sums keep their constrained coefficients; each bilinear
/// term gets a fresh box coefficient on the generator `d̄⁽ⁱʲ⁾G_N⁽ⁱ⁾g_z⁽ʲ⁾`, with
/// `d̄⁽ⁱʲ⁾` the largest corner product of the coefficient ranges. Cross terms
/// with `d̄ = 0` or a zero generator are dropped.
pub fn cmz_times_cz(n: &ConstrainedMatrixZonotope, zc: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    check_dim("cmz_times_cz", n.ncols(), zc.dim())?;
    let rows = n.nrows();
    let bn = n.coefficient_bounds()?;
    let bz = zc.coefficient_bounds()?;
    let cz = zc.center();
    let gz = zc.generators();
    let (gn_count, gz_count) = (n.num_generators(), zc.num_generators());
    let kz = zc.num_constrained();
    let n_constrained = n.num_constraints() > 0;

    let mz_gens: Vec<Vector> = n.generators().iter().map(|g| g * cz).collect();
    let cg = n.center() * gz;

    let mut cross: Vec<f64> = Vec::new();
    for (i, gi) in n.generators().iter().enumerate() {
        let prod = gi * gz;
        for j in 0..gz_count {
            let d = bn.product_magnitude(i, &bz, j);
            if d == 0.0 {
                continue;
            }
            let col = prod.column(j);
            if col.iter().all(|v| *v == 0.0) {
                continue;
            }
            cross.extend(col.iter().map(|v| d * v));
        }
    }
    let n_cross = cross.len() / rows.max(1);

    let mut blocks: Vec<Vector> = Vec::with_capacity(gn_count + gz_count + n_cross);
    let push_mz = |blocks: &mut Vec<Vector>| blocks.extend(mz_gens.iter().cloned());
    if n_constrained {
        push_mz(&mut blocks);
        blocks.extend(cg.columns(0, kz).column_iter().map(|c| c.into_owned()));
    } else {
        blocks.extend(cg.columns(0, kz).column_iter().map(|c| c.into_owned()));
        push_mz(&mut blocks);
    }
    blocks.extend(cg.columns(kz, gz_count - kz).column_iter().map(|c| c.into_owned()));

    let total = blocks.len() + n_cross;
    let mut g = Matrix::zeros(rows, total);
    for (t, col) in blocks.iter().enumerate() {
        g.set_column(t, col);
    }
    if n_cross > 0 {
        g.columns_mut(blocks.len(), n_cross).copy_from(&Matrix::from_vec(rows, n_cross, cross));
    }

    let (con_a, con_b) = if n_constrained {
        block_diag(n.con_a(), n.con_b(), zc.con_a_prefix(), zc.con_b())
    } else {
        (zc.con_a_prefix().clone(), zc.con_b().clone())
    };
    Ok(ConstrainedZonotope::from_parts(n.center() * cz, g, con_a, con_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::{mz_times_zonotope, MatrixZonotope};
    use crate::lp::enumerate_vertices;
    use nalgebra::{dmatrix, dvector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unconstrained(c: Vector, g: Matrix) -> ConstrainedZonotope {
        ConstrainedZonotope::from_zonotope(&Zonotope::new(c, g).unwrap())
    }

    #[test]
    fn empty_coefficient_set_rejected() {
        let r = ConstrainedZonotope::new(dvector![0.0], dmatrix![1.0, 1.0], dmatrix![1.0, 1.0], dvector![3.0]);
        assert!(matches!(r, Err(Error::EmptyCoefficientSet)));
        let r = ConstrainedZonotope::new(dvector![0.0], dmatrix![1.0], dmatrix![0.0], dvector![1.0]);
        assert!(matches!(r, Err(Error::EmptyCoefficientSet)));
    }

    #[test]
    fn membership_examples() {
        let z = unconstrained(dvector![1.0, 2.0], dmatrix![1.0, 0.0; 0.0, 1.0]);
        assert!(cz_membership(&z, &dvector![1.0, 2.0]).unwrap());
        assert!(!cz_membership(&z, &dvector![11.0, 2.0]).unwrap());
        // x = ξ1 + ξ2 with ξ1 = ξ2 → x ∈ [-2, 2]; with ξ1 = -ξ2 → {0}
        let c = ConstrainedZonotope::new(dvector![0.0], dmatrix![1.0, 1.0], dmatrix![1.0, 1.0], dvector![0.0]).unwrap();
        assert!(cz_membership(&c, &dvector![0.0]).unwrap());
        assert!(!cz_membership(&c, &dvector![0.5]).unwrap());
    }

    #[test]
    fn membership_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = ConstrainedZonotope::new(
            dvector![0.5, -1.0],
            dmatrix![1.0, 0.3, -0.5, 0.2; 0.0, 1.0, 0.4, -0.7],
            dmatrix![1.0, -1.0, 0.5, 0.0],
            dvector![0.2],
        )
        .unwrap();
        let xs = z.sample_coefficients(100, &mut rng).unwrap();
        for w in xs.windows(2) {
            let (a, b) = (z.point(&w[0]).unwrap(), z.point(&w[1]).unwrap());
            let t: f64 = rng.random();
            assert!(cz_membership(&z, &(&a * t + &b * (1.0 - t))).unwrap());
        }
    }

    #[test]
    fn coefficient_bound_examples() {
        let b = cz_coefficient_bounds(&Matrix::zeros(0, 3), &Vector::zeros(0), 3).unwrap();
        assert_eq!(b, CoefficientBounds::unit(3));
        let b = cz_coefficient_bounds(&dmatrix![1.0, 1.0], &dvector![2.0], 2).unwrap();
        assert!((b.lower - dvector![1.0, 1.0]).amax() < 1e-12);
        let a = dmatrix![1.0, -1.0];
        let b = cz_coefficient_bounds(&a, &dvector![0.0], 2).unwrap();
        let mut box_a = Matrix::zeros(4, 2);
        for j in 0..2 {
            box_a[(j, j)] = 1.0;
            box_a[(2 + j, j)] = -1.0;
        }
        let verts = enumerate_vertices(&box_a, &Vector::from_element(4, 1.0), &a, &dvector![0.0]).unwrap();
        for j in 0..2 {
            let hi = verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max);
            let lo = verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min);
            assert!((b.upper[j] - hi).abs() < 1e-12 && (b.lower[j] - lo).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_bounds_match_vertices_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let k = rng.random_range(2..6);
            let r = rng.random_range(1..k);
            let a = Matrix::from_fn(r, k, |_, _| rng.random_range(-1.0..1.0));
            let b = &a * Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let got = cz_coefficient_bounds(&a, &b, k).unwrap();
            let mut box_a = Matrix::zeros(2 * k, k);
            for j in 0..k {
                box_a[(j, j)] = 1.0;
                box_a[(k + j, j)] = -1.0;
            }
            let verts = enumerate_vertices(&box_a, &Vector::from_element(2 * k, 1.0), &a, &b).unwrap();
            for j in 0..k {
                let hi = verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max);
                let lo = verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min);
                assert!((got.upper[j] - hi).abs() < 1e-9, "{} vs {}", got.upper[j], hi);
                assert!((got.lower[j] - lo).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interval_hull_matches_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = ConstrainedZonotope::new(
            dvector![0.0, 1.0],
            dmatrix![1.0, 0.5, 0.2; 0.3, -1.0, 0.4],
            dmatrix![1.0, 1.0, 0.0],
            dvector![0.5],
        )
        .unwrap();
        let h = z.interval_hull().unwrap();
        let mut seen_hi = Vector::from_element(2, f64::NEG_INFINITY);
        for xi in z.sample_coefficients(2000, &mut rng).unwrap() {
            let x = z.point(&xi).unwrap();
            assert!(h.contains(&x, 1e-12));
            seen_hi = seen_hi.sup(&x);
        }
        // the first coordinate's maximum: ξ1 + 0.5ξ2 with ξ1 + ξ2 = 0.5 → ξ1 = 1, ξ2 = -0.5, plus 0.2
        assert!((h.upper[0] - (1.0 - 0.25 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn reduce_keeps_constrained_generators() {
        let z = ConstrainedZonotope::new(
            dvector![0.0],
            dmatrix![1.0, 2.0, 0.1, 0.2, 0.3],
            dmatrix![1.0, -1.0, 0.0, 0.0, 0.0],
            dvector![0.0],
        )
        .unwrap();
        assert_eq!(z.num_constrained(), 2);
        let r = z.reduce(1);
        assert_eq!(r.num_generators(), 3);
        assert!((r.generators() - dmatrix![1.0, 2.0, 0.6]).amax() < 1e-15);
        assert_eq!(r.con_a_prefix(), z.con_a_prefix());
    }

    #[test]
    fn minkowski_sum_orders_constrained_first() {
        let a = ConstrainedZonotope::new(dvector![0.0], dmatrix![1.0, 5.0], dmatrix![1.0, 0.0], dvector![0.5]).unwrap();
        let b = ConstrainedZonotope::new(dvector![1.0], dmatrix![2.0, 7.0], dmatrix![1.0, 0.0], dvector![-0.5]).unwrap();
        let s = a.minkowski_sum(&b).unwrap();
        assert_eq!(s.generators(), &dmatrix![1.0, 2.0, 5.0, 7.0]);
        assert_eq!(s.con_a_prefix(), &dmatrix![1.0, 0.0; 0.0, 1.0]);
        let h = s.interval_hull().unwrap();
        assert!((h.lower[0] - (1.0 + 0.5 - 1.0 - 5.0 - 7.0)).abs() < 1e-12);
    }

    #[test]
    fn cmz_cz_trivial_cases() {
        let zc = ConstrainedZonotope::new(dvector![1.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0], dmatrix![1.0, 1.0], dvector![0.5]).unwrap();
        let c = dmatrix![2.0, 1.0; 0.0, 1.0];
        let n = ConstrainedMatrixZonotope::new(c.clone(), vec![], Matrix::zeros(0, 0), Vector::zeros(0)).unwrap();
        let p = cmz_times_cz(&n, &zc).unwrap();
        let lin = zc.linear_map(&c).unwrap();
        assert_eq!(p.center(), lin.center());
        assert_eq!(p.generators(), lin.generators());
        assert_eq!(p.con_a(), lin.con_a());

        let g = dmatrix![0.0, 1.0; 1.0, 0.0];
        let n = ConstrainedMatrixZonotope::new(c.clone(), vec![g.clone()], Matrix::zeros(0, 1), Vector::zeros(0)).unwrap();
        let single = ConstrainedZonotope::from_zonotope(&Zonotope::singleton(dvector![1.0, 2.0]));
        let p = cmz_times_cz(&n, &single).unwrap();
        assert_eq!(p.center(), &(&c * dvector![1.0, 2.0]));
        assert_eq!(p.generators(), &Matrix::from_columns(&[&g * dvector![1.0, 2.0]]));
        assert!(p.is_unconstrained());
    }

    #[test]
    fn cmz_cz_pinned_coefficient_contains_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = ConstrainedMatrixZonotope::new(
            dmatrix![1.0, 0.2; -0.1, 0.9],
            vec![dmatrix![0.3, 0.0; 0.1, -0.2]],
            dmatrix![1.0],
            dvector![0.5],
        )
        .unwrap();
        let zc = ConstrainedZonotope::new(
            dvector![1.0, -1.0],
            dmatrix![0.5, 0.0, 0.2; 0.0, 0.4, 0.1],
            dmatrix![1.0, 0.0, 1.0],
            dvector![0.3],
        )
        .unwrap();
        let p = cmz_times_cz(&n, &zc).unwrap();
        let xs = zc.sample_coefficients(500, &mut rng).unwrap();
        for xi in xs {
            let x = zc.point(&xi).unwrap();
            let m = n.sample(&dvector![0.5]).unwrap();
            assert!(cz_membership(&p, &(m * x)).unwrap());
        }
    }

    #[test]
    fn unconstrained_cmz_cz_agrees_with_mz_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = Matrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let gens: Vec<Matrix> = (0..2).map(|_| Matrix::from_fn(2, 3, |_, _| rng.random_range(-0.3..0.3))).collect();
        let z = Zonotope::new(dvector![1.0, 0.0, -1.0], Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let mz = MatrixZonotope::new(c.clone(), gens.clone()).unwrap();
        let cmz = ConstrainedMatrixZonotope::new(c, gens, Matrix::zeros(0, 2), Vector::zeros(0)).unwrap();
        let a = mz_times_zonotope(&mz, &z).unwrap();
        let b = cmz_times_cz(&cmz, &ConstrainedZonotope::from_zonotope(&z)).unwrap();
        for _ in 0..200 {
            let xa = Vector::from_fn(a.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
            assert!(cz_membership(&b, &a.point(&xa).unwrap()).unwrap());
            let xb = Vector::from_fn(b.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
            assert!(a.contains(&b.point(&xb).unwrap()).unwrap());
        }
    }
}
