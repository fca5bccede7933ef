//! Nullspace matrix zonotopes.
//!
//! The feasible coefficients `Ξ = {ξ : Âξ = b̂, ‖ξ‖∞ ≤ 1}` of a CMZ are
//! parametrized as `ξ = Nx + ξ_p` with `ξ_p = Â†b̂` and `N` a basis of
//! `ker Â` in reduced echelon form: `N` restricted to a set of pivot
//! coefficients is the identity, so `x` is read off those coefficients. The box turns into `Qx ≤ s` in `x`-space, which is
//! boxed coordinate-wise by LPs and mapped back. The result `Z_ξ ⊇ Ξ` has
//! `ν = nullity(Â)` generators, and substituting it into the CMZ gives an
//! ordinary matrix zonotope with `ν` generators containing the CMZ.

use crate::error::{check_dim, Error, Result};
use crate::identify::{noise_constraint_system, NoiseModel, TrajectoryData};
use crate::lp::{LpStatus, Simplex};
use crate::setrep::{ConstrainedMatrixZonotope, Interval, MatrixZonotope, Zonotope};
use crate::spectral::{nullspace_basis, pseudoinverse, rank_of, DEFAULT_RANK_TOL};
use crate::{Matrix, Vector};

/// `P' = {x : Qx ≤ s}` together with the map back to coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPolytope {
    pub q: Matrix,
    pub s: Vector,
    pub xi_p: Vector,
    pub null_basis: Matrix,
    /// Coefficients where `null_basis` is the identity.
    pub pivots: Vec<usize>,
}

impl ProjectedPolytope {
    /// `ν`, the dimension of `x`.
    pub fn nullity(&self) -> usize {
        self.null_basis.ncols()
    }

    pub fn num_coefficients(&self) -> usize {
        self.xi_p.len()
    }

    /// `ξ = Nx + ξ_p`.
    pub fn lift(&self, x: &Vector) -> Result<Vector> {
        check_dim("projected polytope point", self.nullity(), x.len())?;
        Ok(&self.null_basis * x + &self.xi_p)
    }

    /// `x = (ξ − ξ_p)` at the pivots; exact inverse of [`lift`](Self::lift)
    /// on the affine hull of `Ξ`.
    pub fn project(&self, xi: &Vector) -> Result<Vector> {
        check_dim("coefficient vector", self.num_coefficients(), xi.len())?;
        Ok(Vector::from_iterator(self.pivots.len(), self.pivots.iter().map(|&k| xi[k] - self.xi_p[k])))
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.nullity() && (&self.q * x - &self.s).iter().all(|v| *v <= tol)
    }
}

/// Everything the NMZ was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NmzProvenance {
    pub coeff_zonotope: Zonotope,
    pub projected: ProjectedPolytope,
    pub interval: Interval,
}

impl NmzProvenance {
    /// `η` with `ξ = c_ξ + G_ξη` for `ξ` on the affine hull of `Ξ`.
    /// `G_ξ = N diag(r)`, so `η` is the scaled projection; coordinates with
    /// zero radius get `η = 0`.
    pub fn eta_for(&self, xi: &Vector) -> Result<Vector> {
        let x = self.projected.project(xi)?;
        let c = self.interval.center();
        let r = self.interval.radius();
        Ok(Vector::from_fn(x.len(), |j, _| if r[j] > 0.0 { (x[j] - c[j]) / r[j] } else { 0.0 }))
    }
}

/// The NMZ and its provenance.
#[derive(Debug, Clone)]
pub struct Nmz {
    pub model: MatrixZonotope,
    pub provenance: NmzProvenance,
}

pub fn project_coefficient_polytope(con_a: &Matrix, con_b: &Vector) -> Result<ProjectedPolytope> {
    check_dim("constraint rhs", con_a.nrows(), con_b.len())?;
    let gamma = con_a.ncols();
    let (null_basis, xi_p) = if con_a.nrows() == 0 {
        (Matrix::identity(gamma, gamma), Vector::zeros(gamma))
    } else {
        let xi_p = pseudoinverse(con_a, DEFAULT_RANK_TOL)? * con_b;
        let resid = (con_a * &xi_p - con_b).amax();
        if resid > 1e-8 * con_b.amax().max(1.0) {
            return Err(Error::EmptyCoefficientSet);
        }
        (nullspace_basis(con_a, DEFAULT_RANK_TOL)?, xi_p)
    };
    let (null_basis, pivots) = echelon_basis(&null_basis);
    let mut q = Matrix::zeros(2 * gamma, null_basis.ncols());
    q.rows_mut(0, gamma).copy_from(&null_basis);
    q.rows_mut(gamma, gamma).copy_from(&(-&null_basis));
    let s = Vector::from_fn(2 * gamma, |i, _| if i < gamma { 1.0 - xi_p[i] } else { 1.0 + xi_p[i - gamma] });
    Ok(ProjectedPolytope { q, s, xi_p, null_basis, pivots })
}

/// Same column space as `n` (full column rank), in reduced echelon form
/// with complete pivoting. When `ker Â` splits into pieces supported on
/// disjoint coefficient groups (one per noise generator for a diagonal noise
/// zonotope), every basis vector stays within one group; an orthonormal SVD
/// basis mixes them and inflates the box in `x`-space.
fn echelon_basis(n: &Matrix) -> (Matrix, Vec<usize>) {
    let (gamma, nu) = n.shape();
    let mut e = n.transpose();
    let mut pivots = Vec::with_capacity(nu);
    let mut used = vec![false; gamma];
    for row in 0..nu {
        let mut best = (row, 0, 0.0);
        for i in row..nu {
            for k in (0..gamma).filter(|k| !used[*k]) {
                if e[(i, k)].abs() > best.2 {
                    best = (i, k, e[(i, k)].abs());
                }
            }
        }
        let (i, k, _) = best;
        e.swap_rows(row, i);
        let inv = 1.0 / e[(row, k)];
        e.row_mut(row).scale_mut(inv);
        e[(row, k)] = 1.0;
        for other in (0..nu).filter(|o| *o != row) {
            let f = e[(other, k)];
            if f != 0.0 {
                for c in 0..gamma {
                    let v = e[(row, c)];
                    e[(other, c)] -= f * v;
                }
                e[(other, k)] = 0.0;
            }
        }
        used[k] = true;
        pivots.push(k);
    }
    // entries that are rounding noise left over from the elimination
    let scale = e.amax().max(1.0);
    e.apply(|v| {
        if v.abs() < 1e-14 * scale {
            *v = 0.0
        }
    });
    (e.transpose(), pivots)
}

/// Tight interval hull of `P'` by `2ν` warm-started LPs.
///
/// The LP is written as `y − Nx = 0` with `x` free and
/// `y ∈ [−1 − ξ_p, 1 − ξ_p]`, which is `Qx ≤ s` with the slack rows folded
/// into bounds.
pub fn interval_overapprox(p: &ProjectedPolytope) -> Result<Interval> {
    let nu = p.nullity();
    let gamma = p.num_coefficients();
    if nu == 0 {
        if p.xi_p.iter().any(|v| v.abs() > 1.0 + 1e-9) {
            return Err(Error::EmptyCoefficientSet);
        }
        return Interval::new(Vector::zeros(0), Vector::zeros(0));
    }
    let mut a = Matrix::zeros(gamma, nu + gamma);
    a.columns_mut(0, nu).copy_from(&(-&p.null_basis));
    a.columns_mut(nu, gamma).fill_with_identity();
    let mut lower = vec![f64::NEG_INFINITY; nu];
    let mut upper = vec![f64::INFINITY; nu];
    lower.extend(p.xi_p.iter().map(|v| -1.0 - v));
    upper.extend(p.xi_p.iter().map(|v| 1.0 - v));
    let mut lp = Simplex::new(&a, &vec![0.0; gamma], &lower, &upper).map_err(|s| match s {
        LpStatus::Infeasible => Error::EmptyCoefficientSet,
        other => Error::Lp(format!("interval hull of projected polytope: {other:?}")),
    })?;
    let mut lo = Vector::zeros(nu);
    let mut hi = Vector::zeros(nu);
    let mut c = vec![0.0; nu + gamma];
    for j in 0..nu {
        for (sign, out) in [(1.0, &mut lo), (-1.0, &mut hi)] {
            c[j] = sign;
            match lp.minimize(&c) {
                LpStatus::Optimal => out[j] = lp.x()[j],
                // a box-derived polytope is bounded
                other => return Err(Error::Lp(format!("interval hull LP for coordinate {j}: {other:?}"))),
            }
        }
        c[j] = 0.0;
    }
    for j in 0..nu {
        if lo[j] > hi[j] {
            let m = 0.5 * (lo[j] + hi[j]);
            lo[j] = m;
            hi[j] = m;
        }
    }
    Interval::new(lo, hi)
}

/// `Z_ξ = ⟨ξ_p + N c_I, N diag(r_I)⟩`.
pub fn lift_coefficient_zonotope(p: &ProjectedPolytope, interval: &Interval) -> Result<Zonotope> {
    check_dim("interval dimension", p.nullity(), interval.dim())?;
    let center = &p.xi_p + &p.null_basis * interval.center();
    let r = interval.radius();
    let mut g = p.null_basis.clone();
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col *= r[j];
    }
    Zonotope::new(center, g)
}

/// `C_M = C_N + Σᵢ c_ξ⁽ⁱ⁾G_N⁽ⁱ⁾`, `G_M⁽ʲ⁾ = Σᵢ (G_ξ)ᵢⱼ G_N⁽ⁱ⁾`.
pub fn build_nmz(n: &ConstrainedMatrixZonotope, z_xi: &Zonotope) -> Result<MatrixZonotope> {
    check_dim("coefficient zonotope dimension", n.num_generators(), z_xi.dim())?;
    let (rows, cols) = (n.nrows(), n.ncols());
    let unvec = |v: &[f64]| Matrix::from_column_slice(rows, cols, v);
    if n.num_generators() == 0 {
        return MatrixZonotope::new(n.center().clone(), vec![Matrix::zeros(rows, cols); z_xi.num_generators()]);
    }
    let vg = Matrix::from_fn(rows * cols, n.num_generators(), |k, i| n.generators()[i].as_slice()[k]);
    let shift = &vg * z_xi.center();
    let center = n.center() + unvec(shift.as_slice());
    let mixed = &vg * z_xi.generators();
    let gens = mixed.column_iter().map(|c| unvec(c.as_slice())).collect();
    MatrixZonotope::new(center, gens)
}

/// Projection, interval hull, lift and assembly in one call.
pub fn nullspace_matrix_zonotope(n: &ConstrainedMatrixZonotope) -> Result<Nmz> {
    let projected = project_coefficient_polytope(n.con_a(), n.con_b())?;
    let interval = interval_overapprox(&projected)?;
    let coeff_zonotope = lift_coefficient_zonotope(&projected, &interval)?;
    let model = build_nmz(n, &coeff_zonotope)?;
    Ok(Nmz { model, provenance: NmzProvenance { coeff_zonotope, projected, interval } })
}

/// `nullity(Â) = γ_w T − (T − rank D)·rank G_w`.
pub fn predict_nullity(t: usize, n: usize, m: usize, rank_d: usize, gamma_w: usize, rank_gw: usize) -> Result<usize> {
    if rank_d > (n + m).min(t) || rank_gw > gamma_w.min(n) {
        return Err(Error::InconsistentRanks(format!(
            "rank D = {rank_d} with T = {t}, n + m = {}; rank G_w = {rank_gw} with {gamma_w} generators in dimension {n}",
            n + m
        )));
    }
    (gamma_w * t).checked_sub((t - rank_d) * rank_gw).ok_or_else(|| Error::InconsistentRanks("negative nullity".into()))
}

/// Numeric vs predicted rank and nullity of the noise constraint matrix.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StructuralReport {
    pub num_coefficients: usize,
    pub rank_d: usize,
    pub rank_gw: usize,
    pub numeric_rank: usize,
    pub predicted_rank: usize,
    pub numeric_nullity: usize,
    pub predicted_nullity: usize,
    pub rank_agrees: bool,
    pub nullity_agrees: bool,
}

pub fn structural_rank_check(noise: &NoiseModel, data: &TrajectoryData) -> Result<StructuralReport> {
    let (a, _) = noise_constraint_system(noise, data)?;
    let t = data.num_samples();
    let (n, m) = (data.state_dim(), data.input_dim());
    let rank_d = rank_of(&data.regressor(), DEFAULT_RANK_TOL);
    let gw = noise.zonotope.generators();
    let rank_gw = rank_of(gw, DEFAULT_RANK_TOL);
    let gamma = gw.ncols() * t;
    let numeric_rank = if a.nrows() == 0 { 0 } else { rank_of(&a, DEFAULT_RANK_TOL) };
    let predicted_rank = (t - rank_d) * rank_gw;
    let numeric_nullity = gamma - numeric_rank;
    let predicted_nullity = predict_nullity(t, n, m, rank_d, gw.ncols(), rank_gw)?;
    Ok(StructuralReport {
        num_coefficients: gamma,
        rank_d,
        rank_gw,
        numeric_rank,
        predicted_rank,
        numeric_nullity,
        predicted_nullity,
        rank_agrees: numeric_rank == predicted_rank,
        nullity_agrees: numeric_nullity == predicted_nullity,
    })
}
