//! Worst-case sin-Θ bounds for model sets.
//!
//! Every bound here starts from the rank-`r` singular bases `U`, `V` of a
//! nominal matrix `C`. For a perturbation `E(ξ) = Σ ξᵢ Gᵢ`,
//! `‖Uᵀ E V⊥‖ ≤ Σ|ξᵢ|μᵢ` and `σ_min(UᵀĈV) ≥ σ_r(C) − Σ|ξᵢ|γᵢ`, so with
//! `rank C = rows` the right-subspace rotation is at most
//! `f(ξ) = Σ|ξᵢ|μᵢ / (σ_r − Σ|ξᵢ|γᵢ)`. Over a box the maximum sits at a
//! vertex; over a constrained coefficient set it is a linear-fractional
//! program.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lp::{charnes_cooper_max_ratio_with, check_denominator_positive, FractionalOptions};
use crate::nmz::NmzProvenance;
use crate::setrep::{ConstrainedMatrixZonotope, MatrixZonotope};
use crate::spectral::{spectral_norm, svd_full, SvdFactors, DEFAULT_RANK_TOL};
use crate::{Matrix, Vector};

/// Leading and trailing singular bases of a nominal matrix at rank `r`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub u: Matrix,
    pub u_perp: Matrix,
    pub v: Matrix,
    pub v_perp: Matrix,
    /// `σ_r`.
    pub sigma_min: f64,
}

impl SubspaceBasis {
    /// `rank = None` uses the numerical rank of `c`.
    pub fn of(c: &Matrix, rank: Option<usize>) -> Result<Self> {
        let f = svd_full(c)?;
        let r = match rank {
            Some(r) if r == 0 || r > c.nrows().min(c.ncols()) => {
                return Err(Error::Invalid(format!("rank {r} outside 1..={}", c.nrows().min(c.ncols()))))
            }
            Some(r) => r,
            None => f.rank(DEFAULT_RANK_TOL),
        };
        Ok(Self::from_factors(&f, r))
    }

    fn from_factors(f: &SvdFactors, r: usize) -> Self {
        SubspaceBasis {
            u: f.u_lead(r),
            u_perp: f.u_trail(r),
            v: f.v_lead(r),
            v_perp: f.v_trail(r),
            sigma_min: if r == 0 { 0.0 } else { f.sigma(r - 1) },
        }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `U⊥` is empty, so the left subspace cannot rotate and the bounds in
    /// this module are valid.
    pub fn full_row_rank(&self) -> bool {
        self.u_perp.ncols() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaiZhangReport {
    pub alpha: f64,
    pub beta: f64,
    pub z12: f64,
    pub z21: f64,
    pub right_bound: f64,
    pub left_bound: f64,
    pub condition_ok: bool,
}

/// Cai–Zhang bounds for the pair `(C, Ĉ)` using the rank-`r` bases of `C`.
pub fn cai_zhang_pair(c: &Matrix, c_hat: &Matrix, rank: usize) -> Result<CaiZhangReport> {
    check_dim("perturbed matrix rows", c.nrows(), c_hat.nrows())?;
    check_dim("perturbed matrix cols", c.ncols(), c_hat.ncols())?;
    let b = SubspaceBasis::of(c, Some(rank))?;
    let z = c_hat - c;
    let alpha = sigma_min(&(b.u.transpose() * c_hat * &b.v));
    let beta = spectral_norm(&(b.u_perp.transpose() * c_hat * &b.v_perp));
    let z12 = spectral_norm(&(b.u.transpose() * &z * &b.v_perp));
    let z21 = spectral_norm(&(b.u_perp.transpose() * &z * &b.v));
    let denom = alpha * alpha - beta * beta - z12.powi(2).min(z21.powi(2));
    let condition_ok = denom > 0.0;
    let (right_bound, left_bound) = if condition_ok {
        (clamp01((alpha * z12 + beta * z21) / denom), clamp01((alpha * z21 + beta * z12) / denom))
    } else {
        (1.0, 1.0)
    };
    Ok(CaiZhangReport { alpha, beta, z12, z21, right_bound, left_bound, condition_ok })
}

/// `‖UᵀZV⊥‖ / σ_min(Uᵀ(C+Z)V)` for full-row-rank `C`, clamped to 1.
pub fn full_row_rank_bound(c: &Matrix, z: &Matrix) -> Result<f64> {
    check_dim("perturbation rows", c.nrows(), z.nrows())?;
    check_dim("perturbation cols", c.ncols(), z.ncols())?;
    let b = SubspaceBasis::of(c, None)?;
    if !b.full_row_rank() {
        return Err(Error::RankDeficient { rank: b.rank(), required: c.nrows() });
    }
    let alpha = sigma_min(&(b.u.transpose() * (c + z) * &b.v));
    let z12 = spectral_norm(&(b.u.transpose() * z * &b.v_perp));
    Ok(if alpha > 0.0 { clamp01(z12 / alpha) } else { 1.0 })
}

fn sigma_min(m: &Matrix) -> f64 {
    crate::spectral::singular_values(m).iter().copied().fold(f64::INFINITY, f64::min)
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MzBoundComponents {
    /// `μᵢ = ‖UᵀGᵢV⊥‖`.
    pub mu: Vec<f64>,
    /// `γᵢ = ‖Gᵢ‖`.
    pub gamma: Vec<f64>,
    pub sigma_min_c: f64,
    /// `κ = ‖HV⊥‖`, for the factored form.
    pub kappa: Option<f64>,
    /// `‖UᵀG_wᵢ‖`, for the factored form.
    pub mu_w: Option<Vec<f64>>,
    pub rank: usize,
    pub full_row_rank: bool,
}

impl MzBoundComponents {
    pub fn new(center: &Matrix, generators: &[Matrix], rank: Option<usize>) -> Result<Self> {
        let b = SubspaceBasis::of(center, rank)?;
        Ok(Self::with_basis(&b, generators))
    }

    fn with_basis(b: &SubspaceBasis, generators: &[Matrix]) -> Self {
        let ut = b.u.transpose();
        MzBoundComponents {
            mu: generators.iter().map(|g| spectral_norm(&(&ut * g * &b.v_perp))).collect(),
            gamma: generators.iter().map(spectral_norm).collect(),
            sigma_min_c: b.sigma_min,
            kappa: None,
            mu_w: None,
            rank: b.rank(),
            full_row_rank: b.full_row_rank(),
        }
    }

    /// `f(ξ)`; `+∞` when the denominator is not positive.
    pub fn objective(&self, xi: &Vector) -> f64 {
        let num: f64 = xi.iter().zip(&self.mu).map(|(x, m)| x.abs() * m).sum();
        let den = self.sigma_min_c - xi.iter().zip(&self.gamma).map(|(x, g)| x.abs() * g).sum::<f64>();
        if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    }
}

/// A clamped bound together with what it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MzBound {
    pub bound: f64,
    /// The denominator `σ_r − Σγ` is not positive; `bound` is 1.
    pub degenerate: bool,
    pub components: MzBoundComponents,
}

impl MzBound {
    /// The bound is a proven sin-Θ bound: full row rank and a positive
    /// denominator.
    pub fn valid(&self) -> bool {
        self.components.full_row_rank && !self.degenerate
    }
}

fn vertex_value(num: f64, sigma: f64, gamma_sum: f64) -> (f64, bool) {
    let den = sigma - gamma_sum;
    if den > 0.0 {
        (clamp01(num / den), false)
    } else {
        (1.0, true)
    }
}

/// `Σμ / (σ_min − Σγ) ∧ 1`.
pub fn mz_vertex_bound(m: &MatrixZonotope, rank: Option<usize>) -> Result<MzBound> {
    let components = MzBoundComponents::new(m.center(), m.generators(), rank)?;
    let (bound, degenerate) =
        vertex_value(components.mu.iter().sum(), components.sigma_min_c, components.gamma.iter().sum());
    Ok(MzBound { bound, degenerate, components })
}

/// Checks `Gᵢ = ±G_wᵢH` to `1e−8` relative to `‖Gᵢ‖`.
pub fn check_generator_structure(generators: &[Matrix], factors: &[Matrix], h: &Matrix) -> Result<()> {
    check_dim("generator factors", generators.len(), factors.len())?;
    for (i, (g, f)) in generators.iter().zip(factors).enumerate() {
        let gh = f * h;
        let scale = g.amax().max(gh.amax()).max(1.0);
        let residual = (g - &gh).amax().min((g + &gh).amax());
        if residual > 1e-8 * scale {
            return Err(Error::StructureMismatch { index: i, residual });
        }
    }
    Ok(())
}

/// Factored form `κ Σμ_w / (σ_min − Σγ)` for generators `G_wᵢH`.
pub fn mz_global_bound(m: &MatrixZonotope, factors: &[Matrix], h: &Matrix, rank: Option<usize>) -> Result<MzBound> {
    check_generator_structure(m.generators(), factors, h)?;
    let b = SubspaceBasis::of(m.center(), rank)?;
    Ok(global_from_basis(&b, m.generators(), factors, h))
}

fn global_from_basis(b: &SubspaceBasis, generators: &[Matrix], factors: &[Matrix], h: &Matrix) -> MzBound {
    let mut components = MzBoundComponents::with_basis(b, generators);
    let kappa = spectral_norm(&(h * &b.v_perp));
    let ut = b.u.transpose();
    let mu_w: Vec<f64> = factors.iter().map(|f| spectral_norm(&(&ut * f))).collect();
    let (bound, degenerate) = vertex_value(kappa * mu_w.iter().sum::<f64>(), b.sigma_min, components.gamma.iter().sum());
    components.kappa = Some(kappa);
    components.mu_w = Some(mu_w);
    MzBound { bound, degenerate, components }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmzBound {
    pub bound: f64,
    /// Maximizer of `f` over the feasible coefficients, when computed.
    pub xi_max: Option<Vec<f64>>,
    /// No feasible `ξ` makes `σ_min − γᵀ|ξ|` non-positive.
    pub denominator_ok: bool,
    /// The fractional program was solved to optimality (otherwise `bound` is
    /// a proven upper bound).
    pub exact: bool,
    pub components: MzBoundComponents,
}

impl CmzBound {
    pub fn valid(&self) -> bool {
        self.components.full_row_rank && self.denominator_ok
    }
}

/// Worst case of `f` over `Ξ`, via the sign-branching fractional
/// search. A failed denominator check reports the trivial bound 1.
pub fn cmz_worst_case_bound(n: &ConstrainedMatrixZonotope, rank: Option<usize>) -> Result<CmzBound> {
    cmz_worst_case_bound_with(n, rank, &FractionalOptions::default())
}

pub fn cmz_worst_case_bound_with(
    n: &ConstrainedMatrixZonotope,
    rank: Option<usize>,
    opts: &FractionalOptions,
) -> Result<CmzBound> {
    let components = MzBoundComponents::new(n.center(), n.generators(), rank)?;
    let mu = Vector::from_column_slice(&components.mu);
    let gamma = Vector::from_column_slice(&components.gamma);
    let sigma = components.sigma_min_c;
    // Feasibility of Ξ is part of the CMZ invariant; re-checked here because
    // the fractional solver reports it as an LP failure otherwise.
    n.coefficient_bounds()?;
    if !(sigma > 0.0) || !check_denominator_positive(&gamma, sigma, n.con_a(), n.con_b())? {
        return Ok(CmzBound { bound: 1.0, xi_max: None, denominator_ok: false, exact: true, components });
    }
    // Anything at or above 1 clamps to 1, so the search may stop there.
    let opts = FractionalOptions { stop_at: Some(opts.stop_at.unwrap_or(1.0).min(1.0)), ..*opts };
    let sol = charnes_cooper_max_ratio_with(&mu, &gamma, sigma, n.con_a(), n.con_b(), &opts)?;
    let reached_one = sol.ratio >= 1.0;
    Ok(CmzBound {
        bound: clamp01(sol.ratio),
        xi_max: Some(sol.xi_max.iter().copied().collect()),
        denominator_ok: true,
        exact: sol.exact || reached_one,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmzBound {
    /// Smallest available form.
    pub bound: f64,
    pub vertex: MzBound,
    /// Factored form with `G̃_wʲ = Σᵢ(G_ξ)ᵢⱼ G_wᵢ`.
    pub global: Option<MzBound>,
}

impl NmzBound {
    pub fn valid(&self) -> bool {
        self.vertex.valid()
    }
}

/// Vertex bound for the NMZ `P`, plus the factored form when the noise
/// factors `G_wᵢ` (one per CMZ generator) and `H` are supplied.
pub fn nmz_bound(
    p: &MatrixZonotope,
    provenance: &NmzProvenance,
    factors: Option<(&[Matrix], &Matrix)>,
    rank: Option<usize>,
) -> Result<NmzBound> {
    let b = SubspaceBasis::of(p.center(), rank)?;
    let components = MzBoundComponents::with_basis(&b, p.generators());
    let (v, degenerate) = vertex_value(components.mu.iter().sum(), b.sigma_min, components.gamma.iter().sum());
    let vertex = MzBound { bound: v, degenerate, components };
    let global = match factors {
        None => None,
        Some((fs, h)) => {
            let g_xi = provenance.coeff_zonotope.generators();
            check_dim("noise factors", g_xi.nrows(), fs.len())?;
            let (r, c) = fs.first().map_or((0, 0), |f| f.shape());
            let mixed: Vec<Matrix> = (0..g_xi.ncols())
                .map(|j| {
                    let mut acc = Matrix::zeros(r, c);
                    for (i, f) in fs.iter().enumerate() {
                        let w = g_xi[(i, j)];
                        if w != 0.0 {
                            acc += f * w;
                        }
                    }
                    acc
                })
                .collect();
            check_generator_structure(p.generators(), &mixed, h)?;
            Some(global_from_basis(&b, p.generators(), &mixed, h))
        }
    };
    let bound = global.as_ref().map_or(vertex.bound, |g| g.bound.min(vertex.bound));
    Ok(NmzBound { bound, vertex, global })
}
