//! Reachable-set propagation `R̂ₖ₊₁ = M(R̂ₖ × Uₖ) ⊕ Z_w` for the three
//! model-set representations, and a Monte-Carlo containment audit.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::nmz::{nullspace_matrix_zonotope, Nmz};
use crate::setrep::{
    cmz_times_cz, cz_membership, interval_hull, mz_times_zonotope, zono_cartesian_product, zono_minkowski_sum,
    zono_reduce_girard, ConstrainedMatrixZonotope, ConstrainedZonotope, Interval, MatrixZonotope, Zonotope,
};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "MZ")]
    Mz,
    #[serde(rename = "CMZ")]
    Cmz,
    #[serde(rename = "NMZ")]
    Nmz,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mz, Method::Cmz, Method::Nmz];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mz => "MZ",
            Method::Cmz => "CMZ",
            Method::Nmz => "NMZ",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mz" => Ok(Method::Mz),
            "cmz" => Ok(Method::Cmz),
            "nmz" => Ok(Method::Nmz),
            other => Err(Error::Invalid(format!("unknown method {other:?} (expected mz, cmz or nmz)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReachConfig {
    pub horizon: usize,
    /// Generator cap `order · n` after each step.
    pub reduction_order: usize,
    /// One set per step, or a single set reused at every step.
    pub input_sets: Vec<Zonotope>,
    pub noise_set: Zonotope,
    pub initial_set: Zonotope,
}

impl ReachConfig {
    pub fn input_at(&self, k: usize) -> &Zonotope {
        if self.input_sets.len() == 1 {
            &self.input_sets[0]
        } else {
            &self.input_sets[k]
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.horizon == 0 || self.reduction_order == 0 {
            return Err(Error::Invalid("horizon and reduction order must be at least 1".into()));
        }
        if self.input_sets.len() != 1 && self.input_sets.len() != self.horizon {
            return Err(Error::Invalid(format!(
                "{} input sets for horizon {} (expected 1 or {})",
                self.input_sets.len(),
                self.horizon,
                self.horizon
            )));
        }
        check_dim("initial set", n, self.initial_set.dim())?;
        check_dim("noise set", n, self.noise_set.dim())?;
        for u in &self.input_sets {
            check_dim("input set", m, u.dim())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum ReachSet {
    Zonotope(Zonotope),
    Constrained(ConstrainedZonotope),
}

impl ReachSet {
    pub fn dim(&self) -> usize {
        match self {
            ReachSet::Zonotope(z) => z.dim(),
            ReachSet::Constrained(z) => z.dim(),
        }
    }

    pub fn num_generators(&self) -> usize {
        match self {
            ReachSet::Zonotope(z) => z.num_generators(),
            ReachSet::Constrained(z) => z.num_generators(),
        }
    }

    pub fn interval_hull(&self) -> Result<Interval> {
        match self {
            ReachSet::Zonotope(z) => Ok(interval_hull(z)),
            ReachSet::Constrained(z) => z.interval_hull(),
        }
    }

    pub fn contains(&self, x: &Vector) -> Result<bool> {
        match self {
            ReachSet::Zonotope(z) => z.contains(x),
            ReachSet::Constrained(z) => cz_membership(z, x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub method: Method,
    /// `R̂₁ … R̂_N`.
    pub sets: Vec<ReachSet>,
    /// Seconds of set arithmetic per step.
    pub wall_times: Vec<f64>,
}

impl ReachResult {
    pub fn total_seconds(&self) -> f64 {
        self.wall_times.iter().sum()
    }
}

fn check_model_shape(rows: usize, cols: usize, cfg: &ReachConfig) -> Result<(usize, usize)> {
    let n = rows;
    let m = cols
        .checked_sub(n)
        .ok_or(Error::DimensionMismatch { op: "model set columns (n + m)", expected: n, got: cols })?;
    cfg.validate(n, m)?;
    Ok((n, m))
}

/// Unconstrained propagation with Girard reduction after each step.
pub fn propagate_mz(m: &MatrixZonotope, cfg: &ReachConfig) -> Result<ReachResult> {
    propagate_matrix_zonotope(m, cfg, Method::Mz)
}

fn propagate_matrix_zonotope(m: &MatrixZonotope, cfg: &ReachConfig, method: Method) -> Result<ReachResult> {
    check_model_shape(m.nrows(), m.ncols(), cfg)?;
    let mut r = cfg.initial_set.clone();
    let mut sets = Vec::with_capacity(cfg.horizon);
    let mut wall_times = Vec::with_capacity(cfg.horizon);
    for k in 0..cfg.horizon {
        let start = Instant::now();
        let xu = zono_cartesian_product(&r, cfg.input_at(k));
        let next = zono_minkowski_sum(&mz_times_zonotope(m, &xu)?, &cfg.noise_set)?;
        r = zono_reduce_girard(&next, cfg.reduction_order);
        wall_times.push(start.elapsed().as_secs_f64());
        sets.push(ReachSet::Zonotope(r.clone()));
    }
    Ok(ReachResult { method, sets, wall_times })
}

/// Propagation carrying the model-set constraints; reduction only boxes the
/// unconstrained tail of each constrained zonotope.
pub fn propagate_cmz(n_sigma: &ConstrainedMatrixZonotope, cfg: &ReachConfig) -> Result<ReachResult> {
    check_model_shape(n_sigma.nrows(), n_sigma.ncols(), cfg)?;
    let mut r = ConstrainedZonotope::from_zonotope(&cfg.initial_set);
    let mut sets = Vec::with_capacity(cfg.horizon);
    let mut wall_times = Vec::with_capacity(cfg.horizon);
    for k in 0..cfg.horizon {
        let start = Instant::now();
        let xu = r.cartesian_product_zonotope(cfg.input_at(k));
        let next = cmz_times_cz(n_sigma, &xu)?.minkowski_sum_zonotope(&cfg.noise_set)?;
        r = next.reduce(cfg.reduction_order);
        wall_times.push(start.elapsed().as_secs_f64());
        sets.push(ReachSet::Constrained(r.clone()));
    }
    Ok(ReachResult { method: Method::Cmz, sets, wall_times })
}

#[derive(Debug, Clone)]
pub struct NullspaceReach {
    pub result: ReachResult,
    pub nmz: Nmz,
    /// Seconds spent building the NMZ (projection, interval LPs, lift).
    pub setup_seconds: f64,
}

/// Builds the NMZ of `n_sigma` and propagates with it like an ordinary
/// matrix zonotope.
pub fn nullspace_reachability(n_sigma: &ConstrainedMatrixZonotope, cfg: &ReachConfig) -> Result<NullspaceReach> {
    check_model_shape(n_sigma.nrows(), n_sigma.ncols(), cfg)?;
    let start = Instant::now();
    let nmz = nullspace_matrix_zonotope(n_sigma)?;
    let setup_seconds = start.elapsed().as_secs_f64();
    let result = propagate_matrix_zonotope(&nmz.model, cfg, Method::Nmz)?;
    Ok(NullspaceReach { result, nmz, setup_seconds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepAudit {
    pub step: usize,
    pub contained: usize,
    pub total: usize,
    pub fraction: f64,
    pub hull_widths: Vec<f64>,
    pub hull_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAudit {
    pub method: Method,
    pub steps: Vec<StepAudit>,
}

impl MethodAudit {
    pub fn all_contained(&self) -> bool {
        self.steps.iter().all(|s| s.contained == s.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub num_trajectories: usize,
    pub methods: Vec<MethodAudit>,
}

impl AuditReport {
    pub fn all_contained(&self) -> bool {
        self.methods.iter().all(MethodAudit::all_contained)
    }
}

/// Checks `xᵢ(k) ∈ R̂ₖ` for every trajectory state sequence
/// `[x(0), x(1), …]` and every step `k ≥ 1` that both cover.
pub fn containment_audit(results: &[ReachResult], trajectories: &[Vec<Vector>]) -> Result<AuditReport> {
    let mut methods = Vec::with_capacity(results.len());
    for res in results {
        let mut steps = Vec::with_capacity(res.sets.len());
        for (idx, set) in res.sets.iter().enumerate() {
            let k = idx + 1;
            let mut contained = 0;
            let mut total = 0;
            for tr in trajectories.iter().filter(|t| t.len() > k) {
                total += 1;
                if set.contains(&tr[k])? {
                    contained += 1;
                }
            }
            let hull = set.interval_hull()?;
            steps.push(StepAudit {
                step: k,
                contained,
                total,
                fraction: if total == 0 { 1.0 } else { contained as f64 / total as f64 },
                hull_widths: hull.widths().iter().copied().collect(),
                hull_volume: hull.volume(),
            });
        }
        methods.push(MethodAudit { method: res.method, steps });
    }
    Ok(AuditReport { num_trajectories: trajectories.len(), methods })
}
