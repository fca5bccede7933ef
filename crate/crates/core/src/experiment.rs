//! Config-driven experiments and their on-disk artifacts.
//!
//! A JSON [`ExperimentConfig`] fixes the true system, the sets and the seeds;
//! [`simulate`] turns it into a [`TrajectoryFile`]; [`run_reach`],
//! [`run_bounds`] and [`run_audit_nmz`] consume both and produce the
//! artifacts `hulls.csv`, `timings.json`, `containment.json`, `bounds.csv`
//! and `audit.json`. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{cmz_worst_case_bound, mz_global_bound, mz_vertex_bound, nmz_bound};
use crate::error::{Error, Result};
use crate::identify::{
    build_cmz_model_set, build_data_matrices, build_mz_model_set, build_noise_matrix_zonotope, data_pseudoinverse,
    simulate_lti, NoiseModel, Trajectory, TrajectoryData,
};
use crate::nmz::{nullspace_matrix_zonotope, StructuralReport};
use crate::reach::{
    containment_audit, nullspace_reachability, propagate_cmz, propagate_mz, AuditReport, Method, ReachConfig,
    ReachResult,
};
use crate::setrep::{sample_coefficient_set, Zonotope};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    pub m: usize,
    /// Rows of `A`.
    pub a: Vec<Vec<f64>>,
    /// Rows of `B`.
    pub b: Vec<Vec<f64>>,
}

impl SystemSpec {
    pub fn a_matrix(&self) -> Result<Matrix> {
        rows_to_matrix("system.a", &self.a, self.n, self.n)
    }

    pub fn b_matrix(&self) -> Result<Matrix> {
        rows_to_matrix("system.b", &self.b, self.n, self.m)
    }

    /// `[A B]`.
    pub fn ab(&self) -> Result<Matrix> {
        let mut ab = Matrix::zeros(self.n, self.n + self.m);
        ab.columns_mut(0, self.n).copy_from(&self.a_matrix()?);
        ab.columns_mut(self.n, self.m).copy_from(&self.b_matrix()?);
        Ok(ab)
    }
}

fn rows_to_matrix(what: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<Matrix> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Invalid(format!("{what} must be {r} rows of {c} numbers")));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// A zonotope as a center and a list of generator vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonotopeSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

impl ZonotopeSpec {
    pub fn to_zonotope(&self, what: &str) -> Result<Zonotope> {
        let n = self.center.len();
        if let Some(g) = self.generators.iter().find(|g| g.len() != n) {
            return Err(Error::Invalid(format!("{what}: generator of length {} in dimension {n}", g.len())));
        }
        let g = Matrix::from_fn(n, self.generators.len(), |i, j| self.generators[j][i]);
        Zonotope::new(Vector::from_column_slice(&self.center), g)
    }

    pub fn from_zonotope(z: &Zonotope) -> Self {
        ZonotopeSpec {
            center: z.center().iter().copied().collect(),
            generators: z.generators().column_iter().map(|c| c.iter().copied().collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub num_trajectories: usize,
    pub steps_per_trajectory: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachSpec {
    pub horizon: usize,
    pub reduction_order: usize,
    /// Monte-Carlo trajectories checked against the reachable sets. At high
    /// reduction orders the CMZ membership LPs dominate the run time.
    #[serde(default = "default_audit_trajectories")]
    pub audit_trajectories: usize,
}

fn default_audit_trajectories() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub scales: Vec<f64>,
    /// Subspace rank; the numerical rank of each center when absent.
    #[serde(default)]
    pub rank_r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub initial_set: ZonotopeSpec,
    pub input_set: ZonotopeSpec,
    pub noise_set: ZonotopeSpec,
    pub data: DataSpec,
    pub reach: ReachSpec,
    pub bounds: BoundsSpec,
    pub outputs: OutputSpec,
}

/// Parsed sets of a validated config.
#[derive(Debug, Clone)]
pub struct ExperimentSets {
    pub a: Matrix,
    pub b: Matrix,
    pub initial: Zonotope,
    pub input: Zonotope,
    pub noise: Zonotope,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        self.sets().map(|_| ())
    }

    pub fn sets(&self) -> Result<ExperimentSets> {
        let (n, m) = (self.system.n, self.system.m);
        if n == 0 || m == 0 {
            return Err(Error::Invalid("system.n and system.m must be positive".into()));
        }
        let sets = ExperimentSets {
            a: self.system.a_matrix()?,
            b: self.system.b_matrix()?,
            initial: self.initial_set.to_zonotope("initial_set")?,
            input: self.input_set.to_zonotope("input_set")?,
            noise: self.noise_set.to_zonotope("noise_set")?,
        };
        for (what, dim, want) in
            [("initial_set", sets.initial.dim(), n), ("input_set", sets.input.dim(), m), ("noise_set", sets.noise.dim(), n)]
        {
            if dim != want {
                return Err(Error::Invalid(format!("{what} has dimension {dim}, expected {want}")));
            }
        }
        if self.data.num_trajectories == 0 || self.data.steps_per_trajectory == 0 {
            return Err(Error::Invalid("data needs at least one trajectory of at least one step".into()));
        }
        if self.reach.horizon == 0 || self.reach.reduction_order == 0 {
            return Err(Error::Invalid("reach.horizon and reach.reduction_order must be positive".into()));
        }
        if self.bounds.scales.is_empty() || self.bounds.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Invalid("bounds.scales must be positive finite numbers".into()));
        }
        if self.bounds.scales.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid("bounds.scales must be sorted ascending".into()));
        }
        Ok(sets)
    }

    /// The five-dimensional benchmark: two damped rotations and a decaying
    /// mode driven by one input, `X₀ = ⟨1, 0.1 I⟩`, `U = ⟨10, 0.25⟩`,
    /// `W = ⟨0, diag(1, 1.1, 1.3, 1, 1.5)⟩`, ten trajectories of three steps.
    pub fn five_dim_benchmark() -> Self {
        let a = vec![
            vec![0.9323, -0.189, 0.0, 0.0, 0.0],
            vec![0.189, 0.9323, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.8596, 0.04302, 0.0],
            vec![0.0, 0.0, -0.04302, 0.8596, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.9048],
        ];
        let b = vec![vec![0.04363], vec![0.05327], vec![0.04754], vec![0.04528], vec![0.04758]];
        let diag = |d: &[f64]| -> Vec<Vec<f64>> {
            (0..d.len()).map(|j| (0..d.len()).map(|i| if i == j { d[i] } else { 0.0 }).collect()).collect()
        };
        ExperimentConfig {
            system: SystemSpec { n: 5, m: 1, a, b },
            initial_set: ZonotopeSpec { center: vec![1.0; 5], generators: diag(&[0.1; 5]) },
            input_set: ZonotopeSpec { center: vec![10.0], generators: vec![vec![0.25]] },
            noise_set: ZonotopeSpec { center: vec![0.0; 5], generators: diag(&[1.0, 1.1, 1.3, 1.0, 1.5]) },
            data: DataSpec { num_trajectories: 10, steps_per_trajectory: 3, seed: 1 },
            reach: ReachSpec { horizon: 5, reduction_order: 4000, audit_trajectories: 10 },
            bounds: BoundsSpec { scales: vec![1.0, 2.0, 4.0, 8.0], rank_r: None },
            outputs: OutputSpec { directory: PathBuf::from("out") },
        }
    }
}

/// A point of `z` from uniform box coefficients (not volume-uniform).
pub fn sample_zonotope<R: Rng>(z: &Zonotope, rng: &mut R) -> Vector {
    let xi = Vector::from_fn(z.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
    z.center() + z.generators() * xi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    /// Noise samples `w(k)`, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub trajectories: Vec<TrajectoryRecord>,
}

fn vecs(v: &[Vec<f64>]) -> Vec<Vector> {
    v.iter().map(|x| Vector::from_column_slice(x)).collect()
}

fn rows(v: &[Vector]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.iter().copied().collect()).collect()
}

impl TrajectoryFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_text(path, &(serde_json::to_string_pretty(self)? + "\n"))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.trajectories.iter().enumerate() {
            if t.inputs.is_empty() || t.states.len() != t.inputs.len() + 1 {
                return Err(Error::Invalid(format!("trajectory {i}: needs T ≥ 1 inputs and T + 1 states")));
            }
            if !t.noise.is_empty() && t.noise.len() != t.inputs.len() {
                return Err(Error::Invalid(format!("trajectory {i}: noise length differs from input length")));
            }
            if t.states.iter().chain(&t.inputs).chain(&t.noise).flatten().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("trajectory {i}: non-finite value")));
            }
        }
        Ok(())
    }

    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.trajectories.iter().map(|t| Trajectory { states: vecs(&t.states), inputs: vecs(&t.inputs) }).collect()
    }

    pub fn data(&self) -> Result<TrajectoryData> {
        build_data_matrices(&self.trajectories())
    }

    /// Data re-simulated with initial states and inputs multiplied by
    /// `scale` and the recorded noise unchanged, so that the scaled data stay
    /// consistent with the noise bound. Without recorded noise every state and
    /// input is multiplied instead.
    pub fn scaled_data(&self, a: &Matrix, b: &Matrix, scale: f64) -> Result<TrajectoryData> {
        if self.trajectories.iter().any(|t| t.noise.is_empty()) {
            return Ok(self.data()?.scaled(scale));
        }
        let trajs = self
            .trajectories
            .iter()
            .map(|t| {
                let x0 = Vector::from_column_slice(&t.states[0]) * scale;
                let us: Vec<Vector> = vecs(&t.inputs).into_iter().map(|u| u * scale).collect();
                simulate_lti(a, b, &x0, &us, &vecs(&t.noise))
            })
            .collect::<Result<Vec<_>>>()?;
        build_data_matrices(&trajs)
    }
}

/// Simulated trajectories: `x(0) ∈ X₀`, `u(k) ∈ U`, `w(k) ∈ W`, sampled
/// through uniform box coefficients from the seed.
pub fn simulate(cfg: &ExperimentConfig) -> Result<TrajectoryFile> {
    let sets = cfg.sets()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.seed);
    let trajectories = (0..cfg.data.num_trajectories)
        .map(|_| {
            let (x0, us, ws) = sample_run(&sets, cfg.data.steps_per_trajectory, &mut rng);
            let tr = simulate_lti(&sets.a, &sets.b, &x0, &us, &ws)?;
            Ok(TrajectoryRecord { states: rows(&tr.states), inputs: rows(&tr.inputs), noise: rows(&ws) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryFile { trajectories })
}

fn sample_run<R: Rng>(sets: &ExperimentSets, steps: usize, rng: &mut R) -> (Vector, Vec<Vector>, Vec<Vector>) {
    let x0 = sample_zonotope(&sets.initial, rng);
    let us = (0..steps).map(|_| sample_zonotope(&sets.input, rng)).collect();
    let ws = (0..steps).map(|_| sample_zonotope(&sets.noise, rng)).collect();
    (x0, us, ws)
}

/// State sequences of `count` runs of the true system over `horizon` steps,
/// from a stream independent of the data stream.
pub fn audit_trajectories(cfg: &ExperimentConfig, count: usize) -> Result<Vec<Vec<Vector>>> {
    let sets = cfg.sets()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.seed);
    rng.set_stream(1);
    (0..count)
        .map(|_| {
            let (x0, us, ws) = sample_run(&sets, cfg.reach.horizon, &mut rng);
            Ok(simulate_lti(&sets.a, &sets.b, &x0, &us, &ws)?.states)
        })
        .collect()
}

/// Model sets identified from data.
#[derive(Debug, Clone)]
pub struct ModelSets {
    pub data: TrajectoryData,
    pub noise: NoiseModel,
    pub mz: crate::setrep::MatrixZonotope,
    pub cmz: crate::setrep::ConstrainedMatrixZonotope,
}

pub fn identify(cfg: &ExperimentConfig, file: &TrajectoryFile) -> Result<ModelSets> {
    let sets = cfg.sets()?;
    let data = file.data()?;
    identify_data(data, NoiseModel::new(sets.noise)?)
}

pub fn identify_data(data: TrajectoryData, noise: NoiseModel) -> Result<ModelSets> {
    let mz = build_mz_model_set(&data, &noise)?;
    let cmz = build_cmz_model_set(&data, &noise)?;
    Ok(ModelSets { data, noise, mz, cmz })
}

pub fn reach_config(cfg: &ExperimentConfig) -> Result<ReachConfig> {
    let sets = cfg.sets()?;
    Ok(ReachConfig {
        horizon: cfg.reach.horizon,
        reduction_order: cfg.reach.reduction_order,
        input_sets: vec![sets.input],
        noise_set: sets.noise,
        initial_set: sets.initial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRecord {
    pub method: Method,
    pub per_step_seconds: Vec<f64>,
    pub total_seconds: f64,
    /// Model-set preprocessing outside the propagation loop (NMZ
    /// construction); not part of `total_seconds`.
    pub setup_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ReachOutcome {
    pub results: Vec<ReachResult>,
    pub timings: Vec<TimingRecord>,
    pub audit: Option<AuditReport>,
}

/// Propagates the selected methods in the order MZ, CMZ, NMZ.
pub fn run_methods(models: &ModelSets, rc: &ReachConfig, methods: &[Method]) -> Result<(Vec<ReachResult>, Vec<TimingRecord>)> {
    let mut results = Vec::new();
    let mut timings = Vec::new();
    for method in Method::ALL.into_iter().filter(|m| methods.contains(m)) {
        let (res, setup) = match method {
            Method::Mz => (propagate_mz(&models.mz, rc)?, 0.0),
            Method::Cmz => (propagate_cmz(&models.cmz, rc)?, 0.0),
            Method::Nmz => {
                let r = nullspace_reachability(&models.cmz, rc)?;
                (r.result, r.setup_seconds)
            }
        };
        log::info!("{method}: {:.3e} s over {} steps", res.total_seconds(), res.sets.len());
        timings.push(TimingRecord {
            method,
            per_step_seconds: res.wall_times.clone(),
            total_seconds: res.total_seconds(),
            setup_seconds: setup,
        });
        results.push(res);
    }
    Ok((results, timings))
}

/// Identification, propagation and (with `audit_trajectories > 0`) the
/// containment audit; writes `hulls.csv`, `timings.json` and
/// `containment.json` when `out` is given.
pub fn run_reach(cfg: &ExperimentConfig, file: &TrajectoryFile, methods: &[Method], out: Option<&Path>) -> Result<ReachOutcome> {
    let models = identify(cfg, file)?;
    let rc = reach_config(cfg)?;
    let (results, timings) = run_methods(&models, &rc, methods)?;
    let audit = if cfg.reach.audit_trajectories > 0 {
        let runs = audit_trajectories(cfg, cfg.reach.audit_trajectories)?;
        Some(containment_audit(&results, &runs)?)
    } else {
        None
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_text(&dir.join("hulls.csv"), &hulls_csv(&results)?)?;
        write_json(&dir.join("timings.json"), &timings, validate_timings(&timings))?;
        if let Some(a) = &audit {
            write_json(&dir.join("containment.json"), a, validate_audit(a))?;
        }
    }
    Ok(ReachOutcome { results, timings, audit })
}

/// Formats with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `step,method,dim,lower,upper`, one row per step, method and coordinate.
pub fn hulls_csv(results: &[ReachResult]) -> Result<String> {
    let mut s = String::from("step,method,dim,lower,upper\n");
    let steps = results.iter().map(|r| r.sets.len()).max().unwrap_or(0);
    for k in 0..steps {
        for r in results {
            let Some(set) = r.sets.get(k) else { continue };
            let h = set.interval_hull()?;
            for d in 0..h.dim() {
                let (lo, hi) = (h.lower[d], h.upper[d]);
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Invalid(format!("hull row {} {} {d}: [{lo}, {hi}]", k + 1, r.method)));
                }
                writeln!(s, "{},{},{},{},{}", k + 1, r.method, d, fmt_float(lo), fmt_float(hi)).expect("string write");
            }
        }
    }
    Ok(s)
}

fn validate_timings(t: &[TimingRecord]) -> Result<()> {
    for r in t {
        let ok = r.per_step_seconds.iter().chain([&r.total_seconds, &r.setup_seconds]).all(|v| v.is_finite() && *v >= 0.0);
        if !ok {
            return Err(Error::Invalid(format!("timing record for {} has invalid values", r.method)));
        }
    }
    Ok(())
}

fn validate_audit(a: &AuditReport) -> Result<()> {
    for m in &a.methods {
        for s in &m.steps {
            if s.contained > s.total || !(0.0..=1.0).contains(&s.fraction) || s.hull_widths.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::Invalid(format!("audit entry {} step {} is inconsistent", m.method, s.step)));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scale: f64,
    pub mz_bound: f64,
    pub cmz_bound: f64,
    pub nmz_bound: f64,
    pub kappa: f64,
    pub sigma_min: f64,
}

/// Bounds of the three model sets at each data scale. `data_at(d)` supplies
/// the data for scale `d`.
pub fn scaling_sweep<F>(mut data_at: F, noise: &NoiseModel, scales: &[f64], rank: Option<usize>) -> Result<Vec<SweepRow>>
where
    F: FnMut(f64) -> Result<TrajectoryData>,
{
    if scales.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("scales must be sorted ascending".into()));
    }
    scales
        .iter()
        .map(|&scale| {
            let models = identify_data(data_at(scale)?, noise.clone())?;
            let b = model_set_bounds(&models, rank)?;
            Ok(SweepRow { scale, ..b })
        })
        .collect()
}

/// MZ vertex bound, CMZ worst case and NMZ bound for one data set (scale 1).
pub fn model_set_bounds(models: &ModelSets, rank: Option<usize>) -> Result<SweepRow> {
    let t = models.data.num_samples();
    let factors = build_noise_matrix_zonotope(&models.noise, t).generators().to_vec();
    let h = data_pseudoinverse(&models.data)?;
    let mz = mz_vertex_bound(&models.mz, rank)?;
    let global = mz_global_bound(&models.mz, &factors, &h, rank)?;
    let cmz = cmz_worst_case_bound(&models.cmz, rank)?;
    let nmz = nullspace_matrix_zonotope(&models.cmz)?;
    let nb = nmz_bound(&nmz.model, &nmz.provenance, Some((&factors, &h)), rank)?;
    Ok(SweepRow {
        scale: 1.0,
        mz_bound: mz.bound,
        cmz_bound: cmz.bound,
        nmz_bound: nb.bound,
        kappa: global.components.kappa.unwrap_or(0.0),
        sigma_min: mz.components.sigma_min_c,
    })
}

pub fn run_bounds(cfg: &ExperimentConfig, file: &TrajectoryFile, out: Option<&Path>) -> Result<Vec<SweepRow>> {
    let sets = cfg.sets()?;
    let noise = NoiseModel::new(sets.noise)?;
    let rows = scaling_sweep(|d| file.scaled_data(&sets.a, &sets.b, d), &noise, &cfg.bounds.scales, cfg.bounds.rank_r)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_text(&dir.join("bounds.csv"), &bounds_csv(&rows)?)?;
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[SweepRow]) -> Result<String> {
    let mut s = String::from("scale,mz_bound,cmz_bound,nmz_bound,kappa,sigma_min\n");
    for r in rows {
        let vals = [r.scale, r.mz_bound, r.cmz_bound, r.nmz_bound, r.kappa, r.sigma_min];
        if vals.iter().any(|v| !v.is_finite()) || [r.mz_bound, r.cmz_bound, r.nmz_bound].iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::Invalid(format!("bounds row at scale {} is out of range", r.scale)));
        }
        let line: Vec<String> = vals.iter().map(|v| fmt_float(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientProjection {
    /// Coefficient indices of the two plotted axes.
    pub axes: [usize; 2],
    pub xi_samples: Vec<[f64; 2]>,
    /// Vertices of the projected `Z_ξ`, counter-clockwise.
    pub zonotope_hull: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmzAuditReport {
    pub structure: StructuralReport,
    pub nu: usize,
    pub cmz_generators: usize,
    pub nmz_generators: usize,
    pub samples_checked: usize,
    pub samples_in_coefficient_zonotope: usize,
    pub xi_p: Vec<f64>,
    pub c_xi: Vec<f64>,
    /// Columns of `G_ξ`.
    pub g_xi: Vec<Vec<f64>>,
    pub projection: Option<CoefficientProjection>,
}

pub fn run_audit_nmz(cfg: &ExperimentConfig, file: &TrajectoryFile, samples: usize, out: Option<&Path>) -> Result<NmzAuditReport> {
    let models = identify(cfg, file)?;
    let structure = crate::nmz::structural_rank_check(&models.noise, &models.data)?;
    let nmz = nullspace_matrix_zonotope(&models.cmz)?;
    let z = &nmz.provenance.coeff_zonotope;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.seed);
    rng.set_stream(2);
    let n = &models.cmz;
    let xs = sample_coefficient_set(n.con_a(), n.con_b(), n.num_generators(), samples, &mut rng)?;
    let mut inside = 0;
    for xi in &xs {
        let eta = nmz.provenance.eta_for(xi)?;
        if eta.amax() <= 1.0 + 1e-8 && (z.center() + z.generators() * &eta - xi).amax() <= 1e-8 {
            inside += 1;
        }
    }
    let projection = (n.num_generators() >= 2).then(|| {
        let axes = [0, 1];
        let c = [z.center()[0], z.center()[1]];
        let g: Vec<[f64; 2]> = z.generators().column_iter().map(|col| [col[0], col[1]]).collect();
        CoefficientProjection {
            axes,
            xi_samples: xs.iter().map(|x| [x[0], x[1]]).collect(),
            zonotope_hull: zonotope_polygon(c, &g),
        }
    });
    let report = NmzAuditReport {
        structure,
        nu: nmz.provenance.projected.nullity(),
        cmz_generators: n.num_generators(),
        nmz_generators: nmz.model.num_generators(),
        samples_checked: xs.len(),
        samples_in_coefficient_zonotope: inside,
        xi_p: nmz.provenance.projected.xi_p.iter().copied().collect(),
        c_xi: z.center().iter().copied().collect(),
        g_xi: z.generators().column_iter().map(|c| c.iter().copied().collect()).collect(),
        projection,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let valid = if report.samples_in_coefficient_zonotope <= report.samples_checked && report.nmz_generators == report.nu {
            Ok(())
        } else {
            Err(Error::Invalid("audit report counts are inconsistent".into()))
        };
        write_json(&dir.join("audit.json"), &report, valid)?;
    }
    Ok(report)
}

/// Vertices of the planar zonotope `c ⊕ Σ[−gᵢ, gᵢ]`, counter-clockwise from
/// the lowest point.
pub fn zonotope_polygon(c: [f64; 2], gens: &[[f64; 2]]) -> Vec<[f64; 2]> {
    // orient every generator into the upper half-plane and sort by angle
    let mut g: Vec<[f64; 2]> = gens
        .iter()
        .filter(|v| v[0] != 0.0 || v[1] != 0.0)
        .map(|v| if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) { [-v[0], -v[1]] } else { *v })
        .collect();
    if g.is_empty() {
        return vec![c];
    }
    g.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let mut p = [c[0] - g.iter().map(|v| v[0]).sum::<f64>(), c[1] - g.iter().map(|v| v[1]).sum::<f64>()];
    let mut out = Vec::with_capacity(2 * g.len());
    for v in g.iter().chain(g.iter()).enumerate().map(|(i, v)| if i < g.len() { *v } else { [-v[0], -v[1]] }) {
        out.push(p);
        p = [p[0] + 2.0 * v[0], p[1] + 2.0 * v[1]];
    }
    out
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s.as_bytes())?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T, valid: Result<()>) -> Result<()> {
    valid?;
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{singular_values, spectral_norm};

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::five_dim_benchmark();
        cfg.reach.reduction_order = 5;
        cfg.reach.audit_trajectories = 3;
        cfg.reach.horizon = 2;
        cfg
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::five_dim_benchmark();
        let s = cfg.to_json().unwrap();
        let back = ExperimentConfig::from_json(&s).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), s);
        let mut bad = cfg.clone();
        bad.noise_set.center.pop();
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json(&s.replace("\"seed\"", "\"sed\"")).is_err());
    }

    #[test]
    fn benchmark_system_is_stable() {
        let cfg = ExperimentConfig::five_dim_benchmark();
        let a = cfg.system.a_matrix().unwrap();
        let rho = a.clone().complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
        assert!(rho < 1.0);
        let sets = cfg.sets().unwrap();
        let us = vec![Vector::from_element(1, 10.0); 200];
        let ws = vec![Vector::zeros(5); 200];
        let tr = simulate_lti(&sets.a, &sets.b, &Vector::repeat(5, 1.0), &us, &ws).unwrap();
        let steady = (Matrix::identity(5, 5) - &a).try_inverse().unwrap() * &sets.b * 10.0;
        assert!(tr.states.iter().all(|x| x.amax() <= steady.amax() * 3.0 + 2.0));
    }

    #[test]
    fn simulate_is_seeded_and_consistent() {
        let cfg = small_config();
        let f = simulate(&cfg).unwrap();
        assert_eq!(f, simulate(&cfg).unwrap());
        let d = f.data().unwrap();
        assert_eq!(d.num_samples(), 30);
        let sets = cfg.sets().unwrap();
        let resid = &d.x_plus - &sets.a * &d.x_minus - &sets.b * &d.u_minus;
        let w: Vec<Vector> = f.trajectories.iter().flat_map(|t| vecs(&t.noise)).collect();
        assert!((resid - Matrix::from_columns(&w)).amax() < 1e-12);

        let mut zero = cfg.clone();
        zero.initial_set.generators.clear();
        zero.input_set.generators.clear();
        zero.noise_set.generators.clear();
        let a = simulate(&zero).unwrap();
        zero.data.seed = 99;
        assert_eq!(a, simulate(&zero).unwrap());
    }

    #[test]
    fn trajectory_file_round_trip() {
        let cfg = small_config();
        let f = simulate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        f.save(&p).unwrap();
        assert_eq!(TrajectoryFile::load(&p).unwrap(), f);
        let sets = cfg.sets().unwrap();
        assert_eq!(f.scaled_data(&sets.a, &sets.b, 1.0).unwrap(), f.data().unwrap());
    }

    #[test]
    fn scaled_data_shrinks_pseudoinverse() {
        let cfg = small_config();
        let f = simulate(&cfg).unwrap();
        let sets = cfg.sets().unwrap();
        let base = f.data().unwrap();
        let h = spectral_norm(&data_pseudoinverse(&base).unwrap());
        let s_min = |d: &TrajectoryData| singular_values(&d.regressor()).iter().copied().fold(f64::INFINITY, f64::min);
        for d in [2.0, 4.0] {
            let pure = base.scaled(d);
            let hn = spectral_norm(&data_pseudoinverse(&pure).unwrap());
            assert!(hn <= h / d * (1.0 + 1e-9));
            assert!((1.0 / s_min(&pure) - hn).abs() < 1e-9 * hn);
            let resim = f.scaled_data(&sets.a, &sets.b, d).unwrap();
            assert_eq!(resim.num_samples(), base.num_samples());
        }
    }

    #[test]
    fn reach_artifacts_are_deterministic() {
        let cfg = small_config();
        let f = simulate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
        let out = run_reach(&cfg, &f, &[Method::Mz, Method::Nmz], Some(&d1)).unwrap();
        run_reach(&cfg, &f, &[Method::Mz, Method::Nmz], Some(&d2)).unwrap();
        let h1 = fs::read(d1.join("hulls.csv")).unwrap();
        assert_eq!(h1, fs::read(d2.join("hulls.csv")).unwrap());
        let text = String::from_utf8(h1).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2 * 5);
        assert!(text.lines().nth(1).unwrap().starts_with("1,MZ,0,"));
        assert!(out.audit.unwrap().all_contained());
        let t: serde_json::Value = serde_json::from_slice(&fs::read(d1.join("timings.json")).unwrap()).unwrap();
        assert_eq!(t.as_array().unwrap().len(), 2);
    }

    #[test]
    fn polygon_of_box() {
        let p = zonotope_polygon([0.0, 0.0], &[[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!(p, vec![[-1.0, -2.0], [1.0, -2.0], [1.0, 2.0], [-1.0, 2.0]]);
        assert_eq!(zonotope_polygon([1.0, 1.0], &[]), vec![[1.0, 1.0]]);
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.5), "-2.5000000000000000e0");
    }
}
