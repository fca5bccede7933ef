//! From recorded trajectories to data matrices and model sets.
//!
//! With `K` trajectories of lengths `T₁..T_K` (`T = ΣTᵢ` samples) the data
//! matrices are `X₊ = [x⁽¹⁾(1) … x⁽ᴷ⁾(T_K)]`, `X₋` (the same states shifted
//! back by one step) and `U₋`, columns ordered trajectory-major. Every
//! `[A B]` consistent with the data and with noise in `Z_w` satisfies
//! `[A B]D = X₊ − W` for `D = [X₋; U₋]` and some stacked noise matrix `W`.

use crate::error::{check_dim, Error, Result};
use crate::setrep::{ConstrainedMatrixZonotope, MatrixZonotope, Zonotope};
use crate::spectral::{nullspace_basis, pseudoinverse, rank_of, svd_full, DEFAULT_RANK_TOL};
use crate::{Matrix, Vector};

/// One recorded run: `T + 1` states and `T` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    pub x_plus: Matrix,
    pub x_minus: Matrix,
    pub u_minus: Matrix,
    /// Samples contributed by each trajectory.
    pub lengths: Vec<usize>,
}

impl TrajectoryData {
    pub fn state_dim(&self) -> usize {
        self.x_plus.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u_minus.nrows()
    }

    /// Total number of samples `T`.
    pub fn num_samples(&self) -> usize {
        self.x_plus.ncols()
    }

    /// `D = [X₋; U₋]`.
    pub fn regressor(&self) -> Matrix {
        let (n, m, t) = (self.state_dim(), self.input_dim(), self.num_samples());
        let mut d = Matrix::zeros(n + m, t);
        d.rows_mut(0, n).copy_from(&self.x_minus);
        d.rows_mut(n, m).copy_from(&self.u_minus);
        d
    }

    /// All states and inputs multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        TrajectoryData {
            x_plus: &self.x_plus * s,
            x_minus: &self.x_minus * s,
            u_minus: &self.u_minus * s,
            lengths: self.lengths.clone(),
        }
    }
}

/// Bounded process noise `w(k) ∈ Z_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub zonotope: Zonotope,
}

impl NoiseModel {
    pub fn new(zonotope: Zonotope) -> Result<Self> {
        if zonotope.generators().iter().chain(zonotope.center().iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("noise zonotope has non-finite entries".into()));
        }
        Ok(NoiseModel { zonotope })
    }

    pub fn dim(&self) -> usize {
        self.zonotope.dim()
    }

    pub fn num_generators(&self) -> usize {
        self.zonotope.num_generators()
    }
}

pub fn build_data_matrices(trajectories: &[Trajectory]) -> Result<TrajectoryData> {
    let first = trajectories.first().ok_or_else(|| Error::Invalid("no trajectories".into()))?;
    let n = first.states.first().map(|s| s.len()).ok_or_else(|| Error::Invalid("empty trajectory".into()))?;
    let m = first.inputs.first().map(|u| u.len()).ok_or_else(|| Error::Invalid("trajectory without inputs".into()))?;
    let mut lengths = Vec::with_capacity(trajectories.len());
    for tr in trajectories {
        let ti = tr.inputs.len();
        if ti == 0 {
            return Err(Error::Invalid("trajectory without inputs".into()));
        }
        check_dim("trajectory states (inputs + 1)", ti + 1, tr.states.len())?;
        for s in &tr.states {
            check_dim("state dimension", n, s.len())?;
        }
        for u in &tr.inputs {
            check_dim("input dimension", m, u.len())?;
        }
        lengths.push(ti);
    }
    let t: usize = lengths.iter().sum();
    let mut x_plus = Matrix::zeros(n, t);
    let mut x_minus = Matrix::zeros(n, t);
    let mut u_minus = Matrix::zeros(m, t);
    let mut col = 0;
    for tr in trajectories {
        for k in 0..tr.inputs.len() {
            x_minus.set_column(col, &tr.states[k]);
            x_plus.set_column(col, &tr.states[k + 1]);
            u_minus.set_column(col, &tr.inputs[k]);
            col += 1;
        }
    }
    Ok(TrajectoryData { x_plus, x_minus, u_minus, lengths })
}

/// `M_w = ⟨[c … c], {G⁽ʲ⁺⁽ⁱ⁻¹⁾ᵀ⁾}⟩`: generator `j + (i−1)T` (1-based) holds
/// noise generator `g⁽ⁱ⁾` in column `j` and zeros elsewhere.
pub fn build_noise_matrix_zonotope(noise: &NoiseModel, t: usize) -> MatrixZonotope {
    let n = noise.dim();
    let c = noise.zonotope.center();
    let center = Matrix::from_fn(n, t, |r, _| c[r]);
    let g = noise.zonotope.generators();
    let mut gens = Vec::with_capacity(g.ncols() * t);
    for i in 0..g.ncols() {
        for j in 0..t {
            let mut m = Matrix::zeros(n, t);
            m.set_column(j, &g.column(i));
            gens.push(m);
        }
    }
    MatrixZonotope::new(center, gens).expect("shapes are consistent by construction")
}

/// Index of the noise-matrix generator for noise generator `i` and sample
/// `j` (both 0-based).
pub fn noise_generator_index(i: usize, j: usize, t: usize) -> usize {
    j + i * t
}

/// Right nullspace basis `D⊥` (`T × (T − rank D)`) of the regressor.
pub fn data_nullspace(data: &TrajectoryData) -> Result<Matrix> {
    nullspace_basis(&data.regressor(), DEFAULT_RANK_TOL)
}

/// `H = D†`. Logs a warning when `D` lacks full row rank.
pub fn data_pseudoinverse(data: &TrajectoryData) -> Result<Matrix> {
    let d = data.regressor();
    let r = rank_of(&d, DEFAULT_RANK_TOL);
    if r < d.nrows() {
        log::warn!("data matrix [X-; U-] has rank {r} < {}; the model set is not data-determined", d.nrows());
    }
    pseudoinverse(&d, DEFAULT_RANK_TOL)
}

/// Constraints `Âξ = b̂` shared by the noise CMZ and the model set.
pub fn noise_constraint_system(noise: &NoiseModel, data: &TrajectoryData) -> Result<(Matrix, Vector)> {
    check_dim("noise dimension", data.state_dim(), noise.dim())?;
    let d_perp = data_nullspace(data)?;
    Ok(noise_constraints(noise, data, &d_perp))
}

/// `Â = [vec(G⁽¹⁾D⊥) …]` and
/// `b̂ = vec((X₊ − C)D⊥)`, exploiting that each noise generator matrix has a
/// single nonzero column.
fn noise_constraints(noise: &NoiseModel, data: &TrajectoryData, d_perp: &Matrix) -> (Matrix, Vector) {
    let n = noise.dim();
    let t = data.num_samples();
    let nu = d_perp.ncols();
    let g = noise.zonotope.generators();
    let gamma = g.ncols() * t;
    let mut a = Matrix::zeros(n * nu, gamma);
    for i in 0..g.ncols() {
        for j in 0..t {
            let k = noise_generator_index(i, j, t);
            for c in 0..nu {
                let w = d_perp[(j, c)];
                if w != 0.0 {
                    for r in 0..n {
                        a[(r + n * c, k)] = g[(r, i)] * w;
                    }
                }
            }
        }
    }
    let c = noise.zonotope.center();
    let centered = Matrix::from_fn(n, t, |r, j| data.x_plus[(r, j)] - c[r]);
    let rhs = centered * d_perp;
    let b = Vector::from_column_slice(rhs.as_slice());
    (a, b)
}

/// Replaces `Aξ = b` by `U_rᵀAξ = U_rᵀb` over an orthonormal basis `U_r` of
/// the range of `A`. A single noise generator makes most rows of `Â`
/// dependent, and dependent rows that agree only up to rounding stall the
/// simplex. Fails when `b` leaves the range of `A` beyond rounding.
fn compress_constraints((a, b): (Matrix, Vector)) -> Result<(Matrix, Vector)> {
    if a.nrows() == 0 {
        return Ok((a, b));
    }
    let f = svd_full(&a)?;
    let r = f.rank(DEFAULT_RANK_TOL);
    if r == a.nrows() {
        return Ok((a, b));
    }
    let ur = f.u_lead(r);
    let bc = ur.transpose() * &b;
    let resid = (&b - &ur * &bc).amax();
    if resid > 1e-9 * b.amax().max(1.0) {
        return Err(Error::EmptyCoefficientSet);
    }
    Ok((ur.transpose() * a, bc))
}

/// Noise matrix zonotope with the equality constraints the data impose.
/// With `T ≤ rank D` the nullspace is trivial and there are no constraints.
pub fn build_noise_cmz(noise: &NoiseModel, data: &TrajectoryData) -> Result<ConstrainedMatrixZonotope> {
    check_dim("noise dimension", data.state_dim(), noise.dim())?;
    let mw = build_noise_matrix_zonotope(noise, data.num_samples());
    let d_perp = data_nullspace(data)?;
    let (a, b) = compress_constraints(noise_constraints(noise, data, &d_perp))?;
    ConstrainedMatrixZonotope::new(mw.center().clone(), mw.generators().to_vec(), a, b)
}

/// `M_Σ = (X₊ − M_w)H`: center `(X₊ − C_w)H`, generators `−G_w⁽ⁱ⁾H`.
pub fn build_mz_model_set(data: &TrajectoryData, noise: &NoiseModel) -> Result<MatrixZonotope> {
    check_dim("noise dimension", data.state_dim(), noise.dim())?;
    let h = data_pseudoinverse(data)?;
    model_set_from(data, noise, &h)
}

fn model_set_from(data: &TrajectoryData, noise: &NoiseModel, h: &Matrix) -> Result<MatrixZonotope> {
    let n = noise.dim();
    let t = data.num_samples();
    let c = noise.zonotope.center();
    let center = Matrix::from_fn(n, t, |r, j| data.x_plus[(r, j)] - c[r]) * h;
    let g = noise.zonotope.generators();
    let mut gens = Vec::with_capacity(g.ncols() * t);
    for i in 0..g.ncols() {
        for j in 0..t {
            // −(g e_jᵀ)H = −g · (row j of H)
            gens.push(-(g.column(i) * h.row(j)));
        }
    }
    MatrixZonotope::new(center, gens)
}

/// `N_Σ = (X₊ − N_w)H`: the MZ model set plus the noise constraints.
pub fn build_cmz_model_set(data: &TrajectoryData, noise: &NoiseModel) -> Result<ConstrainedMatrixZonotope> {
    check_dim("noise dimension", data.state_dim(), noise.dim())?;
    let h = data_pseudoinverse(data)?;
    let m = model_set_from(data, noise, &h)?;
    let d_perp = data_nullspace(data)?;
    let (a, b) = compress_constraints(noise_constraints(noise, data, &d_perp))?;
    let (center, gens) = (m.center().clone(), m.generators().to_vec());
    ConstrainedMatrixZonotope::new(center, gens, a, b)
}

/// `x(k+1) = A x(k) + B u(k) + w(k)`.
pub fn simulate_lti(a: &Matrix, b: &Matrix, x0: &Vector, inputs: &[Vector], noise: &[Vector]) -> Result<Trajectory> {
    let n = x0.len();
    check_dim("simulate A rows", n, a.nrows())?;
    check_dim("simulate A cols", n, a.ncols())?;
    check_dim("simulate B rows", n, b.nrows())?;
    check_dim("simulate noise samples", inputs.len(), noise.len())?;
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for (u, w) in inputs.iter().zip(noise) {
        check_dim("simulate input", b.ncols(), u.len())?;
        check_dim("simulate noise", n, w.len())?;
        let x = states.last().expect("nonempty");
        states.push(a * x + b * u + w);
    }
    Ok(Trajectory { states, inputs: inputs.to_vec() })
}

/// Coefficients `ξ*` of the noise matrix zonotope that reproduce the noise
/// matrix `W` (columns `w(k)` in sample order), found per column by LP.
/// `None` if some `w(k)` lies outside `Z_w`.
pub fn noise_coefficients(noise: &NoiseModel, w: &Matrix) -> Result<Option<Vector>> {
    check_dim("noise samples rows", noise.dim(), w.nrows())?;
    let t = w.ncols();
    let gw = noise.num_generators();
    let mut xi = Vector::zeros(gw * t);
    for j in 0..t {
        let Some(c) = noise.zonotope.coefficients_of(&w.column(j).into_owned())? else {
            return Ok(None);
        };
        for i in 0..gw {
            xi[noise_generator_index(i, j, t)] = c[i];
        }
    }
    Ok(Some(xi))
}
