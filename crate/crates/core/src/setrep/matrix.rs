use std::sync::OnceLock;

use crate::error::{check_dim, Result};
use crate::{Matrix, Vector};

use super::{check_box, cz_coefficient_bounds, CoefficientBounds, Zonotope};

/// `{C + Σ ξ⁽ⁱ⁾G⁽ⁱ⁾ : ‖ξ‖∞ ≤ 1}` over `n × m` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixZonotope {
    center: Matrix,
    generators: Vec<Matrix>,
}

impl MatrixZonotope {
    pub fn new(center: Matrix, generators: Vec<Matrix>) -> Result<Self> {
        for g in &generators {
            check_dim("matrix zonotope generator rows", center.nrows(), g.nrows())?;
            check_dim("matrix zonotope generator cols", center.ncols(), g.ncols())?;
        }
        Ok(MatrixZonotope { center, generators })
    }

    pub fn singleton(center: Matrix) -> Self {
        MatrixZonotope { center, generators: Vec::new() }
    }

    pub fn center(&self) -> &Matrix {
        &self.center
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn nrows(&self) -> usize {
        self.center.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.center.ncols()
    }

    pub fn sample(&self, coeffs: &Vector) -> Result<Matrix> {
        mz_sample(self, coeffs)
    }

    /// Generators stacked as columns `vec(G⁽ⁱ⁾)` (column-major vectorization).
    pub fn vectorized_generators(&self) -> Matrix {
        let len = self.nrows() * self.ncols();
        Matrix::from_fn(len, self.num_generators(), |r, i| self.generators[i].as_slice()[r])
    }
}

/// `C + Σ ξ⁽ⁱ⁾G⁽ⁱ⁾` for coefficients in the unit box.
pub fn mz_sample(m: &MatrixZonotope, coeffs: &Vector) -> Result<Matrix> {
    check_dim("matrix zonotope coefficients", m.num_generators(), coeffs.len())?;
    check_box(coeffs)?;
    Ok(affine(&m.center, &m.generators, coeffs))
}

fn affine(c: &Matrix, gens: &[Matrix], coeffs: &Vector) -> Matrix {
    let mut out = c.clone();
    for (g, &x) in gens.iter().zip(coeffs.iter()) {
        if x != 0.0 {
            out += g * x;
        }
    }
    out
}

/// Zonotope enclosing `{Nx : N ∈ M, x ∈ Z}`: generators `G⁽ⁱ⁾c_z`, then
/// `C g_z⁽ʲ⁾`, then the nonzero cross terms `G⁽ⁱ⁾g_z⁽ʲ⁾` (their coefficient
/// `ξ⁽ⁱ⁾ξ_z⁽ʲ⁾` already lies in `[-1, 1]`).
pub fn mz_times_zonotope(m: &MatrixZonotope, z: &Zonotope) -> Result<Zonotope> {
    check_dim("mz_times_zonotope", m.ncols(), z.dim())?;
    let rows = m.nrows();
    let cz = z.center();
    let gz = z.generators();
    let k = z.num_generators();
    let mut cols: Vec<f64> = Vec::with_capacity(rows * (m.num_generators() * (k + 1) + k));
    for g in &m.generators {
        cols.extend((g * cz).iter());
    }
    cols.extend((&m.center * gz).iter());
    for g in &m.generators {
        let prod = g * gz;
        for col in prod.column_iter() {
            if col.iter().any(|v| *v != 0.0) {
                cols.extend(col.iter());
            }
        }
    }
    let count = if rows == 0 { 0 } else { cols.len() / rows };
    Zonotope::new(&m.center * cz, Matrix::from_vec(rows, count, cols))
}

/// `{C + Σ ξ⁽ⁱ⁾G⁽ⁱ⁾ : Âξ = b̂, ‖ξ‖∞ ≤ 1}`.
#[derive(Debug, Clone)]
pub struct ConstrainedMatrixZonotope {
    center: Matrix,
    generators: Vec<Matrix>,
    con_a: Matrix,
    con_b: Vector,
    bounds: OnceLock<CoefficientBounds>,
}

impl ConstrainedMatrixZonotope {
    /// Validates shapes and checks by LP that the coefficient set is nonempty.
    pub fn new(center: Matrix, generators: Vec<Matrix>, con_a: Matrix, con_b: Vector) -> Result<Self> {
        let cmz = Self::new_unchecked(center, generators, con_a, con_b)?;
        cmz.coefficient_bounds()?;
        Ok(cmz)
    }

    /// Shape checks only; emptiness surfaces on the first LP.
    pub(crate) fn new_unchecked(center: Matrix, generators: Vec<Matrix>, con_a: Matrix, con_b: Vector) -> Result<Self> {
        for g in &generators {
            check_dim("cmz generator rows", center.nrows(), g.nrows())?;
            check_dim("cmz generator cols", center.ncols(), g.ncols())?;
        }
        check_dim("cmz constraint rhs", con_a.nrows(), con_b.len())?;
        if con_a.nrows() > 0 {
            check_dim("cmz constraint columns", generators.len(), con_a.ncols())?;
        }
        let con_a = if con_a.nrows() == 0 { Matrix::zeros(0, generators.len()) } else { con_a };
        Ok(ConstrainedMatrixZonotope { center, generators, con_a, con_b, bounds: OnceLock::new() })
    }

    pub fn from_matrix_zonotope(m: &MatrixZonotope) -> Self {
        let k = m.num_generators();
        ConstrainedMatrixZonotope {
            center: m.center.clone(),
            generators: m.generators.clone(),
            con_a: Matrix::zeros(0, k),
            con_b: Vector::zeros(0),
            bounds: OnceLock::new(),
        }
    }

    pub fn center(&self) -> &Matrix {
        &self.center
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn con_a(&self) -> &Matrix {
        &self.con_a
    }

    pub fn con_b(&self) -> &Vector {
        &self.con_b
    }

    pub fn num_constraints(&self) -> usize {
        self.con_b.len()
    }

    pub fn nrows(&self) -> usize {
        self.center.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.center.ncols()
    }

    /// The same matrices without the coefficient constraints.
    pub fn strip_constraints(&self) -> MatrixZonotope {
        MatrixZonotope { center: self.center.clone(), generators: self.generators.clone() }
    }

    /// Affine combination for `ξ`; box membership is checked, the equality
    /// constraints are not.
    pub fn sample(&self, coeffs: &Vector) -> Result<Matrix> {
        check_dim("cmz coefficients", self.num_generators(), coeffs.len())?;
        check_box(coeffs)?;
        Ok(affine(&self.center, &self.generators, coeffs))
    }

    /// Per-coefficient ranges over Ξ, computed by LP once and cached.
    pub fn coefficient_bounds(&self) -> Result<CoefficientBounds> {
        if let Some(b) = self.bounds.get() {
            return Ok(b.clone());
        }
        let b = cz_coefficient_bounds(&self.con_a, &self.con_b, self.num_generators())?;
        let _ = self.bounds.set(b.clone());
        Ok(b)
    }

    /// Whether `ξ` satisfies the constraints to `tol` and the box.
    pub fn coefficients_feasible(&self, coeffs: &Vector, tol: f64) -> bool {
        coeffs.len() == self.num_generators()
            && coeffs.amax() <= 1.0 + tol
            && (self.num_constraints() == 0 || (&self.con_a * coeffs - &self.con_b).amax() <= tol)
    }
}

/// `R·N`: every matrix left-multiplied by `R`, constraints unchanged.
pub fn matrix_times_cmz(r: &Matrix, n: &ConstrainedMatrixZonotope) -> Result<ConstrainedMatrixZonotope> {
    check_dim("matrix_times_cmz", r.ncols(), n.nrows())?;
    Ok(ConstrainedMatrixZonotope {
        center: r * &n.center,
        generators: n.generators.iter().map(|g| r * g).collect(),
        con_a: n.con_a.clone(),
        con_b: n.con_b.clone(),
        bounds: n.bounds.clone(),
    })
}

impl From<&MatrixZonotope> for ConstrainedMatrixZonotope {
    fn from(m: &MatrixZonotope) -> Self {
        Self::from_matrix_zonotope(m)
    }
}
