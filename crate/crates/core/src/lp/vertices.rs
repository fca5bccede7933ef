use crate::error::{check_dim, Error, Result};
use crate::spectral::{pseudoinverse, rank_of, DEFAULT_RANK_TOL};
use crate::{Matrix, Vector};

const MAX_DIM: usize = 12;
const TOL: f64 = 1e-8;

/// All vertices of `{x : ineq_a x ≤ ineq_b, eq_a x = eq_b}` by brute force
/// over active sets. Only meant as a test oracle for small `d`.
pub fn enumerate_vertices(
    ineq_a: &Matrix,
    ineq_b: &Vector,
    eq_a: &Matrix,
    eq_b: &Vector,
) -> Result<Vec<Vector>> {
    let d = ineq_a.ncols().max(eq_a.ncols());
    if d > MAX_DIM {
        return Err(Error::TooManyVariables(d));
    }
    let (mi, me) = (ineq_a.nrows(), eq_a.nrows());
    if mi > 0 {
        check_dim("enumerate_vertices ineq_a", d, ineq_a.ncols())?;
    }
    if me > 0 {
        check_dim("enumerate_vertices eq_a", d, eq_a.ncols())?;
    }
    check_dim("enumerate_vertices ineq_b", mi, ineq_b.len())?;
    check_dim("enumerate_vertices eq_b", me, eq_b.len())?;

    let eq_rank = if me > 0 { rank_of(eq_a, DEFAULT_RANK_TOL) } else { 0 };
    let k = d - eq_rank;
    let mut out: Vec<Vector> = Vec::new();
    if k > mi {
        return Ok(out);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let rows = me + k;
        let mut m = Matrix::zeros(rows, d);
        let mut rhs = Vector::zeros(rows);
        if me > 0 {
            m.rows_mut(0, me).copy_from(eq_a);
            rhs.rows_mut(0, me).copy_from(eq_b);
        }
        for (r, &i) in idx.iter().enumerate() {
            m.row_mut(me + r).copy_from(&ineq_a.row(i));
            rhs[me + r] = ineq_b[i];
        }
        if rank_of(&m, DEFAULT_RANK_TOL) == d {
            let x = pseudoinverse(&m, DEFAULT_RANK_TOL)? * &rhs;
            let scale = 1.0 + rhs.amax();
            let consistent = (&m * &x - &rhs).amax() <= TOL * scale;
            let feasible = mi == 0 || (ineq_a * &x - ineq_b).max() <= TOL * scale;
            if consistent && feasible && !out.iter().any(|v| (v - &x).amax() <= TOL * scale) {
                out.push(x);
            }
        }
        if !next_combination(&mut idx, mi) {
            break;
        }
    }
    Ok(out)
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(d: usize) -> (Matrix, Vector) {
        let mut a = Matrix::zeros(2 * d, d);
        for j in 0..d {
            a[(j, j)] = 1.0;
            a[(d + j, j)] = -1.0;
        }
        (a, Vector::from_element(2 * d, 1.0))
    }

    #[test]
    fn box_has_four_vertices() {
        let (a, b) = unit_box(2);
        let v = enumerate_vertices(&a, &b, &Matrix::zeros(0, 2), &Vector::zeros(0)).unwrap();
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn box_with_diagonal() {
        let (a, b) = unit_box(2);
        let v = enumerate_vertices(&a, &b, &dmatrix![1.0, -1.0], &dvector![0.0]).unwrap();
        assert_eq!(v.len(), 2);
        for x in v {
            assert!((x[0] - x[1]).abs() < 1e-12 && (x[0].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_polytope_vertices_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (mut a, mut b) = unit_box(3);
            let extra = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
            let eb = Vector::from_fn(4, |_, _| rng.random_range(0.2..1.0));
            a = Matrix::from_rows(&a.row_iter().chain(extra.row_iter()).collect::<Vec<_>>());
            b = Vector::from_iterator(10, b.iter().chain(eb.iter()).copied());
            let v = enumerate_vertices(&a, &b, &Matrix::zeros(0, 3), &Vector::zeros(0)).unwrap();
            assert!(v.len() >= 4);
            for x in v {
                assert!((&a * x - &b).max() <= 1e-8);
            }
        }
    }

    #[test]
    fn guard_on_dimension() {
        let a = Matrix::zeros(1, 13);
        assert!(matches!(
            enumerate_vertices(&a, &dvector![0.0], &Matrix::zeros(0, 13), &Vector::zeros(0)),
            Err(Error::TooManyVariables(13))
        ));
    }
}
