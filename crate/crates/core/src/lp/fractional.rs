//! Maximization of `μᵀ|ξ| / (σ − γᵀ|ξ|)` and of `γᵀ|ξ|` over
//! `Ξ = {ξ : Aξ = b, ‖ξ‖∞ ≤ 1}`.
//!
//! Splitting `ξ = ξ₊ − ξ₋` with `ξ₊, ξ₋ ≥ 0` linearizes `|ξ|` only when at
//! most one side is nonzero per coordinate. Without that, raising both sides
//! of a coordinate inflates the numerator and shrinks the denominator while
//! leaving `ξ` unchanged, so the single split LP overestimates (and can be
//! unbounded). Both problems are therefore solved by branch and bound over
//! sign patterns: every node fixes the sign of some coordinates, couples the
//! free ones through `ξ₊ + ξ₋ ≤ 1`, and solves one relaxation (a linear
//! fractional program for the ratio). The relaxation is exact as soon as the
//! split is complementary, so leaves need no special treatment. The maximum
//! of a quasi-convex ratio over a polytope sits at a vertex, which is what
//! the vertex-enumeration tests compare against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::{LpStatus, Simplex};
use crate::error::{check_dim, Error, Result};
use crate::{Matrix, Vector};

/// Ratios above this are reported as `+∞` (reciprocal below `1e-12`).
const RATIO_INF: f64 = 1e12;
const COMPLEMENTARITY_TOL: f64 = 1e-9;
const MAX_PARAMETRIC_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct FractionalOptions {
    /// Branch-and-bound node budget. When exhausted the returned value is the
    /// best proven upper bound and `exact` is false.
    pub node_limit: usize,
    /// Stop as soon as a feasible point reaches this value.
    pub stop_at: Option<f64>,
}

impl Default for FractionalOptions {
    fn default() -> Self {
        FractionalOptions { node_limit: 512, stop_at: None }
    }
}

#[derive(Debug, Clone)]
pub struct FractionalSolution {
    pub xi_max: Vector,
    pub xi_plus: Vector,
    pub xi_minus: Vector,
    /// Optimal ratio, or a proven upper bound on it when `exact` is false.
    pub ratio: f64,
    /// The numerator vanishes on the whole feasible set.
    pub zero_numerator: bool,
    pub exact: bool,
    pub nodes: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    Pos,
    Neg,
}

#[derive(Clone, Copy)]
enum Objective<'a> {
    /// `max μᵀ|ξ| / (σ − γᵀ|ξ|)`.
    Ratio { mu: &'a Vector, gamma: &'a Vector, sigma: f64 },
    /// `max wᵀ|ξ|`.
    Linear { w: &'a Vector },
}

impl Objective<'_> {
    fn value(&self, xi: &Vector) -> f64 {
        let abs = xi.abs();
        match *self {
            Objective::Ratio { mu, gamma, sigma } => {
                let den = sigma - gamma.dot(&abs);
                if den <= 0.0 {
                    f64::INFINITY
                } else {
                    mu.dot(&abs) / den
                }
            }
            Objective::Linear { w } => w.dot(&abs),
        }
    }
}

struct NodeSol {
    ub: f64,
    /// `(ξ₊, ξ₋)` de-homogenized; `None` when the node LP is unbounded.
    split: Option<(Vector, Vector)>,
}

struct Problem<'a> {
    obj: Objective<'a>,
    a: &'a Matrix,
    b: &'a Vector,
}

impl Problem<'_> {
    fn p(&self) -> usize {
        self.a.ncols()
    }

    /// Variables `ξ₊ (p) | ξ₋ (p) | slack (p)`; rows `A(ξ₊ − ξ₋) = b`,
    /// `ξ₊ + ξ₋ + s = 1`. The ratio is maximized parametrically: with
    /// `λ` the best ratio so far, maximize `μᵀa − λ(σ − γᵀa)` for `a = ξ₊ + ξ₋`
    /// and update `λ` until no point improves on it. This reaches the optimum
    /// of the Charnes–Cooper LP over the same relaxation without its
    /// homogeneous constraints, which leave the tableau fully degenerate.
    fn solve_node(&self, fixes: &[Fix]) -> Option<NodeSol> {
        let p = self.p();
        let r = self.a.nrows();
        let nv = 3 * p;
        let mut m = Matrix::zeros(r + p, nv);
        let mut rhs = vec![0.0; r + p];
        for k in 0..r {
            for i in 0..p {
                let v = self.a[(k, i)];
                m[(k, i)] = v;
                m[(k, p + i)] = -v;
            }
            rhs[k] = self.b[k];
        }
        for i in 0..p {
            m[(r + i, i)] = 1.0;
            m[(r + i, p + i)] = 1.0;
            m[(r + i, 2 * p + i)] = 1.0;
            rhs[r + i] = 1.0;
        }
        let lower = vec![0.0; nv];
        let mut upper = vec![f64::INFINITY; nv];
        for (i, f) in fixes.iter().enumerate() {
            match f {
                Fix::Pos => upper[p + i] = 0.0,
                Fix::Neg => upper[i] = 0.0,
                Fix::Free => {}
            }
        }
        let mut lp = Simplex::new(&m, &rhs, &lower, &upper).ok()?;
        let split = |x: &[f64]| (Vector::from_fn(p, |i, _| x[i]), Vector::from_fn(p, |i, _| x[p + i]));
        let mut c = vec![0.0; nv];
        match self.obj {
            Objective::Linear { w } => {
                for i in 0..p {
                    c[i] = -w[i];
                    c[p + i] = -w[i];
                }
                match lp.minimize(&c) {
                    LpStatus::Optimal => Some(NodeSol { ub: -lp.objective(), split: Some(split(lp.x())) }),
                    LpStatus::Unbounded => Some(NodeSol { ub: f64::INFINITY, split: None }),
                    LpStatus::Infeasible | LpStatus::IterationLimit => None,
                }
            }
            Objective::Ratio { mu, gamma, sigma } => {
                let parts = |x: &[f64]| {
                    let a = |i: usize| x[i] + x[p + i];
                    let num: f64 = (0..p).map(|i| mu[i] * a(i)).sum();
                    let den = sigma - (0..p).map(|i| gamma[i] * a(i)).sum::<f64>();
                    (num, den)
                };
                let (num, den) = parts(lp.x());
                if den <= 0.0 {
                    return Some(NodeSol { ub: f64::INFINITY, split: None });
                }
                let mut lam = num / den;
                for _ in 0..MAX_PARAMETRIC_ROUNDS {
                    for i in 0..p {
                        c[i] = -(mu[i] + lam * gamma[i]);
                        c[p + i] = c[i];
                    }
                    match lp.minimize(&c) {
                        LpStatus::Optimal => {}
                        LpStatus::Unbounded => return Some(NodeSol { ub: f64::INFINITY, split: None }),
                        LpStatus::Infeasible | LpStatus::IterationLimit => return None,
                    }
                    let (num, den) = parts(lp.x());
                    if den <= 0.0 {
                        // the relaxed denominator reaches zero: unbounded ratio
                        return Some(NodeSol { ub: f64::INFINITY, split: None });
                    }
                    if num - lam * den <= 1e-12 * lam.max(1.0) * den.max(1.0) {
                        return Some(NodeSol { ub: lam.max(num / den), split: Some(split(lp.x())) });
                    }
                    lam = num / den;
                }
                log::warn!("parametric ratio search did not settle; node treated as unbounded");
                Some(NodeSol { ub: f64::INFINITY, split: None })
            }
        }
    }
}

struct Node {
    ub: f64,
    fixes: Vec<Fix>,
    split: Option<(Vector, Vector)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.ub.total_cmp(&other.ub) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub)
    }
}

struct Outcome {
    value: f64,
    best: Option<(Vector, Vector)>,
    lower: f64,
    exact: bool,
    nodes: usize,
}

fn split_of(xi: &Vector) -> (Vector, Vector) {
    (xi.map(|v| v.max(0.0)), xi.map(|v| (-v).max(0.0)))
}

/// Branch and bound over sign patterns. `stop(lb, ub)` may end the search
/// early once the answer to the caller's question is settled.
fn branch_and_bound(
    prob: &Problem,
    opts: &FractionalOptions,
    stop: impl Fn(f64, f64) -> bool,
) -> Result<Outcome> {
    let p = prob.p();
    let root_fixes = vec![Fix::Free; p];
    let root = prob.solve_node(&root_fixes).ok_or(Error::EmptyCoefficientSet)?;
    let mut nodes = 1usize;
    let mut lb = f64::NEG_INFINITY;
    let mut best: Option<(Vector, Vector)> = None;

    let polish = |split: &Option<(Vector, Vector)>, lb: &mut f64, best: &mut Option<(Vector, Vector)>, nodes: &mut usize| {
        let Some((plus, minus)) = split else { return };
        let xi = plus - minus;
        let fixes: Vec<Fix> = xi.iter().map(|&v| if v >= 0.0 { Fix::Pos } else { Fix::Neg }).collect();
        *nodes += 1;
        if let Some(NodeSol { split: Some((pp, mm)), .. }) = prob.solve_node(&fixes) {
            let xi = &pp - &mm;
            let v = prob.obj.value(&xi);
            if v > *lb {
                *lb = v;
                *best = Some(split_of(&xi));
            }
        }
        let v = prob.obj.value(&xi);
        if v > *lb {
            *lb = v;
            *best = Some(split_of(&xi));
        }
    };

    polish(&root.split, &mut lb, &mut best, &mut nodes);
    let mut heap = BinaryHeap::new();
    heap.push(Node { ub: root.ub, fixes: root_fixes, split: root.split });

    let tol = |lb: f64| if lb.is_finite() { 1e-10 * lb.abs().max(1.0) } else { 0.0 };
    let mut exact = true;
    let mut ub_global = lb;
    while let Some(node) = heap.pop() {
        if node.ub <= lb + tol(lb) {
            break;
        }
        if stop(lb, node.ub) {
            exact = false;
            ub_global = node.ub;
            break;
        }
        if nodes >= opts.node_limit {
            exact = false;
            ub_global = node.ub;
            log::warn!("sign branch-and-bound hit its node limit ({}); returning upper bound", opts.node_limit);
            break;
        }
        let branch = match &node.split {
            Some((plus, minus)) => {
                let mut pick = None;
                let mut worst = COMPLEMENTARITY_TOL;
                for i in 0..p {
                    let overlap = plus[i].min(minus[i]);
                    if node.fixes[i] == Fix::Free && overlap > worst {
                        worst = overlap;
                        pick = Some(i);
                    }
                }
                if pick.is_none() {
                    // Complementary split: the relaxation is tight here.
                    let xi = plus - minus;
                    let v = prob.obj.value(&xi);
                    if v > lb {
                        lb = v;
                        best = Some(split_of(&xi));
                    }
                    continue;
                }
                pick
            }
            None => node.fixes.iter().position(|f| *f == Fix::Free),
        };
        let Some(i) = branch else {
            return Err(Error::DenominatorNotPositive);
        };
        for fix in [Fix::Pos, Fix::Neg] {
            let mut fixes = node.fixes.clone();
            fixes[i] = fix;
            nodes += 1;
            let Some(sol) = prob.solve_node(&fixes) else { continue };
            polish(&sol.split, &mut lb, &mut best, &mut nodes);
            if sol.ub > lb + tol(lb) {
                heap.push(Node { ub: sol.ub, fixes, split: sol.split });
            }
        }
    }
    let value = if exact { lb } else { ub_global.max(lb) };
    Ok(Outcome { value, best, lower: lb, exact, nodes })
}

fn check_inputs(weights: &[(&'static str, &Vector)], con_a: &Matrix, con_b: &Vector) -> Result<()> {
    let p = con_a.ncols();
    for (name, w) in weights {
        check_dim(name, p, w.len())?;
        if w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Invalid(format!("{name} must be finite and nonnegative")));
        }
    }
    check_dim("constraint rhs", con_a.nrows(), con_b.len())
}

/// Maximizes `μᵀ|ξ| / (σ_min − γᵀ|ξ|)` over `{con_a ξ = con_b, ‖ξ‖∞ ≤ 1}`.
///
/// Requires the denominator to stay positive on the feasible set (see
/// [`check_denominator_positive`]). With no constraints the optimum is the
/// all-ones vertex, `Σμ / (σ_min − Σγ)`.
///
/// ```
/// use ddreach::lp::charnes_cooper_max_ratio;
/// use ddreach::{Matrix, Vector};
/// let mu = Vector::from_element(1, 1.0);
/// let gamma = Vector::from_element(1, 0.5);
/// let s = charnes_cooper_max_ratio(&mu, &gamma, 2.0, &Matrix::zeros(0, 1), &Vector::zeros(0)).unwrap();
/// assert!((s.ratio - 1.0 / 1.5).abs() < 1e-12);
/// assert_eq!(s.xi_max[0].abs(), 1.0);
/// ```
pub fn charnes_cooper_max_ratio(
    mu: &Vector,
    gamma: &Vector,
    sigma_min: f64,
    con_a: &Matrix,
    con_b: &Vector,
) -> Result<FractionalSolution> {
    charnes_cooper_max_ratio_with(mu, gamma, sigma_min, con_a, con_b, &FractionalOptions::default())
}

pub fn charnes_cooper_max_ratio_with(
    mu: &Vector,
    gamma: &Vector,
    sigma_min: f64,
    con_a: &Matrix,
    con_b: &Vector,
    opts: &FractionalOptions,
) -> Result<FractionalSolution> {
    check_inputs(&[("mu", mu), ("gamma", gamma)], con_a, con_b)?;
    if !(sigma_min > 0.0) {
        return Err(Error::Invalid(format!("sigma_min must be positive, got {sigma_min}")));
    }
    let prob = Problem { obj: Objective::Ratio { mu, gamma, sigma: sigma_min }, a: con_a, b: con_b };
    let stop_at = opts.stop_at;
    let out = branch_and_bound(&prob, opts, |lb, _| stop_at.is_some_and(|s| lb >= s))?;
    let p = con_a.ncols();
    let (xi_plus, xi_minus) = out.best.unwrap_or_else(|| (Vector::zeros(p), Vector::zeros(p)));
    let xi_max = &xi_plus - &xi_minus;
    let zero_numerator = out.exact && out.value <= 1e-15;
    let ratio = if zero_numerator {
        0.0
    } else if out.value > RATIO_INF {
        f64::INFINITY
    } else {
        out.value
    };
    if !out.exact {
        log::debug!("ratio search stopped early: lower {} upper {}", out.lower, out.value);
    }
    Ok(FractionalSolution { xi_max, xi_plus, xi_minus, ratio, zero_numerator, exact: out.exact, nodes: out.nodes })
}

/// `max wᵀ|ξ|` over the feasible set, with the maximizer. The bound is an
/// upper bound (not attained) when the node budget runs out.
pub fn max_weighted_abs(
    w: &Vector,
    con_a: &Matrix,
    con_b: &Vector,
    opts: &FractionalOptions,
) -> Result<(f64, Vector, bool)> {
    check_inputs(&[("w", w)], con_a, con_b)?;
    let prob = Problem { obj: Objective::Linear { w }, a: con_a, b: con_b };
    let stop_at = opts.stop_at;
    let out = branch_and_bound(&prob, opts, |lb, _| stop_at.is_some_and(|s| lb >= s))?;
    let xi = out.best.map(|(p, m)| p - m).unwrap_or_else(|| Vector::zeros(con_a.ncols()));
    Ok((out.value, xi, out.exact))
}

/// True iff `σ_min − γᵀ|ξ| > 0` for every feasible `ξ`.
pub fn check_denominator_positive(
    gamma: &Vector,
    sigma_min: f64,
    con_a: &Matrix,
    con_b: &Vector,
) -> Result<bool> {
    check_inputs(&[("gamma", gamma)], con_a, con_b)?;
    let prob = Problem { obj: Objective::Linear { w: gamma }, a: con_a, b: con_b };
    let opts = FractionalOptions::default();
    let out = branch_and_bound(&prob, &opts, |lb, ub| lb >= sigma_min || ub < sigma_min)?;
    // Either exact, or stopped with lb ≥ σ (false) or ub < σ (true); on
    // budget exhaustion `value` is an upper bound, which errs toward false.
    Ok(out.value < sigma_min && out.lower < sigma_min)
}
