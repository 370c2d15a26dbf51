use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed::{argmax_assignment, closed_form_lambda0, uniqueness_certificate, TieFlag, Uniqueness};
use super::kkt::{kkt_residuals, multipliers_from_gradient};
use super::{Backend, ComponentReport, Diagnostics, Problem, RhoPolicy, RhoSource, SolveMethod, Solution, SolverConfig};
use crate::error::{LassError, Result};
use crate::graph::{components_of, extreme_eigenvalues, operator_extreme_eigenvalues};
use crate::linsolve::{cg_solve_operator, CgConfig, ShiftedFactor, ShiftedOperator, DEFAULT_FILL_CAP};
use crate::simplex::project_in_place;
use crate::sparse::CsrMatrix;

const EIGEN_TOL: f64 = 1e-6;
const CG_LOOSE_TOL: f64 = 1e-6;
const CG_TIGHT_TOL: f64 = 1e-9;
const CG_LOOSE_ITERATIONS: usize = 100;
const UNIQUENESS_TOL: f64 = 1e-8;

/// ADMM variables. `nu` is the multiplier of the row-sum constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub z: Array2<f64>,
    pub y: Array2<f64>,
    pub u: Array2<f64>,
    pub nu: Array1<f64>,
    pub iteration: usize,
    pub last_checked_z: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// `max |Z - Z_prev|` at the last check, over the check interval.
    pub last_change: f64,
}

enum LinearBackend {
    Factor(ShiftedFactor),
    Cg,
}

/// ADMM for one LASS instance with a fixed penalty `rho`.
pub struct AdmmSolver<'p> {
    problem: &'p Problem,
    operator: CsrMatrix,
    rho: f64,
    shift: f64,
    h: Array1<f64>,
    backend: LinearBackend,
    notes: Vec<String>,
}

impl<'p> AdmmSolver<'p> {
    pub fn new(problem: &'p Problem, rho: f64, backend: Backend) -> Result<Self> {
        if !(problem.lambda() > 0.0) {
            return Err(LassError::invalid("ADMM needs lambda > 0; use the closed form at lambda = 0"));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(LassError::invalid(format!("rho must be positive, got {rho}")));
        }
        let operator = problem.operator();
        let lambda = problem.lambda();
        let shift = rho + 2.0 * problem.ridge_epsilon();
        let mut notes = Vec::new();
        let backend = match backend {
            Backend::Cg => LinearBackend::Cg,
            Backend::Cholesky => match ShiftedFactor::factorize_operator(&operator, lambda, shift, DEFAULT_FILL_CAP) {
                Ok(f) => LinearBackend::Factor(f),
                Err(LassError::FillBudgetExceeded { fill_ratio, cap }) => {
                    notes.push(format!("fill ratio {fill_ratio:.1} exceeds cap {cap}; using conjugate gradients"));
                    LinearBackend::Cg
                }
                Err(e) => return Err(e),
            },
        };
        // Row sums of the shifted operator applied to 1, minus G 1, over K.
        let k = problem.k() as f64;
        let a1 = operator.mul_vec(&vec![1.0; problem.n()]);
        let g1 = problem.g().sum_axis(Axis(1));
        let h = Array1::from_iter(a1.iter().zip(g1.iter()).map(|(a, g)| (2.0 * lambda * a + shift - g) / k));
        Ok(AdmmSolver { problem, operator, rho, shift, h, backend, notes })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            LinearBackend::Factor(_) => Backend::Cholesky,
            LinearBackend::Cg => Backend::Cg,
        }
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Cold start `Y = U = 0`, or adopt a warm `(Y, U)`.
    pub fn init_state(&self, warm: Option<(ArrayView2<'_, f64>, ArrayView2<'_, f64>)>) -> Result<SolverState> {
        let dim = (self.problem.n(), self.problem.k());
        let (y, u) = match warm {
            Some((y, u)) => {
                if y.dim() != dim || u.dim() != dim {
                    return Err(LassError::dims(format!(
                        "warm start is {:?}/{:?}, problem is {dim:?}",
                        y.dim(),
                        u.dim()
                    )));
                }
                (y.to_owned(), u.to_owned())
            }
            None => (Array2::zeros(dim), Array2::zeros(dim)),
        };
        let z = y.clone();
        Ok(SolverState {
            last_checked_z: z.clone(),
            z,
            y,
            u,
            nu: Array1::zeros(dim.0),
            iteration: 0,
        })
    }

    /// One pass of the nu, Z, Y and U updates, in that order.
    pub fn iterate(&self, state: &mut SolverState) -> Result<()> {
        let rho = self.rho;
        let k = self.problem.k() as f64;
        let g = self.problem.g();

        // nu = (rho / K)(Y - U) 1 - h
        for (n, nu) in state.nu.iter_mut().enumerate() {
            let s: f64 = state.y.row(n).iter().zip(state.u.row(n)).map(|(y, u)| y - u).sum();
            *nu = rho / k * s - self.h[n];
        }

        // Z = (2 lambda A + rho I)^-1 (rho (Y - U) + G - nu 1^T)
        let fill_rhs = |b: &mut Array2<f64>, state: &SolverState| {
            Zip::indexed(b)
                .and(&state.y)
                .and(&state.u)
                .and(&g)
                .for_each(|(n, _), b, &y, &u, &gv| *b = rho * (y - u) + gv - state.nu[n]);
        };
        match &self.backend {
            LinearBackend::Factor(f) => {
                let mut rhs = std::mem::take(&mut state.z);
                fill_rhs(&mut rhs, state);
                f.solve_in_place(&mut rhs)?;
                state.z = rhs;
            }
            LinearBackend::Cg => {
                let mut rhs = Array2::zeros(g.raw_dim());
                fill_rhs(&mut rhs, state);
                let tol = if state.iteration < CG_LOOSE_ITERATIONS { CG_LOOSE_TOL } else { CG_TIGHT_TOL };
                let cfg = CgConfig { residual_tolerance: tol, ..CgConfig::default() };
                let op = ShiftedOperator { a: &self.operator, lambda: self.problem.lambda(), rho: self.shift };
                state.z = cg_solve_operator(op, rhs.view(), Some(state.z.view()), &cfg)?.x;
            }
        }

        // Y = (Z + U)_+, U = U + Z - Y
        Zip::from(&mut state.y).and(&mut state.u).and(&state.z).for_each(|y, u, &z| {
            let s = z + *u;
            *y = s.max(0.0);
            *u = s - *y;
        });
        state.iteration += 1;
        Ok(())
    }

    /// Iterates until `max |dZ|` over `check_interval` iterations drops below
    /// `tol`, or `max_iterations` have run.
    pub fn run(&self, state: &mut SolverState, cfg: &SolverConfig) -> Result<RunOutcome> {
        cfg.validate()?;
        let mut last_change = f64::INFINITY;
        for it in 1..=cfg.max_iterations {
            self.iterate(state)?;
            if it % cfg.check_interval == 0 {
                last_change = max_abs_diff(&state.z, &state.last_checked_z);
                state.last_checked_z.assign(&state.z);
                if last_change < cfg.tol {
                    return Ok(RunOutcome { iterations: it, converged: true, last_change });
                }
            }
        }
        if !last_change.is_finite() {
            last_change = max_abs_diff(&state.z, &state.last_checked_z);
        }
        Ok(RunOutcome { iterations: cfg.max_iterations, converged: false, last_change })
    }

    /// `(pi, M) = (-nu, -rho U)`.
    pub fn multipliers(&self, state: &SolverState) -> (Array1<f64>, Array2<f64>) {
        (state.nu.mapv(|v| -v), state.u.mapv(|v| -self.rho * v))
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `2 lambda sqrt(sigma_min sigma_max)` for a problem on a connected graph.
pub fn rho_star(p: &Problem) -> Result<f64> {
    if !(p.lambda() > 0.0) {
        return Err(LassError::invalid("rho* needs lambda > 0"));
    }
    if p.anchor().is_none() && components_of(&p.laplacian().adjacency()).count() != 1 {
        return Err(LassError::invalid("rho* is defined per connected component"));
    }
    let (lo, hi) = spectrum_bounds(p)?;
    Ok(penalty_from_spectrum(p, lo, hi))
}

fn spectrum_bounds(p: &Problem) -> Result<(f64, f64)> {
    match p.anchor() {
        None => extreme_eigenvalues(p.laplacian(), EIGEN_TOL),
        Some(_) => operator_extreme_eigenvalues(&p.operator(), None, EIGEN_TOL),
    }
}

fn penalty_from_spectrum(p: &Problem, lo: f64, hi: f64) -> f64 {
    let eps = 2.0 * p.ridge_epsilon();
    let lambda2 = 2.0 * p.lambda();
    ((lambda2 * lo + eps) * (lambda2 * hi + eps)).sqrt()
}

fn choose_rho(p: &Problem, policy: RhoPolicy) -> (f64, RhoSource) {
    match policy {
        RhoPolicy::Value(r) => (r, RhoSource::Given),
        RhoPolicy::Auto => match spectrum_bounds(p) {
            Ok((lo, hi)) => {
                let r = penalty_from_spectrum(p, lo, hi);
                if r > 0.0 && r.is_finite() {
                    (r, RhoSource::Estimated { sigma_min: lo, sigma_max: hi })
                } else {
                    (1.0, RhoSource::Fallback { reason: format!("degenerate spectrum ({lo}, {hi})") })
                }
            }
            Err(e) => {
                log::warn!("rho estimation failed: {e}; using rho = 1");
                (1.0, RhoSource::Fallback { reason: e.to_string() })
            }
        },
    }
}

struct ComponentResult {
    z: Array2<f64>,
    pi: Array1<f64>,
    m: Array2<f64>,
    y: Array2<f64>,
    u: Array2<f64>,
    report: ComponentReport,
    ties: Vec<TieFlag>,
    notes: Vec<String>,
}

/// Solves a LASS problem. Disconnected graphs are solved per component;
/// `lambda = 0` uses the closed form. Non-convergence is reported through
/// `diagnostics.converged`, not as an error.
pub fn solve(
    p: &Problem,
    cfg: &SolverConfig,
    warm: Option<(ArrayView2<'_, f64>, ArrayView2<'_, f64>)>,
) -> Result<Solution> {
    cfg.validate()?;
    let dim = (p.n(), p.k());
    if let Some((y, u)) = warm {
        if y.dim() != dim || u.dim() != dim {
            return Err(LassError::dims("warm start shape differs from the problem"));
        }
    }
    if p.lambda() == 0.0 {
        if p.ridge_epsilon() == 0.0 {
            return Ok(closed_form_lambda0(p.g()));
        }
        return ridge_projection(p);
    }

    let split = components_of(&p.laplacian().adjacency());
    let results: Vec<Result<ComponentResult>> = if split.count() == 1 {
        let warm = warm.map(|(y, u)| (y.to_owned(), u.to_owned()));
        vec![solve_component(p, cfg, warm)]
    } else {
        split
            .members
            .par_iter()
            .map(|items| {
                let sub = p.restrict(items);
                let warm = warm.map(|(y, u)| (y.select(Axis(0), items), u.select(Axis(0), items)));
                solve_component(&sub, cfg, warm)
            })
            .collect()
    };

    let mut z_raw = Array2::zeros(dim);
    let mut pi = Array1::zeros(p.n());
    let mut m = Array2::zeros(dim);
    let mut y = Array2::zeros(dim);
    let mut u = Array2::zeros(dim);
    let mut components = Vec::new();
    let mut ties = Vec::new();
    let mut notes = Vec::new();
    for (c, result) in results.into_iter().enumerate() {
        let r = result?;
        let items: &[usize] = if split.count() == 1 { &[] } else { &split.members[c] };
        let global = |local: usize| if items.is_empty() { local } else { items[local] };
        for local in 0..r.z.nrows() {
            let n = global(local);
            z_raw.row_mut(n).assign(&r.z.row(local));
            m.row_mut(n).assign(&r.m.row(local));
            y.row_mut(n).assign(&r.y.row(local));
            u.row_mut(n).assign(&r.u.row(local));
            pi[n] = r.pi[local];
        }
        ties.extend(r.ties.into_iter().map(|t| TieFlag { row: global(t.row), ..t }));
        notes.extend(r.notes);
        components.push(r.report);
    }

    let raw_objective = p.objective(z_raw.view())?;
    let mut z = z_raw;
    for mut row in z.rows_mut() {
        project_in_place(row.as_slice_mut().expect("standard layout"));
    }
    let objective = p.objective(z.view())?;
    let kkt = kkt_residuals(p, z.view(), pi.view(), m.view())?;
    let strongly_convex = p.ridge_epsilon() > 0.0;
    let uniqueness = if strongly_convex {
        Uniqueness::Unique
    } else {
        combined_uniqueness(p, &split.members, z.view())
    };
    let iterations = components.iter().map(|c| c.iterations).max().unwrap_or(0);
    let converged = components.iter().all(|c| c.converged);
    if !converged {
        log::warn!("ADMM stopped after {iterations} iterations without meeting the tolerance");
    }
    Ok(Solution {
        z,
        pi,
        m,
        warm: Some((y, u)),
        diagnostics: Diagnostics {
            method: SolveMethod::Admm,
            objective,
            raw_objective,
            iterations,
            converged,
            kkt,
            ties,
            uniqueness,
            components,
            notes,
        },
    })
}

fn combined_uniqueness(p: &Problem, members: &[Vec<usize>], z: ArrayView2<'_, f64>) -> Uniqueness {
    let anchored = |items: &[usize]| match p.anchor() {
        Some(a) => items.iter().any(|&i| a[i] > 0.0),
        None => false,
    };
    let all = members.iter().all(|items| {
        anchored(items) || uniqueness_certificate(z.select(Axis(0), items).view(), UNIQUENESS_TOL) == Uniqueness::Unique
    });
    if all {
        Uniqueness::Unique
    } else {
        Uniqueness::PossiblyNonunique
    }
}

fn solve_component(p: &Problem, cfg: &SolverConfig, warm: Option<(Array2<f64>, Array2<f64>)>) -> Result<ComponentResult> {
    if p.n() == 1 {
        return Ok(solve_singleton(p));
    }
    let (rho, source) = choose_rho(p, cfg.rho);
    let solver = AdmmSolver::new(p, rho, cfg.backend)?;
    let mut state = solver.init_state(warm.as_ref().map(|(y, u)| (y.view(), u.view())))?;
    let outcome = solver.run(&mut state, cfg)?;
    let (pi, m) = solver.multipliers(&state);
    let mut notes = solver.notes().to_vec();
    if let RhoSource::Fallback { reason } = &source {
        notes.push(format!("rho fell back to 1: {reason}"));
    }
    Ok(ComponentResult {
        z: state.z,
        pi,
        m,
        y: state.y,
        u: state.u,
        report: ComponentReport {
            size: p.n(),
            rho: Some(rho),
            rho_source: Some(source),
            backend: Some(solver.backend()),
            iterations: outcome.iterations,
            converged: outcome.converged,
            last_change: outcome.last_change,
        },
        ties: Vec::new(),
        notes,
    })
}

/// An isolated item: minimize `c ||z||^2 - g^T z` on the simplex, with
/// `c = lambda * anchor + epsilon`.
fn solve_singleton(p: &Problem) -> ComponentResult {
    let c = p.lambda() * p.anchor().map_or(0.0, |a| a[0]) + p.ridge_epsilon();
    let g = p.g();
    let (z, ties) = if c > 0.0 {
        let mut v: Vec<f64> = g.row(0).iter().map(|x| x / (2.0 * c)).collect();
        project_in_place(&mut v);
        (Array2::from_shape_vec((1, v.len()), v).expect("one row"), Vec::new())
    } else {
        let a = argmax_assignment(g.row(0));
        let ties = a.tie.map(|categories| TieFlag { row: 0, categories }).into_iter().collect();
        (Array2::from_shape_vec((1, a.z.len()), a.z).expect("one row"), ties)
    };
    let grad = p.gradient(z.view()).expect("shape checked");
    let (pi, m) = multipliers_from_gradient(grad.view(), z.view());
    ComponentResult {
        y: z.clone(),
        u: Array2::zeros(z.raw_dim()),
        z,
        pi,
        m,
        report: ComponentReport {
            size: 1,
            rho: None,
            rho_source: None,
            backend: None,
            iterations: 0,
            converged: true,
            last_change: 0.0,
        },
        ties,
        notes: Vec::new(),
    }
}

/// `lambda = 0` with a ridge term: rows separate into `Pi(g / (2 epsilon))`.
fn ridge_projection(p: &Problem) -> Result<Solution> {
    let eps = p.ridge_epsilon();
    let mut z = p.g().mapv(|v| v / (2.0 * eps));
    for mut row in z.rows_mut() {
        project_in_place(row.as_slice_mut().expect("standard layout"));
    }
    let grad = p.gradient(z.view())?;
    let (pi, m) = multipliers_from_gradient(grad.view(), z.view());
    let kkt = kkt_residuals(p, z.view(), pi.view(), m.view())?;
    let objective = p.objective(z.view())?;
    Ok(Solution {
        pi,
        m,
        warm: None,
        diagnostics: Diagnostics {
            method: SolveMethod::RidgeProjection,
            objective,
            raw_objective: objective,
            iterations: 0,
            converged: true,
            kkt,
            ties: Vec::new(),
            uniqueness: Uniqueness::Unique,
            components: vec![ComponentReport {
                size: p.n(),
                rho: None,
                rho_source: None,
                backend: None,
                iterations: 0,
                converged: true,
                last_change: 0.0,
            }],
            notes: Vec::new(),
        },
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, SparseSimilarity};
    use ndarray::array;

    fn path(n: usize) -> crate::graph::GraphLaplacian {
        laplacian(&SparseSimilarity::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap(), false)
    }

    #[test]
    fn rho_star_examples() {
        let p = Problem::new(path(2), Array2::zeros((2, 2)), 1.0).unwrap();
        assert!((rho_star(&p).unwrap() - 4.0).abs() < 1e-8);
        let p = Problem::new(path(3), Array2::zeros((3, 2)), 0.5).unwrap();
        assert!((rho_star(&p).unwrap() - 3f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn cold_start_with_zero_affinity_gives_barycenter() {
        let p = Problem::new(path(4), Array2::zeros((4, 3)), 1.0).unwrap();
        let solver = AdmmSolver::new(&p, 1.0, Backend::Cholesky).unwrap();
        let mut state = solver.init_state(None).unwrap();
        solver.iterate(&mut state).unwrap();
        assert!(state.z.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn single_category_is_forced() {
        let p = Problem::new(path(3), array![[0.2], [-0.4], [1.0]], 1.0).unwrap();
        let solver = AdmmSolver::new(&p, 1.0, Backend::Cholesky).unwrap();
        let mut state = solver.init_state(None).unwrap();
        solver.iterate(&mut state).unwrap();
        assert!(state.z.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn large_rho_first_iterate_near_barycenter() {
        let g = array![[1.0, -1.0], [-0.5, 0.25], [0.0, 0.75]];
        let p = Problem::new(path(3), g, 1.0).unwrap();
        let solver = AdmmSolver::new(&p, 1e8, Backend::Cholesky).unwrap();
        let mut state = solver.init_state(None).unwrap();
        solver.iterate(&mut state).unwrap();
        assert!(state.z.iter().all(|v| (v - 0.5).abs() < 1e-7));
    }

    #[test]
    fn lambda_zero_dispatch() {
        let w = SparseSimilarity::from_edges(1, Vec::new()).unwrap();
        let p = Problem::new(laplacian(&w, false), array![[0.3, -0.1, 0.7]], 0.0).unwrap();
        let s = solve(&p, &SolverConfig::default(), None).unwrap();
        assert_eq!(s.z, array![[0.0, 0.0, 1.0]]);
        assert_eq!(s.diagnostics.method, SolveMethod::ClosedFormLambda0);
    }

    #[test]
    fn two_node_problem_converges() {
        let g = array![[1.0, -1.0], [-1.0, 1.0]];
        let p = Problem::new(path(2), g, 0.1).unwrap();
        let s = solve(&p, &SolverConfig::default(), None).unwrap();
        assert!(s.diagnostics.converged);
        // Small lambda keeps each item at its own category.
        assert!((s.z[[0, 0]] - 1.0).abs() < 1e-5 && (s.z[[1, 1]] - 1.0).abs() < 1e-5, "{}", s.z);
        assert!(s.diagnostics.kkt.stationarity < 1e-4);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let g = array![[1.0, -1.0], [-1.0, 1.0], [0.0, 0.0]];
        let p = Problem::new(path(3), g, 1.0).unwrap();
        let cfg = SolverConfig { max_iterations: 1, ..SolverConfig::default() };
        let s = solve(&p, &cfg, None).unwrap();
        assert!(!s.diagnostics.converged);
        assert_eq!(s.diagnostics.iterations, 1);
        for row in s.z.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12 && row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn disconnected_graph_matches_per_component() {
        let w = SparseSimilarity::from_edges(5, vec![(0, 1, 1.0), (1, 2, 0.5), (3, 4, 2.0)]).unwrap();
        let g = array![[0.9, -0.3], [0.1, 0.2], [-0.4, 0.6], [0.5, 0.5], [-1.0, 0.3]];
        let p = Problem::new(laplacian(&w, false), g, 0.7).unwrap();
        let cfg = SolverConfig { tol: 1e-9, ..SolverConfig::default() };
        let whole = solve(&p, &cfg, None).unwrap();
        assert_eq!(whole.diagnostics.components.len(), 2);
        for items in [vec![0, 1, 2], vec![3, 4]] {
            let part = solve(&p.restrict(&items), &cfg, None).unwrap();
            for (local, &n) in items.iter().enumerate() {
                for k in 0..2 {
                    assert!((part.z[[local, k]] - whole.z[[n, k]]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cg_backend_agrees_with_cholesky() {
        let g = array![[0.9, -0.3, 0.0], [0.1, 0.2, -0.2], [-0.4, 0.6, 0.1], [0.0, 0.0, 0.0]];
        let p = Problem::new(path(4), g, 0.3).unwrap();
        let a = solve(&p, &SolverConfig { tol: 1e-9, ..SolverConfig::default() }, None).unwrap();
        let b = solve(&p, &SolverConfig { tol: 1e-9, backend: Backend::Cg, ..SolverConfig::default() }, None).unwrap();
        assert!(max_abs_diff(&a.z, &b.z) < 1e-6);
        assert_eq!(b.diagnostics.components[0].backend, Some(Backend::Cg));
    }

    #[test]
    fn ridge_at_lambda_zero_projects_rows() {
        let w = SparseSimilarity::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        let p = Problem::new(laplacian(&w, false), array![[0.5, 0.1], [0.0, 0.0]], 0.0)
            .unwrap()
            .with_ridge(1.0)
            .unwrap();
        let s = solve(&p, &SolverConfig::default(), None).unwrap();
        assert!((s.z[[0, 0]] - 0.6).abs() < 1e-15 && (s.z[[1, 0]] - 0.5).abs() < 1e-15);
        assert!(s.diagnostics.kkt.max() < 1e-14);
    }

    #[test]
    fn warm_start_shape_is_checked() {
        let p = Problem::new(path(3), Array2::zeros((3, 2)), 1.0).unwrap();
        let bad = Array2::zeros((2, 2));
        assert!(solve(&p, &SolverConfig::default(), Some((bad.view(), bad.view()))).is_err());
    }
}
