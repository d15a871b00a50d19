//! Damped Newton solver with continuation for the radial boundary-value
//! problem `Delta_f u + Sigma(r, u) = 0`, plus manufactured-solution
//! construction.
//!
//! The Newton linear systems are tridiagonal and solved by Thomas
//! elimination. On the closed spherical model the operator annihilates
//! constants; when the Sigma_u diagonal vanishes identically the system is
//! gauged by pinning the update at the middle node (the pole rows carry
//! negligible discrete measure, so pinning there would leave the system
//! numerically singular).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid_ops::{assemble_witten, DiscreteOperator, Field, RadialGrid};
use crate::model_space::ModelSpace;
use crate::nonlinearity::NonlinearityFamily;
use crate::profiles::{RadialProfile, SmoothProfile};

/// Radii below this are treated as the pole by the manufactured source.
const POLE_EPS: f64 = 1e-9;

/// A converged iterate whose sup norm falls below this fraction of the
/// initial guess is reported as a collapse toward the trivial zero state.
const COLLAPSE_FRACTION: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum BoundaryCondition {
    /// Dirichlet value u(r_max) = value > 0 on open models.
    Dirichlet { value: f64 },
    /// Closed spherical model: both poles are smooth interior points.
    ClosedPoles,
}

#[derive(Clone, Debug)]
pub enum InitialGuess {
    Constant(f64),
    Supplied(Field),
}

#[derive(Clone, Debug)]
pub struct BVPProblem {
    pub space: ModelSpace,
    pub family: NonlinearityFamily,
    pub boundary: BoundaryCondition,
    pub initial: InitialGuess,
}

impl BVPProblem {
    pub fn new(
        space: ModelSpace,
        family: NonlinearityFamily,
        boundary: BoundaryCondition,
    ) -> Result<Self> {
        match &boundary {
            BoundaryCondition::Dirichlet { value } => {
                if space.is_closed() {
                    return Err(Error::InvalidParams(
                        "closed spherical models take no Dirichlet data".into(),
                    ));
                }
                if !(*value > 0.0) {
                    return Err(Error::NonPositiveValue(*value));
                }
            }
            BoundaryCondition::ClosedPoles => {
                if !space.is_closed() {
                    return Err(Error::InvalidParams(
                        "pole-symmetry boundary requires the closed spherical model".into(),
                    ));
                }
            }
        }
        let initial = match &boundary {
            BoundaryCondition::Dirichlet { value } => InitialGuess::Constant(*value),
            BoundaryCondition::ClosedPoles => InitialGuess::Constant(1.0),
        };
        Ok(BVPProblem { space, family, boundary, initial })
    }

    pub fn with_initial_guess(mut self, initial: InitialGuess) -> Self {
        self.initial = initial;
        self
    }

    fn initial_field(&self, grid: &Arc<RadialGrid>) -> Result<Field> {
        let field = match &self.initial {
            InitialGuess::Constant(c) => Field::constant(grid, *c),
            InitialGuess::Supplied(f) => {
                if f.grid().len() != grid.len() {
                    return Err(Error::InvalidGrid(
                        "initial guess field does not match the solve grid".into(),
                    ));
                }
                f.clone()
            }
        };
        field.require_positive()?;
        Ok(field)
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Residual sup-norm target.
    pub newton_tol: f64,
    /// Newton iteration cap per continuation step.
    pub max_iter: usize,
    /// Backtracking halvings before giving up on a step.
    pub max_halvings: usize,
    /// Number of equal continuation steps in t scaling Sigma, t: 0 -> 1.
    pub continuation_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            max_iter: 50,
            max_halvings: 20,
            continuation_steps: 1,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || self.max_iter == 0 || self.continuation_steps == 0 {
            return Err(Error::InvalidParams(
                "solver configuration values must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: Field,
    pub residual_norm: f64,
    pub iterations: usize,
    pub positive: bool,
    pub converged: bool,
    /// Residual norms of the final continuation step, starting with the
    /// initial residual.
    pub residual_history: Vec<f64>,
}

/// Node-wise residual of the full problem (t = 1), boundary rows replaced by
/// boundary residuals.
pub fn residual(problem: &BVPProblem, u: &Field) -> Result<Field> {
    let op = assemble_witten(&problem.space, u.grid());
    residual_scaled(problem, &op, u, 1.0)
}

fn residual_scaled(
    problem: &BVPProblem,
    op: &DiscreteOperator,
    u: &Field,
    t: f64,
) -> Result<Field> {
    u.require_positive()?;
    let grid = u.grid();
    let lap = op.apply(u);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let sigma = problem.family.sigma(grid.node(i), u.values()[i])?;
        values.push(lap.values()[i] + t * sigma);
    }
    if let BoundaryCondition::Dirichlet { value } = problem.boundary {
        let n = grid.len() - 1;
        values[n] = u.values()[n] - value;
    }
    Field::new(Arc::clone(grid), values)
}

/// Thomas elimination for a tridiagonal system. `lower[0]` and
/// `upper[last]` are ignored.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut den = diag[0];
    if !den.is_finite() || den == 0.0 {
        return Err(Error::SingularSystem(0));
    }
    c[0] = upper[0] / den;
    d[0] = rhs[0] / den;
    for i in 1..n {
        den = diag[i] - lower[i] * c[i - 1];
        if !den.is_finite() || den == 0.0 {
            return Err(Error::SingularSystem(i));
        }
        if i < n - 1 {
            c[i] = upper[i] / den;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Damped Newton with continuation. A converged result is strictly positive
/// and its re-inserted residual sup norm is at most `newton_tol`.
pub fn solve_newton(
    problem: &BVPProblem,
    grid: &Arc<RadialGrid>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let op = assemble_witten(&problem.space, grid);
    let mut u = problem.initial_field(grid)?;
    let initial_sup = u.sup_norm();
    let n = grid.len() - 1;
    let mut total_iterations = 0usize;
    let mut history = Vec::new();
    let mut final_norm = f64::INFINITY;

    for step in 1..=config.continuation_steps {
        let t = step as f64 / config.continuation_steps as f64;
        let last = step == config.continuation_steps;
        let mut iters_here = 0usize;
        loop {
            let res = residual_scaled(problem, &op, &u, t)?;
            let norm = res.sup_norm();
            if !norm.is_finite() {
                return Err(Error::NonConvergence {
                    reason: "residual became non-finite".into(),
                    residual: norm,
                    iterations: total_iterations,
                });
            }
            if last {
                history.push(norm);
                final_norm = norm;
            }
            if norm <= config.newton_tol {
                break;
            }
            if iters_here >= config.max_iter {
                return Err(Error::NonConvergence {
                    reason: format!("iteration cap reached at continuation t = {t}"),
                    residual: norm,
                    iterations: total_iterations,
                });
            }

            let (lo, di, up) = op.bands();
            let mut lower = lo.to_vec();
            let mut diag = di.to_vec();
            let mut upper = up.to_vec();
            let mut rhs: Vec<f64> = res.values().iter().map(|&v| -v).collect();
            let mut sigma_u_sup: f64 = 0.0;
            for i in 0..=n {
                let jet = problem.family.sigma_jet(grid.node(i), u.values()[i])?;
                diag[i] += t * jet.sigma_u;
                sigma_u_sup = sigma_u_sup.max((t * jet.sigma_u).abs());
            }
            match problem.boundary {
                BoundaryCondition::Dirichlet { .. } => {
                    lower[n] = 0.0;
                    diag[n] = 1.0;
                    upper[n] = 0.0;
                }
                BoundaryCondition::ClosedPoles => {
                    if sigma_u_sup < 1e-12 {
                        // singular up to the constant kernel: gauge the update
                        let mid = n / 2;
                        lower[mid] = 0.0;
                        diag[mid] = 1.0;
                        upper[mid] = 0.0;
                        rhs[mid] = 0.0;
                    }
                }
            }

            let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs).map_err(|e| {
                Error::NonConvergence {
                    reason: format!("Newton linear solve failed: {e}"),
                    residual: norm,
                    iterations: total_iterations,
                }
            })?;

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=config.max_halvings {
                let candidate = Field::new(
                    Arc::clone(grid),
                    u.values()
                        .iter()
                        .zip(&delta)
                        .map(|(&ui, &di)| ui + lambda * di)
                        .collect(),
                )?;
                if candidate.is_strictly_positive() {
                    let trial = residual_scaled(problem, &op, &candidate, t)?;
                    let trial_norm = trial.sup_norm();
                    if trial_norm.is_finite() && trial_norm < norm {
                        accepted = Some(candidate);
                        break;
                    }
                }
                lambda *= 0.5;
            }
            u = accepted.ok_or(Error::NonConvergence {
                reason: "damping exhausted without residual decrease".into(),
                residual: norm,
                iterations: total_iterations,
            })?;
            total_iterations += 1;
            iters_here += 1;

            if u.sup_norm() < COLLAPSE_FRACTION * initial_sup {
                return Err(Error::NonConvergence {
                    reason: "iterates collapsed toward the trivial zero state".into(),
                    residual: norm,
                    iterations: total_iterations,
                });
            }
        }
    }

    Ok(SolveResult {
        residual_norm: final_norm,
        iterations: total_iterations,
        positive: u.is_strictly_positive(),
        converged: true,
        residual_history: history,
        u,
    })
}

/// Builds the spatial source `Sigma(r) = -Delta_f u_exact(r)` so that
/// u_exact solves the equation exactly, returning the family and the nodal
/// field of u_exact.
pub fn manufacture(
    space: &ModelSpace,
    u_exact: &SmoothProfile,
    grid: &Arc<RadialGrid>,
) -> Result<(NonlinearityFamily, Field)> {
    if u_exact.deriv(0.0, 1).abs() > 1e-12 {
        return Err(Error::Precondition(
            "manufactured profile must satisfy u'(0) = 0".into(),
        ));
    }
    let field = Field::from_fn(grid, |r| u_exact.eval(r));
    field.require_positive()?;

    let source = if u_exact.is_constant() {
        RadialProfile::Constant(0.0)
    } else {
        let nf = space.nf();
        let warp = space.warp();
        let weight = space.weight().clone();
        let profile = *u_exact;

        // drift coefficient c = (n-1) phi'/phi - f' and its first two
        // derivatives via psi = phi'/phi
        let coef = move |r: f64, order: usize| -> f64 {
            let psi = warp.dphi(r) / warp.phi(r);
            match order {
                0 => (nf - 1.0) * psi - weight.df(r),
                1 => {
                    let dpsi = warp.ddphi(r) / warp.phi(r) - psi * psi;
                    (nf - 1.0) * dpsi - weight.ddf(r)
                }
                _ => {
                    let dpsi = warp.ddphi(r) / warp.phi(r) - psi * psi;
                    let ddpsi = warp.dddphi(r) / warp.phi(r) - 3.0 * psi * dpsi - psi * psi * psi;
                    (nf - 1.0) * ddpsi - weight.dddf(r)
                }
            }
        };
        // pole limits in terms of u''(0), u''''(0), phi'''(0), f''(0)
        let u2 = u_exact.deriv(0.0, 2);
        let u4 = u_exact.deriv(0.0, 4);
        let p3 = space.warp().phi_ppp0();
        let f2 = space.weight().ddf(0.0);
        let sigma0 = -nf * u2;
        let sigma0_dd = -((nf + 2.0) * u4 / 3.0 + (2.0 * (nf - 1.0) * p3 / 3.0 - 2.0 * f2) * u2);

        let value = {
            let coef = coef.clone();
            move |r: f64| -> f64 {
                if r < POLE_EPS {
                    sigma0
                } else {
                    -(profile.deriv(r, 2) + coef(r, 0) * profile.deriv(r, 1))
                }
            }
        };
        let d1 = {
            let coef = coef.clone();
            move |r: f64| -> f64 {
                if r < POLE_EPS {
                    0.0
                } else {
                    -(profile.deriv(r, 3)
                        + coef(r, 1) * profile.deriv(r, 1)
                        + coef(r, 0) * profile.deriv(r, 2))
                }
            }
        };
        let d2 = move |r: f64| -> f64 {
            if r < POLE_EPS {
                sigma0_dd
            } else {
                -(profile.deriv(r, 4)
                    + coef(r, 2) * profile.deriv(r, 1)
                    + 2.0 * coef(r, 1) * profile.deriv(r, 2)
                    + coef(r, 0) * profile.deriv(r, 3))
            }
        };
        RadialProfile::Custom {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    };

    Ok((NonlinearityFamily::SpatialSource { source }, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PowerTerm;
    use crate::profiles::{Warp, Weight};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn flat(n: usize, r_max: f64) -> ModelSpace {
        ModelSpace::new(n, n as f64, Warp::Euclidean, Weight::Constant { value: 0.0 }, r_max)
            .unwrap()
    }

    fn sphere(n: usize) -> ModelSpace {
        ModelSpace::new(n, n as f64, Warp::Spherical, Weight::Constant { value: 0.0 }, PI)
            .unwrap()
    }

    #[test]
    fn thomas_reproduces_known_solution() {
        // A x = rhs with x chosen, A diagonally dominant
        let n = 40;
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -1.0 }).collect();
        let diag = vec![4.0; n];
        let upper: Vec<f64> = (0..n).map(|i| if i == n - 1 { 0.0 } else { -1.5 }).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += lower[i] * x_true[i - 1];
            }
            if i < n - 1 {
                rhs[i] += upper[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn problem_construction_invariants() {
        assert!(BVPProblem::new(
            sphere(3),
            NonlinearityFamily::zero(),
            BoundaryCondition::Dirichlet { value: 1.0 }
        )
        .is_err());
        assert!(BVPProblem::new(
            flat(3, 2.0),
            NonlinearityFamily::zero(),
            BoundaryCondition::ClosedPoles
        )
        .is_err());
        assert!(BVPProblem::new(
            flat(3, 2.0),
            NonlinearityFamily::zero(),
            BoundaryCondition::Dirichlet { value: -1.0 }
        )
        .is_err());
    }

    #[test]
    fn residual_trivial_cases() {
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let problem = BVPProblem::new(
            flat(3, 2.0),
            NonlinearityFamily::zero(),
            BoundaryCondition::Dirichlet { value: 3.0 },
        )
        .unwrap();
        let u = Field::constant(&grid, 3.0);
        assert_eq!(residual(&problem, &u).unwrap().sup_norm(), 0.0);

        // u = 1, Sigma = u: residual 1 at interior rows
        let problem = BVPProblem::new(
            flat(3, 2.0),
            NonlinearityFamily::PowerSum { terms: vec![PowerTerm::constant(1.0, 1.0)] },
            BoundaryCondition::Dirichlet { value: 1.0 },
        )
        .unwrap();
        let u = Field::constant(&grid, 1.0);
        let res = residual(&problem, &u).unwrap();
        for i in 0..grid.len() - 1 {
            assert!((res.values()[i] - 1.0).abs() < 1e-12);
        }
        assert_eq!(res.values()[grid.len() - 1], 0.0);

        let negative = Field::constant(&grid, -1.0);
        assert!(residual(&problem, &negative).is_err());
    }

    #[test]
    fn exact_constant_zero_of_sigma() {
        // Sigma = u - 1, boundary 1: u = 1 is the exact solution
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let problem = BVPProblem::new(
            flat(3, 2.0),
            NonlinearityFamily::PowerSum {
                terms: vec![PowerTerm::constant(1.0, 1.0), PowerTerm::constant(-1.0, 0.0)],
            },
            BoundaryCondition::Dirichlet { value: 1.0 },
        )
        .unwrap();
        let result = solve_newton(&problem, &grid, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 0);
        for &v in result.u.values() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn closed_model_harmonic_is_constant() {
        // Sigma = 0 on the sphere: Newton lands on a constant (the kernel of
        // the drift Laplacian on a closed model is the constants)
        let grid = RadialGrid::new(PI, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let noise: Vec<f64> = (0..grid.len()).map(|_| 1.0 + 0.2 * rng.gen_range(-1.0..1.0)).collect();
        let initial = Field::new(Arc::clone(&grid), noise).unwrap();
        let problem = BVPProblem::new(
            sphere(3),
            NonlinearityFamily::zero(),
            BoundaryCondition::ClosedPoles,
        )
        .unwrap()
        .with_initial_guess(InitialGuess::Supplied(initial));
        let result = solve_newton(&problem, &grid, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert!(result.residual_norm <= 1e-10);
        let spread = result.u.max() - result.u.min();
        assert!(spread < 1e-8 * result.u.max(), "spread {spread}");
    }

    #[test]
    fn manufactured_solution_recovery_is_second_order() {
        let space = ModelSpace::new(3, 8.0, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, 2.0)
            .unwrap();
        let profile = SmoothProfile::Cosine { a: 2.0, b: 1.0 };
        let mut errs = Vec::new();
        for intervals in [128usize, 256, 512] {
            let grid = RadialGrid::new(2.0, intervals).unwrap();
            let (family, exact) = manufacture(&space, &profile, &grid).unwrap();
            let problem = BVPProblem::new(
                space.clone(),
                family,
                BoundaryCondition::Dirichlet { value: profile.eval(2.0) },
            )
            .unwrap();
            let result = solve_newton(&problem, &grid, &SolverConfig::default()).unwrap();
            let err = result
                .u
                .zip_with(&exact, |a, b| a - b)
                .sup_norm();
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..=4.4).contains(&ratio), "errors {errs:?}");
        }
    }

    #[test]
    fn converged_residual_satisfies_tolerance() {
        let space = ModelSpace::new(3, 8.0, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, 2.0)
            .unwrap();
        let grid = RadialGrid::new(2.0, 512).unwrap();
        let problem = BVPProblem::new(
            space,
            NonlinearityFamily::PowerSum { terms: vec![PowerTerm::constant(1.0, 0.5)] },
            BoundaryCondition::Dirichlet { value: 1.0 },
        )
        .unwrap();
        let result = solve_newton(&problem, &grid, &SolverConfig::default()).unwrap();
        assert!(result.converged && result.positive);
        let reinserted = residual(&problem, &result.u).unwrap();
        assert!(reinserted.sup_norm() <= 1e-10);
        // quadratic tail: r_{k+1} <= C r_k^2 for small residuals above the
        // linear-solve roundoff floor, with C read off the run itself
        let hist = &result.residual_history;
        let mut c_run: f64 = 0.0;
        let mut pairs = 0;
        for w in hist.windows(2) {
            if w[0] < 1e-2 && w[1] > 1e-9 {
                c_run = c_run.max(w[1] / (w[0] * w[0]));
                pairs += 1;
            }
        }
        assert!(pairs >= 1, "history {hist:?}");
        assert!(c_run.is_finite() && c_run < 1e3, "C = {c_run}, history {hist:?}");
    }

    #[test]
    fn nonexistence_on_sphere_reports_nonconvergence() {
        // Sigma = u^{1/2} > 0 has no positive zeros; on the closed model the
        // solve must fail rather than fabricate a solution
        let grid = RadialGrid::new(PI, 128).unwrap();
        let problem = BVPProblem::new(
            sphere(3),
            NonlinearityFamily::PowerSum { terms: vec![PowerTerm::constant(1.0, 0.5)] },
            BoundaryCondition::ClosedPoles,
        )
        .unwrap();
        match solve_newton(&problem, &grid, &SolverConfig::default()) {
            Err(Error::NonConvergence { .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn manufacture_examples() {
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let space = flat(3, 2.0);

        // constant profile: source is identically zero
        let (family, field) = manufacture(&space, &SmoothProfile::Constant(1.0), &grid).unwrap();
        assert_eq!(family.sigma(0.7, 1.0).unwrap(), 0.0);
        assert!(field.values().iter().all(|&v| v == 1.0));

        // u = 2 + cos r on flat space: Sigma(r) = cos r + (n-1) sin r / r
        let (family, _) =
            manufacture(&space, &SmoothProfile::Cosine { a: 2.0, b: 1.0 }, &grid).unwrap();
        for r in [0.3_f64, 1.0, 1.9] {
            let expect = r.cos() + 2.0 * r.sin() / r;
            assert!((family.sigma(r, 1.0).unwrap() - expect).abs() < 1e-12, "r = {r}");
        }
        // pole limit: -n u''(0) = n
        assert!((family.sigma(0.0, 1.0).unwrap() - 3.0).abs() < 1e-14);

        // gaussian-weight case cross-checked against the assembled operator
        let space = ModelSpace::new(3, 8.0, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, 2.0)
            .unwrap();
        let grid = RadialGrid::new(2.0, 512).unwrap();
        let (family, exact) =
            manufacture(&space, &SmoothProfile::Cosine { a: 2.0, b: 1.0 }, &grid).unwrap();
        let lap = assemble_witten(&space, &grid).apply(&exact);
        for i in 0..grid.len() {
            let sigma = family.sigma(grid.node(i), 1.0).unwrap();
            assert!(
                (lap.values()[i] + sigma).abs() < 5e-4,
                "node {i}: {} vs {}",
                lap.values()[i],
                -sigma
            );
        }
    }

    #[test]
    fn manufactured_source_derivatives_consistent() {
        // the Custom profile's d1/d2 match finite differences of its value
        let space = ModelSpace::new(3, 8.0, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, 2.0)
            .unwrap();
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let (family, _) =
            manufacture(&space, &SmoothProfile::Cosine { a: 2.0, b: 1.0 }, &grid).unwrap();
        let source = match &family {
            NonlinearityFamily::SpatialSource { source } => source,
            _ => unreachable!(),
        };
        let h = 1e-5;
        for r in [0.2, 0.9, 1.7] {
            let fd1 = (source.eval(r + h) - source.eval(r - h)) / (2.0 * h);
            assert!((fd1 - source.d1(r)).abs() < 1e-6 * (1.0 + fd1.abs()), "d1 at {r}");
            let fd2 = (source.d1(r + h) - source.d1(r - h)) / (2.0 * h);
            assert!((fd2 - source.d2(r)).abs() < 1e-6 * (1.0 + fd2.abs()), "d2 at {r}");
        }
        // pole limits agree with small-r evaluations
        assert!((source.eval(1e-7) - source.eval(0.0)).abs() < 1e-6);
        assert!(source.d1(0.0).abs() < 1e-14);
        let near = 1e-4;
        let fd2_pole = (source.d1(near) - source.d1(0.0)) / near;
        assert!(
            (fd2_pole - source.d2(0.0)).abs() < 1e-3 * (1.0 + fd2_pole.abs()),
            "{fd2_pole} vs {}",
            source.d2(0.0)
        );
    }

    #[test]
    fn continuation_reaches_stiff_nonlinearity() {
        // negative exponent (thin-film type): plain Newton from a constant is
        // fragile, continuation in t is the documented route
        let space = flat(3, 1.0);
        let grid = RadialGrid::new(1.0, 128).unwrap();
        let problem = BVPProblem::new(
            space,
            NonlinearityFamily::PowerSum { terms: vec![PowerTerm::constant(-0.5, -2.0)] },
            BoundaryCondition::Dirichlet { value: 1.0 },
        )
        .unwrap();
        let config = SolverConfig { continuation_steps: 8, ..SolverConfig::default() };
        let result = solve_newton(&problem, &grid, &config).unwrap();
        assert!(result.converged && result.positive);
        assert!(result.residual_norm <= 1e-10);
    }
}
