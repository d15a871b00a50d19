//! Assembly and verification of the main inequalities: the local and global
//! gradient estimates, the Harnack inequality with its explicit constant, and
//! the Liouville conclusion.
//!
//! The local bound checked on a ball of radius R is
//!
//! ```text
//! |grad u|^2/(mu u^2) + Sigma/u
//!   <= m mu/(2R^2) [ c2 + (m-1) c1 (1 + R sqrt(k)) + 2 c1^2
//!                    + m c1^2 mu^2/(4(mu-1)) ]
//!    + sqrt(m)/2 [ m mu^2 A^2/((1-eps)(mu-1)^2)
//!                  + (27 m mu^2 B^4/(4 eps (mu-1)^2))^{1/3}
//!                  + 2 mu C ]^{1/2}
//!    + m mu/2 sup (u Sigma_u - Sigma)_+/u ,
//! ```
//!
//! with A, B, C the sup constants assembled in [`SupInfBundle`]. Suprema are
//! grid suprema; every report records the grid resolution so tolerances stay
//! tied to the measured h^2 discretization error.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_ops::{derivative, gradient_norm, trapezoid, Field};
use crate::inequality_kernel::{quintic_cutoff, CutoffProfile};
use crate::model_space::ModelSpace;
use crate::nonlinearity::{liouville_conditions, LiouvilleVerdict, NonlinearityFamily};

/// Grid resolution used when the curvature lower bound is derived from the
/// space inside a constructor.
const CURVATURE_RESOLUTION: usize = 2048;

fn cutoff_constants() -> &'static CutoffProfile {
    static CUTOFF: OnceLock<CutoffProfile> = OnceLock::new();
    CUTOFF.get_or_init(quintic_cutoff)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EstimateParams {
    pub mu: f64,
    pub eps: f64,
    /// Ball radius R; suprema run over B_2R, the estimate is checked on B_R.
    pub radius: f64,
    pub c1: f64,
    pub c2: f64,
    pub m: f64,
    pub k: f64,
}

impl EstimateParams {
    /// Parameters for the local estimate: k is the curvature lower-bound
    /// constant over [0, 2R].
    pub fn local(space: &ModelSpace, mu: f64, eps: f64, radius: f64) -> Result<Self> {
        Self::validate(mu, eps)?;
        if !(radius > 0.0) || 2.0 * radius > space.r_max() * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "ball radius {radius} must satisfy 0 < 2R <= r_max = {}",
                space.r_max()
            )));
        }
        let k = space.curvature_lower_bound(2.0 * radius, CURVATURE_RESOLUTION)?;
        let cutoff = cutoff_constants();
        Ok(EstimateParams { mu, eps, radius, c1: cutoff.c1, c2: cutoff.c2, m: space.m(), k })
    }

    /// Parameters for the global estimate on the closed model: k over the
    /// whole domain and R spanning it (the geometric block is absent anyway).
    pub fn global(space: &ModelSpace, mu: f64, eps: f64) -> Result<Self> {
        Self::validate(mu, eps)?;
        let k = space.curvature_lower_bound(space.r_max(), CURVATURE_RESOLUTION)?;
        let cutoff = cutoff_constants();
        Ok(EstimateParams {
            mu,
            eps,
            radius: space.r_max() / 2.0,
            c1: cutoff.c1,
            c2: cutoff.c2,
            m: space.m(),
            k,
        })
    }

    fn validate(mu: f64, eps: f64) -> Result<()> {
        if !(mu > 1.0) {
            return Err(Error::InvalidParams(format!("mu = {mu} must exceed 1")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParams(format!("eps = {eps} must lie in (0,1)")));
        }
        Ok(())
    }
}

/// Sup/inf constants of the estimate, taken over grid nodes:
/// A over B_2R of `[2(m-1)k u + (-Sigma + u Sigma_u - mu u^2 Sigma_uu)_+]/(2u)`,
/// B over B_2R of `|Sigma_x - mu u Sigma_xu|/u`,
/// C over B_2R of `(-Delta_f Sigma^x)_+/u`,
/// the growth sup over B_2R of `(u Sigma_u - Sigma)_+/u`,
/// and the inf over B_R of `(Sigma)_-/u` (nonpositive by construction).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupInfBundle {
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub c_sigma: f64,
    pub sup_growth: f64,
    pub inf_neg_sigma: f64,
}

pub fn sup_inf_bundle(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    params: &EstimateParams,
) -> Result<SupInfBundle> {
    u.require_positive()?;
    let grid = u.grid();
    let outer = grid.last_node_within(2.0 * params.radius);
    let inner = grid.last_node_within(params.radius);
    let (m, mu, k) = (params.m, params.mu, params.k);

    let mut a_sigma: f64 = 0.0;
    let mut b_sigma: f64 = 0.0;
    let mut c_sigma: f64 = 0.0;
    let mut sup_growth: f64 = 0.0;
    let mut inf_neg: f64 = 0.0;
    for i in 0..=outer {
        let r = grid.node(i);
        let ui = u.values()[i];
        let jet = family.sigma_jet(r, ui)?;
        let convexity = -jet.sigma + ui * jet.sigma_u - mu * ui * ui * jet.sigma_uu;
        a_sigma = a_sigma.max((2.0 * (m - 1.0) * k * ui + convexity.max(0.0)) / (2.0 * ui));
        b_sigma = b_sigma.max((jet.sigma_x - mu * ui * jet.sigma_xu).abs() / ui);
        let lap_sigma_x = family.sigma_x_drift_laplacian(space, r, ui)?;
        c_sigma = c_sigma.max((-lap_sigma_x).max(0.0) / ui);
        sup_growth = sup_growth.max((ui * jet.sigma_u - jet.sigma).max(0.0) / ui);
        if i <= inner {
            inf_neg = inf_neg.min(jet.sigma.min(0.0) / ui);
        }
    }
    Ok(SupInfBundle {
        a_sigma,
        b_sigma,
        c_sigma,
        sup_growth,
        inf_neg_sigma: inf_neg,
    })
}

/// The three summands of the estimate's right-hand side.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhsParts {
    pub geometric: f64,
    pub sqrt_block: f64,
    pub growth: f64,
    pub total: f64,
}

fn sqrt_block_inner(bundle: &SupInfBundle, params: &EstimateParams) -> f64 {
    let (m, mu, eps) = (params.m, params.mu, params.eps);
    let mm1 = mu - 1.0;
    let a2 = bundle.a_sigma * bundle.a_sigma;
    let b4 = bundle.b_sigma.powi(4);
    m * mu * mu * a2 / ((1.0 - eps) * mm1 * mm1)
        + (27.0 * m * mu * mu * b4 / (4.0 * eps * mm1 * mm1)).powf(1.0 / 3.0)
        + 2.0 * mu * bundle.c_sigma
}

/// Right-hand side of the local estimate.
pub fn local_rhs(bundle: &SupInfBundle, params: &EstimateParams) -> RhsParts {
    let (m, mu, r) = (params.m, params.mu, params.radius);
    let geometric = m * mu / (2.0 * r * r)
        * ((params.c2
            + (m - 1.0) * params.c1 * (1.0 + r * params.k.sqrt())
            + 2.0 * params.c1 * params.c1)
            + m * params.c1 * params.c1 * mu * mu / (4.0 * (mu - 1.0)));
    let sqrt_block = 0.5 * m.sqrt() * sqrt_block_inner(bundle, params).sqrt();
    let growth = 0.5 * m * mu * bundle.sup_growth;
    RhsParts { geometric, sqrt_block, growth, total: geometric + sqrt_block + growth }
}

/// Right-hand side of the global estimate: the geometric 1/R^2 block is
/// absent, suprema having been taken over the whole space.
pub fn global_rhs(bundle: &SupInfBundle, params: &EstimateParams) -> RhsParts {
    let sqrt_block = 0.5 * params.m.sqrt() * sqrt_block_inner(bundle, params).sqrt();
    let growth = 0.5 * params.m * params.mu * bundle.sup_growth;
    RhsParts { geometric: 0.0, sqrt_block, growth, total: sqrt_block + growth }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub kind: &'static str,
    pub params: EstimateParams,
    pub bundle: SupInfBundle,
    pub rhs: RhsParts,
    pub max_lhs: f64,
    pub witness_r: f64,
    pub min_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub grid_intervals: usize,
    pub grid_h: f64,
    /// Number of nodes the estimate was checked on (the lhs field is
    /// zero-padded past this index).
    pub lhs_nodes: usize,
    #[serde(skip)]
    pub lhs: Option<Field>,
}

fn estimate_lhs(
    u: &Field,
    family: &NonlinearityFamily,
    mu: f64,
    last_node: usize,
) -> Result<Vec<f64>> {
    let grad = gradient_norm(u);
    let mut lhs = Vec::with_capacity(last_node + 1);
    for i in 0..=last_node {
        let ui = u.values()[i];
        let sigma = family.sigma(u.grid().node(i), ui)?;
        let g = grad.values()[i];
        lhs.push(g * g / (mu * ui * ui) + sigma / ui);
    }
    Ok(lhs)
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    kind: &'static str,
    u: &Field,
    family: &NonlinearityFamily,
    params: &EstimateParams,
    bundle: SupInfBundle,
    rhs: RhsParts,
    last_node: usize,
    c_tol: f64,
) -> Result<EstimateReport> {
    let grid = u.grid();
    let lhs = estimate_lhs(u, family, params.mu, last_node)?;
    let mut max_lhs = f64::NEG_INFINITY;
    let mut witness = 0usize;
    for (i, &v) in lhs.iter().enumerate() {
        if v > max_lhs {
            max_lhs = v;
            witness = i;
        }
    }
    let h = grid.h();
    let tolerance = c_tol * h * h * (1.0 + rhs.total.abs());
    let min_slack = rhs.total - max_lhs;
    let lhs_field = Field::new(
        std::sync::Arc::clone(grid),
        lhs.iter()
            .copied()
            .chain(std::iter::repeat(0.0))
            .take(grid.len())
            .collect(),
    )?;
    Ok(EstimateReport {
        kind,
        params: *params,
        bundle,
        rhs,
        max_lhs,
        witness_r: grid.node(witness),
        min_slack,
        tolerance,
        pass: min_slack >= -tolerance,
        grid_intervals: grid.len() - 1,
        grid_h: h,
        lhs_nodes: last_node + 1,
        lhs: Some(lhs_field),
    })
}

/// Checks the local estimate on B_R for a positive solution on B_2R.
pub fn check_local_estimate(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    params: &EstimateParams,
    c_tol: f64,
) -> Result<EstimateReport> {
    let bundle = sup_inf_bundle(u, family, space, params)?;
    let rhs = local_rhs(&bundle, params);
    let inner = u.grid().last_node_within(params.radius);
    build_report("local", u, family, params, bundle, rhs, inner, c_tol)
}

/// Checks the global estimate on the closed spherical model; suprema run over
/// the whole domain. Open models are rejected: with a boundary the global
/// hypotheses (completeness, bounds on all of the space) do not hold.
pub fn check_global_estimate(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    params: &EstimateParams,
    c_tol: f64,
) -> Result<EstimateReport> {
    if !space.is_closed() {
        return Err(Error::RequiresClosedModel);
    }
    let whole = EstimateParams { radius: space.r_max() / 2.0, ..*params };
    let bundle = sup_inf_bundle(u, family, space, &whole)?;
    let rhs = global_rhs(&bundle, &whole);
    let last = u.grid().len() - 1;
    build_report("global", u, family, &whole, bundle, rhs, last, c_tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnackReport {
    pub h_const: f64,
    pub grad_sup: f64,
    pub grad_bound_slack: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub supinf_slack: f64,
    pub quadrature_gap: f64,
    pub quadrature_tol: f64,
    pub tolerance: f64,
    pub pass_grad: bool,
    pub pass_supinf: bool,
    pub pass_quadrature: bool,
    pub pass: bool,
}

/// Harnack inequality on B_R: assembles the constant
///
/// ```text
/// H = m mu^2/(2R^2) [ geometric bracket ]
///   + sqrt(m) mu/2 [ sqrt block ]^{1/2}
///   + m mu^2 sup_{B_2R} (u Sigma_u - Sigma)_+/(2u)
///   - mu inf_{B_R} (Sigma)_-/u
/// ```
///
/// and checks (i) `sup_{B_R} |grad u|^2/u^2 <= H`, (ii)
/// `sup_{B_R} u <= e^{2R sqrt(H)} inf_{B_R} u`, and (iii) that integrating
/// u'/u between the extremal radii reproduces the log ratio to O(h^2) (the
/// geodesic-integration step behind (ii)).
///
/// Note the deliberate asymmetry: the inf runs over B_R while every sup in
/// the bundle runs over B_2R, exactly as the constant is stated.
pub fn harnack(
    u: &Field,
    _family: &NonlinearityFamily,
    _space: &ModelSpace,
    params: &EstimateParams,
    bundle: &SupInfBundle,
    c_tol: f64,
) -> Result<HarnackReport> {
    u.require_positive()?;
    let grid = u.grid();
    let inner = grid.last_node_within(params.radius);
    let (m, mu, r) = (params.m, params.mu, params.radius);

    let geometric_bracket = (params.c2
        + (m - 1.0) * params.c1 * (1.0 + r * params.k.sqrt())
        + 2.0 * params.c1 * params.c1)
        + m * params.c1 * params.c1 * mu * mu / (4.0 * (mu - 1.0));
    let h_const = m * mu * mu / (2.0 * r * r) * geometric_bracket
        + 0.5 * m.sqrt() * mu * sqrt_block_inner(bundle, params).sqrt()
        + 0.5 * m * mu * mu * bundle.sup_growth
        - mu * bundle.inf_neg_sigma;

    let grad = gradient_norm(u);
    let mut grad_sup: f64 = 0.0;
    let mut sup_u = f64::NEG_INFINITY;
    let mut inf_u = f64::INFINITY;
    let mut arg_sup = 0usize;
    let mut arg_inf = 0usize;
    for i in 0..=inner {
        let ratio = grad.values()[i] / u.values()[i];
        grad_sup = grad_sup.max(ratio * ratio);
        if u.values()[i] > sup_u {
            sup_u = u.values()[i];
            arg_sup = i;
        }
        if u.values()[i] < inf_u {
            inf_u = u.values()[i];
            arg_inf = i;
        }
    }

    let h = grid.h();
    let tolerance = c_tol * h * h * (1.0 + h_const.abs());
    let grad_bound_slack = h_const - grad_sup;
    let supinf_slack = (2.0 * r * h_const.sqrt()).exp() * inf_u - sup_u;

    // geodesic integration: log u(r2) - log u(r1) = int u'/u dr
    let du = derivative(u);
    let ratios: Vec<f64> = du
        .values()
        .iter()
        .zip(u.values())
        .map(|(&d, &v)| d / v)
        .collect();
    let (i0, i1) = if arg_inf <= arg_sup { (arg_inf, arg_sup) } else { (arg_sup, arg_inf) };
    let integral = trapezoid(&ratios, h, i0, i1);
    let log_ratio = (u.values()[i1] / u.values()[i0]).ln();
    let quadrature_gap = (integral - log_ratio).abs();
    let quadrature_tol = c_tol * h * h * (1.0 + log_ratio.abs());

    let pass_grad = grad_bound_slack >= -tolerance;
    let pass_supinf = supinf_slack >= -tolerance * (1.0 + inf_u.abs());
    let pass_quadrature = quadrature_gap <= quadrature_tol;
    Ok(HarnackReport {
        h_const,
        grad_sup,
        grad_bound_slack,
        sup_u,
        inf_u,
        supinf_slack,
        quadrature_gap,
        quadrature_tol,
        tolerance,
        pass_grad,
        pass_supinf,
        pass_quadrature,
        pass: pass_grad && pass_supinf && pass_quadrature,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LiouvilleReport {
    pub verdict: LiouvilleVerdict,
    pub solved: bool,
    pub gradient_sup: Option<f64>,
    pub sigma_at_solution: Option<f64>,
    pub constant: Option<bool>,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl LiouvilleReport {
    /// Report for a scenario whose solve failed on a family certified to have
    /// no positive zeros: a constant solution would have to be a zero of
    /// Sigma, so no positive solution can exist and the failure is the
    /// expected outcome.
    pub fn nonexistence_consistent(verdict: LiouvilleVerdict, reason: String) -> Self {
        LiouvilleReport {
            verdict,
            solved: false,
            gradient_sup: None,
            sigma_at_solution: None,
            constant: None,
            tolerance: 0.0,
            pass: true,
            note: format!(
                "solver did not converge ({reason}); Sigma has no positive zeros, so \
                 nonconvergence is consistent with (not proof of) nonexistence"
            ),
        }
    }
}

/// Liouville check on the closed model with nonnegative curvature and a
/// spatially constant family: when the sign conditions hold (certified), the
/// solved field must be constant and Sigma must vanish along it.
pub fn check_liouville(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    params: &EstimateParams,
    grad_tol: f64,
) -> Result<LiouvilleReport> {
    if !space.is_closed() {
        return Err(Error::RequiresClosedModel);
    }
    if !family.has_constant_coefficients() {
        return Err(Error::InvalidFamily(
            "Liouville check requires spatially constant Sigma".into(),
        ));
    }
    let k = space.curvature_lower_bound(space.r_max(), CURVATURE_RESOLUTION)?;
    if k > 0.0 {
        return Err(Error::CurvatureNotNonnegative(k));
    }
    u.require_positive()?;
    let range = (u.min(), u.max());
    let verdict = liouville_conditions(family, params.mu, range)?;

    let grad = gradient_norm(u);
    let mut gradient_sup: f64 = 0.0;
    let mut sigma_max: f64 = 0.0;
    for i in 0..u.len() {
        gradient_sup = gradient_sup.max(grad.values()[i] / u.values()[i]);
        sigma_max = sigma_max.max(family.sigma(u.grid().node(i), u.values()[i])?.abs());
    }
    let constant = gradient_sup <= grad_tol;
    let (pass, note) = match &verdict {
        LiouvilleVerdict::Holds => (
            constant && sigma_max <= grad_tol,
            "conditions hold: solution must be constant with Sigma(u) = 0".to_string(),
        ),
        LiouvilleVerdict::Fails { condition, witness_u, .. } => (
            true,
            format!("conditions fail ({condition} at u = {witness_u:.6e}); no constancy claim"),
        ),
        LiouvilleVerdict::Unknown => (
            true,
            "conditions grid-consistent but uncertified; no constancy claim".to_string(),
        ),
    };
    Ok(LiouvilleReport {
        verdict,
        solved: true,
        gradient_sup: Some(gradient_sup),
        sigma_at_solution: Some(sigma_max),
        constant: Some(constant),
        tolerance: grad_tol,
        pass,
        note,
    })
}

/// Grid search over mu in {1.1, ..., 8.0} (step 0.1) and eps in
/// {0.05, ..., 0.95} (step 0.05) minimizing the local right-hand side;
/// ties break to the lexicographically smallest (mu, eps).
pub fn optimize_params(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    radius: f64,
) -> Result<EstimateParams> {
    let mut best: Option<(f64, EstimateParams)> = None;
    for jm in 11..=80u32 {
        let mu = jm as f64 / 10.0;
        let params = EstimateParams::local(space, mu, 0.5, radius)?;
        let bundle = sup_inf_bundle(u, family, space, &params)?;
        for je in 1..=19u32 {
            let eps = je as f64 / 20.0;
            let candidate = EstimateParams { eps, ..params };
            let rhs = local_rhs(&bundle, &candidate);
            if best.as_ref().is_none_or(|(b, _)| rhs.total < *b) {
                best = Some((rhs.total, candidate));
            }
        }
    }
    Ok(best.expect("nonempty grid").1)
}

/// Negative-control corruption: multiplies the field by
/// `max(1 + sin(10 r), 1e-6)`, which keeps it positive while destroying the
/// gradient bound.
pub fn corrupt_field(u: &Field) -> Field {
    let grid = std::sync::Arc::clone(u.grid());
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (1.0 + (10.0 * grid.node(i)).sin()).max(1e-6))
        .collect();
    Field::new(grid, values).expect("same grid")
}
