//! Uniform radial grids, the discrete Witten Laplacian, discrete derivative
//! quantities, and grid verification of the log-substitution and
//! Bochner-type identities.
//!
//! All stencils are second order. The pole row uses the analytic limit
//! `Delta_f u(0) = n u''(0) ~ 2n (u_1 - u_0)/h^2`; the outer boundary of an
//! open model uses one-sided second-order stencils; on the closed spherical
//! model the far pole mirrors the origin row.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::ModelSpace;
use crate::nonlinearity::NonlinearityFamily;

pub const MIN_INTERVALS: usize = 16;

/// Uniform grid on [0, r_max] with `intervals + 1` nodes.
#[derive(Debug, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    h: f64,
    r_max: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, intervals: usize) -> Result<Arc<Self>> {
        if !(r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max} must be positive")));
        }
        if intervals < MIN_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_INTERVALS} intervals, got {intervals}"
            )));
        }
        let h = r_max / intervals as f64;
        let nodes = (0..=intervals).map(|i| i as f64 * h).collect();
        Ok(Arc::new(RadialGrid { nodes, h, r_max }))
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the last node with r <= radius (clamped to the grid).
    pub fn last_node_within(&self, radius: f64) -> usize {
        let idx = (radius / self.h + 1e-9).floor() as usize;
        idx.min(self.nodes.len() - 1)
    }

    fn matches(&self, other: &RadialGrid) -> bool {
        self.nodes.len() == other.nodes.len() && (self.r_max - other.r_max).abs() < 1e-12
    }
}

/// Nodal values over a shared grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field length {} does not match grid ({} nodes)",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: &Arc<RadialGrid>, value: f64) -> Self {
        Field { grid: Arc::clone(grid), values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Field { grid: Arc::clone(grid), values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| nan_min(a, b))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| nan_max(a, b))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| nan_max(a, b.abs()))
    }

    /// Sup norm skipping `margin` nodes at each end; convergence-order
    /// measurements use this because the composite boundary stencils change
    /// error constants between refinements.
    pub fn sup_norm_interior(&self, margin: usize) -> f64 {
        let n = self.values.len();
        self.values[margin..n - margin]
            .iter()
            .fold(0.0, |a, &b| nan_max(a, b.abs()))
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Error when any node is nonpositive (reports the worst offender).
    pub fn require_positive(&self) -> Result<()> {
        if let Some((i, &v)) = self
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        {
            if !(v > 0.0) {
                return Err(Error::NonPositiveField { min: v, r: self.grid.node(i) });
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid.matches(&other.grid));
        Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        a
    } else if b.is_nan() {
        b
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        a
    } else if b.is_nan() {
        b
    } else {
        a.min(b)
    }
}

/// Tridiagonal discrete operator plus an optional full last-row stencil
/// (the one-sided closure at the outer boundary of open models).
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Arc<RadialGrid>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// Coefficients on nodes N-3..=N replacing the banded last row.
    last_row: Option<[f64; 4]>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn bands(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lower, &self.diag, &self.upper)
    }

    /// Applies the operator in difference form (coefficients multiply nodal
    /// differences), so constants are annihilated exactly, not just to
    /// rounding.
    pub fn apply(&self, field: &Field) -> Field {
        debug_assert!(self.grid.matches(field.grid()));
        let v = field.values();
        let n = v.len() - 1;
        let mut out = vec![0.0; v.len()];
        out[0] = self.upper[0] * (v[1] - v[0]);
        for i in 1..n {
            out[i] =
                self.lower[i] * (v[i - 1] - v[i]) + self.upper[i] * (v[i + 1] - v[i]);
        }
        out[n] = match self.last_row {
            Some(row) => {
                row[0] * (v[n - 3] - v[n])
                    + row[1] * (v[n - 2] - v[n])
                    + row[2] * (v[n - 1] - v[n])
            }
            None => self.lower[n] * (v[n - 1] - v[n]),
        };
        Field { grid: Arc::clone(&self.grid), values: out }
    }

    /// Row sums; zero rows annihilate constants.
    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.diag.len() - 1;
        let mut sums = vec![0.0; n + 1];
        sums[0] = self.diag[0] + self.upper[0];
        for i in 1..n {
            sums[i] = self.lower[i] + self.diag[i] + self.upper[i];
        }
        sums[n] = match self.last_row {
            Some(row) => row.iter().sum(),
            None => self.lower[n] + self.diag[n],
        };
        sums
    }
}

/// Assembles the discrete drift Laplacian `u'' + ((n-1) phi'/phi - f') u'`
/// on the grid. Exact on constants everywhere and second order on smooth
/// fields, including the pole and boundary rows.
pub fn assemble_witten(space: &ModelSpace, grid: &Arc<RadialGrid>) -> DiscreteOperator {
    assert!(
        (grid.r_max() - space.r_max()).abs() < 1e-12,
        "grid does not span the model domain"
    );
    let n = grid.len() - 1;
    let h = grid.h();
    let nf = space.nf();
    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];

    // pole row: Delta_f u(0) = n u''(0) ~ 2n (u_1 - u_0)/h^2
    diag[0] = -2.0 * nf / (h * h);
    upper[0] = 2.0 * nf / (h * h);

    for i in 1..n {
        let c = space
            .drift_laplacian_radial(grid.node(i))
            .expect("interior node");
        lower[i] = 1.0 / (h * h) - c / (2.0 * h);
        diag[i] = -2.0 / (h * h);
        upper[i] = 1.0 / (h * h) + c / (2.0 * h);
    }

    let last_row = if space.is_closed() {
        // far pole mirrors the origin row
        lower[n] = 2.0 * nf / (h * h);
        diag[n] = -2.0 * nf / (h * h);
        None
    } else {
        let c = space
            .drift_laplacian_radial(grid.node(n))
            .expect("boundary node");
        // one-sided second order: u'' ~ (2u_N - 5u_{N-1} + 4u_{N-2} - u_{N-3})/h^2,
        // u' ~ (3u_N - 4u_{N-1} + u_{N-2})/(2h)
        Some([
            -1.0 / (h * h),
            4.0 / (h * h) + c / (2.0 * h),
            -5.0 / (h * h) - 4.0 * c / (2.0 * h),
            2.0 / (h * h) + 3.0 * c / (2.0 * h),
        ])
    };

    DiscreteOperator { grid: Arc::clone(grid), lower, diag, upper, last_row }
}

/// Signed first derivative, second order: central in the interior, enforced 0
/// at the pole (radial fields are even there), one-sided at the outer node.
pub fn derivative(field: &Field) -> Field {
    let v = field.values();
    let n = v.len() - 1;
    let h = field.grid().h();
    let mut out = vec![0.0; v.len()];
    out[0] = 0.0;
    for i in 1..n {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[n] = ((v[n - 2] - v[n]) - 4.0 * (v[n - 1] - v[n])) / (2.0 * h);
    Field { grid: Arc::clone(field.grid()), values: out }
}

/// Fourth-order first derivative. Used where a derived field is fed back
/// through the operator: the h^2 error of mixed second-order stencils is not
/// smooth near the boundary and would be amplified to O(1) by the 1/h^2 rows,
/// while an h^4 error stays O(h^2) after amplification.
pub fn derivative_high_order(field: &Field) -> Field {
    let v = field.values();
    let n = v.len() - 1;
    let h = field.grid().h();
    let mut out = vec![0.0; v.len()];
    out[0] = 0.0;
    out[1] = (-3.0 * (v[0] - v[1]) + 18.0 * (v[2] - v[1]) - 6.0 * (v[3] - v[1])
        + (v[4] - v[1]))
        / (12.0 * h);
    for i in 2..n - 1 {
        out[i] = ((v[i - 2] - v[i]) - 8.0 * (v[i - 1] - v[i]) + 8.0 * (v[i + 1] - v[i])
            - (v[i + 2] - v[i]))
            / (12.0 * h);
    }
    out[n - 1] = (3.0 * (v[n] - v[n - 1]) + 6.0 * (v[n - 3] - v[n - 1])
        - 18.0 * (v[n - 2] - v[n - 1])
        - (v[n - 4] - v[n - 1]))
        / (12.0 * h);
    out[n] = (-48.0 * (v[n - 1] - v[n]) + 36.0 * (v[n - 2] - v[n]) - 16.0 * (v[n - 3] - v[n])
        + 3.0 * (v[n - 4] - v[n]))
        / (12.0 * h);
    Field { grid: Arc::clone(field.grid()), values: out }
}

/// Second derivative, second order (one-sided at both ends).
pub fn second_derivative(field: &Field) -> Field {
    let v = field.values();
    let n = v.len() - 1;
    let h = field.grid().h();
    let h2 = h * h;
    let mut out = vec![0.0; v.len()];
    // pole: even extension gives u''(0) ~ 2(u_1 - u_0)/h^2
    out[0] = 2.0 * (v[1] - v[0]) / h2;
    for i in 1..n {
        out[i] = ((v[i - 1] - v[i]) + (v[i + 1] - v[i])) / h2;
    }
    out[n] =
        (-5.0 * (v[n - 1] - v[n]) + 4.0 * (v[n - 2] - v[n]) - (v[n - 3] - v[n])) / h2;
    Field { grid: Arc::clone(field.grid()), values: out }
}

/// |grad u| = |u'| with 0 enforced at the pole.
pub fn gradient_norm(field: &Field) -> Field {
    derivative(field).map(f64::abs)
}

/// |Hess u|^2 for a radial field: `(u'')^2 + (n-1) (phi' u'/phi)^2`,
/// with the pole limit `n (u''(0))^2` (same at the far pole when closed).
pub fn hessian_norm_sq_radial(field: &Field, space: &ModelSpace) -> Field {
    let up = derivative(field);
    let upp = second_derivative(field);
    let grid = field.grid();
    let n = grid.len() - 1;
    let nf = space.nf();
    let mut out = vec![0.0; grid.len()];
    out[0] = nf * upp.values()[0] * upp.values()[0];
    for i in 1..=n {
        let r = grid.node(i);
        if i == n && space.is_closed() {
            out[i] = nf * upp.values()[i] * upp.values()[i];
        } else {
            let ang = space.warp().dphi(r) * up.values()[i] / space.warp().phi(r);
            out[i] = upp.values()[i] * upp.values()[i] + (nf - 1.0) * ang * ang;
        }
    }
    Field { grid: Arc::clone(grid), values: out }
}

/// Residual of the log-substitution equation
/// `Delta_f h + |grad h|^2 + e^{-h} Sigma(x, e^h) = 0` with h = log u.
/// O(h^2) plus the PDE residual of u.
pub fn check_h_equation(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
) -> Result<Field> {
    u.require_positive()?;
    let h = u.map(f64::ln);
    let op = assemble_witten(space, u.grid());
    let lap_h = op.apply(&h);
    let hp = derivative(&h);
    let grid = u.grid();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = grid.node(i);
        let ui = u.values()[i];
        let sigma = family.sigma(r, ui)?;
        values.push(lap_h.values()[i] + hp.values()[i] * hp.values()[i] + sigma / ui);
    }
    Field::new(Arc::clone(grid), values)
}

/// Residual of the identity for `H = |grad h|^2 + mu e^{-h} Sigma[x, e^h]`:
///
/// `Delta_f H = 2|Hess h|^2 + 2<grad f, grad h>^2/(m-n) - 2<grad h, grad H>
///  + 2 Ric_f^m(grad h, grad h) - 2(mu-1) e^{-h} Sigma |grad h|^2
///  + 2(mu-1) e^{-h} <grad h, grad Sigma> + mu Delta_f(e^{-h} Sigma)`,
///
/// which holds when h = log u for a positive solution u of the equation with
/// this family. The grouping keeps the `Ric_f^m` eigenvalue together with the
/// separate `<grad f, grad h>^2/(m-n)` term, i.e. exactly the weighted Bochner
/// formula applied with the full tensor `Ric_f = Ric_f^m + (df (x) df)/(m-n)`.
pub fn check_bochner_identity(
    hfield: &Field,
    space: &ModelSpace,
    mu: f64,
    family: &NonlinearityFamily,
) -> Result<Field> {
    if space.m() <= space.nf() {
        return Err(Error::RequiresMGreaterN { m: space.m(), n: space.n() });
    }
    let grid = hfield.grid();
    let op = assemble_witten(space, grid);
    let hp = derivative(hfield);
    let hp4 = derivative_high_order(hfield);
    let hessq = hessian_norm_sq_radial(hfield, space);

    // G = e^{-h} Sigma(r, e^h); exact nodal values
    let mut g_values = Vec::with_capacity(grid.len());
    let mut jets = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let u = hfield.values()[i].exp();
        let jet = family.sigma_jet(grid.node(i), u)?;
        g_values.push(jet.sigma / u);
        jets.push(jet);
    }
    let g = Field::new(Arc::clone(grid), g_values)?;

    let h_big = Field::new(
        Arc::clone(grid),
        hp4.values()
            .iter()
            .zip(g.values())
            .map(|(&d, &gv)| d * d + mu * gv)
            .collect(),
    )?;
    let lhs = op.apply(&h_big);
    let hbig_p = derivative(&h_big);
    let lap_g = op.apply(&g);

    let mn = space.m() - space.nf();
    let mut res = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = grid.node(i);
        let u = hfield.values()[i].exp();
        let jet = &jets[i];
        let d = hp.values()[i];
        let fp = space.weight().df(r);
        let lam = space.ricci_radial_at(r);
        let rhs = 2.0 * hessq.values()[i]
            + 2.0 * (fp * d) * (fp * d) / mn
            - 2.0 * d * hbig_p.values()[i]
            + 2.0 * lam * d * d
            - 2.0 * (mu - 1.0) * g.values()[i] * d * d
            + 2.0 * (mu - 1.0) * (d * jet.sigma_x / u + jet.sigma_u * d * d)
            + mu * lap_g.values()[i];
        res.push(lhs.values()[i] - rhs);
    }
    Field::new(Arc::clone(grid), res)
}

/// Nodes skipped at each end when measuring identity residuals on solved
/// fields: the one-sided closures reach three nodes in, and a discrete
/// solution's error is not smooth at stencil scale under the boundary row.
pub const BOUNDARY_STENCIL_MARGIN: usize = 3;

/// Residual sup norms of the two identity checks on a solved field, measured
/// over the interior (see [`BOUNDARY_STENCIL_MARGIN`]), with
/// discretization-aware tolerances `c_tol h^2 (1 + scale)` where the scale is
/// the sup magnitude of the identity's dominant term.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    pub h_equation_sup: f64,
    pub h_equation_tol: f64,
    pub bochner_sup: f64,
    pub bochner_tol: f64,
    pub interior_margin: usize,
    pub pass: bool,
}

pub fn check_identities(
    u: &Field,
    family: &NonlinearityFamily,
    space: &ModelSpace,
    mu: f64,
    c_tol: f64,
) -> Result<IdentityCheck> {
    let grid = u.grid();
    let h2 = grid.h() * grid.h();
    let op = assemble_witten(space, grid);
    let hfield = u.map(f64::ln);

    let res_h = check_h_equation(u, family, space)?;
    let scale_h = 1.0 + op.apply(&hfield).sup_norm();
    let h_equation_tol = c_tol * h2 * (1.0 + scale_h);

    let res_b = check_bochner_identity(&hfield, space, mu, family)?;
    let grad = derivative(&hfield);
    let mut big_h = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let ui = u.values()[i];
        let sigma = family.sigma(grid.node(i), ui)?;
        big_h.push(grad.values()[i] * grad.values()[i] + mu * sigma / ui);
    }
    let scale_b = 1.0 + op.apply(&Field::new(Arc::clone(grid), big_h)?).sup_norm();
    let bochner_tol = c_tol * h2 * (1.0 + scale_b);

    let h_equation_sup = res_h.sup_norm_interior(BOUNDARY_STENCIL_MARGIN);
    let bochner_sup = res_b.sup_norm_interior(BOUNDARY_STENCIL_MARGIN);
    Ok(IdentityCheck {
        h_equation_sup,
        h_equation_tol,
        bochner_sup,
        bochner_tol,
        interior_margin: BOUNDARY_STENCIL_MARGIN,
        pass: h_equation_sup <= h_equation_tol && bochner_sup <= bochner_tol,
    })
}

/// Measured discretization constant: sup-norm error of the assembled operator
/// on the reference field 2 + cos r, divided by h^2. Inequality checks use
/// `tol = (10 C_meas) h^2 (1 + scale)`.
pub fn calibrate_tolerance_constant(space: &ModelSpace, grid: &Arc<RadialGrid>) -> f64 {
    let op = assemble_witten(space, grid);
    let u = Field::from_fn(grid, |r| 2.0 + r.cos());
    let approx = op.apply(&u);
    let mut err: f64 = 0.0;
    for i in 0..grid.len() {
        let r = grid.node(i);
        let exact = if r == 0.0 {
            -space.nf()
        } else if space.is_closed() && i == grid.len() - 1 {
            -space.nf() * r.cos()
        } else {
            let c = space.drift_laplacian_radial(r).expect("interior node");
            -r.cos() - c * r.sin()
        };
        err = err.max((approx.values()[i] - exact).abs());
    }
    err / (grid.h() * grid.h())
}

/// Trapezoid rule for nodal values between node indices i0 <= i1.
pub fn trapezoid(values: &[f64], h: f64, i0: usize, i1: usize) -> f64 {
    if i0 == i1 {
        return 0.0;
    }
    let mut sum = 0.5 * (values[i0] + values[i1]);
    for v in &values[i0 + 1..i1] {
        sum += v;
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{Warp, Weight};
    use crate::solver::manufacture;
    use std::f64::consts::PI;

    fn flat(n: usize, r_max: f64) -> ModelSpace {
        ModelSpace::new(n, n as f64, Warp::Euclidean, Weight::Constant { value: 0.0 }, r_max)
            .unwrap()
    }

    fn gaussian(n: usize, m: f64, r_max: f64) -> ModelSpace {
        ModelSpace::new(n, m, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, r_max).unwrap()
    }

    #[test]
    fn grid_invariants() {
        assert!(RadialGrid::new(2.0, 8).is_err());
        let g = RadialGrid::new(2.0, 16).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.node(0), 0.0);
        assert!((g.node(16) - 2.0).abs() < 1e-15);
        assert_eq!(g.last_node_within(1.0), 8);
    }

    #[test]
    fn operator_annihilates_constants() {
        let grid = RadialGrid::new(2.0, 64).unwrap();
        for space in [flat(3, 2.0), gaussian(3, 8.0, 2.0)] {
            let op = assemble_witten(&space, &grid);
            let out = op.apply(&Field::constant(&grid, 4.2));
            assert_eq!(out.sup_norm(), 0.0);
            for (i, s) in op.row_sums().iter().enumerate() {
                assert!(s.abs() < 1e-9, "row {i} sum {s}");
            }
        }
        // closed sphere as well
        let sphere =
            ModelSpace::new(3, 3.0, Warp::Spherical, Weight::Constant { value: 0.0 }, PI).unwrap();
        let grid = RadialGrid::new(PI, 64).unwrap();
        let op = assemble_witten(&sphere, &grid);
        assert_eq!(op.apply(&Field::constant(&grid, -1.5)).sup_norm(), 0.0);
    }

    #[test]
    fn operator_on_quadratic() {
        // flat: Delta r^2 = 2n at interior nodes (exact for the central stencil)
        let n = 3;
        let space = flat(n, 2.0);
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let op = assemble_witten(&space, &grid);
        let out = op.apply(&Field::from_fn(&grid, |r| r * r));
        for i in 0..grid.len() {
            assert!(
                (out.values()[i] - 2.0 * n as f64).abs() < 1e-9,
                "node {i}: {}",
                out.values()[i]
            );
        }
        // gaussian weight: Delta_f r^2 = 2n - 2r^2
        let space = gaussian(n, 8.0, 2.0);
        let op = assemble_witten(&space, &grid);
        let out = op.apply(&Field::from_fn(&grid, |r| r * r));
        for i in 0..grid.len() {
            let r = grid.node(i);
            assert!(
                (out.values()[i] - (2.0 * n as f64 - 2.0 * r * r)).abs() < 1e-8,
                "node {i}"
            );
        }
    }

    #[test]
    fn operator_second_order_on_catalog_spaces() {
        // u = cos r; halving h divides the max error by ~4
        let spaces = vec![
            flat(3, 2.0),
            gaussian(3, 8.0, 2.0),
            ModelSpace::new(3, 3.0, Warp::Hyperbolic, Weight::Constant { value: 0.0 }, 2.0)
                .unwrap(),
            ModelSpace::new(3, 3.0, Warp::Spherical, Weight::Constant { value: 0.0 }, PI)
                .unwrap(),
        ];
        for space in spaces {
            let mut errs = Vec::new();
            for intervals in [128usize, 256, 512] {
                let grid = RadialGrid::new(space.r_max(), intervals).unwrap();
                let op = assemble_witten(&space, &grid);
                let out = op.apply(&Field::from_fn(&grid, |r| r.cos()));
                let mut err: f64 = 0.0;
                for i in 0..grid.len() {
                    let r = grid.node(i);
                    let exact = if i == 0 {
                        -space.nf()
                    } else if space.is_closed() && i == grid.len() - 1 {
                        -space.nf() * r.cos()
                    } else {
                        let c = space.drift_laplacian_radial(r).unwrap();
                        -r.cos() - c * r.sin()
                    };
                    err = err.max((out.values()[i] - exact).abs());
                }
                errs.push(err);
            }
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!(
                    (3.6..=4.4).contains(&ratio),
                    "{:?}: errors {errs:?}, ratio {ratio}",
                    space.warp()
                );
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let grid = RadialGrid::new(2.0, 256).unwrap();
        let lin = gradient_norm(&Field::from_fn(&grid, |r| r));
        for i in 1..grid.len() {
            assert!((lin.values()[i] - 1.0).abs() < 1e-10);
        }
        assert_eq!(lin.values()[0], 0.0); // pole enforcement
        let cosr = gradient_norm(&Field::from_fn(&grid, |r| r.cos()));
        for i in 1..grid.len() {
            let r = grid.node(i);
            assert!((cosr.values()[i] - r.sin().abs()).abs() < 1e-4, "r = {r}");
        }
        assert_eq!(gradient_norm(&Field::constant(&grid, 3.0)).sup_norm(), 0.0);
    }

    #[test]
    fn hessian_examples() {
        let n = 4;
        let space = flat(n, 2.0);
        let grid = RadialGrid::new(2.0, 256).unwrap();
        // u = r^2/2: u'' = 1, phi' u'/phi = 1 => |Hess|^2 = n
        let hq = hessian_norm_sq_radial(&Field::from_fn(&grid, |r| 0.5 * r * r), &space);
        for i in 0..grid.len() {
            assert!((hq.values()[i] - n as f64).abs() < 1e-8, "node {i}");
        }
        assert_eq!(
            hessian_norm_sq_radial(&Field::constant(&grid, 2.0), &space).sup_norm(),
            0.0
        );
        // u = r away from the pole: (n-1)/r^2
        let hq = hessian_norm_sq_radial(&Field::from_fn(&grid, |r| r), &space);
        for i in 8..grid.len() - 1 {
            let r = grid.node(i);
            assert!(
                (hq.values()[i] - (n as f64 - 1.0) / (r * r)).abs() < 1e-6,
                "r = {r}"
            );
        }
    }

    #[test]
    fn discrete_cauchy_schwarz_chain() {
        // at every node: |Hess h|^2 + (f' h')^2/(m-n) >= (Delta_f h)^2/m,
        // with Delta_f h assembled from the same pointwise derivatives
        let space = gaussian(3, 8.0, 2.0);
        let grid = RadialGrid::new(2.0, 128).unwrap();
        let h = Field::from_fn(&grid, |r| (2.0 + r.cos()).ln());
        let hq = hessian_norm_sq_radial(&h, &space);
        let hp = derivative(&h);
        let hpp = second_derivative(&h);
        for i in 0..grid.len() {
            let r = grid.node(i);
            let fp = space.weight().df(r);
            let lap = if i == 0 {
                space.nf() * hpp.values()[0]
            } else {
                let c = space.drift_laplacian_radial(r).unwrap();
                hpp.values()[i] + c * hp.values()[i]
            };
            let lhs = hq.values()[i] + (fp * hp.values()[i]).powi(2) / (space.m() - space.nf());
            let rhs = lap * lap / space.m();
            assert!(lhs >= rhs - 1e-10 * (1.0 + lhs.abs()), "node {i}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn h_equation_trivial_cases() {
        let space = flat(3, 2.0);
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let u = Field::constant(&grid, 2.5);
        let res = check_h_equation(&u, &NonlinearityFamily::zero(), &space).unwrap();
        assert_eq!(res.sup_norm(), 0.0);
        let bad = Field::constant(&grid, -1.0);
        assert!(check_h_equation(&bad, &NonlinearityFamily::zero(), &space).is_err());
    }

    #[test]
    fn h_equation_second_order_on_manufactured_solution() {
        let space = gaussian(3, 8.0, 2.0);
        let profile = crate::profiles::SmoothProfile::Cosine { a: 2.0, b: 1.0 };
        let mut errs = Vec::new();
        for intervals in [128usize, 256] {
            let grid = RadialGrid::new(2.0, intervals).unwrap();
            let (family, u) = manufacture(&space, &profile, &grid).unwrap();
            let res = check_h_equation(&u, &family, &space).unwrap();
            errs.push(res.sup_norm_interior(2));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.4..=4.6).contains(&ratio), "errors {errs:?}, ratio {ratio}");
    }

    #[test]
    fn bochner_identity_constant_field() {
        let space = gaussian(3, 8.0, 2.0);
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let h = Field::constant(&grid, 0.4);
        // constant h solves the equation with Sigma = 0; both sides vanish.
        // mu = 1 is the classical weighted Bochner grouping, also admissible.
        for mu in [1.0, 1.5] {
            let res =
                check_bochner_identity(&h, &space, mu, &NonlinearityFamily::zero()).unwrap();
            assert_eq!(res.sup_norm(), 0.0, "mu = {mu}");
        }
    }

    #[test]
    fn bochner_identity_rejects_m_equal_n() {
        let space = flat(3, 2.0);
        let grid = RadialGrid::new(2.0, 64).unwrap();
        let h = Field::constant(&grid, 0.0);
        assert!(matches!(
            check_bochner_identity(&h, &space, 1.5, &NonlinearityFamily::zero()),
            Err(Error::RequiresMGreaterN { .. })
        ));
    }

    #[test]
    fn bochner_identity_second_order_on_manufactured_solution() {
        let space = gaussian(3, 8.0, 2.0);
        let profile = crate::profiles::SmoothProfile::Cosine { a: 2.0, b: 1.0 };
        let mut errs = Vec::new();
        for intervals in [128usize, 256] {
            let grid = RadialGrid::new(2.0, intervals).unwrap();
            let (family, u) = manufacture(&space, &profile, &grid).unwrap();
            let h = u.map(f64::ln);
            let res = check_bochner_identity(&h, &space, 1.5, &family).unwrap();
            errs.push(res.sup_norm_interior(2));
        }
        let ratio = errs[0] / errs[1];
        assert!((3.4..=4.6).contains(&ratio), "errors {errs:?}, ratio {ratio}");
    }

    #[test]
    fn spatial_source_matches_grid_laplacian() {
        // Delta_f Sigma^x of a manufactured source matches the assembled
        // operator applied to the source field, to O(h^2)
        let space = gaussian(3, 8.0, 2.0);
        let grid = RadialGrid::new(2.0, 256).unwrap();
        let profile = crate::profiles::SmoothProfile::Cosine { a: 2.0, b: 1.0 };
        let (family, _) = manufacture(&space, &profile, &grid).unwrap();
        let sigma_field = match &family {
            NonlinearityFamily::SpatialSource { source } => {
                Field::from_fn(&grid, |r| source.eval(r))
            }
            _ => unreachable!(),
        };
        let op = assemble_witten(&space, &grid);
        let lap = op.apply(&sigma_field);
        for i in 0..grid.len() {
            let analytic = family
                .sigma_x_drift_laplacian(&space, grid.node(i), 1.0)
                .unwrap();
            assert!(
                (lap.values()[i] - analytic).abs() < 2e-3,
                "node {i}: {} vs {analytic}",
                lap.values()[i]
            );
        }
    }

    #[test]
    fn calibration_constant_is_stable() {
        let space = gaussian(3, 8.0, 2.0);
        let c1 = calibrate_tolerance_constant(&space, &RadialGrid::new(2.0, 256).unwrap());
        let c2 = calibrate_tolerance_constant(&space, &RadialGrid::new(2.0, 512).unwrap());
        assert!((c1 / c2 - 1.0).abs() < 0.2, "c1 = {c1}, c2 = {c2}");
    }

    #[test]
    fn trapezoid_linear_exact() {
        let vals: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
        assert!((trapezoid(&vals, 0.5, 0, 10) - 50.0).abs() < 1e-12);
        assert_eq!(trapezoid(&vals, 0.5, 3, 3), 0.0);
    }

    #[test]
    fn field_ranges_and_nan_propagation() {
        let grid = RadialGrid::new(1.0, 16).unwrap();
        let f = Field::from_fn(&grid, |r| r - 0.5);
        assert!((f.min() + 0.5).abs() < 1e-15);
        assert!((f.max() - 0.5).abs() < 1e-15);
        assert!(!f.is_strictly_positive());
        let mut vals = f.values().to_vec();
        vals[3] = f64::NAN;
        let g = Field::new(Arc::clone(&grid), vals).unwrap();
        assert!(g.sup_norm().is_nan());
    }
}
