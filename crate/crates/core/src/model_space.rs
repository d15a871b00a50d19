//! Rotationally symmetric model smooth metric measure spaces.
//!
//! A model space is `([0, r_max], dr^2 + phi(r)^2 g_S, e^{-f} dv)` together
//! with the synthetic dimension m >= n. Everything the estimates need from the
//! geometry comes through here: the eigenvalues of the Bakry-Emery tensor
//! `Ric_f^m = Ric + Hess f - (df (x) df)/(m-n)`, the curvature lower-bound
//! constant k with `Ric_f^m >= -(m-1) k g`, the radial drift coefficient of
//! `Delta_f u = u'' + ((n-1) phi'/phi - f') u'`, and the Wei-Wylie comparison
//! `Delta_f r <= (m-1) sqrt(k) coth(sqrt(k) r)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{Warp, Weight};

/// Tolerance deciding whether r_max equals pi, i.e. whether a spherical model
/// is closed (both poles present, no boundary).
const CLOSED_EPS: f64 = 1e-12;

/// Grid resolution used internally when a curvature bound has to be verified
/// as a precondition.
const GUARD_RESOLUTION: usize = 1024;

#[derive(Clone, Debug)]
pub struct ModelSpace {
    n: usize,
    m: f64,
    warp: Warp,
    weight: Weight,
    r_max: f64,
}

impl ModelSpace {
    pub fn new(n: usize, m: f64, warp: Warp, weight: Weight, r_max: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpace(format!("dimension n = {n} must be >= 2")));
        }
        if !m.is_finite() || m < n as f64 {
            return Err(Error::InvalidSpace(format!(
                "synthetic dimension m = {m} must satisfy n <= m < infinity"
            )));
        }
        if m == n as f64 && !weight.is_constant() {
            return Err(Error::InvalidSpace(
                "m = n is permitted only with a constant weight".into(),
            ));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidSpace(format!("r_max = {r_max} must be positive")));
        }
        if warp == Warp::Spherical && r_max > std::f64::consts::PI + CLOSED_EPS {
            return Err(Error::InvalidSpace(
                "spherical models require r_max <= pi".into(),
            ));
        }
        if weight.df(0.0).abs() > 1e-12 {
            return Err(Error::InvalidSpace(
                "weight must satisfy f'(0) = 0 (smooth at the pole)".into(),
            ));
        }
        let space = ModelSpace { n, m, warp, weight, r_max };
        if space.is_closed() && space.weight.df(space.r_max).abs() > 1e-12 {
            return Err(Error::InvalidSpace(
                "closed spherical models require f'(pi) = 0 (smooth at both poles)".into(),
            ));
        }
        Ok(space)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn warp(&self) -> Warp {
        self.warp
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Closed model: the sphere with both poles, hence no boundary.
    pub fn is_closed(&self) -> bool {
        self.warp == Warp::Spherical && (self.r_max - std::f64::consts::PI).abs() <= CLOSED_EPS
    }

    /// First-order coefficient of the radial drift Laplacian,
    /// `(n-1) phi'(r)/phi(r) - f'(r)`.
    ///
    /// Undefined at the pole; the limit path there is `Delta_f u(0) = n u''(0)`.
    pub fn drift_laplacian_radial(&self, r: f64) -> Result<f64> {
        self.check_radius_open(r)?;
        Ok((self.n as f64 - 1.0) * self.warp.dphi(r) / self.warp.phi(r) - self.weight.df(r))
    }

    /// Eigenvalues (radial, tangential) of `Ric_f^m` at radius r in (0, r_max).
    pub fn ricci_fm_eigenvalues(&self, r: f64) -> Result<(f64, f64)> {
        self.check_radius_open(r)?;
        let nf = self.n as f64;
        let sect_rad = self.warp.ddphi_over_phi(r);
        let sect_tan = self.warp.tangential_curvature(r);
        let df = self.weight.df(r);
        let ddf = self.weight.ddf(r);
        let radial = -(nf - 1.0) * sect_rad + ddf - self.grad_f_sq_term(df);
        let tangential =
            -sect_rad + (nf - 2.0) * sect_tan + self.warp.dphi(r) * df / self.warp.phi(r);
        Ok((radial, tangential))
    }

    /// Continuous limit of both eigenvalues as r -> 0. They coincide there:
    /// `-(n-1) phi'''(0) + f''(0)`.
    pub fn ricci_fm_eigenvalues_at_origin(&self) -> (f64, f64) {
        let nf = self.n as f64;
        let value = -(nf - 1.0) * self.warp.phi_ppp0() + self.weight.ddf(0.0);
        (value, value)
    }

    /// Radial eigenvalue with pole limits on both ends; used by grid checks
    /// that evaluate curvature at every node.
    pub fn ricci_radial_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.ricci_fm_eigenvalues_at_origin().0;
        }
        if self.is_closed() && r >= self.r_max - CLOSED_EPS {
            // Mirror limit at the far pole: phi(pi - rho) = sin(rho).
            let nf = self.n as f64;
            return -(nf - 1.0) * self.warp.phi_ppp0() + self.weight.ddf(self.r_max);
        }
        self.ricci_fm_eigenvalues(r)
            .expect("interior radius")
            .0
    }

    /// Smallest eigenvalue of `Ric_f^m` over [0, r2], evaluated on a grid of
    /// `resolution + 1` points (the origin uses the analytic limit).
    pub fn min_curvature_eigenvalue(&self, r2: f64, resolution: usize) -> Result<f64> {
        if !(r2 > 0.0) || r2 > self.r_max + CLOSED_EPS {
            return Err(Error::InvalidParams(format!(
                "radius {r2} must lie in (0, r_max = {}]",
                self.r_max
            )));
        }
        let resolution = resolution.max(2);
        let mut min = f64::INFINITY;
        for j in 0..=resolution {
            let r = r2 * j as f64 / resolution as f64;
            let (lr, lt) = if j == 0 {
                self.ricci_fm_eigenvalues_at_origin()
            } else if self.is_closed() && r >= self.r_max - CLOSED_EPS {
                let v = self.ricci_radial_at(r);
                (v, v)
            } else {
                self.ricci_fm_eigenvalues(r)?
            };
            min = min.min(lr.min(lt));
        }
        Ok(min)
    }

    /// Lower-bound constant k >= 0 with `Ric_f^m >= -(m-1) k g` on [0, r2].
    pub fn curvature_lower_bound(&self, r2: f64, resolution: usize) -> Result<f64> {
        let min = self.min_curvature_eigenvalue(r2, resolution)?;
        Ok((-min / (self.m - 1.0)).max(0.0))
    }

    /// Signed slack of the Wei-Wylie comparison at radius r:
    /// `(m-1) sqrt(k) coth(sqrt(k) r) - Delta_f r`, with the k = 0 limit
    /// `(m-1)/r`. Nonnegative whenever the supplied k dominates the
    /// curvature lower bound, which is verified as a precondition. Both
    /// sides of the precondition are grid minima, so agreement is only
    /// required up to sampling accuracy (one part in 1e6).
    pub fn comparison_check(&self, k: f64, r: f64) -> Result<f64> {
        if k < 0.0 {
            return Err(Error::InvalidParams(format!("k = {k} must be nonnegative")));
        }
        let required = self.curvature_lower_bound(r, GUARD_RESOLUTION)?;
        if required > k + 1e-6 * (1.0 + k) {
            return Err(Error::CurvatureBoundViolation { supplied: k, required });
        }
        let bound = if k == 0.0 {
            (self.m - 1.0) / r
        } else {
            let x = k.sqrt() * r;
            (self.m - 1.0) * k.sqrt() * coth(x)
        };
        Ok(bound - self.drift_laplacian_radial(r)?)
    }

    fn grad_f_sq_term(&self, df: f64) -> f64 {
        // With a constant weight df == 0, so the term vanishes for every
        // admissible m (including m = n, where the denominator is 0/0).
        if self.weight.is_constant() {
            0.0
        } else {
            df * df / (self.m - self.n as f64)
        }
    }

    fn check_radius_open(&self, r: f64) -> Result<()> {
        if r == 0.0 {
            return Err(Error::PoleEvaluation);
        }
        if !(r > 0.0) || r > self.r_max + CLOSED_EPS {
            return Err(Error::InvalidParams(format!(
                "radius {r} outside (0, r_max = {}]",
                self.r_max
            )));
        }
        Ok(())
    }
}

/// Curvature eigenvalues of a space as functions of r.
#[derive(Clone, Copy)]
pub struct CurvatureProfile<'a> {
    space: &'a ModelSpace,
}

impl<'a> CurvatureProfile<'a> {
    pub fn new(space: &'a ModelSpace) -> Self {
        CurvatureProfile { space }
    }

    pub fn lambda_radial(&self, r: f64) -> f64 {
        self.space.ricci_radial_at(r)
    }

    pub fn lambda_tangential(&self, r: f64) -> f64 {
        if r <= 0.0 {
            self.space.ricci_fm_eigenvalues_at_origin().1
        } else {
            self.space
                .ricci_fm_eigenvalues(r)
                .expect("interior radius")
                .1
        }
    }
}

pub fn coth(x: f64) -> f64 {
    // cosh/sinh overflows past ~710; coth is 1 to machine precision there
    if x.abs() > 350.0 {
        x.signum()
    } else {
        x.cosh() / x.sinh()
    }
}

/// Serializable description of a space, for reports.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceSummary {
    pub n: usize,
    pub m: f64,
    pub warp: Warp,
    pub weight: String,
    pub r_max: f64,
    pub closed: bool,
}

impl From<&ModelSpace> for SpaceSummary {
    fn from(s: &ModelSpace) -> Self {
        SpaceSummary {
            n: s.n,
            m: s.m,
            warp: s.warp,
            weight: format!("{:?}", s.weight),
            r_max: s.r_max,
            closed: s.is_closed(),
        }
    }
}
