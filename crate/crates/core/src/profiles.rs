//! Radial profile catalogs with closed-form derivatives.
//!
//! Everything downstream (curvature, the drift Laplacian, the estimate
//! constants) needs exact first and second derivatives, so each profile
//! carries them analytically rather than by numerical differentiation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Warp function of a rotationally symmetric metric `dr^2 + phi(r)^2 g_S`.
///
/// All catalog warps satisfy `phi(0) = 0`, `phi'(0) = 1` and `phi''(0) = 0`,
/// which is exactly the smooth-pole condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warp {
    /// phi(r) = r
    Euclidean,
    /// phi(r) = sinh(r)
    Hyperbolic,
    /// phi(r) = sin(r)
    Spherical,
}

impl Warp {
    pub fn phi(self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => r,
            Warp::Hyperbolic => r.sinh(),
            Warp::Spherical => r.sin(),
        }
    }

    pub fn dphi(self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => 1.0,
            Warp::Hyperbolic => r.cosh(),
            Warp::Spherical => r.cos(),
        }
    }

    pub fn ddphi(self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic => r.sinh(),
            Warp::Spherical => -r.sin(),
        }
    }

    pub fn dddphi(self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic => r.cosh(),
            Warp::Spherical => -r.cos(),
        }
    }

    /// phi'''(0); drives the pole limits of the curvature eigenvalues
    /// (phi''/phi -> phi'''(0) and (1 - phi'^2)/phi^2 -> -phi'''(0) as r -> 0).
    pub fn phi_ppp0(self) -> f64 {
        self.dddphi(0.0)
    }

    /// phi''/phi, the radial sectional curvature up to sign. Constant for
    /// every catalog warp; evaluating the quotient directly would lose all
    /// accuracy near the pole.
    pub fn ddphi_over_phi(self, _r: f64) -> f64 {
        match self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic => 1.0,
            Warp::Spherical => -1.0,
        }
    }

    /// (1 - phi'^2)/phi^2, the tangential sectional curvature. Exact closed
    /// form per warp (1 - cosh^2 = -sinh^2 and 1 - cos^2 = sin^2), avoiding
    /// the catastrophic cancellation of the naive quotient near the pole.
    pub fn tangential_curvature(self, _r: f64) -> f64 {
        match self {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic => -1.0,
            Warp::Spherical => 1.0,
        }
    }
}

/// Weight potential f(r) of the measure `e^{-f} dv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { value: f64 },
    /// f(r) = alpha r^2
    Gaussian { alpha: f64 },
    /// f(r) = sum_k coeffs[k] r^k; the linear coefficient must vanish so that
    /// f'(0) = 0 (validated by the model-space constructor).
    Polynomial { coeffs: Vec<f64> },
}

impl Weight {
    pub fn f(&self, r: f64) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::Gaussian { alpha } => alpha * r * r,
            Weight::Polynomial { coeffs } => horner(coeffs, r),
        }
    }

    pub fn df(&self, r: f64) -> f64 {
        match self {
            Weight::Constant { .. } => 0.0,
            Weight::Gaussian { alpha } => 2.0 * alpha * r,
            Weight::Polynomial { coeffs } => horner(&poly_derivative(coeffs), r),
        }
    }

    pub fn ddf(&self, r: f64) -> f64 {
        match self {
            Weight::Constant { .. } => 0.0,
            Weight::Gaussian { alpha } => 2.0 * alpha,
            Weight::Polynomial { coeffs } => {
                horner(&poly_derivative(&poly_derivative(coeffs)), r)
            }
        }
    }

    pub fn dddf(&self, r: f64) -> f64 {
        match self {
            Weight::Constant { .. } | Weight::Gaussian { .. } => 0.0,
            Weight::Polynomial { coeffs } => {
                let d3 = poly_derivative(&poly_derivative(&poly_derivative(coeffs)));
                horner(&d3, r)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Weight::Constant { .. } => true,
            Weight::Gaussian { alpha } => *alpha == 0.0,
            Weight::Polynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Coefficient profile p(r) of a nonlinearity term, with analytic first and
/// second radial derivatives.
#[derive(Clone)]
pub enum RadialProfile {
    Constant(f64),
    /// sum_k coeffs[k] r^k
    Polynomial(Vec<f64>),
    /// User-supplied closures; all three must be consistent.
    Custom {
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Constant(c) => *c,
            RadialProfile::Polynomial(coeffs) => horner(coeffs, r),
            RadialProfile::Custom { value, .. } => value(r),
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Constant(_) => 0.0,
            RadialProfile::Polynomial(coeffs) => horner(&poly_derivative(coeffs), r),
            RadialProfile::Custom { d1, .. } => d1(r),
        }
    }

    pub fn d2(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Constant(_) => 0.0,
            RadialProfile::Polynomial(coeffs) => {
                horner(&poly_derivative(&poly_derivative(coeffs)), r)
            }
            RadialProfile::Custom { d2, .. } => d2(r),
        }
    }

    /// Whether the profile is constant in r. Custom profiles are conservatively
    /// treated as non-constant.
    pub fn is_constant(&self) -> bool {
        match self {
            RadialProfile::Constant(_) => true,
            RadialProfile::Polynomial(coeffs) => coeffs.iter().skip(1).all(|&c| c == 0.0),
            RadialProfile::Custom { .. } => false,
        }
    }

    /// Constant value when the profile is constant.
    pub fn constant_value(&self) -> Option<f64> {
        if self.is_constant() {
            Some(self.eval(0.0))
        } else {
            None
        }
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Constant(c) => write!(f, "Constant({c})"),
            RadialProfile::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            RadialProfile::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

/// Manufactured solution profile u(r) with derivatives through fourth order
/// (the source term of a manufactured problem needs Sigma'' and hence u'''').
///
/// Catalog profiles satisfy u'(0) = 0, as required for radial smoothness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothProfile {
    Constant(f64),
    /// a + b cos(r)
    Cosine { a: f64, b: f64 },
    /// a + b r^2
    Quadratic { a: f64, b: f64 },
}

impl SmoothProfile {
    /// k-th derivative at r, for k in 0..=4.
    pub fn deriv(&self, r: f64, k: usize) -> f64 {
        assert!(k <= 4, "derivatives are carried through order 4");
        match *self {
            SmoothProfile::Constant(c) => {
                if k == 0 {
                    c
                } else {
                    0.0
                }
            }
            SmoothProfile::Cosine { a, b } => match k {
                0 => a + b * r.cos(),
                1 => -b * r.sin(),
                2 => -b * r.cos(),
                3 => b * r.sin(),
                _ => b * r.cos(),
            },
            SmoothProfile::Quadratic { a, b } => match k {
                0 => a + b * r * r,
                1 => 2.0 * b * r,
                2 => 2.0 * b,
                _ => 0.0,
            },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.deriv(r, 0)
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            SmoothProfile::Constant(_) => true,
            SmoothProfile::Cosine { b, .. } | SmoothProfile::Quadratic { b, .. } => b == 0.0,
        }
    }
}
