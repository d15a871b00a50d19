//! Nonlinearity families Sigma(x, u) and their partial derivatives.
//!
//! Each family carries closed-form partials (no symbolic engine): the jet
//! (Sigma, Sigma_u, Sigma_uu, Sigma_x, Sigma_xu) at a point, the drift
//! Laplacian of Sigma^x (u frozen), and the sign conditions of the Liouville
//! theorem `Sigma >= 0`, `u Sigma_u - Sigma <= 0`,
//! `mu u^2 Sigma_uu - u Sigma_u + Sigma >= 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::ModelSpace;
use crate::profiles::RadialProfile;

/// Twice-differentiable gamma(s) for the `p u gamma(log u) + q u^s` family.
#[derive(Clone, Debug)]
pub enum GammaFn {
    /// sum_k coeffs[k] s^k
    Poly(Vec<f64>),
    /// exp(rate s)
    Exp { rate: f64 },
}

impl GammaFn {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            GammaFn::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck),
            GammaFn::Exp { rate } => (rate * s).exp(),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            GammaFn::Poly(c) => {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &ck)| k as f64 * ck)
                    .collect();
                d.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
            }
            GammaFn::Exp { rate } => rate * (rate * s).exp(),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            GammaFn::Poly(c) => {
                let d2: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, &ck)| (k * (k - 1)) as f64 * ck)
                    .collect();
                d2.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
            }
            GammaFn::Exp { rate } => rate * rate * (rate * s).exp(),
        }
    }
}

/// One term `p(r) u^a` of a power sum.
#[derive(Clone, Debug)]
pub struct PowerTerm {
    pub coefficient: RadialProfile,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coefficient: RadialProfile, exponent: f64) -> Self {
        PowerTerm { coefficient, exponent }
    }

    pub fn constant(p: f64, a: f64) -> Self {
        PowerTerm::new(RadialProfile::Constant(p), a)
    }
}

#[derive(Clone, Debug)]
pub enum NonlinearityFamily {
    /// sum_j p_j(r) u^{a_j}
    PowerSum { terms: Vec<PowerTerm> },
    /// p(r) u gamma(log u) + q(r) u^s
    LogGamma {
        p: RadialProfile,
        gamma: GammaFn,
        q: RadialProfile,
        s: f64,
    },
    /// p(r) u^alpha + q(r) u^beta + r_coef(r) u log u + h_coef(r) u
    Lichnerowicz {
        p: RadialProfile,
        q: RadialProfile,
        r_coef: RadialProfile,
        h_coef: RadialProfile,
        alpha: f64,
        beta: f64,
    },
    /// Pure function of r (u-independent), used by manufactured problems.
    SpatialSource { source: RadialProfile },
}

/// Values of Sigma and its partials at one (r, u).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaJet {
    pub sigma: f64,
    pub sigma_u: f64,
    pub sigma_uu: f64,
    pub sigma_x: f64,
    pub sigma_xu: f64,
}

/// Outcome of the Liouville sign conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiouvilleVerdict {
    /// Certified symbolically (power sums with termwise sign certificates).
    Holds,
    /// A sampled u violating one of the three conditions.
    Fails {
        witness_u: f64,
        condition: String,
        value: f64,
    },
    /// Grid-consistent but without a symbolic certificate; never reported as
    /// a proven hypothesis.
    Unknown,
}

impl NonlinearityFamily {
    pub fn zero() -> Self {
        NonlinearityFamily::PowerSum { terms: Vec::new() }
    }

    /// Sigma and all five partials at (r, u), u > 0.
    pub fn sigma_jet(&self, r: f64, u: f64) -> Result<SigmaJet> {
        if !(u > 0.0) {
            return Err(Error::NonPositiveValue(u));
        }
        let jet = match self {
            NonlinearityFamily::PowerSum { terms } => {
                let mut jet = SigmaJet { sigma: 0.0, sigma_u: 0.0, sigma_uu: 0.0, sigma_x: 0.0, sigma_xu: 0.0 };
                for t in terms {
                    let a = t.exponent;
                    let p = t.coefficient.eval(r);
                    let dp = t.coefficient.d1(r);
                    let ua = u.powf(a);
                    jet.sigma += p * ua;
                    jet.sigma_u += p * a * u.powf(a - 1.0);
                    jet.sigma_uu += p * a * (a - 1.0) * u.powf(a - 2.0);
                    jet.sigma_x += dp * ua;
                    jet.sigma_xu += dp * a * u.powf(a - 1.0);
                }
                jet
            }
            NonlinearityFamily::LogGamma { p, gamma, q, s } => {
                let lu = u.ln();
                let (g, g1, g2) = (gamma.eval(lu), gamma.d1(lu), gamma.d2(lu));
                let (pv, dp) = (p.eval(r), p.d1(r));
                let (qv, dq) = (q.eval(r), q.d1(r));
                let us = u.powf(*s);
                SigmaJet {
                    sigma: pv * u * g + qv * us,
                    sigma_u: pv * (g + g1) + qv * s * u.powf(s - 1.0),
                    sigma_uu: pv * (g1 + g2) / u + qv * s * (s - 1.0) * u.powf(s - 2.0),
                    sigma_x: dp * u * g + dq * us,
                    sigma_xu: dp * (g + g1) + dq * s * u.powf(s - 1.0),
                }
            }
            NonlinearityFamily::Lichnerowicz { p, q, r_coef, h_coef, alpha, beta } => {
                let (pv, dp) = (p.eval(r), p.d1(r));
                let (qv, dq) = (q.eval(r), q.d1(r));
                let (rv, dr) = (r_coef.eval(r), r_coef.d1(r));
                let (hv, dh) = (h_coef.eval(r), h_coef.d1(r));
                let lu = u.ln();
                SigmaJet {
                    sigma: pv * u.powf(*alpha) + qv * u.powf(*beta) + rv * u * lu + hv * u,
                    sigma_u: pv * alpha * u.powf(alpha - 1.0)
                        + qv * beta * u.powf(beta - 1.0)
                        + rv * (lu + 1.0)
                        + hv,
                    sigma_uu: pv * alpha * (alpha - 1.0) * u.powf(alpha - 2.0)
                        + qv * beta * (beta - 1.0) * u.powf(beta - 2.0)
                        + rv / u,
                    sigma_x: dp * u.powf(*alpha) + dq * u.powf(*beta) + dr * u * lu + dh * u,
                    sigma_xu: dp * alpha * u.powf(alpha - 1.0)
                        + dq * beta * u.powf(beta - 1.0)
                        + dr * (lu + 1.0)
                        + dh,
                }
            }
            NonlinearityFamily::SpatialSource { source } => SigmaJet {
                sigma: source.eval(r),
                sigma_u: 0.0,
                sigma_uu: 0.0,
                sigma_x: source.d1(r),
                sigma_xu: 0.0,
            },
        };
        Ok(jet)
    }

    /// Sigma(r, u) alone.
    pub fn sigma(&self, r: f64, u: f64) -> Result<f64> {
        Ok(self.sigma_jet(r, u)?.sigma)
    }

    /// Radial derivatives of Sigma^x = Sigma(., u) at frozen u:
    /// (d_r Sigma, d_rr Sigma).
    fn sigma_x_radial_derivatives(&self, r: f64, u: f64) -> Result<(f64, f64)> {
        if !(u > 0.0) {
            return Err(Error::NonPositiveValue(u));
        }
        let out = match self {
            NonlinearityFamily::PowerSum { terms } => {
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for t in terms {
                    let ua = u.powf(t.exponent);
                    d1 += t.coefficient.d1(r) * ua;
                    d2 += t.coefficient.d2(r) * ua;
                }
                (d1, d2)
            }
            NonlinearityFamily::LogGamma { p, gamma, q, s } => {
                let g = gamma.eval(u.ln());
                let us = u.powf(*s);
                (
                    p.d1(r) * u * g + q.d1(r) * us,
                    p.d2(r) * u * g + q.d2(r) * us,
                )
            }
            NonlinearityFamily::Lichnerowicz { p, q, r_coef, h_coef, alpha, beta } => {
                let (ua, ub, ul) = (u.powf(*alpha), u.powf(*beta), u * u.ln());
                (
                    p.d1(r) * ua + q.d1(r) * ub + r_coef.d1(r) * ul + h_coef.d1(r) * u,
                    p.d2(r) * ua + q.d2(r) * ub + r_coef.d2(r) * ul + h_coef.d2(r) * u,
                )
            }
            NonlinearityFamily::SpatialSource { source } => (source.d1(r), source.d2(r)),
        };
        Ok(out)
    }

    /// Drift Laplacian of Sigma^x at (r, u) with u frozen:
    /// `d_rr Sigma + ((n-1) phi'/phi - f') d_r Sigma`, with the pole limit
    /// `n d_rr Sigma(0)` (d_r Sigma(0) = 0 for smooth coefficient profiles).
    pub fn sigma_x_drift_laplacian(&self, space: &ModelSpace, r: f64, u: f64) -> Result<f64> {
        let (d1, d2) = self.sigma_x_radial_derivatives(r, u)?;
        if r <= 0.0 || (space.is_closed() && r >= space.r_max() - 1e-12) {
            return Ok(space.nf() * d2);
        }
        Ok(d2 + space.drift_laplacian_radial(r)? * d1)
    }

    /// Whether all coefficient profiles are constant in r (so Sigma = Sigma[u]).
    pub fn has_constant_coefficients(&self) -> bool {
        match self {
            NonlinearityFamily::PowerSum { terms } => {
                terms.iter().all(|t| t.coefficient.is_constant())
            }
            NonlinearityFamily::LogGamma { p, q, .. } => p.is_constant() && q.is_constant(),
            NonlinearityFamily::Lichnerowicz { p, q, r_coef, h_coef, .. } => {
                p.is_constant() && q.is_constant() && r_coef.is_constant() && h_coef.is_constant()
            }
            NonlinearityFamily::SpatialSource { source } => source.is_constant(),
        }
    }

    /// `Some(true)` when Sigma(u) > 0 for every u > 0 can be certified
    /// (power sums with nonnegative constant coefficients, at least one
    /// positive); `Some(false)` when Sigma vanishes identically. `None`
    /// otherwise.
    pub fn has_no_positive_zeros(&self) -> Option<bool> {
        match self {
            NonlinearityFamily::PowerSum { terms } => {
                let consts: Option<Vec<f64>> =
                    terms.iter().map(|t| t.coefficient.constant_value()).collect();
                let ps = consts?;
                if ps.iter().all(|&p| p == 0.0) {
                    return Some(false);
                }
                if ps.iter().all(|&p| p >= 0.0) && ps.iter().any(|&p| p > 0.0) {
                    return Some(true);
                }
                None
            }
            _ => None,
        }
    }

    /// Short description for reports.
    pub fn describe(&self) -> String {
        match self {
            NonlinearityFamily::PowerSum { terms } if terms.is_empty() => "zero".into(),
            NonlinearityFamily::PowerSum { terms } => {
                let ts: Vec<String> = terms
                    .iter()
                    .map(|t| format!("{:?} u^{}", t.coefficient, t.exponent))
                    .collect();
                format!("power_sum[{}]", ts.join(" + "))
            }
            NonlinearityFamily::LogGamma { s, .. } => format!("log_gamma(s = {s})"),
            NonlinearityFamily::Lichnerowicz { alpha, beta, .. } => {
                format!("lichnerowicz(alpha = {alpha}, beta = {beta})")
            }
            NonlinearityFamily::SpatialSource { .. } => "spatial_source".into(),
        }
    }
}

/// The three sign conditions evaluated from a jet at a single u:
/// (Sigma, u Sigma_u - Sigma, mu u^2 Sigma_uu - u Sigma_u + Sigma).
fn condition_values(jet: &SigmaJet, u: f64, mu: f64) -> (f64, f64, f64) {
    let growth = u * jet.sigma_u - jet.sigma;
    let convexity = mu * u * u * jet.sigma_uu - u * jet.sigma_u + jet.sigma;
    (jet.sigma, growth, convexity)
}

/// Checks the Liouville hypotheses for a spatially constant family over the
/// given positive u-range.
///
/// Power sums are decided by termwise sign rules
/// (`u Sigma_u - Sigma = sum p_j (a_j - 1) u^{a_j}` and
/// `mu u^2 Sigma_uu - u Sigma_u + Sigma = sum p_j (a_j - 1)(mu a_j - 1) u^{a_j}`);
/// other families fall back to a dense log-spaced u-grid and can return at
/// best `Unknown`.
pub fn liouville_conditions(
    family: &NonlinearityFamily,
    mu: f64,
    u_range: (f64, f64),
) -> Result<LiouvilleVerdict> {
    if !(mu > 1.0) {
        return Err(Error::InvalidParams(format!("mu = {mu} must exceed 1")));
    }
    let (lo, hi) = u_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParams(format!(
            "u-range ({lo}, {hi}) must be positive and ordered"
        )));
    }
    if !family.has_constant_coefficients() {
        return Err(Error::InvalidFamily(
            "Liouville conditions require spatially constant coefficients".into(),
        ));
    }

    if let NonlinearityFamily::PowerSum { terms } = family {
        let certified = terms.iter().all(|t| {
            let p = t.coefficient.constant_value().expect("constant coefficient");
            let a = t.exponent;
            p == 0.0 || (p > 0.0 && a <= 1.0 && (a == 1.0 || mu * a <= 1.0 + 1e-12))
        });
        if certified {
            return Ok(LiouvilleVerdict::Holds);
        }
    }

    // Dense grid scan; a violation is definitive, consistency is not.
    let samples = 256;
    for j in 0..=samples {
        let u = if hi == lo {
            lo
        } else {
            lo * (hi / lo).powf(j as f64 / samples as f64)
        };
        let jet = family.sigma_jet(0.0, u)?;
        let (e1, e2, e3) = condition_values(&jet, u, mu);
        let scale = 1e-12
            * (1.0 + jet.sigma.abs() + (u * jet.sigma_u).abs() + (mu * u * u * jet.sigma_uu).abs());
        if e1 < -scale {
            return Ok(LiouvilleVerdict::Fails {
                witness_u: u,
                condition: "Sigma >= 0".into(),
                value: e1,
            });
        }
        if e2 > scale {
            return Ok(LiouvilleVerdict::Fails {
                witness_u: u,
                condition: "u Sigma_u - Sigma <= 0".into(),
                value: e2,
            });
        }
        if e3 < -scale {
            return Ok(LiouvilleVerdict::Fails {
                witness_u: u,
                condition: "mu u^2 Sigma_uu - u Sigma_u + Sigma >= 0".into(),
                value: e3,
            });
        }
        if hi == lo {
            break;
        }
    }
    Ok(LiouvilleVerdict::Unknown)
}

/// Searches a logarithmic mu-grid in (1, mu_max] for a mu satisfying the
/// Liouville conditions. For power sums the window `mu <= 1/a_j` for every
/// exponent a_j in (0, 1) with positive coefficient is applied analytically.
///
/// Returns the smallest grid value with verdict `Holds`; when only
/// grid-consistent (`Unknown`) values exist, the smallest of those.
pub fn liouville_mu_search(
    family: &NonlinearityFamily,
    u_range: (f64, f64),
    mu_max: f64,
) -> Result<Option<f64>> {
    if !(mu_max > 1.0) {
        return Err(Error::InvalidParams(format!("mu_max = {mu_max} must exceed 1")));
    }
    let mut cap = mu_max;
    if let NonlinearityFamily::PowerSum { terms } = family {
        for t in terms {
            let p = t.coefficient.constant_value().ok_or_else(|| {
                Error::InvalidFamily("mu search requires constant coefficients".into())
            })?;
            let a = t.exponent;
            if p > 0.0 && a > 0.0 && a < 1.0 {
                // strict window mu < 1/a
                cap = cap.min((1.0 / a) * (1.0 - 1e-9));
            }
        }
    }
    if cap <= 1.0 {
        return Ok(None);
    }
    let grid = 64;
    let lo_off = 1e-3_f64;
    let cap_off = cap - 1.0;
    let mut first_unknown = None;
    for j in 0..grid {
        let mu = if cap_off <= lo_off {
            1.0 + cap_off * (j + 1) as f64 / grid as f64
        } else {
            1.0 + lo_off * (cap_off / lo_off).powf(j as f64 / (grid - 1) as f64)
        };
        match liouville_conditions(family, mu, u_range)? {
            LiouvilleVerdict::Holds => return Ok(Some(mu)),
            LiouvilleVerdict::Unknown if first_unknown.is_none() => first_unknown = Some(mu),
            _ => {}
        }
    }
    Ok(first_unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_space::ModelSpace;
    use crate::profiles::{Warp, Weight};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn power_sum(terms: &[(f64, f64)]) -> NonlinearityFamily {
        NonlinearityFamily::PowerSum {
            terms: terms.iter().map(|&(p, a)| PowerTerm::constant(p, a)).collect(),
        }
    }

    #[test]
    fn jet_linear_term() {
        let fam = power_sum(&[(1.0, 1.0)]);
        let jet = fam.sigma_jet(0.7, 3.0).unwrap();
        assert_eq!(jet.sigma, 3.0);
        assert_eq!(jet.sigma_u, 1.0);
        assert_eq!(jet.sigma_uu, 0.0);
        assert_eq!(jet.sigma_x, 0.0);
        assert_eq!(jet.sigma_xu, 0.0);
    }

    #[test]
    fn jet_square_root() {
        // hand differentiation of u^{1/2} at u = 4
        let fam = power_sum(&[(1.0, 0.5)]);
        let jet = fam.sigma_jet(0.0, 4.0).unwrap();
        assert!((jet.sigma - 2.0).abs() < 1e-14);
        assert!((jet.sigma_u - 0.25).abs() < 1e-14);
        assert!((jet.sigma_uu - (-1.0 / 32.0)).abs() < 1e-14);
    }

    #[test]
    fn jet_u_log_u() {
        // differentiate u log u twice: at u = e, (e, 2, 1/e)
        let fam = NonlinearityFamily::LogGamma {
            p: RadialProfile::Constant(1.0),
            gamma: GammaFn::Poly(vec![0.0, 1.0]),
            q: RadialProfile::Constant(0.0),
            s: 1.0,
        };
        let e = std::f64::consts::E;
        let jet = fam.sigma_jet(0.3, e).unwrap();
        assert!((jet.sigma - e).abs() < 1e-13);
        assert!((jet.sigma_u - 2.0).abs() < 1e-14);
        assert!((jet.sigma_uu - 1.0 / e).abs() < 1e-14);
    }

    #[test]
    fn jet_rejects_nonpositive_u() {
        let fam = power_sum(&[(1.0, 0.5)]);
        assert!(matches!(fam.sigma_jet(0.0, 0.0), Err(Error::NonPositiveValue(_))));
        assert!(matches!(fam.sigma_jet(0.0, -1.0), Err(Error::NonPositiveValue(_))));
    }

    fn sample_families(rng: &mut ChaCha8Rng) -> Vec<NonlinearityFamily> {
        let poly = |rng: &mut ChaCha8Rng| {
            RadialProfile::Polynomial(vec![
                rng.gen_range(-2.0..2.0),
                0.0,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.5..0.5),
            ])
        };
        vec![
            NonlinearityFamily::PowerSum {
                terms: vec![
                    PowerTerm::new(poly(rng), rng.gen_range(-1.5..2.5)),
                    PowerTerm::constant(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.5)),
                ],
            },
            NonlinearityFamily::LogGamma {
                p: poly(rng),
                gamma: GammaFn::Poly(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.5..0.5),
                ]),
                q: poly(rng),
                s: rng.gen_range(-1.0..2.0),
            },
            NonlinearityFamily::LogGamma {
                p: RadialProfile::Constant(rng.gen_range(0.0..2.0)),
                gamma: GammaFn::Exp { rate: rng.gen_range(-1.0..1.0) },
                q: RadialProfile::Constant(rng.gen_range(-1.0..1.0)),
                s: 0.5,
            },
            NonlinearityFamily::Lichnerowicz {
                p: poly(rng),
                q: poly(rng),
                r_coef: poly(rng),
                h_coef: poly(rng),
                alpha: rng.gen_range(0.5..3.0),
                beta: rng.gen_range(-2.0..0.5),
            },
        ]
    }

    #[test]
    fn jet_partials_match_finite_differences() {
        // 10^3 random (r, u) samples across the families; central differences
        // with step 1e-5 at relative tolerance 1e-6
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        let mut checked = 0usize;
        while checked < 1000 {
            for fam in sample_families(&mut rng) {
                let r = rng.gen_range(0.1..1.9);
                let u = rng.gen_range(0.5..5.0);
                let jet = fam.sigma_jet(r, u).unwrap();
                let s = |rr: f64, uu: f64| fam.sigma_jet(rr, uu).unwrap().sigma;
                let fd_u = (s(r, u + h) - s(r, u - h)) / (2.0 * h);
                let fd_x = (s(r + h, u) - s(r - h, u)) / (2.0 * h);
                let su = |rr: f64, uu: f64| fam.sigma_jet(rr, uu).unwrap().sigma_u;
                let fd_uu = (su(r, u + h) - su(r, u - h)) / (2.0 * h);
                let fd_xu = (su(r + h, u) - su(r - h, u)) / (2.0 * h);
                let tol = |v: f64| 1e-6 * (1.0 + v.abs());
                assert!((fd_u - jet.sigma_u).abs() < tol(jet.sigma_u), "sigma_u");
                assert!((fd_x - jet.sigma_x).abs() < tol(jet.sigma_x), "sigma_x");
                assert!((fd_uu - jet.sigma_uu).abs() < tol(jet.sigma_uu), "sigma_uu");
                assert!((fd_xu - jet.sigma_xu).abs() < tol(jet.sigma_xu), "sigma_xu");
                checked += 1;
            }
        }
    }

    #[test]
    fn drift_laplacian_of_constant_coefficients_vanishes() {
        let space =
            ModelSpace::new(3, 8.0, Warp::Euclidean, Weight::Gaussian { alpha: 0.5 }, 2.0)
                .unwrap();
        let fams = [
            power_sum(&[(1.0, 0.5), (-2.0, 2.0)]),
            NonlinearityFamily::LogGamma {
                p: RadialProfile::Constant(1.0),
                gamma: GammaFn::Poly(vec![0.0, 1.0]),
                q: RadialProfile::Constant(0.5),
                s: 2.0,
            },
        ];
        for fam in &fams {
            for r in [0.0, 0.5, 1.5] {
                for u in [0.3, 1.0, 4.0] {
                    assert_eq!(fam.sigma_x_drift_laplacian(&space, r, u).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn drift_laplacian_r_squared_coefficient() {
        // Sigma = r^2 u on flat space: Delta(r^2) = 2n, so Delta_f Sigma^x = 2n u
        let fam = NonlinearityFamily::PowerSum {
            terms: vec![PowerTerm::new(
                RadialProfile::Polynomial(vec![0.0, 0.0, 1.0]),
                1.0,
            )],
        };
        for n in [2usize, 3, 4] {
            let space = ModelSpace::new(
                n,
                n as f64,
                Warp::Euclidean,
                Weight::Constant { value: 0.0 },
                2.0,
            )
            .unwrap();
            for (r, u) in [(0.0, 1.0), (0.7, 3.0), (1.9, 0.2)] {
                let v = fam.sigma_x_drift_laplacian(&space, r, u).unwrap();
                assert!(
                    (v - 2.0 * n as f64 * u).abs() < 1e-10,
                    "n={n} r={r} u={u}: {v}"
                );
            }
        }
    }

    #[test]
    fn liouville_examples() {
        // {(1, 1/2)} with mu = 1.5: (a-1) = -1/2, (a-1)(mu a - 1) = 1/8
        let sqrt = power_sum(&[(1.0, 0.5)]);
        assert_eq!(
            liouville_conditions(&sqrt, 1.5, (1e-3, 1e3)).unwrap(),
            LiouvilleVerdict::Holds
        );
        // {(1, 2)} with mu = 2: u Sigma_u - Sigma = u^2 > 0
        let quad = power_sum(&[(1.0, 2.0)]);
        match liouville_conditions(&quad, 2.0, (1e-3, 1e3)).unwrap() {
            LiouvilleVerdict::Fails { condition, .. } => {
                assert!(condition.contains("u Sigma_u - Sigma"));
            }
            v => panic!("expected failure, got {v:?}"),
        }
        // non-constant coefficients are rejected
        let varying = NonlinearityFamily::PowerSum {
            terms: vec![PowerTerm::new(RadialProfile::Polynomial(vec![0.0, 0.0, 1.0]), 1.0)],
        };
        assert!(liouville_conditions(&varying, 2.0, (0.1, 10.0)).is_err());
    }

    #[test]
    fn mu_search_examples() {
        let sqrt = power_sum(&[(1.0, 0.5)]);
        let mu = liouville_mu_search(&sqrt, (1e-3, 1e3), 10.0).unwrap().unwrap();
        assert!(mu > 1.0 && mu < 2.0, "mu = {mu}");
        assert_eq!(
            liouville_conditions(&sqrt, mu, (1e-3, 1e3)).unwrap(),
            LiouvilleVerdict::Holds
        );

        let quad = power_sum(&[(1.0, 2.0)]);
        assert_eq!(liouville_mu_search(&quad, (1e-3, 1e3), 10.0).unwrap(), None);

        // Sigma = 0: every mu works, smallest grid value returned
        let zero = NonlinearityFamily::zero();
        let mu0 = liouville_mu_search(&zero, (1e-3, 1e3), 10.0).unwrap().unwrap();
        assert!((mu0 - 1.001).abs() < 1e-12, "mu0 = {mu0}");
    }

    #[test]
    fn power_sum_sign_rules_match_grid() {
        // termwise certificates agree with dense numeric sign checks on
        // u in [1e-3, 1e3] for random families
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let k = rng.gen_range(1..4);
            let terms: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    (
                        rng.gen_range(0.0..2.0),
                        // exponents <= 1 so a certificate is possible
                        rng.gen_range(-1.0..1.0_f64),
                    )
                })
                .collect();
            let fam = power_sum(&terms);
            let mu_cap = terms
                .iter()
                .filter(|&&(p, a)| p > 0.0 && a > 0.0)
                .map(|&(_, a)| 1.0 / a)
                .fold(10.0, f64::min);
            let mu = 1.0 + 0.9 * (mu_cap - 1.0).clamp(1e-3, 9.0);
            let verdict = liouville_conditions(&fam, mu, (1e-3, 1e3)).unwrap();
            // grid check of the three expressions directly
            let mut grid_ok = true;
            for j in 0..=200 {
                let u = 1e-3 * (1e6_f64).powf(j as f64 / 200.0);
                let jet = fam.sigma_jet(0.0, u).unwrap();
                let (e1, e2, e3) = condition_values(&jet, u, mu);
                let tol = 1e-9 * (1.0 + e1.abs() + e2.abs() + e3.abs());
                if e1 < -tol || e2 > tol || e3 < -tol {
                    grid_ok = false;
                    break;
                }
            }
            match verdict {
                LiouvilleVerdict::Holds | LiouvilleVerdict::Unknown => {
                    assert!(grid_ok, "certificate vs grid mismatch for {terms:?} mu={mu}")
                }
                LiouvilleVerdict::Fails { .. } => assert!(!grid_ok),
            }
        }
    }

    #[test]
    fn no_positive_zeros_detection() {
        assert_eq!(power_sum(&[(1.0, 0.5)]).has_no_positive_zeros(), Some(true));
        assert_eq!(NonlinearityFamily::zero().has_no_positive_zeros(), Some(false));
        assert_eq!(power_sum(&[(1.0, 1.0), (-1.0, 0.0)]).has_no_positive_zeros(), None);
    }
}
