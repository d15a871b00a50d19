//! Self-contained verification of the algebraic ingredients behind the
//! gradient estimate: the quadratic completion inequality, the concrete C^2
//! cutoff profile with its derivative constants, the Cauchy-Schwarz chain for
//! the dimensional term, and the `x coth x <= 1 + x` bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::coth;

/// One admissible parameter tuple of the completion inequality:
/// a, b, z real; c >= 0; y > 0; mu > 1; eps in (0,1); y - mu z > 0.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlgebraSample {
    pub a: f64,
    pub b: f64,
    pub z: f64,
    pub c: f64,
    pub y: f64,
    pub mu: f64,
    pub eps: f64,
}

impl AlgebraSample {
    pub fn new(a: f64, b: f64, z: f64, c: f64, y: f64, mu: f64, eps: f64) -> Result<Self> {
        if !(y > 0.0) {
            return Err(Error::Precondition(format!("y = {y} must be positive")));
        }
        if c < 0.0 {
            return Err(Error::Precondition(format!("c = {c} must be nonnegative")));
        }
        if !(mu > 1.0) {
            return Err(Error::Precondition(format!("mu = {mu} must exceed 1")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!("eps = {eps} must lie in (0,1)")));
        }
        if !(y - mu * z > 0.0) {
            return Err(Error::Precondition(format!(
                "y - mu z = {} must be positive",
                y - mu * z
            )));
        }
        Ok(AlgebraSample { a, b, z, c, y, mu, eps })
    }
}

/// Both sides of the inequality
///
/// ```text
/// (y-z)^2 - a sqrt(y)(y - mu z) - b y - c sqrt(y)
///   >= (y - mu z)^2/mu^2 - a^2 mu^2 (y - mu z)/(8(mu-1))
///      - (3/4) c^{4/3} [mu^2/(4 eps (mu-1)^2)]^{1/3}
///      - mu^2 b^2/(4(1-eps)(mu-1)^2).
/// ```
///
/// The c-term extends continuously to 0 at c = 0.
pub fn lemma34_sides(s: &AlgebraSample) -> (f64, f64) {
    let AlgebraSample { a, b, z, c, y, mu, eps } = *s;
    let sy = y.sqrt();
    let w = y - mu * z;
    let lhs = (y - z) * (y - z) - a * sy * w - b * y - c * sy;
    let mm1 = mu - 1.0;
    let rhs = w * w / (mu * mu)
        - a * a * mu * mu * w / (8.0 * mm1)
        - 0.75 * c.powf(4.0 / 3.0) * (mu * mu / (4.0 * eps * mm1 * mm1)).powf(1.0 / 3.0)
        - mu * mu * b * b / (4.0 * (1.0 - eps) * mm1 * mm1);
    (lhs, rhs)
}

/// LHS - RHS; nonnegative up to rounding for every admissible sample.
pub fn lemma34_slack(s: &AlgebraSample) -> f64 {
    let (lhs, rhs) = lemma34_sides(s);
    lhs - rhs
}

/// Rounding scale used to normalize the slack.
pub fn lemma34_scale(s: &AlgebraSample) -> f64 {
    let (lhs, rhs) = lemma34_sides(s);
    1.0 + lhs.abs() + rhs.abs()
}

/// Draws one admissible sample: y log-uniform over [1e-3, 1e3], z uniform in
/// (-y, y/mu), mu in (1, 10], eps in (0.01, 0.99), a, b in [-10, 10],
/// c in (0, 10].
pub fn sample_algebra(rng: &mut impl Rng) -> AlgebraSample {
    let y = 1e-3 * 1e6_f64.powf(rng.gen::<f64>());
    let mu = 1.0 + 9.0 * rng.gen_range(1e-6..1.0_f64);
    let z = rng.gen_range(-y..y / mu);
    AlgebraSample {
        a: rng.gen_range(-10.0..10.0),
        b: rng.gen_range(-10.0..10.0),
        z,
        c: rng.gen_range(1e-12..10.0),
        y,
        mu,
        eps: rng.gen_range(0.01..0.99),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma34Witness {
    pub index: u64,
    pub sample: AlgebraSample,
    pub slack: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma34Outcome {
    pub samples: u64,
    pub seed: u64,
    /// min over samples of slack/scale
    pub min_normalized_slack: f64,
    pub worst_index: u64,
    pub failures: Vec<Lemma34Witness>,
}

impl Lemma34Outcome {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.min_normalized_slack >= -1e-10
    }
}

/// Seeded Monte-Carlo sweep; sample i uses its own `ChaCha8Rng(seed ^ i)`,
/// so the sweep parallelizes deterministically.
pub fn lemma34_monte_carlo(samples: u64, seed: u64) -> Lemma34Outcome {
    let per_sample = |i: u64| -> (f64, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i);
        let s = sample_algebra(&mut rng);
        (lemma34_slack(&s) / lemma34_scale(&s), i)
    };
    let (min_normalized, worst_index) = (0..samples)
        .into_par_iter()
        .map(per_sample)
        .reduce(
            || (f64::INFINITY, 0),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    let failures: Vec<Lemma34Witness> = (0..samples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i);
            let s = sample_algebra(&mut rng);
            let slack = lemma34_slack(&s);
            let scale = lemma34_scale(&s);
            (slack < -1e-10 * scale).then_some(Lemma34Witness { index: i, sample: s, slack, scale })
        })
        .collect();
    Lemma34Outcome {
        samples,
        seed,
        min_normalized_slack: min_normalized,
        worst_index,
        failures,
    }
}

/// The concrete cutoff: 1 on [0,1], 0 on [2, inf), and on [1,2] the quintic
/// smoothstep complement `1 - S(t-1)` with `S(s) = 6s^5 - 15s^4 + 10s^3`.
/// Near t = 2 the profile behaves like `10 (2-t)^3`, so the ratio
/// `-psi'/sqrt(psi)` vanishes there and both derivative constants are finite.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffProfile {
    /// sup of -psi'/sqrt(psi)
    pub c1: f64,
    /// sup of -psi''
    pub c2: f64,
}

impl CutoffProfile {
    pub fn psi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            1.0 - smoothstep(t - 1.0)
        }
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        if !(1.0..2.0).contains(&t) {
            0.0
        } else {
            -smoothstep_d1(t - 1.0)
        }
    }

    pub fn ddpsi(&self, t: f64) -> f64 {
        if !(1.0..2.0).contains(&t) {
            0.0
        } else {
            -smoothstep_d2(t - 1.0)
        }
    }

    /// -psi'/sqrt(psi), defined as 0 where psi vanishes.
    pub fn derivative_ratio(&self, t: f64) -> f64 {
        let p = self.psi(t);
        if p <= 0.0 {
            0.0
        } else {
            -self.dpsi(t) / p.sqrt()
        }
    }
}

fn smoothstep(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn smoothstep_d1(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

fn smoothstep_d2(s: f64) -> f64 {
    60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// Number of grid points used to maximize the cutoff constants.
pub const CUTOFF_GRID: usize = 100_000;

/// Builds the quintic profile; c1 and c2 are dense-grid maxima over [1, 2].
pub fn quintic_cutoff() -> CutoffProfile {
    let mut profile = CutoffProfile { c1: 0.0, c2: 0.0 };
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    for j in 1..CUTOFF_GRID {
        let t = 1.0 + j as f64 / CUTOFF_GRID as f64;
        c1 = c1.max(profile.derivative_ratio(t));
        c2 = c2.max(-profile.ddpsi(t));
    }
    profile.c1 = c1;
    profile.c2 = c2;
    profile
}

/// Grid verification of the three cutoff conditions.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffCheck {
    /// class C^2: one-sided second differences agree at the seams t = 1, 2
    pub c2_continuity_gap: f64,
    /// 0 <= psi <= 1, psi = 1 on [0,1], psi = 0 on [2, inf)
    pub range_ok: bool,
    /// psi' <= 0 everywhere
    pub monotone_ok: bool,
    /// -c1 <= psi'/sqrt(psi) <= 0 on the grid
    pub ratio_bound_ok: bool,
    /// psi'' >= -c2 on the grid
    pub second_bound_ok: bool,
    /// ratio value at the probe t = 2 - 1e-6 (tends to 0 at t -> 2-)
    pub edge_ratio: f64,
}

impl CutoffCheck {
    pub fn all_pass(&self) -> bool {
        self.range_ok
            && self.monotone_ok
            && self.ratio_bound_ok
            && self.second_bound_ok
            && self.c2_continuity_gap < 1e-2
            && self.edge_ratio < 1e-2
    }
}

/// Checks conditions (i)-(iii) on `points` grid nodes over [0, 2] plus a
/// near-edge probe at t = 2 - 1e-6.
pub fn verify_cutoff(profile: &CutoffProfile, points: usize) -> CutoffCheck {
    let mut range_ok = true;
    let mut monotone_ok = true;
    let mut ratio_bound_ok = true;
    let mut second_bound_ok = true;
    for j in 0..=points {
        let t = 2.0 * j as f64 / points as f64;
        let p = profile.psi(t);
        range_ok &= (0.0..=1.0).contains(&p);
        if t <= 1.0 {
            range_ok &= p == 1.0;
        }
        monotone_ok &= profile.dpsi(t) <= 0.0;
        let ratio = profile.derivative_ratio(t);
        ratio_bound_ok &= (0.0..=profile.c1 + 1e-12).contains(&ratio);
        second_bound_ok &= profile.ddpsi(t) >= -profile.c2 - 1e-12;
    }
    range_ok &= profile.psi(2.0) == 0.0 && profile.psi(5.0) == 0.0;

    // one-sided second differences at the seams, O(h) agreement
    let h = 1e-4;
    let second = |t0: f64, dir: f64| {
        (profile.psi(t0 + 2.0 * dir * h) - 2.0 * profile.psi(t0 + dir * h) + profile.psi(t0))
            / (h * h)
    };
    let gap1 = (second(1.0, 1.0) - second(1.0, -1.0)).abs();
    let gap2 = (second(2.0, 1.0) - second(2.0, -1.0)).abs();

    CutoffCheck {
        c2_continuity_gap: gap1.max(gap2),
        range_ok,
        monotone_ok,
        ratio_bound_ok,
        second_bound_ok,
        edge_ratio: profile.derivative_ratio(2.0 - 1e-6),
    }
}

/// Cauchy-Schwarz chain on a symmetric trial matrix H (row-major n x n,
/// symmetrized internally) and a scalar w standing in for <grad f, grad u>:
///
/// slack1 = |H|_F^2 - (tr H)^2/n >= 0
/// slack2 = (tr H)^2/n + w^2/(m-n) - (tr H - w)^2/m >= 0
pub fn cs_chain_check(n: usize, m: f64, matrix: &[f64], w: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("n = {n} must be >= 2")));
    }
    if !(m > n as f64) {
        return Err(Error::RequiresMGreaterN { m, n });
    }
    if matrix.len() != n * n {
        return Err(Error::InvalidParams(format!(
            "matrix must be {n} x {n} row-major, got {} entries",
            matrix.len()
        )));
    }
    let nf = n as f64;
    let mut frob = 0.0;
    let mut trace = 0.0;
    for i in 0..n {
        trace += matrix[i * n + i];
        for j in 0..n {
            let sym = 0.5 * (matrix[i * n + j] + matrix[j * n + i]);
            frob += sym * sym;
        }
    }
    let slack1 = frob - trace * trace / nf;
    let slack2 = trace * trace / nf + w * w / (m - nf) - (trace - w) * (trace - w) / m;
    Ok((slack1, slack2))
}

/// `1 + x - x coth x >= 0` for x > 0; the slack tends to 0 as x -> 0+.
pub fn coth_bound_check(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("x = {x} must be positive")));
    }
    Ok(1.0 + x - x * coth(x))
}
