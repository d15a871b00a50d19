//! Scenario configuration schema (TOML) and conversion into workbench types.
//!
//! ```toml
//! [defaults]
//! grid = 512
//! seed = 42
//!
//! [[scenario]]
//! name = "gaussian-sqrt"
//! checks = ["local", "harnack", "identities"]
//!
//! [scenario.space]
//! warp = "euclidean"          # euclidean | hyperbolic | spherical
//! n = 3
//! m = 8.0
//! r_max = 2.0
//! weight = { kind = "gaussian", alpha = 0.5 }
//!
//! [scenario.family]
//! kind = "power_sum"          # power_sum | log_gamma | lichnerowicz | zero
//! terms = [{ p = 1.0, a = 0.5 }]
//!
//! [scenario.params]
//! mu = 1.5
//! eps = 0.5
//! radius = 1.0                # or optimize = true
//!
//! [scenario.boundary]
//! kind = "dirichlet"          # dirichlet | closed
//! value = 1.0
//! ```

use anyhow::{bail, Context};
use liyau::{
    BVPProblem, BoundaryCondition, GammaFn, InitialGuess, ModelSpace, NonlinearityFamily,
    PowerTerm, RadialProfile, SolverConfig, Warp, Weight,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Local,
    Global,
    Harnack,
    Liouville,
    Identities,
    Kernel,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Local => "local",
            CheckKind::Global => "global",
            CheckKind::Harnack => "harnack",
            CheckKind::Liouville => "liouville",
            CheckKind::Identities => "identities",
            CheckKind::Kernel => "kernel",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "local" => Some(CheckKind::Local),
            "global" => Some(CheckKind::Global),
            "harnack" => Some(CheckKind::Harnack),
            "liouville" => Some(CheckKind::Liouville),
            "identities" => Some(CheckKind::Identities),
            "kernel" => Some(CheckKind::Kernel),
            _ => None,
        }
    }

    pub fn needs_solve(self) -> bool {
        !matches!(self, CheckKind::Kernel)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub checks: Vec<CheckKind>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub corrupt: bool,
    pub space: Option<SpaceSpec>,
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub kernel: KernelSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub warp: String,
    pub n: usize,
    pub m: f64,
    pub r_max: f64,
    pub weight: Option<WeightSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { value: f64 },
    Gaussian { alpha: f64 },
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// constant coefficient
    pub p: Option<f64>,
    /// polynomial coefficient profile (overrides `p`)
    pub p_poly: Option<Vec<f64>>,
    pub a: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Zero,
    PowerSum {
        terms: Vec<TermSpec>,
    },
    LogGamma {
        p: f64,
        gamma: GammaSpec,
        q: f64,
        s: f64,
    },
    Lichnerowicz {
        p: f64,
        q: f64,
        r_coef: f64,
        h_coef: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    Poly { coeffs: Vec<f64> },
    Exp { rate: f64 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub radius: Option<f64>,
    #[serde(default)]
    pub optimize: bool,
    pub liouville_grad_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub newton_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_halvings: Option<usize>,
    pub continuation_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Dirichlet { value: f64 },
    Closed,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    /// base + amplitude * xi(r) with xi per-node uniform in [-1, 1] from the
    /// scenario seed
    Seeded { base: f64, amplitude: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub samples: u64,
    pub cs_trials: u64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { samples: 1_000_000, cs_trials: 10_000 }
    }
}

impl ScenarioSpec {
    pub fn build_space(&self) -> anyhow::Result<ModelSpace> {
        let spec = self
            .space
            .as_ref()
            .with_context(|| format!("scenario '{}' needs a [scenario.space] table", self.name))?;
        let warp = match spec.warp.as_str() {
            "euclidean" => Warp::Euclidean,
            "hyperbolic" => Warp::Hyperbolic,
            "spherical" => Warp::Spherical,
            other => bail!("unknown warp '{other}' (euclidean | hyperbolic | spherical)"),
        };
        let weight = match &spec.weight {
            None => Weight::Constant { value: 0.0 },
            Some(WeightSpec::Constant { value }) => Weight::Constant { value: *value },
            Some(WeightSpec::Gaussian { alpha }) => Weight::Gaussian { alpha: *alpha },
            Some(WeightSpec::Polynomial { coeffs }) => {
                Weight::Polynomial { coeffs: coeffs.clone() }
            }
        };
        Ok(ModelSpace::new(spec.n, spec.m, warp, weight, spec.r_max)?)
    }

    pub fn build_family(&self) -> anyhow::Result<NonlinearityFamily> {
        let spec = match &self.family {
            None => return Ok(NonlinearityFamily::zero()),
            Some(s) => s,
        };
        let family = match spec {
            FamilySpec::Zero => NonlinearityFamily::zero(),
            FamilySpec::PowerSum { terms } => NonlinearityFamily::PowerSum {
                terms: terms
                    .iter()
                    .map(|t| {
                        let coefficient = match (&t.p_poly, t.p) {
                            (Some(coeffs), _) => RadialProfile::Polynomial(coeffs.clone()),
                            (None, Some(p)) => RadialProfile::Constant(p),
                            (None, None) => bail!("power term needs `p` or `p_poly`"),
                        };
                        Ok(PowerTerm::new(coefficient, t.a))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?,
            },
            FamilySpec::LogGamma { p, gamma, q, s } => NonlinearityFamily::LogGamma {
                p: RadialProfile::Constant(*p),
                gamma: match gamma {
                    GammaSpec::Poly { coeffs } => GammaFn::Poly(coeffs.clone()),
                    GammaSpec::Exp { rate } => GammaFn::Exp { rate: *rate },
                },
                q: RadialProfile::Constant(*q),
                s: *s,
            },
            FamilySpec::Lichnerowicz { p, q, r_coef, h_coef, alpha, beta } => {
                NonlinearityFamily::Lichnerowicz {
                    p: RadialProfile::Constant(*p),
                    q: RadialProfile::Constant(*q),
                    r_coef: RadialProfile::Constant(*r_coef),
                    h_coef: RadialProfile::Constant(*h_coef),
                    alpha: *alpha,
                    beta: *beta,
                }
            }
        };
        Ok(family)
    }

    pub fn build_problem(
        &self,
        space: &ModelSpace,
        family: &NonlinearityFamily,
        grid: &std::sync::Arc<liyau::RadialGrid>,
        seed: u64,
    ) -> anyhow::Result<BVPProblem> {
        let boundary = match &self.boundary {
            Some(BoundarySpec::Dirichlet { value }) => BoundaryCondition::Dirichlet { value: *value },
            Some(BoundarySpec::Closed) => BoundaryCondition::ClosedPoles,
            None => {
                if space.is_closed() {
                    BoundaryCondition::ClosedPoles
                } else {
                    BoundaryCondition::Dirichlet { value: 1.0 }
                }
            }
        };
        let mut problem = BVPProblem::new(space.clone(), family.clone(), boundary)?;
        if let Some(init) = &self.initial {
            let guess = match init {
                InitialSpec::Constant { value } => InitialGuess::Constant(*value),
                InitialSpec::Seeded { base, amplitude } => {
                    use rand::{Rng, SeedableRng};
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                    let values: Vec<f64> = (0..grid.len())
                        .map(|_| base + amplitude * rng.gen_range(-1.0..1.0))
                        .collect();
                    InitialGuess::Supplied(liyau::Field::new(std::sync::Arc::clone(grid), values)?)
                }
            };
            problem = problem.with_initial_guess(guess);
        }
        Ok(problem)
    }

    pub fn build_solver_config(&self) -> SolverConfig {
        let mut config = SolverConfig::default();
        if let Some(tol) = self.solver.newton_tol {
            config.newton_tol = tol;
        }
        if let Some(it) = self.solver.max_iter {
            config.max_iter = it;
        }
        if let Some(halvings) = self.solver.max_halvings {
            config.max_halvings = halvings;
        }
        if let Some(steps) = self.solver.continuation_steps {
            config.continuation_steps = steps;
        }
        config
    }
}

pub fn parse_config(text: &str) -> Result<Config, toml::de::Error> {
    toml::from_str(text)
}
