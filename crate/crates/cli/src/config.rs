//! Problem configuration files.
//!
//! ```toml
//! [plant]
//! n = 1
//! m = 1
//! fhat = ["-sin(2*x1) - x1*u1 - 0.2*x1 - u1^2 + u1"]
//! delta = ["1 - exp(-0.5*(x1^2 + u1^2))"]
//! w_cons = "[-2,2],[-2,2]"
//! alpha = 1e-6
//!
//! [run]
//! eps = 1e-3
//! seed = 1
//!
//! [lyapunov]
//! expr = "x1^2"
//! ```

use std::fmt;
use std::path::Path;

use rdoa_core::expr::parse;
use rdoa_core::rnis::{LyapunovFn, PlantSet, RnisOptions};
use rdoa_core::sim::{ErrorMode, SimOptions};
use rdoa_core::synth::{self, LyapunovSpec, PsoOptions};
use rdoa_core::BoxVec;
use serde::{Deserialize, Serialize};

/// Malformed configuration or expression; the binary exits with code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub plant: PlantConfig,
    #[serde(default)]
    pub run: RunConfig,
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub n: usize,
    pub m: usize,
    pub fhat: Vec<String>,
    pub delta: Vec<String>,
    /// `"[lo,hi],[lo,hi],..."` over states then controls.
    pub w_cons: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub eps: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Count `X₀` from the linear gain as a safe landing set.
    pub core: bool,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            seed: 0,
            max_iter: 1000,
            core: true,
            out: None,
        }
    }
}

/// Either `expr`, or `d` with the row-major entries `p` of `P`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub expr: Option<String>,
    pub d: Option<usize>,
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoConfig {
    pub d: usize,
    pub swarm: usize,
    pub budget: usize,
    /// Objective resolution; `run.eps` when absent.
    pub eps: Option<f64>,
    /// Start one particle at the configured `P`, if any.
    pub seed_with_lyapunov: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            d: 2,
            swarm: 20,
            budget: 30,
            eps: None,
            seed_with_lyapunov: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub pole: f64,
    pub contraction: f64,
    /// Training point spacing; `10 · eps` when absent.
    pub spacing: Option<f64>,
    pub grid: usize,
    /// Refits that add failing grid points as training points.
    pub rounds: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            pole: synth::DEFAULT_POLE,
            contraction: synth::DEFAULT_CONTRACTION,
            spacing: None,
            grid: 2000,
            rounds: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub count: usize,
    pub steps: usize,
    pub conv_tol: f64,
    /// `"uniform"` or `"extreme"`.
    pub errors: String,
    /// `"fitted"` or `"random"`.
    pub policy: String,
    /// Initial-state boxes; the invariant set projection with `X₀` when absent.
    pub region: Option<Vec<String>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            count: 200,
            steps: 200,
            conv_tol: 0.01,
            errors: "uniform".into(),
            policy: "fitted".into(),
            region: None,
        }
    }
}

fn default_alpha() -> f64 {
    1e-6
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> ParseError {
    ParseError(msg.into())
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ParseError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ParseError> {
        if let Some(e) = o.eps {
            self.run.eps = e;
        }
        if let Some(a) = o.alpha {
            self.plant.alpha = a;
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ParseError> {
        if !(self.run.eps > 0.0) {
            return Err(bad(format!(
                "run.eps must be positive, got {}",
                self.run.eps
            )));
        }
        if self.pso.eps.is_some_and(|e| !(e > 0.0)) {
            return Err(bad("pso.eps must be positive"));
        }
        if self.pso.budget == 0 || self.pso.swarm == 0 {
            return Err(bad("pso.budget and pso.swarm must be at least 1"));
        }
        if self.sim.count == 0 {
            return Err(bad("sim.count must be at least 1"));
        }
        self.sim_options()?;
        match (&self.lyapunov.expr, &self.lyapunov.d, &self.lyapunov.p) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return Err(bad("lyapunov: give either expr, or d and p")),
        }
        self.plant()?;
        self.lyapunov_fn()?;
        Ok(())
    }

    pub fn plant(&self) -> Result<PlantSet, ParseError> {
        let pc = &self.plant;
        let exprs = |list: &[String], what: &str| {
            list.iter()
                .enumerate()
                .map(|(i, s)| {
                    parse(s, pc.n, pc.m).map_err(|e| bad(format!("plant.{what}[{i}]: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let fhat = exprs(&pc.fhat, "fhat")?;
        let delta = exprs(&pc.delta, "delta")?;
        let w: BoxVec = pc
            .w_cons
            .parse()
            .map_err(|e| bad(format!("plant.w_cons: {e}")))?;
        PlantSet::new(fhat, delta, pc.n, pc.m, w, pc.alpha).map_err(|e| bad(format!("plant: {e}")))
    }

    /// The configured `P`, when given in matrix form.
    pub fn lyapunov_spec(&self) -> Result<Option<LyapunovSpec>, ParseError> {
        match (&self.lyapunov.d, &self.lyapunov.p) {
            (Some(d), Some(p)) => LyapunovSpec::from_entries(p, self.plant.n, *d)
                .map(Some)
                .map_err(|e| bad(format!("lyapunov: {e}"))),
            _ => Ok(None),
        }
    }

    pub fn lyapunov_fn(&self) -> Result<LyapunovFn, ParseError> {
        let n = self.plant.n;
        if let Some(text) = &self.lyapunov.expr {
            let e = parse(text, n, 0).map_err(|e| bad(format!("lyapunov.expr: {e}")))?;
            let root: BoxVec = self
                .plant
                .w_cons
                .parse()
                .map_err(|e| bad(format!("plant.w_cons: {e}")))?;
            if root.dim() < n {
                return Err(bad("plant.w_cons is too short"));
            }
            return LyapunovFn::new(e, n, &root.head(n)).map_err(|e| bad(format!("lyapunov: {e}")));
        }
        let spec = self.lyapunov_spec()?.expect("validated: d and p present");
        synth::lyapunov_from_p(&spec).map_err(|e| bad(format!("lyapunov: {e}")))
    }

    pub fn rnis_options(&self) -> RnisOptions {
        RnisOptions {
            max_iter: self.run.max_iter,
            ..RnisOptions::new(self.run.eps)
        }
    }

    pub fn pso_options(&self) -> PsoOptions {
        PsoOptions {
            swarm: self.pso.swarm,
            budget: self.pso.budget,
            seed: self.run.seed,
            ..PsoOptions::default()
        }
    }

    pub fn sim_options(&self) -> Result<SimOptions, ParseError> {
        let errors = match self.sim.errors.as_str() {
            "uniform" => ErrorMode::Uniform,
            "extreme" => ErrorMode::Extreme,
            other => {
                return Err(bad(format!(
                    "sim.errors: expected uniform or extreme, got '{other}'"
                )))
            }
        };
        if !matches!(self.sim.policy.as_str(), "fitted" | "random") {
            return Err(bad(format!(
                "sim.policy: expected fitted or random, got '{}'",
                self.sim.policy
            )));
        }
        Ok(SimOptions {
            steps: self.sim.steps,
            conv_tol: self.sim.conv_tol,
            errors,
        })
    }

    pub fn sim_region(&self) -> Result<Option<Vec<BoxVec>>, ParseError> {
        let Some(list) = &self.sim.region else {
            return Ok(None);
        };
        list.iter()
            .map(|s| {
                let b: BoxVec = s.parse().map_err(|e| bad(format!("sim.region: {e}")))?;
                if b.dim() != self.plant.n {
                    return Err(bad(format!("sim.region: '{s}' is not a state box")));
                }
                Ok(b)
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Human-readable label of the Lyapunov function.
    pub fn lyapunov_label(&self) -> String {
        match &self.lyapunov.expr {
            Some(e) => e.clone(),
            None => match self.lyapunov_fn() {
                Ok(l) => l.expr().to_string(),
                Err(_) => "P".into(),
            },
        }
    }
}

#[cfg(test)]
pub(crate) const EXAMPLE: &str = r#"
[plant]
n = 1
m = 1
fhat = ["-sin(2*x1) - x1*u1 - 0.2*x1 - u1^2 + u1"]
delta = ["1 - exp(-0.5*(x1^2 + u1^2))"]
w_cons = "[-2,2],[-2,2]"
alpha = 1e-6

[run]
eps = 0.01
seed = 1

[lyapunov]
expr = "x1^2"
"#;
