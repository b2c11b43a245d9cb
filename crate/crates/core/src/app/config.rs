//! Flat `key = value` run configuration with line-numbered errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::benchmarks::circle_radius_range;
use crate::constitutive::{LatentHeat, ModelParams};
use crate::grid::{AdvectionScheme, GridSpec};
use crate::timestepper::{HeatLagging, PhiSplitting, StepConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// φ ≡ value.
    Uniform { phi: f64 },
    /// φ = inside·tanh((R0 − |x − c|)/(√2 ε)).
    TanhCircle { r0: f64, center: (f64, f64), inside: f64 },
    /// φ = orientation·tanh((x − x0)/(√2 ε)).
    TanhPlane { x0: f64, orientation: f64 },
    /// Full state from `checkpoint.nsac` (the `.meta` file sits next to it).
    Checkpoint { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub step: StepConfig,
    pub init: InitialCondition,
    /// Uniform initial temperature (ignored for checkpoints).
    pub theta0: f64,
    /// Amplitude of a seeded uniform perturbation added to φ₀.
    pub noise: f64,
    pub seed: u64,
    pub t_end: f64,
    /// Steps per diagnostics record.
    pub diag_every: u64,
    /// Steps per field snapshot.
    pub snapshot_every: u64,
    pub outdir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry; `None` when the value is a default.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "model.eps",
    "model.alpha",
    "model.beta",
    "model.kappa1",
    "model.kappa2",
    "model.nu1",
    "model.nu2",
    "model.latent",
    "model.lambda",
    "model.delta",
    "model.delta0",
    "step.dt",
    "step.cfl_target",
    "step.poisson_tol",
    "step.max_iters",
    "step.phi_splitting",
    "step.heat_lagging",
    "step.phi_advection",
    "step.q_advection",
    "step.adaptive_dt",
    "init.kind",
    "init.phi",
    "init.r0",
    "init.cx",
    "init.cy",
    "init.inside",
    "init.x0",
    "init.orientation",
    "init.path",
    "init.theta",
    "init.noise",
    "run.t_end",
    "run.diag_every",
    "run.snapshot_every",
    "run.outdir",
    "run.seed",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn get<T: FromStr>(&self, key: &str, default: T, what: &str) -> Result<T, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse().map_err(|_| ConfigError {
                line: Some(*line),
                message: format!("{key}: expected {what}, got `{raw}`"),
            }),
        }
    }

    fn num(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v: f64 = self.get(key, default, "a number")?;
        if !v.is_finite() {
            return Err(self.err(key, format!("{key} must be finite, got {v}")));
        }
        Ok(v)
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(default),
            Some((line, raw)) => {
                raw.parse().map_err(|e: T::Err| ConfigError { line: Some(*line), message: format!("{key}: {e}") })
            }
        }
    }

    fn err(&self, key: &str, message: String) -> ConfigError {
        ConfigError { line: self.line(key), message }
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError { line: Some(line), message: format!("expected `key = value`, got `{body}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError { line: Some(line), message: format!("unknown key `{key}`") });
        }
        if value.is_empty() {
            return Err(ConfigError { line: Some(line), message: format!("{key}: missing value") });
        }
        if let Some((first, _)) = map.get(key) {
            return Err(ConfigError {
                line: Some(line),
                message: format!("duplicate key `{key}` (lines {first} and {line})"),
            });
        }
        map.insert(key.to_string(), (line, value.to_string()));
    }
    Ok(Entries { map })
}

/// Which config key a ModelParams or StepConfig message is about.
fn key_of_message(msg: &str) -> &'static str {
    const PREFIXES: &[(&str, &str)] = &[
        ("eps ", "model.eps"),
        ("alpha ", "model.alpha"),
        ("beta ", "model.beta"),
        ("kappa1", "model.kappa1"),
        ("viscosity", "model.nu1"),
        ("lambda ", "model.lambda"),
        ("delta0 ", "model.delta0"),
        ("delta ", "model.delta"),
        ("dt ", "step.dt"),
        ("cfl_target ", "step.cfl_target"),
        ("poisson_tol ", "step.poisson_tol"),
        ("max_iters ", "step.max_iters"),
    ];
    PREFIXES.iter().find(|(p, _)| msg.starts_with(p)).map_or("", |(_, k)| k)
}

/// Parse and fully validate a run configuration. Only `grid.nx` is required.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let Some(nx_line) = e.line("grid.nx") else {
        return Err(ConfigError { line: None, message: "missing required key `grid.nx`".into() });
    };
    let nx: usize = e.get("grid.nx", 0, "a cell count")?;
    let ny: usize = e.get("grid.ny", nx, "a cell count")?;
    let lx = e.num("grid.lx", 1.0)?;
    let ly = e.num("grid.ly", lx * ny as f64 / nx.max(1) as f64)?;
    let grid = GridSpec::new(nx, ny, lx, ly).map_err(|err| {
        let line = if lx <= 0.0 || ly <= 0.0 { e.line("grid.lx").or(e.line("grid.ly")) } else { Some(nx_line) };
        ConfigError { line, message: err.to_string() }
    })?;

    let d = ModelParams::default();
    let latent = match e.get("model.latent", "arctan".to_string(), "a latent-heat class")?.as_str() {
        "arctan" => {
            if e.line("model.lambda").is_some() {
                return Err(e.err("model.lambda", "model.lambda only applies to model.latent = linear".into()));
            }
            LatentHeat::Arctan
        }
        "linear" => LatentHeat::Linear { lambda: e.num("model.lambda", 1.0)? },
        other => {
            return Err(e.err("model.latent", format!("model.latent: expected `arctan` or `linear`, got `{other}`")))
        }
    };
    let params = ModelParams {
        eps: e.num("model.eps", d.eps)?,
        alpha: e.num("model.alpha", d.alpha)?,
        beta: e.num("model.beta", d.beta)?,
        kappa1: e.num("model.kappa1", d.kappa1)?,
        kappa2: e.num("model.kappa2", d.kappa2)?,
        nu1: e.num("model.nu1", d.nu1)?,
        nu2: e.num("model.nu2", d.nu2)?,
        latent,
        delta: e.num("model.delta", d.delta)?,
        delta0: e.num("model.delta0", d.delta0)?,
    };
    params.validate().map_err(|err| {
        let msg = err.to_string();
        e.err(key_of_message(&msg), msg)
    })?;

    let sd = StepConfig::default();
    let step = StepConfig {
        dt: e.num("step.dt", sd.dt)?,
        cfl_target: e.num("step.cfl_target", sd.cfl_target)?,
        poisson_tol: e.num("step.poisson_tol", sd.poisson_tol)?,
        max_iters: e.get("step.max_iters", sd.max_iters, "an iteration count")?,
        phi_splitting: e.parsed::<PhiSplitting>("step.phi_splitting", sd.phi_splitting)?,
        heat_lagging: e.parsed::<HeatLagging>("step.heat_lagging", sd.heat_lagging)?,
        phi_advection: e.parsed::<AdvectionScheme>("step.phi_advection", sd.phi_advection)?,
        q_advection: e.parsed::<AdvectionScheme>("step.q_advection", sd.q_advection)?,
        adaptive_dt: e.get("step.adaptive_dt", sd.adaptive_dt, "`true` or `false`")?,
    };
    step.validate().map_err(|msg| e.err(key_of_message(&msg), msg))?;

    let init = parse_init(&e, &grid, params.eps)?;
    let theta0 = e.num("init.theta", 1.0)?;
    if theta0 <= 0.0 {
        return Err(e.err("init.theta", format!("init.theta must be positive, got {theta0}")));
    }
    let noise = e.num("init.noise", 0.0)?;
    if noise < 0.0 {
        return Err(e.err("init.noise", format!("init.noise must be nonnegative, got {noise}")));
    }

    let t_end = e.num("run.t_end", 0.05)?;
    if t_end < 0.0 {
        return Err(e.err("run.t_end", format!("run.t_end must be nonnegative, got {t_end}")));
    }
    let diag_every: u64 = e.get("run.diag_every", 1, "a step count")?;
    let snapshot_every: u64 = e.get("run.snapshot_every", 100, "a step count")?;
    for (key, v) in [("run.diag_every", diag_every), ("run.snapshot_every", snapshot_every)] {
        if v == 0 {
            return Err(e.err(key, format!("{key} must be at least 1")));
        }
    }
    Ok(RunConfig {
        grid,
        params,
        step,
        init,
        theta0,
        noise,
        seed: e.get("run.seed", 0, "an unsigned integer")?,
        t_end,
        diag_every,
        snapshot_every,
        outdir: PathBuf::from(e.get("run.outdir", "out".to_string(), "a path")?),
    })
}

fn parse_init(e: &Entries, grid: &GridSpec, eps: f64) -> Result<InitialCondition, ConfigError> {
    let kind: String = e.get("init.kind", "tanh-circle".to_string(), "an initial-condition kind")?;
    let allowed: &[&str] = match kind.as_str() {
        "uniform" => &["init.phi"],
        "tanh-circle" => &["init.r0", "init.cx", "init.cy", "init.inside"],
        "tanh-plane" => &["init.x0", "init.orientation"],
        "checkpoint" => &["init.path"],
        other => {
            return Err(e.err(
                "init.kind",
                format!("init.kind: expected `uniform`, `tanh-circle`, `tanh-plane` or `checkpoint`, got `{other}`"),
            ))
        }
    };
    for key in ["init.phi", "init.r0", "init.cx", "init.cy", "init.inside", "init.x0", "init.orientation", "init.path"] {
        if e.line(key).is_some() && !allowed.contains(&key) {
            return Err(e.err(key, format!("{key} does not apply to init.kind = {kind}")));
        }
    }
    let unit = |key: &str, v: f64| -> Result<f64, ConfigError> {
        if v == 1.0 || v == -1.0 {
            Ok(v)
        } else {
            Err(e.err(key, format!("{key} must be 1 or -1, got {v}")))
        }
    };
    Ok(match kind.as_str() {
        "uniform" => InitialCondition::Uniform { phi: e.num("init.phi", -1.0)? },
        "tanh-circle" => {
            let r0 = e.num("init.r0", 0.25)?;
            let center = (e.num("init.cx", 0.5 * grid.lx)?, e.num("init.cy", 0.5 * grid.ly)?);
            let (lo, hi) = circle_radius_range(grid, eps);
            if !(r0 > lo && r0 < hi) {
                return Err(e.err("init.r0", format!("init.r0 must lie in ({lo}, {hi}) for this grid and eps, got {r0}")));
            }
            let clear = 4.0 * eps + r0;
            if center.0 < clear || center.0 > grid.lx - clear || center.1 < clear || center.1 > grid.ly - clear {
                let key = if e.line("init.cx").is_some() { "init.cx" } else { "init.cy" };
                return Err(e.err(key, format!("circle at ({}, {}) with radius {r0} comes within 4 eps of a wall", center.0, center.1)));
            }
            InitialCondition::TanhCircle { r0, center, inside: unit("init.inside", e.num("init.inside", 1.0)?)? }
        }
        "tanh-plane" => {
            let x0 = e.num("init.x0", 0.5 * grid.lx)?;
            if !(x0 > 0.0 && x0 < grid.lx) {
                return Err(e.err("init.x0", format!("init.x0 must lie inside (0, {}), got {x0}", grid.lx)));
            }
            InitialCondition::TanhPlane { x0, orientation: unit("init.orientation", e.num("init.orientation", 1.0)?)? }
        }
        _ => match e.map.get("init.path") {
            Some((_, p)) => InitialCondition::Checkpoint { path: PathBuf::from(p) },
            None => return Err(e.err("init.kind", "init.kind = checkpoint needs init.path".into())),
        },
    })
}
