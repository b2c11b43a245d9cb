//! Sharp-interface experiments checked against independent reference solutions.

mod geometry;
mod oracle;
mod runs;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub use geometry::{fit_radius, front_position, interface_geometry, InterfaceGeometry};
pub use oracle::{fit_slope, mcf_circle_oracle, mcf_closed_form, mcf_rk4, FrontOracle};
pub use runs::*;

use crate::grid::{GridSpec, ScalarField};
use crate::timestepper::StepError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("R0 = {r0} outside the admissible range ({lo}, {hi})")]
    RadiusOutOfRange { r0: f64, lo: f64, hi: f64 },
    #[error("no interface: phi has a single sign")]
    NoInterface,
    #[error("{0} components of {{phi > 0}}, expected one")]
    MultipleComponents(usize),
    #[error("the interface touches the domain boundary")]
    TouchesBoundary,
    #[error("the reference circle vanishes before t = {t}")]
    Extinct { t: f64 },
    #[error("the front left the domain")]
    FrontAtBoundary,
    #[error("interface lost at t = {t}: {reason}")]
    InterfaceLost { t: f64, reason: String },
    #[error("step failed at t = {t}: {source}")]
    Step { t: f64, source: StepError },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub name: String,
    pub params_used: Vec<(String, String)>,
    /// (t, measured, oracle)
    pub series: Vec<(f64, f64, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Named scalar results (speeds, ratios, flags as 0/1).
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl BenchReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params_used: Vec::new(),
            series: Vec::new(),
            max_rel_error: 0.0,
            tolerance: 0.0,
            pass: false,
            metrics: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params_used.push((key.to_string(), value.to_string()));
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn set_metric(&mut self, key: &str, value: f64) {
        self.metrics.push((key.to_string(), value));
    }

    pub fn verdict_line(&self) -> String {
        format!("{} {} max_rel_err={:e}", self.name, if self.pass { "PASS" } else { "FAIL" }, self.max_rel_error)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,measured,oracle\n");
        for (t, m, o) in &self.series {
            let _ = writeln!(s, "{t:e},{m:e},{o:e}");
        }
        s
    }

    /// `<name>.csv` with the series, and the verdict line appended to `verdict.txt`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv())?;
        let mut verdict = fs::read_to_string(dir.join("verdict.txt")).unwrap_or_default();
        verdict.push_str(&self.verdict_line());
        verdict.push('\n');
        fs::write(dir.join("verdict.txt"), verdict)
    }
}

/// Open interval of admissible circle radii: the diffuse layer must clear the walls.
pub fn circle_radius_range(grid: &GridSpec, eps: f64) -> (f64, f64) {
    (4.0 * eps, 0.5 * grid.lx.min(grid.ly) - 4.0 * eps)
}

/// φ = inside·tanh((R0 − |x − c|)/(√2 ε)).
pub fn init_tanh_circle(
    grid: GridSpec,
    r0: f64,
    eps: f64,
    center: (f64, f64),
    inside_value: f64,
) -> Result<ScalarField, BenchError> {
    let (lo, hi) = circle_radius_range(&grid, eps);
    if !(r0 > lo && r0 < hi) {
        return Err(BenchError::RadiusOutOfRange { r0, lo, hi });
    }
    let k = 1.0 / (std::f64::consts::SQRT_2 * eps);
    Ok(ScalarField::from_fn(grid, |x, y| {
        inside_value * ((r0 - (x - center.0).hypot(y - center.1)) * k).tanh()
    }))
}

/// φ = orientation·tanh((x − x0)/(√2 ε)), the +1 phase to the right for orientation 1.
pub fn init_tanh_plane(grid: GridSpec, x0: f64, eps: f64, orientation: f64) -> ScalarField {
    let k = 1.0 / (std::f64::consts::SQRT_2 * eps);
    ScalarField::from_fn(grid, |x, _| orientation * ((x - x0) * k).tanh())
}
