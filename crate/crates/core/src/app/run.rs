use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
use super::config::{InitialCondition, RunConfig};
use crate::benchmarks::{init_tanh_circle, init_tanh_plane};
use crate::constitutive::{ConstitutiveError, Material};
use crate::diagnostics::{record, DiagRecord, DiagWriter};
use crate::grid::snapshot::Snapshot;
use crate::grid::{div_from_faces, ScalarField};
use crate::timestepper::{coupled_step, stable_dt, SimState, StepConfig, StepError};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.nsac";
pub const FIELDS_DIR: &str = "fields";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Material(#[from] ConstitutiveError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("initial condition: {0}")]
    Init(String),
    #[error("step {step} at t = {t} failed: {source}; last good state saved to {checkpoint}")]
    Step { step: u64, t: f64, source: StepError, checkpoint: PathBuf },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub t: f64,
    pub first: DiagRecord,
    pub last: DiagRecord,
}

/// Initial state and step index, plus the clamp mass carried over from a checkpoint.
pub fn initial_state(cfg: &RunConfig) -> Result<(SimState, u64, f64), RunError> {
    let g = cfg.grid;
    let eps = cfg.params.eps;
    let mut phi = match &cfg.init {
        InitialCondition::Checkpoint { path } => {
            let (state, header) = read_checkpoint(path, &cfg.params, &g).map_err(io_at(path))?;
            return Ok((state, header.step, header.clamp_mass));
        }
        InitialCondition::Uniform { phi } => ScalarField::constant(g, *phi),
        InitialCondition::TanhCircle { r0, center, inside } => {
            init_tanh_circle(g, *r0, eps, *center, *inside).map_err(|e| RunError::Init(e.to_string()))?
        }
        InitialCondition::TanhPlane { x0, orientation } => init_tanh_plane(g, *x0, eps, *orientation),
    };
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for x in &mut phi.values {
            *x += cfg.noise * rng.gen_range(-1.0..1.0);
        }
    }
    let theta = ScalarField::constant(g, cfg.theta0);
    Ok((SimState::at_rest(phi, &theta, &cfg.params), 0, 0.0))
}

fn write_fields(dir: &Path, state: &SimState, material: &Material, step: u64) -> io::Result<()> {
    let g = state.grid();
    let t = state.t;
    let face = |values: &[f64], nx: usize, ny: usize| Snapshot {
        nx: nx as u32,
        ny: ny as u32,
        lx: g.lx,
        ly: g.ly,
        t,
        values: values.to_vec(),
    };
    let records = [
        ("phi", Snapshot::from_scalar(&state.phi, t)),
        ("theta", Snapshot::from_scalar(&state.theta(material), t)),
        ("u", face(&state.vel.u, g.nx + 1, g.ny)),
        ("v", face(&state.vel.v, g.nx, g.ny + 1)),
        ("p", Snapshot::from_scalar(&state.p, t)),
    ];
    for (name, s) in records {
        s.save(&dir.join(format!("{name}_{step:08}.nsac")))?;
    }
    Ok(())
}

/// The time loop. Outputs go to `cfg.outdir`; a step failure saves the last good
/// state as the checkpoint before returning the error.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let material = Material::new(cfg.params.clone())?;
    let out = &cfg.outdir;
    let fields = out.join(FIELDS_DIR);
    fs::create_dir_all(&fields).map_err(io_at(&fields))?;
    let ckpt = out.join(CHECKPOINT_FILE);
    let csv = out.join(DIAGNOSTICS_FILE);

    let (mut state, mut step, mut clamp) = initial_state(cfg)?;
    let mut writer = DiagWriter::create(&csv).map_err(io_at(&csv))?;
    let max_div = |s: &SimState| div_from_faces(&s.vel).values.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let first = record(&state, &material, max_div(&state), clamp);
    writer.write(&first).map_err(io_at(&csv))?;
    if step % cfg.snapshot_every == 0 {
        write_fields(&fields, &state, &material, step).map_err(io_at(&fields))?;
    }
    let mut last = first;

    let t_tol = 1e-12 * cfg.t_end.max(1.0);
    while cfg.t_end - state.t > t_tol {
        let bound = if cfg.step.adaptive_dt { stable_dt(&state, &material, &cfg.step) } else { cfg.step.dt };
        let step_cfg = StepConfig { dt: bound.min(cfg.t_end - state.t), ..cfg.step };
        let (next, rep) = match coupled_step(&state, &material, &step_cfg) {
            Ok(x) => x,
            Err(source) => {
                let header = CheckpointHeader::new(state.t, step, &material, &cfg.grid, clamp);
                write_checkpoint(&ckpt, &state, &header).map_err(io_at(&ckpt))?;
                return Err(RunError::Step { step: step + 1, t: state.t, source, checkpoint: ckpt });
            }
        };
        state = next;
        step += 1;
        clamp += rep.clamp_mass;
        let done = cfg.t_end - state.t <= t_tol;
        if step % cfg.diag_every == 0 || done {
            last = record(&state, &material, rep.max_divergence, clamp);
            writer.write(&last).map_err(io_at(&csv))?;
        }
        if step % cfg.snapshot_every == 0 {
            write_fields(&fields, &state, &material, step).map_err(io_at(&fields))?;
        }
    }
    let header = CheckpointHeader::new(state.t, step, &material, &cfg.grid, clamp);
    write_checkpoint(&ckpt, &state, &header).map_err(io_at(&ckpt))?;
    Ok(RunSummary { steps: step, t: state.t, first, last })
}
