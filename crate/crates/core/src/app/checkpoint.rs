//! Restartable state: `checkpoint.nsac` holds φ, q, u, v, p as consecutive
//! snapshot records; `checkpoint.meta` is a small `key = value` header.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::constitutive::{LatentHeat, ModelParams};
use crate::grid::snapshot::Snapshot;
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::timestepper::SimState;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub t: f64,
    pub step: u64,
    pub params_digest: String,
    pub grid_digest: String,
    /// Cumulative q-clamp mass up to this step, so diagnostics continue seamlessly.
    pub clamp_mass: f64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn params_digest(p: &ModelParams) -> String {
    let mut h = Sha256::new();
    for x in [p.eps, p.alpha, p.beta, p.kappa1, p.kappa2, p.nu1, p.nu2, p.delta, p.delta0] {
        h.update(x.to_le_bytes());
    }
    match p.latent {
        LatentHeat::Arctan => h.update(b"arctan"),
        LatentHeat::Linear { lambda } => {
            h.update(b"linear");
            h.update(lambda.to_le_bytes());
        }
    }
    hex(&h.finalize())
}

pub fn grid_digest(g: &GridSpec) -> String {
    hex(&Sha256::digest(g.digest_bytes()))
}

impl CheckpointHeader {
    pub fn new(t: f64, step: u64, params: &ModelParams, grid: &GridSpec, clamp_mass: f64) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            t,
            step,
            params_digest: params_digest(params),
            grid_digest: grid_digest(grid),
            clamp_mass,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "version = {}\nt = {:e}\nstep = {}\nparams_digest = {}\ngrid_digest = {}\nclamp_mass = {:e}\n",
            self.version, self.t, self.step, self.params_digest, self.grid_digest, self.clamp_mass
        )
    }

    pub fn parse(text: &str) -> io::Result<Self> {
        let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("malformed meta line `{line}`")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("meta is missing `{k}`")));
        let num = |k: &str| get(k)?.parse::<f64>().map_err(|_| bad(format!("meta `{k}` is not a number")));
        Ok(Self {
            version: get("version")?.parse().map_err(|_| bad("meta `version` is not an integer".into()))?,
            t: num("t")?,
            step: get("step")?.parse().map_err(|_| bad("meta `step` is not an integer".into()))?,
            params_digest: get("params_digest")?.to_string(),
            grid_digest: get("grid_digest")?.to_string(),
            clamp_mass: num("clamp_mass")?,
        })
    }
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("meta")
}

fn face_snapshot(g: &GridSpec, values: &[f64], nx: usize, ny: usize, t: f64) -> Snapshot {
    Snapshot { nx: nx as u32, ny: ny as u32, lx: g.lx, ly: g.ly, t, values: values.to_vec() }
}

/// Write both files through temporaries so an interrupted write leaves the old pair intact.
pub fn write_checkpoint(path: &Path, state: &SimState, header: &CheckpointHeader) -> io::Result<()> {
    let g = state.grid();
    let tmp = path.with_extension("nsac.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        Snapshot::from_scalar(&state.phi, state.t).write_to(&mut w)?;
        Snapshot::from_scalar(&state.q, state.t).write_to(&mut w)?;
        face_snapshot(&g, &state.vel.u, g.nx + 1, g.ny, state.t).write_to(&mut w)?;
        face_snapshot(&g, &state.vel.v, g.nx, g.ny + 1, state.t).write_to(&mut w)?;
        Snapshot::from_scalar(&state.p, state.t).write_to(&mut w)?;
        w.flush()?;
    }
    let meta = meta_path(path);
    let meta_tmp = meta.with_extension("meta.tmp");
    fs::write(&meta_tmp, header.to_text())?;
    fs::rename(&tmp, path)?;
    fs::rename(&meta_tmp, &meta)
}

/// Restore a state written by [`write_checkpoint`]; both digests must match.
pub fn read_checkpoint(path: &Path, params: &ModelParams, grid: &GridSpec) -> io::Result<(SimState, CheckpointHeader)> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let header = CheckpointHeader::parse(&fs::read_to_string(meta_path(path))?)?;
    if header.version != CHECKPOINT_VERSION {
        return Err(bad(format!("checkpoint version {} (expected {CHECKPOINT_VERSION})", header.version)));
    }
    if header.params_digest != params_digest(params) {
        return Err(bad("checkpoint model parameters differ from the configuration".into()));
    }
    if header.grid_digest != grid_digest(grid) {
        return Err(bad("checkpoint grid differs from the configuration".into()));
    }
    let mut r = BufReader::new(File::open(path)?);
    let mut next = |nx: usize, ny: usize| -> io::Result<Snapshot> {
        let s = Snapshot::read_from(&mut r)?;
        if s.nx as usize != nx || s.ny as usize != ny {
            return Err(bad(format!("checkpoint record is {}x{}, expected {nx}x{ny}", s.nx, s.ny)));
        }
        if s.t.to_bits() != header.t.to_bits() {
            return Err(bad(format!("checkpoint record time {} disagrees with meta t = {}", s.t, header.t)));
        }
        Ok(s)
    };
    let phi = next(grid.nx, grid.ny)?.values;
    let q = next(grid.nx, grid.ny)?.values;
    let u = next(grid.nx + 1, grid.ny)?.values;
    let v = next(grid.nx, grid.ny + 1)?.values;
    let p = next(grid.nx, grid.ny)?.values;
    let state = SimState {
        t: header.t,
        phi: ScalarField { grid: *grid, values: phi },
        q: ScalarField { grid: *grid, values: q },
        vel: VectorField { grid: *grid, u, v },
        p: ScalarField { grid: *grid, values: p },
    };
    state.validate().map_err(|e| bad(format!("checkpoint holds an invalid state: {e}")))?;
    Ok((state, header))
}
