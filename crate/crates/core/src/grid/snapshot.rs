//! Binary field snapshots: `NSAC1`, nx, ny (u32 LE), Lx, Ly, t (f64 LE), values (f64 LE, row-major).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, ScalarField};

pub const MAGIC: &[u8; 5] = b"NSAC1";

/// A decoded snapshot record. `nx × ny` is the stored array shape, which is
/// the cell grid for scalars and the face grid for velocity components.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: u32,
    pub ny: u32,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_scalar(f: &ScalarField, t: f64) -> Self {
        Self {
            nx: f.grid.nx as u32,
            ny: f.grid.ny as u32,
            lx: f.grid.lx,
            ly: f.grid.ly,
            t,
            values: f.values.clone(),
        }
    }

    pub fn into_scalar(self, grid: GridSpec) -> io::Result<ScalarField> {
        if self.nx as usize != grid.nx || self.ny as usize != grid.ny {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "snapshot shape does not match grid"));
        }
        Ok(ScalarField { grid, values: self.values })
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.nx.to_le_bytes())?;
        w.write_all(&self.ny.to_le_bytes())?;
        for x in [self.lx, self.ly, self.t] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in &self.values {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> io::Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad snapshot magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let nx = u32::from_le_bytes(b4);
        r.read_exact(&mut b4)?;
        let ny = u32::from_le_bytes(b4);
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> io::Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let lx = next(r)?;
        let ly = next(r)?;
        let t = next(r)?;
        let n = nx as usize * ny as usize;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(next(r)?);
        }
        Ok(Self { nx, ny, lx, ly, t, values })
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
