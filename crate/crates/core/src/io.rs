//! Flat little-endian binary layout for space-time fields.
//!
//! ```text
//! magic    8 bytes  "SWRFIELD"
//! version  u32      1
//! ndim     u32
//! levels   u64
//! shape    ndim x u64   (axis 0 is z)
//! dt       f64
//! spacing  ndim x f64
//! origin   ndim x f64
//! diverged i64      first diverged level, -1 if none
//! values   levels x nodes x f64, time-major, row-major in space
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Grid;
use crate::solver::{Divergence, SpaceTimeField};

const MAGIC: &[u8; 8] = b"SWRFIELD";
const VERSION: u32 = 1;

pub fn write_field(field: &SpaceTimeField, mut w: impl Write) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.ndim() as u32).to_le_bytes())?;
    w.write_all(&(field.levels() as u64).to_le_bytes())?;
    for &n in &grid.shape {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&field.dt().to_le_bytes())?;
    for v in grid.spacing.iter().chain(&grid.origin) {
        w.write_all(&v.to_le_bytes())?;
    }
    let diverged = field.diverged.map_or(-1i64, |d| d.step as i64);
    w.write_all(&diverged.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_field(mut r: impl Read) -> Result<SpaceTimeField> {
    if &take::<8>(&mut r)? != MAGIC {
        return Err(Error::Io("not a field file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Io(format!("unsupported field version {version}")));
    }
    let ndim = u32::from_le_bytes(take(&mut r)?) as usize;
    let levels = u64::from_le_bytes(take(&mut r)?) as usize;
    if ndim == 0 || ndim > 8 || levels == 0 {
        return Err(Error::Io(format!(
            "implausible header: ndim {ndim}, levels {levels}"
        )));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(u64::from_le_bytes(take(&mut r)?) as usize);
    }
    let mut float = || -> Result<f64> { Ok(f64::from_le_bytes(take(&mut r)?)) };
    let dt = float()?;
    let spacing = (0..ndim).map(|_| float()).collect::<Result<Vec<_>>>()?;
    let origin = (0..ndim).map(|_| float()).collect::<Result<Vec<_>>>()?;
    let diverged = i64::from_le_bytes(take(&mut r)?);
    let grid = Grid {
        shape,
        origin,
        spacing,
    };
    let count = grid.len() * levels;
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut field = SpaceTimeField::from_values(grid, dt, values)?;
    if diverged >= 0 {
        let step = diverged as usize;
        field.diverged = Some(Divergence {
            step,
            time: step as f64 * dt,
            newton_failure: false,
        });
    }
    Ok(field)
}

pub fn save_field(field: &SpaceTimeField, path: &Path) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: &Path) -> Result<SpaceTimeField> {
    read_field(BufReader::new(File::open(path)?))
}
