//! Binary dataset snapshots: magic, format version, then little-endian
//! counts and values.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{DataError, Dataset, Series, Target};
use crate::model::Task;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"ARND";
const VERSION: u32 = 1;

/// Environment variable naming the dataset cache directory.
pub const CACHE_DIR_ENV: &str = "ARN_CACHE_DIR";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_owned(), source }
}

pub fn save_snapshot(d: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut buf = Vec::new();
    write_to(d, &mut buf).map_err(io(path))?;
    std::fs::write(path, buf).map_err(io(path))
}

fn write_to(d: &Dataset, w: &mut Vec<u8>) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u8(match d.task {
        Task::Regression => 0,
        Task::Classification => 1,
    })?;
    w.write_u64::<LittleEndian>(d.inputs as u64)?;
    w.write_u64::<LittleEndian>(d.outputs as u64)?;
    w.write_u64::<LittleEndian>(d.series.len() as u64)?;
    for s in &d.series {
        w.write_u64::<LittleEndian>(s.id.len() as u64)?;
        w.write_all(s.id.as_bytes())?;
        w.write_u64::<LittleEndian>(s.timesteps() as u64)?;
        for v in s.inputs.data() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        match &s.target {
            Target::Class(c) => w.write_u64::<LittleEndian>(*c as u64)?,
            Target::Values(t) => {
                for v in t.data() {
                    w.write_f64::<LittleEndian>(*v)?;
                }
            }
        }
    }
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Dataset, DataError> {
    let bytes = std::fs::read(path).map_err(io(path))?;
    let mut r = bytes.as_slice();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io(path))?;
    if &magic != MAGIC {
        return Err(DataError::Snapshot("not a dataset snapshot".into()));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io(path))?;
    if version != VERSION {
        return Err(DataError::Snapshot(format!("unsupported version {version}")));
    }
    read_body(&mut r).map_err(io(path))?
}

fn read_body(r: &mut &[u8]) -> std::io::Result<Result<Dataset, DataError>> {
    let task = match r.read_u8()? {
        0 => Task::Regression,
        1 => Task::Classification,
        t => return Ok(Err(DataError::Snapshot(format!("unknown task tag {t}")))),
    };
    let inputs = r.read_u64::<LittleEndian>()? as usize;
    let outputs = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let mut series = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = r.read_u64::<LittleEndian>()? as usize;
        let mut id = vec![0u8; len];
        r.read_exact(&mut id)?;
        let Ok(id) = String::from_utf8(id) else {
            return Ok(Err(DataError::Snapshot("series id is not UTF-8".into())));
        };
        let nt = r.read_u64::<LittleEndian>()? as usize;
        let mut read = |count: usize| -> std::io::Result<Vec<f64>> {
            (0..count).map(|_| r.read_f64::<LittleEndian>()).collect()
        };
        let x = Tensor::from_vec(nt, inputs, read(nt * inputs)?);
        let target = match task {
            Task::Regression => Target::Values(Tensor::from_vec(nt, outputs, read(nt * outputs)?)),
            Task::Classification => Target::Class(r.read_u64::<LittleEndian>()? as usize),
        };
        series.push(Series { id, inputs: x, target });
    }
    Ok(Ok(Dataset { task, inputs, outputs, series }))
}
