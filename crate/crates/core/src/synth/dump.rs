//! Dataset files.
//!
//! CSV: header `x_1..x_Dx, u_1..u_Du[, s_1..s_Dx], outlier_flag`, one row per pair.
//!
//! Binary (little endian): magic `RRPB`, `u32` version 1, then `u64` T, D_x, D_u,
//! D_s (0 when absent), followed by T·D_x, T·D_u and T·D_s `f64` values and T flag bytes.

use std::io::{Read, Write};
use std::path::Path;

use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"RRPB";

pub fn write_csv(batch: &PairedBatch, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let (dx, du) = (batch.x.cols(), batch.u.cols());
    let ds = batch.s.as_ref().map_or(0, Tensor::cols);
    let mut header: Vec<String> = (1..=dx).map(|i| format!("x_{i}")).collect();
    header.extend((1..=du).map(|i| format!("u_{i}")));
    header.extend((1..=ds).map(|i| format!("s_{i}")));
    header.push("outlier_flag".into());
    w.write_record(&header)?;
    for t in 0..batch.len() {
        let mut rec: Vec<String> = batch.x.row(t).iter().chain(batch.u.row(t)).map(|v| format!("{v:?}")).collect();
        if let Some(s) = &batch.s {
            rec.extend(s.row(t).iter().map(|v| format!("{v:?}")));
        }
        let flag = batch.outlier.as_ref().is_some_and(|f| f[t]);
        rec.push(u8::from(flag).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<PairedBatch> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let count = |p: &str| header.iter().filter(|h| h.starts_with(p)).count();
    let (dx, du, ds) = (count("x_"), count("u_"), count("s_"));
    let (mut x, mut u, mut s, mut flags) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != dx + du + ds + 1 {
            return Err(Error::shape("csv record", dx + du + ds + 1, vals.len()));
        }
        x.extend_from_slice(&vals[..dx]);
        u.extend_from_slice(&vals[dx..dx + du]);
        s.extend_from_slice(&vals[dx + du..dx + du + ds]);
        flags.push(vals[dx + du + ds] != 0.0);
    }
    assemble(flags.len(), dx, du, ds, x, u, s, flags)
}

#[allow(clippy::too_many_arguments)]
fn assemble(t: usize, dx: usize, du: usize, ds: usize, x: Vec<f64>, u: Vec<f64>, s: Vec<f64>, flags: Vec<bool>) -> Result<PairedBatch> {
    let mut b = PairedBatch::new(Tensor::matrix(t, dx, x)?, Tensor::matrix(t, du, u)?)?;
    if ds > 0 {
        b = b.with_sources(Tensor::matrix(t, ds, s)?)?;
    }
    b.outlier = Some(flags);
    Ok(b)
}

pub fn write_binary(batch: &PairedBatch, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let ds = batch.s.as_ref().map_or(0, Tensor::cols);
    w.write_all(MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    for v in [batch.len(), batch.x.cols(), batch.u.cols(), ds] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    let s_data: &[f64] = batch.s.as_ref().map_or(&[], |s| s.data());
    for v in batch.x.data().iter().chain(batch.u.data()).chain(s_data) {
        w.write_all(&v.to_le_bytes())?;
    }
    for t in 0..batch.len() {
        w.write_all(&[u8::from(batch.outlier.as_ref().is_some_and(|f| f[t]))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<PairedBatch> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a paired-batch file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 1 {
        return Err(Error::Parse("unsupported paired-batch version".into()));
    }
    let mut b8 = [0u8; 8];
    let mut dims = [0usize; 4];
    for d in &mut dims {
        r.read_exact(&mut b8)?;
        *d = u64::from_le_bytes(b8) as usize;
    }
    let [t, dx, du, ds] = dims;
    let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                r.read_exact(&mut b8)?;
                Ok(f64::from_le_bytes(b8))
            })
            .collect()
    };
    let x = read_f64s(t * dx)?;
    let u = read_f64s(t * du)?;
    let s = read_f64s(t * ds)?;
    let mut flags = vec![0u8; t];
    r.read_exact(&mut flags)?;
    assemble(t, dx, du, ds, x, u, s, flags.into_iter().map(|f| f != 0).collect())
}
