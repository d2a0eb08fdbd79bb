//! Text checkpoints.
//!
//! ```text
//! ratiorep-checkpoint 1
//! <path> <rank> <extent>... : <value> <value> ...
//! ```
//!
//! One line per tensor. Values are written with Rust's shortest round-trip
//! formatting, so reading a file back reproduces every `f64` bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::Parameterized;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &str = "ratiorep-checkpoint 1";

pub fn to_string<P: Parameterized + ?Sized>(p: &P) -> String {
    let mut s = String::from(MAGIC);
    s.push('\n');
    p.visit_params(&mut |path, t, _| {
        let _ = write!(s, "{path} {}", t.shape().len());
        for d in t.shape() {
            let _ = write!(s, " {d}");
        }
        s.push_str(" :");
        for v in t.data() {
            let _ = write!(s, " {v:?}");
        }
        s.push('\n');
    });
    s
}

pub fn parse(text: &str) -> Result<BTreeMap<String, Tensor>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Parse("missing checkpoint header".into()));
    }
    let mut out = BTreeMap::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse(format!("line {}: {m}", no + 2));
        let (head, values) = line.split_once(" :").ok_or_else(|| bad("missing ':'"))?;
        let mut head = head.split_whitespace();
        let path = head.next().ok_or_else(|| bad("missing path"))?;
        let rank: usize = head.next().and_then(|r| r.parse().ok()).ok_or_else(|| bad("bad rank"))?;
        let shape = head.map(|d| d.parse::<usize>().map_err(|_| bad("bad extent"))).collect::<Result<Vec<_>>>()?;
        if shape.len() != rank {
            return Err(bad("rank does not match extents"));
        }
        let data = values
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<Vec<_>>>()?;
        out.insert(path.to_string(), Tensor::new(&shape, data)?);
    }
    Ok(out)
}

/// Copies stored tensors into `p`; every parameter must be present with a matching shape.
pub fn apply<P: Parameterized + ?Sized>(p: &mut P, stored: &BTreeMap<String, Tensor>) -> Result<()> {
    let mut err = None;
    p.visit_params_mut(&mut |path, t, _| {
        if err.is_some() {
            return;
        }
        match stored.get(path) {
            None => err = Some(Error::Parse(format!("checkpoint lacks {path}"))),
            Some(s) if s.shape() != t.shape() => err = Some(Error::shape(path, format!("{:?}", t.shape()), format!("{:?}", s.shape()))),
            Some(s) => t.data_mut().copy_from_slice(s.data()),
        }
    });
    err.map_or(Ok(()), Err)
}

pub fn save<P: Parameterized + ?Sized>(p: &P, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(p))?;
    Ok(())
}

pub fn load<P: Parameterized + ?Sized>(p: &mut P, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    apply(p, &parse(&text)?)
}

/// SHA-256 over the checkpoint text, used to confirm parameters were left untouched.
pub fn checksum<P: Parameterized + ?Sized>(p: &P) -> String {
    hex::encode(Sha256::digest(to_string(p).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::FeedforwardNet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = FeedforwardNet::maxout_mlp(3, 4, 1, 2, 2, &mut rng).unwrap();
        let text = to_string(&net);
        let mut other = FeedforwardNet::maxout_mlp(3, 4, 1, 2, 2, &mut rng).unwrap();
        assert_ne!(other.flat_params(), net.flat_params());
        apply(&mut other, &parse(&text).unwrap()).unwrap();
        assert_eq!(other.flat_params(), net.flat_params());
    }

    #[test]
    fn file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = FeedforwardNet::maxout_mlp(2, 3, 2, 1, 2, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save(&net, &path).unwrap();
        let mut other = net.clone();
        other.set_flat_params(&vec![0.0; net.param_count()]).unwrap();
        load(&mut other, &path).unwrap();
        assert_eq!(checksum(&other), checksum(&net));
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse("nope").is_err());
        assert!(parse(&format!("{MAGIC}\nw 2 2 2 : 1 2 3\n")).is_err());
    }
}
