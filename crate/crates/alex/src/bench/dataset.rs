//! Dataset generation and the on-disk key-file format.
//!
//! Both generators return keys that are non-negative, integer-valued,
//! strictly increasing and storable in the index. Uniqueness is enforced in
//! key space (after conversion to `f64`), so a file written and read back
//! loads into either index without surprises.
//!
//! File layout, all little-endian 64-bit words:
//!
//! ```text
//! [count][mode][value 0][value 1]...[value count-1]
//! ```
//!
//! `mode` 0 stores values as unsigned integers, mode 1 as raw `f64` bits.
//! Values must be strictly increasing; `read_dataset` rejects anything else.

use crate::key::{key_is_storable, Key};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const DATASET_MODE_INT: u64 = 0;
pub const DATASET_MODE_FLOAT: u64 = 1;

/// Lognormal(0, 2) variates scaled by 1e9 and floored, redrawn until `count`
/// distinct keys exist, returned ascending.
pub fn gen_lognormal(count: usize, seed: u64) -> Vec<Key> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist: LogNormal<f64> = LogNormal::new(0.0, 2.0).expect("valid lognormal parameters");
    let mut set: BTreeSet<u64> = BTreeSet::new();
    while set.len() < count {
        let key = (dist.sample(&mut rng) * 1e9).floor();
        if key_is_storable(key) && key >= 0.0 {
            // non-negative finite doubles order the same as their bit patterns
            set.insert(key.to_bits());
        }
    }
    set.into_iter().map(f64::from_bits).collect()
}

/// Uniform draws over the full 64-bit integer domain, deduplicated after the
/// conversion to `f64` (distinct integers above 2^53 can round together),
/// returned ascending.
pub fn gen_uniform64(count: usize, seed: u64) -> Vec<Key> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set: BTreeSet<u64> = BTreeSet::new();
    while set.len() < count {
        let key = rng.gen::<u64>() as f64;
        if key_is_storable(key) {
            set.insert(key.to_bits());
        }
    }
    set.into_iter().map(f64::from_bits).collect()
}

/// Writes `keys` (must be strictly increasing) with the given value mode.
/// Integer mode requires every key to be an exact non-negative integer.
pub fn write_dataset(path: &Path, keys: &[Key], mode: u64) -> io::Result<()> {
    if mode != DATASET_MODE_INT && mode != DATASET_MODE_FLOAT {
        return Err(invalid(format!("unknown dataset mode {mode}")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(keys.len() as u64).to_le_bytes())?;
    w.write_all(&mode.to_le_bytes())?;
    for &k in keys {
        let word = if mode == DATASET_MODE_INT {
            if k < 0.0 || k.floor() != k || k > u64::MAX as f64 {
                return Err(invalid(format!("key {k} not storable as integer")));
            }
            k as u64
        } else {
            k.to_bits()
        };
        w.write_all(&word.to_le_bytes())?;
    }
    w.flush()
}

/// Reads a key file back, enforcing the header and strict ascending order.
pub fn read_dataset(path: &Path) -> io::Result<Vec<Key>> {
    let mut r = BufReader::new(File::open(path)?);
    let count = read_word(&mut r)? as usize;
    let mode = read_word(&mut r)?;
    if mode != DATASET_MODE_INT && mode != DATASET_MODE_FLOAT {
        return Err(invalid(format!("unknown dataset mode {mode}")));
    }
    let mut keys = Vec::with_capacity(count);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..count {
        let word = read_word(&mut r)?;
        let key = if mode == DATASET_MODE_INT {
            word as f64
        } else {
            f64::from_bits(word)
        };
        if !key_is_storable(key) {
            return Err(invalid(format!("value {i} is not a storable key")));
        }
        if key <= prev {
            return Err(invalid(format!("value {i} breaks strict ascending order")));
        }
        prev = key;
        keys.push(key);
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(invalid("trailing bytes after declared count".into()));
    }
    Ok(keys)
}

fn read_word(r: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}
