//! Named trainable parameters and their flat binary serialization.
//!
//! File layout: magic bytes `TCF1`, then per tensor
//! `u32 name_len | name bytes | u32 rank | u32 dims[rank] | f64 LE payload`,
//! repeated until end of file. All integers little-endian.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TCF1";

/// Index of a parameter within its [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
struct ParamEntry {
    name: String,
    tensor: Tensor,
}

/// An ordered collection of named parameter tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: Vec<ParamEntry>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::usage(format!("duplicate parameter name {name:?}")));
        }
        self.entries.push(ParamEntry { name, tensor });
        Ok(ParamId(self.entries.len() - 1))
    }

    /// Adds a tensor initialized uniformly in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`.
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        fan_in: usize,
        rng: &mut impl Rng,
    ) -> Result<ParamId> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let numel: usize = shape.iter().product();
        let data: Vec<f64> = (0..numel).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Tensor::new(shape, data)?)
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn id_by_name(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    /// Copies values from `other` into this set, matching by name. Every
    /// parameter of `self` must be present in `other` with the same shape.
    pub fn load_values_from(&mut self, other: &ParamSet) -> Result<()> {
        for i in 0..self.entries.len() {
            let name = self.entries[i].name.clone();
            let src = other
                .id_by_name(&name)
                .ok_or_else(|| Error::invalid_input(format!("missing parameter {name:?}")))?;
            let src_t = other.tensor(src);
            if src_t.shape() != self.entries[i].tensor.shape() {
                return Err(Error::shape(format!(
                    "parameter {name:?} has shape {:?}, expected {:?}",
                    src_t.shape(),
                    self.entries[i].tensor.shape()
                )));
            }
            self.entries[i].tensor = src_t.clone();
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        w.write_all(MAGIC)?;
        for entry in &self.entries {
            let name_bytes = entry.name.as_bytes();
            w.write_all(&(name_bytes.len() as u32).to_le_bytes())?;
            w.write_all(name_bytes)?;
            let shape = entry.tensor.shape();
            w.write_all(&(shape.len() as u32).to_le_bytes())?;
            for &dim in shape {
                w.write_all(&(dim as u32).to_le_bytes())?;
            }
            for &v in entry.tensor.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::invalid_input(format!(
                "bad magic bytes {magic:?}, expected {MAGIC:?}"
            )));
        }
        let mut set = ParamSet::new();
        loop {
            let mut len_buf = [0u8; 4];
            match r.read_exact(&mut len_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
            let name_len = u32::from_le_bytes(len_buf) as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|e| Error::invalid_input(format!("parameter name not UTF-8: {e}")))?;
            r.read_exact(&mut len_buf)?;
            let rank = u32::from_le_bytes(len_buf) as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                r.read_exact(&mut len_buf)?;
                shape.push(u32::from_le_bytes(len_buf) as usize);
            }
            let numel: usize = shape.iter().product();
            let mut data = Vec::with_capacity(numel);
            let mut f_buf = [0u8; 8];
            for _ in 0..numel {
                r.read_exact(&mut f_buf)?;
                data.push(f64::from_le_bytes(f_buf));
            }
            set.add(name, Tensor::new(shape, data)?)?;
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn save_load_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut set = ParamSet::new();
        set.add_uniform("layer.w", vec![3, 4], 3, &mut rng).unwrap();
        set.add_uniform("layer.b", vec![4], 3, &mut rng).unwrap();
        set.add("meta.len", Tensor::scalar(96.0)).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.tcf1");
        set.save(&path).unwrap();
        let loaded = ParamSet::load(&path).unwrap();
        assert_eq!(loaded.len(), set.len());
        for id in set.ids() {
            let other = loaded.id_by_name(set.name(id)).unwrap();
            assert_eq!(loaded.tensor(other), set.tensor(id));
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(ParamSet::load(&path).is_err());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut set = ParamSet::new();
        set.add("w", Tensor::scalar(1.0)).unwrap();
        assert!(set.add("w", Tensor::scalar(2.0)).is_err());
    }

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut set = ParamSet::new();
        let id = set.add_uniform("w", vec![16, 16], 16, &mut rng).unwrap();
        let bound = 1.0 / 4.0;
        assert!(set.tensor(id).data().iter().all(|v| v.abs() < bound));
    }
}
