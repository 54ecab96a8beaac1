//! Binary weight archives.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "S2PW"                      4 magic bytes
//! version                     currently 1
//! tensor count
//! per tensor:
//!   name length, name bytes   UTF-8
//!   rank, dims[rank]
//!   data                      prod(dims) little-endian f32 values
//! ```
//!
//! Tensors are stored in the network's parameter order (see
//! [`NetSpec::param_names`]) but are matched by name on load.

use std::fs;
use std::io;
use std::path::Path;

use crate::net::{NetSpec, PolicyNet};
use crate::tensor::{ParamSet, Tensor};

pub const MAGIC: &[u8; 4] = b"S2PW";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WeightError {
    #[error("not a weight archive (bad magic bytes)")]
    BadMagic,
    #[error("unsupported weight archive version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("weight archive truncated while reading {what}")]
    Truncated { what: &'static str },
    #[error("tensor name is not valid UTF-8")]
    BadName,
    #[error("{trailing} unexpected bytes after the last tensor")]
    TrailingBytes { trailing: usize },
    #[error("tensor {name}: expected shape {expected:?}, archive has {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("archive has no tensor named {0}")]
    MissingTensor(String),
    #[error("archive has unexpected tensor {0}")]
    UnexpectedTensor(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Named `f32` tensors in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightArchive {
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl WeightArchive {
    pub fn from_net(net: &PolicyNet<f32>) -> Self {
        Self {
            tensors: net
                .spec()
                .param_names()
                .into_iter()
                .zip(net.params().tensors.iter().cloned())
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WeightError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic").map_err(|_| WeightError::BadMagic)? != MAGIC {
            return Err(WeightError::BadMagic);
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(WeightError::UnsupportedVersion { found: version });
        }
        let count = r.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let len = r.u32("name length")? as usize;
            let name = std::str::from_utf8(r.take(len, "name")?)
                .map_err(|_| WeightError::BadName)?
                .to_owned();
            let rank = r.u32("rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(r.u32("dims")? as usize);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or(WeightError::Truncated { what: "tensor data" })?;
            let raw = r.take(
                numel.checked_mul(4).ok_or(WeightError::Truncated { what: "tensor data" })?,
                "tensor data",
            )?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push((name, Tensor::from_vec(&shape, data).expect("length matches shape")));
        }
        if r.pos != bytes.len() {
            return Err(WeightError::TrailingBytes {
                trailing: bytes.len() - r.pos,
            });
        }
        Ok(Self { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<(), WeightError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, WeightError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Builds a network of the given layout, matching tensors by name.
    pub fn into_net(self, spec: NetSpec) -> Result<PolicyNet<f32>, WeightError> {
        let names = spec.param_names();
        let shapes = spec.param_shapes();
        let mut slots: Vec<Option<Tensor<f32>>> = vec![None; names.len()];
        for (name, t) in self.tensors {
            let idx = names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| WeightError::UnexpectedTensor(name.clone()))?;
            if t.shape() != shapes[idx].as_slice() {
                return Err(WeightError::ShapeMismatch {
                    name,
                    expected: shapes[idx].clone(),
                    found: t.shape().to_vec(),
                });
            }
            slots[idx] = Some(t);
        }
        let tensors = slots
            .into_iter()
            .zip(&names)
            .map(|(t, n)| t.ok_or_else(|| WeightError::MissingTensor(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolicyNet::from_params(spec, ParamSet { tensors }).expect("shapes checked above"))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], WeightError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(WeightError::Truncated { what })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, WeightError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn save_weights(net: &PolicyNet<f32>, path: &Path) -> Result<(), WeightError> {
    WeightArchive::from_net(net).save(path)
}

/// Loads a network with the standard layout.
pub fn load_weights(path: &Path) -> Result<PolicyNet<f32>, WeightError> {
    WeightArchive::load(path)?.into_net(NetSpec::standard())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = PolicyNet::<f32>::new(NetSpec::standard(), &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.s2pw");
        save_weights(&net, &path).unwrap();
        let back = load_weights(&path).unwrap();
        for (a, b) in net.params().tensors.iter().zip(&back.params().tensors) {
            assert_eq!(a.shape(), b.shape());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn header_layout() {
        let net = PolicyNet::<f32>::zeros(NetSpec::tiny());
        let bytes = WeightArchive::from_net(&net).to_bytes();
        assert_eq!(&bytes[..4], b"S2PW");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], (net.params().len() as u32).to_le_bytes());
        assert_eq!(bytes[12..16], 12u32.to_le_bytes());
        assert_eq!(&bytes[16..28], b"conv1.weight");
    }

    #[test]
    fn every_truncation_is_reported() {
        let net = PolicyNet::<f32>::zeros(NetSpec::tiny());
        let bytes = WeightArchive::from_net(&net).to_bytes();
        for cut in 4..bytes.len() {
            assert!(
                matches!(
                    WeightArchive::from_bytes(&bytes[..cut]),
                    Err(WeightError::Truncated { .. })
                ),
                "cut at {cut}"
            );
        }
        assert!(matches!(WeightArchive::from_bytes(b"S2"), Err(WeightError::BadMagic)));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = WeightArchive::default().to_bytes();
        assert_eq!(bytes.len(), 12);
        assert_eq!(WeightArchive::from_bytes(&bytes).unwrap(), WeightArchive::default());
        bytes[4] = 2;
        assert!(matches!(
            WeightArchive::from_bytes(&bytes),
            Err(WeightError::UnsupportedVersion { found: 2 })
        ));
        bytes[0] = b'X';
        assert!(matches!(WeightArchive::from_bytes(&bytes), Err(WeightError::BadMagic)));
    }

    #[test]
    fn empty_archive_does_not_load_as_a_network() {
        let err = WeightArchive::default().into_net(NetSpec::standard()).unwrap_err();
        assert!(matches!(err, WeightError::MissingTensor(n) if n == "conv1.weight"));
    }

    #[test]
    fn wrong_layout_is_a_shape_mismatch() {
        let tiny = WeightArchive::from_net(&PolicyNet::<f32>::zeros(NetSpec::tiny()));
        assert!(matches!(
            tiny.into_net(NetSpec::standard()),
            Err(WeightError::ShapeMismatch { .. })
        ));
    }
}
