//! Binary model file shared by every trained artifact.
//!
//! Layout (little-endian): `PCGM`, u32 version, u32 descriptor length +
//! UTF-8 `key=value` lines, u32 parameter count, then per parameter:
//! u32 name length + name, u32 rank, rank x u64 dims, raw f64 values.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{PcgError, Result};
use crate::nn::{ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"PCGM";
pub const FORMAT_VERSION: u32 = 1;
const FROZEN_KEY: &str = "frozen";

/// Sorted `key=value` metadata block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Descriptor(BTreeMap<String, String>);

impl Descriptor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| PcgError::Parameter(format!("model descriptor lacks `{key}`")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| PcgError::Parameter(format!("bad descriptor value {key}={raw}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_text(text: &str) -> Option<Self> {
        let mut d = Descriptor::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=')?;
            d.0.insert(k.to_string(), v.to_string());
        }
        Some(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub descriptor: Descriptor,
    pub params: ParamStore,
}

impl ModelFile {
    pub fn new(descriptor: Descriptor, params: ParamStore) -> Self {
        ModelFile { descriptor, params }
    }

    /// Frozen parameter names are recorded in the descriptor.
    pub fn encode(&self) -> Vec<u8> {
        let mut desc = self.descriptor.clone();
        let frozen: Vec<&str> = self
            .params
            .iter()
            .filter(|(_, p)| !p.trainable)
            .map(|(_, p)| p.name.as_str())
            .collect();
        if frozen.is_empty() {
            desc.0.remove(FROZEN_KEY);
        } else {
            desc.set(FROZEN_KEY, frozen.join(","));
        }
        let text = desc.to_text();
        let mut out = Vec::with_capacity(16 + text.len() + 8 * self.params.num_values());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_u32(&mut out, text.len());
        out.extend_from_slice(text.as_bytes());
        put_u32(&mut out, self.params.len());
        for (_, p) in self.params.iter() {
            put_u32(&mut out, p.name.len());
            out.extend_from_slice(p.name.as_bytes());
            put_u32(&mut out, p.value.shape.len());
            for &d in &p.value.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &p.value.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(r.error(0, "bad magic, not a model file"));
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(PcgError::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let at = r.pos;
        let len = r.u32("descriptor length")? as usize;
        let text = std::str::from_utf8(r.take(len, "descriptor")?)
            .map_err(|_| r.error(at, "descriptor is not UTF-8"))?;
        let mut descriptor = Descriptor::from_text(text).ok_or_else(|| r.error(at, "malformed descriptor line"))?;
        let count = r.u32("parameter count")?;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let at = r.pos;
            let n = r.u32("name length")? as usize;
            let name = std::str::from_utf8(r.take(n, "parameter name")?)
                .map_err(|_| r.error(at, "parameter name is not UTF-8"))?
                .to_string();
            let rank = r.u32("rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(r.u64("dimension")? as usize);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| r.error(r.pos, "parameter data truncated"))?;
            let raw = r.take(numel * 8, "parameter data")?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params
                .add(name, Tensor::new(data, shape)?)
                .map_err(|_| r.error(at, "duplicate parameter name"))?;
        }
        if r.remaining() != 0 {
            return Err(r.error(r.pos, "trailing bytes after last parameter"));
        }
        if let Some(frozen) = descriptor.0.remove(FROZEN_KEY) {
            for name in frozen.split(',').filter(|s| !s.is_empty()) {
                let id = params
                    .id(name)
                    .ok_or_else(|| PcgError::Format {
                        offset: 0,
                        message: format!("frozen parameter `{name}` not in file"),
                    })?;
                params.set_trainable(id, false);
            }
        }
        Ok(ModelFile { descriptor, params })
    }

    /// Writes via a temporary sibling so a failed save never leaves a partial file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, self.encode()).map_err(|e| PcgError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| PcgError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| PcgError::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, offset: usize, message: &str) -> PcgError {
        PcgError::Format {
            offset: offset as u64,
            message: message.to_string(),
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.error(self.pos, &format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}
