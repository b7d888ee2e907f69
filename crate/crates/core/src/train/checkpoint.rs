//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//! `"RSDN"`, `u32` version, `u32` length + UTF-8 config block (flat
//! `key = value` text), `u32` entry count, then per entry `u32` name length,
//! name, `u8` dtype tag, four `u32` dims and the raw little-endian payload.
//! Parameters are stored as `param/<name>`, Adam moments as `adam.m/<name>`
//! and `adam.v/<name>`.

use std::fs;
use std::path::Path;

use super::OptimState;
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::model::{parameter_shapes, ModelConfig, ParamStore, Rsdn};
use crate::tensor::{DType, Element, Shape4, Tensor4};

const MAGIC: &[u8; 4] = b"RSDN";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
    pub optim: Option<OptimState<T>>,
    /// Free-form metadata (iteration, epoch, ...), kept in the config block.
    pub meta: KeyValues,
}

impl<T: Element> Checkpoint<T> {
    pub fn from_model(model: &Rsdn<T>, optim: Option<&OptimState<T>>) -> Self {
        Self {
            config: model.config().clone(),
            params: model.params().clone(),
            optim: optim.cloned(),
            meta: KeyValues::new(),
        }
    }

    pub fn into_model(self) -> Result<Rsdn<T>> {
        Rsdn::from_params(self.config, self.params)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = KeyValues::new();
        for (k, v) in self.config.to_kv().iter() {
            header.set(format!("model.{k}"), v);
        }
        for (k, v) in self.meta.iter() {
            header.set(format!("meta.{k}"), v);
        }
        if let Some(o) = &self.optim {
            header.set("adam.step", o.step);
            header.set("adam.beta1", format!("{:?}", o.beta1));
            header.set("adam.beta2", format!("{:?}", o.beta2));
            header.set("adam.eps", format!("{:?}", o.eps));
        }
        let header = header.to_string();

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        let mut entries: Vec<(String, &Tensor4<T>)> = self
            .params
            .iter()
            .map(|(n, t)| (format!("param/{n}"), t))
            .collect();
        if let Some(o) = &self.optim {
            for (i, name) in self.params.names().iter().enumerate() {
                entries.push((format!("adam.m/{name}"), &o.m[i]));
                entries.push((format!("adam.v/{name}"), &o.v[i]));
            }
        }
        out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
        for (name, t) in entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(T::DTYPE as u8);
            for d in t.shape().dims() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in t.data() {
                v.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(4)? != MAGIC {
            return Err(Error::format(path, "not a checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(path, format!("checkpoint version {version}, expected {VERSION}")));
        }
        let header_len = r.u32()? as usize;
        let header = std::str::from_utf8(r.take(header_len)?).map_err(|_| Error::format(path, "config block is not UTF-8"))?;
        let header = KeyValues::parse(header).map_err(|e| Error::format(path, e.to_string()))?;
        let (mut model_kv, mut meta) = (KeyValues::new(), KeyValues::new());
        for (k, v) in header.iter() {
            if let Some(k) = k.strip_prefix("model.") {
                model_kv.set(k, v);
            } else if let Some(k) = k.strip_prefix("meta.") {
                meta.set(k, v);
            }
        }
        let bad = |e: Error| Error::format(path, e.to_string());
        let config = ModelConfig::from_kv(&model_kv).map_err(bad)?;

        let count = r.u32()? as usize;
        let mut entries = std::collections::HashMap::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| Error::format(path, "entry name is not UTF-8"))?;
            let tag = r.take(1)?[0];
            let dtype = DType::from_tag(tag).ok_or_else(|| Error::format(path, format!("entry {name}: unknown dtype tag {tag}")))?;
            let mut dims = [0usize; 4];
            for d in &mut dims {
                *d = r.u32()? as usize;
            }
            let shape = Shape4::from(dims);
            let payload = r.take(shape.numel() * dtype.size())?;
            let data: Vec<T> = match dtype {
                DType::F32 => payload.chunks_exact(4).map(|c| T::from_f64(f32::read_le(c).as_f64())).collect(),
                DType::F64 => payload.chunks_exact(8).map(|c| T::from_f64(f64::read_le(c))).collect(),
            };
            entries.insert(name, Tensor4::from_vec(shape, data)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes after the last entry"));
        }

        let mut take = |name: String| entries.remove(&name).ok_or_else(|| Error::format(path, format!("missing entry {name}")));
        let mut params = ParamStore::default();
        for (name, _) in parameter_shapes(&config) {
            params.push(name.clone(), take(format!("param/{name}"))?);
        }
        let optim = match header.get("adam.step") {
            None => None,
            Some(_) => {
                let mut o = OptimState::new(&params);
                o.step = header.require("adam.step").map_err(bad)?;
                o.beta1 = header.require("adam.beta1").map_err(bad)?;
                o.beta2 = header.require("adam.beta2").map_err(bad)?;
                o.eps = header.require("adam.eps").map_err(bad)?;
                for (i, name) in params.names().iter().enumerate() {
                    o.m[i] = take(format!("adam.m/{name}"))?;
                    o.v[i] = take(format!("adam.v/{name}"))?;
                }
                Some(o)
            }
        };
        // shape validation against the configured architecture
        Rsdn::from_params(config.clone(), params.clone()).map_err(bad)?;
        if let Some(o) = &optim {
            o.matches(&params).map_err(bad)?;
        }
        Ok(Self { config, params, optim, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(self.path, format!("truncated at byte {}", self.pos))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
