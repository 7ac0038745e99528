//! Binary model serialization.
//!
//! Format "DSHC": magic bytes, a format version, an architecture descriptor
//! string, then named parameter tensors as little-endian f32 data. Loading a
//! saved model reproduces every parameter bit-exactly; truncated or
//! mismatched files fail without producing a partial model.

use std::path::Path;

use super::Tensor;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DSHC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SavedParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub descriptor: String,
    pub params: Vec<SavedParam>,
}

pub fn save_model(path: &Path, descriptor: &str, params: &[(String, &Tensor<f32>)]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    write_str(&mut buf, descriptor);
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, tensor) in params {
        write_str(&mut buf, name);
        buf.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
        for d in tensor.shape() {
            buf.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "{}: not a DSHC model file",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported model format version {version} (expected {VERSION})",
            path.display()
        )));
    }
    let descriptor = r.string()?;
    let n = r.u32()? as usize;
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let name = r.string()?;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let count: usize = shape.iter().product();
        let raw = r.take(count * 4)?;
        let mut data = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(4) {
            data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        params.push(SavedParam { name, shape, data });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{}: {} trailing bytes after model data",
            path.display(),
            bytes.len() - r.pos
        )));
    }
    Ok(SavedModel { descriptor, params })
}

fn write_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated model file".to_string()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Format("bad utf8 in model".to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("driftbench-serial-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = SplitMix64::new(4);
        let mut a: Tensor<f32> = Tensor::zeros(&[3, 5]);
        a.init_he_uniform(5, &mut rng);
        let mut b: Tensor<f32> = Tensor::zeros(&[7]);
        b.init_he_uniform(7, &mut rng);
        let path = temp_path("roundtrip.dshc");
        save_model(
            &path,
            "test-v1 hidden=7",
            &[("layer.weight".to_string(), &a), ("layer.bias".to_string(), &b)],
        )
        .unwrap();
        let loaded = load_model(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(loaded.descriptor, "test-v1 hidden=7");
        assert_eq!(loaded.params.len(), 2);
        assert_eq!(loaded.params[0].shape, vec![3, 5]);
        for (x, y) in loaded.params[0].data.iter().zip(a.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let mut a: Tensor<f32> = Tensor::zeros(&[4, 4]);
        a.init_he_uniform(4, &mut SplitMix64::new(1));
        let path = temp_path("truncated.dshc");
        save_model(&path, "test-v1", &[("w".to_string(), &a)]).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 7);
        std::fs::write(&path, bytes).unwrap();
        let err = load_model(&path);
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn wrong_magic_and_version_are_rejected() {
        let path = temp_path("magic.dshc");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));
        let mut buf = Vec::new();
        buf.extend_from_slice(b"DSHC");
        buf.extend_from_slice(&9u32.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, buf).unwrap();
        let err = load_model(&path);
        std::fs::remove_file(&path).ok();
        match err {
            Err(Error::Format(msg)) => assert!(msg.contains("version")),
            other => panic!("expected version error, got {other:?}"),
        }
    }
}
