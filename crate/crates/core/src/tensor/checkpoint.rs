//! Single-file parameter container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes   "LATTNCKP"
//! version   u32
//! meta_len  u64       followed by a JSON object describing the model
//! man_len   u64       followed by the JSON manifest [{name, shape, dtype, frozen}]
//! buffers             raw f64 values for each manifest entry, in manifest order
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LATTNCKP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub frozen: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub params: ParamStore,
}

pub fn write_checkpoint<W: Write>(
    mut out: W,
    meta: &serde_json::Value,
    params: &ParamStore,
) -> Result<()> {
    let manifest: Vec<ManifestEntry> = params
        .iter()
        .map(|(name, p)| ManifestEntry {
            name: name.to_string(),
            shape: p.tensor.shape().to_vec(),
            dtype: "f64".into(),
            frozen: p.frozen,
        })
        .collect();
    let meta_bytes = serde_json::to_vec(meta)?;
    let manifest_bytes = serde_json::to_vec(&manifest)?;

    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(meta_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&meta_bytes)?;
    out.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&manifest_bytes)?;
    for (_, p) in params.iter() {
        for value in p.tensor.data() {
            out.write_all(&value.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let meta: serde_json::Value = serde_json::from_slice(&read_block(&mut input)?)?;
    let manifest: Vec<ManifestEntry> = serde_json::from_slice(&read_block(&mut input)?)?;

    let mut params = ParamStore::new();
    for entry in manifest {
        if entry.dtype != "f64" {
            return Err(Error::Checkpoint(format!(
                "unsupported dtype {:?}",
                entry.dtype
            )));
        }
        let count: usize = entry.shape.iter().product();
        let mut raw = vec![0u8; count * 8];
        input.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let tensor = Tensor::from_vec(&entry.shape, data)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", entry.name)))?;
        params.insert(entry.name.clone(), tensor)?;
        params.set_frozen(&entry.name, entry.frozen)?;
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok(Checkpoint { meta, params })
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_block<R: Read>(input: &mut R) -> Result<Vec<u8>> {
    let len = u64::from_le_bytes(read_array(input)?);
    let len = usize::try_from(len).map_err(|_| Error::Checkpoint("block too large".into()))?;
    let mut buf = Vec::new();
    input.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Checkpoint("truncated block".into()));
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.insert(
            "head.P",
            Tensor::from_vec(&[2, 2], vec![0.1, -0.2, 1e-300, f64::MAX]).unwrap(),
        )
        .unwrap();
        s.insert("attn.u", Tensor::vector(vec![std::f64::consts::PI]))
            .unwrap();
        s.set_frozen("attn.u", true).unwrap();
        s
    }

    #[test]
    fn round_trip_is_bitwise() {
        let meta = serde_json::json!({"arch": "dict-latent"});
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &meta, &store()).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let ck = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(ck.meta, meta);
        assert_eq!(ck.params, store());
        assert!(ck.params.is_frozen("attn.u"));
    }

    #[test]
    fn manifest_follows_header() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &serde_json::json!({}), &store()).unwrap();
        let meta_len = u64::from_le_bytes(buf[12..20].try_into().unwrap()) as usize;
        let at = 20 + meta_len;
        let man_len = u64::from_le_bytes(buf[at..at + 8].try_into().unwrap()) as usize;
        let manifest: Vec<ManifestEntry> =
            serde_json::from_slice(&buf[at + 8..at + 8 + man_len]).unwrap();
        assert_eq!(manifest[0].name, "attn.u");
        assert_eq!(manifest[1].shape, vec![2, 2]);
        assert_eq!(buf.len(), at + 8 + man_len + 5 * 8);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &serde_json::json!({}), &store()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(Error::Checkpoint(_))
        ));
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
        let mut extra = buf;
        extra.push(0);
        assert!(read_checkpoint(extra.as_slice()).is_err());
    }
}
