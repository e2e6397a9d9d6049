//! Binary checkpoint:
//!
//! ```text
//! "FEDW" | version: u8 | layer count: u32 LE | widths: u32 LE each | params: f64 LE each
//! ```
//!
//! Parameters follow the canonical flat layout. The format carries no
//! activation field, so only rectifier models are written.

use super::{Activation, ArchSpec, MlpModel, ParamVector};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FEDW";
pub const CHECKPOINT_VERSION: u8 = 1;

fn format_err(msg: impl Into<String>) -> Error {
    Error::CheckpointFormat(msg.into())
}

pub fn serialize_checkpoint(model: &MlpModel) -> Result<Vec<u8>> {
    if model.arch().activation() != Activation::Relu {
        return Err(format_err("checkpoints only store rectifier models"));
    }
    if !model.params().is_finite() {
        return Err(format_err("refusing to write non-finite parameters"));
    }
    let widths = model.arch().widths();
    let mut out = Vec::with_capacity(9 + 4 * widths.len() + 8 * model.params().len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
    for &w in widths {
        let w = u32::try_from(w).map_err(|_| format_err(format!("width {w} exceeds u32")))?;
        out.extend_from_slice(&w.to_le_bytes());
    }
    for v in model.params().as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                format_err(format!(
                    "truncated while reading {what} at byte {}",
                    self.pos
                ))
            })?;
        let chunk = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(chunk)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn deserialize_checkpoint(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(format_err("bad magic"));
    }
    let version = r.take(1, "version")?[0];
    if version != CHECKPOINT_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let count = r.u32("layer count")? as usize;
    if count < 2 || count > (bytes.len().saturating_sub(r.pos)) / 4 {
        return Err(format_err(format!("implausible layer count {count}")));
    }
    let widths = (0..count)
        .map(|i| r.u32(&format!("width {i}")).map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let arch = ArchSpec::relu(widths).map_err(|e| format_err(e.to_string()))?;
    let n = arch.param_count();
    let remaining = bytes.len() - r.pos;
    if remaining != n * 8 {
        return Err(format_err(format!(
            "expected {} parameter bytes, found {remaining}",
            n * 8
        )));
    }
    let params: Vec<f64> = r
        .take(n * 8, "parameters")?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = params.iter().position(|v| !v.is_finite()) {
        return Err(format_err(format!("parameter {i} is not finite")));
    }
    MlpModel::new(arch, ParamVector::new(params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> MlpModel {
        MlpModel::init_from_seed(ArchSpec::relu(vec![3, 2, 1]).unwrap(), 9)
    }

    #[test]
    fn header_layout() {
        let model = sample_model();
        let bytes = serialize_checkpoint(&model).unwrap();
        assert_eq!(&bytes[..4], b"FEDW");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..9], &3u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &3u32.to_le_bytes());
        assert_eq!(&bytes[13..17], &2u32.to_le_bytes());
        assert_eq!(&bytes[17..21], &1u32.to_le_bytes());
        assert_eq!(bytes.len(), 21 + 8 * 11);
        assert_eq!(&bytes[21..29], &model.params().as_slice()[0].to_le_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = MlpModel::init_from_seed(ArchSpec::default(), 1);
        let back = deserialize_checkpoint(&serialize_checkpoint(&model).unwrap()).unwrap();
        assert_eq!(back.arch(), model.arch());
        let bits = |m: &MlpModel| {
            m.params()
                .as_slice()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back), bits(&model));
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let bytes = serialize_checkpoint(&sample_model()).unwrap();
        for cut in [0, 3, 4, 8, 12, bytes.len() - 1] {
            assert!(matches!(
                deserialize_checkpoint(&bytes[..cut]),
                Err(Error::CheckpointFormat(_))
            ));
        }
    }

    #[test]
    fn altered_magic_is_rejected() {
        let mut bytes = serialize_checkpoint(&sample_model()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            deserialize_checkpoint(&bytes),
            Err(Error::CheckpointFormat(_))
        ));
    }

    #[test]
    fn trailing_bytes_and_bad_versions_are_rejected() {
        let mut bytes = serialize_checkpoint(&sample_model()).unwrap();
        bytes.push(0);
        assert!(deserialize_checkpoint(&bytes).is_err());
        let mut bytes = serialize_checkpoint(&sample_model()).unwrap();
        bytes[4] = 2;
        assert!(deserialize_checkpoint(&bytes).is_err());
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut bytes = serialize_checkpoint(&sample_model()).unwrap();
        let at = bytes.len() - 8;
        bytes[at..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            deserialize_checkpoint(&bytes),
            Err(Error::CheckpointFormat(_))
        ));
    }

    #[test]
    fn invalid_widths_are_rejected() {
        let mut bytes = serialize_checkpoint(&sample_model()).unwrap();
        // last width 1 -> 2
        bytes[17..21].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            deserialize_checkpoint(&bytes),
            Err(Error::CheckpointFormat(_))
        ));
    }
}
