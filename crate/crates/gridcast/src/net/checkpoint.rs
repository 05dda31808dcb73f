//! Network checkpoints.
//!
//! A checkpoint stores the topology next to the weights so a file is
//! self-describing: magic `DNET`, version u16, in_channels u32,
//! horizon_steps u32, kernel u32, step_seconds f32, stage count u8 with one
//! u32 width each, then a layer manifest (name length u16 + UTF-8 name,
//! weight count u64, bias count u64 per layer) followed by each layer's
//! weights and biases as little-endian f32 in manifest order.
//!
//! Weights train in f64 but ship as f32. Saving therefore *quantizes the
//! live parameters in place* before writing, so a save followed by a load
//! reproduces the in-memory network bit for bit — training that resumes
//! from a checkpoint sees exactly the weights that were written, not the
//! slightly different pre-save values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};

use crate::binio;

use super::model::{NetworkParams, NetworkSpec};
use super::NetError;

const CHECKPOINT_VERSION: u16 = 1;

/// Rounds every parameter to its nearest f32 value, in place.
fn quantize(params: &mut NetworkParams) {
    for v in params.data_mut() {
        *v = *v as f32 as f64;
    }
}

/// Quantizes the parameters to f32 precision and writes them.
pub fn write_checkpoint<W: Write>(w: &mut W, params: &mut NetworkParams) -> Result<(), NetError> {
    quantize(params);
    let spec = params.spec().clone();
    w.write_all(b"DNET")?;
    w.write_u16::<LE>(CHECKPOINT_VERSION)?;
    w.write_u32::<LE>(spec.in_channels as u32)?;
    w.write_u32::<LE>(spec.horizon_steps as u32)?;
    w.write_u32::<LE>(spec.kernel as u32)?;
    w.write_f32::<LE>(spec.step_seconds)?;
    w.write_u8(spec.widths.len() as u8)?;
    for &width in &spec.widths {
        w.write_u32::<LE>(width as u32)?;
    }
    w.write_u32::<LE>(params.layers().len() as u32)?;
    for layer in params.layers() {
        let name = layer.name.as_bytes();
        w.write_u16::<LE>(name.len() as u16)?;
        w.write_all(name)?;
        w.write_u64::<LE>(layer.weight_len() as u64)?;
        w.write_u64::<LE>(layer.bias_len() as u64)?;
    }
    for li in 0..params.layers().len() {
        binio::write_plane_f64_as_f32(w, params.weight(li))?;
        binio::write_plane_f64_as_f32(w, params.bias(li))?;
    }
    Ok(())
}

/// Reads a checkpoint and rebuilds the network. The stored layer manifest
/// must match the topology derived from the stored spec; a mismatch means
/// the file and this code disagree about the architecture, which is an
/// error rather than something to ignore.
pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<NetworkParams, NetError> {
    binio::expect_magic(r, b"DNET")?;
    let version = r.read_u16::<LE>()?;
    if version != CHECKPOINT_VERSION {
        return Err(NetError::Checkpoint(format!(
            "unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let in_channels = r.read_u32::<LE>()? as usize;
    let horizon_steps = r.read_u32::<LE>()? as usize;
    let kernel = r.read_u32::<LE>()? as usize;
    let step_seconds = r.read_f32::<LE>()?;
    let stage_count = r.read_u8()? as usize;
    let mut widths = Vec::with_capacity(stage_count);
    for _ in 0..stage_count {
        widths.push(r.read_u32::<LE>()? as usize);
    }
    let spec = NetworkSpec {
        in_channels,
        horizon_steps,
        step_seconds,
        widths,
        kernel,
    };
    spec.validate()?;
    let layers = spec.layers();
    let layer_count = r.read_u32::<LE>()? as usize;
    if layer_count != layers.len() {
        return Err(NetError::Checkpoint(format!(
            "manifest lists {layer_count} layers, topology has {}",
            layers.len()
        )));
    }
    for layer in &layers {
        let name_len = r.read_u16::<LE>()? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NetError::Checkpoint("layer name is not UTF-8".to_string()))?;
        let weight_len = r.read_u64::<LE>()? as usize;
        let bias_len = r.read_u64::<LE>()? as usize;
        if name != layer.name || weight_len != layer.weight_len() || bias_len != layer.bias_len()
        {
            return Err(NetError::Checkpoint(format!(
                "layer {name} ({weight_len}+{bias_len} values) does not match \
                 expected {} ({}+{})",
                layer.name,
                layer.weight_len(),
                layer.bias_len()
            )));
        }
    }
    let total = spec.parameter_count();
    let plane = binio::read_plane_f32(r, total)?;
    let data = plane.into_iter().map(f64::from).collect();
    NetworkParams::from_raw(spec, data)
}

pub fn save_checkpoint(path: &Path, params: &mut NetworkParams) -> Result<(), NetError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, params)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams, NetError> {
    let mut r = BufReader::new(File::open(path)?);
    read_checkpoint(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> NetworkParams {
        NetworkParams::init(
            NetworkSpec {
                in_channels: 3,
                horizon_steps: 2,
                step_seconds: 0.5,
                widths: vec![3, 4],
                kernel: 3,
            },
            41,
        )
        .unwrap()
    }

    #[test]
    fn save_quantizes_in_place_and_roundtrips_bit_for_bit() {
        let mut params = small_params();
        let before_save = params.data().to_vec();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &mut params).unwrap();
        // Saving rounded the live parameters to f32-representable values.
        assert!(params
            .data()
            .iter()
            .all(|&v| v == v as f32 as f64));
        assert_ne!(params.data(), before_save.as_slice());
        let loaded = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.spec(), params.spec());
        assert_eq!(loaded.data(), params.data());
    }

    #[test]
    fn file_roundtrip_preserves_the_network() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.dnet");
        let mut params = small_params();
        save_checkpoint(&path, &mut params).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.data(), params.data());
        assert_eq!(loaded.layers(), params.layers());
    }

    #[test]
    fn tampered_manifest_is_rejected() {
        let mut params = small_params();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &mut params).unwrap();
        // The first layer name starts after magic(4) + version(2) +
        // 3*u32(12) + f32(4) + count u8(1) + 2 widths(8) + layer count(4) +
        // name length(2) = byte 37: flip one letter.
        buf[37] ^= 0x01;
        let err = read_checkpoint(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, NetError::Checkpoint(_)), "got {err:?}");
    }

    #[test]
    fn truncated_file_is_an_io_error() {
        let mut params = small_params();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &mut params).unwrap();
        buf.truncate(buf.len() - 10);
        let err = read_checkpoint(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, NetError::Io(_)), "got {err:?}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut params = small_params();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &mut params).unwrap();
        buf[4] = 9;
        let err = read_checkpoint(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, NetError::Checkpoint(_)), "got {err:?}");
    }
}
