//! Small helpers shared by the binary file formats (frames, labels, count
//! grids, checkpoints). All multi-byte values are little-endian.

use std::io::{Read, Write};

use byteorder::{ReadBytesExt, WriteBytesExt, LE};

/// Reads and checks a 4-byte magic tag.
pub fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> std::io::Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&buf)
            ),
        ));
    }
    Ok(())
}

/// Writes one plane of `f32` values.
pub fn write_plane_f32<W: Write>(w: &mut W, plane: &[f32]) -> std::io::Result<()> {
    for &v in plane {
        w.write_f32::<LE>(v)?;
    }
    Ok(())
}

/// Reads `len` `f32` values into a fresh vector.
pub fn read_plane_f32<R: Read>(r: &mut R, len: usize) -> std::io::Result<Vec<f32>> {
    let mut plane = vec![0f32; len];
    for v in plane.iter_mut() {
        *v = r.read_f32::<LE>()?;
    }
    Ok(plane)
}

/// Writes one plane of `f64` values stored as `f32` on disk.
pub fn write_plane_f64_as_f32<W: Write>(w: &mut W, plane: &[f64]) -> std::io::Result<()> {
    for &v in plane {
        w.write_f32::<LE>(v as f32)?;
    }
    Ok(())
}

/// Writes a boolean plane as one byte per cell (0 or 1).
pub fn write_plane_bool<W: Write>(w: &mut W, plane: &[bool]) -> std::io::Result<()> {
    for &v in plane {
        w.write_u8(u8::from(v))?;
    }
    Ok(())
}

/// Reads a boolean plane written by [`write_plane_bool`]. Any byte other than
/// 0 or 1 is rejected.
pub fn read_plane_bool<R: Read>(r: &mut R, len: usize) -> std::io::Result<Vec<bool>> {
    let mut plane = vec![false; len];
    for v in plane.iter_mut() {
        *v = match r.read_u8()? {
            0 => false,
            1 => true,
            other => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("mask byte must be 0 or 1, found {other}"),
                ))
            }
        };
    }
    Ok(plane)
}
