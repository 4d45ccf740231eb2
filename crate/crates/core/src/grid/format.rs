//! "GEHM" grid blocks.
//!
//! ```text
//! magic      4 bytes  "GEHM"
//! version    u16 LE   (1)
//! width      u16 LE   (224)
//! height     u16 LE   (224)
//! cell_size  f32 LE   mm per pixel side
//! payload    heightmap:   width*height f32 LE heights in metres, row-major
//!            bit mask:    ceil(width*height/8) bytes, row-major, LSB first
//!            action mask: width*height f32 LE values in {0, 0.5, 1}
//! ```
//!
//! The payload kind is implied by context (file role or record position).

use std::io::{Read, Write};

use super::{ActionKind, ActionMask, BitMask, Heightmap, CELL_SIZE_MM, GRID_SIZE};
use crate::error::{Error, Result};

pub const GEHM_MAGIC: &[u8; 4] = b"GEHM";
pub const GEHM_VERSION: u16 = 1;

const CELLS: usize = GRID_SIZE * GRID_SIZE;
const TENTHS_PER_METRE: f32 = 10_000.0;

fn write_header<W: Write>(w: &mut W, cell_size_mm: f32) -> Result<()> {
    w.write_all(GEHM_MAGIC)?;
    w.write_all(&GEHM_VERSION.to_le_bytes())?;
    w.write_all(&(GRID_SIZE as u16).to_le_bytes())?;
    w.write_all(&(GRID_SIZE as u16).to_le_bytes())?;
    w.write_all(&cell_size_mm.to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<f32> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GEHM_MAGIC {
        return Err(Error::Format(format!("expected GEHM magic, found {magic:?}")));
    }
    let version = read_u16(r)?;
    if version != GEHM_VERSION {
        return Err(Error::Format(format!("unsupported GEHM version {version}")));
    }
    let (w, h) = (read_u16(r)?, read_u16(r)?);
    if (w as usize, h as usize) != (GRID_SIZE, GRID_SIZE) {
        return Err(Error::Format(format!("unsupported grid size {w}x{h}")));
    }
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn write_f32s<W: Write>(w: &mut W, values: impl Iterator<Item = f32>) -> Result<()> {
    let mut buf = Vec::with_capacity(CELLS * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; CELLS * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_heightmap<W: Write>(w: &mut W, hm: &Heightmap) -> Result<()> {
    write_header(w, hm.cell_size_mm())?;
    write_f32s(w, hm.cells().iter().map(|&t| t as f32 / TENTHS_PER_METRE))
}

pub fn read_heightmap<R: Read>(r: &mut R) -> Result<Heightmap> {
    let cell = read_header(r)?;
    if cell != CELL_SIZE_MM {
        return Err(Error::Format(format!("unsupported cell size {cell} mm")));
    }
    let mut cells = Vec::with_capacity(CELLS);
    for m in read_f32s(r)? {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::Format(format!("invalid height {m} m")));
        }
        cells.push((m * TENTHS_PER_METRE).round() as u32);
    }
    let cells = cells
        .into_iter()
        .map(|t| u16::try_from(t).map_err(|_| Error::Format("height out of range".into())))
        .collect::<Result<Vec<_>>>()?;
    Heightmap::from_tenths(cells).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_bitmask<W: Write>(w: &mut W, mask: &BitMask) -> Result<()> {
    write_header(w, CELL_SIZE_MM)?;
    let mut bytes = vec![0u8; CELLS.div_ceil(8)];
    for i in mask.iter_ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_bitmask<R: Read>(r: &mut R) -> Result<BitMask> {
    read_header(r)?;
    let mut bytes = vec![0u8; CELLS.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let mut m = BitMask::empty();
    for i in 0..CELLS {
        if bytes[i / 8] & (1 << (i % 8)) != 0 {
            m.set_index(i, true);
        }
    }
    Ok(m)
}

pub fn write_action_mask<W: Write>(w: &mut W, mask: &ActionMask) -> Result<()> {
    write_header(w, CELL_SIZE_MM)?;
    write_f32s(w, mask.to_dense().into_iter())
}

pub fn read_action_mask<R: Read>(r: &mut R, kind: ActionKind) -> Result<ActionMask> {
    read_header(r)?;
    let values = read_f32s(r)?;
    if let Some(v) = values.iter().find(|&&v| v != 0.0 && v != 0.5 && v != 1.0) {
        return Err(Error::Format(format!("action mask value {v} not in {{0, 0.5, 1}}")));
    }
    Ok(ActionMask::from_dense(kind, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_push, Pixel};
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_heightmap(&mut buf, &Heightmap::zeros()).unwrap();
        assert_eq!(&buf[..4], b"GEHM");
        assert_eq!(&buf[4..6], &[1, 0]);
        assert_eq!(&buf[6..10], &[224, 0, 224, 0]);
        assert_eq!(&buf[10..14], &2.0f32.to_le_bytes());
        assert_eq!(buf.len(), 14 + CELLS * 4);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        write_bitmask(&mut buf, &BitMask::empty()).unwrap();
        buf[0] = b'X';
        assert!(matches!(read_bitmask(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn action_mask_round_trip() {
        let m = rasterize_push(Pixel::new(40, 60), 0.7);
        let mut buf = Vec::new();
        write_action_mask(&mut buf, &m).unwrap();
        assert_eq!(read_action_mask(&mut buf.as_slice(), ActionKind::Push).unwrap(), m);
    }

    proptest! {
        #[test]
        fn heightmap_and_mask_round_trip(
            cells in proptest::collection::vec((0usize..CELLS, 0u16..9999), 0..300)
        ) {
            let mut hm = Heightmap::zeros();
            let mut mask = BitMask::empty();
            for &(i, h) in &cells {
                hm.set(Pixel::from_index(i), h);
                mask.set_index(i, h % 2 == 0);
            }
            let mut buf = Vec::new();
            write_heightmap(&mut buf, &hm).unwrap();
            write_bitmask(&mut buf, &mask).unwrap();
            let mut r = buf.as_slice();
            prop_assert_eq!(read_heightmap(&mut r).unwrap(), hm);
            prop_assert_eq!(read_bitmask(&mut r).unwrap(), mask);
        }
    }
}
