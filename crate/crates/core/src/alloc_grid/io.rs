//! Binary grid file: a fixed little-endian header followed by one `i32`
//! center index per cell in row-major order (`-1` marks an unclaimed cell).
//!
//! Header layout (52 bytes): `d: u32, L: f64, eps: f64, alpha: f64,
//! kappa: u64, center_count: u64, seed: u64`.

use std::io::{Read, Write};

use crate::error::{invalid, Result};

pub const HEADER_LEN: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub d: u32,
    pub side: f64,
    pub eps: f64,
    pub alpha: f64,
    pub kappa: u64,
    pub center_count: u64,
    pub seed: u64,
}

pub fn write_grid<W: Write>(w: &mut W, header: &GridHeader, cells: &[i32]) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * cells.len());
    buf.extend_from_slice(&header.d.to_le_bytes());
    buf.extend_from_slice(&header.side.to_le_bytes());
    buf.extend_from_slice(&header.eps.to_le_bytes());
    buf.extend_from_slice(&header.alpha.to_le_bytes());
    buf.extend_from_slice(&header.kappa.to_le_bytes());
    buf.extend_from_slice(&header.center_count.to_le_bytes());
    buf.extend_from_slice(&header.seed.to_le_bytes());
    for &c in cells {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_grid<R: Read>(r: &mut R) -> Result<(GridHeader, Vec<i32>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || !(bytes.len() - HEADER_LEN).is_multiple_of(4) {
        return invalid(format!("grid file has bad length {}", bytes.len()));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = GridHeader {
        d: u32::from_le_bytes(bytes[0..4].try_into().unwrap()),
        side: f64_at(4),
        eps: f64_at(12),
        alpha: f64_at(20),
        kappa: u64_at(28),
        center_count: u64_at(36),
        seed: u64_at(44),
    };
    let cells = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, cells))
}
