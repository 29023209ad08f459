//! Raster pictures of planar grid allocations.

use std::io::Write;

use crate::alloc_grid::Allocation;
use crate::error::{not_applicable, Result};
use crate::geometry::torus_distance2;
use crate::point_process::splitmix64;

/// An 8-bit RGB image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Bright colour derived from a center index; never black.
pub fn center_colour(center: usize) -> [u8; 3] {
    let h = splitmix64(center as u64 ^ 0x5bd1_e995);
    let c = |s: u32| 64 + ((h >> s) & 0xff) as u8 % 192;
    [c(0), c(8), c(16)]
}

fn darken(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| v / 2)
}

/// One pixel per cell, coloured by owner; unclaimed cells are black. With
/// `annulus = Some(w)`, cells whose distance to their center lies in an odd
/// band of width `w` are drawn darker.
pub fn render_territories(alloc: &Allocation, annulus: Option<f64>) -> Result<Image> {
    let dom = alloc.domain();
    if dom.dim() != 2 {
        return not_applicable(format!("rendering needs d = 2, got d = {}", dom.dim()));
    }
    if let Some(w) = annulus {
        if !(w > 0.0 && w.is_finite()) {
            return crate::error::invalid("annulus width must be positive");
        }
    }
    let n = dom.cells_per_axis();
    let mut pixels = vec![[0u8; 3]; n * n];
    for cell in 0..dom.cell_count() {
        let Some(c) = alloc.center_of(cell) else {
            continue;
        };
        let coords = dom.cell_coords(cell);
        let mut colour = center_colour(c);
        if let Some(w) = annulus {
            let d = torus_distance2(&dom.cell_center(cell), alloc.centers().point(c), dom.side())
                .sqrt();
            if (d / w).floor() as u64 % 2 == 1 {
                colour = darken(colour);
            }
        }
        // first axis is horizontal, second vertical with the origin at the bottom
        pixels[(n - 1 - coords[1]) * n + coords[0]] = colour;
    }
    Ok(Image {
        width: n,
        height: n,
        pixels,
    })
}
