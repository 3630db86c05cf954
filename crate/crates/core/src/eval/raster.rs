//! Binary ink images.

use crate::error::{Error, Result};
use crate::sim::plan::BoardRect;
use serde::{Deserialize, Serialize};

/// Binary occupancy grid over a board rectangle. Columns run along +y and
/// rows run along −x, so page-up is image-up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InkImage {
    pub width: usize,
    pub height: usize,
    pub board: BoardRect,
    pub pixels: Vec<bool>,
}

impl InkImage {
    pub fn new(width: usize, height: usize, board: BoardRect) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("raster resolution must be positive"));
        }
        Ok(InkImage {
            width,
            height,
            board,
            pixels: vec![false; width * height],
        })
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }

    /// Continuous pixel coordinates `(col, row)` of a board point.
    pub fn to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        let b = &self.board;
        [
            (p[1] - b.y0) / b.height * self.width as f64,
            (b.x0 + b.width - p[0]) / b.width * self.height as f64,
        ]
    }

    /// Set every pixel within `radius` of `(col, row)`; pixels outside the
    /// image are ignored.
    pub fn stamp(&mut self, col: i64, row: i64, radius: i64) {
        for dr in -radius..=radius {
            for dc in -radius..=radius {
                if dr * dr + dc * dc > radius * radius {
                    continue;
                }
                let (c, r) = (col + dc, row + dr);
                if c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height {
                    self.pixels[r as usize * self.width + c as usize] = true;
                }
            }
        }
    }

    /// Stamp discs densely along the segment between two pixel positions.
    pub fn stamp_line(&mut self, a: [f64; 2], b: [f64; 2], radius: i64) {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = len.ceil().max(0.0) as usize;
        for i in 0..=n {
            let t = if n == 0 { 0.0 } else { i as f64 / n as f64 };
            let c = a[0] + t * (b[0] - a[0]);
            let r = a[1] + t * (b[1] - a[1]);
            self.stamp(c.floor() as i64, r.floor() as i64, radius);
        }
    }
}

/// Rasterize an ink trace. Consecutive inked samples belong to one stroke
/// and are joined by a stamped line; a `None` sample lifts the pen.
pub fn rasterize(
    ink: &[Option<[f64; 2]>],
    board: &BoardRect,
    width: usize,
    height: usize,
    radius: usize,
) -> Result<InkImage> {
    let mut img = InkImage::new(width, height, *board)?;
    let r = radius as i64;
    let mut clipped = 0usize;
    let mut prev: Option<[f64; 2]> = None;
    for p in ink {
        match p {
            Some(p) => {
                if !board.contains(*p) {
                    clipped += 1;
                }
                let px = img.to_pixel(*p);
                match prev {
                    Some(q) => img.stamp_line(q, px, r),
                    None => img.stamp(px[0].floor() as i64, px[1].floor() as i64, r),
                }
                prev = Some(px);
            }
            None => prev = None,
        }
    }
    if clipped > 0 {
        log::warn!("{clipped} ink points outside the board were clipped");
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board() -> BoardRect {
        BoardRect::default()
    }

    #[test]
    fn no_ink_gives_blank_image() {
        let img = rasterize(&[None, None], &board(), 256, 256, 2).unwrap();
        assert_eq!(img.count(), 0);
    }

    #[test]
    fn single_point_radius_zero() {
        let img = rasterize(&[Some([0.2, 0.0])], &board(), 256, 256, 0).unwrap();
        assert_eq!(img.count(), 1);
    }

    #[test]
    fn ten_pixel_line_sets_at_least_eleven_pixels() {
        let mut img = InkImage::new(64, 64, board()).unwrap();
        img.stamp_line([10.5, 20.5], [20.5, 20.5], 0);
        assert!(img.count() >= 11, "{}", img.count());
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(rasterize(&[], &board(), 0, 256, 2).is_err());
    }

    #[test]
    fn points_outside_are_clipped_safely() {
        let ink = [Some([-5.0, 9.0]), Some([0.2, 0.0]), Some([5.0, -9.0])];
        let img = rasterize(&ink, &board(), 32, 32, 3).unwrap();
        assert!(img.count() > 0);
        assert_eq!(img.pixels.len(), 32 * 32);
    }

    #[test]
    fn page_up_is_image_up() {
        let b = board();
        let img = InkImage::new(100, 100, b).unwrap();
        let top = img.to_pixel([b.x0 + b.width, b.y0]);
        assert_eq!(top, [0.0, 0.0]);
        let right = img.to_pixel([b.x0, b.y0 + b.height]);
        assert_eq!(right, [100.0, 100.0]);
    }

    #[test]
    fn pen_lift_breaks_the_line() {
        let b = board();
        let a = [0.2, -0.03];
        let c = [0.2, 0.03];
        let joined = rasterize(&[Some(a), Some(c)], &b, 128, 128, 0).unwrap();
        let split = rasterize(&[Some(a), None, Some(c)], &b, 128, 128, 0).unwrap();
        assert_eq!(split.count(), 2);
        assert!(joined.count() > 60);
    }
}
