//! Bit-packed binary masks over a pixel grid.
//!
//! Foreground pixels are the shape; everything else is background. Pixel
//! (x, y) covers the unit square whose center is (x + 0.5, y + 0.5), which
//! is the coordinate handed to the graph learner.

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        let n = (width as usize * height as usize).div_ceil(64);
        BinaryMask { width, height, words: vec![0; n] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn bit(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        let b = self.bit(x, y);
        self.words[b / 64] >> (b % 64) & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let b = self.bit(x, y);
        if v {
            self.words[b / 64] |= 1 << (b % 64);
        } else {
            self.words[b / 64] &= !(1 << (b % 64));
        }
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).filter_map(move |x| self.get(x, y).then_some((x, y))))
    }

    pub fn foreground_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Center of a pixel, the sampling position used during training.
    pub fn pixel_center(x: u32, y: u32) -> Point2 {
        Point2::new(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Rotates the image by `turns` quarter turns clockwise on screen.
    /// This is an exact pixel permutation.
    pub fn rotate_quarter(&self, turns: u32) -> BinaryMask {
        let mut src = self.clone();
        for _ in 0..turns % 4 {
            let mut dst = BinaryMask::new(src.height, src.width);
            for y in 0..src.height {
                for x in 0..src.width {
                    if src.get(x, y) {
                        dst.set(src.height - 1 - y, x, true);
                    }
                }
            }
            src = dst;
        }
        src
    }

    /// Nearest-neighbor upscaling: every pixel becomes a factor x factor block.
    pub fn upscale(&self, factor: u32) -> BinaryMask {
        assert!(factor >= 1);
        let mut dst = BinaryMask::new(self.width * factor, self.height * factor);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    for dy in 0..factor {
                        for dx in 0..factor {
                            dst.set(x * factor + dx, y * factor + dy, true);
                        }
                    }
                }
            }
        }
        dst
    }

    /// Keeps only the largest 8-connected foreground component. Ties go to
    /// the component discovered first in row-major scan order.
    pub fn largest_component8(&self) -> BinaryMask {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut seen = vec![false; w as usize * h as usize];
        let mut best: Vec<(u32, u32)> = Vec::new();
        let mut stack = Vec::new();
        for sy in 0..self.height {
            for sx in 0..self.width {
                let idx = sy as usize * w as usize + sx as usize;
                if !self.get(sx, sy) || seen[idx] {
                    continue;
                }
                let mut comp = Vec::new();
                seen[idx] = true;
                stack.push((sx, sy));
                while let Some((x, y)) = stack.pop() {
                    comp.push((x, y));
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                                continue;
                            }
                            let nidx = ny as usize * w as usize + nx as usize;
                            if !seen[nidx] && self.get(nx as u32, ny as u32) {
                                seen[nidx] = true;
                                stack.push((nx as u32, ny as u32));
                            }
                        }
                    }
                }
                if comp.len() > best.len() {
                    best = comp;
                }
            }
        }
        let mut out = BinaryMask::new(self.width, self.height);
        for (x, y) in best {
            out.set(x, y, true);
        }
        out
    }
}
