//! 2-d sample histograms written as CSV and as ASCII PGM images.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvText};

/// Histogram over `[lo, hi)` on each axis with half-open bins; the upper edge belongs
/// to the last bin. Row 0 is the top of the y range.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `ny` rows of `nx` bins.
    pub counts: Vec<u64>,
    pub outside: usize,
}

impl Heatmap {
    pub fn new(lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument("heatmap resolution must be at least 2".into()));
        }
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidArgument("heatmap bounds are empty".into()));
        }
        Ok(Self {
            lo,
            hi,
            nx,
            ny,
            counts: vec![0; nx * ny],
            outside: 0,
        })
    }

    /// Default window `[-6, 6]^2` at 128 x 128.
    pub fn ring_default() -> Self {
        Self::new([-6.0, -6.0], [6.0, 6.0], 128, 128).expect("valid default")
    }

    fn bin(&self, v: f64, axis: usize, n: usize) -> Option<usize> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if !(v >= lo && v <= hi) {
            return None;
        }
        let i = ((v - lo) / (hi - lo) * n as f64).floor() as usize;
        Some(i.min(n - 1))
    }

    /// `(row, col)` of the bin holding `p`, if inside the window.
    pub fn cell(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let col = self.bin(p[0], 0, self.nx)?;
        let from_bottom = self.bin(p[1], 1, self.ny)?;
        Some((self.ny - 1 - from_bottom, col))
    }

    pub fn add(&mut self, samples: &Tensor<f64>) {
        for r in 0..samples.rows() {
            match self.cell([samples.get(r, 0), samples.get(r, 1)]) {
                Some((row, col)) => self.counts[row * self.nx + col] += 1,
                None => self.outside += 1,
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Counts scaled so the fullest bin is 1 (all zeros when empty).
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts
            .iter()
            .map(|&c| if max == 0 { 0.0 } else { c as f64 / max as f64 })
            .collect()
    }

    fn center(&self, row: usize, col: usize) -> [f64; 2] {
        let wx = (self.hi[0] - self.lo[0]) / self.nx as f64;
        let wy = (self.hi[1] - self.lo[1]) / self.ny as f64;
        let from_bottom = self.ny - 1 - row;
        [
            self.lo[0] + (col as f64 + 0.5) * wx,
            self.lo[1] + (from_bottom as f64 + 0.5) * wy,
        ]
    }

    /// `row,col,x,y,count,density` for every bin.
    pub fn to_csv(&self) -> String {
        let norm = self.normalized();
        let mut csv = CsvText::with_header(&["row", "col", "x", "y", "count", "density"]);
        for row in 0..self.ny {
            for col in 0..self.nx {
                let i = row * self.nx + col;
                let [x, y] = self.center(row, col);
                csv.row(&[
                    row.to_string(),
                    col.to_string(),
                    fmt_f64(x),
                    fmt_f64(y),
                    self.counts[i].to_string(),
                    fmt_f64(norm[i]),
                ]);
            }
        }
        csv.finish()
    }

    /// 8-bit ASCII (P2) PGM of the normalized histogram.
    pub fn to_pgm(&self) -> String {
        let norm = self.normalized();
        let mut s = format!("P2\n{} {}\n255\n", self.nx, self.ny);
        for row in 0..self.ny {
            let line: Vec<String> = (0..self.nx)
                .map(|col| ((norm[row * self.nx + col] * 255.0).round() as u8).to_string())
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}
