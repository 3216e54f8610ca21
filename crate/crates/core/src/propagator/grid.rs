use crate::error::{Error, Result};

/// Uniform periodic grid on the box `[-L, L)^N`.
///
/// Node `i` on each axis sits at `-L + i·h`, so the origin is node `n/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::domain(format!("grid half_width must be > 0, got {half_width}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::domain(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            n: points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of nodes, `n^N`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate of node `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut r = flat;
        for a in (0..self.dim).rev() {
            idx[a] = r % self.n;
            r /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Position of a node; unused trailing components are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Flat index of the node at the origin.
    pub fn origin(&self) -> usize {
        self.flatten([self.n / 2; 3])
    }

    /// Signed integer wavenumber of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// `|ξ|²` per unit of the integer `Σ k_a²`: `(π/L)²`.
    pub fn xi_sq_unit(&self) -> f64 {
        (std::f64::consts::PI / self.half_width).powi(2)
    }

    /// Largest value of `Σ k_a²` on the grid.
    pub fn max_k2(&self) -> usize {
        self.dim * (self.n / 2).pow(2)
    }
}
