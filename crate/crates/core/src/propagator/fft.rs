use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

/// Forward and inverse N-dimensional transforms for one grid, plus the
/// integer `Σ k_a²` of every bin. Shared between threads.
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k2: Vec<u32>,
    shells: Vec<u32>,
    shell_of: Vec<u32>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

type PlanCache = Mutex<HashMap<(usize, usize, u64), Arc<Spectral>>>;

fn plans() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    /// The cached transform for `grid`.
    pub fn for_grid(grid: &Grid) -> Arc<Self> {
        let key = (grid.dim(), grid.points_per_axis(), grid.half_width().to_bits());
        let mut map = plans().lock().expect("plan cache poisoned");
        Arc::clone(map.entry(key).or_insert_with(|| Arc::new(Self::build(*grid))))
    }

    fn build(grid: Grid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k2 = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                idx[..grid.dim()]
                    .iter()
                    .map(|&i| grid.wavenumber(i).pow(2) as u32)
                    .sum()
            })
            .collect::<Vec<u32>>();
        let mut shells = k2.clone();
        shells.sort_unstable();
        shells.dedup();
        let shell_of = k2
            .iter()
            .map(|k| shells.binary_search(k).expect("every k2 is a shell") as u32)
            .collect();
        Self {
            grid,
            forward,
            inverse,
            k2,
            shells,
            shell_of,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `Σ k_a²` for every bin, in the layout of the coefficients.
    pub fn k2(&self) -> &[u32] {
        &self.k2
    }

    /// The distinct values of `Σ k_a²`, increasing.
    pub fn shells(&self) -> &[u32] {
        &self.shells
    }

    /// For every bin, its position in [`Spectral::shells`].
    pub fn shell_of(&self) -> &[u32] {
        &self.shell_of
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for axis in (0..dim - 1).rev() {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, c) in line.iter_mut().enumerate() {
                        *c = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, c) in line.iter().enumerate() {
                        data[base + i * stride] = *c;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform of real values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform, normalized, keeping the real part.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut coeffs, &self.inverse);
        let scale = 1.0 / coeffs.len() as f64;
        coeffs.iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies every coefficient by `table[k2]`.
    pub fn multiply(&self, coeffs: &mut [Complex64], table: &[f64]) {
        for (c, &k) in coeffs.iter_mut().zip(&self.k2) {
            *c *= table[k as usize];
        }
    }

    /// Applies the radial multiplier `m(|ξ|²)` to real values.
    pub fn apply<M: Fn(f64) -> f64>(&self, values: &[f64], m: M) -> Vec<f64> {
        let table = self.multiplier_table(m);
        let mut c = self.forward(values);
        self.multiply(&mut c, &table);
        self.inverse(c)
    }

    /// `m(|ξ|²)` tabulated on every integer `Σ k_a²` up to the grid maximum.
    pub fn multiplier_table<M: Fn(f64) -> f64>(&self, m: M) -> Vec<f64> {
        let unit = self.grid.xi_sq_unit();
        (0..=self.grid.max_k2()).map(|k| m(k as f64 * unit)).collect()
    }
}
