use crate::error::{Error, Result};
use crate::propagator::{Field, Grid, Spectral};

/// Subsamples per axis used to weigh cells cut by a sphere.
fn subsamples(dim: usize) -> usize {
    match dim {
        1 => 1,
        2 => 16,
        _ => 8,
    }
}

/// Fraction of the cube of side `h` centered at `offset` lying in `B(0, σ)`.
pub(crate) fn cell_fraction(dim: usize, offset: &[f64], h: f64, sigma: f64) -> f64 {
    let half = 0.5 * h;
    let (mut near, mut far) = (0.0, 0.0);
    for &c in &offset[..dim] {
        let a = c.abs();
        near += (a - half).max(0.0).powi(2);
        far += (a + half).powi(2);
    }
    if far <= sigma * sigma {
        return 1.0;
    }
    if near >= sigma * sigma {
        return 0.0;
    }
    if dim == 1 {
        let lo = (offset[0] - half).max(-sigma);
        let hi = (offset[0] + half).min(sigma);
        return ((hi - lo) / h).max(0.0);
    }
    let m = subsamples(dim);
    let step = h / m as f64;
    let total = m.pow(dim as u32);
    let mut inside = 0usize;
    for k in 0..total {
        let mut r2 = 0.0;
        let mut rest = k;
        for &c in &offset[..dim] {
            let i = rest % m;
            rest /= m;
            let y = c - half + (i as f64 + 0.5) * step;
            r2 += y * y;
        }
        if r2 < sigma * sigma {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

/// `Σ w |f|^q h^N` over cells meeting `B(center, σ)`, periodic wrap-around,
/// with `w` the fraction of each cell inside the ball.
pub(crate) fn grid_ball_sum(f: &Field, center: &[f64], sigma: f64, q: f64) -> f64 {
    let g = f.grid();
    let dim = g.dim();
    let h = g.spacing();
    let n = g.points_per_axis() as i64;
    let reach = (sigma / h).ceil() as i64 + 1;
    let mut lo = [0i64; 3];
    for a in 0..dim {
        lo[a] = ((center[a] + g.half_width()) / h).round() as i64 - reach;
    }
    let width = (2 * reach + 1) as usize;
    let cells = width.pow(dim as u32);
    let mut sum = 0.0;
    for k in 0..cells {
        let mut rest = k;
        let mut idx = [0usize; 3];
        let mut off = [0.0; 3];
        for a in 0..dim {
            let i = lo[a] + (rest % width) as i64;
            rest /= width;
            off[a] = -g.half_width() + i as f64 * h - center[a];
            idx[a] = i.rem_euclid(n) as usize;
        }
        let w = cell_fraction(dim, &off, h, sigma);
        if w > 0.0 {
            sum += w * f.values()[g.flatten(idx)].abs().powf(q);
        }
    }
    sum * g.cell_volume()
}

fn ball_stencil(grid: &Grid, radius: f64) -> Vec<f64> {
    let dim = grid.dim();
    let h = grid.spacing();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.unflatten(flat);
            let mut off = [0.0; 3];
            for a in 0..dim {
                off[a] = grid.wavenumber(idx[a]) as f64 * h;
            }
            cell_fraction(dim, &off, h, radius)
        })
        .collect()
}

/// `∫_{B(z, R)} |f|^q` at every node `z`, by a periodic FFT convolution with
/// a partial-cell ball stencil.
pub fn ball_integrals(f: &Field, q: f64, radius: f64) -> Result<Field> {
    let g = f.grid();
    if !(radius > 0.0) {
        return Err(Error::domain(format!("ball radius must be > 0, got {radius}")));
    }
    if radius + g.spacing() >= g.half_width() {
        return Err(Error::domain(format!(
            "ball of radius {radius} does not fit in the box of half-width {}",
            g.half_width()
        )));
    }
    let sp = Spectral::for_grid(g);
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(q)).collect();
    let mut a = sp.forward(&powered);
    let b = sp.forward(&ball_stencil(g, radius));
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    let vol = g.cell_volume();
    let out = sp.inverse(a).into_iter().map(|v| (v * vol).max(0.0)).collect();
    Field::new(*g, out)
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("norm exponent q must be >= 1, got {q}")))
    }
}

/// `sup_z ‖f‖_{L^q(B(z,1))}` over grid nodes.
pub fn uloc_norm(f: &Field, q: f64) -> Result<f64> {
    check_q(q)?;
    if f.grid().spacing() > 0.25 {
        return Err(Error::domain(format!(
            "uloc norm needs grid spacing <= 1/4, got {}",
            f.grid().spacing()
        )));
    }
    Ok(ball_integrals(f, q, 1.0)?.sup().powf(1.0 / q))
}

/// `sup_{z, R ≤ 1} R^{(λ-N)/q} ‖f‖_{L^q(B(z,R))}` over grid nodes and the
/// dyadic radii `R = 2^{-k} ≥ 2h`.
pub fn morrey_norm(f: &Field, q: f64, lambda: f64) -> Result<f64> {
    check_q(q)?;
    let g = f.grid();
    let n = g.dim() as f64;
    if !(lambda > 0.0 && lambda <= n) {
        return Err(Error::domain(format!("Morrey index lambda must lie in (0, N], got {lambda}")));
    }
    if g.spacing() > 0.25 {
        return Err(Error::domain(format!(
            "Morrey norm needs grid spacing <= 1/4, got {}",
            g.spacing()
        )));
    }
    let mut best: f64 = 0.0;
    let mut r = 1.0;
    while r >= 2.0 * g.spacing() {
        let s = ball_integrals(f, q, r)?.sup().powf(1.0 / q);
        best = best.max(r.powf((lambda - n) / q) * s);
        r *= 0.5;
    }
    Ok(best)
}
