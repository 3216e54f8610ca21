use super::{mass, InitialDatum};
use crate::error::{Error, Result};
use crate::propagator::{Field, Grid};
use crate::quad::GaussLegendre;

/// Midpoint subsamples per axis on cells cut by a singularity or a jump.
const FINE: usize = 16;
/// Gauss–Legendre points per axis on smooth cells.
const SMOOTH: usize = 4;

/// Average of `rho(|y|)` over the cube of side `h` centered at `c`,
/// skipping `|y| < skip`.
fn cell_average<F: Fn(f64) -> f64>(dim: usize, c: &[f64; 3], h: f64, rho: &F, fine: bool, skip: f64) -> f64 {
    let (pts, wts): (Vec<f64>, Vec<f64>) = if fine {
        let step = 1.0 / FINE as f64;
        ((0..FINE).map(|i| -0.5 + (i as f64 + 0.5) * step).collect(), vec![step; FINE])
    } else {
        let rule = GaussLegendre::new(SMOOTH);
        rule.on(-0.5, 0.5).unzip()
    };
    let m = pts.len();
    let mut sum = 0.0;
    for k in 0..m.pow(dim as u32) {
        let mut rest = k;
        let mut r2 = 0.0;
        let mut w = 1.0;
        for &ca in &c[..dim] {
            let i = rest % m;
            rest /= m;
            let y = ca + pts[i] * h;
            r2 += y * y;
            w *= wts[i];
        }
        let r = r2.sqrt();
        if r >= skip {
            sum += w * rho(r);
        }
    }
    sum
}

/// Cell-averaged samples of `d` on `grid`: each value is the datum's mass in
/// the cell around the node divided by the cell volume. Mass outside the box
/// is dropped.
pub fn sample_on_grid(d: &InitialDatum, grid: &Grid) -> Result<Field> {
    let dim = grid.dim();
    d.validate(dim)?;
    match d {
        InitialDatum::Constant { c } => return Ok(Field::constant(*grid, *c)),
        InitialDatum::GridDensity { field } => return resample(field, grid),
        _ => {}
    }
    let h = grid.spacing();
    let half_diag = 0.5 * h * (dim as f64).sqrt();
    let breaks = d.radial_breaks(dim);
    let singular = d.is_singular();
    let near_origin = 3.0 * h * (dim as f64).sqrt();
    let rho = |r: f64| d.radial_density(dim, r).expect("radial family");
    let origin = grid.origin();
    let mut values = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let c = grid.point(flat);
        let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = if flat == origin && (singular || !breaks.is_empty()) {
            // Exact mass of the inscribed ball plus the rest of the cell.
            let inner = mass::ball_mass(d, dim, &[0.0; 3], 0.5 * h)?;
            if !inner.is_finite() {
                return Err(Error::Sampling(format!(
                    "{} is not integrable on the cell containing the origin",
                    d.family()
                )));
            }
            inner / grid.cell_volume() + cell_average(dim, &c, h, &rho, true, 0.5 * h)
        } else {
            let cut = breaks.iter().any(|&b| (r - b).abs() <= half_diag);
            let fine = cut || (singular && r < near_origin);
            cell_average(dim, &c, h, &rho, fine, 0.0)
        };
        if !v.is_finite() {
            return Err(Error::Sampling(format!("{} sample at node {flat} is not finite", d.family())));
        }
        values.push(v);
    }
    Field::new(*grid, values)
}

/// Warns when the grid does not resolve the datum's core scale by at least
/// two cells.
pub fn resolution_warning(d: &InitialDatum, grid: &Grid) -> Option<String> {
    let h = grid.spacing();
    match d {
        InitialDatum::DiracApprox { j, .. } => {
            let r = InitialDatum::dirac_radius(grid.dim(), *j);
            (r < 2.0 * h).then(|| format!("dirac_approx radius r_j = {r:.3e} is below two cells (h = {h:.3e})"))
        }
        InitialDatum::LogSingular { shift, .. } => {
            let r = (shift - 1.0).exp();
            (r < 2.0 * h).then(|| format!("log_singular support radius {r:.3e} is below two cells (h = {h:.3e})"))
        }
        _ => None,
    }
}

/// Overlap weights of the target cells `[x_i ± h/2]` mapped through `x ↦ μx`
/// with the source cells, normalized to averages. One axis.
fn axis_weights(grid: &Grid, mu: f64) -> Vec<Vec<(usize, f64)>> {
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    (0..n)
        .map(|i| {
            let x = grid.coordinate(i);
            let (a, b) = (mu * (x - 0.5 * h), mu * (x + 0.5 * h));
            let mut row = Vec::new();
            let k0 = (((a + l) / h + 0.5).floor().max(0.0)) as usize;
            let k1 = (((b + l) / h + 0.5).ceil().max(0.0) as usize).min(n);
            for k in k0..k1 {
                let (ca, cb) = (grid.coordinate(k) - 0.5 * h, grid.coordinate(k) + 0.5 * h);
                let overlap = cb.min(b) - ca.max(a);
                if overlap > 0.0 {
                    row.push((k, overlap / (b - a)));
                }
            }
            row
        })
        .collect()
}

/// `amp · f(μ x)` on the grid of `f`, by conservative cell averaging of the
/// piecewise-constant field.
pub(crate) fn dilate_field(f: &Field, amp: f64, mu: f64) -> Result<Field> {
    let g = *f.grid();
    if !(mu > 0.0 && amp >= 0.0) {
        return Err(Error::domain("dilation needs mu > 0 and amp >= 0"));
    }
    if mu > g.points_per_axis() as f64 / 8.0 {
        return Err(Error::Sampling(format!(
            "dilation by {mu} squeezes the grid density below 8 cells per axis"
        )));
    }
    let w = axis_weights(&g, mu);
    let mut data = f.values().to_vec();
    let n = g.points_per_axis();
    let dim = g.dim();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let mut out = vec![0.0; data.len()];
        for flat in 0..data.len() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            out[flat] = w[i].iter().map(|&(k, wk)| wk * data[base + k * stride]).sum();
        }
        data = out;
    }
    Field::new(g, data.into_iter().map(|v| amp * v).collect())
}

/// Multilinear interpolation of `f` onto `grid` (zero outside the source box).
pub fn resample(f: &Field, grid: &Grid) -> Result<Field> {
    let src = f.grid();
    if src.dim() != grid.dim() {
        return Err(Error::domain(format!(
            "cannot resample a {}-dimensional field onto a {}-dimensional grid",
            src.dim(),
            grid.dim()
        )));
    }
    if src == grid {
        return Ok(f.clone());
    }
    let dim = grid.dim();
    let n = src.points_per_axis() as i64;
    let h = src.spacing();
    let values = (0..grid.len())
        .map(|flat| {
            let x = grid.point(flat);
            let mut base = [0i64; 3];
            let mut frac = [0.0; 3];
            for a in 0..dim {
                let s = (x[a] + src.half_width()) / h;
                base[a] = s.floor() as i64;
                frac[a] = s - s.floor();
            }
            let mut v = 0.0;
            for corner in 0..(1usize << dim) {
                let mut w = 1.0;
                let mut idx = [0usize; 3];
                let mut inside = true;
                for a in 0..dim {
                    let up = (corner >> a) & 1;
                    let i = base[a] + up as i64;
                    w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                    if i < 0 || i >= n {
                        inside = false;
                    } else {
                        idx[a] = i as usize;
                    }
                }
                if inside && w > 0.0 {
                    v += w * f.values()[src.flatten(idx)];
                }
            }
            v
        })
        .collect();
    Field::new(*grid, values)
}
