//! Heat semigroup and the subordinated fractional propagators `P_α(t)`,
//! `S_α(t)` as Fourier multipliers on a periodic box, plus a direct
//! quadrature of the subordination integral used as an oracle.

mod fft;
mod field;
mod grid;

pub use fft::Spectral;
pub use field::Field;
pub use grid::Grid;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::specfun::{gamma, mainardi_density, MittagLefflerTable, SeriesControl, TableKind};

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be > 0, got {t}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// `e^{tΔ} f`.
pub fn apply_heat(f: &Field, t: f64) -> Result<Field> {
    check_time(t)?;
    let sp = Spectral::for_grid(f.grid());
    Ok(Field::from_raw(*f.grid(), sp.apply(f.values(), |x| (-t * x).exp())))
}

/// Multiplier table of `P_α(t)`, `E_{α,1}(-t^α |ξ|²)`, indexed by `Σ k_a²`.
pub fn p_alpha_multiplier(grid: &Grid, alpha: f64, t: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_time(t)?;
    let table = MittagLefflerTable::shared(alpha, TableKind::Relaxation)?;
    let ta = t.powf(alpha);
    Ok(Spectral::for_grid(grid).multiplier_table(|x| table.eval(ta * x)))
}

/// Multiplier table of `S_α(t)`, `E_{α,α}(-t^α |ξ|²)/α`, indexed by `Σ k_a²`.
pub fn s_alpha_multiplier(grid: &Grid, alpha: f64, t: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_time(t)?;
    let table = MittagLefflerTable::shared(alpha, TableKind::Kernel)?;
    let ta = t.powf(alpha);
    Ok(Spectral::for_grid(grid).multiplier_table(|x| table.eval(ta * x) / alpha))
}

fn apply_table(f: &Field, table: &[f64]) -> Field {
    let sp = Spectral::for_grid(f.grid());
    let mut c = sp.forward(f.values());
    sp.multiply(&mut c, table);
    Field::from_raw(*f.grid(), sp.inverse(c))
}

/// `P_α(t) f`, the solution operator of the linear fractional equation.
pub fn apply_p_alpha(f: &Field, alpha: f64, t: f64) -> Result<Field> {
    Ok(apply_table(f, &p_alpha_multiplier(f.grid(), alpha, t)?))
}

/// `S_α(t) f`, the operator in the Duhamel term.
pub fn apply_s_alpha(f: &Field, alpha: f64, t: f64) -> Result<Field> {
    Ok(apply_table(f, &s_alpha_multiplier(f.grid(), alpha, t)?))
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Composite Gauss–Legendre rule for `∫₀^∞ g(θ) h_α(θ) dθ`: returns
/// `(θ_i, w_i h_α(θ_i))`. Rules are cached per `(alpha, nodes)`.
fn subordination_rule(alpha: f64, nodes: usize) -> Result<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (alpha.to_bits(), nodes);
    if let Some(r) = cache.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(r));
    }
    let rule = Arc::new(build_subordination_rule(alpha, nodes)?);
    cache.lock().expect("rule cache poisoned").insert(key, Arc::clone(&rule));
    Ok(rule)
}

fn build_subordination_rule(alpha: f64, nodes: usize) -> Result<Vec<(f64, f64)>> {
    let ctrl = SeriesControl::default();
    let h = |th: f64| mainardi_density(alpha, th, &ctrl);
    // Range: double until both h and θh are negligible.
    let mut top = 1.0;
    while h(top)? * top.max(1.0).powi(2) > 1e-18 {
        top *= 2.0;
        if top > 1e4 {
            return Err(Error::Evaluation {
                what: format!("subordination density tail for alpha={alpha}"),
                partial_sum: top,
                terms: 0,
            });
        }
    }
    let rule = GaussLegendre::new(nodes);
    let bulk = 32;
    let width = top / bulk as f64;
    let mut panels = Vec::new();
    // Dyadic panels toward θ = 0 resolve the heat factor for large |ξ|².
    let mut b = width;
    for _ in 0..30 {
        panels.push((0.5 * b, b));
        b *= 0.5;
    }
    panels.push((0.0, b));
    panels.extend((1..bulk).map(|i| (i as f64 * width, (i + 1) as f64 * width)));
    let mut out = Vec::with_capacity(panels.len() * nodes);
    for (a, b) in panels {
        for (th, w) in rule.on(a, b) {
            out.push((th, w * h(th)?));
        }
    }
    Ok(out)
}

fn quadrature_apply(f: &Field, alpha: f64, t: f64, nodes: usize, first_moment: bool) -> Result<Field> {
    check_alpha(alpha)?;
    check_time(t)?;
    if nodes < 16 {
        return Err(Error::domain(format!("quadrature needs nodes >= 16, got {nodes}")));
    }
    if alpha == 1.0 {
        return apply_heat(f, t);
    }
    let rule = subordination_rule(alpha, nodes)?;
    let ta = t.powf(alpha);
    let sp = Spectral::for_grid(f.grid());
    // Linear in f, so the quadrature is carried out on the multiplier.
    let table = sp.multiplier_table(|x| {
        rule.iter()
            .map(|&(th, w)| {
                let w = if first_moment { w * th } else { w };
                w * (-ta * th * x).exp()
            })
            .sum()
    });
    Ok(apply_table(f, &table))
}

/// `∫ h_α(θ) e^{t^α θ Δ} f dθ` by direct quadrature over θ.
pub fn quadrature_p_alpha(f: &Field, alpha: f64, t: f64, nodes: usize) -> Result<Field> {
    quadrature_apply(f, alpha, t, nodes, false)
}

/// `∫ θ h_α(θ) e^{t^α θ Δ} f dθ` by direct quadrature over θ.
pub fn quadrature_s_alpha(f: &Field, alpha: f64, t: f64, nodes: usize) -> Result<Field> {
    quadrature_apply(f, alpha, t, nodes, true)
}

/// `S_α(t)` applied to a constant: `1/Γ(1+α)`.
pub fn s_alpha_mass(alpha: f64) -> Result<f64> {
    Ok(1.0 / gamma(1.0 + alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bump(grid: Grid, width: f64, shift: f64) -> Field {
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().enumerate().map(|(a, v)| (v - if a == 0 { shift } else { 0.0 }).powi(2)).sum();
            (-r2 / (2.0 * width * width)).exp()
        })
        .unwrap()
    }

    fn heat_kernel(grid: Grid, s: f64) -> Field {
        let n = grid.dim() as f64;
        Field::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (4.0 * std::f64::consts::PI * s).powf(-n / 2.0) * (-r2 / (4.0 * s)).exp()
        })
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0, 1.0, 16).is_err());
        assert!(Grid::new(4, 1.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 12).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
        let g = Grid::new(2, 4.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.point(g.origin()), [0.0, 0.0, 0.0]);
        assert_eq!(g.unflatten(g.flatten([3, 5, 0])), [3, 5, 0]);
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid::new(2, 5.0, 32).unwrap();
        let c = Field::constant(g, 2.5);
        assert!(apply_heat(&c, 0.3).unwrap().max_abs_diff(&c) < 1e-13);
        for a in [0.3, 0.8, 1.0] {
            assert!(apply_p_alpha(&c, a, 0.7).unwrap().max_abs_diff(&c) < 1e-13);
            let s = apply_s_alpha(&c, a, 0.7).unwrap();
            let want = 2.5 / gamma(1.0 + a).unwrap();
            assert!((s.sup() - want).abs() < 1e-12 && (s.inf() - want).abs() < 1e-12);
        }
        let q = quadrature_p_alpha(&c, 0.6, 0.5, 16).unwrap();
        assert!(q.max_abs_diff(&c) < 1e-6);
    }

    #[test]
    fn heat_semigroup_property() {
        let g = Grid::new(1, 10.0, 256).unwrap();
        let a = apply_heat(&heat_kernel(g, 0.1), 0.1).unwrap();
        assert!(a.max_abs_diff(&heat_kernel(g, 0.2)) < 1e-10);
        let g = Grid::new(2, 8.0, 64).unwrap();
        let a = apply_heat(&heat_kernel(g, 0.1), 0.1).unwrap();
        assert!(a.max_abs_diff(&heat_kernel(g, 0.2)) < 1e-6);
    }

    #[test]
    fn heat_preserves_mass_and_bounds() {
        let g = Grid::new(1, 6.0, 128).unwrap();
        let f = Field::from_fn(g, |x| 1.0 + (x[0] * 0.7).sin() * (-x[0] * x[0]).exp()).unwrap();
        let u = apply_heat(&f, 0.05).unwrap();
        assert!((u.integral() - f.integral()).abs() < 1e-12 * f.integral());
        assert!(u.sup() <= f.sup() + 1e-10 && u.inf() >= f.inf() - 1e-10);
        assert!(apply_heat(&f, 0.0).is_err());
    }

    #[test]
    fn classical_order_is_the_heat_semigroup() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 1.3).cos().powi(2) * (-(x[0] - 1.0).powi(2)).exp()).unwrap();
        for t in [0.01, 0.3, 2.0] {
            let h = apply_heat(&f, t).unwrap();
            assert!(apply_p_alpha(&f, 1.0, t).unwrap().max_abs_diff(&h) < 1e-8);
            assert!(apply_s_alpha(&f, 1.0, t).unwrap().max_abs_diff(&h) < 1e-8);
        }
    }

    #[test]
    fn multiplier_path_matches_quadrature() {
        let g = Grid::new(1, 10.0, 128).unwrap();
        let f = bump(g, 0.8, 0.5);
        for a in [0.4, 0.7, 0.95] {
            for t in [0.01, 0.1, 1.0] {
                let m = apply_p_alpha(&f, a, t).unwrap();
                let q = quadrature_p_alpha(&f, a, t, 24).unwrap();
                assert!(m.max_abs_diff(&q) < 1e-6, "P a={a} t={t}: {}", m.max_abs_diff(&q));
                let m = apply_s_alpha(&f, a, t).unwrap();
                let q = quadrature_s_alpha(&f, a, t, 24).unwrap();
                assert!(m.max_abs_diff(&q) < 1e-6, "S a={a} t={t}: {}", m.max_abs_diff(&q));
            }
        }
    }

    #[test]
    fn quadrature_converges_with_nodes() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let f = bump(g, 1.0, 0.0);
        let m = apply_p_alpha(&f, 0.5, 0.1).unwrap();
        let errs: Vec<f64> = [4usize, 8]
            .iter()
            .map(|&k| quadrature_p_alpha(&f, 0.5, 0.1, 16 * k / 4).unwrap().max_abs_diff(&m))
            .collect();
        assert!(errs[1] <= errs[0]);
        assert!(quadrature_p_alpha(&f, 0.5, 0.1, 8).is_err());
    }

    #[test]
    fn operators_commute() {
        let g = Grid::new(2, 6.0, 32).unwrap();
        let f = bump(g, 0.7, 1.0);
        let ab = apply_heat(&apply_p_alpha(&f, 0.6, 0.4).unwrap(), 0.2).unwrap();
        let ba = apply_p_alpha(&apply_heat(&f, 0.2).unwrap(), 0.6, 0.4).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn p_alpha_multiplier_is_monotone_and_bounded(alpha in 0.05f64..1.0, t in 1e-3f64..1e2) {
            let g = Grid::new(1, 5.0, 256).unwrap();
            let m = p_alpha_multiplier(&g, alpha, t).unwrap();
            prop_assert!((m[0] - 1.0).abs() < 1e-14);
            for w in m.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
                prop_assert!(w[1] > 0.0 && w[1] <= 1.0);
            }
        }

        #[test]
        fn nonnegative_input_stays_nonnegative(
            alpha in 0.2f64..1.0,
            t in 1e-2f64..10.0,
            w in 0.4f64..1.5,
            s in -2.0f64..2.0,
        ) {
            let g = Grid::new(1, 12.0, 128).unwrap();
            let f = bump(g, w, s);
            prop_assert!(apply_p_alpha(&f, alpha, t).unwrap().inf() >= -1e-8);
            prop_assert!(apply_s_alpha(&f, alpha, t).unwrap().inf() >= -1e-8);
        }
    }
}
