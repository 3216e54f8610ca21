//! Cached interpolants of `x ↦ E_{α,1}(-x)` and `x ↦ E_{α,α}(-x)` on `x ≥ 0`.
//!
//! The propagators evaluate these multipliers millions of times per solve,
//! always with the same α. Each table stores `g(y) = ln E(-e^y)` on a uniform
//! grid in `y` and interpolates with four-point Lagrange polynomials, which
//! keeps the relative error near 1e-11 across the whole half-line.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{ml_asymptotic, mittag_leffler, rgamma, SeriesControl};
use crate::error::{Error, Result};

const Y_MIN: f64 = -12.0;
const Y_MAX: f64 = 16.0;
const STEP: f64 = 0.005;

/// Which of the two propagator multipliers a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableKind {
    /// `E_{α,1}`, the multiplier of `P_α`.
    Relaxation,
    /// `E_{α,α}`, the multiplier of `α S_α`.
    Kernel,
}

impl TableKind {
    fn beta(self, alpha: f64) -> f64 {
        match self {
            TableKind::Relaxation => 1.0,
            TableKind::Kernel => alpha,
        }
    }
}

#[derive(Debug)]
pub struct MittagLefflerTable {
    alpha: f64,
    beta: f64,
    /// Taylor coefficients `1/Γ(β + kα)`, k = 0..3, for tiny arguments.
    taylor: [f64; 3],
    log_values: Vec<f64>,
}

type Cache = Mutex<HashMap<(u64, TableKind), Arc<MittagLefflerTable>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl MittagLefflerTable {
    /// Build a table. Prefer [`MittagLefflerTable::shared`], which reuses
    /// tables across callers.
    pub fn new(alpha: f64, kind: TableKind) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let beta = kind.beta(alpha);
        let taylor = [rgamma(beta), rgamma(beta + alpha), rgamma(beta + 2.0 * alpha)];
        let mut log_values = Vec::new();
        if alpha < 1.0 {
            let ctrl = SeriesControl::default();
            let n = ((Y_MAX - Y_MIN) / STEP).round() as usize + 1;
            log_values.reserve(n);
            for i in 0..n {
                let x = (Y_MIN + i as f64 * STEP).exp();
                let v = mittag_leffler(alpha, beta, -x, &ctrl)?;
                if !(v > 0.0) {
                    return Err(Error::Evaluation {
                        what: format!("E_{{{alpha},{beta}}}(-{x}) is not positive"),
                        partial_sum: v,
                        terms: i,
                    });
                }
                log_values.push(v.ln());
            }
        }
        Ok(Self {
            alpha,
            beta,
            taylor,
            log_values,
        })
    }

    /// The process-wide table for `(alpha, kind)`, built on first use.
    pub fn shared(alpha: f64, kind: TableKind) -> Result<Arc<Self>> {
        let key = (alpha.to_bits(), kind);
        if let Some(t) = cache().lock().expect("table cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        // Build outside the lock; a racing duplicate build is harmless.
        let table = Arc::new(Self::new(alpha, kind)?);
        let mut map = cache().lock().expect("table cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(table)))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E_{α,β}(-x)` for `x ≥ 0`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.alpha == 1.0 {
            return (-x).exp();
        }
        if x <= 0.0 {
            return self.taylor[0];
        }
        let y = x.ln();
        if y < Y_MIN {
            let [c0, c1, c2] = self.taylor;
            return c0 - x * c1 + x * x * c2;
        }
        if y >= Y_MAX {
            let ctrl = SeriesControl::default();
            return ml_asymptotic(self.alpha, self.beta, -x, &ctrl).unwrap_or(0.0);
        }
        let s = (y - Y_MIN) / STEP;
        let last = self.log_values.len() - 1;
        let i = (s.floor() as usize).clamp(1, last - 2);
        let u = s - i as f64;
        // Nodes at offsets -1, 0, 1, 2 relative to i.
        let (a, b, c, d) = (u + 1.0, u, u - 1.0, u - 2.0);
        let v = &self.log_values[i - 1..=i + 2];
        let g = -v[0] * b * c * d / 6.0 + v[1] * a * c * d / 2.0 - v[2] * a * b * d / 2.0
            + v[3] * a * b * c / 6.0;
        g.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_evaluation() {
        let ctrl = SeriesControl::default();
        for alpha in [0.3, 0.7, 0.95] {
            for kind in [TableKind::Relaxation, TableKind::Kernel] {
                let t = MittagLefflerTable::shared(alpha, kind).unwrap();
                let beta = kind.beta(alpha);
                for x in [0.0, 1e-7, 3e-3, 0.4137, 1.0, 7.77, 123.4, 9876.5, 3.3e6, 5e7] {
                    let exact = mittag_leffler(alpha, beta, -x, &ctrl).unwrap();
                    let got = t.eval(x);
                    assert!(
                        ((got - exact) / exact).abs() < 1e-9,
                        "alpha={alpha} {kind:?} x={x}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn classical_table_is_exponential() {
        let t = MittagLefflerTable::shared(1.0, TableKind::Kernel).unwrap();
        assert_eq!(t.eval(2.5), (-2.5f64).exp());
    }

    #[test]
    fn shared_tables_are_reused() {
        let a = MittagLefflerTable::shared(0.55, TableKind::Relaxation).unwrap();
        let b = MittagLefflerTable::shared(0.55, TableKind::Relaxation).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
