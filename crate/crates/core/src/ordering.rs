//! Finite generator sets of the dual ordering cone.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Generators `V` of the dual cone together with the Armijo vector `xi`.
///
/// Every generator has unit norm and `0 < <xi, v> <= 1` for all `v` in `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingSpec {
    generators: Vec<Vec<f64>>,
    xi: Vec<f64>,
    canonical: bool,
}

impl OrderingSpec {
    /// Nonnegative orthant of `R^m`: canonical basis and `xi = (1, ..., 1)`.
    pub fn canonical(m: usize) -> Self {
        let generators = (0..m)
            .map(|i| {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            })
            .collect();
        OrderingSpec {
            generators,
            xi: vec![1.0; m],
            canonical: true,
        }
    }

    pub fn new(generators: Vec<Vec<f64>>, xi: Vec<f64>) -> Result<Self> {
        let m = xi.len();
        if generators.is_empty() {
            return Err(Error::InvalidInput("empty generator set".into()));
        }
        for v in &generators {
            if v.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "generator of length {} for m = {m}",
                    v.len()
                )));
            }
            if (norm(v) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "generator {v:?} is not unit length"
                )));
            }
            let p = dot(&xi, v);
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidInput(format!("<xi, v> = {p} outside (0, 1]")));
            }
        }
        let canonical = generators.len() == m
            && generators.iter().enumerate().all(|(i, v)| {
                v.iter()
                    .enumerate()
                    .all(|(j, &c)| c == if i == j { 1.0 } else { 0.0 })
            });
        Ok(OrderingSpec {
            generators,
            xi,
            canonical,
        })
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Dimension of the image space.
    pub fn m(&self) -> usize {
        self.xi.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// `max_v <v, y>`; for the orthant this is `max_i y_i`. First index wins ties.
    pub fn support(&self, y: &[f64]) -> (usize, f64) {
        if self.canonical {
            return argmax(y.iter().copied());
        }
        argmax(self.generators.iter().map(|v| dot(v, y)))
    }

    /// `a ⪯ b` in the cone order, i.e. `<v, b - a> >= 0` for every generator.
    pub fn precedes(&self, a: &[f64], b: &[f64]) -> bool {
        if self.canonical {
            return a.iter().zip(b).all(|(x, y)| x <= y);
        }
        self.generators.iter().all(|v| {
            v.iter()
                .zip(a.iter().zip(b))
                .map(|(vi, (x, y))| vi * (y - x))
                .sum::<f64>()
                >= 0.0
        })
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 || (v.is_nan() && !best.1.is_nan()) {
            best = (i, v);
        }
    }
    best
}
