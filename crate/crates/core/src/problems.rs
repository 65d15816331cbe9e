//! Benchmark problems with analytic Jacobians.
//!
//! Objectives follow the formulas of the originating test-set literature;
//! each implementation notes the formula it codes. Row `i` of every Jacobian
//! is the gradient of objective `i`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{Interval, Problem, VectorFunction};

/// Optional size overrides for parameterized families.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Variant {
    pub n: Option<usize>,
    pub m: Option<usize>,
}

/// Names of the fixed-size registry entries.
pub const REGISTRY: [&str; 19] = [
    "EX1", "AP3", "Far1", "FDS-1", "FDS-2", "FDS-3", "Hil1", "Lov3", "Lov4", "MGH16-1", "MGH16-2",
    "MGH26", "MMR5-1", "MMR5-2", "MOP5", "MOP7", "SLC2-1", "SLC2-2", "SLC2-3",
];

/// Problems the acceptance gates run on.
pub const MIN_ROSTER: [&str; 10] = [
    "EX1", "FDS-1", "FDS-2", "FDS-3", "Hil1", "MOP5", "MOP7", "SLC2-1", "SLC2-2", "SLC2-3",
];

pub fn registry_names() -> Vec<String> {
    REGISTRY.iter().map(|s| s.to_string()).collect()
}

/// Looks up a registry entry such as `FDS-2`, or a family name (`FDS`,
/// `MGH16`, `MMR5`, `SLC2`) sized by `variant`.
pub fn get_problem(name: &str, variant: Variant) -> Result<Problem> {
    if variant != Variant::default() {
        return match name {
            "FDS" => fds(
                variant.n.unwrap_or(2),
                -2.0,
                2.0,
                &format!("FDS(n={})", variant.n.unwrap_or(2)),
            ),
            "MGH16" => mgh16(
                variant.m.unwrap_or(50),
                &format!("MGH16(m={})", variant.m.unwrap_or(50)),
            ),
            "MMR5" => mmr5(
                variant.n.unwrap_or(200),
                -10.0,
                10.0,
                &format!("MMR5(n={})", variant.n.unwrap_or(200)),
            ),
            "SLC2" => slc2(
                variant.n.unwrap_or(200),
                -10.0,
                10.0,
                &format!("SLC2(n={})", variant.n.unwrap_or(200)),
            ),
            _ => Err(unknown(name)),
        };
    }
    match name {
        "EX1" => ex1(),
        "AP3" => ap3(),
        "Far1" => far1(),
        "FDS" | "FDS-1" => fds(2, -2.0, 2.0, "FDS-1"),
        "FDS-2" => fds(100, -2.0, 2.0, "FDS-2"),
        "FDS-3" => fds(150, -2.0, 2.0, "FDS-3"),
        "Hil1" => hil1(),
        "Lov3" => lov3(),
        "Lov4" => lov4(),
        "MGH16-1" => mgh16(50, "MGH16-1"),
        "MGH16-2" => mgh16(100, "MGH16-2"),
        "MGH26" => mgh26(),
        "MMR5-1" => mmr5(1000, -10.0, 10.0, "MMR5-1"),
        "MMR5-2" => mmr5(200, -100.0, 100.0, "MMR5-2"),
        "MOP5" => mop5(),
        "MOP7" => mop7(),
        "SLC2-1" => slc2(1000, -10.0, 10.0, "SLC2-1"),
        "SLC2-2" => slc2(200, -100.0, 100.0, "SLC2-2"),
        "SLC2-3" => slc2(1000, -100.0, 100.0, "SLC2-3"),
        _ => Err(unknown(name)),
    }
}

fn unknown(name: &str) -> Error {
    Error::UnknownProblem {
        name: name.to_string(),
        valid: registry_names(),
    }
}

/// Metadata row for listings.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub convex: bool,
    pub bounds: Vec<[f64; 2]>,
}

impl ProblemInfo {
    pub fn of(p: &Problem) -> Self {
        // Collapse identical intervals so large-n entries stay readable.
        let mut bounds: Vec<[f64; 2]> = p.bounds().iter().map(|b| [b.lo, b.hi]).collect();
        if bounds.windows(2).all(|w| w[0] == w[1]) {
            bounds.truncate(1);
        }
        ProblemInfo {
            name: p.name().to_string(),
            n: p.n(),
            m: p.m(),
            convex: p.is_convex(),
            bounds,
        }
    }
}

/// Every registry entry.
pub fn all_problems() -> Vec<Problem> {
    REGISTRY
        .iter()
        .map(|n| get_problem(n, Variant::default()).expect("registry entry"))
        .collect()
}

// ---------------------------------------------------------------------------

/// Φ1 = (x1² + sin x2)/2, Φ2 = ((x1-1)² - (x2-1)²)/2. Sampled in [-2, 2]².
struct Ex1;

impl VectorFunction for Ex1 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.5 * (x[0] * x[0] + x[1].sin());
        out[1] = 0.5 * ((x[0] - 1.0).powi(2) - (x[1] - 1.0).powi(2));
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        jac.row_mut(0).copy_from_slice(&[x[0], 0.5 * x[1].cos()]);
        jac.row_mut(1).copy_from_slice(&[x[0] - 1.0, -(x[1] - 1.0)]);
    }
}

pub fn ex1() -> Result<Problem> {
    Problem::with_cube("EX1", 2, 2, -2.0, 2.0, false, Arc::new(Ex1))
}

/// f1 = ¼[(x1-1)⁴ + 2(x2-2)⁴], f2 = (x2 - x1²)² + (1 - x1)².
struct Ap3;

impl VectorFunction for Ap3 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.25 * ((x[0] - 1.0).powi(4) + 2.0 * (x[1] - 2.0).powi(4));
        out[1] = (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        jac.row_mut(0)
            .copy_from_slice(&[(x[0] - 1.0).powi(3), 2.0 * (x[1] - 2.0).powi(3)]);
        let r = x[1] - x[0] * x[0];
        jac.row_mut(1)
            .copy_from_slice(&[-4.0 * x[0] * r - 2.0 * (1.0 - x[0]), 2.0 * r]);
    }
}

pub fn ap3() -> Result<Problem> {
    Problem::with_cube("AP3", 2, 2, -2.0, 2.0, false, Arc::new(Ap3))
}

/// Sums of Gaussian bumps `c · exp(k(-(x1-p)² - (x2-q)²))`.
struct Far1;

const FAR1: [[(f64, f64, f64, f64); 5]; 2] = [
    [
        (-2.0, 15.0, 0.1, 0.0),
        (-1.0, 20.0, 0.6, 0.6),
        (1.0, 20.0, -0.6, 0.6),
        (1.0, 20.0, 0.6, -0.6),
        (1.0, 20.0, -0.6, -0.6),
    ],
    [
        (2.0, 20.0, 0.0, 0.0),
        (1.0, 20.0, 0.4, 0.6),
        (-1.0, 20.0, -0.5, 0.7),
        (-1.0, 20.0, 0.5, -0.7),
        (1.0, 20.0, -0.4, -0.8),
    ],
];

impl VectorFunction for Far1 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&FAR1) {
            *o = terms
                .iter()
                .map(|&(c, k, p, q)| c * (k * (-(x[0] - p).powi(2) - (x[1] - q).powi(2))).exp())
                .sum();
        }
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        for (i, terms) in FAR1.iter().enumerate() {
            let mut g = [0.0; 2];
            for &(c, k, p, q) in terms {
                let t = c * (k * (-(x[0] - p).powi(2) - (x[1] - q).powi(2))).exp();
                g[0] += t * k * -2.0 * (x[0] - p);
                g[1] += t * k * -2.0 * (x[1] - q);
            }
            jac.row_mut(i).copy_from_slice(&g);
        }
    }
}

pub fn far1() -> Result<Problem> {
    Problem::with_cube("Far1", 2, 2, -1.0, 1.0, false, Arc::new(Far1))
}

/// f1 = n⁻² Σ i (x_i - i)⁴,
/// f2 = exp(Σ x_i / n) + ‖x‖²,
/// f3 = (n(n+1))⁻¹ Σ i (n - i + 1) exp(-x_i), with i = 1..n.
struct Fds {
    n: usize,
}

impl VectorFunction for Fds {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let nf = self.n as f64;
        let mut f1 = 0.0;
        let mut f3 = 0.0;
        for (idx, &xi) in x.iter().enumerate() {
            let i = (idx + 1) as f64;
            f1 += i * (xi - i).powi(4);
            f3 += i * (nf - i + 1.0) * (-xi).exp();
        }
        out[0] = f1 / (nf * nf);
        out[1] = (x.iter().sum::<f64>() / nf).exp() + x.iter().map(|v| v * v).sum::<f64>();
        out[2] = f3 / (nf * (nf + 1.0));
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let nf = self.n as f64;
        let e = (x.iter().sum::<f64>() / nf).exp() / nf;
        for (idx, &xi) in x.iter().enumerate() {
            let i = (idx + 1) as f64;
            jac.set(0, idx, 4.0 * i * (xi - i).powi(3) / (nf * nf));
            jac.set(1, idx, e + 2.0 * xi);
            jac.set(
                2,
                idx,
                -i * (nf - i + 1.0) * (-xi).exp() / (nf * (nf + 1.0)),
            );
        }
    }
}

pub fn fds(n: usize, lo: f64, hi: f64, name: &str) -> Result<Problem> {
    Problem::with_cube(name, n, 3, lo, hi, true, Arc::new(Fds { n }))
}

/// a = (2π/360)(45 + 40 sin 2πx1 + 25 sin 2πx2), b = 1 + ½ cos 2πx1;
/// f1 = b cos a, f2 = b sin a.
struct Hil1;

impl VectorFunction for Hil1 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = hil1_ab(x);
        out[0] = a.cos() * b;
        out[1] = a.sin() * b;
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let (a, b) = hil1_ab(x);
        let c = 2.0 * PI / 360.0;
        let da = [
            c * 40.0 * 2.0 * PI * (2.0 * PI * x[0]).cos(),
            c * 25.0 * 2.0 * PI * (2.0 * PI * x[1]).cos(),
        ];
        let db = [-0.5 * 2.0 * PI * (2.0 * PI * x[0]).sin(), 0.0];
        let (sa, ca) = a.sin_cos();
        for j in 0..2 {
            jac.set(0, j, -sa * b * da[j] + ca * db[j]);
            jac.set(1, j, ca * b * da[j] + sa * db[j]);
        }
    }
}

fn hil1_ab(x: &[f64]) -> (f64, f64) {
    let a =
        2.0 * PI / 360.0 * (45.0 + 40.0 * (2.0 * PI * x[0]).sin() + 25.0 * (2.0 * PI * x[1]).sin());
    let b = 1.0 + 0.5 * (2.0 * PI * x[0]).cos();
    (a, b)
}

pub fn hil1() -> Result<Problem> {
    Problem::with_cube("Hil1", 2, 2, 0.0, 1.0, false, Arc::new(Hil1))
}

/// f1 = x1² + x2², f2 = (x1 - 6)² - (x2 + 0.3)².
struct Lov3;

impl VectorFunction for Lov3 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0] * x[0] + x[1] * x[1];
        out[1] = (x[0] - 6.0).powi(2) - (x[1] + 0.3).powi(2);
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        jac.row_mut(0).copy_from_slice(&[2.0 * x[0], 2.0 * x[1]]);
        jac.row_mut(1)
            .copy_from_slice(&[2.0 * (x[0] - 6.0), -2.0 * (x[1] + 0.3)]);
    }
}

pub fn lov3() -> Result<Problem> {
    Problem::with_cube("Lov3", 2, 2, -100.0, 100.0, false, Arc::new(Lov3))
}

/// f1 = x1² + x2² + 4(exp(-(x1+2)² - x2²) + exp(-(x1-2)² - x2²)),
/// f2 = (x1 - 6)² + (x2 + 0.5)².
struct Lov4;

impl VectorFunction for Lov4 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (e1, e2) = lov4_bumps(x);
        out[0] = x[0] * x[0] + x[1] * x[1] + 4.0 * (e1 + e2);
        out[1] = (x[0] - 6.0).powi(2) + (x[1] + 0.5).powi(2);
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let (e1, e2) = lov4_bumps(x);
        jac.row_mut(0).copy_from_slice(&[
            2.0 * x[0] - 8.0 * (e1 * (x[0] + 2.0) + e2 * (x[0] - 2.0)),
            2.0 * x[1] - 8.0 * x[1] * (e1 + e2),
        ]);
        jac.row_mut(1)
            .copy_from_slice(&[2.0 * (x[0] - 6.0), 2.0 * (x[1] + 0.5)]);
    }
}

fn lov4_bumps(x: &[f64]) -> (f64, f64) {
    let y2 = x[1] * x[1];
    (
        (-(x[0] + 2.0).powi(2) - y2).exp(),
        (-(x[0] - 2.0).powi(2) - y2).exp(),
    )
}

pub fn lov4() -> Result<Problem> {
    Problem::with_cube("Lov4", 2, 2, -100.0, 100.0, false, Arc::new(Lov4))
}

/// Brown and Dennis residuals, one objective per residual:
/// F_i = r_i², r_i = (x1 + t_i x2 - e^{t_i})² + (x3 + x4 sin t_i - cos t_i)², t_i = i/5.
struct Mgh16 {
    m: usize,
}

impl VectorFunction for Mgh16 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.m) {
            let t = (i + 1) as f64 / 5.0;
            let u = x[0] + t * x[1] - t.exp();
            let w = x[2] + x[3] * t.sin() - t.cos();
            *o = (u * u + w * w).powi(2);
        }
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        for i in 0..self.m {
            let t = (i + 1) as f64 / 5.0;
            let u = x[0] + t * x[1] - t.exp();
            let w = x[2] + x[3] * t.sin() - t.cos();
            let r2 = 4.0 * (u * u + w * w);
            jac.row_mut(i)
                .copy_from_slice(&[r2 * u, r2 * u * t, r2 * w, r2 * w * t.sin()]);
        }
    }
}

pub fn mgh16(m: usize, name: &str) -> Result<Problem> {
    let bounds = vec![
        Interval::new(-25.0, 25.0),
        Interval::new(-5.0, 5.0),
        Interval::new(-5.0, 5.0),
        Interval::new(-1.0, 1.0),
    ];
    Problem::new(name, 4, m, bounds, false, Arc::new(Mgh16 { m }))
}

/// Trigonometric function, F_i = f_i², f_i = n - Σ cos x_j + i(1 - cos x_i) - sin x_i.
struct Mgh26 {
    n: usize,
}

impl VectorFunction for Mgh26 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let sc: f64 = x.iter().map(|v| v.cos()).sum();
        for (i, o) in out.iter_mut().enumerate() {
            let fi = self.n as f64 - sc + (i + 1) as f64 * (1.0 - x[i].cos()) - x[i].sin();
            *o = fi * fi;
        }
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let sc: f64 = x.iter().map(|v| v.cos()).sum();
        for i in 0..self.n {
            let ii = (i + 1) as f64;
            let fi = self.n as f64 - sc + ii * (1.0 - x[i].cos()) - x[i].sin();
            for j in 0..self.n {
                let mut dfi = x[j].sin();
                if i == j {
                    dfi += ii * x[i].sin() - x[i].cos();
                }
                jac.set(i, j, 2.0 * fi * dfi);
            }
        }
    }
}

pub fn mgh26() -> Result<Problem> {
    Problem::with_cube("MGH26", 4, 4, -1.0, 1.0, false, Arc::new(Mgh26 { n: 4 }))
}

/// Rastrigin-type pair:
/// f1 = (n⁻¹ Σ (x_i² - 10 cos 2πx_i + 10))^¼,
/// f2 = (n⁻¹ Σ ((x_i - 1.5)² - 10 cos 2π(x_i - 1.5) + 10))^¼.
struct Mmr5 {
    n: usize,
}

impl Mmr5 {
    fn inner(&self, x: &[f64], shift: f64) -> f64 {
        x.iter()
            .map(|&v| {
                let y = v - shift;
                y * y - 10.0 * (2.0 * PI * y).cos() + 10.0
            })
            .sum::<f64>()
            / self.n as f64
    }
}

impl VectorFunction for Mmr5 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.inner(x, 0.0).max(0.0).powf(0.25);
        out[1] = self.inner(x, 1.5).max(0.0).powf(0.25);
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        for (row, shift) in [0.0, 1.5].into_iter().enumerate() {
            let s = self.inner(x, shift);
            let scale = if s > 0.0 {
                0.25 * s.powf(-0.75) / self.n as f64
            } else {
                0.0
            };
            for (j, &v) in x.iter().enumerate() {
                let y = v - shift;
                jac.set(row, j, scale * (2.0 * y + 20.0 * PI * (2.0 * PI * y).sin()));
            }
        }
    }
}

pub fn mmr5(n: usize, lo: f64, hi: f64, name: &str) -> Result<Problem> {
    Problem::with_cube(name, n, 2, lo, hi, false, Arc::new(Mmr5 { n }))
}

/// Viennet's three-objective problem:
/// f1 = ½r + sin r, f2 = (3x1 - 2x2 + 4)²/8 + (x1 - x2 + 1)²/27 + 15,
/// f3 = 1/(r + 1) - 1.1 e^{-r}, with r = x1² + x2².
struct Mop5;

impl VectorFunction for Mop5 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let r = x[0] * x[0] + x[1] * x[1];
        out[0] = 0.5 * r + r.sin();
        out[1] = (3.0 * x[0] - 2.0 * x[1] + 4.0).powi(2) / 8.0
            + (x[0] - x[1] + 1.0).powi(2) / 27.0
            + 15.0;
        out[2] = 1.0 / (r + 1.0) - 1.1 * (-r).exp();
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        let r = x[0] * x[0] + x[1] * x[1];
        let c1 = 2.0 * (0.5 + r.cos());
        jac.row_mut(0).copy_from_slice(&[c1 * x[0], c1 * x[1]]);
        let p = 3.0 * x[0] - 2.0 * x[1] + 4.0;
        let q = x[0] - x[1] + 1.0;
        jac.row_mut(1).copy_from_slice(&[
            6.0 * p / 8.0 + 2.0 * q / 27.0,
            -4.0 * p / 8.0 - 2.0 * q / 27.0,
        ]);
        let c3 = 2.0 * (-1.0 / (r + 1.0).powi(2) + 1.1 * (-r).exp());
        jac.row_mut(2).copy_from_slice(&[c3 * x[0], c3 * x[1]]);
    }
}

pub fn mop5() -> Result<Problem> {
    Problem::with_cube("MOP5", 2, 3, -1.0, 1.0, false, Arc::new(Mop5))
}

/// Viennet's convex quadratic triple:
/// f1 = (x1-2)²/2 + (x2+1)²/13 + 3,
/// f2 = (x1+x2-3)²/36 + (-x1+x2+2)²/8 - 17,
/// f3 = (x1+2x2-1)²/175 + (-x1+2x2)²/17 - 13.
struct Mop7;

impl VectorFunction for Mop7 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (x[0] - 2.0).powi(2) / 2.0 + (x[1] + 1.0).powi(2) / 13.0 + 3.0;
        out[1] = (x[0] + x[1] - 3.0).powi(2) / 36.0 + (-x[0] + x[1] + 2.0).powi(2) / 8.0 - 17.0;
        out[2] =
            (x[0] + 2.0 * x[1] - 1.0).powi(2) / 175.0 + (-x[0] + 2.0 * x[1]).powi(2) / 17.0 - 13.0;
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        jac.row_mut(0)
            .copy_from_slice(&[x[0] - 2.0, 2.0 * (x[1] + 1.0) / 13.0]);
        let a = (x[0] + x[1] - 3.0) / 18.0;
        let b = (-x[0] + x[1] + 2.0) / 4.0;
        jac.row_mut(1).copy_from_slice(&[a - b, a + b]);
        let c = 2.0 * (x[0] + 2.0 * x[1] - 1.0) / 175.0;
        let d = 2.0 * (-x[0] + 2.0 * x[1]) / 17.0;
        jac.row_mut(2).copy_from_slice(&[c - d, 2.0 * c + 2.0 * d]);
    }
}

pub fn mop7() -> Result<Problem> {
    Problem::with_cube("MOP7", 2, 3, -400.0, 400.0, true, Arc::new(Mop7))
}

/// f_j = (x_j - a_j)⁴ + Σ_{i≠j} (x_i - a_j)² for j = 1, 2 with a_1 = 1, a_2 = -1.
struct Slc2;

const SLC2_TARGETS: [f64; 2] = [1.0, -1.0];

impl VectorFunction for Slc2 {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (j, &a) in SLC2_TARGETS.iter().enumerate() {
            out[j] = x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i == j {
                        (v - a).powi(4)
                    } else {
                        (v - a).powi(2)
                    }
                })
                .sum();
        }
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        for (j, &a) in SLC2_TARGETS.iter().enumerate() {
            for (i, &v) in x.iter().enumerate() {
                jac.set(
                    j,
                    i,
                    if i == j {
                        4.0 * (v - a).powi(3)
                    } else {
                        2.0 * (v - a)
                    },
                );
            }
        }
    }
}

pub fn slc2(n: usize, lo: f64, hi: f64, name: &str) -> Result<Problem> {
    if n < 2 {
        return Err(Error::InvalidInput("SLC2 needs n >= 2".into()));
    }
    Problem::with_cube(name, n, 2, lo, hi, true, Arc::new(Slc2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_jacobian, sample_initial_point};

    #[test]
    fn table_metadata() {
        let expect: [(&str, usize, usize, bool, f64, f64); 19] = [
            ("EX1", 2, 2, false, -2.0, 2.0),
            ("AP3", 2, 2, false, -2.0, 2.0),
            ("Far1", 2, 2, false, -1.0, 1.0),
            ("FDS-1", 2, 3, true, -2.0, 2.0),
            ("FDS-2", 100, 3, true, -2.0, 2.0),
            ("FDS-3", 150, 3, true, -2.0, 2.0),
            ("Hil1", 2, 2, false, 0.0, 1.0),
            ("Lov3", 2, 2, false, -100.0, 100.0),
            ("Lov4", 2, 2, false, -100.0, 100.0),
            ("MGH16-1", 4, 50, false, -25.0, 25.0),
            ("MGH16-2", 4, 100, false, -25.0, 25.0),
            ("MGH26", 4, 4, false, -1.0, 1.0),
            ("MMR5-1", 1000, 2, false, -10.0, 10.0),
            ("MMR5-2", 200, 2, false, -100.0, 100.0),
            ("MOP5", 2, 3, false, -1.0, 1.0),
            ("MOP7", 2, 3, true, -400.0, 400.0),
            ("SLC2-1", 1000, 2, true, -10.0, 10.0),
            ("SLC2-2", 200, 2, true, -100.0, 100.0),
            ("SLC2-3", 1000, 2, true, -100.0, 100.0),
        ];
        for (name, n, m, convex, lo, hi) in expect {
            let p = get_problem(name, Variant::default()).unwrap();
            assert_eq!(
                (p.name(), p.n(), p.m(), p.is_convex()),
                (name, n, m, convex)
            );
            assert_eq!((p.bounds()[0].lo, p.bounds()[0].hi), (lo, hi), "{name}");
        }
        let mgh = get_problem("MGH16-1", Variant::default()).unwrap();
        let b: Vec<(f64, f64)> = mgh.bounds().iter().map(|b| (b.lo, b.hi)).collect();
        assert_eq!(
            b,
            vec![(-25.0, 25.0), (-5.0, 5.0), (-5.0, 5.0), (-1.0, 1.0)]
        );
    }

    #[test]
    fn family_variants() {
        let p = get_problem(
            "FDS",
            Variant {
                n: Some(100),
                m: None,
            },
        )
        .unwrap();
        assert_eq!((p.n(), p.m(), p.is_convex()), (100, 3, true));
        assert!(p.bounds().iter().all(|b| b.lo == -2.0 && b.hi == 2.0));
        let p = get_problem(
            "MGH16",
            Variant {
                n: None,
                m: Some(50),
            },
        )
        .unwrap();
        assert_eq!((p.n(), p.m()), (4, 50));
    }

    #[test]
    fn unknown_name() {
        match get_problem("UNKNOWN", Variant::default()) {
            Err(Error::UnknownProblem { valid, .. }) => assert!(valid.contains(&"EX1".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ex1_formula() {
        let p = ex1().unwrap();
        let f = p.objectives(&[1.5, 0.9]);
        assert!((f[0] - 0.5 * (2.25 + 0.9f64.sin())).abs() < 1e-15);
        assert!((f[1] - 0.5 * (0.25 - 0.01)).abs() < 1e-15);
    }

    #[test]
    fn jacobians_match_central_differences() {
        for p in all_problems() {
            let samples = if p.n() > 200 { 3 } else { 20 };
            let bad = check_jacobian(&p, samples, 11, 1e-5, 1e-7);
            assert!(
                bad.is_empty(),
                "{}: {:?}",
                p.name(),
                &bad[..bad.len().min(3)]
            );
        }
    }

    #[test]
    fn convex_entries_pass_midpoint_test() {
        for p in all_problems().into_iter().filter(|p| p.is_convex()) {
            for s in 0..200u64 {
                let x = sample_initial_point(&p, 2 * s);
                let y = sample_initial_point(&p, 2 * s + 1);
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let (fx, fy, fm) = (p.objectives(&x), p.objectives(&y), p.objectives(&mid));
                for i in 0..p.m() {
                    let avg = 0.5 * (fx[i] + fy[i]);
                    assert!(
                        fm[i] <= avg + 1e-9 * (1.0 + avg.abs()),
                        "{} objective {i}",
                        p.name()
                    );
                }
            }
        }
    }
}
