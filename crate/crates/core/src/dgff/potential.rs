//! The potential kernel `a(x)` of planar simple random walk.
//!
//! `a` is the unique function with `a(0) = 0`, `Σ_{y∼x} a(y) − 4a(x) = 4·1{x=0}`
//! and logarithmic growth. Exact values come from the one-dimensional
//! integral representation
//!
//! ```text
//! a(x) = (2/π) ∫_0^π (1 − cos(x₁θ) e^{−|x₂| t(θ)}) / sinh t(θ) dθ,   cosh t = 2 − cos θ,
//! ```
//!
//! evaluated with composite Gauss–Legendre quadrature.

use std::f64::consts::PI;

use crate::lattice::Vertex;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(2γ̄ + log 8)/π`.
pub fn kernel_constant() -> f64 {
    (2.0 * EULER_GAMMA + 8f64.ln()) / PI
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[order - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Exact `a(x)` by quadrature. Accurate to roughly 1e-14 for `|x|_∞ ≤ 10³`.
pub fn potential_kernel_exact(x: Vertex) -> f64 {
    let (x1, x2) = (x.x.unsigned_abs() as f64, x.y.unsigned_abs() as f64);
    if x1 == 0.0 && x2 == 0.0 {
        return 0.0;
    }
    const ORDER: usize = 24;
    let (nodes, weights) = gauss_legendre(ORDER);
    let panels = (8.0 + 2.0 * (x1 + x2)).ceil() as usize;
    let h = PI / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = p as f64 * h;
        for (u, w) in nodes.iter().zip(&weights) {
            let th = lo + 0.5 * h * (u + 1.0);
            let half = (0.5 * th).sin();
            let one_minus_cos = 2.0 * half * half;
            let sinh_t = (one_minus_cos * (2.0 + one_minus_cos)).sqrt();
            let t = (one_minus_cos + sinh_t).ln_1p();
            let c = (x1 * th).cos();
            let s = (0.5 * x1 * th).sin();
            // 1 − c·e^{−x₂t} = (1 − c) − c·expm1(−x₂t)
            let numer = 2.0 * s * s - c * (-x2 * t).exp_m1();
            total += w * 0.5 * h * numer / sinh_t;
        }
    }
    2.0 * total / PI
}

/// Tabulated potential kernel with an asymptotic tail.
#[derive(Clone, Debug)]
pub struct PotentialKernel {
    radius: i64,
    /// `table[i*(radius+1)+j] = a((i, j))` for `0 ≤ j ≤ i ≤ radius`.
    table: Vec<f64>,
}

impl PotentialKernel {
    /// Tabulates `a(x)` for `|x|_∞ ≤ radius`.
    pub fn new(radius: usize) -> Self {
        let r = radius as i64;
        let w = radius + 1;
        let mut table = vec![0.0; w * w];
        for i in 0..=r {
            for j in 0..=i {
                let v = potential_kernel_exact(Vertex::new(i, j));
                table[i as usize * w + j as usize] = v;
                table[j as usize * w + i as usize] = v;
            }
        }
        Self { radius: r, table }
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// `a(x)`: tabulated inside the cache radius, asymptotic beyond it.
    pub fn value(&self, x: Vertex) -> f64 {
        let (i, j) = (x.x.abs(), x.y.abs());
        if i.max(j) <= self.radius {
            self.table[i as usize * (self.radius as usize + 1) + j as usize]
        } else {
            asymptotic(x)
        }
    }

    /// Smallest `C` with `|a(x) − asymptotic(x)| ≤ C |x|_∞^{-2}` over the
    /// tabulated points with `|x|_∞ ≥ min_linf`.
    pub fn fitted_tail_constant(&self, min_linf: i64) -> f64 {
        self.tail_constant_with(min_linf, asymptotic)
    }

    /// Same fit against the sup-norm form `(2/π) log|x|_∞ + const`.
    pub fn fitted_tail_constant_linf(&self, min_linf: i64) -> f64 {
        self.tail_constant_with(min_linf, asymptotic_linf)
    }

    fn tail_constant_with(&self, min_linf: i64, form: fn(Vertex) -> f64) -> f64 {
        let mut worst = 0.0f64;
        for i in min_linf.max(1)..=self.radius {
            for j in 0..=i {
                let x = Vertex::new(i, j);
                let r = i as f64;
                worst = worst.max((self.value(x) - form(x)).abs() * r * r);
            }
        }
        worst
    }
}

/// `(2/π) log‖x‖ + (2γ̄ + log 8)/π − cos(4φ)/(6π‖x‖²)`, the Euclidean expansion.
pub fn asymptotic(x: Vertex) -> f64 {
    let (a, b) = (x.x as f64, x.y as f64);
    let r2 = a * a + b * b;
    if r2 == 0.0 {
        return 0.0;
    }
    // cos 4φ = (a⁴ − 6a²b² + b⁴)/r⁴
    let cos4 = (a.powi(4) - 6.0 * a * a * b * b + b.powi(4)) / (r2 * r2);
    (1.0 / PI) * r2.ln() + kernel_constant() - cos4 / (6.0 * PI * r2)
}

/// `(2/π) log|x|_∞ + (2γ̄ + log 8)/π`.
pub fn asymptotic_linf(x: Vertex) -> f64 {
    let r = x.x.abs().max(x.y.abs()) as f64;
    if r == 0.0 {
        return 0.0;
    }
    (2.0 / PI) * r.ln() + kernel_constant()
}
