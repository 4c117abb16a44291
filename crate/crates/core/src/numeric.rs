//! Small numerical building blocks: compensated summation, Gauss–Legendre
//! rules, low-discrepancy point sets and least-squares line fits.

use std::f64::consts::PI;

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums a slice in index order with compensation.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut k = KahanSum::new();
    for &x in xs {
        k.add(x);
    }
    k.value()
}

/// Gauss–Legendre rule on `[-1, 1]` with `m` nodes, returned as `(nodes, weights)`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "a quadrature rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, m: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in the given base (van der Corput sequence).
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// The `i`-th point of the Halton sequence in `[0,1)^dim`, with a
/// Cranley–Patterson shift applied per coordinate.
pub fn halton(i: u64, dim: usize, shift: &[f64]) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let s = shift.get(d).copied().unwrap_or(0.0);
            (radical_inverse(i + 1, PRIMES[d]) + s).fract()
        })
        .collect()
}

/// Area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("dimension {n} is not supported"),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Equal-weight low-discrepancy directions on `S^{n-1}` for `n = 2, 3`.
///
/// Circle nodes are equispaced with a rotation `shift` in `[0,1)`; sphere
/// nodes follow the spherical Fibonacci lattice rotated by `shift` turns.
pub fn sphere_directions(n: usize, count: usize, shift: f64) -> Vec<[f64; 3]> {
    match n {
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + shift) / count as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let ph = 2.0 * PI * ((k as f64 / golden) + shift).fract();
                    [r * ph.cos(), r * ph.sin(), z]
                })
                .collect()
        }
        _ => panic!("angular nodes are available for n = 2, 3 only"),
    }
}

/// Maps a point of `[0,1)^n` to the unit ball of `R^n`, uniformly in volume.
pub fn cube_to_ball(u: &[f64], n: usize) -> [f64; 3] {
    match n {
        2 => {
            let r = u[0].sqrt();
            let th = 2.0 * PI * u[1];
            [r * th.cos(), r * th.sin(), 0.0]
        }
        3 => {
            let r = u[0].cbrt();
            let z = 1.0 - 2.0 * u[1];
            let s = (1.0 - z * z).max(0.0).sqrt();
            let ph = 2.0 * PI * u[2];
            [r * s * ph.cos(), r * s * ph.sin(), r * z]
        }
        _ => panic!("ball sampling is available for n = 2, 3 only"),
    }
}

/// Ordinary least-squares fit `y = a + b x`; returns `(a, b)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Half-width of a 95% normal-approximation confidence interval for a
/// proportion estimated from `n` samples.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    1.96 * (p * (1.0 - p) / n as f64).sqrt() + 1.0 / n as f64
}
