//! Quadrature on triangles (barycentric points, weights normalized to unit
//! area) and on edges (points in `[0, 1]`, weights summing to one).
#![allow(clippy::excessive_precision)]

use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

impl EdgeRule {
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn push_orbit3(rule: &mut QuadratureRule, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        rule.points.push(p);
        rule.weights.push(w);
    }
}

fn push_orbit6(rule: &mut QuadratureRule, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        rule.points.push(p);
        rule.weights.push(w);
    }
}

fn empty(exactness_degree: usize) -> QuadratureRule {
    QuadratureRule { points: Vec::new(), weights: Vec::new(), exactness_degree }
}

/// Smallest available rule integrating polynomials of total degree
/// `degree` exactly. Symmetric rules are used up to degree 8; beyond that a
/// collapsed (Duffy) Gauss product rule.
pub fn triangle_rule(degree: usize) -> QuadratureRule {
    match degree {
        0 | 1 => {
            let mut r = empty(1);
            r.points.push([1.0 / 3.0; 3]);
            r.weights.push(1.0);
            r
        }
        2 => {
            let mut r = empty(2);
            push_orbit3(&mut r, 1.0 / 6.0, 1.0 / 3.0);
            r
        }
        3..=6 => {
            let mut r = empty(6);
            push_orbit3(&mut r, 0.249_286_745_170_910_421_291_638_553_107, 0.116_786_275_726_379_366_030_690_038_675);
            push_orbit3(&mut r, 0.063_089_014_491_502_228_340_331_602_870, 0.050_844_906_370_206_816_920_936_809_106);
            push_orbit6(
                &mut r,
                0.053_145_049_844_816_947_353_249_671_631,
                0.310_352_451_033_784_405_416_607_733_956,
                0.082_851_075_618_373_575_193_553_456_421,
            );
            r
        }
        7 | 8 => {
            let mut r = empty(8);
            r.points.push([1.0 / 3.0; 3]);
            r.weights.push(0.144_315_607_677_787_168_251_091_110_481);
            push_orbit3(&mut r, 0.459_292_588_292_723_156_028_815_514_494, 0.095_091_634_267_284_624_793_896_104_388);
            push_orbit3(&mut r, 0.170_569_307_751_760_206_622_293_501_491, 0.103_217_370_534_718_250_281_791_550_292);
            push_orbit3(&mut r, 0.050_547_228_317_030_975_458_423_550_597, 0.032_458_497_623_198_080_310_925_928_341);
            push_orbit6(
                &mut r,
                0.008_394_777_409_957_605_337_213_834_539,
                0.263_112_829_634_638_113_421_785_786_284,
                0.027_230_314_174_434_994_264_844_690_073,
            );
            r
        }
        _ => collapsed_gauss(degree),
    }
}

/// Conical product of Gauss-Legendre rules mapped to the triangle. Exact to
/// `degree` with `ceil((degree + 2) / 2)` points per direction.
pub fn collapsed_gauss(degree: usize) -> QuadratureRule {
    let n = (degree + 2).div_ceil(2);
    let g = gauss_legendre(n);
    let mut r = empty(degree);
    for (xi, wi) in g.iter() {
        for (eta, wj) in g.iter() {
            // (xi, eta) in the unit square -> (x, y) = (xi, (1 - xi) eta)
            let x = xi;
            let y = (1.0 - xi) * eta;
            r.points.push([1.0 - x - y, x, y]);
            r.weights.push(2.0 * wi * wj * (1.0 - xi));
        }
    }
    r
}

/// `n`-point Gauss-Legendre rule on `[0, 1]` (exact to degree `2n - 1`).
pub fn gauss_legendre(n: usize) -> EdgeRule {
    assert!(n > 0);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    EdgeRule { points, weights, exactness_degree: 2 * n - 1 }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Gauss rule on an edge exact to `degree`.
pub fn edge_rule(degree: usize) -> EdgeRule {
    gauss_legendre(degree / 2 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // integral of x^a y^b over the reference triangle (0,0),(1,0),(0,1):
    // a! b! / (a + b + 2)!
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact() {
        for degree in 0..=14 {
            let rule = triangle_rule(degree);
            assert!(rule.exactness_degree >= degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=rule.exactness_degree as u32 {
                for b in 0..=(rule.exactness_degree as u32 - a) {
                    let q: f64 =
                        rule.iter().map(|(p, w)| 0.5 * w * libm::pow(p[1], a as f64) * libm::pow(p[2], b as f64)).sum();
                    let exact = monomial_integral(a, b);
                    assert!(((q - exact) / exact).abs() < 1e-13, "deg {degree} x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_is_exact() {
        for n in 1..=8 {
            let r = gauss_legendre(n);
            for d in 0..=(2 * n - 1) {
                let q: f64 = r.iter().map(|(x, w)| w * libm::pow(x, d as f64)).sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(((q - exact) / exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }
}
