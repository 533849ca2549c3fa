//! Quadrature rules on the reference triangle and on the unit interval.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rule on the reference triangle `(0,0), (1,0), (0,1)`. Points are given in
/// the first two barycentric-free coordinates `(xi, eta)`; weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

/// Rule on `[0, 1]`; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

/// Triangle and interval rules used together by the assembly kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub triangle: TriangleRule<T>,
    pub interval: IntervalRule<T>,
}

impl<T: Scalar> Default for Quadrature<T> {
    fn default() -> Self {
        Quadrature {
            triangle: TriangleRule::degree4(),
            interval: IntervalRule::gauss_legendre(4).expect("4-point rule is tabulated"),
        }
    }
}

impl<T: Scalar> Quadrature<T> {
    pub fn with_interval_points(n: usize) -> Result<Self> {
        Ok(Quadrature {
            triangle: TriangleRule::degree4(),
            interval: IntervalRule::gauss_legendre(n)?,
        })
    }
}

impl<T: Scalar> TriangleRule<T> {
    /// Six-point symmetric rule, exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        let a = 0.445_948_490_915_964_886_32;
        let b = 0.091_576_213_509_770_743_46;
        let wa = 0.223_381_589_678_011_465_70 / 2.0;
        let wb = 0.109_951_743_655_321_867_64 / 2.0;
        let pts = [
            [a, a],
            [1.0 - 2.0 * a, a],
            [a, 1.0 - 2.0 * a],
            [b, b],
            [1.0 - 2.0 * b, b],
            [b, 1.0 - 2.0 * b],
        ];
        let ws = [wa, wa, wa, wb, wb, wb];
        TriangleRule {
            points: pts.iter().map(|p| [T::lit(p[0]), T::lit(p[1])]).collect(),
            weights: ws.iter().map(|&w| T::lit(w)).collect(),
        }
    }

    /// Edge-midpoint rule, exact for degree 2.
    pub fn degree2() -> Self {
        let w = T::lit(1.0 / 6.0);
        let h = T::lit(0.5);
        TriangleRule {
            points: vec![[h, T::zero()], [h, h], [T::zero(), h]],
            weights: vec![w; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates `(1 - xi - eta, xi, eta)` of each point.
    pub fn barycentric(&self) -> Vec<[T; 3]> {
        self.points
            .iter()
            .map(|p| [T::one() - p[0] - p[1], p[0], p[1]])
            .collect()
    }
}

impl<T: Scalar> IntervalRule<T> {
    /// Gauss-Legendre rule with `n` points mapped to `[0, 1]`, `1 <= n <= 5`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        let (x, w): (&[f64], &[f64]) = match n {
            1 => (&[0.0], &[2.0]),
            2 => (
                &[-0.577_350_269_189_625_764_5, 0.577_350_269_189_625_764_5],
                &[1.0, 1.0],
            ),
            3 => (
                &[-0.774_596_669_241_483_377, 0.0, 0.774_596_669_241_483_377],
                &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
            ),
            4 => (
                &[
                    -0.861_136_311_594_052_575_2,
                    -0.339_981_043_584_856_264_8,
                    0.339_981_043_584_856_264_8,
                    0.861_136_311_594_052_575_2,
                ],
                &[
                    0.347_854_845_137_453_857_4,
                    0.652_145_154_862_546_142_6,
                    0.652_145_154_862_546_142_6,
                    0.347_854_845_137_453_857_4,
                ],
            ),
            5 => (
                &[
                    -0.906_179_845_938_663_992_8,
                    -0.538_469_310_105_683_091_0,
                    0.0,
                    0.538_469_310_105_683_091_0,
                    0.906_179_845_938_663_992_8,
                ],
                &[
                    0.236_926_885_056_189_087_5,
                    0.478_628_670_499_366_468_0,
                    0.568_888_888_888_888_888_9,
                    0.478_628_670_499_366_468_0,
                    0.236_926_885_056_189_087_5,
                ],
            ),
            _ => {
                return Err(Error::Argument(format!(
                    "Gauss-Legendre rule with {n} points is not tabulated (1..=5)"
                )))
            }
        };
        Ok(IntervalRule {
            points: x.iter().map(|&xi| T::lit(0.5 * (1.0 + xi))).collect(),
            weights: w.iter().map(|&wi| T::lit(0.5 * wi)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // exact integral of xi^p eta^q over the reference triangle: p! q! / (p + q + 2)!
    fn monomial_exact(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn triangle_rule_exact_to_degree_four() {
        let rule = TriangleRule::<f64>::degree4();
        for p in 0..=4 {
            for q in 0..=(4 - p) {
                let approx: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
                    .sum();
                assert!((approx - monomial_exact(p, q)).abs() < 1e-14, "x^{p} y^{q}");
            }
        }
    }

    #[test]
    fn weights_positive_and_normalised() {
        let rule = TriangleRule::<f64>::degree4();
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        for n in 1..=5 {
            let r = IntervalRule::<f64>::gauss_legendre(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(IntervalRule::<f64>::gauss_legendre(6).is_err());
    }

    #[test]
    fn gauss_legendre_exact_to_degree_2n_minus_1() {
        for n in 1..=5usize {
            let r = IntervalRule::<f64>::gauss_legendre(n).unwrap();
            for k in 0..(2 * n) {
                let approx = r.integrate(|s| s.powi(k as i32));
                assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_precision_rules_build() {
        let q = Quadrature::<f32>::default();
        assert_eq!(q.triangle.len(), 6);
        assert!((q.interval.weights.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
