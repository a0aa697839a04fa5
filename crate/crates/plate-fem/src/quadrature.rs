//! Triangle quadrature.
//!
//! One rule is used everywhere: the 6-point degree-4 rule, the smallest rule
//! exact for products of P2 gradients and for P2×P2 mass terms.

/// Quadrature points in barycentric coordinates with reference-triangle
/// weights (the weights sum to 1/2, the area of the reference triangle).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// The 6-point rule of exactness degree 4 (two symmetric orbits).
    pub fn degree4() -> Self {
        const W1: f64 = 0.223_381_589_678_011;
        const A1: f64 = 0.445_948_490_915_965;
        const W2: f64 = 0.109_951_743_655_322;
        const A2: f64 = 0.091_576_213_509_771;
        let orbit = |a: f64| {
            let b = 1.0 - 2.0 * a;
            [[b, a, a], [a, b, a], [a, a, b]]
        };
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for p in orbit(A1) {
            points.push(p);
            weights.push(0.5 * W1);
        }
        for p in orbit(A2) {
            points.push(p);
            weights.push(0.5 * W2);
        }
        QuadratureRule { points, weights }
    }

    /// Integrate `f(barycentric)` over a physical triangle of the given area.
    pub fn integrate(&self, area: f64, mut f: impl FnMut(&[f64; 3]) -> f64) -> f64 {
        2.0 * area
            * self
                .points
                .iter()
                .zip(&self.weights)
                .map(|(p, &w)| w * f(p))
                .sum::<f64>()
    }
}
