//! Lagrange P1/P2 shape functions on the reference triangle
//! `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}` and the isoparametric map.
//!
//! Local node order: the three vertices, then the midnodes of edges
//! 0–1, 1–2 and 2–0.

use crate::geometry::Point;

/// Degree-5 seven-point rule; weights sum to the reference area ½.
pub(crate) fn triangle_rule() -> &'static [(f64, f64, f64); 7] {
    static RULE: std::sync::OnceLock<[(f64, f64, f64); 7]> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        let s = 15f64.sqrt();
        let (a, b) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0);
        let (c, d) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0);
        let (wa, wc) = ((155.0 - s) / 2400.0, (155.0 + s) / 2400.0);
        [
            (1.0 / 3.0, 1.0 / 3.0, 9.0 / 80.0),
            (a, a, wa),
            (b, a, wa),
            (a, b, wa),
            (c, c, wc),
            (d, c, wc),
            (c, d, wc),
        ]
    })
}

/// Five-point Gauss–Legendre rule on `[0, 1]`.
pub(crate) fn line_rule() -> &'static [(f64, f64); 5] {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    static RULE: std::sync::OnceLock<[(f64, f64); 5]> = std::sync::OnceLock::new();
    RULE.get_or_init(|| std::array::from_fn(|i| (0.5 * (X[i] + 1.0), 0.5 * W[i])))
}

pub(crate) fn nodes_per_element(order: usize) -> usize {
    if order == 1 {
        3
    } else {
        6
    }
}

/// Shape values and reference gradients at `(ξ, η)`.
pub(crate) fn shape(order: usize, xi: f64, eta: f64) -> ([f64; 6], [[f64; 2]; 6]) {
    let l0 = 1.0 - xi - eta;
    if order == 1 {
        return (
            [l0, xi, eta, 0.0, 0.0, 0.0],
            [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0], [0.0; 2], [0.0; 2], [0.0; 2]],
        );
    }
    let n = [
        l0 * (2.0 * l0 - 1.0),
        xi * (2.0 * xi - 1.0),
        eta * (2.0 * eta - 1.0),
        4.0 * l0 * xi,
        4.0 * xi * eta,
        4.0 * eta * l0,
    ];
    let d0 = 1.0 - 4.0 * l0;
    let g = [
        [d0, d0],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l0 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l0 - eta)],
    ];
    (n, g)
}

/// Isoparametric evaluation at one reference point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Eval {
    pub n: [f64; 6],
    /// Physical gradients.
    pub grad: [[f64; 2]; 6],
    pub x: Point,
    pub det: f64,
}

pub(crate) fn eval(coords: &[Point], xi: f64, eta: f64) -> Eval {
    let order = if coords.len() == 3 { 1 } else { 2 };
    let (n, g) = shape(order, xi, eta);
    let mut x = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for (i, p) in coords.iter().enumerate() {
        x[0] += n[i] * p[0];
        x[1] += n[i] * p[1];
        j[0][0] += p[0] * g[i][0];
        j[0][1] += p[0] * g[i][1];
        j[1][0] += p[1] * g[i][0];
        j[1][1] += p[1] * g[i][1];
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let mut grad = [[0.0; 2]; 6];
    for i in 0..coords.len() {
        grad[i] = [
            g[i][0] * inv[0][0] + g[i][1] * inv[1][0],
            g[i][0] * inv[0][1] + g[i][1] * inv[1][1],
        ];
    }
    Eval { n, grad, x, det }
}

/// Quadratic (or linear) Lagrange basis on `[0, 1]` with nodes `0, ½, 1`
/// (or `0, 1`), returned in edge order `start, mid, end`.
pub(crate) fn line_shape(order: usize, s: f64) -> ([f64; 3], [f64; 3]) {
    if order == 1 {
        return ([1.0 - s, s, 0.0], [-1.0, 1.0, 0.0]);
    }
    (
        [(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)],
        [4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0],
    )
}

/// Reference coordinates of the local nodes.
pub(crate) const REFERENCE_NODES: [[f64; 2]; 6] =
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials() {
        let w: f64 = triangle_rule().iter().map(|q| q.2).sum();
        assert!((w - 0.5).abs() < 1e-15);
        // ∫ ξ^2 η^3 over the reference triangle = 2!3!/7! = 1/420
        let v: f64 = triangle_rule().iter().map(|q| q.0.powi(2) * q.1.powi(3) * q.2).sum();
        assert!((v - 1.0 / 420.0).abs() < 1e-15);
        let l: f64 = line_rule().iter().map(|q| q.0.powi(9) * q.1).sum();
        assert!((l - 0.1).abs() < 1e-14);
    }

    #[test]
    fn shape_functions_are_nodal_and_sum_to_one() {
        for order in [1, 2] {
            let nn = nodes_per_element(order);
            for (k, r) in REFERENCE_NODES.iter().take(nn).enumerate() {
                let (n, g) = shape(order, r[0], r[1]);
                for i in 0..nn {
                    assert!((n[i] - if i == k { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
                let gs = g.iter().take(nn).fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
                assert!(gs[0].abs() < 1e-14 && gs[1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn affine_map_gradients() {
        let c = [[1.0, 1.0], [3.0, 1.0], [1.0, 2.0]];
        let e = eval(&c, 0.2, 0.3);
        assert!((e.det - 2.0).abs() < 1e-15);
        assert!((e.x[0] - 1.4).abs() < 1e-15 && (e.x[1] - 1.3).abs() < 1e-15);
        assert!((e.grad[1][0] - 0.5).abs() < 1e-15 && e.grad[1][1].abs() < 1e-15);
    }
}
