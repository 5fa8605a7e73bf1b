//! Quadrature on simplices.
//!
//! Points are stored in barycentric coordinates `(λ_0, ..., λ_d)` on the
//! reference simplex with vertices `0, e_1, ..., e_d`, and weights are
//! normalized so that they sum to the reference measure (`1/2` in 2D,
//! `1/6` in 3D). Physical integrals scale by `|Δ| / |Δ_ref|`.
//!
//! [`gauss_rule`] builds collapsed-coordinate (conical product) Gauss–Jacobi
//! rules with positive weights. [`q1_rule`] and [`q2_rule`] are the lumping
//! rules used for the stress mass matrices: the vertex rule, and the vertex
//! plus centroid rule.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::mesh::Mesh;
use crate::tensor::Vec3;
use crate::{Error, Result};

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of the points (first `dim + 1` entries used).
    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Iterates `(barycentric point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> {
        self.points.iter().zip(self.weights.iter().cloned())
    }
}

/// Measure of the reference simplex.
pub fn reference_measure(dim: usize) -> f64 {
    if dim == 2 {
        0.5
    } else {
        1.0 / 6.0
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("quadrature in dimension {dim}")))
    }
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^alpha`.
fn gauss_jacobi_unit(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        let s = 2.0 * nf + alpha;
        jac[(n, n)] = if n == 0 {
            -alpha / (alpha + 2.0)
        } else {
            -(alpha * alpha) / (s * (s + 2.0))
        };
        if n + 1 < m {
            let k = nf + 1.0;
            let s = 2.0 * k + alpha;
            let b = 4.0 * k * (k + alpha) * k * (k + alpha) / (s * s * (s + 1.0) * (s - 1.0));
            jac[(n, n + 1)] = b.sqrt();
            jac[(n + 1, n)] = b.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((1.0 + x) / 2.0, mu0 * v0 * v0 / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Positive-weight rule exact for polynomials of total degree `degree`.
pub fn gauss_rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    check_dim(dim)?;
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let m = (degree + 2) / 2;
    let (ta, wa) = gauss_jacobi_unit(m, 0.0);
    let (tb, wb) = gauss_jacobi_unit(m, 1.0);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for (a, wa) in ta.iter().zip(&wa) {
            for (b, wb) in tb.iter().zip(&wb) {
                let x = a * (1.0 - b);
                let y = *b;
                points.push([1.0 - x - y, x, y, 0.0]);
                weights.push(wa * wb);
            }
        }
    } else {
        let (tc, wc) = gauss_jacobi_unit(m, 2.0);
        for (a, wa) in ta.iter().zip(&wa) {
            for (b, wb) in tb.iter().zip(&wb) {
                for (c, wc) in tc.iter().zip(&wc) {
                    let x = a * (1.0 - b) * (1.0 - c);
                    let y = b * (1.0 - c);
                    let z = *c;
                    points.push([1.0 - x - y - z, x, y, z]);
                    weights.push(wa * wb * wc);
                }
            }
        }
    }
    Ok(QuadratureRule { dim, points, weights, degree })
}

fn vertex_points(dim: usize) -> Vec<[f64; 4]> {
    (0..=dim)
        .map(|i| {
            let mut p = [0.0; 4];
            p[i] = 1.0;
            p
        })
        .collect()
}

/// Vertex rule: each vertex carries `|Δ| / (d + 1)`. Exact on P1.
pub fn q1_rule(dim: usize) -> Result<QuadratureRule> {
    check_dim(dim)?;
    let w = reference_measure(dim) / (dim + 1) as f64;
    Ok(QuadratureRule {
        dim,
        points: vertex_points(dim),
        weights: vec![w; dim + 1],
        degree: 1,
    })
}

/// Vertex plus centroid rule: vertex weights `|Δ| / ((d + 1)(d + 2))`,
/// centroid weight `(d + 1) |Δ| / (d + 2)`. Exact on P2.
pub fn q2_rule(dim: usize) -> Result<QuadratureRule> {
    check_dim(dim)?;
    let d = dim as f64;
    let r = reference_measure(dim);
    let mut points = vertex_points(dim);
    let mut weights = vec![r / ((d + 1.0) * (d + 2.0)); dim + 1];
    let mut center = [0.0; 4];
    for c in center.iter_mut().take(dim + 1) {
        *c = 1.0 / (d + 1.0);
    }
    points.push(center);
    weights.push((d + 1.0) / (d + 2.0) * r);
    Ok(QuadratureRule { dim, points, weights, degree: 2 })
}

/// `∫_Δ f` over cell `c`, evaluated with `rule` at the mapped points.
pub fn integrate(rule: &QuadratureRule, mesh: &Mesh, c: usize, f: impl Fn(Vec3) -> f64) -> f64 {
    let scale = mesh.measure(c) / reference_measure(rule.dim);
    rule.iter().map(|(p, w)| w * f(mesh.point(c, p))).sum::<f64>() * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// `∫_ref x^a y^b z^c` by the simplex monomial formula.
    fn monomial_integral(dim: usize, e: [usize; 3]) -> f64 {
        let s: usize = e.iter().sum();
        e.iter().map(|&k| factorial(k)).product::<f64>() / factorial(s + dim)
    }

    fn apply(rule: &QuadratureRule, e: [usize; 3]) -> f64 {
        rule.iter()
            .map(|(p, w)| w * p[1].powi(e[0] as i32) * p[2].powi(e[1] as i32) * p[3].powi(e[2] as i32))
            .sum()
    }

    #[test]
    fn gauss_rules_are_exact() {
        for dim in [2, 3] {
            for degree in 0..=MAX_DEGREE {
                let rule = gauss_rule(dim, degree).unwrap();
                assert!(rule.weights().iter().all(|&w| w > 0.0));
                let sum: f64 = rule.weights().iter().sum();
                assert!((sum - reference_measure(dim)).abs() < 1e-15);
                for a in 0..=degree {
                    for b in 0..=degree - a {
                        let cmax = if dim == 3 { degree - a - b } else { 0 };
                        for c in 0..=cmax {
                            let exact = monomial_integral(dim, [a, b, c]);
                            let got = apply(&rule, [a, b, c]);
                            assert!(
                                ((got - exact) / exact).abs() < 1e-13,
                                "dim {dim} degree {degree} monomial {a},{b},{c}"
                            );
                        }
                    }
                }
            }
        }
        assert!(matches!(gauss_rule(2, 7), Err(Error::UnsupportedDegree(7))));
    }

    #[test]
    fn centroid_rule() {
        let rule = gauss_rule(2, 1).unwrap();
        assert_eq!(rule.len(), 1);
        assert!((rule.weights()[0] - 0.5).abs() < 1e-16);
        assert!((apply(&gauss_rule(2, 2).unwrap(), [2, 0, 0]) - 1.0 / 12.0).abs() < 1e-15);
        let r3 = gauss_rule(3, 2).unwrap();
        let l1sq: f64 = r3.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((l1sq - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn lumping_rules() {
        let q1 = q1_rule(2).unwrap();
        assert_eq!(q1.weights(), &[1.0 / 6.0; 3]);
        assert!((apply(&q1, [1, 0, 0]) - 1.0 / 6.0).abs() < 1e-16);
        assert!((apply(&q1, [2, 0, 0]) - 1.0 / 6.0).abs() < 1e-16);

        let q2 = q2_rule(2).unwrap();
        assert!((q2.weights()[0] - 1.0 / 24.0).abs() < 1e-16);
        assert!((q2.weights()[3] - 3.0 / 8.0).abs() < 1e-16);
        assert!((apply(&q2, [2, 0, 0]) - 1.0 / 12.0).abs() < 1e-16);

        let q2 = q2_rule(3).unwrap();
        let l1sq: f64 = q2.iter().map(|(p, w)| w * p[1] * p[1]).sum();
        assert!((l1sq - 1.0 / 60.0).abs() < 1e-16);
        for e in [[1, 1, 0], [0, 1, 1], [2, 0, 0], [0, 0, 2]] {
            assert!((apply(&q2, e) - monomial_integral(3, e)).abs() < 1e-16);
        }
    }
}
