//! Reference elements on the unit simplex with vertices `0, e_1, ..., e_d`.
//!
//! H(div) bases are written in terms of barycentric coordinates:
//!
//! * BDM1, local DOF `k * d + j`: facet `k` (opposite vertex `k`) and the
//!   `j`-th vertex `v != k` of that facet. The basis function is
//!   `λ_v (x_v - x_k) / (d |Δ|)`. Its normal trace on facet `k` is
//!   `λ_v / |F_k|`, it has zero normal trace on the other facets and it
//!   vanishes at every vertex except `x_v`.
//! * RT1 adds `d` interior functions spanned by the bubbles
//!   `λ_i (x - x_i)`, which have zero normal trace on every facet and vanish
//!   at all vertices. The interior functions are normalized to take the
//!   values `e_j` at the centroid, and the facet functions are the BDM1
//!   ones minus their centroid value, so the whole basis splits into
//!   functions living on vertices and functions living on the centroid.

use crate::quadrature::{reference_measure, QuadratureRule};
use crate::tensor::{Vec3, ZERO3};

/// Largest local dimension of any supported element (RT1 in 3D).
pub const MAX_LOCAL: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Piecewise constants.
    P0,
    /// Discontinuous piecewise linears.
    P1dc,
    /// Continuous piecewise linears.
    L1,
    /// Brezzi–Douglas–Marini, degree 1.
    Bdm1,
    /// Raviart–Thomas, `RT_0 ⊂ RT_1`, normal traces of degree 1.
    Rt1,
}

impl Family {
    pub fn is_hdiv(self) -> bool {
        matches!(self, Family::Bdm1 | Family::Rt1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::P0 => "P0",
            Family::P1dc => "P1",
            Family::L1 => "L1",
            Family::Bdm1 => "BDM1",
            Family::Rt1 => "RT1",
        }
    }
}

/// Where a local DOF lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofAnchor {
    Cell,
    /// Local vertex index.
    Vertex(usize),
    /// Local facet index and local vertex index of the facet node.
    FacetNode { facet: usize, vertex: usize },
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    family: Family,
    dim: usize,
    /// RT1: `b_j = Σ_i interior[i][j] λ_i (x - x_{i+1})`, `i, j < d`.
    interior: [[f64; 3]; 3],
}

/// Values of all local basis functions at one point. Scalar families store
/// their value in component 0 and have no divergence.
#[derive(Debug, Clone, Copy)]
pub struct BasisValues {
    pub values: [Vec3; MAX_LOCAL],
    pub divs: [f64; MAX_LOCAL],
}

impl Default for BasisValues {
    fn default() -> Self {
        BasisValues {
            values: [ZERO3; MAX_LOCAL],
            divs: [0.0; MAX_LOCAL],
        }
    }
}

fn vertex(k: usize) -> Vec3 {
    let mut x = ZERO3;
    if k > 0 {
        x[k - 1] = 1.0;
    }
    x
}

/// The local vertices of facet `k`, ascending.
pub fn facet_vertices(dim: usize, k: usize) -> impl Iterator<Item = usize> {
    (0..=dim).filter(move |&v| v != k)
}

impl ReferenceElement {
    pub fn new(family: Family, dim: usize) -> Self {
        let mut el = ReferenceElement {
            family,
            dim,
            interior: [[0.0; 3]; 3],
        };
        if family == Family::Rt1 {
            // Bubble i (1-based vertex) at the centroid: (x_c - x_i) / (d + 1).
            let d = dim;
            let w = 1.0 / (d + 1) as f64;
            let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
            for i in 0..d {
                let xi = vertex(i + 1);
                for r in 0..d {
                    m[(r, i)] = w * (w - xi[r]);
                }
            }
            let inv = m.try_inverse().expect("centroid bubble values are independent");
            for i in 0..d {
                for j in 0..d {
                    el.interior[i][j] = inv[(i, j)];
                }
            }
        }
        el
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        let d = self.dim;
        match self.family {
            Family::P0 => 1,
            Family::P1dc | Family::L1 => d + 1,
            Family::Bdm1 => d * (d + 1),
            Family::Rt1 => d * (d + 1) + d,
        }
    }

    /// Number of facet-attached DOFs per facet (H(div) families).
    pub fn dofs_per_facet(&self) -> usize {
        if self.family.is_hdiv() {
            self.dim
        } else {
            0
        }
    }

    pub fn anchor(&self, i: usize) -> DofAnchor {
        let d = self.dim;
        match self.family {
            Family::P0 => DofAnchor::Cell,
            Family::P1dc | Family::L1 => DofAnchor::Vertex(i),
            Family::Bdm1 | Family::Rt1 => {
                if i >= d * (d + 1) {
                    DofAnchor::Cell
                } else {
                    let k = i / d;
                    let vertex = facet_vertices(d, k).nth(i % d).unwrap();
                    DofAnchor::FacetNode { facet: k, vertex }
                }
            }
        }
    }

    /// Reference values (and divergences for H(div)) at barycentric `bary`.
    pub fn eval(&self, bary: &[f64; 4]) -> BasisValues {
        let mut out = BasisValues::default();
        let d = self.dim;
        match self.family {
            Family::P0 => out.values[0][0] = 1.0,
            Family::P1dc | Family::L1 => {
                for i in 0..=d {
                    out.values[i][0] = bary[i];
                }
            }
            Family::Bdm1 | Family::Rt1 => {
                let scale = 1.0 / (d as f64 * reference_measure(d));
                for k in 0..=d {
                    let xk = vertex(k);
                    for (j, v) in facet_vertices(d, k).enumerate() {
                        let xv = vertex(v);
                        let i = k * d + j;
                        for r in 0..d {
                            out.values[i][r] = bary[v] * (xv[r] - xk[r]) * scale;
                        }
                        out.divs[i] = scale;
                    }
                }
                if self.family == Family::Rt1 {
                    self.add_interior(bary, &mut out);
                }
            }
        }
        out
    }

    fn add_interior(&self, bary: &[f64; 4], out: &mut BasisValues) {
        let d = self.dim;
        let nf = d * (d + 1);
        let x = [bary[1], bary[2], bary[3]];
        // Interior functions b_j.
        for j in 0..d {
            let mut val = ZERO3;
            let mut div = 0.0;
            for i in 0..d {
                let c = self.interior[i][j];
                let lam = bary[i + 1];
                let xi = vertex(i + 1);
                for r in 0..d {
                    val[r] += c * lam * (x[r] - xi[r]);
                }
                div += c * ((d + 1) as f64 * lam - 1.0);
            }
            out.values[nf + j] = val;
            out.divs[nf + j] = div;
        }
        // Facet functions minus their centroid value: BDM1 function k,v at the
        // centroid is (x_v - x_k) / ((d + 1) d |Δ|).
        let scale = 1.0 / ((d + 1) as f64 * d as f64 * reference_measure(d));
        for k in 0..=d {
            let xk = vertex(k);
            for (jj, v) in facet_vertices(d, k).enumerate() {
                let xv = vertex(v);
                let i = k * d + jj;
                for j in 0..d {
                    let cj = (xv[j] - xk[j]) * scale;
                    if cj != 0.0 {
                        let bj = out.values[nf + j];
                        for r in 0..d {
                            out.values[i][r] -= cj * bj[r];
                        }
                        out.divs[i] -= cj * out.divs[nf + j];
                    }
                }
            }
        }
    }

    /// Reference values at every point of `rule`.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Vec<BasisValues> {
        rule.points().iter().map(|p| self.eval(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bary_of(x: &Vec3, d: usize) -> [f64; 4] {
        let mut b = [0.0; 4];
        b[0] = 1.0 - x[..d].iter().sum::<f64>();
        b[1..=d].copy_from_slice(&x[..d]);
        b
    }

    fn outward_normal(d: usize, k: usize) -> Vec3 {
        if k == 0 {
            let s = 1.0 / (d as f64).sqrt();
            let mut n = ZERO3;
            n[..d].iter_mut().for_each(|c| *c = s);
            n
        } else {
            let mut n = ZERO3;
            n[k - 1] = -1.0;
            n
        }
    }

    fn facet_measure(d: usize, k: usize) -> f64 {
        match (d, k) {
            (2, 0) => 2f64.sqrt(),
            (2, _) => 1.0,
            (3, 0) => 3f64.sqrt() / 2.0,
            _ => 0.5,
        }
    }

    /// Applies the DOF functionals to every basis function and checks the
    /// Kronecker property.
    #[test]
    fn hdiv_bases_are_dual_to_their_dofs() {
        for family in [Family::Bdm1, Family::Rt1] {
            for d in [2, 3] {
                let el = ReferenceElement::new(family, d);
                let n = el.local_dim();
                let mut centroid = [0.0; 4];
                centroid[..=d].iter_mut().for_each(|c| *c = 1.0 / (d + 1) as f64);
                let at_c = el.eval(&centroid);
                for dof in 0..n {
                    for basis in 0..n {
                        let got = match el.anchor(dof) {
                            DofAnchor::FacetNode { facet, vertex: v } => {
                                let vals = el.eval(&bary_of(&super::vertex(v), d));
                                crate::tensor::dot(&vals.values[basis], &outward_normal(d, facet))
                                    * facet_measure(d, facet)
                            }
                            DofAnchor::Cell => at_c.values[basis][dof - d * (d + 1)],
                            DofAnchor::Vertex(_) => unreachable!(),
                        };
                        let expected = if dof == basis { 1.0 } else { 0.0 };
                        assert!(
                            (got - expected).abs() < 1e-12,
                            "{family:?} d={d} dof {dof} basis {basis}: {got}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn local_dimensions() {
        let dims: Vec<usize> = [2, 3]
            .iter()
            .flat_map(|&d| {
                [Family::P0, Family::P1dc, Family::L1, Family::Bdm1, Family::Rt1]
                    .map(|f| ReferenceElement::new(f, d).local_dim())
            })
            .collect();
        assert_eq!(dims, vec![1, 3, 3, 6, 8, 1, 4, 4, 12, 15]);
    }

    /// Central differences of the basis values reproduce the closed-form
    /// divergence.
    #[test]
    fn divergence_matches_finite_differences() {
        for family in [Family::Bdm1, Family::Rt1] {
            for d in [2, 3] {
                let el = ReferenceElement::new(family, d);
                let x = [0.21, 0.17, 0.31];
                let h = 1e-5;
                let base = el.eval(&bary_of(&x, d));
                for i in 0..el.local_dim() {
                    let mut div = 0.0;
                    for r in 0..d {
                        let (mut xp, mut xm) = (x, x);
                        xp[r] += h;
                        xm[r] -= h;
                        let vp = el.eval(&bary_of(&xp, d)).values[i][r];
                        let vm = el.eval(&bary_of(&xm, d)).values[i][r];
                        div += (vp - vm) / (2.0 * h);
                    }
                    assert!((div - base.divs[i]).abs() < 1e-8, "{family:?} {d} {i}");
                }
            }
        }
    }

    #[test]
    fn vertex_locality() {
        for family in [Family::Bdm1, Family::Rt1] {
            for d in [2, 3] {
                let el = ReferenceElement::new(family, d);
                for w in 0..=d {
                    let vals = el.eval(&bary_of(&super::vertex(w), d));
                    for i in 0..el.local_dim() {
                        let attached = matches!(el.anchor(i), DofAnchor::FacetNode { vertex, .. } if vertex == w);
                        if !attached {
                            assert!(crate::tensor::norm(&vals.values[i]) < 1e-13);
                        }
                    }
                }
            }
        }
    }
}
