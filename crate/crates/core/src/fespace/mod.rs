//! Finite element spaces: DOF tables, Piola maps, evaluation, interpolation
//! and L2 projection.
//!
//! A space is one scalar (or vector, for H(div)) family replicated
//! `components` times. Component `k` of a tensor field is its `k`-th row,
//! and global DOF `k * scalar_dim + i` is DOF `i` of component `k`.
//!
//! Field values are exchanged as [`Mat3`] with one row per component;
//! scalar families use the first column only.
//!
//! Global numbering:
//!
//! * P0: one DOF per cell; P1dc: `cell * (d + 1) + local vertex`; L1: vertex index.
//! * BDM1: `facet * d + position of the vertex in the sorted facet`.
//! * RT1: the BDM1 facet DOFs, then `n_facets * d + cell * d + j`.
//!
//! Facet DOF signs follow the global facet orientation of the mesh, so the
//! coefficient of a facet DOF is the flux through the facet in the
//! direction of the global normal.

mod reference;

pub use reference::{facet_vertices, BasisValues, DofAnchor, Family, ReferenceElement, MAX_LOCAL};

use std::sync::Arc;

use crate::mesh::Mesh;
use crate::quadrature::{gauss_rule, QuadratureRule};
use crate::solve::krylov;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tensor::{self, Mat3, Vec3, ZERO3, ZERO33};
use crate::{Error, Result};

/// Affine geometry of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub jac: Mat3,
    pub det: f64,
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, c: usize) -> Self {
        let jac = mesh.jacobian(c);
        let det = tensor::det(&jac, mesh.dim());
        CellGeometry { jac, det }
    }
}

/// Value of a (replicated) field at a point: one row per component and the
/// row-wise divergence (H(div) families only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: Mat3,
    pub div: Vec3,
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    element: ReferenceElement,
    components: usize,
    scalar_dim: usize,
    local_dim: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    dof_vertex: Vec<Option<usize>>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, family: Family, components: usize) -> Result<Self> {
        if components == 0 || components > 3 {
            return Err(Error::Unsupported(format!("{components} field components")));
        }
        let d = mesh.dim();
        let element = ReferenceElement::new(family, d);
        let local_dim = element.local_dim();
        let nc = mesh.num_cells();
        let nf = mesh.num_facets();
        let scalar_dim = match family {
            Family::P0 => nc,
            Family::P1dc => nc * (d + 1),
            Family::L1 => mesh.num_vertices(),
            Family::Bdm1 => nf * d,
            Family::Rt1 => nf * d + nc * d,
        };
        let mut dofs = Vec::with_capacity(nc * local_dim);
        let mut signs = Vec::with_capacity(nc * local_dim);
        let mut dof_vertex = vec![None; if family.is_hdiv() { scalar_dim } else { 0 }];
        for c in 0..nc {
            let cell = mesh.cell(c);
            for i in 0..local_dim {
                let (dof, sign) = match (family, element.anchor(i)) {
                    (Family::P0, _) => (c, 1.0),
                    (Family::P1dc, DofAnchor::Vertex(v)) => (c * (d + 1) + v, 1.0),
                    (Family::L1, DofAnchor::Vertex(v)) => (cell[v], 1.0),
                    (_, DofAnchor::FacetNode { facet, vertex }) => {
                        let f = mesh.cell_facet(c, facet);
                        let g = cell[vertex];
                        let p = mesh.facet(f).iter().position(|&w| w == g).unwrap();
                        dof_vertex[f * d + p] = Some(g);
                        (f * d + p, mesh.cell_facet_sign(c, facet))
                    }
                    (Family::Rt1, DofAnchor::Cell) => (nf * d + c * d + (i - d * (d + 1)), 1.0),
                    _ => unreachable!("anchor does not match family"),
                };
                dofs.push(dof);
                signs.push(sign);
            }
        }
        Ok(FeSpace {
            mesh,
            element,
            components,
            scalar_dim,
            local_dim,
            dofs,
            signs,
            dof_vertex,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn family(&self) -> Family {
        self.element.family()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// DOFs of a single component.
    pub fn scalar_dim(&self) -> usize {
        self.scalar_dim
    }

    /// Total number of DOFs over all components.
    pub fn dim(&self) -> usize {
        self.scalar_dim * self.components
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Polynomial degree of the basis functions.
    pub fn degree(&self) -> usize {
        match self.family() {
            Family::P0 => 0,
            Family::P1dc | Family::L1 | Family::Bdm1 => 1,
            Family::Rt1 => 2,
        }
    }

    /// Single-component global DOFs of cell `c`, in local order.
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.dofs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    pub fn cell_signs(&self, c: usize) -> &[f64] {
        &self.signs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    pub fn global(&self, component: usize, dof: usize) -> usize {
        component * self.scalar_dim + dof
    }

    /// For H(div) facet DOFs, the mesh vertex the DOF is attached to.
    pub fn dof_vertex(&self, dof: usize) -> Option<usize> {
        self.dof_vertex.get(dof).copied().flatten()
    }

    /// Maps reference basis values to cell `c` (Piola transform and DOF
    /// signs for H(div) families).
    pub fn physical(&self, c: usize, geo: &CellGeometry, r: &BasisValues) -> BasisValues {
        if !self.family().is_hdiv() {
            return *r;
        }
        let mut out = BasisValues::default();
        let signs = self.cell_signs(c);
        for i in 0..self.local_dim {
            let s = signs[i] / geo.det;
            let v = tensor::mat_vec(&geo.jac, &r.values[i]);
            out.values[i] = tensor::scale(&v, s);
            out.divs[i] = r.divs[i] * s;
        }
        out
    }

    fn check_coefficients(&self, coefs: &[f64]) -> Result<()> {
        if coefs.len() != self.dim() {
            return Err(Error::CoefficientLength {
                expected: self.dim(),
                found: coefs.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the field with coefficients `coefs` at barycentric point
    /// `bary` of cell `c`.
    pub fn eval(&self, coefs: &[f64], c: usize, bary: &[f64; 4]) -> Result<FieldValue> {
        self.check_coefficients(coefs)?;
        if c >= self.mesh.num_cells() {
            return Err(Error::CellOutOfRange(c));
        }
        let geo = CellGeometry::new(&self.mesh, c);
        let phys = self.physical(c, &geo, &self.element.eval(bary));
        Ok(self.combine(coefs, c, &phys))
    }

    /// Linear combination of physical basis values at one point.
    pub fn combine(&self, coefs: &[f64], c: usize, phys: &BasisValues) -> FieldValue {
        let mut value = ZERO33;
        let mut div = ZERO3;
        let dofs = self.cell_dofs(c);
        for k in 0..self.components {
            for i in 0..self.local_dim {
                let a = coefs[self.global(k, dofs[i])];
                if a != 0.0 {
                    for r in 0..3 {
                        value[k][r] += a * phys.values[i][r];
                    }
                    div[k] += a * phys.divs[i];
                }
            }
        }
        FieldValue { value, div }
    }

    /// Canonical interpolant: point values for scalar families (the
    /// centroid for P0), facet-node fluxes and centroid values for H(div).
    pub fn interpolate(&self, target: impl Fn(Vec3) -> Mat3) -> Vec<f64> {
        let mesh = &self.mesh;
        let d = mesh.dim();
        let mut out = vec![0.0; self.dim()];
        for c in 0..mesh.num_cells() {
            let dofs = self.cell_dofs(c);
            let cell = mesh.cell(c);
            match self.family() {
                Family::P0 => {
                    let t = target(mesh.centroid(c));
                    for k in 0..self.components {
                        out[self.global(k, dofs[0])] = t[k][0];
                    }
                }
                Family::P1dc | Family::L1 => {
                    for (i, &v) in cell.iter().enumerate() {
                        let t = target(mesh.coords()[v]);
                        for k in 0..self.components {
                            out[self.global(k, dofs[i])] = t[k][0];
                        }
                    }
                }
                Family::Bdm1 | Family::Rt1 => {
                    let signs = self.cell_signs(c);
                    for i in 0..self.local_dim {
                        match self.element.anchor(i) {
                            DofAnchor::FacetNode { facet, vertex } => {
                                let f = mesh.cell_facet(c, facet);
                                let n = tensor::scale(&mesh.outward_normal(c, facet), signs[i]);
                                let t = target(mesh.coords()[cell[vertex]]);
                                let area = mesh.facet_measure(f);
                                for k in 0..self.components {
                                    out[self.global(k, dofs[i])] = tensor::dot(&t[k], &n) * area;
                                }
                            }
                            DofAnchor::Cell => {
                                let j = i - d * (d + 1);
                                let geo = CellGeometry::new(mesh, c);
                                let jinv = tensor::inverse(&geo.jac, d);
                                let t = target(mesh.centroid(c));
                                for k in 0..self.components {
                                    let v = tensor::mat_vec(&jinv, &t[k]);
                                    out[self.global(k, dofs[i])] = geo.det * v[j];
                                }
                            }
                            DofAnchor::Vertex(_) => unreachable!(),
                        }
                    }
                }
            }
        }
        out
    }

    /// Mass matrix of one component, integrated exactly.
    pub fn mass_matrix(&self) -> CsrMatrix {
        let rule = gauss_rule(self.mesh.dim(), 2 * self.degree()).expect("degree at most 4");
        self.mass_matrix_with(&rule)
    }

    /// Mass matrix of one component with the given quadrature rule.
    pub fn mass_matrix_with(&self, rule: &QuadratureRule) -> CsrMatrix {
        let mesh = &self.mesh;
        let tab = self.element.tabulate(rule);
        let n = self.local_dim;
        let mut b = TripletBuilder::with_capacity(self.scalar_dim, self.scalar_dim, mesh.num_cells() * n * n);
        let mut local = vec![0.0; n * n];
        for c in 0..mesh.num_cells() {
            let geo = CellGeometry::new(mesh, c);
            let scale = geo.det;
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, (_, w)) in rule.iter().enumerate() {
                let phys = self.physical(c, &geo, &tab[q]);
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] += w * scale * tensor::dot(&phys.values[i], &phys.values[j]);
                    }
                }
            }
            let dofs = self.cell_dofs(c);
            for i in 0..n {
                for j in 0..n {
                    if local[i * n + j] != 0.0 {
                        b.push(dofs[i], dofs[j], local[i * n + j]);
                    }
                }
            }
        }
        b.build()
    }

    /// `∫ target_k · φ_i` for every component `k` and basis function `i`,
    /// with a degree-6 rule.
    pub fn load_vector(&self, target: impl Fn(Vec3) -> Mat3) -> Vec<f64> {
        let mesh = &self.mesh;
        let rule = gauss_rule(mesh.dim(), 6).expect("degree 6 is supported");
        let tab = self.element.tabulate(&rule);
        let mut out = vec![0.0; self.dim()];
        for c in 0..mesh.num_cells() {
            let geo = CellGeometry::new(mesh, c);
            let dofs = self.cell_dofs(c);
            for (q, (p, w)) in rule.iter().enumerate() {
                let phys = self.physical(c, &geo, &tab[q]);
                let t = target(mesh.point(c, p));
                for k in 0..self.components {
                    for i in 0..self.local_dim {
                        out[self.global(k, dofs[i])] += w * geo.det * tensor::dot(&t[k], &phys.values[i]);
                    }
                }
            }
        }
        out
    }

    /// L2 projection of `target` onto the space.
    pub fn l2_project(&self, target: impl Fn(Vec3) -> Mat3) -> Result<Vec<f64>> {
        let rhs = self.load_vector(target);
        let mass = self.mass_matrix();
        self.solve_mass(&mass, &rhs)
    }

    /// Solves `M x = rhs` component-wise for the single-component mass
    /// matrix `mass`.
    pub fn solve_mass(&self, mass: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.scalar_dim;
        let diag = mass.diagonal();
        let mut out = vec![0.0; self.dim()];
        for k in 0..self.components {
            let b = &rhs[k * n..(k + 1) * n];
            let x = &mut out[k * n..(k + 1) * n];
            let outcome = krylov::cg(
                |v, y| mass.matvec(v, y),
                |r, z| z.iter_mut().zip(r).zip(&diag).for_each(|((zi, ri), di)| *zi = ri / di),
                b,
                x,
                1e-13,
                10 * n + 100,
            );
            if !outcome.converged {
                return Err(Error::NoConvergence {
                    method: "mass matrix CG",
                    iterations: outcome.iterations,
                    residual: outcome.residual,
                });
            }
        }
        Ok(out)
    }
}

/// Wraps a vector of component values as field rows (scalar families).
pub fn scalar_rows(v: Vec3) -> Mat3 {
    [[v[0], 0.0, 0.0], [v[1], 0.0, 0.0], [v[2], 0.0, 0.0]]
}
