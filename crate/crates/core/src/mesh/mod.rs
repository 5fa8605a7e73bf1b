//! Conforming simplicial meshes of the unit square and cube.
//!
//! A [`Mesh`] is immutable once built. Every constructor funnels through
//! [`Mesh::from_cells`], which orients the cells, numbers the facets and
//! records cell/facet incidence.
//!
//! Conventions:
//!
//! * local facet `k` of a cell is the facet opposite local vertex `k`;
//! * facets are stored as sorted vertex tuples, numbered in order of first
//!   appearance when cells are visited in ascending order;
//! * the global normal of an interior facet points from the lower-indexed
//!   incident cell to the higher-indexed one, boundary normals point
//!   outward. `cell_facet_sign` is `+1` when the outward normal of the cell
//!   agrees with the global normal and `-1` otherwise.

mod msh;

pub use msh::{import_msh, parse_msh};

use std::collections::HashMap;

use crate::tensor::{self, Mat3, Vec3, ZERO33};
use crate::{Error, Result};

/// Marker stored in [`Mesh::facet_cells`] for the missing neighbor of a
/// boundary facet.
pub const NO_CELL: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    facets: Vec<[usize; 3]>,
    cell_facets: Vec<[usize; 4]>,
    cell_facet_signs: Vec<[f64; 4]>,
    facet_cells: Vec<[usize; 2]>,
    boundary: Vec<bool>,
    measures: Vec<f64>,
    diameters: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and cell connectivity.
    ///
    /// Only the first `dim + 1` entries of each cell (and the first `dim`
    /// coordinates of each vertex) are read. Cells with negative orientation
    /// are flipped so that all measures are positive.
    pub fn from_cells(dim: usize, coords: Vec<Vec3>, cells: Vec<[usize; 4]>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::MeshParameter(format!("dimension must be 2 or 3, got {dim}")));
        }
        let nv = dim + 1;
        let mut coords = coords;
        for x in coords.iter_mut() {
            for c in x.iter_mut().skip(dim) {
                *c = 0.0;
            }
        }
        let mut cells = cells;
        let mut measures = Vec::with_capacity(cells.len());
        let mut diameters = Vec::with_capacity(cells.len());
        let fact = if dim == 2 { 2.0 } else { 6.0 };
        for (c, cell) in cells.iter_mut().enumerate() {
            for k in nv..4 {
                cell[k] = 0;
            }
            for i in 0..nv {
                if cell[i] >= coords.len() {
                    return Err(Error::InconsistentCell {
                        cell: c,
                        reason: format!("vertex index {} out of range", cell[i]),
                    });
                }
                for j in 0..i {
                    if cell[i] == cell[j] {
                        return Err(Error::InconsistentCell {
                            cell: c,
                            reason: format!("repeated vertex index {}", cell[i]),
                        });
                    }
                }
            }
            let mut det = tensor::det(&edge_matrix(&coords, cell, dim), dim);
            if det < 0.0 {
                cell.swap(dim - 1, dim);
                det = -det;
            }
            if det == 0.0 {
                return Err(Error::InconsistentCell {
                    cell: c,
                    reason: "degenerate (zero measure)".into(),
                });
            }
            measures.push(det / fact);
            let mut diam: f64 = 0.0;
            for i in 0..nv {
                for j in 0..i {
                    diam = diam.max(tensor::norm(&tensor::sub(&coords[cell[i]], &coords[cell[j]])));
                }
            }
            diameters.push(diam);
        }

        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        let mut facets = Vec::new();
        let mut facet_cells: Vec<[usize; 2]> = Vec::new();
        let mut cell_facets = vec![[0usize; 4]; cells.len()];
        let mut cell_facet_signs = vec![[0.0f64; 4]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for k in 0..nv {
                let key = facet_key(cell, k, dim);
                let f = match lookup.get(&key) {
                    Some(&f) => {
                        if facet_cells[f][1] != NO_CELL {
                            return Err(Error::InconsistentCell {
                                cell: c,
                                reason: format!("facet {key:?} shared by more than two cells"),
                            });
                        }
                        facet_cells[f][1] = c;
                        cell_facet_signs[c][k] = -1.0;
                        f
                    }
                    None => {
                        let f = facets.len();
                        lookup.insert(key, f);
                        facets.push(key);
                        facet_cells.push([c, NO_CELL]);
                        cell_facet_signs[c][k] = 1.0;
                        f
                    }
                };
                cell_facets[c][k] = f;
            }
        }
        let boundary = facet_cells.iter().map(|fc| fc[1] == NO_CELL).collect();
        Ok(Mesh {
            dim,
            coords,
            cells,
            facets,
            cell_facets,
            cell_facet_signs,
            facet_cells,
            boundary,
            measures,
            diameters,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    /// Vertex indices of cell `c` (the first `dim + 1` entries).
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..self.dim + 1]
    }

    /// Sorted vertex indices of facet `f` (the first `dim` entries).
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f][..self.dim]
    }

    /// Global facet index of local facet `k` (opposite local vertex `k`).
    pub fn cell_facet(&self, c: usize, k: usize) -> usize {
        self.cell_facets[c][k]
    }

    pub fn cell_facet_sign(&self, c: usize, k: usize) -> f64 {
        self.cell_facet_signs[c][k]
    }

    /// Incident cells of facet `f`; the second entry is [`NO_CELL`] on the boundary.
    pub fn facet_cells(&self, f: usize) -> [usize; 2] {
        self.facet_cells[f]
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.boundary[f]
    }

    pub fn num_boundary_facets(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self, c: usize) -> f64 {
        self.measures[c]
    }

    pub fn diameter(&self, c: usize) -> f64 {
        self.diameters[c]
    }

    /// Mesh size: the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Jacobian of the affine map from the reference simplex, columns
    /// `x_i - x_0`.
    pub fn jacobian(&self, c: usize) -> Mat3 {
        edge_matrix(&self.coords, &self.cells[c], self.dim)
    }

    pub fn vertex_coords(&self, c: usize) -> [Vec3; 4] {
        let mut out = [[0.0; 3]; 4];
        for (i, &v) in self.cell(c).iter().enumerate() {
            out[i] = self.coords[v];
        }
        out
    }

    /// Maps barycentric coordinates in cell `c` to a physical point.
    pub fn point(&self, c: usize, bary: &[f64]) -> Vec3 {
        let mut x = [0.0; 3];
        for (i, &v) in self.cell(c).iter().enumerate() {
            let p = &self.coords[v];
            for k in 0..3 {
                x[k] += bary[i] * p[k];
            }
        }
        x
    }

    pub fn centroid(&self, c: usize) -> Vec3 {
        let w = 1.0 / (self.dim + 1) as f64;
        self.point(c, &[w; 4][..self.dim + 1])
    }

    /// `(d-1)`-dimensional measure of facet `f`.
    pub fn facet_measure(&self, f: usize) -> f64 {
        let p = self.facet(f);
        let e1 = tensor::sub(&self.coords[p[1]], &self.coords[p[0]]);
        if self.dim == 2 {
            tensor::norm(&e1)
        } else {
            let e2 = tensor::sub(&self.coords[p[2]], &self.coords[p[0]]);
            0.5 * tensor::norm(&cross(&e1, &e2))
        }
    }

    /// Unit normal of facet `f` in the global orientation.
    pub fn facet_normal(&self, f: usize) -> Vec3 {
        let [c, _] = self.facet_cells[f];
        let k = (0..=self.dim).find(|&k| self.cell_facets[c][k] == f).unwrap();
        tensor::scale(&self.outward_normal(c, k), self.cell_facet_signs[c][k])
    }

    /// Outward unit normal of local facet `k` of cell `c`.
    pub fn outward_normal(&self, c: usize, k: usize) -> Vec3 {
        // The gradient of the barycentric coordinate of the opposite vertex
        // points inward.
        let g = self.barycentric_gradients(c)[k];
        tensor::scale(&g, -1.0 / tensor::norm(&g))
    }

    /// Gradients of the `dim + 1` barycentric coordinates of cell `c`.
    pub fn barycentric_gradients(&self, c: usize) -> [Vec3; 4] {
        let jinv = tensor::inverse(&self.jacobian(c), self.dim);
        let mut out = [[0.0; 3]; 4];
        for i in 1..=self.dim {
            out[i] = jinv[i - 1];
            for k in 0..3 {
                out[0][k] -= jinv[i - 1][k];
            }
        }
        out
    }

    /// Cells containing each vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for c in 0..self.num_cells() {
            for &v in self.cell(c) {
                out[v].push(c);
            }
        }
        out
    }
}

fn edge_matrix(coords: &[Vec3], cell: &[usize; 4], dim: usize) -> Mat3 {
    let mut j = ZERO33;
    let x0 = coords[cell[0]];
    for i in 1..=dim {
        let xi = coords[cell[i]];
        for r in 0..dim {
            j[r][i - 1] = xi[r] - x0[r];
        }
    }
    j
}

fn facet_key(cell: &[usize; 4], k: usize, dim: usize) -> [usize; 3] {
    let mut key = [0usize; 3];
    let mut n = 0;
    for (i, &v) in cell[..dim + 1].iter().enumerate() {
        if i != k {
            key[n] = v;
            n += 1;
        }
    }
    key[..dim].sort_unstable();
    key
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn check_subdivisions(n: usize) -> Result<()> {
    if n < 3 || n % 3 != 0 {
        return Err(Error::MeshParameter(format!(
            "subdivision count must be a positive multiple of 3, got {n}"
        )));
    }
    Ok(())
}

/// Uniform triangulation of the unit square with `n x n` subsquares, each
/// split along its lower-left to upper-right diagonal.
///
/// `n` must be a multiple of 3 so that the lines `x = 1/3` and `x = 2/3`
/// are mesh lines.
pub fn build_structured_square(n: usize) -> Result<Mesh> {
    check_subdivisions(n)?;
    let nf = n as f64;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push([i as f64 / nf, j as f64 / nf, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([v00, v10, v11, 0]);
            cells.push([v00, v11, v01, 0]);
        }
    }
    Mesh::from_cells(2, coords, cells)
}

/// Kuhn (Freudenthal) triangulation of the unit cube: `n^3` subcubes, six
/// tetrahedra each, all sharing the subcube's main diagonal.
pub fn build_structured_cube(n: usize) -> Result<Mesh> {
    check_subdivisions(n)?;
    let nf = n as f64;
    let m = n + 1;
    let mut coords = Vec::with_capacity(m * m * m);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                coords.push([i as f64 / nf, j as f64 / nf, k as f64 / nf]);
            }
        }
    }
    let idx = |p: [usize; 3]| p[2] * m * m + p[1] * m + p[0];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS.iter() {
                    let mut p = [i, j, k];
                    let mut cell = [idx(p), 0, 0, 0];
                    for (s, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        cell[s + 1] = idx(p);
                    }
                    cells.push(cell);
                }
            }
        }
    }
    Mesh::from_cells(3, coords, cells)
}

/// Alfeld split: every cell is replaced by the `dim + 1` simplices joining
/// its centroid to its facets. Parent vertices keep their indices; the
/// centroid of cell `c` becomes vertex `num_vertices + c`.
pub fn barycentric_subdivide(mesh: &Mesh) -> Result<Mesh> {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let mut coords = mesh.coords().to_vec();
    let mut cells = Vec::with_capacity(mesh.num_cells() * (d + 1));
    for c in 0..mesh.num_cells() {
        coords.push(mesh.centroid(c));
        let parent = mesh.cells[c];
        for k in 0..=d {
            let mut child = parent;
            child[k] = nv + c;
            cells.push(child);
        }
    }
    Mesh::from_cells(d, coords, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_square_counts() {
        let m = build_structured_square(3).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (16, 18));
        let m = build_structured_square(6).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (49, 72));
        assert!(build_structured_square(4).is_err());
        assert!(build_structured_square(0).is_err());
    }

    #[test]
    fn structured_cube_counts() {
        let m = build_structured_cube(3).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (64, 162));
        let m = build_structured_cube(6).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (343, 1296));
        assert!(build_structured_cube(5).is_err());
    }

    #[test]
    fn two_triangles_share_one_edge() {
        let coords = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let m = Mesh::from_cells(2, coords, vec![[0, 1, 2, 0], [0, 2, 3, 0]]).unwrap();
        assert_eq!(m.num_facets(), 5);
        assert_eq!(m.num_boundary_facets(), 4);
        let interior = (0..5).find(|&f| !m.is_boundary_facet(f)).unwrap();
        let [c0, c1] = m.facet_cells(interior);
        let k0 = (0..3).find(|&k| m.cell_facet(c0, k) == interior).unwrap();
        let k1 = (0..3).find(|&k| m.cell_facet(c1, k) == interior).unwrap();
        assert_eq!((m.cell_facet_sign(c0, k0), m.cell_facet_sign(c1, k1)), (1.0, -1.0));
        // Global normal points from cell 0 into cell 1.
        let n = m.facet_normal(interior);
        let s = 0.5f64.sqrt();
        assert!((n[0] + s).abs() < 1e-15 && (n[1] - s).abs() < 1e-15);
    }

    #[test]
    fn single_tet_has_four_boundary_facets() {
        let coords = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = Mesh::from_cells(3, coords, vec![[0, 2, 1, 3]]).unwrap();
        assert_eq!(m.num_facets(), 4);
        assert_eq!(m.num_boundary_facets(), 4);
        assert!((m.measure(0) - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn repeated_vertex_is_rejected() {
        let coords = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let err = Mesh::from_cells(2, coords, vec![[0, 1, 1, 0]]).unwrap_err();
        assert!(matches!(err, Error::InconsistentCell { cell: 0, .. }));
    }

    #[test]
    fn subdivision_of_reference_triangle() {
        let coords = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = Mesh::from_cells(2, coords, vec![[0, 1, 2, 0]]).unwrap();
        let s = barycentric_subdivide(&m).unwrap();
        assert_eq!(s.num_cells(), 3);
        for c in 0..3 {
            assert!((s.measure(c) - 1.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(s.h(), m.h());
    }

    #[test]
    fn subdivision_multiplies_cells() {
        let s = barycentric_subdivide(&build_structured_square(3).unwrap()).unwrap();
        assert_eq!(s.num_cells(), 54);
        let s = barycentric_subdivide(&build_structured_cube(3).unwrap()).unwrap();
        assert_eq!(s.num_cells(), 648);
        assert!((s.total_measure() - 1.0).abs() < 1e-12);
    }
}
