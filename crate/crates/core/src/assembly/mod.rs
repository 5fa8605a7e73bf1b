//! Saddle-point blocks of the four schemes.
//!
//! Unknowns are ordered `[σ | ω | u | r]`; `X = (σ, ω)` and `Y = (u, r)`.
//! The full mixed system is
//!
//! ```text
//! [ A  -Bᵀ ] [η]   [g]
//! [ B   0  ] [v] = [f]
//! ```
//!
//! with `⟨Bη, v'⟩ = -(∇·σ, u') + (asym σ, r') - (∇·(ℓω), r')`. The
//! multipoint stress variant replaces `A` by the lumped `A_h` (vertex rule
//! for BDM1, vertex + centroid rule for RT1); BDM1-L1 additionally lumps
//! the rotation rows of `B` and `f`.

mod infsup;

pub use infsup::{inf_sup_constant, inf_sup_operators, InfSupMethod};

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use crate::fespace::{scalar_rows, BasisValues, CellGeometry, Family, FeSpace};
use crate::mesh::Mesh;
use crate::model::{asym, rotation_dim, LengthScale, ManufacturedCase, MaterialParams};
use crate::quadrature::{gauss_rule, q1_rule, q2_rule, QuadratureRule};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tensor::{self, Mat3, ZERO33};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeName {
    Bdm1P0,
    Bdm1L1,
    Rt1L1,
    Rt1P1,
}

impl SchemeName {
    pub const ALL: [SchemeName; 4] = [SchemeName::Bdm1P0, SchemeName::Bdm1L1, SchemeName::Rt1L1, SchemeName::Rt1P1];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Bdm1P0 => "BDM1-P0",
            SchemeName::Bdm1L1 => "BDM1-L1",
            SchemeName::Rt1L1 => "RT1-L1",
            SchemeName::Rt1P1 => "RT1-P1",
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unsupported(format!("unknown scheme `{s}` (expected BDM1-P0, BDM1-L1, RT1-L1 or RT1-P1)")))
    }
}

/// Which stress mass matrix is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressQuadrature {
    Exact,
    /// Vertex rule.
    Q1,
    /// Vertex plus centroid rule.
    Q2,
}

/// Full mixed form or multipoint stress (lumped) form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Mfe,
    MsMfe,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Mfe => "MFE",
            Formulation::MsMfe => "MS-MFE",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Space families and quadratures of one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    pub name: SchemeName,
    pub stress: Family,
    pub displacement: Family,
    pub rotation: Family,
    /// Rule used for `A_h` in the multipoint form.
    pub lumping: StressQuadrature,
    /// Whether the multipoint form also lumps the rotation rows of `B`, `f`.
    pub lumped_rotation: bool,
    /// Whether the scheme is only stable on barycentrically refined grids.
    pub needs_barycentric: bool,
}

impl SchemeSpec {
    pub fn new(name: SchemeName) -> Self {
        let (stress, displacement, rotation, lumping) = match name {
            SchemeName::Bdm1P0 => (Family::Bdm1, Family::P0, Family::P0, StressQuadrature::Q1),
            SchemeName::Bdm1L1 => (Family::Bdm1, Family::P0, Family::L1, StressQuadrature::Q1),
            SchemeName::Rt1L1 => (Family::Rt1, Family::P1dc, Family::L1, StressQuadrature::Q2),
            SchemeName::Rt1P1 => (Family::Rt1, Family::P1dc, Family::P1dc, StressQuadrature::Q2),
        };
        SchemeSpec {
            name,
            stress,
            displacement,
            rotation,
            lumping,
            lumped_rotation: name == SchemeName::Bdm1L1,
            needs_barycentric: name == SchemeName::Rt1P1,
        }
    }

    pub fn stress_quadrature(&self, formulation: Formulation) -> StressQuadrature {
        match formulation {
            Formulation::Mfe => StressQuadrature::Exact,
            Formulation::MsMfe => self.lumping,
        }
    }
}

/// The four discrete spaces of a scheme on one mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub sigma: FeSpace,
    pub omega: FeSpace,
    pub u: FeSpace,
    pub r: FeSpace,
}

/// Offsets of the four fields in the global unknown vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub sigma: Range<usize>,
    pub omega: Range<usize>,
    pub u: Range<usize>,
    pub r: Range<usize>,
}

impl Layout {
    pub fn x_dim(&self) -> usize {
        self.omega.end
    }

    pub fn y_dim(&self) -> usize {
        self.r.end - self.u.start
    }

    pub fn full_dim(&self) -> usize {
        self.r.end
    }

    /// `u` range within `Y`.
    pub fn u_in_y(&self) -> Range<usize> {
        0..self.u.len()
    }

    /// `r` range within `Y`.
    pub fn r_in_y(&self) -> Range<usize> {
        self.u.len()..self.y_dim()
    }
}

impl Spaces {
    pub fn new(spec: &SchemeSpec, mesh: Arc<Mesh>) -> Result<Self> {
        let d = mesh.dim();
        let k = rotation_dim(d);
        Ok(Spaces {
            sigma: FeSpace::new(mesh.clone(), spec.stress, d)?,
            omega: FeSpace::new(mesh.clone(), spec.stress, k)?,
            u: FeSpace::new(mesh.clone(), spec.displacement, d)?,
            r: FeSpace::new(mesh, spec.rotation, k)?,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.sigma.mesh()
    }

    pub fn layout(&self) -> Layout {
        let s = self.sigma.dim();
        let w = s + self.omega.dim();
        let u = w + self.u.dim();
        let r = u + self.r.dim();
        Layout {
            sigma: 0..s,
            omega: s..w,
            u: w..u,
            r: u..r,
        }
    }
}

/// Assembled blocks of one discretization.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub spec: SchemeSpec,
    pub formulation: Formulation,
    pub layout: Layout,
    /// `X x X`, symmetric positive definite.
    pub a: CsrMatrix,
    /// `Y x X`.
    pub b: CsrMatrix,
    pub g: Vec<f64>,
    pub f: Vec<f64>,
}

impl SaddleSystem {
    /// The monolithic matrix `[[A, -Bᵀ], [B, 0]]`.
    pub fn full_matrix(&self) -> CsrMatrix {
        let nx = self.layout.x_dim();
        let n = self.layout.full_dim();
        let mut t = TripletBuilder::with_capacity(n, n, self.a.nnz() + 2 * self.b.nnz());
        for i in 0..nx {
            let (cols, vals) = self.a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(i, j, v);
            }
        }
        for i in 0..self.b.nrows() {
            let (cols, vals) = self.b.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(nx + i, j, v);
                t.push(j, nx + i, -v);
            }
        }
        t.build()
    }

    /// `[g; f]`.
    pub fn full_rhs(&self) -> Vec<f64> {
        let mut rhs = self.g.clone();
        rhs.extend_from_slice(&self.f);
        rhs
    }
}

/// Rule used for a stress mass matrix.
fn stress_rule(spaces: &Spaces, q: StressQuadrature) -> QuadratureRule {
    let d = spaces.mesh().dim();
    match q {
        StressQuadrature::Exact => gauss_rule(d, 2 * spaces.sigma.degree()).expect("degree at most 4"),
        StressQuadrature::Q1 => q1_rule(d).expect("valid dimension"),
        StressQuadrature::Q2 => q2_rule(d).expect("valid dimension"),
    }
}

/// `∫ law(τ) : τ'` over the tensor fields of `space` (rows = components).
fn tensor_mass(space: &FeSpace, rule: &QuadratureRule, law: impl Fn(&Mat3) -> Mat3) -> CsrMatrix {
    let mesh = space.mesh();
    let n = space.local_dim();
    let rows = space.components();
    let m = n * rows;
    let tab = space.element().tabulate(rule);
    let mut b = TripletBuilder::with_capacity(space.dim(), space.dim(), mesh.num_cells() * m * m);
    let mut local = vec![0.0; m * m];
    let mut images = vec![ZERO33; m];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, (_, w)) in rule.iter().enumerate() {
            let phys = space.physical(c, &geo, &tab[q]);
            let wq = w * geo.det;
            for k in 0..rows {
                for i in 0..n {
                    let mut tau = ZERO33;
                    tau[k] = phys.values[i];
                    images[k * n + i] = law(&tau);
                }
            }
            for a in 0..m {
                let img = &images[a];
                for l in 0..rows {
                    for j in 0..n {
                        let v = tensor::dot(&img[l], &phys.values[j]);
                        if v != 0.0 {
                            local[a * m + l * n + j] += wq * v;
                        }
                    }
                }
            }
        }
        let dofs = space.cell_dofs(c);
        for a in 0..m {
            let ga = space.global(a / n, dofs[a % n]);
            for bb in 0..m {
                let v = local[a * m + bb];
                if v != 0.0 {
                    b.push(ga, space.global(bb / n, dofs[bb % n]), v);
                }
            }
        }
    }
    b.build()
}

/// Drops entries that are negligible relative to the diagonal
/// (`|a_ij| ≤ 1e-13 sqrt(a_ii a_jj)`), i.e. rounding noise from products
/// of basis functions that vanish at the quadrature points.
fn prune(a: &CsrMatrix) -> CsrMatrix {
    let diag = a.diagonal();
    a.filter(|i, j, v| i == j || v.abs() > 1e-13 * (diag[i] * diag[j]).abs().sqrt())
}

fn block_diag(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let n = a.nrows() + b.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, a.nnz() + b.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(i, j, v);
        }
    }
    let off = a.nrows();
    for i in 0..b.nrows() {
        let (cols, vals) = b.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(off + i, off + j, v);
        }
    }
    t.build()
}

/// `A` (exact) or `A_h` (lumped) for the stress pair `(σ, ω)`.
pub fn assemble_stress_matrix(spaces: &Spaces, params: &MaterialParams, q: StressQuadrature) -> CsrMatrix {
    let rule = stress_rule(spaces, q);
    let d = spaces.mesh().dim();
    let a_sigma = tensor_mass(&spaces.sigma, &rule, |t| params.a_sigma(t, d));
    let a_omega = tensor_mass(&spaces.omega, &rule, |t| params.a_omega(t, d));
    let a = block_diag(&a_sigma, &a_omega);
    if q == StressQuadrature::Exact {
        a
    } else {
        prune(&a)
    }
}

/// Exact `A = (A_σ σ, σ') + (A_ω ω, ω')`.
pub fn assemble_a(spaces: &Spaces, params: &MaterialParams) -> CsrMatrix {
    assemble_stress_matrix(spaces, params, StressQuadrature::Exact)
}

/// Lumped `A_h` with the scheme's rule.
pub fn assemble_a_h(spec: &SchemeSpec, spaces: &Spaces, params: &MaterialParams) -> CsrMatrix {
    assemble_stress_matrix(spaces, params, spec.lumping)
}

/// `A` assembled from the split form
/// `(1/2μ)((σ, σ') - α (Tr σ, Tr σ')) + (β/2)(asym σ, asym σ')`
/// (stress part only). Used to cross-check [`assemble_a`].
pub fn assemble_a_sigma_split(spaces: &Spaces, params: &MaterialParams) -> CsrMatrix {
    let d = spaces.mesh().dim();
    let rule = stress_rule(spaces, StressQuadrature::Exact);
    let alpha = params.alpha_sigma(d);
    let beta = params.beta_sigma();
    let mu = params.mu_sigma;
    // The split form is the quadratic form of the symmetric operator
    // τ ↦ (τ - α Tr τ I)/(2μ) + (β/2) asym*(asym τ).
    tensor_mass(&spaces.sigma, &rule, |t| {
        let tr: f64 = (0..d).map(|i| t[i][i]).sum();
        let a = crate::model::asym_star(&asym(t, d), d);
        let mut out = ZERO33;
        for i in 0..d {
            for j in 0..d {
                out[i][j] = t[i][j] / (2.0 * mu) + 0.5 * beta * a[i][j];
            }
            out[i][i] -= alpha * tr / (2.0 * mu);
        }
        out
    })
}

fn rule_for(dim: usize, degree: usize) -> QuadratureRule {
    gauss_rule(dim, degree.min(crate::quadrature::MAX_DEGREE)).expect("supported degree")
}

/// Exact `B`, or `B_h` when `lumped_rotation` is set (rotation rows
/// integrated with the vertex rule).
pub fn assemble_b_with(spaces: &Spaces, ell: &LengthScale, lumped_rotation: bool) -> CsrMatrix {
    let mesh = spaces.mesh();
    let d = mesh.dim();
    let layout = spaces.layout();
    let nx = layout.x_dim();
    let ny = layout.y_dim();
    let (sig, omg, us, rs) = (&spaces.sigma, &spaces.omega, &spaces.u, &spaces.r);
    let mut t = TripletBuilder::new(ny, nx);

    // Displacement rows: -(∇·σ_k, u'_k).
    let rule_u = rule_for(d, sig.degree() - 1 + us.degree());
    let tab_s = sig.element().tabulate(&rule_u);
    let tab_u = us.element().tabulate(&rule_u);
    let (ns, nu) = (sig.local_dim(), us.local_dim());
    let mut local = vec![0.0; nu * ns];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, (_, w)) in rule_u.iter().enumerate() {
            let ps = sig.physical(c, &geo, &tab_s[q]);
            let pu = &tab_u[q];
            for b in 0..nu {
                for i in 0..ns {
                    local[b * ns + i] -= w * geo.det * ps.divs[i] * pu.values[b][0];
                }
            }
        }
        let (ds, du) = (sig.cell_dofs(c), us.cell_dofs(c));
        for k in 0..d {
            for b in 0..nu {
                for i in 0..ns {
                    let v = local[b * ns + i];
                    if v != 0.0 {
                        t.push(us.global(k, du[b]), sig.global(k, ds[i]), v);
                    }
                }
            }
        }
    }

    // Rotation rows: (asym σ, r') - (∇ℓ·ω_m + ℓ ∇·ω_m, r'_m).
    let rule_r = if lumped_rotation {
        q1_rule(d).expect("valid dimension")
    } else {
        match ell {
            LengthScale::Constant(_) => rule_for(d, sig.degree() + rs.degree()),
            LengthScale::SmoothStep => rule_for(d, 6),
        }
    };
    let tab_s = sig.element().tabulate(&rule_r);
    let tab_r = rs.element().tabulate(&rule_r);
    let nr = rs.local_dim();
    let kd = rotation_dim(d);
    let off_r = layout.u.len();
    let off_w = layout.omega.start;
    let ell_zero = ell.is_zero();
    // local_sig[(m, b), (k, i)], local_om[b, i] (same for every ω row m).
    let mut local_sig = vec![0.0; kd * nr * d * ns];
    let mut local_om = vec![0.0; nr * ns];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        local_sig.iter_mut().for_each(|v| *v = 0.0);
        local_om.iter_mut().for_each(|v| *v = 0.0);
        for (q, (p, w)) in rule_r.iter().enumerate() {
            let ps = sig.physical(c, &geo, &tab_s[q]);
            let pr = &tab_r[q];
            let wq = w * geo.det;
            for k in 0..d {
                for i in 0..ns {
                    let mut tau = ZERO33;
                    tau[k] = ps.values[i];
                    let a = asym(&tau, d);
                    for m in 0..kd {
                        if a[m] == 0.0 {
                            continue;
                        }
                        for b in 0..nr {
                            local_sig[(m * nr + b) * d * ns + k * ns + i] += wq * a[m] * pr.values[b][0];
                        }
                    }
                }
            }
            if !ell_zero {
                let x = mesh.point(c, p);
                let l = ell.value(&x);
                let gl = ell.grad(&x);
                for i in 0..ns {
                    let div_lw = tensor::dot(&gl, &ps.values[i]) + l * ps.divs[i];
                    for b in 0..nr {
                        local_om[b * ns + i] -= wq * div_lw * pr.values[b][0];
                    }
                }
            }
        }
        let (ds, dr) = (sig.cell_dofs(c), rs.cell_dofs(c));
        for m in 0..kd {
            for b in 0..nr {
                let row = off_r + rs.global(m, dr[b]);
                for k in 0..d {
                    for i in 0..ns {
                        let v = local_sig[(m * nr + b) * d * ns + k * ns + i];
                        if v != 0.0 {
                            t.push(row, sig.global(k, ds[i]), v);
                        }
                    }
                }
                for i in 0..ns {
                    let v = local_om[b * ns + i];
                    if v != 0.0 {
                        t.push(row, off_w + omg.global(m, ds[i]), v);
                    }
                }
            }
        }
    }
    t.build()
}

/// Exact `B`.
pub fn assemble_b(spaces: &Spaces, ell: &LengthScale) -> CsrMatrix {
    assemble_b_with(spaces, ell, false)
}

/// `B_h` of BDM1-L1: rotation rows with the vertex rule.
pub fn assemble_b_h(spaces: &Spaces, ell: &LengthScale) -> CsrMatrix {
    assemble_b_with(spaces, ell, true)
}

/// `(g, f)` with `g = 0` and `f = ((f_σ, u'), (f_ω, r'))` (degree-6 rule).
pub fn assemble_rhs(case: &ManufacturedCase, spaces: &Spaces) -> (Vec<f64>, Vec<f64>) {
    let layout = spaces.layout();
    let g = vec![0.0; layout.x_dim()];
    let mut f = spaces.u.load_vector(|x| scalar_rows(case.forcing(&x).0));
    f.extend(spaces.r.load_vector(|x| scalar_rows(case.forcing(&x).1)));
    (g, f)
}

/// Right-hand side of BDM1-L1 in multipoint form: the rotation part is
/// `(Π_R f_ω, r')_{Q1}` with `Π_R` the L2 projection onto L1.
pub fn assemble_f_h(case: &ManufacturedCase, spaces: &Spaces) -> Result<Vec<f64>> {
    let mut f = spaces.u.load_vector(|x| scalar_rows(case.forcing(&x).0));
    let proj = spaces.r.l2_project(|x| scalar_rows(case.forcing(&x).1))?;
    let lumped = spaces.r.mass_matrix_with(&q1_rule(spaces.mesh().dim())?).diagonal();
    let n = spaces.r.scalar_dim();
    f.extend(proj.iter().enumerate().map(|(i, p)| p * lumped[i % n]));
    Ok(f)
}

/// Assembles the system of `spec` in the given formulation.
pub fn assemble_system(
    spec: &SchemeSpec,
    formulation: Formulation,
    spaces: &Spaces,
    case: &ManufacturedCase,
) -> Result<SaddleSystem> {
    let a = assemble_stress_matrix(spaces, &case.params, spec.stress_quadrature(formulation));
    let lumped = formulation == Formulation::MsMfe && spec.lumped_rotation;
    let b = assemble_b_with(spaces, &case.ell, lumped);
    let (g, mut f) = assemble_rhs(case, spaces);
    if lumped {
        f = assemble_f_h(case, spaces)?;
    }
    Ok(SaddleSystem {
        spec: *spec,
        formulation,
        layout: spaces.layout(),
        a,
        b,
        g,
        f,
    })
}

/// `∫ (φ_i·φ_j + ∇·φ_i ∇·φ_j)` for one component of an H(div) space.
pub fn hdiv_norm_matrix(space: &FeSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let rule = gauss_rule(mesh.dim(), 2 * space.degree()).expect("degree at most 4");
    let tab = space.element().tabulate(&rule);
    let n = space.local_dim();
    let mut t = TripletBuilder::with_capacity(space.scalar_dim(), space.scalar_dim(), mesh.num_cells() * n * n);
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let mut local = vec![0.0; n * n];
        for (q, (_, w)) in rule.iter().enumerate() {
            let p: BasisValues = space.physical(c, &geo, &tab[q]);
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] +=
                        w * geo.det * (tensor::dot(&p.values[i], &p.values[j]) + p.divs[i] * p.divs[j]);
                }
            }
        }
        let dofs = space.cell_dofs(c);
        for i in 0..n {
            for j in 0..n {
                t.push(dofs[i], dofs[j], local[i * n + j]);
            }
        }
    }
    t.build()
}
