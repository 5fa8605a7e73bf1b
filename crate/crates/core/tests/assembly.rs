//! Oracles for the assembled saddle-point blocks.

use std::sync::Arc;

use cosserat_core::assembly::{
    assemble_a, assemble_a_h, assemble_a_sigma_split, assemble_b, assemble_b_h, assemble_rhs, SchemeName,
    SchemeSpec, Spaces,
};
use cosserat_core::fespace::scalar_rows;
use cosserat_core::mesh::{barycentric_subdivide, build_structured_cube, build_structured_square, Mesh};
use cosserat_core::model::{asym_star, LengthScale, ManufacturedCase, MaterialParams, Solution};
use cosserat_core::solve::BlockDiagFactor;
use cosserat_core::tensor::Mat3;

fn mesh_for(scheme: SchemeName, dim: usize, n: usize) -> Arc<Mesh> {
    let m = if dim == 2 {
        build_structured_square(n).unwrap()
    } else {
        build_structured_cube(n).unwrap()
    };
    if SchemeSpec::new(scheme).needs_barycentric {
        Arc::new(barycentric_subdivide(&m).unwrap())
    } else {
        Arc::new(m)
    }
}

fn spaces(scheme: SchemeName, dim: usize, n: usize) -> (SchemeSpec, Spaces) {
    let spec = SchemeSpec::new(scheme);
    let sp = Spaces::new(&spec, mesh_for(scheme, dim, n)).unwrap();
    (spec, sp)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `[σ | ω]` vector holding the interpolant of `sigma` and zero couple stress.
fn stress_vector(sp: &Spaces, sigma: impl Fn([f64; 3]) -> Mat3) -> Vec<f64> {
    let mut x = sp.sigma.interpolate(sigma);
    x.resize(sp.layout().x_dim(), 0.0);
    x
}

#[test]
fn stress_matrix_is_symmetric_positive_definite() {
    for scheme in SchemeName::ALL {
        let (_, sp) = spaces(scheme, 2, 3);
        let a = assemble_a(&sp, &MaterialParams::default());
        assert!(a.asymmetry() < 1e-13 * a.max_abs(), "{scheme}");
        let dense = a.to_dense();
        assert!(dense.cholesky().is_some(), "{scheme}: A not PD");
    }
}

#[test]
fn split_form_matches_compliance() {
    for dim in [2, 3] {
        let (_, sp) = spaces(SchemeName::Bdm1P0, dim, 3);
        let p = MaterialParams::default();
        let a = assemble_a(&sp, &p);
        let n = sp.sigma.dim();
        let split = assemble_a_sigma_split(&sp, &p);
        let block = a.submatrix(0..n, 0..n);
        let diff = (block.to_dense() - split.to_dense()).abs().max();
        assert!(diff < 1e-12 * a.max_abs(), "d={dim}: {diff}");
    }
}

#[test]
fn vertex_rule_blocks_are_vertex_local() {
    let (spec, sp) = spaces(SchemeName::Bdm1P0, 2, 6);
    let a_h = assemble_a_h(&spec, &sp, &MaterialParams::default());
    let factor = BlockDiagFactor::new(&a_h).unwrap();
    let mesh = sp.mesh();
    assert!(factor.num_blocks() >= mesh.num_vertices());
    assert!(factor.max_block_size() <= 24, "{}", factor.max_block_size());
    // Every block only touches stress DOFs anchored at one vertex.
    let ns = sp.sigma.scalar_dim();
    let nsig = sp.sigma.dim();
    for block in factor.blocks() {
        let anchor = |i: usize| {
            let local = if i < nsig { i % ns } else { (i - nsig) % sp.omega.scalar_dim() };
            sp.sigma.dof_vertex(local)
        };
        let v0 = anchor(block[0]);
        assert!(v0.is_some());
        assert!(block.iter().all(|&i| anchor(i) == v0));
    }
}

#[test]
fn centroid_rule_blocks_are_local_for_rt1() {
    for dim in [2, 3] {
        let (spec, sp) = spaces(SchemeName::Rt1L1, dim, 3);
        let a_h = assemble_a_h(&spec, &sp, &MaterialParams::default());
        let factor = BlockDiagFactor::new(&a_h).unwrap();
        assert!(factor.num_blocks() >= sp.mesh().num_vertices(), "d={dim}");
        assert!(factor.max_block_size() < a_h.nrows() / 10, "d={dim}");
    }
}

#[test]
fn lumping_is_exact_on_constant_stress() {
    let c: Mat3 = [[1.0, 0.3, 0.0], [-0.7, 2.0, 0.0], [0.0, 0.0, 0.0]];
    for scheme in SchemeName::ALL {
        let (spec, sp) = spaces(scheme, 2, 3);
        let p = MaterialParams::default();
        let a = assemble_a(&sp, &p);
        let a_h = assemble_a_h(&spec, &sp, &p);
        let x = stress_vector(&sp, |_| c);
        let (ax, ahx) = (a.mul_vec(&x), a_h.mul_vec(&x));
        let err = ax.iter().zip(&ahx).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(err < 1e-12, "{scheme}: {err}");
    }
}

#[test]
fn divergence_free_fields_have_zero_displacement_rows() {
    for scheme in SchemeName::ALL {
        let (_, sp) = spaces(scheme, 2, 3);
        let b = assemble_b(&sp, &LengthScale::Constant(1.0));
        let x = stress_vector(&sp, |p| [[p[1], -p[0], 0.0], [2.0 * p[1], 3.0, 0.0], [0.0; 3]]);
        let bx = b.mul_vec(&x);
        let u = sp.layout().u_in_y();
        let err = bx[u].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-13, "{scheme}: {err}");
    }
}

#[test]
fn rotation_rows_of_a_unit_skew_stress() {
    for dim in [2, 3] {
        for scheme in [SchemeName::Bdm1L1, SchemeName::Rt1P1] {
            let (_, sp) = spaces(scheme, dim, 3);
            let b = assemble_b(&sp, &LengthScale::Constant(0.0));
            let k = if dim == 2 { 1 } else { 3 };
            for m in 0..k {
                let mut r = [0.0; 3];
                r[m] = 1.0;
                let skew = asym_star(&r, dim);
                let x = stress_vector(&sp, |_| skew);
                let bx = b.mul_vec(&x);
                let load = sp.r.load_vector(|_| scalar_rows(r));
                let rows = &bx[sp.layout().r_in_y()];
                for (i, (got, want)) in rows.iter().zip(&load).enumerate() {
                    assert!((got - 2.0 * want).abs() < 1e-13, "{scheme} d={dim} m={m} row {i}");
                }
            }
        }
    }
}

#[test]
fn lumped_rotation_rows_agree_on_constant_stress() {
    for dim in [2, 3] {
        let (_, sp) = spaces(SchemeName::Bdm1L1, dim, 3);
        let ell = LengthScale::Constant(1.0);
        let (b, b_h) = (assemble_b(&sp, &ell), assemble_b_h(&sp, &ell));
        let u = sp.layout().u_in_y();
        // Displacement rows are identical.
        for i in u.clone() {
            assert_eq!(b.row(i), b_h.row(i));
        }
        let c: Mat3 = [[0.5, -1.0, 0.2], [0.4, 1.0, 0.3], [-0.6, 0.1, 2.0]];
        let mut x = sp.sigma.interpolate(|_| c);
        x.extend(sp.omega.interpolate(|_| c));
        let (bx, bhx) = (b.mul_vec(&x), b_h.mul_vec(&x));
        let err = bx.iter().zip(&bhx).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-13, "d={dim}: {err}");
    }
}

#[test]
fn zero_solution_gives_zero_load() {
    let (_, sp) = spaces(SchemeName::Rt1L1, 2, 3);
    let mut case = ManufacturedCase::new(2, LengthScale::SmoothStep);
    case.solution = Solution::Zero;
    let (g, f) = assemble_rhs(&case, &sp);
    assert!(g.iter().chain(&f).all(|v| v.abs() < 1e-14));
}

#[test]
fn load_vector_integrates_the_forcing() {
    // Summing the P0 displacement load over cells gives ∫ f_σ.
    let (_, sp) = spaces(SchemeName::Bdm1P0, 2, 6);
    let case = ManufacturedCase::new(2, LengthScale::Constant(1.0));
    let (_, f) = assemble_rhs(&case, &sp);
    let n = sp.u.scalar_dim();
    let total: f64 = f[..n].iter().sum();
    let rule = cosserat_core::quadrature::gauss_rule(2, 6).unwrap();
    let mesh = sp.mesh();
    let direct: f64 = (0..mesh.num_cells())
        .map(|c| cosserat_core::quadrature::integrate(&rule, mesh, c, |x| case.forcing(&x).0[0]))
        .sum();
    assert!((total - direct).abs() < 1e-12 * (1.0 + direct.abs()));
}

#[test]
fn kernel_of_b_is_divergence_free() {
    let (_, sp) = spaces(SchemeName::Bdm1P0, 2, 3);
    let b = assemble_b(&sp, &LengthScale::Constant(1.0)).to_dense();
    let btb = b.transpose() * &b;
    let eig = btb.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let null: Vec<usize> = (0..b.ncols()).filter(|&k| eig.eigenvalues[k] < 1e-12 * scale).collect();
    assert!(!null.is_empty());
    let nsig = sp.sigma.dim();
    let mesh = sp.mesh();
    for &k in null.iter().take(8) {
        let x: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let sigma = &x[..nsig];
        for c in 0..mesh.num_cells() {
            let v = sp.sigma.eval(sigma, c, &[0.25, 0.25, 0.5, 0.0]).unwrap();
            assert!(v.div.iter().all(|d| d.abs() < 1e-9), "cell {c}: {:?}", v.div);
        }
    }
}

#[test]
fn identity_stress_energy() {
    // (A_σ I, I) = |Ω| d (1 - d α) / (2μ).
    for dim in [2, 3] {
        let (_, sp) = spaces(SchemeName::Bdm1P0, dim, 3);
        let p = MaterialParams::default();
        let a = assemble_a(&sp, &p);
        let mut id = [[0.0; 3]; 3];
        for (i, row) in id.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        let x = stress_vector(&sp, |_| id);
        let got = dot(&x, &a.mul_vec(&x));
        let d = dim as f64;
        let want = d * (1.0 - d * p.alpha_sigma(dim)) / (2.0 * p.mu_sigma);
        assert!((got - want).abs() < 1e-12, "d={dim}: {got} vs {want}");
    }
}
