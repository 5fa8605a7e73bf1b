//! Discrete inf-sup probe for the elasticity part of `B`.
//!
//! With `B_el` the stress columns of `B` restricted to the displacement
//! rows and the `asym` coupling, the constant is
//!
//! ```text
//! β_h = min_v sup_σ (B_el σ, v) / (‖σ‖_{H(div)} ‖v‖_{L2}),
//! ```
//!
//! i.e. `β_h² = λ_min(M_Y⁻¹ B_el M_X⁻¹ B_elᵀ)` with `M_X` the H(div) Gram
//! matrix of the stress rows and `M_Y` the L2 Gram matrix of `(u, r)`.

use nalgebra::DMatrix;

use super::{assemble_b, hdiv_norm_matrix, Spaces};
use crate::model::LengthScale;
use crate::solve::krylov;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfSupMethod {
    /// Dense generalized eigensolver; for small meshes.
    Dense,
    /// Lanczos on the pencil with inner CG solves.
    Lanczos,
}

fn replicate(m: &CsrMatrix, copies: usize) -> CsrMatrix {
    let n = m.nrows();
    let mut t = TripletBuilder::with_capacity(n * copies, n * copies, m.nnz() * copies);
    for k in 0..copies {
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(k * n + i, k * n + j, v);
            }
        }
    }
    t.build()
}

fn block_diag(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let n = a.nrows() + b.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, a.nnz() + b.nnz());
    for (m, off) in [(a, 0), (b, a.nrows())] {
        for i in 0..m.nrows() {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(off + i, off + j, v);
            }
        }
    }
    t.build()
}

fn spd_solve(m: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64) -> Result<()> {
    let diag = m.diagonal();
    let out = krylov::cg(
        |v, y| m.matvec(v, y),
        |r, z| z.iter_mut().zip(r).zip(&diag).for_each(|((zi, ri), di)| *zi = ri / di),
        b,
        x,
        tol,
        20 * b.len() + 100,
    );
    if !out.converged {
        return Err(Error::NoConvergence {
            method: "Gram matrix CG",
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    Ok(())
}

/// The stress-column elasticity block of `B` and the Gram matrices
/// `(B_el, M_X, M_Y)`.
pub fn inf_sup_operators(spaces: &Spaces) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
    let layout = spaces.layout();
    let b = assemble_b(spaces, &LengthScale::Constant(0.0));
    let b_el = b.submatrix(0..layout.y_dim(), layout.sigma.clone());
    let m_x = replicate(&hdiv_norm_matrix(&spaces.sigma), spaces.sigma.components());
    let m_y = block_diag(
        &replicate(&spaces.u.mass_matrix(), spaces.u.components()),
        &replicate(&spaces.r.mass_matrix(), spaces.r.components()),
    );
    (b_el, m_x, m_y)
}

/// Computes `β_h` for the spaces.
pub fn inf_sup_constant(spaces: &Spaces, method: InfSupMethod) -> Result<f64> {
    let (b, m_x, m_y) = inf_sup_operators(spaces);
    match method {
        InfSupMethod::Dense => {
            let bd = b.to_dense();
            let mx = m_x.to_dense().cholesky().ok_or(Error::NotPositiveDefinite { block: 0, pivot: 0.0 })?;
            let my = m_y.to_dense().cholesky().ok_or(Error::NotPositiveDefinite { block: 1, pivot: 0.0 })?;
            // S = B M_X⁻¹ Bᵀ = (L_X⁻¹ Bᵀ)ᵀ (L_X⁻¹ Bᵀ).
            let mut w = bd.transpose();
            mx.l().solve_lower_triangular_mut(&mut w);
            let s: DMatrix<f64> = w.transpose() * &w;
            // L_Y⁻¹ S L_Y⁻ᵀ.
            let ly = my.l();
            let mut t = s;
            ly.solve_lower_triangular_mut(&mut t);
            let mut t = t.transpose();
            ly.solve_lower_triangular_mut(&mut t);
            let t = (&t + t.transpose()) * 0.5;
            let min = t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(min.max(0.0).sqrt())
        }
        InfSupMethod::Lanczos => {
            let ny = b.nrows();
            let nx = b.ncols();
            let start: Vec<f64> = (0..ny).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin()).collect();
            let mut failure: Option<Error> = None;
            let mut bt_v = vec![0.0; nx];
            let mut z = vec![0.0; nx];
            let mu = krylov::lanczos_smallest(
                |v, y| {
                    b.matvec_transpose(v, &mut bt_v);
                    z.iter_mut().for_each(|zi| *zi = 0.0);
                    if let Err(e) = spd_solve(&m_x, &bt_v, &mut z, 1e-12) {
                        failure.get_or_insert(e);
                    }
                    b.matvec(&z, y);
                },
                |r, x| {
                    x.iter_mut().for_each(|xi| *xi = 0.0);
                    let _ = spd_solve(&m_y, r, x, 1e-13);
                },
                |x, y| m_y.matvec(x, y),
                &start,
                1e-7,
                ny.min(800),
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(mu.max(0.0).sqrt())
        }
    }
}
