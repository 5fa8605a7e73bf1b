//! Solution of the saddle-point systems.
//!
//! Two paths:
//!
//! * reduced (multipoint stress form): `A_h` is block diagonal, so it is
//!   factored block by block, the displacement/rotation Schur complement
//!   `S = B A_h⁻¹ Bᵀ` is solved matrix-free by Jacobi-preconditioned CG and
//!   the stresses are recovered locally;
//! * full (mixed form): restarted flexible GMRES on `[[A, -Bᵀ], [B, 0]]`,
//!   right-preconditioned by one reduced solve with `A_h`. MINRES on the
//!   symmetric form is available for diagnostics.

pub mod krylov;

use std::time::Instant;

use crate::assembly::SaddleSystem;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Dense Cholesky factors of the diagonal blocks of a sparse SPD matrix.
///
/// Blocks are the connected components of the sparsity graph, so the
/// factorization is exact whatever the block structure turns out to be.
#[derive(Debug, Clone)]
pub struct BlockDiagFactor {
    n: usize,
    blocks: Vec<Vec<usize>>,
    /// Row-major lower-triangular Cholesky factor per block.
    factors: Vec<Vec<f64>>,
    block_of: Vec<usize>,
    position: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl BlockDiagFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let mut parent: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut block_of = vec![usize::MAX; n];
        let mut position = vec![0; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut root_block = vec![usize::MAX; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if root_block[r] == usize::MAX {
                root_block[r] = blocks.len();
                blocks.push(Vec::new());
            }
            let b = root_block[r];
            block_of[i] = b;
            position[i] = blocks[b].len();
            blocks[b].push(i);
        }
        let mut factors = Vec::with_capacity(blocks.len());
        for (bi, block) in blocks.iter().enumerate() {
            let m = block.len();
            let mut l = vec![0.0; m * m];
            for (p, &i) in block.iter().enumerate() {
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    l[p * m + position[j]] = v;
                }
            }
            cholesky_in_place(&mut l, m).map_err(|pivot| Error::NotPositiveDefinite { block: bi, pivot })?;
            factors.push(l);
        }
        Ok(BlockDiagFactor {
            n,
            blocks,
            factors,
            block_of,
            position,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Solves `A y = x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut buf = Vec::new();
        for (block, l) in self.blocks.iter().zip(&self.factors) {
            buf.clear();
            buf.extend(block.iter().map(|&i| x[i]));
            cholesky_solve(l, block.len(), &mut buf);
            for (&i, &v) in block.iter().zip(&buf) {
                y[i] = v;
            }
        }
    }

    /// `bᵀ A⁻¹ b` for a sparse vector given as `(indices, values)`.
    pub fn quadratic_inverse(&self, idx: &[usize], vals: &[f64]) -> f64 {
        let mut touched: Vec<usize> = idx.iter().map(|&i| self.block_of[i]).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut total = 0.0;
        for b in touched {
            let m = self.blocks[b].len();
            let mut rhs = vec![0.0; m];
            for (&i, &v) in idx.iter().zip(vals) {
                if self.block_of[i] == b {
                    rhs[self.position[i]] += v;
                }
            }
            // ‖L⁻¹ b‖².
            let l = &self.factors[b];
            forward(l, m, &mut rhs);
            total += rhs.iter().map(|v| v * v).sum::<f64>();
        }
        total
    }
}

/// Row-major dense Cholesky; on failure returns the offending pivot.
fn cholesky_in_place(a: &mut [f64], m: usize) -> std::result::Result<(), f64> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return Err(d);
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
        for i in 0..j {
            a[i * m + j] = 0.0;
        }
    }
    Ok(())
}

fn forward(l: &[f64], m: usize, x: &mut [f64]) {
    for i in 0..m {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * m + k] * x[k];
        }
        x[i] = s / l[i * m + i];
    }
}

fn cholesky_solve(l: &[f64], m: usize, x: &mut [f64]) {
    forward(l, m, x);
    for i in (0..m).rev() {
        let mut s = x[i];
        for k in i + 1..m {
            s -= l[k * m + i] * x[k];
        }
        x[i] = s / l[i * m + i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    /// Schur complement of the multipoint stress system.
    Reduced,
    /// Preconditioned GMRES on the full mixed system.
    Full,
    /// Unpreconditioned MINRES on the full mixed system.
    FullMinres,
}

impl SolverPath {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverPath::Reduced => "reduced",
            SolverPath::Full => "full",
            SolverPath::FullMinres => "full-minres",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub path: SolverPath,
    pub iterations: usize,
    /// Total inner CG iterations (full path only).
    pub inner_iterations: usize,
    /// Final relative residual of the solved system.
    pub residual: f64,
    pub converged: bool,
    pub seconds: f64,
    pub schur_dim: usize,
    pub full_dim: usize,
}

/// Schur complement `S = B A_h⁻¹ Bᵀ` as a matrix-free operator.
pub struct SchurOperator<'a> {
    b: &'a CsrMatrix,
    factor: &'a BlockDiagFactor,
    diag: Vec<f64>,
}

impl<'a> SchurOperator<'a> {
    pub fn new(b: &'a CsrMatrix, factor: &'a BlockDiagFactor) -> Self {
        let diag = (0..b.nrows())
            .map(|i| {
                let (cols, vals) = b.row(i);
                factor.quadratic_inverse(cols, vals)
            })
            .collect();
        SchurOperator { b, factor, diag }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Exact diagonal of `S`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, v: &[f64], y: &mut [f64]) {
        let nx = self.b.ncols();
        let mut t = vec![0.0; nx];
        let mut z = vec![0.0; nx];
        self.b.matvec_transpose(v, &mut t);
        self.factor.apply(&t, &mut z);
        self.b.matvec(&z, y);
    }

    /// Solves `S v = rhs` by Jacobi-preconditioned CG from a zero guess.
    pub fn solve(&self, rhs: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, krylov::KrylovOutcome) {
        let mut v = vec![0.0; rhs.len()];
        let diag = &self.diag;
        let out = krylov::cg(
            |x, y| self.apply(x, y),
            |r, z| {
                for i in 0..r.len() {
                    z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { r[i] };
                }
            },
            rhs,
            &mut v,
            tol,
            max_iter,
        );
        (v, out)
    }
}

/// Default iteration cap `20 √n`.
pub fn default_max_iter(n: usize) -> usize {
    ((20.0 * (n as f64).sqrt()).ceil() as usize).max(50)
}

/// Solves `S v̂ = f - B A_h⁻¹ g` for the multipoint system.
pub fn schur_solve(system: &SaddleSystem, factor: &BlockDiagFactor, tol: f64) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let s = SchurOperator::new(&system.b, factor);
    let nx = system.layout.x_dim();
    let mut ag = vec![0.0; nx];
    factor.apply(&system.g, &mut ag);
    let bag = system.b.mul_vec(&ag);
    let rhs: Vec<f64> = system.f.iter().zip(&bag).map(|(f, b)| f - b).collect();
    let (v, out) = s.solve(&rhs, tol, default_max_iter(rhs.len()));
    let report = SolverReport {
        path: SolverPath::Reduced,
        iterations: out.iterations,
        inner_iterations: 0,
        residual: out.residual,
        converged: out.converged,
        seconds: start.elapsed().as_secs_f64(),
        schur_dim: system.layout.y_dim(),
        full_dim: system.layout.full_dim(),
    };
    (v, report)
}

/// `η̂ = A_h⁻¹ (Bᵀ v̂ + g)`.
pub fn postprocess_stress(system: &SaddleSystem, factor: &BlockDiagFactor, v: &[f64]) -> Vec<f64> {
    let nx = system.layout.x_dim();
    let mut t = vec![0.0; nx];
    system.b.matvec_transpose(v, &mut t);
    for (ti, gi) in t.iter_mut().zip(&system.g) {
        *ti += gi;
    }
    let mut eta = vec![0.0; nx];
    factor.apply(&t, &mut eta);
    eta
}

/// Reduced multipoint solve of a full system: factors `A` (which must be
/// block diagonal in practice), solves the Schur complement and recovers
/// the stresses. Returns `[η; v]`.
pub fn reduced_solve(system: &SaddleSystem, tol: f64) -> Result<(Vec<f64>, SolverReport)> {
    let start = Instant::now();
    let factor = BlockDiagFactor::new(&system.a)?;
    let (v, mut report) = schur_solve(system, &factor, tol);
    let mut x = postprocess_stress(system, &factor, &v);
    x.extend_from_slice(&v);
    report.seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Relative residual `‖K x - rhs‖ / ‖rhs‖` of the full system, in the
/// given norm (`p = 2` or `p = ∞`, encoded as `f64::INFINITY`).
pub fn full_residual(system: &SaddleSystem, x: &[f64], p: f64) -> f64 {
    let k = system.full_matrix();
    let rhs = system.full_rhs();
    let kx = k.mul_vec(x);
    let r: Vec<f64> = kx.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let norm = |v: &[f64]| {
        if p.is_infinite() {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            krylov::norm(v)
        }
    };
    let nr = norm(&rhs);
    if nr == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nr
    }
}

/// Options of the preconditioned full solve.
#[derive(Debug, Clone, Copy)]
pub struct FullSolveOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Relative tolerance of the inner Schur complement solves.
    pub inner_tol: f64,
}

impl Default for FullSolveOptions {
    fn default() -> Self {
        FullSolveOptions {
            tol: 1e-10,
            restart: 100,
            max_iter: 1000,
            inner_tol: 1e-8,
        }
    }
}

/// GMRES on `[[A, -Bᵀ], [B, 0]]` right-preconditioned by the multipoint
/// system `[[A_h, -Bᵀ], [B, 0]]` (one Schur complement solve per
/// application). Returns `[η; v]`.
pub fn full_saddle_solve(
    system: &SaddleSystem,
    a_h: &CsrMatrix,
    opts: &FullSolveOptions,
) -> Result<(Vec<f64>, SolverReport)> {
    let start = Instant::now();
    let factor = BlockDiagFactor::new(a_h)?;
    let schur = SchurOperator::new(&system.b, &factor);
    let nx = system.layout.x_dim();
    let ny = system.layout.y_dim();
    let k = system.full_matrix();
    let rhs = system.full_rhs();
    let mut inner = 0usize;
    let inner_max = default_max_iter(ny) * 2;
    let mut x = vec![0.0; nx + ny];
    let out = krylov::fgmres(
        |v, y| k.matvec(v, y),
        |r, z| {
            // A_h zx - Bᵀ zy = rx,  B zx = ry.
            let (rx, ry) = r.split_at(nx);
            let mut t = vec![0.0; nx];
            factor.apply(rx, &mut t);
            let bt = system.b.mul_vec(&t);
            let srhs: Vec<f64> = ry.iter().zip(&bt).map(|(a, b)| a - b).collect();
            let (zy, o) = schur.solve(&srhs, opts.inner_tol, inner_max);
            inner += o.iterations;
            let mut s = vec![0.0; nx];
            system.b.matvec_transpose(&zy, &mut s);
            for (si, ri) in s.iter_mut().zip(rx) {
                *si += ri;
            }
            let (zx, zyy) = z.split_at_mut(nx);
            factor.apply(&s, zx);
            zyy.copy_from_slice(&zy);
        },
        &rhs,
        &mut x,
        opts.tol,
        opts.restart,
        opts.max_iter,
    );
    let report = SolverReport {
        path: SolverPath::Full,
        iterations: out.iterations,
        inner_iterations: inner,
        residual: out.residual,
        converged: out.converged,
        seconds: start.elapsed().as_secs_f64(),
        schur_dim: ny,
        full_dim: nx + ny,
    };
    Ok((x, report))
}

/// Unpreconditioned MINRES on the symmetric form `[[A, -Bᵀ], [-B, 0]]`.
pub fn full_saddle_solve_minres(system: &SaddleSystem, tol: f64, max_iter: usize) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let nx = system.layout.x_dim();
    let ny = system.layout.y_dim();
    let k = system.full_matrix();
    let mut rhs = system.full_rhs();
    rhs[nx..].iter_mut().for_each(|v| *v = -*v);
    let mut x = vec![0.0; nx + ny];
    let out = krylov::minres(
        |v, y| {
            k.matvec(v, y);
            y[nx..].iter_mut().for_each(|v| *v = -*v);
        },
        &rhs,
        &mut x,
        tol,
        max_iter,
    );
    let report = SolverReport {
        path: SolverPath::FullMinres,
        iterations: out.iterations,
        inner_iterations: 0,
        residual: out.residual,
        converged: out.converged,
        seconds: start.elapsed().as_secs_f64(),
        schur_dim: ny,
        full_dim: nx + ny,
    };
    (x, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    #[test]
    fn diagonal_matrix_has_unit_blocks() {
        let mut t = TripletBuilder::new(3, 3);
        for (i, v) in [2.0, 4.0, 5.0].iter().enumerate() {
            t.push(i, i, *v);
        }
        let f = BlockDiagFactor::new(&t.build()).unwrap();
        assert_eq!(f.num_blocks(), 3);
        let mut y = vec![0.0; 3];
        f.apply(&[2.0, 2.0, 10.0], &mut y);
        for (a, b) in y.iter().zip([1.0, 0.5, 2.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_block_is_reported() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 0, 2.0);
        t.push(1, 1, 1.0);
        let err = BlockDiagFactor::new(&t.build()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { block: 0, .. }));
    }
}
