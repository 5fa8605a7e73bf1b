//! Matrix-free Krylov methods. Operators are passed as closures
//! `apply(x, y)` computing `y = A x`.

/// Outcome of an iterative solve. `residual` is relative to the norm of the
/// right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s x`.
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Preconditioned conjugate gradients for SPD `A` with SPD preconditioner
/// `precond` (an approximation of `A⁻¹`). `x` holds the initial guess on
/// entry and the solution on exit.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    let mut it = 0;
    while res > tol && it < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        it += 1;
        res = norm(&r) / bnorm;
        if res <= tol {
            break;
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    KrylovOutcome {
        iterations: it,
        residual: res,
        converged: res <= tol,
    }
}

/// Restarted flexible GMRES with right preconditioning. The preconditioner
/// may change between iterations (for instance an inner iterative solve).
pub fn fgmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut total = 0;
    let mut tmp = vec![0.0; n];
    loop {
        apply(x, &mut tmp);
        let r: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let res = beta / bnorm;
        if res <= tol || total >= max_iter {
            return KrylovOutcome {
                iterations: total,
                residual: res,
                converged: res <= tol,
            };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iter {
            let mut zk = vec![0.0; n];
            precond(&v[k], &mut zk);
            let mut w = vec![0.0; n];
            apply(&zk, &mut w);
            z.push(zk);
            let mut hk = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                hk[i] = dot(&w, vi);
                axpy(-hk[i], vi, &mut w);
            }
            // One reorthogonalization pass keeps the basis orthonormal.
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                hk[i] += c;
                axpy(-c, vi, &mut w);
            }
            hk[k + 1] = norm(&w);
            for i in 0..k {
                let t = cs[i] * hk[i] + sn[i] * hk[i + 1];
                hk[i + 1] = -sn[i] * hk[i] + cs[i] * hk[i + 1];
                hk[i] = t;
            }
            let rho = hk[k].hypot(hk[k + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (hk[k] / rho, hk[k + 1] / rho) };
            let lucky = hk[k + 1] == 0.0;
            if !lucky {
                v.push(w.iter().map(|wi| wi / hk[k + 1]).collect());
            }
            hk[k] = rho;
            hk[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(hk);
            k += 1;
            total += 1;
            if g[k].abs() / bnorm <= tol || lucky {
                break;
            }
        }
        // Back substitution on the triangular Hessenberg factor.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, zj) in z.iter().enumerate() {
            axpy(y[j], zj, x);
        }
    }
}

/// Unpreconditioned MINRES for symmetric (possibly indefinite) `A`.
pub fn minres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut tmp = vec![0.0; n];
    apply(x, &mut tmp);
    let r: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect();
    let beta1 = norm(&r);
    if beta1 / bnorm <= tol {
        return KrylovOutcome {
            iterations: 0,
            residual: beta1 / bnorm,
            converged: true,
        };
    }
    let mut v_prev = vec![0.0; n];
    let mut v: Vec<f64> = r.iter().map(|ri| ri / beta1).collect();
    let mut beta = 0.0;
    let (mut c1, mut s1, mut c2, mut s2) = (1.0, 0.0, 1.0, 0.0);
    let mut w_prev = vec![0.0; n];
    let mut w_prev2 = vec![0.0; n];
    let mut eta = beta1;
    let mut av = vec![0.0; n];
    let mut it = 0;
    while it < max_iter {
        apply(&v, &mut av);
        let alpha = dot(&v, &av);
        let mut v_next = av.clone();
        axpy(-alpha, &v, &mut v_next);
        axpy(-beta, &v_prev, &mut v_next);
        let beta_next = norm(&v_next);

        let eps = s2 * beta;
        let delta_bar = c2 * beta;
        let delta = c1 * delta_bar + s1 * alpha;
        let gamma_bar = -s1 * delta_bar + c1 * alpha;
        let gamma = gamma_bar.hypot(beta_next);
        if gamma == 0.0 {
            break;
        }
        let (c, s) = (gamma_bar / gamma, beta_next / gamma);
        let w: Vec<f64> = (0..n)
            .map(|i| (v[i] - delta * w_prev[i] - eps * w_prev2[i]) / gamma)
            .collect();
        axpy(c * eta, &w, x);
        eta *= -s;
        it += 1;
        if eta.abs() / bnorm <= tol || beta_next == 0.0 {
            break;
        }
        w_prev2 = std::mem::replace(&mut w_prev, w);
        c2 = c1;
        s2 = s1;
        c1 = c;
        s1 = s;
        v_prev = std::mem::replace(&mut v, v_next.iter().map(|vi| vi / beta_next).collect());
        beta = beta_next;
    }
    apply(x, &mut tmp);
    let true_res = norm(&b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
    KrylovOutcome {
        iterations: it,
        residual: true_res,
        converged: true_res <= tol,
    }
}

/// Smallest eigenvalue of the symmetric-definite pencil `S x = μ M x` by
/// Lanczos in the `M` inner product with full reorthogonalization.
///
/// `apply_s` computes `S x`, `solve_m` computes `M⁻¹ y` and `apply_m`
/// computes `M x`. Iterates until the smallest Ritz value changes by less
/// than `tol` (relative) over five steps, or `max_steps` is reached.
pub fn lanczos_smallest(
    mut apply_s: impl FnMut(&[f64], &mut [f64]),
    mut solve_m: impl FnMut(&[f64], &mut [f64]),
    mut apply_m: impl FnMut(&[f64], &mut [f64]),
    start: &[f64],
    tol: f64,
    max_steps: usize,
) -> f64 {
    let n = start.len();
    let mut mv = vec![0.0; n];
    apply_m(start, &mut mv);
    let nrm = dot(start, &mv).sqrt();
    let mut q: Vec<Vec<f64>> = vec![start.iter().map(|v| v / nrm).collect()];
    let mut mq: Vec<Vec<f64>> = vec![mv.iter().map(|v| v / nrm).collect()];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut sv = vec![0.0; n];
    let mut w = vec![0.0; n];
    let steps = max_steps.min(n);
    for k in 0..steps {
        apply_s(&q[k], &mut sv);
        solve_m(&sv, &mut w);
        let alpha = dot(&q[k], &sv);
        alphas.push(alpha);
        // Full reorthogonalization (twice) in the M inner product.
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(&mq) {
                let c = dot(&w, mqi);
                axpy(-c, qi, &mut w);
            }
        }
        apply_m(&w, &mut mv);
        let beta = dot(&w, &mv).max(0.0).sqrt();
        let ritz = smallest_tridiagonal_eigenvalue(&alphas, &betas);
        history.push(ritz);
        if history.len() > 5 {
            let old = history[history.len() - 6];
            if ((old - ritz) / ritz).abs() < tol {
                return ritz;
            }
        }
        if beta <= 1e-14 * alpha.abs() || k + 1 == steps {
            return ritz;
        }
        betas.push(beta);
        q.push(w.iter().map(|v| v / beta).collect());
        mq.push(mv.iter().map(|v| v / beta).collect());
    }
    *history.last().unwrap_or(&f64::NAN)
}

fn smallest_tridiagonal_eigenvalue(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace_1d(n: usize) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 2.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        }
    }

    fn residual(a: impl Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64]) -> f64 {
        let mut y = vec![0.0; b.len()];
        a(x, &mut y);
        norm(&b.iter().zip(&y).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(b)
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let out = cg(laplace_1d(n), |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, 200);
        assert!(out.converged);
        assert!(residual(laplace_1d(n), &b, &x) < 1e-11);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![1.0; 4];
        let out = cg(laplace_1d(4), |r, z| z.copy_from_slice(r), &[0.0; 4], &mut x, 1e-10, 10);
        assert_eq!(out.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }

    /// Indefinite saddle matrix [[I, Bᵀ], [B, 0]] solved by GMRES and MINRES.
    #[test]
    fn indefinite_solvers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, m) = (30, 10);
        let bmat: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let op = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = x[i] + (0..m).map(|j| bmat[j][i] * x[n + j]).sum::<f64>();
            }
            for j in 0..m {
                y[n + j] = (0..n).map(|i| bmat[j][i] * x[i]).sum();
            }
        };
        let rhs: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; n + m];
        let out = fgmres(op, |r, z| z.copy_from_slice(r), &rhs, &mut x, 1e-11, 15, 400);
        assert!(out.converged, "{out:?}");
        assert!(residual(op, &rhs, &x) < 1e-10);
        let mut x = vec![0.0; n + m];
        let out = minres(op, &rhs, &mut x, 1e-11, 400);
        assert!(out.converged, "{out:?}");
        assert!(residual(op, &rhs, &x) < 1e-10);
    }

    #[test]
    fn lanczos_finds_smallest_generalized_eigenvalue() {
        let n = 40;
        // S = 1D Laplacian, M = diag(1 + i/n).
        let mdiag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mu = lanczos_smallest(
            laplace_1d(n),
            |y, x| (0..n).for_each(|i| x[i] = y[i] / mdiag[i]),
            |x, y| (0..n).for_each(|i| y[i] = x[i] * mdiag[i]),
            &start,
            1e-12,
            n,
        );
        let mut s = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = 2.0 / mdiag[i];
            if i + 1 < n {
                let v = -1.0 / (mdiag[i] * mdiag[i + 1]).sqrt();
                s[(i, i + 1)] = v;
                s[(i + 1, i)] = v;
            }
        }
        let exact = s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(((mu - exact) / exact).abs() < 1e-8, "{mu} vs {exact}");
    }
}
