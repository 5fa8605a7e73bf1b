//! Material laws, length scales and manufactured solutions of the linear
//! Cosserat problem
//!
//! ```text
//! A_σ σ - ∇u - asym* r = 0,     A_ω ω - ℓ ∇r = 0,
//! -∇·σ = f_σ,                   asym σ - ∇·(ℓ ω) = f_ω.
//! ```
//!
//! Rotations have `k_d` components (1 in 2D, 3 in 3D). The couple stress
//! `ω` has `k_d` rows; in 2D it is a single row vector. Gradients and
//! divergences act row-wise: `(∇r)_{mj} = ∂_j r_m`.
//!
//! Exact fields are written once over a [`Real`] scalar so that the same
//! code evaluates values (`f64`) and derivatives (forward-mode [`Dual`]
//! numbers, nested for second derivatives). The forcing terms are therefore
//! exact up to rounding.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::tensor::{Mat3, Vec3, ZERO3};

/// Scalar arithmetic needed by the exact-solution code.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Forward-mode dual number `re + eps ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    pub fn var(re: T) -> Self {
        Dual { re, eps: T::cst(1.0) }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual {
            re: self.re + o.re,
            eps: self.eps + o.eps,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual {
            re: self.re - o.re,
            eps: self.eps - o.eps,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re * o.re,
            eps: self.re * o.eps + self.eps * o.re,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Dual {
            re: self.re / o.re,
            eps: (self.eps * o.re - self.re * o.eps) / (o.re * o.re),
        }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual {
            re: T::cst(v),
            eps: T::cst(0.0),
        }
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.eps * self.re.cos(),
        }
    }
    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: -(self.eps * self.re.sin()),
        }
    }
}

pub type RVec<T> = [T; 3];
pub type RMat<T> = [[T; 3]; 3];

fn zeros<T: Real>() -> RMat<T> {
    [[T::cst(0.0); 3]; 3]
}

/// Number of rotation components: 1 in 2D, 3 in 3D.
pub fn rotation_dim(d: usize) -> usize {
    if d == 2 {
        1
    } else {
        3
    }
}

pub fn trace<T: Real>(t: &RMat<T>, d: usize) -> T {
    (1..d).fold(t[0][0], |s, i| s + t[i][i])
}

pub fn sym<T: Real>(t: &RMat<T>) -> RMat<T> {
    let mut s = zeros();
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = (t[i][j] + t[j][i]) * T::cst(0.5);
        }
    }
    s
}

pub fn skw<T: Real>(t: &RMat<T>) -> RMat<T> {
    let mut s = zeros();
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = (t[i][j] - t[j][i]) * T::cst(0.5);
        }
    }
    s
}

/// `asym τ`: `τ_21 - τ_12` in 2D, `(τ_32 - τ_23, τ_13 - τ_31, τ_21 - τ_12)` in 3D
/// (1-based indices).
pub fn asym<T: Real>(t: &RMat<T>, d: usize) -> RVec<T> {
    let z = T::cst(0.0);
    if d == 2 {
        [t[1][0] - t[0][1], z, z]
    } else {
        [t[2][1] - t[1][2], t[0][2] - t[2][0], t[1][0] - t[0][1]]
    }
}

/// Adjoint of [`asym`].
pub fn asym_star<T: Real>(r: &RVec<T>, d: usize) -> RMat<T> {
    let z = T::cst(0.0);
    if d == 2 {
        [[z, -r[0], z], [r[0], z, z], [z, z, z]]
    } else {
        [[z, -r[2], r[1]], [r[2], z, -r[0]], [-r[1], r[0], z]]
    }
}

/// Lamé-type parameters of the stress and couple-stress laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub mu_sigma: f64,
    pub mu_c_sigma: f64,
    pub lambda_sigma: f64,
    pub mu_omega: f64,
    pub mu_c_omega: f64,
    pub lambda_omega: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            mu_sigma: 1.0,
            mu_c_sigma: 0.1,
            lambda_sigma: 1.0,
            mu_omega: 1.0,
            mu_c_omega: 0.1,
            lambda_omega: 1.0,
        }
    }
}

/// `2μ sym τ + 2μᶜ skw τ + λ (Tr τ) I`.
fn cosserat_law<T: Real>(mu: f64, mu_c: f64, lambda: f64, t: &RMat<T>, d: usize) -> RMat<T> {
    let (s, k) = (sym(t), skw(t));
    let tr = trace(t, d);
    let mut out = zeros();
    for i in 0..d {
        for j in 0..d {
            out[i][j] = s[i][j] * T::cst(2.0 * mu) + k[i][j] * T::cst(2.0 * mu_c);
        }
        out[i][i] = out[i][i] + tr * T::cst(lambda);
    }
    out
}

/// Inverse of [`cosserat_law`].
fn cosserat_compliance<T: Real>(mu: f64, mu_c: f64, lambda: f64, t: &RMat<T>, d: usize) -> RMat<T> {
    let (s, k) = (sym(t), skw(t));
    let alpha = lambda / (2.0 * mu + d as f64 * lambda);
    let tr = trace(t, d);
    let mut out = zeros();
    for i in 0..d {
        for j in 0..d {
            out[i][j] = s[i][j] * T::cst(1.0 / (2.0 * mu)) + k[i][j] * T::cst(1.0 / (2.0 * mu_c));
        }
        out[i][i] = out[i][i] - tr * T::cst(alpha / (2.0 * mu));
    }
    out
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("mu_sigma", self.mu_sigma),
            ("mu_c_sigma", self.mu_c_sigma),
            ("mu_omega", self.mu_omega),
            ("mu_c_omega", self.mu_c_omega),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("lambda_sigma", self.lambda_sigma), ("lambda_omega", self.lambda_omega)] {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn c_sigma<T: Real>(&self, t: &RMat<T>, d: usize) -> RMat<T> {
        cosserat_law(self.mu_sigma, self.mu_c_sigma, self.lambda_sigma, t, d)
    }

    pub fn a_sigma<T: Real>(&self, t: &RMat<T>, d: usize) -> RMat<T> {
        cosserat_compliance(self.mu_sigma, self.mu_c_sigma, self.lambda_sigma, t, d)
    }

    /// `2μ_ω τ` in 2D (τ is a single row), the Cosserat law in 3D.
    pub fn c_omega<T: Real>(&self, t: &RMat<T>, d: usize) -> RMat<T> {
        if d == 2 {
            let mut out = zeros();
            for j in 0..2 {
                out[0][j] = t[0][j] * T::cst(2.0 * self.mu_omega);
            }
            out
        } else {
            cosserat_law(self.mu_omega, self.mu_c_omega, self.lambda_omega, t, d)
        }
    }

    pub fn a_omega<T: Real>(&self, t: &RMat<T>, d: usize) -> RMat<T> {
        if d == 2 {
            let mut out = zeros();
            for j in 0..2 {
                out[0][j] = t[0][j] * T::cst(1.0 / (2.0 * self.mu_omega));
            }
            out
        } else {
            cosserat_compliance(self.mu_omega, self.mu_c_omega, self.lambda_omega, t, d)
        }
    }

    /// `α_σ = λ / (2μ + dλ)`.
    pub fn alpha_sigma(&self, d: usize) -> f64 {
        self.lambda_sigma / (2.0 * self.mu_sigma + d as f64 * self.lambda_sigma)
    }

    /// `β_σ = (μ - μᶜ) / (2 μ μᶜ)`.
    pub fn beta_sigma(&self) -> f64 {
        (self.mu_sigma - self.mu_c_sigma) / (2.0 * self.mu_sigma * self.mu_c_sigma)
    }
}

/// Smooth transition `ϖ(x_1)`: 0 below 1/3, 1 above 2/3 and
/// `sin²(π/2 (3x_1 - 1))` in between.
pub fn varpi<T: Real>(x1: T) -> T {
    let v = x1.value();
    if v < 1.0 / 3.0 {
        T::cst(0.0)
    } else if v < 2.0 / 3.0 {
        let s = ((x1 * T::cst(3.0) - T::cst(1.0)) * T::cst(PI / 2.0)).sin();
        s * s
    } else {
        T::cst(1.0)
    }
}

/// `dϖ/dx_1 = (3π/2) sin(π (3x_1 - 1))` on the transition, 0 elsewhere.
pub fn varpi_grad(x1: f64) -> f64 {
    if (1.0 / 3.0..2.0 / 3.0).contains(&x1) {
        1.5 * PI * (PI * (3.0 * x1 - 1.0)).sin()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthScale {
    Constant(f64),
    /// `ϖ(x_1)`.
    SmoothStep,
}

impl LengthScale {
    pub fn eval<T: Real>(&self, x: &RVec<T>) -> T {
        match *self {
            LengthScale::Constant(c) => T::cst(c),
            LengthScale::SmoothStep => varpi(x[0]),
        }
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        self.eval(x)
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        match *self {
            LengthScale::Constant(_) => ZERO3,
            LengthScale::SmoothStep => [varpi_grad(x[0]), 0.0, 0.0],
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, LengthScale::Constant(c) if c == 0.0)
    }
}

/// Which displacement/rotation pair is prescribed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solution {
    /// The trigonometric-polynomial fields vanishing on the boundary.
    Standard,
    /// `u = 0`, `r = 0`.
    Zero,
}

/// Exact values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: Vec3,
    pub r: Vec3,
    pub sigma: Mat3,
    pub omega: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub dim: usize,
    pub params: MaterialParams,
    pub ell: LengthScale,
    pub solution: Solution,
}

fn bump<T: Real>(x: T) -> T {
    x * (T::cst(1.0) - x)
}

fn sin_pi<T: Real>(x: T) -> T {
    (x * T::cst(PI)).sin()
}

/// Partial derivatives of a vector-valued function: `out[m][j] = ∂_j f_m`.
fn jacobian<T: Real>(d: usize, x: &RVec<T>, f: impl Fn(&RVec<Dual<T>>) -> RVec<Dual<T>>) -> RMat<T> {
    let mut out = zeros();
    for j in 0..d {
        let mut xd = x.map(|v| Dual { re: v, eps: T::cst(0.0) });
        xd[j].eps = T::cst(1.0);
        let fx = f(&xd);
        for m in 0..3 {
            out[m][j] = fx[m].eps;
        }
    }
    out
}

/// Row-wise divergence of a matrix-valued function.
fn divergence(d: usize, x: &Vec3, f: impl Fn(&RVec<Dual<f64>>) -> RMat<Dual<f64>>) -> Vec3 {
    let mut out = ZERO3;
    for j in 0..d {
        let mut xd = x.map(|v| Dual { re: v, eps: 0.0 });
        xd[j].eps = 1.0;
        let fx = f(&xd);
        for m in 0..3 {
            out[m] += fx[m][j].eps;
        }
    }
    out
}

fn to_f64<T: Real>(m: &RMat<T>) -> Mat3 {
    m.map(|row| row.map(|v| v.value()))
}

impl ManufacturedCase {
    pub fn new(dim: usize, ell: LengthScale) -> Self {
        ManufacturedCase {
            dim,
            params: MaterialParams::default(),
            ell,
            solution: Solution::Standard,
        }
    }

    pub fn u<T: Real>(&self, x: &RVec<T>) -> RVec<T> {
        let z = T::cst(0.0);
        let d = self.dim;
        let mut out = [z; 3];
        if self.solution == Solution::Zero {
            return out;
        }
        for i in 0..d {
            let next = x[(i + 1) % d];
            out[i] = if d == 2 {
                bump(next) * sin_pi(x[i])
            } else {
                bump(next) * bump(x[(i + d - 1) % d]) * sin_pi(x[i])
            };
        }
        out
    }

    pub fn r<T: Real>(&self, x: &RVec<T>) -> RVec<T> {
        let z = T::cst(0.0);
        let mut out = [z; 3];
        if self.solution == Solution::Zero {
            return out;
        }
        if self.dim == 2 {
            out[0] = sin_pi(x[0]) * sin_pi(x[1]);
        } else {
            for i in 0..3 {
                out[i] = bump(x[i]) * sin_pi(x[(i + 1) % 3]) * sin_pi(x[(i + 2) % 3]);
            }
        }
        out
    }

    /// `σ = C_σ(∇u + asym* r)`.
    pub fn sigma<T: Real>(&self, x: &RVec<T>) -> RMat<T> {
        let d = self.dim;
        let mut e = jacobian(d, x, |y| self.u(y));
        let a = asym_star(&self.r(x), d);
        for i in 0..d {
            for j in 0..d {
                e[i][j] = e[i][j] + a[i][j];
            }
        }
        self.params.c_sigma(&e, d)
    }

    /// `ω = ℓ C_ω ∇r`.
    pub fn omega<T: Real>(&self, x: &RVec<T>) -> RMat<T> {
        let d = self.dim;
        let g = jacobian(d, x, |y| self.r(y));
        let l = self.ell.eval(x);
        self.params.c_omega(&g, d).map(|row| row.map(|v| v * l))
    }

    pub fn exact(&self, x: &Vec3) -> ExactFields {
        ExactFields {
            u: self.u(x),
            r: self.r(x),
            sigma: to_f64(&self.sigma(x)),
            omega: to_f64(&self.omega(x)),
        }
    }

    /// `(f_σ, f_ω) = (-∇·σ, asym σ - ∇·(ℓω))`.
    pub fn forcing(&self, x: &Vec3) -> (Vec3, Vec3) {
        let d = self.dim;
        let div_sigma = divergence(d, x, |y| self.sigma(y));
        let div_ell_omega = divergence(d, x, |y| {
            let l = self.ell.eval(y);
            self.omega(y).map(|row| row.map(|v| v * l))
        });
        let a = asym(&self.sigma(x), d);
        let mut f_sigma = ZERO3;
        let mut f_omega = ZERO3;
        for i in 0..d {
            f_sigma[i] = -div_sigma[i];
        }
        for m in 0..rotation_dim(d) {
            f_omega[m] = a[m] - div_ell_omega[m];
        }
        (f_sigma, f_omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn asym_examples() {
        let t = [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(asym(&t, 2)[0], 1.0);
        let s = asym_star(&[1.0, 0.0, 0.0], 3);
        assert_eq!(s, [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
    }

    #[test]
    fn compliance_examples() {
        let p = MaterialParams::default();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        let a = p.a_sigma(&id, 2);
        assert!(close(&a, &[[0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0; 3]], 1e-15));
        let rot = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]];
        let a = p.a_sigma(&rot, 2);
        assert!(close(&a, &[[0.0, -5.0, 0.0], [5.0, 0.0, 0.0], [0.0; 3]], 1e-14));
        assert_eq!(p.a_sigma(&[[0.0; 3]; 3], 3), [[0.0; 3]; 3]);
    }

    #[test]
    fn varpi_values() {
        assert_eq!(varpi(0.2), 0.0);
        assert!((varpi(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(varpi(0.9), 1.0);
        let d = varpi(Dual::var(0.45)).eps;
        assert!((d - varpi_grad(0.45)).abs() < 1e-14);
    }

    #[test]
    fn exact_fields_at_center() {
        let case = ManufacturedCase::new(2, LengthScale::Constant(1.0));
        let f = case.exact(&[0.5, 0.5, 0.0]);
        assert!((f.u[0] - 0.25).abs() < 1e-15 && (f.u[1] - 0.25).abs() < 1e-15);
        assert!((f.r[0] - 1.0).abs() < 1e-15);
        let (fs, _) = case.forcing(&[0.5, 0.5, 0.0]);
        assert!((fs[0] - fs[1]).abs() < 1e-12);
    }

    #[test]
    fn elasticity_limit_has_no_couple_stress() {
        let case = ManufacturedCase::new(3, LengthScale::Constant(0.0));
        let x = [0.3, 0.6, 0.2];
        assert_eq!(case.exact(&x).omega, [[0.0; 3]; 3]);
        let (_, fw) = case.forcing(&x);
        let a = asym(&case.exact(&x).sigma, 3);
        for m in 0..3 {
            assert!((fw[m] - a[m]).abs() < 1e-14);
        }
    }
}
