//! Fixed-size vectors and matrices padded to three components.
//!
//! Two-dimensional quantities use the leading `2` entries (or the leading
//! `2 x 2` block); the remaining entries are kept at zero. This lets the
//! 2D and 3D code paths share one set of kernels.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0; 3];
pub const ZERO33: Mat3 = [[0.0; 3]; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

#[inline]
pub fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            out[j] += m[i][j] * v[i];
        }
    }
    out
}

/// Frobenius product `a : b`.
#[inline]
pub fn ddot(a: &Mat3, b: &Mat3) -> f64 {
    dot(&a[0], &b[0]) + dot(&a[1], &b[1]) + dot(&a[2], &b[2])
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut t = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Determinant of the leading `d x d` block.
pub fn det(m: &Mat3, d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Inverse of the leading `d x d` block (zero padding elsewhere).
pub fn inverse(m: &Mat3, d: usize) -> Mat3 {
    let det = det(m, d);
    let mut inv = ZERO33;
    match d {
        1 => inv[0][0] = 1.0 / det,
        2 => {
            inv[0][0] = m[1][1] / det;
            inv[0][1] = -m[0][1] / det;
            inv[1][0] = -m[1][0] / det;
            inv[1][1] = m[0][0] / det;
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                }
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_3d_roundtrip() {
        let m = [[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, -1.0, 4.0]];
        let inv = inverse(&m, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[i][k] * inv[k][j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_2d_keeps_padding() {
        let m = [[2.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 0.0]];
        let inv = inverse(&m, 2);
        assert!((det(&m, 2) - 5.0).abs() < 1e-15);
        assert_eq!(inv[2], [0.0; 3]);
        assert!((inv[0][0] - 0.6).abs() < 1e-15);
    }
}
