//! Randomized invariants of the algebra, the elements and the rules.

use std::sync::Arc;

use cosserat_core::fespace::{Family, FeSpace};
use cosserat_core::mesh::{build_structured_cube, build_structured_square, Mesh};
use cosserat_core::model::{asym, asym_star, MaterialParams};
use cosserat_core::quadrature::{gauss_rule, q2_rule, reference_measure};
use cosserat_core::tensor::{dot, Mat3};
use proptest::prelude::*;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn matrix() -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-10.0f64..10.0))
}

/// Barycentric coordinates in cell `c` of the facet point with vertex weights `weights`.
fn bary_on_facet(mesh: &Mesh, c: usize, facet: &[usize], weights: &[f64]) -> [f64; 4] {
    let mut b = [0.0; 4];
    for (&v, &w) in facet.iter().zip(weights) {
        let i = mesh.cell(c).iter().position(|&x| x == v).unwrap();
        b[i] = w;
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn asym_of_adjoint_doubles(r in prop::array::uniform3(-10.0f64..10.0), d in 2usize..=3) {
        let mut r = r;
        if d == 2 {
            r[1] = 0.0;
            r[2] = 0.0;
        }
        let back = asym(&asym_star(&r, d), d);
        for k in 0..3 {
            prop_assert!((back[k] - 2.0 * r[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn compliance_inverts_stiffness(t in matrix(), d in 2usize..=3) {
        let mut t = t;
        for i in 0..3 {
            for j in 0..3 {
                if i >= d || j >= d {
                    t[i][j] = 0.0;
                }
            }
        }
        let p = MaterialParams::default();
        let back = p.c_sigma(&p.a_sigma(&t, d), d);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((back[i][j] - t[i][j]).abs() < 1e-10);
            }
        }
        if d == 3 {
            let back = p.c_omega(&p.a_omega(&t, d), d);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((back[i][j] - t[i][j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gauss_rules_integrate_monomials(a in 0usize..=3, b in 0usize..=3, c in 0usize..=3, d in 2usize..=3) {
        let deg = a + b + if d == 3 { c } else { 0 };
        prop_assume!(deg <= 6);
        let rule = gauss_rule(d, deg).unwrap();
        let e = [a, b, if d == 3 { c } else { 0 }];
        let got: f64 = rule
            .iter()
            .map(|(p, w)| w * (0..d).map(|k| p[k].powi(e[k] as i32)).product::<f64>())
            .sum();
        let want = reference_measure(d) * factorial(d) * e.iter().map(|&k| factorial(k)).product::<f64>()
            / factorial(deg + d);
        prop_assert!((got - want).abs() < 1e-13, "{} vs {}", got, want);
    }

    #[test]
    fn centroid_rule_is_exact_for_quadratics(a in 0usize..=2, b in 0usize..=2, d in 2usize..=3) {
        prop_assume!(a + b <= 2);
        let rule = q2_rule(d).unwrap();
        let got: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
        let want = reference_measure(d) * factorial(d) * factorial(a) * factorial(b) / factorial(a + b + d);
        prop_assert!((got - want).abs() < 1e-14);
    }
}

fn normal_traces_agree(space: &FeSpace, coefs: &[f64], seed: u64) {
    let mesh = space.mesh();
    let d = mesh.dim();
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64) / ((1u64 << 53) as f64)
    };
    for f in 0..mesh.num_facets() {
        if mesh.is_boundary_facet(f) {
            continue;
        }
        let [c0, c1] = mesh.facet_cells(f);
        let verts = mesh.facet(f).to_vec();
        let mut w: Vec<f64> = (0..d).map(|_| next() + 0.05).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let n = mesh.facet_normal(f);
        let v0 = space.eval(coefs, c0, &bary_on_facet(mesh, c0, &verts, &w)).unwrap();
        let v1 = space.eval(coefs, c1, &bary_on_facet(mesh, c1, &verts, &w)).unwrap();
        for k in 0..space.components() {
            let (a, b) = (dot(&v0.value[k], &n), dot(&v1.value[k], &n));
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "facet {f}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hdiv_fields_have_continuous_normal_traces(seed in any::<u64>(), d in 2usize..=3, rt in any::<bool>()) {
        let mesh = Arc::new(if d == 2 { build_structured_square(3).unwrap() } else { build_structured_cube(3).unwrap() });
        let family = if rt { Family::Rt1 } else { Family::Bdm1 };
        let space = FeSpace::new(mesh, family, 2).unwrap();
        let coefs: Vec<f64> = (0..space.dim())
            .map(|i| (((i as u64).wrapping_mul(2654435761) ^ seed) % 1000) as f64 / 500.0 - 1.0)
            .collect();
        normal_traces_agree(&space, &coefs, seed);
    }
}
