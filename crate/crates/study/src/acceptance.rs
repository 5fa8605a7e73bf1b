//! The acceptance suite: twelve numbered checks shared by `cosserat verify`
//! and the `acceptance` test target.
//!
//! Convergence checks read observed orders on the last two refinements;
//! the momentum, elasticity-limit, agreement and size checks reuse the
//! solves of the convergence checks.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use cosserat_core::assembly::{
    assemble_system, inf_sup_constant, Formulation, InfSupMethod, SchemeName, SchemeSpec, Spaces,
};
use cosserat_core::mesh::{barycentric_subdivide, build_structured_cube, build_structured_square, Mesh};
use cosserat_core::model::{LengthScale, ManufacturedCase};
use cosserat_core::quadrature::{gauss_rule, q1_rule, q2_rule, QuadratureRule};
use cosserat_core::solve::reduced_solve;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EllCase, FormulationChoice, StudyConfig};
use crate::report::ConvergenceReport;
use crate::runner::{build_mesh, run_case, FieldErrors};

/// Result of one check.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget: Option<f64>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let budget = self.budget.map_or(String::new(), |b| format!(" / {b:.0} s"));
        format!(
            "[{}] {:>2} {}: {} ({:.1} s{})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            budget
        )
    }
}

type Key = (SchemeName, usize, EllCase, FormulationChoice, Vec<usize>);

/// Memoized study runs, so that derived checks reuse earlier solves.
#[derive(Default)]
pub struct Suite {
    runs: HashMap<Key, (Result<Vec<ConvergenceReport>, String>, f64)>,
}

fn in_range(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| v >= lo && v <= hi)
}

fn fmt_orders(o: &[Option<f64>]) -> String {
    let parts: Vec<String> = o.iter().map(|v| v.map_or("-".into(), |v| format!("{v:.2}"))).collect();
    parts.join(",")
}

/// Requirement on the order sequence of one field.
#[derive(Debug, Clone, Copy)]
struct Rate {
    field: &'static str,
    lo: f64,
    hi: f64,
}

const fn rate(field: &'static str, lo: f64, hi: f64) -> Rate {
    Rate { field, lo, hi }
}

fn field_value(e: &FieldErrors, field: &str) -> f64 {
    match field {
        "sigma" => e.sigma,
        "omega" => e.omega,
        "u" => e.u,
        "r" => e.r,
        "u_mean" => e.u_mean,
        _ => unreachable!("unknown field {field}"),
    }
}

impl Suite {
    pub fn new() -> Self {
        Suite::default()
    }

    /// Runs (or recalls) a study; returns the reports and the time spent.
    pub fn study(
        &mut self,
        scheme: SchemeName,
        dim: usize,
        ell: EllCase,
        formulation: FormulationChoice,
        levels: &[usize],
    ) -> (Result<Vec<ConvergenceReport>, String>, f64) {
        let key = (scheme, dim, ell, formulation, levels.to_vec());
        if let Some(v) = self.runs.get(&key) {
            return (v.0.clone(), 0.0);
        }
        let start = Instant::now();
        let cfg = StudyConfig::new(scheme, dim, ell).with_levels(levels).with_formulation(formulation);
        let res = match run_case(&cfg) {
            Ok(out) => match out.failure {
                None => Ok(out.reports),
                Some(f) => Err(f),
            },
            Err(e) => Err(e.to_string()),
        };
        let t = start.elapsed().as_secs_f64();
        self.runs.insert(key, (res.clone(), t));
        (res, t)
    }

    /// All completed reports of earlier runs matching `pred`.
    fn reports_where(&self, pred: impl Fn(&Key) -> bool) -> Vec<(Key, ConvergenceReport)> {
        let mut out = Vec::new();
        for (k, (res, _)) in &self.runs {
            if let Ok(reps) = res {
                if pred(k) {
                    out.extend(reps.iter().map(|r| (k.clone(), r.clone())));
                }
            }
        }
        out.sort_by_key(|(k, r)| (format!("{:?}", k), r.formulation.as_str()));
        out
    }

    /// Checks the observed orders of the last two refinements for several
    /// length scales and formulations.
    fn rate_check(
        &mut self,
        scheme: SchemeName,
        dim: usize,
        ells: &[EllCase],
        formulation: FormulationChoice,
        levels: &[usize],
        rates: &[Rate],
    ) -> (bool, String) {
        let mut ok = true;
        let mut detail = Vec::new();
        for &ell in ells {
            let (res, _) = self.study(scheme, dim, ell, formulation, levels);
            let reports = match res {
                Ok(r) => r,
                Err(e) => {
                    ok = false;
                    detail.push(format!("ell={}: {e}", ell.as_str()));
                    continue;
                }
            };
            for rep in &reports {
                let mut parts = Vec::new();
                for r in rates {
                    let orders = rep.orders(|e| field_value(e, r.field));
                    let tail = &orders[orders.len().saturating_sub(2)..];
                    let good = tail.len() == 2 && tail.iter().all(|&o| in_range(o, r.lo, r.hi));
                    ok &= good;
                    parts.push(format!("{}{}[{}]", if good { "" } else { "!" }, r.field, fmt_orders(tail)));
                }
                detail.push(format!("{} ell={}: {}", rep.formulation, ell.as_str(), parts.join(" ")));
            }
        }
        (ok, detail.join("; "))
    }
}

const BDM1_LEVELS_2D: [usize; 4] = [6, 12, 24, 48];
const RT1_LEVELS_2D: [usize; 3] = [6, 12, 24];
const LEVELS_3D: [usize; 3] = [3, 6, 9];

pub const NAMES: [&str; 12] = [
    "quadrature exactness and norm equivalence",
    "BDM1-P0 convergence",
    "BDM1-L1 convergence",
    "RT1-L1 convergence",
    "RT1-P1 convergence on barycentric grids",
    "3D BDM1-P0 convergence",
    "momentum balance of reduced solves",
    "elasticity limit",
    "full and multipoint agreement",
    "reduced system size",
    "reduced solve against dense monolithic solve",
    "discrete inf-sup stability",
];

const BUDGETS: [Option<f64>; 12] = [
    Some(10.0),
    Some(180.0),
    Some(180.0),
    Some(300.0),
    Some(480.0),
    Some(600.0),
    None,
    None,
    None,
    None,
    None,
    Some(120.0),
];

/// Runs the selected checks (all when `only` is `None`), in order, calling
/// `report` after each.
pub fn run_all(only: Option<&[usize]>, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut suite = Suite::new();
    let mut out = Vec::new();
    for id in 1..=12 {
        if only.is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let o = run_one(&mut suite, id);
        report(&o);
        out.push(o);
    }
    out
}

/// Runs check `id` (1-12).
pub fn run_one(suite: &mut Suite, id: usize) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => quadrature_check(),
        2 => suite.rate_check(
            SchemeName::Bdm1P0,
            2,
            &[EllCase::One, EllCase::Varpi],
            FormulationChoice::Both,
            &BDM1_LEVELS_2D,
            &[rate("sigma", 0.8, 1.4), rate("omega", 0.8, 1.4), rate("u", 0.8, 1.4), rate("r", 0.8, 1.4)],
        ),
        3 => suite.rate_check(
            SchemeName::Bdm1L1,
            2,
            &[EllCase::One, EllCase::Varpi],
            FormulationChoice::Both,
            &BDM1_LEVELS_2D,
            &[rate("sigma", 0.8, 1.4), rate("omega", 0.8, 1.4), rate("u", 0.8, 1.4), rate("r", 0.9, f64::INFINITY)],
        ),
        4 => {
            let (a, da) = suite.rate_check(
                SchemeName::Rt1L1,
                2,
                &[EllCase::One],
                FormulationChoice::Both,
                &RT1_LEVELS_2D,
                &[
                    rate("sigma", 1.7, 2.3),
                    rate("omega", 0.85, f64::INFINITY),
                    rate("u", 1.7, 2.3),
                    rate("r", 0.9, f64::INFINITY),
                ],
            );
            let (b, db) = suite.rate_check(
                SchemeName::Rt1L1,
                2,
                &[EllCase::Zero],
                FormulationChoice::Both,
                &RT1_LEVELS_2D,
                &[rate("sigma", 1.7, 2.3), rate("r", 1.7, 2.3), rate("u_mean", 1.7, 2.3)],
            );
            (a && b, format!("{da}; {db}"))
        }
        5 => suite.rate_check(
            SchemeName::Rt1P1,
            2,
            &[EllCase::One, EllCase::Varpi],
            FormulationChoice::Both,
            &RT1_LEVELS_2D,
            &[
                rate("sigma", 1.7, 2.3),
                rate("omega", 0.9, f64::INFINITY),
                rate("u", 0.9, f64::INFINITY),
                rate("r", 1.7, 2.3),
            ],
        ),
        6 => suite.rate_check(
            SchemeName::Bdm1P0,
            3,
            &[EllCase::One],
            FormulationChoice::MsMfe,
            &LEVELS_3D,
            &[rate("u", 0.7, 1.4), rate("r", 0.7, 1.4)],
        ),
        7 => {
            ensure_convergence_runs(suite);
            let mut worst: f64 = 0.0;
            let mut count = 0;
            for (_, rep) in suite.reports_where(|_| true) {
                if rep.formulation == Formulation::MsMfe {
                    for row in &rep.rows {
                        worst = worst.max(row.momentum_residual);
                        count += 1;
                    }
                }
            }
            (
                count > 0 && worst <= 1e-8,
                format!("max |B η - f|∞/|f|∞ = {worst:.2e} over {count} solves (limit 1e-8)"),
            )
        }
        8 => {
            let mut ok = true;
            let mut parts = Vec::new();
            for scheme in SchemeName::ALL {
                let (res, _) = suite.study(scheme, 2, EllCase::Zero, FormulationChoice::Both, &[6]);
                match res {
                    Ok(reps) => {
                        let worst = reps
                            .iter()
                            .flat_map(|r| r.rows.iter().map(|row| row.omega_norm))
                            .fold(0.0f64, f64::max);
                        ok &= worst <= 1e-9;
                        parts.push(format!("{scheme} |ω_h| = {worst:.1e}"));
                    }
                    Err(e) => {
                        ok = false;
                        parts.push(format!("{scheme}: {e}"));
                    }
                }
            }
            (ok, parts.join(", "))
        }
        9 => {
            let (res, _) =
                suite.study(SchemeName::Bdm1P0, 2, EllCase::One, FormulationChoice::Both, &BDM1_LEVELS_2D);
            match res {
                Ok(reps) => {
                    let mfe = reps.iter().find(|r| r.formulation == Formulation::Mfe);
                    let ms = reps.iter().find(|r| r.formulation == Formulation::MsMfe);
                    let (Some(mfe), Some(ms)) = (mfe, ms) else {
                        return finish(id, start, false, "missing formulation".into());
                    };
                    let mut worst: f64 = 0.0;
                    for (a, b) in mfe.rows.iter().zip(&ms.rows) {
                        worst = worst.max((b.errors.u / a.errors.u - 1.0).abs());
                        worst = worst.max((b.errors.r / a.errors.r - 1.0).abs());
                    }
                    (
                        worst <= 0.1 && mfe.rows.len() == ms.rows.len(),
                        format!("max relative difference of u and r errors {:.2}% (limit 10%)", worst * 100.0),
                    )
                }
                Err(e) => (false, e),
            }
        }
        10 => {
            let mut ok = true;
            let mut parts = Vec::new();
            for (dim, levels, lo, hi) in [(2, &BDM1_LEVELS_2D[..], 0.15, 0.40), (3, &LEVELS_3D[..], 0.08, 0.25)] {
                for &n in levels {
                    let mesh = match build_mesh(SchemeName::Bdm1P0, dim, n) {
                        Ok(m) => Arc::new(m),
                        Err(e) => return finish(id, start, false, e.to_string()),
                    };
                    let spaces = match Spaces::new(&SchemeSpec::new(SchemeName::Bdm1P0), mesh) {
                        Ok(s) => s,
                        Err(e) => return finish(id, start, false, e.to_string()),
                    };
                    let l = spaces.layout();
                    let ratio = l.y_dim() as f64 / l.full_dim() as f64;
                    let good = (lo..=hi).contains(&ratio);
                    ok &= good;
                    parts.push(format!("{}d n={n}: {ratio:.3}{}", dim, if good { "" } else { "!" }));
                }
            }
            (ok, parts.join(", "))
        }
        11 => tiny_oracle_check(),
        12 => inf_sup_check(),
        _ => (false, format!("no check numbered {id}")),
    };
    finish(id, start, passed, detail)
}

fn finish(id: usize, start: Instant, passed: bool, detail: String) -> Outcome {
    let seconds = start.elapsed().as_secs_f64();
    let budget = BUDGETS.get(id.wrapping_sub(1)).copied().flatten();
    let within = budget.is_none_or(|b| seconds <= b);
    let detail = if within {
        detail
    } else {
        format!("{detail}; over the time budget")
    };
    Outcome {
        id,
        name: NAMES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed: passed && within,
        detail,
        seconds,
        budget,
    }
}

/// The studies of checks 2-6, for the checks that aggregate over them.
fn ensure_convergence_runs(suite: &mut Suite) {
    for ell in [EllCase::One, EllCase::Varpi] {
        let _ = suite.study(SchemeName::Bdm1P0, 2, ell, FormulationChoice::Both, &BDM1_LEVELS_2D);
        let _ = suite.study(SchemeName::Bdm1L1, 2, ell, FormulationChoice::Both, &BDM1_LEVELS_2D);
        let _ = suite.study(SchemeName::Rt1P1, 2, ell, FormulationChoice::Both, &RT1_LEVELS_2D);
    }
    for ell in [EllCase::One, EllCase::Zero] {
        let _ = suite.study(SchemeName::Rt1L1, 2, ell, FormulationChoice::Both, &RT1_LEVELS_2D);
    }
    let _ = suite.study(SchemeName::Bdm1P0, 3, EllCase::One, FormulationChoice::MsMfe, &LEVELS_3D);
}

/// Random polynomial of degree `deg` (1 or 2) on each cell, in barycentric
/// monomials; returns a closure evaluating it at a barycentric point.
fn random_cell_poly(rng: &mut ChaCha8Rng, dim: usize, deg: usize) -> Vec<f64> {
    let n = dim + 1;
    let len = if deg == 1 { n } else { n * (n + 1) / 2 };
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn eval_poly(c: &[f64], dim: usize, deg: usize, b: &[f64; 4]) -> f64 {
    let n = dim + 1;
    if deg == 1 {
        return (0..n).map(|i| c[i] * b[i]).sum();
    }
    let mut k = 0;
    let mut s = 0.0;
    for i in 0..n {
        for j in i..n {
            s += c[k] * b[i] * b[j];
            k += 1;
        }
    }
    s
}

/// `(∫ p, ∫ p²)` over the mesh with the given rule, for per-cell polynomials.
fn integrals(mesh: &Mesh, rule: &QuadratureRule, coefs: &[Vec<f64>], deg: usize) -> (f64, f64) {
    let d = mesh.dim();
    let scale = 1.0 / cosserat_core::quadrature::reference_measure(d);
    let (mut i1, mut i2) = (0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let vol = mesh.measure(c) * scale;
        for (b, w) in rule.iter() {
            let v = eval_poly(&coefs[c], d, deg, b);
            i1 += w * vol * v;
            i2 += w * vol * v * v;
        }
    }
    (i1, i2)
}

/// Check 1: exactness of the lumping rules on piecewise polynomials and
/// stability of the discrete-to-continuous norm ratio under refinement.
pub fn quadrature_check() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ok = true;
    let mut worst_exact: f64 = 0.0;
    let mut parts = Vec::new();
    for (deg, lump) in [(1usize, "Q1"), (2, "Q2")] {
        for dim in [2usize, 3] {
            let rule = if deg == 1 { q1_rule(dim) } else { q2_rule(dim) }.expect("dims 2 and 3");
            let exact = gauss_rule(dim, 2 * deg).expect("low degree");
            let mesh = if dim == 2 { build_structured_square(6) } else { build_structured_cube(3) }.expect("valid n");
            for _ in 0..250 {
                let coefs: Vec<Vec<f64>> = (0..mesh.num_cells()).map(|_| random_cell_poly(&mut rng, dim, deg)).collect();
                let (q, _) = integrals(&mesh, &rule, &coefs, deg);
                let (e, _) = integrals(&mesh, &exact, &coefs, deg);
                let scale: f64 = coefs.iter().flatten().map(|v| v.abs()).sum::<f64>() / coefs.len() as f64;
                worst_exact = worst_exact.max((q - e).abs() / e.abs().max(scale * mesh.total_measure() * 1e-3));
            }
            // Norm ratios on three refinements.
            let ladder: [usize; 3] = if dim == 2 { [3, 6, 12] } else { [3, 6, 9] };
            let mut ratios = Vec::new();
            for n in ladder {
                let mesh = if dim == 2 { build_structured_square(n) } else { build_structured_cube(n) }.expect("valid n");
                let mut acc = 0.0;
                for _ in 0..20 {
                    let coefs: Vec<Vec<f64>> = (0..mesh.num_cells()).map(|_| random_cell_poly(&mut rng, dim, deg)).collect();
                    let (_, q) = integrals(&mesh, &rule, &coefs, deg);
                    let (_, e) = integrals(&mesh, &exact, &coefs, deg);
                    acc += (q / e).sqrt();
                }
                ratios.push(acc / 20.0);
            }
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let drift = (max - min) / min;
            ok &= drift <= 0.05 && min > 0.0;
            parts.push(format!(
                "{lump} {dim}d ratio {:.3}..{:.3} drift {:.1}%",
                min,
                max,
                drift * 100.0
            ));
        }
    }
    ok &= worst_exact <= 1e-12;
    (ok, format!("max relative exactness error {worst_exact:.1e}; {}", parts.join(", ")))
}

/// Two triangles splitting the unit square.
pub fn two_triangle_mesh() -> Mesh {
    let coords = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
    Mesh::from_cells(2, coords, vec![[0, 1, 2, 0], [0, 2, 3, 0]]).expect("valid triangles")
}

/// Check 11: the reduced solve matches a dense LU solve of the monolithic
/// multipoint system on a two-triangle mesh, for every scheme.
pub fn tiny_oracle_check() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for scheme in SchemeName::ALL {
        let spec = SchemeSpec::new(scheme);
        let mut mesh = two_triangle_mesh();
        if spec.needs_barycentric {
            mesh = barycentric_subdivide(&mesh).expect("valid mesh");
        }
        let case = ManufacturedCase::new(2, LengthScale::Constant(1.0));
        let result = (|| -> Result<f64, String> {
            let spaces = Spaces::new(&spec, Arc::new(mesh)).map_err(|e| e.to_string())?;
            let sys = assemble_system(&spec, Formulation::MsMfe, &spaces, &case).map_err(|e| e.to_string())?;
            let (x, rep) = reduced_solve(&sys, 1e-14).map_err(|e| e.to_string())?;
            if !rep.converged && rep.residual > 1e-12 {
                return Err(format!("reduced solve stopped at residual {:.1e}", rep.residual));
            }
            let k: DMatrix<f64> = sys.full_matrix().to_dense();
            let rhs = DVector::from_vec(sys.full_rhs());
            let y = k.lu().solve(&rhs).ok_or("singular monolithic matrix")?;
            let diff = (DVector::from_vec(x) - &y).norm() / y.norm();
            Ok(diff)
        })();
        match result {
            Ok(diff) => {
                ok &= diff <= 1e-9;
                parts.push(format!("{scheme} {diff:.1e}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{scheme}: {e}"));
            }
        }
    }
    (ok, format!("relative difference {} (limit 1e-9)", parts.join(", ")))
}

/// Check 12: `β_h` on n = 3, 6, 9 for the four schemes varies by at most
/// 20% (relative to the largest value).
pub fn inf_sup_check() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for scheme in SchemeName::ALL {
        let spec = SchemeSpec::new(scheme);
        let mut betas = Vec::new();
        for n in [3, 6, 9] {
            let beta = build_mesh(scheme, 2, n)
                .map_err(|e| e.to_string())
                .and_then(|m| Spaces::new(&spec, Arc::new(m)).map_err(|e| e.to_string()))
                .and_then(|s| {
                    let method = if s.layout().x_dim() <= 1500 {
                        InfSupMethod::Dense
                    } else {
                        InfSupMethod::Lanczos
                    };
                    inf_sup_constant(&s, method).map_err(|e| e.to_string())
                });
            match beta {
                Ok(b) => betas.push(b),
                Err(e) => {
                    ok = false;
                    parts.push(format!("{scheme} n={n}: {e}"));
                }
            }
        }
        if betas.len() == 3 {
            let max = betas.iter().cloned().fold(f64::MIN, f64::max);
            let min = betas.iter().cloned().fold(f64::MAX, f64::min);
            let var = (max - min) / max;
            ok &= var <= 0.2 && min > 0.0;
            parts.push(format!(
                "{scheme} β = {:.4}/{:.4}/{:.4} ({:.1}%)",
                betas[0],
                betas[1],
                betas[2],
                var * 100.0
            ));
        }
    }
    (ok, parts.join(", "))
}
