//! Per-level solves and error measurement.

use std::sync::Arc;

use cosserat_core::assembly::{
    assemble_a_h, assemble_system, Formulation, SaddleSystem, SchemeName, SchemeSpec, Spaces,
};
use cosserat_core::fespace::{BasisValues, CellGeometry, FeSpace};
use cosserat_core::mesh::{barycentric_subdivide, build_structured_cube, build_structured_square, import_msh, Mesh};
use cosserat_core::model::{ExactFields, ManufacturedCase};
use cosserat_core::quadrature::{gauss_rule, QuadratureRule};
use cosserat_core::solve::{full_saddle_solve, reduced_solve, FullSolveOptions, SolverReport};
use cosserat_core::tensor::Mat3;

use crate::config::StudyConfig;
use crate::report::ConvergenceReport;
use crate::StudyError;

/// L2 errors of the four fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub sigma: f64,
    pub omega: f64,
    pub u: f64,
    pub r: f64,
    /// `‖Π₀(u_h - u)‖` with `Π₀` the cellwise mean.
    pub u_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    /// Structured mesh parameter, if the mesh was generated.
    pub n: Option<usize>,
    pub h: f64,
    pub errors: FieldErrors,
    /// `‖ω_h‖`.
    pub omega_norm: f64,
    /// `‖B η_h - f‖_∞ / ‖f‖_∞`.
    pub momentum_residual: f64,
    pub dof_full: usize,
    pub dof_schur: usize,
    pub solver: SolverReport,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub reports: Vec<ConvergenceReport>,
    /// Set when a level failed; the reports then hold the completed rows.
    pub failure: Option<String>,
}

impl StudyOutcome {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Structured mesh of parameter `n`, subdivided when the scheme needs it.
pub fn build_mesh(scheme: SchemeName, dim: usize, n: usize) -> Result<Mesh, StudyError> {
    let mesh = if dim == 2 {
        build_structured_square(n)?
    } else {
        build_structured_cube(n)?
    };
    prepare_mesh(scheme, mesh)
}

fn prepare_mesh(scheme: SchemeName, mesh: Mesh) -> Result<Mesh, StudyError> {
    if SchemeSpec::new(scheme).needs_barycentric {
        Ok(barycentric_subdivide(&mesh)?)
    } else {
        Ok(mesh)
    }
}

/// Values of a space's field at the points of a rule, per cell.
struct Sampler<'a> {
    space: &'a FeSpace,
    coefs: &'a [f64],
    tab: Vec<BasisValues>,
}

impl<'a> Sampler<'a> {
    fn new(space: &'a FeSpace, coefs: &'a [f64], rule: &QuadratureRule) -> Self {
        Sampler {
            space,
            coefs,
            tab: space.element().tabulate(rule),
        }
    }

    fn value(&self, c: usize, geo: &CellGeometry, q: usize) -> Mat3 {
        let phys = self.space.physical(c, geo, &self.tab[q]);
        self.space.combine(self.coefs, c, &phys).value
    }
}

fn sq_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s
}

fn rows(v: &[f64; 3]) -> Mat3 {
    [[v[0], 0.0, 0.0], [v[1], 0.0, 0.0], [v[2], 0.0, 0.0]]
}

/// L2 errors of a solution vector laid out as `[σ | ω | u | r]`, with the
/// degree-6 rule on every cell. Tensor fields are summed over rows.
pub fn compute_errors(spaces: &Spaces, x: &[f64], case: &ManufacturedCase) -> FieldErrors {
    let mesh = spaces.mesh();
    let layout = spaces.layout();
    let rule = gauss_rule(mesh.dim(), 6).expect("degree 6 is supported");
    let fields = [
        Sampler::new(&spaces.sigma, &x[layout.sigma.clone()], &rule),
        Sampler::new(&spaces.omega, &x[layout.omega.clone()], &rule),
        Sampler::new(&spaces.u, &x[layout.u.clone()], &rule),
        Sampler::new(&spaces.r, &x[layout.r.clone()], &rule),
    ];
    let mut e = [0.0f64; 4];
    let mut u_mean = 0.0;
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let vol = mesh.measure(c);
        let mut mean = [0.0f64; 3];
        for (q, (bary, w)) in rule.iter().enumerate() {
            let wq = w * geo.det.abs();
            let ex: ExactFields = case.exact(&mesh.point(c, bary));
            let exact = [ex.sigma, ex.omega, rows(&ex.u), rows(&ex.r)];
            for k in 0..4 {
                let v = fields[k].value(c, &geo, q);
                e[k] += wq * sq_diff(&v, &exact[k]);
                if k == 2 {
                    for i in 0..3 {
                        mean[i] += wq * (v[i][0] - ex.u[i]);
                    }
                }
            }
        }
        u_mean += mean.iter().map(|m| m * m).sum::<f64>() / vol;
    }
    FieldErrors {
        sigma: e[0].sqrt(),
        omega: e[1].sqrt(),
        u: e[2].sqrt(),
        r: e[3].sqrt(),
        u_mean: u_mean.sqrt(),
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `‖B η - f‖_∞ / ‖f‖_∞` for a solution `[η; v]`.
pub fn momentum_residual(system: &SaddleSystem, x: &[f64]) -> f64 {
    let nx = system.layout.x_dim();
    let r: Vec<f64> = system.b.mul_vec(&x[..nx]).iter().zip(&system.f).map(|(a, b)| a - b).collect();
    let nf = inf_norm(&system.f);
    if nf == 0.0 {
        inf_norm(&r)
    } else {
        inf_norm(&r) / nf
    }
}

/// Assembles and solves one level; fails if the solver does not converge.
pub fn solve_level(
    spec: &SchemeSpec,
    formulation: Formulation,
    mesh: Arc<Mesh>,
    case: &ManufacturedCase,
    tol: f64,
    level: usize,
) -> Result<(LevelResult, Vec<f64>), StudyError> {
    let spaces = Spaces::new(spec, mesh.clone())?;
    let system = assemble_system(spec, formulation, &spaces, case)?;
    let (x, report) = match formulation {
        Formulation::MsMfe => reduced_solve(&system, tol)?,
        Formulation::Mfe => {
            let a_h = assemble_a_h(spec, &spaces, &case.params);
            let opts = FullSolveOptions {
                tol,
                ..FullSolveOptions::default()
            };
            full_saddle_solve(&system, &a_h, &opts)?
        }
    };
    if !report.converged {
        return Err(StudyError::Solver {
            method: report.path.as_str(),
            level,
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let layout = &system.layout;
    let errors = compute_errors(&spaces, &x, case);
    let mut zero_case = *case;
    zero_case.solution = cosserat_core::model::Solution::Zero;
    let mut omega_only = vec![0.0; x.len()];
    omega_only[layout.omega.clone()].copy_from_slice(&x[layout.omega.clone()]);
    let omega_norm = compute_errors(&spaces, &omega_only, &zero_case).omega;
    let result = LevelResult {
        level,
        n: None,
        h: mesh.h(),
        errors,
        omega_norm,
        momentum_residual: momentum_residual(&system, &x),
        dof_full: layout.full_dim(),
        dof_schur: layout.y_dim(),
        solver: report,
    };
    Ok((result, x))
}

/// Runs every level of a study; `progress` sees each completed row.
pub fn run_case_with(
    config: &StudyConfig,
    mut progress: impl FnMut(Formulation, &LevelResult),
) -> Result<StudyOutcome, StudyError> {
    config.validate()?;
    let spec = SchemeSpec::new(config.scheme);
    let mut case = ManufacturedCase::new(config.dim, config.ell.length_scale());
    case.params = config.params;
    let formulations = config.formulation.formulations();
    let mut reports: Vec<ConvergenceReport> = formulations
        .iter()
        .map(|&f| ConvergenceReport::new(config.scheme, f, config.dim, config.ell))
        .collect();
    for level in 0..config.num_levels() {
        let (mesh, n) = if config.mesh_files.is_empty() {
            let n = config.levels[level];
            (build_mesh(config.scheme, config.dim, n)?, Some(n))
        } else {
            let m = import_msh(&config.mesh_files[level], Some(config.dim))?;
            let n = config.levels.get(level).copied();
            (prepare_mesh(config.scheme, m)?, n)
        };
        let mesh = Arc::new(mesh);
        for (report, &f) in reports.iter_mut().zip(&formulations) {
            match solve_level(&spec, f, mesh.clone(), &case, config.tol, level) {
                Ok((mut row, _)) => {
                    row.n = n;
                    progress(f, &row);
                    report.rows.push(row);
                }
                Err(e) => {
                    return Ok(StudyOutcome {
                        reports,
                        failure: Some(format!("{f}: {e}")),
                    })
                }
            }
        }
    }
    Ok(StudyOutcome { reports, failure: None })
}

pub fn run_case(config: &StudyConfig) -> Result<StudyOutcome, StudyError> {
    run_case_with(config, |_, _| {})
}

