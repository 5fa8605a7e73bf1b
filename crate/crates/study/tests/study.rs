//! End-to-end behaviour of studies and their reports.

use cosserat_core::assembly::{Formulation, SchemeName, SchemeSpec, Spaces};
use cosserat_core::model::{LengthScale, ManufacturedCase, Solution};
use cosserat_study::config::ConfigFile;
use cosserat_study::report::{emit_report, write_csv, CSV_HEADER};
use cosserat_study::runner::build_mesh;
use cosserat_study::{compute_errors, run_case, EllCase, FormulationChoice, ReportFormat, StudyConfig};
use std::sync::Arc;

fn small_study() -> StudyConfig {
    StudyConfig::new(SchemeName::Bdm1P0, 2, EllCase::One).with_levels(&[3, 6, 12])
}

#[test]
fn three_levels_give_three_rows_per_formulation() {
    let out = run_case(&small_study()).unwrap();
    assert!(out.succeeded());
    assert_eq!(out.reports.len(), 2);
    for rep in &out.reports {
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows.windows(2).all(|w| w[1].h < w[0].h));
        assert!(rep.rows.windows(2).all(|w| w[1].errors.sigma < w[0].errors.sigma));
    }
}

#[test]
fn csv_has_fixed_header_and_round_trips() {
    let out = run_case(&small_study().with_formulation(FormulationChoice::MsMfe)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    emit_report(&out.reports, ReportFormat::Csv, &path).unwrap();
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, CSV_HEADER);
    let records: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 3);
    let rows = &out.reports[0].rows;
    for (rec, row) in records.iter().zip(rows) {
        assert_eq!(&rec[0], "BDM1-P0");
        assert_eq!(&rec[1], "MS-MFE");
        assert_eq!(rec[4].parse::<usize>().unwrap(), row.n.unwrap());
        let e: f64 = rec[6].parse().unwrap();
        assert!((e - row.errors.sigma).abs() <= 1e-6 * row.errors.sigma);
    }
    // The first row has no order; later rows do.
    assert_eq!(&records[0][7], "");
    assert!(records[2][7].parse::<f64>().is_ok());

    let mut buf = Vec::new();
    write_csv(&out.reports, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn markdown_has_one_table_per_formulation() {
    let out = run_case(&small_study()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.md");
    emit_report(&out.reports, ReportFormat::Markdown, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.matches("## BDM1-P0").count(), 2);
    assert!(text.contains("MS-MFE") && text.contains(" MFE "));
    assert_eq!(text.lines().filter(|l| l.starts_with("|---")).count(), 2);
}

#[test]
fn config_file_round_trip_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.toml");
    std::fs::write(
        &path,
        "scheme = \"RT1-P1\"\ndim = 2\nell = \"varpi\"\nlevels = [3, 6]\nformulation = \"mfe\"\nmu_sigma = 2.0\n",
    )
    .unwrap();
    let file = ConfigFile::load(&path).unwrap();
    let cfg = StudyConfig::from_file(file.clone()).unwrap();
    assert_eq!(cfg.scheme, SchemeName::Rt1P1);
    assert_eq!(cfg.ell, EllCase::Varpi);
    assert_eq!(cfg.formulation, FormulationChoice::Mfe);
    assert_eq!(cfg.params.mu_sigma, 2.0);
    let merged = file.merge(ConfigFile {
        formulation: Some("both".into()),
        tol: Some(1e-8),
        ..ConfigFile::default()
    });
    let cfg = StudyConfig::from_file(merged).unwrap();
    assert_eq!(cfg.formulation, FormulationChoice::Both);
    assert_eq!(cfg.tol, 1e-8);
    assert_eq!(cfg.levels, vec![3, 6]);
    assert!(StudyConfig::from_file(ConfigFile::parse("scheme = \"BDM1-P0\"\ntol = 1.0").unwrap()).is_err());
}

#[test]
fn rt1_p1_meshes_are_always_subdivided() {
    for dim in [2, 3] {
        let plain = build_mesh(SchemeName::Rt1L1, dim, 3).unwrap();
        let refined = build_mesh(SchemeName::Rt1P1, dim, 3).unwrap();
        assert_eq!(refined.num_cells(), plain.num_cells() * (dim + 1));
    }
}

#[test]
fn zero_coefficients_measure_the_exact_norm() {
    let spec = SchemeSpec::new(SchemeName::Rt1L1);
    let mesh = Arc::new(build_mesh(SchemeName::Rt1L1, 2, 6).unwrap());
    let spaces = Spaces::new(&spec, mesh).unwrap();
    let case = ManufacturedCase::new(2, LengthScale::Constant(1.0));
    let x = vec![0.0; spaces.layout().full_dim()];
    let e = compute_errors(&spaces, &x, &case);
    // u_i = x_{i+1}(1 - x_{i+1}) sin(π x_i): ‖u‖² = 2 · (1/30) · (1/2).
    let want = (1.0f64 / 30.0).sqrt();
    assert!((e.u - want).abs() < 1e-6 * want, "{} vs {want}", e.u);
    assert!(e.sigma > 0.0 && e.omega > 0.0 && e.r > 0.0);
    let mut zero = case;
    zero.solution = Solution::Zero;
    let z = compute_errors(&spaces, &x, &zero);
    assert_eq!((z.sigma, z.omega, z.u, z.r), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn interpolation_error_is_below_solution_error() {
    // The canonical interpolant of the exact stress is closer than the
    // discrete solution's stress, which also carries the discretization error
    // of the coupled problem.
    let spec = SchemeSpec::new(SchemeName::Bdm1P0);
    let mesh = Arc::new(build_mesh(SchemeName::Bdm1P0, 2, 6).unwrap());
    let spaces = Spaces::new(&spec, mesh.clone()).unwrap();
    let case = ManufacturedCase::new(2, LengthScale::Constant(1.0));
    let layout = spaces.layout();
    let mut x = vec![0.0; layout.full_dim()];
    x[layout.sigma.clone()].copy_from_slice(&spaces.sigma.interpolate(|p| case.exact(&p).sigma));
    let interp = compute_errors(&spaces, &x, &case).sigma;
    let (row, _) = cosserat_study::solve_level(&spec, Formulation::MsMfe, mesh, &case, 1e-10, 0).unwrap();
    assert!(interp < row.errors.sigma, "{interp} vs {}", row.errors.sigma);
}
