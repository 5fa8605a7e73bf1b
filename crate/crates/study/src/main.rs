//! `cosserat`: convergence studies for the Cosserat mixed schemes.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cosserat_core::assembly::{SchemeName, SchemeSpec, Spaces};
use cosserat_study::acceptance;
use cosserat_study::config::{ConfigFile, StudyConfig};
use cosserat_study::report::{emit_report, to_markdown, ReportFormat};
use cosserat_study::runner::{build_mesh, run_case_with};

/// Output directory used when neither the config nor `--output-dir` sets one.
const OUTPUT_DIR_ENV: &str = "COSSERAT_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "cosserat", version, about = "Convergence studies for mixed Cosserat schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study.
    Run {
        /// TOML config file; flags below override its keys.
        config: Option<PathBuf>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        /// one | varpi | zero
        #[arg(long)]
        ell: Option<String>,
        /// Comma-separated mesh parameters, e.g. 6,12,24.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// mfe | ms-mfe | both
        #[arg(long)]
        formulation: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Defaults to the config value, then to $COSSERAT_OUTPUT_DIR.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Gmsh files, one per level, used instead of generated meshes.
        #[arg(long, value_delimiter = ',')]
        mesh_files: Option<Vec<PathBuf>>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Run only these criteria (1-12).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
    },
    /// Print mesh and space sizes for a scheme.
    MeshInfo {
        #[arg(long, default_value = "BDM1-P0")]
        scheme: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
}

fn run(file: ConfigFile) -> Result<bool> {
    let cfg = StudyConfig::from_file(file)?;
    let outcome = run_case_with(&cfg, |f, row| {
        eprintln!(
            "{} {} level {} h={:.3e} err(σ,ω,u,r)=({:.3e}, {:.3e}, {:.3e}, {:.3e}) {} its {:.2}s",
            cfg.scheme,
            f,
            row.n.unwrap_or(row.level),
            row.h,
            row.errors.sigma,
            row.errors.omega,
            row.errors.u,
            row.errors.r,
            row.solver.iterations,
            row.solver.seconds
        );
    })?;
    print!("{}", to_markdown(&outcome.reports));
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = format!("{}-{}d-{}", cfg.scheme.as_str().to_ascii_lowercase(), cfg.dim, cfg.ell.as_str());
        let csv = dir.join(format!("{stem}.csv"));
        let md = dir.join(format!("{stem}.md"));
        emit_report(&outcome.reports, ReportFormat::Csv, &csv)?;
        emit_report(&outcome.reports, ReportFormat::Markdown, &md)?;
        eprintln!("wrote {} and {}", csv.display(), md.display());
    }
    if let Some(msg) = &outcome.failure {
        eprintln!("study failed: {msg}");
    }
    Ok(outcome.succeeded())
}

fn mesh_info(scheme: &str, dim: usize, n: usize) -> Result<()> {
    let scheme: SchemeName = scheme.parse()?;
    let spec = SchemeSpec::new(scheme);
    let mesh = Arc::new(build_mesh(scheme, dim, n)?);
    let spaces = Spaces::new(&spec, mesh.clone())?;
    let layout = spaces.layout();
    println!("scheme      {scheme}");
    println!("dimension   {dim}");
    println!("barycentric {}", spec.needs_barycentric);
    println!("vertices    {}", mesh.num_vertices());
    println!("cells       {}", mesh.num_cells());
    println!("facets      {} ({} on the boundary)", mesh.num_facets(), mesh.num_boundary_facets());
    println!("h           {:.6e}", mesh.h());
    println!("dof sigma   {}", layout.sigma.len());
    println!("dof omega   {}", layout.omega.len());
    println!("dof u       {}", layout.u.len());
    println!("dof r       {}", layout.r.len());
    println!("dof full    {}", layout.full_dim());
    println!("dof schur   {}", layout.y_dim());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scheme,
            dim,
            ell,
            levels,
            formulation,
            tol,
            output_dir,
            mesh_files,
        } => (|| {
            let base = match &config {
                Some(p) => ConfigFile::load(p)?,
                None => ConfigFile::default(),
            };
            let overrides = ConfigFile {
                scheme,
                dim,
                ell,
                levels,
                formulation,
                tol,
                output_dir,
                mesh_files,
                ..ConfigFile::default()
            };
            let mut merged = base.merge(overrides);
            if merged.output_dir.is_none() {
                merged.output_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
            }
            run(merged)
        })(),
        Command::Verify { only } => {
            let outcomes = acceptance::run_all(only.as_deref(), |o| println!("{}", o.line()));
            Ok(outcomes.iter().all(|o| o.passed))
        }
        Command::MeshInfo { scheme, dim, n } => mesh_info(&scheme, dim, n).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
