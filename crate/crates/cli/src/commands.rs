use serde_json::json;
use topograd::config::{Format, RunConfig};
use topograd::exterior::{disk_polarisation_analytic, polarisation_matrix, truncation_study};
use topograd::io::{self, Header};
use topograd::mesh::{build_rect_mesh_with, Mesh2D, Region, ShapeKind};
use topograd::pde::{solve_adjoint, solve_state_mode};
use topograd::topo::{td_at_point_mode, td_field, PolarisationCache, TdPoint};
use topograd::validation::{self, Which};
use topograd::Result;

fn header(config: &RunConfig) -> Header {
    Header::new(config.hash())
}

fn write(config: &RunConfig, name: &str, contents: &str) -> Result<()> {
    let path = io::write_file(&config.outputs.directory, name, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn master_mesh(config: &RunConfig) -> Result<Mesh2D> {
    build_rect_mesh_with(
        &config.domain,
        &config.background(),
        &config.numerics.mesh_options(),
    )
}

pub fn mesh_export(config: &RunConfig) -> Result<()> {
    let mesh = master_mesh(config)?;
    write(
        config,
        "mesh.vtk",
        &io::mesh_vtk(&header(config), &mesh, &[])?,
    )
}

pub fn solve(config: &RunConfig) -> Result<()> {
    let mesh = master_mesh(config)?;
    let state = solve_state_mode(
        &mesh,
        &config.materials,
        config.mode,
        &config.numerics.newton,
    )?;
    let q = solve_adjoint(
        &mesh,
        &config.materials,
        &state.u,
        config.mode,
        &config.numerics.newton,
    )?;
    log::info!("newton converged in {} iterations", state.iterations);
    let h = header(config);
    let fields = [("u", &state.u), ("q", &q)];
    let out = &config.outputs;
    if out.wants(Format::Vtk) {
        write(config, "solution.vtk", &io::mesh_vtk(&h, &mesh, &fields)?)?;
    }
    if out.wants(Format::Csv) {
        write(config, "solution.csv", &io::fields_csv(&h, &mesh, &fields)?)?;
    }
    if out.wants(Format::Json) {
        let body = json!({
            "iterations": state.iterations,
            "residual_history": state.history,
            "vertices": mesh.num_vertices(),
            "triangles": mesh.num_triangles(),
        });
        write(config, "newton.json", &io::json_with_header(&h, &body)?)?;
    }
    Ok(())
}

pub fn td(config: &RunConfig) -> Result<()> {
    let mesh = master_mesh(config)?;
    let mat = &config.materials;
    let newton = &config.numerics.newton;
    let u = solve_state_mode(&mesh, mat, config.mode, newton)?.u;
    let q = solve_adjoint(&mesh, mat, &u, config.mode, newton)?;
    let cache = PolarisationCache::new();
    let options = config.numerics.td_options();
    let shape = config.shape();
    let h = header(config);
    let out = &config.outputs;
    let mut points: Vec<TdPoint> = config
        .evaluation
        .points
        .iter()
        .map(|&z| {
            match td_at_point_mode(&mesh, &u, &q, mat, &shape, z, config.mode, &options, &cache) {
                Ok(s) => TdPoint {
                    z,
                    sample: Some(s),
                    skipped: None,
                },
                Err(e) => TdPoint {
                    z,
                    sample: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut argmin = None;
    if let Some(grid) = &config.evaluation.grid {
        let field = td_field(
            &mesh,
            &u,
            &q,
            mat,
            &shape,
            grid,
            config.mode,
            &options,
            &cache,
        );
        argmin = field
            .argmin()
            .map(|(i, v)| json!({ "z": field.points[i].z, "value": v }));
        if out.wants(Format::Vtk) {
            write(config, "td_grid.vtk", &io::td_vtk(&h, grid, &field.points)?)?;
        }
        points.extend(field.points);
    }
    if out.wants(Format::Csv) {
        write(config, "td.csv", &io::td_csv(&h, &points))?;
    }
    if out.wants(Format::Json) {
        let body = json!({
            "points": points.len(),
            "evaluated": points.iter().filter(|p| p.sample.is_some()).count(),
            "argmin": argmin,
            "polarisation_solves": cache.misses(),
            "samples": points,
        });
        write(config, "td.json", &io::json_with_header(&h, &body)?)?;
    }
    Ok(())
}

pub fn polmatrix(config: &RunConfig) -> Result<()> {
    let z = config
        .evaluation
        .points
        .first()
        .copied()
        .unwrap_or(config.validation.z);
    let b1 = config.materials.beta(Region::Inclusion, z);
    let b2 = config.materials.beta(Region::Matrix, z);
    let shape = config.shape();
    let numerics = config.numerics.td_options().exterior;
    let p = polarisation_matrix(&b1, &b2, &shape, config.mode, &numerics)?;
    let analytic = match config.omega {
        ShapeKind::Disk { .. } => disk_polarisation_analytic(
            &config.materials.beta1,
            &config.materials.beta2,
            config.mode,
        )
        .ok(),
        _ => None,
    };
    let v = &config.validation;
    let study = truncation_study(
        &b1,
        &b2,
        &shape,
        config.mode,
        &v.radii,
        &v.levels,
        &numerics,
    )?;
    let h = header(config);
    if config.outputs.wants(Format::Csv) {
        write(
            config,
            "polarisation_study.csv",
            &io::csv_with_header(&h, &study.to_csv()),
        )?;
    }
    if config.outputs.wants(Format::Json) {
        let body = json!({
            "matrix": p,
            "asymmetry": p.asymmetry(),
            "min_eigenvalue": p.min_eigenvalue(),
            "analytic": analytic,
            "extrapolated_p11": study.extrapolated,
            "observed_order": study.observed_order,
        });
        write(
            config,
            "polarisation.json",
            &io::json_with_header(&h, &body)?,
        )?;
    }
    Ok(())
}

/// Runs the checks and writes their reports; returns whether all asserted
/// criteria hold.
pub fn validate(config: &RunConfig, which: Which) -> Result<bool> {
    let suite = validation::run(config, which)?;
    let h = header(config);
    if config.outputs.wants(Format::Csv) {
        for r in &suite.reports {
            write(
                config,
                &format!("validate_{}.csv", r.name),
                &io::csv_with_header(&h, &r.to_csv()),
            )?;
        }
    }
    let passed = suite.passed();
    for c in suite.criteria() {
        let status = match c.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "reported",
        };
        log::info!(
            "{status} {} observed {:e} threshold {:e}",
            c.criterion,
            c.observed,
            c.threshold
        );
    }
    if config.outputs.wants(Format::Json) {
        let body = json!({
            "which": which,
            "mode": config.mode,
            "passed": passed,
            "criteria": suite.criteria(),
            "reports": suite.reports,
            "identity": suite.identity,
        });
        write(
            config,
            "validate_summary.json",
            &io::json_with_header(&h, &body)?,
        )?;
    }
    Ok(passed)
}
