//! State, adjoint and averaged-adjoint solvers; cost and Lagrangian.

use crate::assembly::{Assembler, Domain, NodalField};
use crate::error::{Error, Result};
use crate::linalg::{norm2, LinearSettings};
use crate::material::{MaterialSpec, Mode};
use crate::mesh::{Marker, Mesh2D, Region};
use crate::{CsrMatrix, Quadrature, SparseSystem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    /// Stop once the residual norm falls below `tol` times its value at zero.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub max_backtracks: usize,
    pub linear: LinearSettings<f64>,
    /// Gauss-Legendre points of the segment average.
    pub s_points: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
            max_backtracks: 20,
            linear: LinearSettings::default(),
            s_points: 4,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Argument(
                "Newton tolerance must be positive and max_iter >= 1".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Argument(format!(
                "damping factor must lie in (0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Result<Quadrature> {
        Quadrature::with_interval_points(self.s_points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub u: NodalField,
    /// Residual norm before each iteration and after the last one.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Dirichlet vertices of a solve: the outer boundary plus every vertex the
/// assembler does not touch.
fn fixed_vertices(mesh: &Mesh2D, asm: &Assembler) -> Vec<usize> {
    let mut v = mesh.marked_vertices(Marker::Outer);
    v.extend(asm.inactive_vertices());
    v.sort_unstable();
    v.dedup();
    v
}

/// Damped Newton for `F(u) = 0` with `u` fixed on `fixed`. The starting
/// guess supplies the Dirichlet values.
fn newton(
    asm: &Assembler,
    fixed: &[usize],
    mut u: Vec<f64>,
    settings: &NewtonSettings,
) -> Result<StateSolution> {
    settings.validate()?;
    let masked = |mut r: Vec<f64>| {
        for &v in fixed {
            r[v] = 0.0;
        }
        r
    };
    let mut reference = u.clone();
    for (i, x) in reference.iter_mut().enumerate() {
        if fixed.binary_search(&i).is_err() {
            *x = 0.0;
        }
    }
    let r0 = norm2(&masked(asm.residual(&reference)));
    let mut r = masked(asm.residual(&u));
    let mut norm = norm2(&r);
    let mut history = vec![norm];
    if norm == 0.0 || norm <= settings.tol * r0 {
        return Ok(StateSolution {
            u: NodalField::new(u),
            history,
            iterations: 0,
        });
    }
    for it in 1..=settings.max_iter {
        let mut sys = SparseSystem::new(asm.jacobian(&u), r.iter().map(|v| -v).collect());
        sys.constrain(fixed.iter().map(|&v| (v, 0.0)));
        let (du, _) = sys.solve(&settings.linear)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
            let rt = masked(asm.residual(&trial));
            let nt = norm2(&rt);
            if nt < (1.0 - 1e-4 * t) * norm || nt <= settings.tol * r0 {
                accepted = Some((trial, rt, nt));
                break;
            }
            t *= settings.damping;
        }
        let Some((trial, rt, nt)) = accepted else {
            history.push(norm);
            return Err(Error::Newton { history });
        };
        u = trial;
        r = rt;
        norm = nt;
        history.push(norm);
        log::debug!("newton iteration {it}: residual {norm:.3e} step {t}");
        if norm <= settings.tol * r0 {
            return Ok(StateSolution {
                u: NodalField::new(u),
                history,
                iterations: it,
            });
        }
    }
    Err(Error::Newton { history })
}

fn validate_mesh_mode(mesh: &Mesh2D, mode: Mode) -> Result<()> {
    if mode == Mode::Transmission && mesh.regions().contains(&Region::Hole) {
        return Err(Error::Argument(
            "hole triangles present in transmission mode".into(),
        ));
    }
    Ok(())
}

/// Solves the transmission state equation with `u = 0` on the outer boundary.
pub fn solve_state(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    settings: &NewtonSettings,
) -> Result<StateSolution> {
    validate_mesh_mode(mesh, Mode::Transmission)?;
    let asm = Assembler::new(
        mesh,
        material,
        Mode::Transmission,
        Domain::Active,
        &settings.quadrature()?,
    )?;
    newton(
        &asm,
        &fixed_vertices(mesh, &asm),
        vec![0.0; mesh.num_vertices()],
        settings,
    )
}

/// Vertices touched by hole triangles and by nothing else.
fn hole_interior(mesh: &Mesh2D) -> Vec<bool> {
    let mut outside = vec![false; mesh.num_vertices()];
    let mut touched = vec![false; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            if mesh.region(t) == Region::Hole {
                touched[v] = true;
            } else {
                outside[v] = true;
            }
        }
    }
    (0..mesh.num_vertices())
        .map(|v| touched[v] && !outside[v])
        .collect()
}

/// Void problem: the state is solved on the mesh minus its hole triangles
/// (natural condition on the hole rim), then extended into the hole by the
/// matrix-phase equation with the rim values as Dirichlet data.
pub fn solve_state_extremal(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    settings: &NewtonSettings,
) -> Result<StateSolution> {
    let quad = settings.quadrature()?;
    let asm = Assembler::new(mesh, material, Mode::Extremal, Domain::Active, &quad)?;
    let mut sol = newton(
        &asm,
        &fixed_vertices(mesh, &asm),
        vec![0.0; mesh.num_vertices()],
        settings,
    )?;
    let interior = hole_interior(mesh);
    if interior.iter().any(|&b| b) {
        let ext = Assembler::new(mesh, material, Mode::Extremal, Domain::Hole, &quad)?;
        let fixed: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !interior[v]).collect();
        let extended = newton(&ext, &fixed, sol.u.values().to_vec(), settings)?;
        sol.u = extended.u;
    }
    Ok(sol)
}

/// Dispatches on `mode`.
pub fn solve_state_mode(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    mode: Mode,
    settings: &NewtonSettings,
) -> Result<StateSolution> {
    match mode {
        Mode::Transmission => solve_state(mesh, material, settings),
        Mode::Extremal => solve_state_extremal(mesh, material, settings),
    }
}

/// Solves `b(psi, q) = -int (u0 + u_eps) psi` in the second argument, i.e.
/// with the transposed matrix; hole interiors receive the linear extension.
fn adjoint_solve(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u0: &NodalField,
    u_eps: &NodalField,
    mode: Mode,
    settings: &NewtonSettings,
) -> Result<NodalField> {
    u0.check(mesh)?;
    u_eps.check(mesh)?;
    validate_mesh_mode(mesh, mode)?;
    let quad = settings.quadrature()?;
    let asm = Assembler::new(mesh, material, mode, Domain::Active, &quad)?;
    let sum: Vec<f64> = u0
        .values()
        .iter()
        .zip(u_eps.values())
        .map(|(a, b)| a + b)
        .collect();
    let rhs: Vec<f64> = asm.load(&sum).into_iter().map(|v| -v).collect();
    let matrix = asm.averaged(u0.values(), u_eps.values()).transpose();
    let mut sys = SparseSystem::new(matrix, rhs);
    sys.constrain(fixed_vertices(mesh, &asm).into_iter().map(|v| (v, 0.0)));
    let (q, _) = sys.solve(&settings.linear)?;
    let interior = hole_interior(mesh);
    if !interior.iter().any(|&b| b) {
        return Ok(NodalField::new(q));
    }
    // extension: matrix-phase adjoint operator inside the hole, rim values fixed
    let ext = Assembler::new(mesh, material, mode, Domain::Hole, &quad)?;
    let rhs: Vec<f64> = ext.load(&sum).into_iter().map(|v| -v).collect();
    let mut sys = SparseSystem::new(ext.averaged(u0.values(), u_eps.values()).transpose(), rhs);
    sys.constrain(
        (0..mesh.num_vertices())
            .filter(|&v| !interior[v])
            .map(|v| (v, q[v])),
    );
    let (q, _) = sys.solve(&settings.linear)?;
    Ok(NodalField::new(q))
}

/// Adjoint at the unperturbed configuration: `b0(psi, q) = -int 2 u psi`.
pub fn solve_adjoint(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u: &NodalField,
    mode: Mode,
    settings: &NewtonSettings,
) -> Result<NodalField> {
    adjoint_solve(mesh, material, u, u, mode, settings)
}

/// Averaged adjoint on the perturbed mesh: `b_eps(psi, q_eps) = -int (u0 + u_eps) psi`.
pub fn solve_averaged_adjoint(
    mesh_eps: &Mesh2D,
    material: &MaterialSpec,
    u0: &NodalField,
    u_eps: &NodalField,
    mode: Mode,
    settings: &NewtonSettings,
) -> Result<NodalField> {
    adjoint_solve(mesh_eps, material, u0, u_eps, mode, settings)
}

/// `J = int u^2` over all non-hole triangles.
pub fn evaluate_cost(mesh: &Mesh2D, u: &NodalField, mode: Mode) -> Result<f64> {
    u.check(mesh)?;
    let filter: &[Region] = match mode {
        Mode::Transmission => &[Region::Inclusion, Region::Matrix],
        Mode::Extremal => &[Region::Inclusion, Region::Matrix],
    };
    Ok(crate::assembly::integrate(
        mesh,
        &Quadrature::default(),
        Some(filter),
        |c| u.eval_in(mesh, c.triangle, c.lam).powi(2),
    ))
}

/// `G = int u^2 + int beta grad u . grad q + rho(u) q - f q` over the
/// non-hole triangles with the region-wise coefficients of `mesh`.
pub fn evaluate_lagrangian(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u: &NodalField,
    q: &NodalField,
    mode: Mode,
) -> Result<f64> {
    u.check(mesh)?;
    q.check(mesh)?;
    validate_mesh_mode(mesh, mode)?;
    let asm = Assembler::new(mesh, material, mode, Domain::Active, &Quadrature::default())?;
    Ok(asm.square_integral(u.values()) + asm.form(u.values(), q.values()))
}

/// Matrix of the adjoint system, exposed for diagnostics.
pub fn adjoint_matrix(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u: &NodalField,
    mode: Mode,
) -> Result<CsrMatrix> {
    let asm = Assembler::new(mesh, material, mode, Domain::Active, &Quadrature::default())?;
    Ok(asm.jacobian(u.values()).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_residual, h1_seminorm, l2_norm};
    use crate::linalg::norm_inf;
    use crate::material::{Nonlinearity, Source, Tensor};
    use crate::mesh::{build_rect_mesh, InclusionShape, Rect};

    fn benchmark() -> MaterialSpec {
        MaterialSpec {
            beta1: Tensor::Scalar(2.0),
            beta2: Tensor::Scalar(1.0),
            rho1: Nonlinearity::Cubic,
            rho2: Nonlinearity::Linear { lambda: 1.0 },
            f1: Source::constant(1.0),
            f2: Source::constant(1.0),
        }
    }

    fn omega0() -> InclusionShape {
        InclusionShape::disk([0.3, 0.3], 0.15)
    }

    #[test]
    fn zero_source_gives_zero_state() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.07, &[omega0()]).unwrap();
        let mut mat = benchmark();
        mat.f1 = Source::constant(0.0);
        mat.f2 = Source::constant(0.0);
        let s = solve_state(&m, &mat, &NewtonSettings::default()).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
        let q = solve_adjoint(
            &m,
            &mat,
            &s.u,
            Mode::Transmission,
            &NewtonSettings::default(),
        )
        .unwrap();
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn linear_poisson_one_step() {
        let m = build_rect_mesh(&Rect::unit_square(), 1.0 / 64.0, &[]).unwrap();
        let mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Zero, 1.0);
        let s = solve_state(&m, &mat, &NewtonSettings::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!((s.u.max_abs() - 0.0737).abs() < 0.02 * 0.0737);
    }

    #[test]
    fn benchmark_newton_converges_monotonically() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[omega0()]).unwrap();
        let settings = NewtonSettings::default();
        let s = solve_state(&m, &benchmark(), &settings).unwrap();
        assert!(s.iterations <= 10);
        assert!(s.history.windows(2).all(|w| w[1] < w[0]));
        let r = assemble_residual(&m, &benchmark(), &s.u, Mode::Transmission).unwrap();
        assert!(norm_inf(&r) < settings.tol);
        for v in m.marked_vertices(Marker::Outer) {
            assert_eq!(s.u.values()[v], 0.0);
        }
    }

    #[test]
    fn refinement_self_convergence() {
        let coarse = build_rect_mesh(&Rect::unit_square(), 0.07, &[omega0()]).unwrap();
        let meshes = [
            coarse.clone(),
            coarse.refine_uniform(),
            coarse.refine_uniform().refine_uniform(),
        ];
        let sols: Vec<NodalField> = meshes
            .iter()
            .map(|m| {
                solve_state(m, &benchmark(), &NewtonSettings::default())
                    .unwrap()
                    .u
            })
            .collect();
        // coarse vertices keep their numbers under red refinement
        let n = meshes[0].num_vertices();
        let restrict = |f: &NodalField| NodalField::new(f.values()[..n].to_vec());
        let d1 = restrict(&sols[1]).sub(&sols[0]);
        let d2 = restrict(&sols[2]).sub(&sols[0]);
        let e1 = l2_norm(&meshes[0], &d1);
        let e2 = l2_norm(&meshes[0], &d2.sub(&d1));
        assert!(e2 < 0.4 * e1, "cauchy differences {e1} {e2}");
        let maxes: Vec<f64> = sols.iter().map(NodalField::max_abs).collect();
        assert!(maxes.windows(2).all(|w| w[1] <= 1.05 * w[0]));
    }

    #[test]
    fn adjoint_of_linear_problem_is_chained_poisson() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[]).unwrap();
        let mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Zero, 1.0);
        let settings = NewtonSettings::default();
        let u = solve_state(&m, &mat, &settings).unwrap().u;
        let q = solve_adjoint(&m, &mat, &u, Mode::Transmission, &settings).unwrap();
        // -lap w = u with w = 0 on the boundary; q = -2 w
        let asm = Assembler::new(
            &m,
            &mat,
            Mode::Transmission,
            Domain::Active,
            &Quadrature::default(),
        )
        .unwrap();
        let mut sys = SparseSystem::new(asm.jacobian(u.values()), asm.load(u.values()));
        sys.constrain(
            m.marked_vertices(Marker::Outer)
                .into_iter()
                .map(|v| (v, 0.0)),
        );
        let (w, _) = sys.solve(&settings.linear).unwrap();
        let scale = q.max_abs();
        for (a, b) in q.values().iter().zip(&w) {
            assert!((a + 2.0 * b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn averaged_adjoint_degenerates() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[omega0()]).unwrap();
        let settings = NewtonSettings::default();
        let u = solve_state(&m, &benchmark(), &settings).unwrap().u;
        let q = solve_adjoint(&m, &benchmark(), &u, Mode::Transmission, &settings).unwrap();
        let q2 = solve_averaged_adjoint(&m, &benchmark(), &u, &u, Mode::Transmission, &settings)
            .unwrap();
        assert_eq!(q, q2);
    }

    #[test]
    fn averaged_adjoint_linear_rho_depends_on_sum_only() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[omega0()]).unwrap();
        let mut mat = benchmark();
        mat.rho1 = Nonlinearity::Linear { lambda: 3.0 };
        let settings = NewtonSettings::default();
        let a = NodalField::interpolate(&m, |x| x[0] * (1.0 - x[0]));
        let b = NodalField::interpolate(&m, |x| x[1] * (1.0 - x[1]));
        let s = a.add(&b);
        let half = s.scaled(0.5);
        let q1 = solve_averaged_adjoint(&m, &mat, &a, &b, Mode::Transmission, &settings).unwrap();
        let q2 =
            solve_averaged_adjoint(&m, &mat, &half, &half, Mode::Transmission, &settings).unwrap();
        assert!(q1.sub(&q2).max_abs() <= 1e-10 * q1.max_abs());
    }

    #[test]
    fn cost_and_lagrangian_contracts() {
        let disk = InclusionShape::disk([0.5, 0.5], 0.2);
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[disk]).unwrap();
        let one = NodalField::new(vec![1.0; m.num_vertices()]);
        assert!((evaluate_cost(&m, &one, Mode::Transmission).unwrap() - 1.0).abs() < 1e-12);
        let holed = m.retag_shape(0, Region::Hole).unwrap();
        let a = m.shapes()[0].area();
        assert!((evaluate_cost(&holed, &one, Mode::Extremal).unwrap() - (1.0 - a)).abs() < 1e-12);

        let settings = NewtonSettings::default();
        let mat = benchmark();
        let u = solve_state(&m, &mat, &settings).unwrap().u;
        let zero = NodalField::zeros(m.num_vertices());
        let j = evaluate_cost(&m, &u, Mode::Transmission).unwrap();
        assert_eq!(
            evaluate_lagrangian(&m, &mat, &u, &zero, Mode::Transmission).unwrap(),
            j
        );
        let q1 = NodalField::interpolate(&m, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        let q2 = NodalField::interpolate(&m, |x| {
            (x[0] * 3.0).sin() * x[1] * (1.0 - x[1]) * x[0] * (1.0 - x[0])
        });
        let g = |q: &NodalField| evaluate_lagrangian(&m, &mat, &u, q, Mode::Transmission).unwrap();
        assert!((g(&q1) - j).abs() <= 1e-10 * q1.max_abs().max(1.0));
        let q12 = q1.add(&q2);
        let arbitrary = NodalField::interpolate(&m, |x| x[0] + 0.3);
        let gq = |q: &NodalField| {
            evaluate_lagrangian(&m, &mat, &arbitrary, q, Mode::Transmission).unwrap()
        };
        assert!((gq(&q12) - gq(&q1) - gq(&q2) + gq(&zero)).abs() < 1e-12);
    }

    #[test]
    fn extremal_without_hole_matches_transmission() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[]).unwrap();
        let mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Atan, 1.0);
        let settings = NewtonSettings::default();
        let a = solve_state(&m, &mat, &settings).unwrap().u;
        let b = solve_state_extremal(&m, &mat, &settings).unwrap().u;
        assert_eq!(a, b);
    }

    #[test]
    fn extremal_zero_source_and_extension() {
        let hole = InclusionShape::disk([0.5, 0.5], 0.1);
        let m = build_rect_mesh(&Rect::unit_square(), 0.05, &[hole])
            .unwrap()
            .retag_shape(0, Region::Hole)
            .unwrap();
        let mut mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Atan, 0.0);
        let settings = NewtonSettings::default();
        assert_eq!(
            solve_state_extremal(&m, &mat, &settings)
                .unwrap()
                .u
                .max_abs(),
            0.0
        );
        mat.f2 = Source::constant(1.0);
        let u = solve_state_extremal(&m, &mat, &settings).unwrap().u;
        // extension is defined and bounded by the rim values' range
        let c = u.eval(&m, [0.5, 0.5]).unwrap();
        assert!(c > 0.0 && c <= u.max_abs());
        assert!(solve_state(&m, &mat, &settings).is_err());
        let q = solve_adjoint(&m, &mat, &u, Mode::Extremal, &settings).unwrap();
        assert!(q.eval(&m, [0.5, 0.5]).unwrap() < 0.0);
        assert!(h1_seminorm(&m, &q) > 0.0);
    }
}
