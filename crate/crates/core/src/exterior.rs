//! Exterior corrector problems on a truncated ball and the polarisation
//! matrices built from them.

use crate::assembly::{Assembler, Domain, NodalField};
use crate::error::{Error, Result};
use crate::linalg::LinearSettings;
use crate::material::{
    dot, mat_vec, scaled_identity, sym_eigenvalues, Mat2, MaterialSpec, Mode, Nonlinearity, Source,
    Tensor,
};
use crate::mesh::{build_ball_mesh_with, BallOptions, InclusionShape, Marker, Mesh2D, Region};
use crate::{Quadrature, SparseSystem};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Discretisation of the truncated whole-space problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExteriorNumerics {
    /// Truncation radius; `Q = 0` on its circle.
    pub radius: f64,
    pub interface_h: f64,
    pub grading: f64,
    pub n_seg: usize,
    /// Uniform refinements applied after generation.
    pub refinements: usize,
    pub linear: LinearSettings<f64>,
}

impl Default for ExteriorNumerics {
    fn default() -> Self {
        ExteriorNumerics {
            radius: 50.0,
            interface_h: 0.05,
            grading: 1.2,
            n_seg: 64,
            refinements: 0,
            linear: LinearSettings::default(),
        }
    }
}

/// Coefficients frozen at a point, reference shape and load direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorProblem {
    pub beta1: Mat2,
    pub beta2: Mat2,
    pub shape: InclusionShape,
    pub zeta: [f64; 2],
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarisationMatrix {
    pub entries: Mat2,
    pub mode: Mode,
    /// Truncation radius, interface spacing and refinement level of the
    /// solves; all zero for closed-form values.
    pub radius: f64,
    pub interface_h: f64,
    pub refinements: usize,
}

impl PolarisationMatrix {
    pub fn apply(&self, zeta: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.entries, zeta)
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `|P - P^T| / |P|` in the Frobenius norm.
    pub fn asymmetry(&self) -> f64 {
        let d = self.entries[0][1] - self.entries[1][0];
        (2.0 * d * d).sqrt() / self.norm()
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        sym_eigenvalues(&self.entries)[0]
    }
}

/// Fitted ball mesh for `shape`; the shape's triangles are holes in void mode.
pub fn exterior_mesh(
    shape: &InclusionShape,
    mode: Mode,
    numerics: &ExteriorNumerics,
) -> Result<Mesh2D> {
    let opts = BallOptions {
        interface_h: numerics.interface_h,
        grading: numerics.grading,
        n_seg: numerics.n_seg,
        ..BallOptions::default()
    };
    let mut mesh = build_ball_mesh_with(numerics.radius, shape, &opts)?;
    for _ in 0..numerics.refinements {
        mesh = mesh.refine_uniform();
    }
    match mode {
        Mode::Transmission => Ok(mesh),
        Mode::Extremal => mesh.retag_shape(0, Region::Hole),
    }
}

fn frozen_material(beta1: &Mat2, beta2: &Mat2) -> MaterialSpec {
    MaterialSpec {
        beta1: Tensor::Matrix(*beta1),
        beta2: Tensor::Matrix(*beta2),
        rho1: Nonlinearity::Zero,
        rho2: Nonlinearity::Zero,
        f1: Source::constant(0.0),
        f2: Source::constant(0.0),
    }
}

fn check_coercive(name: &str, m: &Mat2) -> Result<()> {
    let lo = sym_eigenvalues(m)[0];
    if !(lo > 0.0) || m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Material(format!(
            "{name} is not positive definite (smallest eigenvalue {lo})"
        )));
    }
    Ok(())
}

/// `int_{boundary of omega} (zeta . nu) psi_i` with `nu` pointing out of the shape.
pub fn interface_load(mesh: &Mesh2D, zeta: [f64; 2]) -> Vec<f64> {
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if mesh.owner(t) == Some(0) {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_owner.insert((a.min(b), a.max(b)), tri[(k + 2) % 3]);
            }
        }
    }
    let pts = mesh.vertices();
    let mut load = vec![0.0; mesh.num_vertices()];
    for e in mesh.boundary_edges().iter().filter(|e| e.shape == Some(0)) {
        let [a, b] = e.vertices;
        let Some(&inner) = edge_owner.get(&(a.min(b), a.max(b))) else {
            continue;
        };
        let (pa, pb) = (pts[a], pts[b]);
        // length-weighted normal
        let mut n = [pb[1] - pa[1], pa[0] - pb[0]];
        let to_inner = [pts[inner][0] - pa[0], pts[inner][1] - pa[1]];
        if dot(n, to_inner) > 0.0 {
            n = [-n[0], -n[1]];
        }
        let flux = 0.5 * dot(zeta, n);
        load[a] += flux;
        load[b] += flux;
    }
    load
}

/// Area-weighted mean of the elementwise gradient over the shape's triangles.
pub fn average_gradient(mesh: &Mesh2D, q: &NodalField) -> [f64; 2] {
    let (mut g, mut area) = ([0.0; 2], 0.0);
    for t in (0..mesh.num_triangles()).filter(|&t| mesh.owner(t) == Some(0)) {
        let a = mesh.area(t);
        let gt = q.gradient_on(mesh, t);
        g[0] += a * gt[0];
        g[1] += a * gt[1];
        area += a;
    }
    [g[0] / area, g[1] / area]
}

/// Solves the corrector problem on an already built exterior mesh.
pub fn solve_exterior_on(
    mesh: &Mesh2D,
    problem: &ExteriorProblem,
    linear: &LinearSettings<f64>,
) -> Result<NodalField> {
    check_coercive("beta2", &problem.beta2)?;
    if problem.mode == Mode::Transmission {
        check_coercive("beta1", &problem.beta1)?;
    }
    if !(problem.zeta[0].is_finite() && problem.zeta[1].is_finite()) {
        return Err(Error::Argument("load direction must be finite".into()));
    }
    let material = frozen_material(&problem.beta1, &problem.beta2);
    let quad = Quadrature::default();
    let n = mesh.num_vertices();
    let asm = Assembler::new(mesh, &material, problem.mode, Domain::Active, &quad)?;
    let zero = vec![0.0; n];
    // corrector tested in its second slot: transpose of the Jacobian orientation
    let mut sys = SparseSystem::new(
        asm.jacobian(&zero).transpose(),
        interface_load(mesh, problem.zeta),
    );
    let mut fixed = mesh.marked_vertices(Marker::Outer);
    fixed.extend(asm.inactive_vertices());
    sys.constrain(fixed.into_iter().map(|v| (v, 0.0)));
    let (q, _) = sys.solve(linear)?;
    if problem.mode == Mode::Transmission {
        return Ok(NodalField::new(q));
    }
    // Dirichlet extension into the void with the rim values as data
    let ext = Assembler::new(mesh, &material, problem.mode, Domain::Hole, &quad)?;
    let mut sys = SparseSystem::new(ext.jacobian(&zero).transpose(), vec![0.0; n]);
    let active: Vec<usize> = (0..n)
        .filter(|&v| asm.is_active(v) || !ext.is_active(v))
        .collect();
    sys.constrain(active.into_iter().map(|v| (v, q[v])));
    let (q, _) = sys.solve(linear)?;
    Ok(NodalField::new(q))
}

/// Transmission corrector: `int A grad psi . grad Q = int_omega zeta . grad psi`.
pub fn solve_exterior(
    problem: &ExteriorProblem,
    numerics: &ExteriorNumerics,
) -> Result<(Mesh2D, NodalField)> {
    if problem.mode != Mode::Transmission {
        return Err(Error::Argument(
            "solve_exterior expects transmission mode".into(),
        ));
    }
    let mesh = exterior_mesh(&problem.shape, problem.mode, numerics)?;
    let q = solve_exterior_on(&mesh, problem, &numerics.linear)?;
    Ok((mesh, q))
}

/// Void corrector: natural condition `beta2 d_nu Q = -zeta . nu` on the rim of
/// the void, then a discrete-harmonic Dirichlet extension inside it.
pub fn solve_exterior_extremal(
    problem: &ExteriorProblem,
    numerics: &ExteriorNumerics,
) -> Result<(Mesh2D, NodalField)> {
    if problem.mode != Mode::Extremal {
        return Err(Error::Argument(
            "solve_exterior_extremal expects void mode".into(),
        ));
    }
    let mesh = exterior_mesh(&problem.shape, problem.mode, numerics)?;
    let q = solve_exterior_on(&mesh, problem, &numerics.linear)?;
    Ok((mesh, q))
}

/// Column `j` is the shape average of `grad Q` for `zeta = e_j`.
pub fn polarisation_matrix(
    beta1: &Mat2,
    beta2: &Mat2,
    shape: &InclusionShape,
    mode: Mode,
    numerics: &ExteriorNumerics,
) -> Result<PolarisationMatrix> {
    let mesh = exterior_mesh(shape, mode, numerics)?;
    polarisation_on(&mesh, beta1, beta2, shape, mode, numerics)
}

/// As [`polarisation_matrix`] on a prebuilt exterior mesh.
pub fn polarisation_on(
    mesh: &Mesh2D,
    beta1: &Mat2,
    beta2: &Mat2,
    shape: &InclusionShape,
    mode: Mode,
    numerics: &ExteriorNumerics,
) -> Result<PolarisationMatrix> {
    let column = |zeta: [f64; 2]| -> Result<[f64; 2]> {
        let problem = ExteriorProblem {
            beta1: *beta1,
            beta2: *beta2,
            shape: shape.reference(),
            zeta,
            mode,
        };
        let q = solve_exterior_on(mesh, &problem, &numerics.linear)?;
        Ok(average_gradient(mesh, &q))
    };
    let (c0, c1) = rayon::join(|| column([1.0, 0.0]), || column([0.0, 1.0]));
    let (c0, c1) = (c0?, c1?);
    let p = PolarisationMatrix {
        entries: [[c0[0], c1[0]], [c0[1], c1[1]]],
        mode,
        radius: numerics.radius,
        interface_h: numerics.interface_h,
        refinements: numerics.refinements,
    };
    let symmetric =
        (beta1[0][1] == beta1[1][0] || mode == Mode::Extremal) && beta2[0][1] == beta2[1][0];
    if symmetric && p.asymmetry() > 1e-6 {
        log::info!("polarisation matrix asymmetry {:.2e}", p.asymmetry());
    }
    if p.min_eigenvalue() <= 0.0 {
        log::warn!(
            "polarisation matrix is not positive definite: {:?}",
            p.entries
        );
    }
    Ok(p)
}

/// Closed form for a disk with scalar coefficients: `I / (beta1 + beta2)`,
/// or `I / beta2` for a void.
pub fn disk_polarisation_analytic(
    beta1: &Tensor,
    beta2: &Tensor,
    mode: Mode,
) -> Result<PolarisationMatrix> {
    let b2 = beta2
        .as_scalar()
        .ok_or_else(|| Error::Argument("analytic disk value needs scalar beta2".into()))?;
    let s = match mode {
        Mode::Transmission => {
            let b1 = beta1
                .as_scalar()
                .ok_or_else(|| Error::Argument("analytic disk value needs scalar beta1".into()))?;
            if !(b1 + b2 > 0.0) {
                return Err(Error::Argument("beta1 + beta2 must be positive".into()));
            }
            1.0 / (b1 + b2)
        }
        Mode::Extremal => {
            if !(b2 > 0.0) {
                return Err(Error::Argument("beta2 must be positive".into()));
            }
            1.0 / b2
        }
    };
    Ok(PolarisationMatrix {
        entries: scaled_identity(s),
        mode,
        radius: 0.0,
        interface_h: 0.0,
        refinements: 0,
    })
}

fn contrast(beta1: f64, beta2: f64) -> Result<f64> {
    let d = beta1 - beta2;
    if d == 0.0 || !d.is_finite() || beta2 == 0.0 {
        return Err(Error::Degenerate(
            "weak/strong relation needs beta1 != beta2 and beta2 != 0".into(),
        ));
    }
    Ok(d)
}

/// Classical matrix from the weak one: `|omega| (b1 - b2) / b2 * (I / (b1 - b2) - P)`.
pub fn strong_from_weak(p: &Mat2, beta1: f64, beta2: f64, area: f64) -> Result<Mat2> {
    let d = contrast(beta1, beta2)?;
    let k = area * d / beta2;
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 / d } else { 0.0 };
            out[i][j] = k * (id - p[i][j]);
        }
    }
    Ok(out)
}

/// Inverse of [`strong_from_weak`]: `P = -(b2 / ((b1 - b2) |omega|)) Pt + I / (b1 - b2)`.
pub fn weak_from_strong(pt: &Mat2, beta1: f64, beta2: f64, area: f64) -> Result<Mat2> {
    let d = contrast(beta1, beta2)?;
    let k = beta2 / (d * area);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 / d } else { 0.0 };
            out[i][j] = id - k * pt[i][j];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub radius: f64,
    pub level: usize,
    pub entries: Mat2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationStudy {
    pub rows: Vec<StudyRow>,
    /// Richardson extrapolation of `P11` over the three finest levels at the
    /// largest radius, with the observed order.
    pub extrapolated: Option<f64>,
    pub observed_order: Option<f64>,
}

impl TruncationStudy {
    pub fn entry(&self, radius: f64, level: usize) -> Option<Mat2> {
        self.rows
            .iter()
            .find(|r| r.radius == radius && r.level == level)
            .map(|r| r.entries)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,level,P11,P12,P21,P22\n");
        for r in &self.rows {
            let p = r.entries;
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e}\n",
                r.radius, r.level, p[0][0], p[0][1], p[1][0], p[1][1]
            ));
        }
        s
    }
}

/// Polarisation matrix for every `(R, refinement level)` pair.
pub fn truncation_study(
    beta1: &Mat2,
    beta2: &Mat2,
    shape: &InclusionShape,
    mode: Mode,
    radii: &[f64],
    levels: &[usize],
    base: &ExteriorNumerics,
) -> Result<TruncationStudy> {
    use rayon::prelude::*;
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(
            "truncation radii must be increasing".into(),
        ));
    }
    let cells: Vec<(f64, usize)> = radii
        .iter()
        .flat_map(|&r| levels.iter().map(move |&l| (r, l)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(radius, level)| {
            let numerics = ExteriorNumerics {
                radius,
                refinements: level,
                ..*base
            };
            polarisation_matrix(beta1, beta2, shape, mode, &numerics).map(|p| StudyRow {
                radius,
                level,
                entries: p.entries,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut extrapolated, mut observed_order) = (None, None);
    if let (Some(&r), true) = (radii.last(), levels.len() >= 3) {
        let mut ls: Vec<usize> = levels.to_vec();
        ls.sort_unstable();
        let v: Vec<f64> = ls[ls.len() - 3..]
            .iter()
            .filter_map(|&l| rows.iter().find(|row| row.radius == r && row.level == l))
            .map(|row| row.entries[0][0])
            .collect();
        let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
        if d2 != 0.0 && d1 / d2 > 1.0 {
            let order = (d1 / d2).log2();
            observed_order = Some(order);
            extrapolated = Some(v[2] + d2 / (2f64.powf(order) - 1.0));
        }
    }
    Ok(TruncationStudy {
        rows,
        extrapolated,
        observed_order,
    })
}
