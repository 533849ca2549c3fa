//! P1 kernels: residuals, Jacobians, the averaged bilinear form, constraints,
//! integration and gradient recovery.

mod field;
mod recovery;

pub use field::{basis_gradients, NodalField};
pub use recovery::{recover_gradient, recover_gradient_with, Recovery};

use crate::error::{Error, Result};
use crate::linalg::{LinearSettings, SolveReport};
use crate::material::{dot, mat_vec, Mat2, MaterialSpec, Mode, Nonlinearity};
use crate::mesh::{Marker, Mesh2D, Region};
use crate::{CsrMatrix, Point, Quadrature, SparseSystem};

/// Which triangles an [`Assembler`] integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Every triangle that is not a hole. Holes are an error in transmission mode.
    Active,
    /// Only hole triangles, carrying the matrix-phase coefficients.
    Hole,
}

#[derive(Debug, Clone)]
struct QuadPoint {
    lam: [f64; 3],
    /// Quadrature weight times the triangle area.
    w: f64,
    beta: Mat2,
    f: f64,
}

#[derive(Debug, Clone)]
struct Element {
    tri: [usize; 3],
    grads: [[f64; 2]; 3],
    rho: Nonlinearity,
    qp: Vec<QuadPoint>,
}

/// Element data for one mesh, material and integration domain. Coefficients
/// are sampled once at the quadrature points.
#[derive(Debug, Clone)]
pub struct Assembler<'a> {
    mesh: &'a Mesh2D,
    quad: Quadrature,
    elements: Vec<Element>,
    active: Vec<bool>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        mesh: &'a Mesh2D,
        material: &MaterialSpec,
        mode: Mode,
        domain: Domain,
        quad: &Quadrature,
    ) -> Result<Self> {
        let rule_lam = quad.triangle.barycentric();
        let mut elements = Vec::new();
        let mut active = vec![false; mesh.num_vertices()];
        for t in 0..mesh.num_triangles() {
            let region = mesh.region(t);
            let take = match (domain, region) {
                (Domain::Active, Region::Hole) if mode == Mode::Transmission => {
                    return Err(Error::Argument(
                        "hole triangles are only allowed in void mode".into(),
                    ))
                }
                (Domain::Active, Region::Hole) => None,
                (Domain::Active, r) => Some(r),
                (Domain::Hole, Region::Hole) => Some(Region::Matrix),
                (Domain::Hole, _) => None,
            };
            let Some(phase) = take else { continue };
            let tri = mesh.triangles()[t];
            let c = mesh.coords(t);
            let area = mesh.area(t);
            let qp = rule_lam
                .iter()
                .zip(&quad.triangle.weights)
                .map(|(&lam, &w)| {
                    let x = [
                        lam[0] * c[0][0] + lam[1] * c[1][0] + lam[2] * c[2][0],
                        lam[0] * c[0][1] + lam[1] * c[1][1] + lam[2] * c[2][1],
                    ];
                    // reference weights sum to 1/2
                    QuadPoint {
                        lam,
                        w: 2.0 * w * area,
                        beta: material.beta(phase, x),
                        f: material.f(phase, x),
                    }
                })
                .collect();
            for &v in &tri {
                active[v] = true;
            }
            elements.push(Element {
                tri,
                grads: basis_gradients(mesh, t),
                rho: *material.rho(phase),
                qp,
            });
        }
        Ok(Assembler {
            mesh,
            quad: quad.clone(),
            elements,
            active,
        })
    }

    pub fn mesh(&self) -> &Mesh2D {
        self.mesh
    }

    /// Vertices not touched by any integrated triangle.
    pub fn inactive_vertices(&self) -> Vec<usize> {
        (0..self.active.len())
            .filter(|&v| !self.active[v])
            .collect()
    }

    pub fn is_active(&self, v: usize) -> bool {
        self.active[v]
    }

    /// `F_i(u) = sum over elements of int beta grad u . grad phi_i + rho(u) phi_i - f phi_i`.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.mesh.num_vertices()];
        for e in &self.elements {
            let uv = e.tri.map(|v| u[v]);
            let gu = grad_of(&e.grads, uv);
            for q in &e.qp {
                let uq = dot3(q.lam, uv);
                let flux = mat_vec(&q.beta, gu);
                let react = e.rho.eval(uq) - q.f;
                for i in 0..3 {
                    r[e.tri[i]] += q.w * (dot(flux, e.grads[i]) + react * q.lam[i]);
                }
            }
        }
        r
    }

    /// `A_ij = int beta grad phi_j . grad phi_i + c phi_j phi_i` where the
    /// reaction coefficient `c` comes from `reaction(element, qp value)`.
    fn bilinear(&self, reaction: impl Fn(&Element, &QuadPoint) -> f64) -> CsrMatrix {
        let mut a = CsrMatrix::from_pattern(self.mesh.num_vertices(), self.mesh.adjacency());
        for e in &self.elements {
            let mut k = [[0.0; 3]; 3];
            for q in &e.qp {
                let c = reaction(e, q);
                for j in 0..3 {
                    let flux = mat_vec(&q.beta, e.grads[j]);
                    for i in 0..3 {
                        k[i][j] += q.w * (dot(flux, e.grads[i]) + c * q.lam[j] * q.lam[i]);
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    a.add(e.tri[i], e.tri[j], k[i][j]);
                }
            }
        }
        a
    }

    /// Jacobian of [`Assembler::residual`] at `u`.
    pub fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        self.bilinear(|e, q| e.rho.deriv(dot3(q.lam, e.tri.map(|v| u[v]))))
    }

    /// Bilinear form with the reaction coefficient averaged along the segment
    /// from `u0` to `u_eps` by the interval rule. Equals the Jacobian wherever
    /// the two fields agree.
    pub fn averaged(&self, u0: &[f64], u_eps: &[f64]) -> CsrMatrix {
        let rule = &self.quad.interval;
        self.bilinear(|e, q| {
            let a = dot3(q.lam, e.tri.map(|v| u0[v]));
            let b = dot3(q.lam, e.tri.map(|v| u_eps[v]));
            averaged_slope(&e.rho, a, b, &rule.points, &rule.weights)
        })
    }

    /// Load vector `int g phi_i` for a field `g` given at the vertices.
    pub fn load(&self, g: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.mesh.num_vertices()];
        for e in &self.elements {
            let gv = e.tri.map(|v| g[v]);
            for q in &e.qp {
                let gq = dot3(q.lam, gv);
                for i in 0..3 {
                    r[e.tri[i]] += q.w * gq * q.lam[i];
                }
            }
        }
        r
    }

    /// `int beta grad u . grad q + rho(u) q - f q` over the domain.
    pub fn form(&self, u: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        for e in &self.elements {
            let uv = e.tri.map(|v| u[v]);
            let qv = e.tri.map(|v| q[v]);
            let (gu, gq) = (grad_of(&e.grads, uv), grad_of(&e.grads, qv));
            for p in &e.qp {
                let (uq, qq) = (dot3(p.lam, uv), dot3(p.lam, qv));
                s += p.w * (dot(mat_vec(&p.beta, gu), gq) + (e.rho.eval(uq) - p.f) * qq);
            }
        }
        s
    }

    /// `int u^2` over the domain.
    pub fn square_integral(&self, u: &[f64]) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let uv = e.tri.map(|v| u[v]);
                e.qp.iter()
                    .map(|p| p.w * dot3(p.lam, uv).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `int_0^1 rho'(s b + (1 - s) a) ds` by the given rule; exact derivative when `a == b`.
pub fn averaged_slope(rho: &Nonlinearity, a: f64, b: f64, points: &[f64], weights: &[f64]) -> f64 {
    if a == b {
        return rho.deriv(a);
    }
    points
        .iter()
        .zip(weights)
        .map(|(&s, &w)| w * rho.deriv(s * b + (1.0 - s) * a))
        .sum()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn grad_of(grads: &[[f64; 2]; 3], v: [f64; 3]) -> [f64; 2] {
    [
        grads[0][0] * v[0] + grads[1][0] * v[1] + grads[2][0] * v[2],
        grads[0][1] * v[0] + grads[1][1] * v[1] + grads[2][1] * v[2],
    ]
}

fn check_field(mesh: &Mesh2D, u: &NodalField) -> Result<()> {
    u.check(mesh)
}

/// State residual with region-wise coefficients. Components on the outer
/// boundary and on vertices outside the integration domain are zero.
pub fn assemble_residual(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u: &NodalField,
    mode: Mode,
) -> Result<Vec<f64>> {
    check_field(mesh, u)?;
    let asm = Assembler::new(mesh, material, mode, Domain::Active, &Quadrature::default())?;
    let mut r = asm.residual(u.values());
    for v in mesh
        .marked_vertices(Marker::Outer)
        .into_iter()
        .chain(asm.inactive_vertices())
    {
        r[v] = 0.0;
    }
    Ok(r)
}

/// Jacobian of the state residual at `u`, unconstrained.
pub fn assemble_jacobian(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u: &NodalField,
    mode: Mode,
) -> Result<SparseSystem> {
    check_field(mesh, u)?;
    let asm = Assembler::new(mesh, material, mode, Domain::Active, &Quadrature::default())?;
    let n = mesh.num_vertices();
    Ok(SparseSystem::new(asm.jacobian(u.values()), vec![0.0; n]))
}

/// Averaged bilinear form in Jacobian orientation (`(i, j)` pairs trial `j`
/// with test `i`); transpose it to solve in the second argument.
pub fn assemble_averaged_bilinear(
    mesh: &Mesh2D,
    material: &MaterialSpec,
    u0: &NodalField,
    u_eps: &NodalField,
    mode: Mode,
    quad: &Quadrature,
) -> Result<SparseSystem> {
    check_field(mesh, u0)?;
    check_field(mesh, u_eps)?;
    let asm = Assembler::new(mesh, material, mode, Domain::Active, quad)?;
    let n = mesh.num_vertices();
    Ok(SparseSystem::new(
        asm.averaged(u0.values(), u_eps.values()),
        vec![0.0; n],
    ))
}

/// Fixes every vertex on an edge with `marker` to `value`.
pub fn apply_dirichlet(
    mut system: SparseSystem,
    mesh: &Mesh2D,
    marker: Marker,
    value: f64,
) -> Result<SparseSystem> {
    let dofs = mesh.marked_vertices(marker);
    if dofs.is_empty() {
        return Err(Error::Argument(format!("mesh has no {marker:?} edges")));
    }
    if system.dim() != mesh.num_vertices() {
        return Err(Error::Argument("system and mesh sizes differ".into()));
    }
    system.constrain(dofs.into_iter().map(|v| (v, value)));
    Ok(system)
}

pub fn solve_linear(
    system: &SparseSystem,
    settings: &LinearSettings<f64>,
) -> Result<(NodalField, SolveReport)> {
    let (x, report) = system.solve(settings)?;
    Ok((NodalField::new(x), report))
}

/// Data handed to an integrand at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QpContext {
    pub triangle: usize,
    pub region: Region,
    pub x: Point,
    pub lam: [f64; 3],
}

/// Quadrature sum of `f` over the triangles whose region is in `filter`
/// (all triangles when `filter` is `None`).
pub fn integrate(
    mesh: &Mesh2D,
    quad: &Quadrature,
    filter: Option<&[Region]>,
    f: impl Fn(&QpContext) -> f64,
) -> f64 {
    let lams = quad.triangle.barycentric();
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let region = mesh.region(t);
        if filter.is_some_and(|rs| !rs.contains(&region)) {
            continue;
        }
        let c = mesh.coords(t);
        let area = mesh.area(t);
        // per-triangle partial sums match the summation order of the assembler
        s += lams
            .iter()
            .zip(&quad.triangle.weights)
            .map(|(&lam, &w)| {
                let x = [
                    lam[0] * c[0][0] + lam[1] * c[1][0] + lam[2] * c[2][0],
                    lam[0] * c[0][1] + lam[1] * c[1][1] + lam[2] * c[2][1],
                ];
                2.0 * w
                    * area
                    * f(&QpContext {
                        triangle: t,
                        region,
                        x,
                        lam,
                    })
            })
            .sum::<f64>();
    }
    s
}

pub fn l2_norm(mesh: &Mesh2D, u: &NodalField) -> f64 {
    integrate(mesh, &Quadrature::default(), None, |c| {
        u.eval_in(mesh, c.triangle, c.lam).powi(2)
    })
    .sqrt()
}

pub fn h1_seminorm(mesh: &Mesh2D, u: &NodalField) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            let g = u.gradient_on(mesh, t);
            mesh.area(t) * (g[0] * g[0] + g[1] * g[1])
        })
        .sum::<f64>()
        .sqrt()
}

pub fn h1_norm(mesh: &Mesh2D, u: &NodalField) -> f64 {
    l2_norm(mesh, u).hypot(h1_seminorm(mesh, u))
}
