//! Run configuration: one TOML document describes a complete run.

use crate::error::{Error, Result};
use crate::exterior::ExteriorNumerics;
use crate::material::{MaterialSpec, Mode, Nonlinearity, Source, Tensor};
use crate::mesh::{InclusionShape, MeshOptions, Rect, ShapeKind};
use crate::pde::NewtonSettings;
use crate::topo::{GridSpec, PolSource, TdOptions};
use crate::Point;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub h: f64,
    pub n_seg: usize,
    pub interface_fraction: f64,
    pub grading: f64,
    pub min_angle_deg: f64,
    pub newton: NewtonSettings,
    pub patch_factor: f64,
    pub exclusion_factor: f64,
    pub pol_source: PolSource,
    pub exterior: ExteriorNumerics,
}

impl Default for Numerics {
    fn default() -> Self {
        let m = MeshOptions::default();
        let td = TdOptions::default();
        Numerics {
            h: 0.02,
            n_seg: m.n_seg,
            interface_fraction: m.interface_fraction,
            grading: m.grading,
            min_angle_deg: m.min_angle_deg,
            newton: NewtonSettings::default(),
            patch_factor: td.patch_factor,
            exclusion_factor: td.exclusion_factor,
            pol_source: td.pol_source,
            exterior: td.exterior,
        }
    }
}

impl Numerics {
    pub fn mesh_options(&self) -> MeshOptions {
        MeshOptions {
            h: self.h,
            n_seg: self.n_seg,
            interface_fraction: self.interface_fraction,
            grading: self.grading,
            min_angle_deg: self.min_angle_deg,
        }
    }

    pub fn td_options(&self) -> TdOptions {
        TdOptions {
            patch_factor: self.patch_factor,
            exclusion_factor: self.exclusion_factor,
            pol_source: self.pol_source,
            exterior: ExteriorNumerics {
                n_seg: self.n_seg,
                ..self.exterior
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    pub points: Vec<Point>,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSettings {
    pub z: Point,
    pub eps_list: Vec<f64>,
    /// Perturbation size of the Lagrangian identity check.
    pub identity_eps: f64,
    /// Truncation radii and refinement levels of the polarisation study.
    pub radii: Vec<f64>,
    pub levels: Vec<usize>,
    /// The mesh around `omega_eps` is refined relative to `eps` as `eps`
    /// shrinks: interface fraction and grading excess scale with
    /// `(eps / eps_max)^exponent`. Zero keeps them fixed.
    pub refinement_exponent: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            z: [0.7, 0.7],
            eps_list: vec![0.08, 0.04, 0.02, 0.01],
            identity_eps: 0.04,
            radii: vec![10.0, 25.0, 50.0, 100.0],
            levels: vec![0, 1, 2],
            refinement_exponent: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Vtk,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Vtk, Format::Json],
        }
    }
}

impl Outputs {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub domain: Rect,
    /// Reference shape of the nucleated inclusion, centred at the origin.
    pub omega: ShapeKind,
    /// Inclusion already present in the unperturbed configuration.
    #[serde(default, rename = "Omega0", alias = "omega0")]
    pub omega0: Option<InclusionShape>,
    pub materials: MaterialSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub evaluation: Evaluation,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    /// Semilinear transmission benchmark on the unit square. `omega` is the
    /// unit disk, so the closed-form polarisation matrix is used.
    pub fn benchmark_transmission() -> Self {
        RunConfig {
            mode: Mode::Transmission,
            domain: Rect::unit_square(),
            omega: ShapeKind::unit_disk(),
            omega0: Some(InclusionShape::disk([0.3, 0.3], 0.15)),
            materials: MaterialSpec {
                beta1: Tensor::Scalar(2.0),
                beta2: Tensor::Scalar(1.0),
                rho1: Nonlinearity::Cubic,
                rho2: Nonlinearity::Linear { lambda: 1.0 },
                f1: Source::constant(1.0),
                f2: Source::constant(1.0),
            },
            numerics: Numerics {
                pol_source: PolSource::AnalyticDisk,
                ..Numerics::default()
            },
            evaluation: Evaluation {
                points: vec![[0.7, 0.7]],
                grid: None,
            },
            validation: ValidationSettings::default(),
            outputs: Outputs::default(),
        }
    }

    /// Void benchmark: `beta2 = 1`, `rho2 = atan`, `f2 = 1`, no background inclusion.
    pub fn benchmark_extremal() -> Self {
        RunConfig {
            mode: Mode::Extremal,
            omega0: None,
            materials: MaterialSpec::homogeneous(1.0, Nonlinearity::Atan, 1.0),
            ..Self::benchmark_transmission()
        }
    }

    pub fn shape(&self) -> InclusionShape {
        InclusionShape::new(self.omega.clone(), [0.0, 0.0], 1.0)
    }

    /// Fitted shapes of the unperturbed mesh.
    pub fn background(&self) -> Vec<InclusionShape> {
        self.omega0.iter().cloned().collect()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded. Output settings do
    /// not change results and are left out.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&RunConfig {
            outputs: Outputs::default(),
            ..self.clone()
        })
        .unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cross-field checks, run before any solve.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let d = &self.domain;
        if !(d.width() > 0.0 && d.height() > 0.0) {
            return cfg("domain must have positive width and height".into());
        }
        let n = &self.numerics;
        if !(n.h > 0.0) {
            return cfg(format!("numerics.h must be positive, got {}", n.h));
        }
        if !(n.interface_fraction > 0.0 && n.interface_fraction <= 1.0) {
            return cfg("numerics.interface_fraction must lie in (0, 1]".into());
        }
        if !(n.patch_factor > 0.0 && n.exclusion_factor > 0.0) {
            return cfg("patch and exclusion factors must be positive".into());
        }
        n.newton
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        crate::quadrature::IntervalRule::<f64>::gauss_legendre(n.newton.s_points)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.shape()
            .validate()
            .map_err(|e| Error::Config(format!("omega: {e}")))?;
        self.materials
            .validate(d, self.mode)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.mode == Mode::Extremal && self.omega0.is_some() {
            return cfg("void mode does not support a background inclusion".into());
        }
        if let Some(s) = &self.omega0 {
            s.validate()
                .map_err(|e| Error::Config(format!("Omega0: {e}")))?;
            let clearance = s
                .polygon(n.n_seg)
                .iter()
                .map(|&p| d.inner_distance(p))
                .fold(f64::INFINITY, f64::min);
            if !(clearance >= 2.0 * n.h) {
                return cfg("Omega0 must stay 2h away from the domain boundary".into());
            }
        }
        let v = &self.validation;
        if v.eps_list.iter().any(|&e| !(e > 0.0)) || v.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return cfg("validation.eps_list must be positive and strictly decreasing".into());
        }
        if !(v.identity_eps > 0.0) {
            return cfg("validation.identity_eps must be positive".into());
        }
        if v.radii.windows(2).any(|w| w[1] <= w[0]) {
            return cfg("validation.radii must be increasing".into());
        }
        let largest = v
            .eps_list
            .first()
            .copied()
            .unwrap_or(0.0)
            .max(v.identity_eps);
        self.check_perturbation(v.z, largest)?;
        if let Some(g) = &self.evaluation.grid {
            if g.nx == 0 || g.ny == 0 || !d.contains(g.min) || !d.contains(g.max) {
                return cfg("evaluation.grid must be non-empty and inside the domain".into());
            }
        }
        if let Some(p) = self.evaluation.points.iter().find(|p| !d.contains(**p)) {
            return cfg(format!(
                "evaluation point ({}, {}) lies outside the domain",
                p[0], p[1]
            ));
        }
        Ok(())
    }

    /// `z + eps * omega` must keep 2h from the boundary and from `Omega0`.
    pub fn check_perturbation(&self, z: Point, eps: f64) -> Result<()> {
        let n = &self.numerics;
        let shape = self.shape().at(z, eps);
        let poly = shape.polygon(n.n_seg);
        let clearance = poly
            .iter()
            .map(|&p| self.domain.inner_distance(p))
            .fold(f64::INFINITY, f64::min);
        if !(clearance >= 2.0 * n.h) {
            return Err(Error::Config(format!(
                "inclusion of size {eps} at ({}, {}) is within 2h of the boundary",
                z[0], z[1]
            )));
        }
        if let Some(s) = &self.omega0 {
            let bg = s.polygon(n.n_seg);
            let gap = poly
                .iter()
                .map(|&p| crate::mesh::distance_to_polygon(p, &bg))
                .fold(f64::INFINITY, f64::min);
            if crate::mesh::point_in_polygon(z, &bg) || gap < 2.0 * n.h {
                return Err(Error::Config(format!(
                    "inclusion at ({}, {}) overlaps or touches Omega0",
                    z[0], z[1]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for c in [
            RunConfig::benchmark_transmission(),
            RunConfig::benchmark_extremal(),
        ] {
            let text = c.to_toml_string().unwrap();
            let back = RunConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
        }
        let a = RunConfig::benchmark_transmission();
        let mut b = a.clone();
        b.outputs.directory = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.numerics.h = 0.03;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn minimal_document() {
        let text = r#"
mode = "transmission"
omega = { kind = "disk", radius = 1.0 }

[domain]
min = [0.0, 0.0]
max = [1.0, 1.0]

[materials]
beta1 = 2.0
beta2 = 1.0
rho1 = { kind = "cubic" }
rho2 = { kind = "linear", lambda = 1.0 }
f1 = { kind = "constant", value = 1.0 }
f2 = { kind = "constant", value = 1.0 }
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.numerics.h, 0.02);
        assert_eq!(c.validation.eps_list, vec![0.08, 0.04, 0.02, 0.01]);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = RunConfig::from_toml_str("mode = \"sideways\"\n").unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("line"), "{err}");
        let mut c = RunConfig::benchmark_transmission();
        c.validation.eps_list = vec![0.01, 0.02];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = RunConfig::benchmark_transmission();
        c.validation.z = [0.35, 0.35];
        assert!(c.validate().is_err());
        let mut c = RunConfig::benchmark_extremal();
        c.materials.rho2 = Nonlinearity::Cubic;
        assert!(c.validate().is_err());
    }
}
