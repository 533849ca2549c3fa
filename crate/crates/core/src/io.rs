//! Plain-text writers: legacy ASCII VTK for fields, CSV for tables and JSON
//! for summaries. Every file starts with the tool version and config hash.

use crate::assembly::NodalField;
use crate::error::{Error, Result};
use crate::mesh::{Mesh2D, Region};
use crate::topo::{GridSpec, TdPoint, TdSample};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TOOL: &str = "topograd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance carried by every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Header {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Header {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash: config_hash.into(),
        }
    }

    fn line(&self) -> String {
        format!("{} {} config {}", self.tool, self.version, self.config_hash)
    }

    /// `#` comment lines placed before a CSV table.
    pub fn csv_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# config_hash: {}\n",
            self.tool, self.version, self.config_hash
        )
    }
}

/// Prefixes a CSV table with the header block.
pub fn csv_with_header(header: &Header, table: &str) -> String {
    let mut s = header.csv_lines();
    s.push_str(table);
    s
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object holding `header` next to the fields of `body`, which
/// must serialize as a map.
pub fn json_with_header<T: Serialize>(header: &Header, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Wrapped { header, body })
        .map_err(|e| Error::Argument(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn region_code(r: Region) -> i32 {
    match r {
        Region::Inclusion => 1,
        Region::Matrix => 2,
        Region::Hole => 3,
    }
}

/// Unstructured grid with region and shape tags per cell and the given
/// nodal fields. Fields must match the mesh.
pub fn mesh_vtk(header: &Header, mesh: &Mesh2D, fields: &[(&str, &NodalField)]) -> Result<String> {
    for (name, f) in fields {
        f.check(mesh)
            .map_err(|_| Error::Argument(format!("field '{name}' does not match the mesh")))?;
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID",
        header.line()
    );
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(
        s,
        "CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default"
    );
    for t in 0..nt {
        let _ = writeln!(s, "{}", region_code(mesh.region(t)));
    }
    s.push_str("SCALARS shape int 1\nLOOKUP_TABLE default\n");
    for t in 0..nt {
        let _ = writeln!(s, "{}", mesh.owner(t).map_or(-1, |k| k as i64));
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
        for (name, f) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in f.values() {
                let _ = writeln!(s, "{v:e}");
            }
        }
    }
    Ok(s)
}

/// `vertex, x, y, <name>...` per vertex.
pub fn fields_csv(
    header: &Header,
    mesh: &Mesh2D,
    fields: &[(&str, &NodalField)],
) -> Result<String> {
    for (name, f) in fields {
        f.check(mesh)
            .map_err(|_| Error::Argument(format!("field '{name}' does not match the mesh")))?;
    }
    let mut s = header.csv_lines();
    s.push_str("vertex,x,y");
    for (name, _) in fields {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{i},{:e},{:e}", p[0], p[1]);
        for (_, f) in fields {
            let _ = write!(s, ",{:e}", f.values()[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per evaluation point; skipped points have empty values and a reason.
pub fn td_csv(header: &Header, points: &[TdPoint]) -> String {
    let mut s = header.csv_lines();
    s.push_str("x,y,value,term_dlG,term_R,skipped_reason\n");
    for p in points {
        let _ = write!(s, "{:e},{:e},", p.z[0], p.z[1]);
        match &p.sample {
            Some(v) => {
                let _ = writeln!(s, "{:e},{:e},{:e},", v.value, v.term_dlg, v.term_r);
            }
            None => {
                let _ = writeln!(s, ",,,{}", csv_quote(p.skipped.as_deref().unwrap_or("")));
            }
        }
    }
    s
}

/// Structured points on the cell-centred grid; skipped points are NaN.
pub fn td_vtk(header: &Header, grid: &GridSpec, points: &[TdPoint]) -> Result<String> {
    if points.len() != grid.nx * grid.ny {
        return Err(Error::Argument(
            "point count does not match the grid".into(),
        ));
    }
    let dx = (grid.max[0] - grid.min[0]) / grid.nx as f64;
    let dy = (grid.max[1] - grid.min[1]) / grid.ny as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET STRUCTURED_POINTS",
        header.line()
    );
    let _ = writeln!(s, "DIMENSIONS {} {} 1", grid.nx, grid.ny);
    let _ = writeln!(
        s,
        "ORIGIN {:e} {:e} 0",
        grid.min[0] + 0.5 * dx,
        grid.min[1] + 0.5 * dy
    );
    let _ = writeln!(s, "SPACING {dx:e} {dy:e} 1");
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    type Column = (&'static str, fn(&TdSample) -> f64);
    let columns: [Column; 3] = [
        ("td", |v| v.value),
        ("term_dlG", |v| v.term_dlg),
        ("term_R", |v| v.term_r),
    ];
    for (name, get) in columns {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for p in points {
            match &p.sample {
                Some(v) => {
                    let _ = writeln!(s, "{:e}", get(v));
                }
                None => s.push_str("nan\n"),
            }
        }
    }
    Ok(s)
}

/// Writes `contents` to `dir/name`, creating `dir`.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, InclusionShape, Rect};

    #[test]
    fn vtk_counts_match_the_mesh() {
        let mesh = build_rect_mesh(
            &Rect::unit_square(),
            0.1,
            &[InclusionShape::disk([0.5, 0.5], 0.2)],
        )
        .unwrap();
        let u = NodalField::interpolate(&mesh, |x| x[0]);
        let h = Header::new("abc");
        let s = mesh_vtk(&h, &mesh, &[("u", &u)]).unwrap();
        assert!(s.lines().nth(1).unwrap().contains("config abc"));
        assert!(s.contains(&format!("CELL_DATA {}", mesh.num_triangles())));
        assert!(s.contains(&format!("POINT_DATA {}", mesh.num_vertices())));
        let codes = s.split("LOOKUP_TABLE default\n").nth(1).unwrap();
        assert!(codes.lines().take(mesh.num_triangles()).any(|l| l == "1"));
        let csv = fields_csv(&h, &mesh, &[("u", &u)]).unwrap();
        assert_eq!(
            csv.lines().filter(|l| !l.starts_with('#')).count(),
            mesh.num_vertices() + 1
        );
        let short = NodalField::zeros(3);
        assert!(mesh_vtk(&h, &mesh, &[("bad", &short)]).is_err());
    }

    #[test]
    fn json_carries_the_header() {
        #[derive(Serialize)]
        struct Body {
            value: f64,
        }
        let s = json_with_header(&Header::new("h"), &Body { value: 1.5 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["header"]["config_hash"], "h");
        assert_eq!(v["value"], 1.5);
    }

    #[test]
    fn skipped_rows_keep_the_reason() {
        let p = TdPoint {
            z: [0.1, 0.2],
            sample: None,
            skipped: Some("inside an inclusion".into()),
        };
        let s = td_csv(&Header::new("h"), &[p]);
        assert!(s.ends_with("1e-1,2e-1,,,,inside an inclusion\n"), "{s}");
    }
}
