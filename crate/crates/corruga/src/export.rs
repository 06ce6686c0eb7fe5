//! File artifacts: spectrum CSV, OBJ meshes, section and warping CSV.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use corruga_core::solver::{recover_deflection, DeflectionField};
use corruga_core::warping::{SectionCurve, WarpingResult};
use corruga_core::{ModeClass, PeriodicGrid, Vec3};
use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::report::SpectrumRow;
use crate::CliError;

/// Default display amplitude as a fraction of the period cell size.
pub const DISPLAY_FRACTION: f64 = 0.2;

pub fn write_spectrum(path: &Path, rows: &[SpectrumRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Size of the period cell, `max ‖ℓ_α‖` over the lattice vectors.
pub fn cell_size(grid: &PeriodicGrid) -> f64 {
    let chart = grid.chart();
    chart.lattice_vector(0).norm().max(chart.lattice_vector(1).norm())
}

/// Triangulated period cell: two triangles per quad, split along the diagonal
/// toward increasing `ξ₁ + ξ₂`. Corners outside the base period are separate
/// vertices carrying their shift.
pub struct Mesh {
    pub vertices: Vec<(usize, [i8; 2])>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let mut index = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for cell in grid.cells() {
            let ids = cell.corners.map(|c| {
                *index.entry(c).or_insert_with(|| {
                    vertices.push(c);
                    vertices.len() - 1
                })
            });
            triangles.push([ids[0], ids[1], ids[2]]);
            triangles.push([ids[0], ids[2], ids[3]]);
        }
        Mesh { vertices, triangles }
    }

    pub fn positions(&self, grid: &PeriodicGrid) -> Vec<Vec3> {
        self.vertices.iter().map(|c| grid.corner_position(*c)).collect()
    }

    pub fn to_obj(&self, name: &str, positions: &[Vec3]) -> String {
        let mut out = String::new();
        writeln!(out, "o {name}").unwrap();
        for p in positions {
            writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
        }
        out
    }
}

/// Positions displaced by `ẋ` scaled so its largest vertex value is `amplitude`.
pub fn deflected_positions(mesh: &Mesh, grid: &PeriodicGrid, deflection: &DeflectionField, amplitude: f64) -> Vec<Vec3> {
    let d: Vec<Vec3> = mesh.vertices.iter().map(|(id, s)| deflection.value(grid, *id, *s)).collect();
    let big = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let k = if big > 0.0 { amplitude / big } else { 0.0 };
    mesh.positions(grid).iter().zip(&d).map(|(x, v)| *x + *v * k).collect()
}

/// Writes `modes/base.obj` and one deflected mesh per non-constant mode.
/// Returns the written paths relative to `out` and the display amplitude.
pub fn write_mode_meshes(out: &Path, analysis: &Analysis) -> Result<(Vec<String>, f64), CliError> {
    let dir = out.join("modes");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let grid = &analysis.grid;
    let mesh = Mesh::new(grid);
    let amplitude = DISPLAY_FRACTION * cell_size(grid);
    let mut files = Vec::new();
    let mut write = |name: String, text: String| -> Result<(), CliError> {
        let path = dir.join(&name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        files.push(format!("modes/{name}"));
        Ok(())
    };
    write("base.obj".into(), mesh.to_obj("base", &mesh.positions(grid)))?;
    for (k, mode) in analysis.modes().iter().enumerate() {
        if mode.class == ModeClass::Constant {
            continue;
        }
        let d = recover_deflection(mode, grid)?;
        let name = format!("mode_{k}_{}", mode.class.name());
        write(format!("{name}.obj"), mesh.to_obj(&name, &deflected_positions(&mesh, grid, &d, amplitude)))?;
    }
    Ok((files, amplitude))
}

#[derive(Deserialize)]
struct SectionRecord {
    x: f64,
    y: f64,
}

/// Reads `x,y` samples in arclength order.
pub fn read_section(path: &Path, closed: bool) -> Result<SectionCurve, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut pts = Vec::new();
    for rec in r.deserialize() {
        let rec: SectionRecord = rec.map_err(|e| CliError::csv(path, e))?;
        pts.push([rec.x, rec.y]);
    }
    let section = if closed { SectionCurve::closed(pts) } else { SectionCurve::open(pts) };
    Ok(section?)
}

#[derive(Serialize)]
struct WarpingRecord {
    s: f64,
    w: f64,
}

pub fn write_warping(path: &Path, result: &WarpingResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for (s, v) in result.s.iter().zip(&result.w) {
        w.serialize(WarpingRecord { s: *s, w: *v }).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin;

    #[test]
    fn mesh_covers_the_period() {
        let chart = builtin("eggbox").unwrap().to_chart().unwrap();
        let grid = PeriodicGrid::build(&chart, [8, 8]).unwrap();
        let mesh = Mesh::new(&grid);
        assert_eq!(mesh.triangles.len(), 2 * grid.cells().len());
        // projected areas of the triangles tile the period
        let p = mesh.positions(&grid);
        let area: f64 = mesh
            .triangles
            .iter()
            .map(|t| {
                let (a, b) = (p[t[1]] - p[t[0]], p[t[2]] - p[t[0]]);
                0.5 * (a[0] * b[1] - a[1] * b[0])
            })
            .sum();
        let [t1, t2] = chart.period();
        assert!((area - t1 * t2).abs() < 1e-9 * t1 * t2, "{area}");
        assert!(mesh.to_obj("base", &p).lines().filter(|l| l.starts_with("f ")).count() == mesh.triangles.len());
    }
}
