//! Legacy ASCII VTK output (file version 3.0, unstructured grids of
//! triangles). Conductivity fields are attached as cell data on the coarse
//! mesh, potentials as point data on the fine mesh. Values are printed with
//! 17 significant digits so files are byte-reproducible and round-trip
//! exactly.

use std::fmt::Write as _;
use std::path::Path;

use dmk_core::mesh::Triangulation;

use crate::{io_err, CliError};

fn grid_header(mesh: &Triangulation, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.num_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles());
    for tri in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.num_triangles());
    for _ in 0..mesh.num_triangles() {
        let _ = writeln!(out, "5");
    }
    out
}

/// One scalar per triangle, written as CELL_DATA.
pub fn write_cell_field(
    path: &Path,
    mesh: &Triangulation,
    name: &str,
    values: &[f64],
) -> Result<(), CliError> {
    assert_eq!(values.len(), mesh.num_triangles());
    let mut out = grid_header(mesh, name);
    let _ = writeln!(out, "CELL_DATA {}", mesh.num_triangles());
    let _ = writeln!(out, "SCALARS {name} double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// One scalar per node, written as POINT_DATA.
pub fn write_point_field(
    path: &Path,
    mesh: &Triangulation,
    name: &str,
    values: &[f64],
) -> Result<(), CliError> {
    assert_eq!(values.len(), mesh.num_nodes());
    let mut out = grid_header(mesh, name);
    let _ = writeln!(out, "POINT_DATA {}", mesh.num_nodes());
    let _ = writeln!(out, "SCALARS {name} double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Reads back the scalar block of a file written by this module; the counted
/// values after `LOOKUP_TABLE`.
pub fn read_scalar_field(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut count: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix("CELL_DATA ").or(line.strip_prefix("POINT_DATA ")) {
            count = Some(rest.trim().parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("bad data count {rest:?}"),
            })?);
        }
        if line.starts_with("LOOKUP_TABLE") {
            let n = count.ok_or_else(|| CliError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "scalar block before any data-count line".into(),
            })?;
            let mut values = Vec::with_capacity(n);
            for (j, value_line) in text.lines().skip(line_no).take(n).enumerate() {
                values.push(value_line.trim().parse().map_err(|_| CliError::Parse {
                    path: path.to_path_buf(),
                    line: line_no + j + 1,
                    message: format!("bad scalar value {value_line:?}"),
                })?);
            }
            if values.len() != n {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: text.lines().count(),
                    message: format!("scalar block promises {n} values, found {}", values.len()),
                });
            }
            return Ok(values);
        }
    }
    Err(CliError::Parse {
        path: path.to_path_buf(),
        line: text.lines().count(),
        message: "no scalar block found".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmk_core::mesh::gen_unit_square;

    #[test]
    fn cell_field_is_deterministic_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = gen_unit_square(1);
        let values = [1.0, 2.0 / 3.0];
        let a = dir.path().join("a.vtk");
        let b = dir.path().join("b.vtk");
        write_cell_field(&a, &mesh, "mu", &values).unwrap();
        write_cell_field(&b, &mesh, "mu", &values).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let back = read_scalar_field(&a).unwrap();
        assert_eq!(back, values);

        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains("CELL_TYPES 2"));
        assert!(text.contains("CELL_DATA 2"));
    }

    #[test]
    fn point_field_round_trips_awkward_values() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = gen_unit_square(2);
        let values: Vec<f64> = (0..mesh.num_nodes())
            .map(|i| (i as f64 + 0.1).sin() * 1e-7)
            .collect();
        let p = dir.path().join("u.vtk");
        write_point_field(&p, &mesh, "potential", &values).unwrap();
        assert_eq!(read_scalar_field(&p).unwrap(), values);
    }
}
