//! Triangle-format mesh files: `.node` (point coordinates, header
//! `<count> 2 0 <marker-flag>`) and `.ele` (triangle connectivity, header
//! `<count> 3 0`). Files are written 1-based with boundary markers; readers
//! accept 0- or 1-based numbering, detected from the smallest index.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use dmk_core::mesh::Triangulation;

use crate::{io_err, CliError};

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            None
        } else {
            Some((i + 1, trimmed))
        }
    })
}

fn parse_fields<T: core::str::FromStr>(
    path: &Path,
    line_no: usize,
    line: &str,
    expect_at_least: usize,
    what: &str,
) -> Result<Vec<T>, CliError> {
    let fields: Result<Vec<T>, _> = line.split_whitespace().map(str::parse).collect();
    match fields {
        Ok(f) if f.len() >= expect_at_least => Ok(f),
        Ok(f) => Err(CliError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("expected at least {expect_at_least} {what} fields, found {}", f.len()),
        }),
        Err(_) => Err(CliError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("malformed {what} line: {line:?}"),
        }),
    }
}

/// Reads a `.node`/`.ele` pair into a validated triangulation.
pub fn read_mesh(node_path: &Path, ele_path: &Path) -> Result<Triangulation, CliError> {
    let nodes = read_nodes(node_path)?;
    let triangles = read_elements(ele_path, nodes.len())?;
    Triangulation::from_parts(nodes, triangles).map_err(CliError::Mesh)
}

fn read_nodes(path: &Path) -> Result<Vec<[f64; 2]>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = data_lines(&text);
    let (header_no, header) = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "empty node file".into(),
    })?;
    let head: Vec<i64> = parse_fields(path, header_no, header, 2, "node header")?;
    let count = head[0];
    if count <= 0 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_no,
            message: format!("node count must be positive, got {count}"),
        });
    }
    if head[1] != 2 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_no,
            message: format!("expected dimension 2, got {}", head[1]),
        });
    }
    let count = count as usize;

    let mut raw: Vec<(usize, i64, [f64; 2])> = Vec::with_capacity(count);
    for (line_no, line) in lines.by_ref().take(count) {
        let fields: Vec<f64> = parse_fields(path, line_no, line, 3, "node")?;
        let index = fields[0] as i64;
        raw.push((line_no, index, [fields[1], fields[2]]));
    }
    if raw.len() != count {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            message: format!("node file promises {count} points but lists {}", raw.len()),
        });
    }

    let base = raw.iter().map(|&(_, i, _)| i).min().unwrap();
    if base != 0 && base != 1 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_no,
            message: format!("node indices must start at 0 or 1, smallest is {base}"),
        });
    }
    let mut nodes = vec![None; count];
    for (line_no, index, point) in raw {
        let slot = (index - base) as usize;
        if slot >= count || nodes[slot].is_some() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("node index {index} out of range or repeated"),
            });
        }
        nodes[slot] = Some(point);
    }
    Ok(nodes.into_iter().map(|p| p.unwrap()).collect())
}

fn read_elements(path: &Path, num_nodes: usize) -> Result<Vec<[usize; 3]>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = data_lines(&text);
    let (header_no, header) = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "empty element file".into(),
    })?;
    let head: Vec<i64> = parse_fields(path, header_no, header, 2, "element header")?;
    let count = head[0];
    if count <= 0 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_no,
            message: format!("element count must be positive, got {count}"),
        });
    }
    if head[1] != 3 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: header_no,
            message: format!("expected 3 nodes per triangle, got {}", head[1]),
        });
    }
    let count = count as usize;

    let mut raw: Vec<(usize, [i64; 3])> = Vec::with_capacity(count);
    for (line_no, line) in lines.by_ref().take(count) {
        let fields: Vec<i64> = parse_fields(path, line_no, line, 4, "element")?;
        raw.push((line_no, [fields[1], fields[2], fields[3]]));
    }
    if raw.len() != count {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            message: format!("element file promises {count} triangles but lists {}", raw.len()),
        });
    }

    let smallest = raw.iter().flat_map(|&(_, vs)| vs).min().unwrap();
    let base = if smallest == 0 { 0 } else { 1 };
    let mut triangles = Vec::with_capacity(count);
    for (line_no, vs) in raw {
        let mut tri = [0usize; 3];
        for (k, &v) in vs.iter().enumerate() {
            let shifted = v - base;
            if shifted < 0 || shifted as usize >= num_nodes {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("vertex index {v} outside the node file's range"),
                });
            }
            tri[k] = shifted as usize;
        }
        triangles.push(tri);
    }
    Ok(triangles)
}

/// Writes a mesh as a 1-based `.node`/`.ele` pair. Boundary markers are 1
/// for nodes on a boundary edge, 0 otherwise.
pub fn write_mesh(mesh: &Triangulation, node_path: &Path, ele_path: &Path) -> Result<(), CliError> {
    let boundary: BTreeSet<usize> = mesh
        .boundary_edges
        .iter()
        .flat_map(|e| e.iter().copied())
        .collect();

    let mut node_text = String::new();
    let _ = writeln!(node_text, "{} 2 0 1", mesh.num_nodes());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let marker = u8::from(boundary.contains(&i));
        let _ = writeln!(node_text, "{} {:.16e} {:.16e} {marker}", i + 1, p[0], p[1]);
    }
    std::fs::write(node_path, node_text).map_err(io_err(node_path))?;

    let mut ele_text = String::new();
    let _ = writeln!(ele_text, "{} 3 0", mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(ele_text, "{} {} {} {}", t + 1, tri[0] + 1, tri[1] + 1, tri[2] + 1);
    }
    std::fs::write(ele_path, ele_text).map_err(io_err(ele_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmk_core::mesh::{gen_disk_polar, gen_unit_square};

    #[test]
    fn round_trip_preserves_geometry_and_topology() {
        let dir = tempfile::tempdir().unwrap();
        for mesh in [gen_unit_square(3), gen_disk_polar(3, 8)] {
            let node = dir.path().join("m.node");
            let ele = dir.path().join("m.ele");
            write_mesh(&mesh, &node, &ele).unwrap();
            let back = read_mesh(&node, &ele).unwrap();
            assert_eq!(back.nodes, mesh.nodes);
            assert_eq!(back.triangles, mesh.triangles);
            assert_eq!(back.boundary_edges, mesh.boundary_edges);
        }
    }

    #[test]
    fn zero_and_one_based_files_parse_identically() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, text).unwrap();
            p
        };
        // Unit square split along the diagonal, in both conventions.
        let node0 = write(
            "a.node",
            "4 2 0 0\n0 0.0 0.0\n1 1.0 0.0\n2 1.0 1.0\n3 0.0 1.0\n",
        );
        let ele0 = write("a.ele", "2 3 0\n0 0 1 2\n1 0 2 3\n");
        let node1 = write(
            "b.node",
            "# comment line\n4 2 0 1\n1 0.0 0.0 1\n2 1.0 0.0 1\n3 1.0 1.0 1\n4 0.0 1.0 1\n",
        );
        let ele1 = write("b.ele", "2 3 0\n1 1 2 3\n2 1 3 4\n");
        let a = read_mesh(&node0, &ele0).unwrap();
        let b = read_mesh(&node1, &ele1).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.triangles, b.triangles);
        assert_eq!(a.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, text).unwrap();
            p
        };
        let good_ele = write("g.ele", "1 3 0\n1 1 2 3\n");

        // Non-numeric coordinate on line 3.
        let bad = write("c.node", "3 2 0 0\n1 0.0 0.0\n2 oops 0.0\n3 1.0 1.0\n");
        match read_mesh(&bad, &good_ele).unwrap_err() {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }

        // Wrong dimensionality in the header.
        let bad = write("d.node", "3 3 0 0\n1 0.0 0.0 0.0\n2 1.0 0.0 0.0\n3 0.0 1.0 0.0\n");
        match read_mesh(&bad, &good_ele).unwrap_err() {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("dimension"));
            }
            other => panic!("unexpected error {other}"),
        }

        // Element referencing a node outside the range, line 2.
        let node = write("e.node", "3 2 0 0\n1 0.0 0.0\n2 1.0 0.0\n3 0.0 1.0\n");
        let bad_ele = write("e.ele", "1 3 0\n1 1 2 9\n");
        match read_mesh(&node, &bad_ele).unwrap_err() {
            CliError::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert!(path.ends_with("e.ele"));
            }
            other => panic!("unexpected error {other}"),
        }

        // Repeated node index.
        let bad = write("f.node", "3 2 0 0\n1 0.0 0.0\n1 1.0 0.0\n3 0.0 1.0\n");
        match read_mesh(&bad, &good_ele).unwrap_err() {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("repeated"));
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
