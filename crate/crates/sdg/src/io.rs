//! Plain-text dumps: meshes, sparse matrices, coefficient vectors, sample grids.

use std::io::{self, BufRead, Write};

use sdg_core::{SparseMatrix, StaggeredMesh};

/// Sections `VERTICES` (index x y), `SUBTRIANGLES` (index v0 v1 v2 macro) and
/// `EDGES` (index v0 v1 kind nx ny).
pub fn write_mesh(mesh: &StaggeredMesh, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "VERTICES {}", mesh.vertices.len())?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        writeln!(w, "{i} {:.16e} {:.16e}", p.x, p.y)?;
    }
    writeln!(w, "SUBTRIANGLES {}", mesh.sub_triangles.len())?;
    for (i, t) in mesh.sub_triangles.iter().enumerate() {
        writeln!(w, "{i} {} {} {} {}", t[0], t[1], t[2], mesh.macro_of_sub[i])?;
    }
    writeln!(w, "EDGES {}", mesh.edges.len())?;
    for (i, e) in mesh.edges.iter().enumerate() {
        let [a, b] = e.endpoints;
        writeln!(w, "{i} {a} {b} {} {:.16e} {:.16e}", e.kind.label(), e.normal.x, e.normal.y)?;
    }
    Ok(())
}

/// Coordinate format, one `row col value` per line (0-based, 17 significant
/// digits), after a `% rows cols nnz` header.
pub fn write_matrix(a: &SparseMatrix, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "% {} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{i} {j} {v:.16e}")?;
    }
    Ok(())
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Reads the output of [`write_matrix`]. Without a header the shape is taken
/// from the largest indices.
pub fn read_matrix(r: impl BufRead) -> io::Result<SparseMatrix> {
    let mut shape = None;
    let mut entries = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || invalid(format!("line {}: cannot parse `{line}`", lineno + 1));
        if let Some(head) = line.strip_prefix('%') {
            let f: Vec<usize> = head.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad())?;
            if f.len() < 2 {
                return Err(bad());
            }
            shape = Some((f[0], f[1]));
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        let i: usize = i.parse().map_err(|_| bad())?;
        let j: usize = j.parse().map_err(|_| bad())?;
        let v: f64 = v.parse().map_err(|_| bad())?;
        entries.push((i, j, v));
    }
    let (n, m) =
        shape.unwrap_or_else(|| entries.iter().fold((0, 0), |(n, m), &(i, j, _)| (n.max(i + 1), m.max(j + 1))));
    if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= n || j >= m) {
        return Err(invalid(format!("entry ({i}, {j}) outside a {n} x {m} matrix")));
    }
    Ok(SparseMatrix::from_triplets(n, m, entries))
}

/// `index value` per line.
pub fn write_coefficients(coeffs: &[f64], mut w: impl Write) -> io::Result<()> {
    for (i, v) in coeffs.iter().enumerate() {
        writeln!(w, "{i} {v:.16e}")?;
    }
    Ok(())
}

/// `x y u zx zy` per line.
pub fn write_grid(samples: &[[f64; 5]], mut w: impl Write) -> io::Result<()> {
    for r in samples {
        writeln!(w, "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}", r[0], r[1], r[2], r[3], r[4])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let a = SparseMatrix::from_dense(&[vec![1.0 / 3.0, 0.0, -2.5e-17], vec![0.0, 0.0, 0.0]]);
        let mut buf = Vec::new();
        write_matrix(&a, &mut buf).unwrap();
        let b = read_matrix(&buf[..]).unwrap();
        assert_eq!(b.shape(), (2, 3));
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }

    #[test]
    fn headerless_matrix_and_errors() {
        let b = read_matrix("0 0 1\n2 1 -1\n".as_bytes()).unwrap();
        assert_eq!(b.shape(), (3, 2));
        assert!(read_matrix("0 x 1\n".as_bytes()).is_err());
        assert!(read_matrix("% 1 1 1\n3 0 1\n".as_bytes()).is_err());
    }

    #[test]
    fn mesh_sections() {
        let mesh = StaggeredMesh::build_structured(1).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "VERTICES 6");
        assert_eq!(lines[7], "SUBTRIANGLES 6");
        assert_eq!(lines[14], "EDGES 11");
        assert_eq!(lines.len(), 15 + 11);
        assert_eq!(lines[8].split_whitespace().count(), 5);
    }
}
