//! Reader for the ASCII gmsh v2.2 format, restricted to linear simplices.
//!
//! Only the `$MeshFormat`, `$Nodes` and `$Elements` sections are read; any
//! other section is skipped. Element lines have the layout
//! `id type ntags tag... node...`. Triangles (type 2) and tetrahedra
//! (type 4) are accepted. Points and lines, as well as triangles in a
//! tetrahedral mesh, are ignored as boundary markers. Quadrilaterals,
//! hexahedra, prisms and pyramids are rejected. Nodes not referenced by
//! any cell are dropped and the remaining ones renumbered in file order.

use std::collections::HashMap;
use std::path::Path;

use super::Mesh;
use crate::{Error, Result};

const POINT: u32 = 15;
const LINE: u32 = 1;
const TRIANGLE: u32 = 2;
const TETRAHEDRON: u32 = 4;
const NON_SIMPLEX: [u32; 4] = [3, 5, 6, 7];

/// Reads a mesh file from disk. See [`parse_msh`].
pub fn import_msh(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::MeshFormat {
        line: 0,
        reason: format!("cannot read {}: {e}", path.as_ref().display()),
    })?;
    parse_msh(&text, expected_dim)
}

/// Parses msh v2.2 text. The mesh dimension is 3 if the file contains
/// tetrahedra and 2 otherwise; `expected_dim`, when given, must match.
pub fn parse_msh(text: &str, expected_dim: Option<usize>) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut nodes: Option<(Vec<u64>, Vec<[f64; 3]>)> = None;
    let mut triangles: Vec<[u64; 3]> = Vec::new();
    let mut tets: Vec<[u64; 4]> = Vec::new();
    let mut seen_format = false;

    while let Some((ln, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        match line {
            "$MeshFormat" => {
                let (ln, header) = next_line(&mut lines, ln)?;
                let mut it = header.split_whitespace();
                let version = it.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(fmt_err(ln, format!("unsupported format version {version}")));
                }
                if it.next() != Some("0") {
                    return Err(fmt_err(ln, "only ASCII files are supported"));
                }
                expect_end(&mut lines, "$EndMeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let count = read_count(&mut lines, ln)?;
                let mut ids = Vec::with_capacity(count);
                let mut xs = Vec::with_capacity(count);
                for _ in 0..count {
                    let (ln, l) = next_line(&mut lines, ln)?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    if fields.len() < 4 {
                        return Err(fmt_err(ln, "node line needs `id x y z`"));
                    }
                    ids.push(parse_num::<u64>(fields[0], ln)?);
                    xs.push([
                        parse_num::<f64>(fields[1], ln)?,
                        parse_num::<f64>(fields[2], ln)?,
                        parse_num::<f64>(fields[3], ln)?,
                    ]);
                }
                expect_end(&mut lines, "$EndNodes")?;
                nodes = Some((ids, xs));
            }
            "$Elements" => {
                let count = read_count(&mut lines, ln)?;
                for _ in 0..count {
                    let (ln, l) = next_line(&mut lines, ln)?;
                    let fields: Vec<u64> = l
                        .split_whitespace()
                        .map(|s| parse_num::<u64>(s, ln))
                        .collect::<Result<_>>()?;
                    if fields.len() < 3 {
                        return Err(fmt_err(ln, "element line needs `id type ntags ...`"));
                    }
                    let etype = fields[1] as u32;
                    let rest = &fields[3 + fields[2] as usize..];
                    let need = match etype {
                        TRIANGLE => 3,
                        TETRAHEDRON => 4,
                        POINT | LINE => continue,
                        t if NON_SIMPLEX.contains(&t) => return Err(Error::NonSimplexElement(t)),
                        t => {
                            return Err(fmt_err(ln, format!("unsupported element type {t}")));
                        }
                    };
                    if rest.len() != need {
                        return Err(fmt_err(ln, format!("expected {need} node ids, found {}", rest.len())));
                    }
                    if etype == TRIANGLE {
                        triangles.push([rest[0], rest[1], rest[2]]);
                    } else {
                        tets.push([rest[0], rest[1], rest[2], rest[3]]);
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                let end = format!("$End{}", &s[1..]);
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => return Err(fmt_err(ln, format!("unterminated section {s}"))),
                    }
                }
            }
            s => return Err(fmt_err(ln, format!("unexpected line `{s}`"))),
        }
    }

    if !seen_format {
        return Err(fmt_err(1, "missing $MeshFormat section"));
    }
    let (ids, xs) = nodes.ok_or_else(|| fmt_err(0, "missing $Nodes section"))?;
    let dim = if tets.is_empty() { 2 } else { 3 };
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(Error::DimensionMismatch { expected, found: dim });
        }
    }
    let raw: Vec<Vec<u64>> = if dim == 3 {
        tets.iter().map(|t| t.to_vec()).collect()
    } else {
        triangles.iter().map(|t| t.to_vec()).collect()
    };
    if raw.is_empty() {
        return Err(fmt_err(0, "no triangle or tetrahedron elements"));
    }

    let position: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut new_index = vec![usize::MAX; ids.len()];
    let mut used = Vec::new();
    let mut cells = Vec::with_capacity(raw.len());
    for nodes_of_cell in &raw {
        let mut cell = [0usize; 4];
        for (k, id) in nodes_of_cell.iter().enumerate() {
            let &p = position
                .get(id)
                .ok_or_else(|| fmt_err(0, format!("element references unknown node {id}")))?;
            if new_index[p] == usize::MAX {
                new_index[p] = 0;
                used.push(p);
            }
            cell[k] = p;
        }
        cells.push(cell);
    }
    used.sort_unstable();
    for (i, &p) in used.iter().enumerate() {
        new_index[p] = i;
    }
    let mut coords = Vec::with_capacity(used.len());
    for &p in &used {
        if dim == 2 && xs[p][2].abs() > 1e-12 {
            return Err(Error::DimensionMismatch { expected: 2, found: 3 });
        }
        coords.push(xs[p]);
    }
    for cell in cells.iter_mut() {
        for v in cell[..dim + 1].iter_mut() {
            *v = new_index[*v];
        }
    }
    Mesh::from_cells(dim, coords, cells)
}

fn fmt_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MeshFormat { line, reason: reason.into() }
}

fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    after: usize,
) -> Result<(usize, &'a str)> {
    lines.next().ok_or_else(|| fmt_err(after, "unexpected end of file"))
}

fn read_count<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, after: usize) -> Result<usize> {
    let (ln, l) = next_line(lines, after)?;
    parse_num::<usize>(l, ln)
}

fn expect_end<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, tag: &str) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l == tag => Ok(()),
        Some((ln, l)) => Err(fmt_err(ln, format!("expected {tag}, found `{l}`"))),
        None => Err(fmt_err(0, format!("missing {tag}"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| fmt_err(line, format!("cannot parse `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_TRIANGLE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n7 5 5 0\n$EndNodes\n\
$Elements\n3\n1 15 2 0 1 1\n2 1 2 0 1 1 2\n3 2 2 0 1 1 2 3\n$EndElements\n";

    #[test]
    fn single_triangle_and_unreferenced_node() {
        let m = parse_msh(ONE_TRIANGLE, Some(2)).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_boundary_facets(), 3);
    }

    #[test]
    fn quadrilateral_is_rejected() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
$Elements\n1\n1 3 2 0 1 1 2 3 4\n$EndElements\n";
        let err = parse_msh(text, None).unwrap_err();
        assert!(matches!(err, Error::NonSimplexElement(3)));
        assert!(err.to_string().contains("non-simplex element"));
    }

    #[test]
    fn dimension_mismatch() {
        let err = parse_msh(ONE_TRIANGLE, Some(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn malformed_header() {
        let text = "$MeshFormat\n2.2 0 8\n$Nodes\n";
        assert!(matches!(parse_msh(text, None), Err(Error::MeshFormat { .. })));
        let binary = "$MeshFormat\n2.2 1 8\n$EndMeshFormat\n";
        assert!(matches!(parse_msh(binary, None), Err(Error::MeshFormat { line: 2, .. })));
    }
}
