//! Text formats: OFF meshes and XYZ/CSV point lists.

use lnf_core::data::TriangleMesh;
use lnf_core::{Point3, PointCloud};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse { line, msg: msg.into() })
}

/// Content lines of an OFF file: 1-based line number plus the text with
/// comments stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            None
        } else {
            Some((i + 1, l))
        }
    })
}

/// Parse an OFF mesh. Handles the ModelNet quirk where the "OFF" header is
/// fused with the counts line ("OFF492 1000 0"), skips comments and blank
/// lines, and fan-triangulates polygon faces.
pub fn parse_off(text: &str) -> Result<TriangleMesh, FormatError> {
    let mut lines = content_lines(text);

    let (first_no, first) = match lines.next() {
        Some(l) => l,
        None => return parse_err(1, "empty OFF input"),
    };

    // The counts may live on the header line (fused or separated) or on the
    // following line.
    let counts_text: String;
    let counts_line_no: usize;
    if let Some(rest) = first.strip_prefix("OFF") {
        let rest = rest.trim();
        if rest.is_empty() {
            let (no, l) = match lines.next() {
                Some(l) => l,
                None => return parse_err(first_no, "missing counts line after OFF header"),
            };
            counts_text = l.to_string();
            counts_line_no = no;
        } else {
            counts_text = rest.to_string();
            counts_line_no = first_no;
        }
    } else {
        counts_text = first.to_string();
        counts_line_no = first_no;
    }

    let counts: Vec<&str> = counts_text.split_whitespace().collect();
    if counts.len() < 2 {
        return parse_err(counts_line_no, format!("malformed counts line: {counts_text:?}"));
    }
    let n_vertices: usize = counts[0]
        .parse()
        .map_err(|_| FormatError::Parse {
            line: counts_line_no,
            msg: format!("bad vertex count {:?}", counts[0]),
        })?;
    let n_faces: usize = counts[1]
        .parse()
        .map_err(|_| FormatError::Parse {
            line: counts_line_no,
            msg: format!("bad face count {:?}", counts[1]),
        })?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (no, l) = match lines.next() {
            Some(l) => l,
            None => return parse_err(counts_line_no, "unexpected end of input in vertex list"),
        };
        let mut it = l.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            let tok = match it.next() {
                Some(t) => t,
                None => return parse_err(no, "vertex line has fewer than 3 coordinates"),
            };
            *c = tok.parse().map_err(|_| FormatError::Parse {
                line: no,
                msg: format!("non-numeric vertex coordinate {tok:?}"),
            })?;
        }
        vertices.push(Point3::new(coord[0], coord[1], coord[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (no, l) = match lines.next() {
            Some(l) => l,
            None => return parse_err(counts_line_no, "unexpected end of input in face list"),
        };
        let mut it = l.split_whitespace();
        let arity: usize = match it.next() {
            Some(t) => t.parse().map_err(|_| FormatError::Parse {
                line: no,
                msg: format!("non-numeric face arity {t:?}", t = t),
            })?,
            None => return parse_err(no, "empty face line"),
        };
        if arity < 3 {
            return parse_err(no, format!("face arity {arity} < 3"));
        }
        let mut idx = Vec::with_capacity(arity);
        for _ in 0..arity {
            let tok = match it.next() {
                Some(t) => t,
                None => return parse_err(no, "face line has fewer indices than its arity"),
            };
            let v: usize = tok.parse().map_err(|_| FormatError::Parse {
                line: no,
                msg: format!("non-numeric face index {tok:?}"),
            })?;
            if v >= n_vertices {
                return parse_err(no, format!("face index {v} out of range ({n_vertices} vertices)"));
            }
            idx.push(v);
        }
        // fan triangulation around the first vertex
        for t in 1..arity - 1 {
            faces.push([idx[0], idx[t], idx[t + 1]]);
        }
    }

    TriangleMesh::new(vertices, faces).map_err(|e| FormatError::Invalid(e.to_string()))
}

/// Serialize a mesh in the separated-header OFF form.
pub fn serialize_off(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    out.push_str(&format!("{} {} 0\n", mesh.vertices.len(), mesh.faces.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    out
}

/// Parse whitespace- or comma-separated numeric triples, one point per
/// line. Columns beyond the third are ignored, each occurrence recorded as
/// a warning.
pub fn load_xyz(text: &str) -> Result<(PointCloud, Vec<String>), FormatError> {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let l = line.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = l
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() < 3 {
            return parse_err(no, format!("expected 3 coordinates, got {}", tokens.len()));
        }
        let mut coord = [0.0f64; 3];
        for (c, tok) in coord.iter_mut().zip(&tokens) {
            *c = tok.parse().map_err(|_| FormatError::Parse {
                line: no,
                msg: format!("non-numeric token {tok:?}"),
            })?;
        }
        if tokens.len() > 3 {
            warnings.push(format!(
                "line {no}: ignored {} extra column(s)",
                tokens.len() - 3
            ));
        }
        points.push(Point3::new(coord[0], coord[1], coord[2]));
    }
    let cloud = PointCloud::new(points).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok((cloud, warnings))
}
