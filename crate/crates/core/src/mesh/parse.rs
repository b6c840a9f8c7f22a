use std::fmt::Write as _;

use nalgebra::Vector3;

use super::{MeshError, PolyhedronMesh};

/// Accepted shape-model layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFormat {
    /// `v x y z` / `f i j k` lines, 1-based, triangles only.
    Obj,
    /// Header line `V F`, then `V` coordinate rows and `F` 1-based index rows.
    Tabular,
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits off a trailing `#` comment. Returns the unit directive if the
/// comment is one.
fn strip_comment(raw: &str, line: usize) -> Result<(&str, Option<f64>), MeshError> {
    match raw.find('#') {
        None => Ok((raw, None)),
        Some(pos) => {
            let comment = raw[pos + 1..].trim();
            let scale = match comment.strip_prefix("units:") {
                Some(u) => match u.trim() {
                    "km" => Some(1000.0),
                    "m" => Some(1.0),
                    other => return Err(parse_err(line, format!("unknown unit '{other}'"))),
                },
                None => None,
            };
            Ok((&raw[..pos], scale))
        }
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    let x: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, found '{tok}'")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("non-finite coordinate '{tok}'")));
    }
    Ok(x)
}

fn parse_index(tok: &str, line: usize) -> Result<usize, MeshError> {
    // OBJ allows `i/t/n`; only the position index matters here.
    let head = tok.split('/').next().unwrap_or(tok);
    let i: usize = head
        .parse()
        .map_err(|_| parse_err(line, format!("expected a 1-based index, found '{tok}'")))?;
    if i == 0 {
        return Err(parse_err(line, "indices are 1-based; found 0"));
    }
    Ok(i - 1)
}

fn detect(text: &str) -> ShapeFormat {
    for raw in text.lines() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() == 2 && toks.iter().all(|t| t.parse::<usize>().is_ok()) {
            return ShapeFormat::Tabular;
        }
        return ShapeFormat::Obj;
    }
    ShapeFormat::Obj
}

/// Parses either accepted layout, detecting which from the first content line.
/// A `# units: km` comment anywhere before the data scales coordinates to meters.
pub fn parse_shape_model(text: &str) -> Result<PolyhedronMesh, MeshError> {
    match detect(text) {
        ShapeFormat::Obj => parse_obj(text),
        ShapeFormat::Tabular => parse_tabular(text),
    }
}

fn parse_obj(text: &str) -> Result<PolyhedronMesh, MeshError> {
    let mut scale = 1.0;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let (body, unit) = strip_comment(raw, line)?;
        if let Some(u) = unit {
            if !vertices.is_empty() {
                return Err(parse_err(line, "unit directive must precede vertex data"));
            }
            scale = u;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.first().copied() {
            None => {}
            Some("v") => {
                if toks.len() != 4 {
                    return Err(parse_err(line, "vertex line needs exactly 3 coordinates"));
                }
                let x = parse_f64(toks[1], line)?;
                let y = parse_f64(toks[2], line)?;
                let z = parse_f64(toks[3], line)?;
                vertices.push(Vector3::new(x, y, z) * scale);
            }
            Some("f") => {
                if toks.len() != 4 {
                    return Err(parse_err(line, "only triangular faces are supported"));
                }
                faces.push([
                    parse_index(toks[1], line)?,
                    parse_index(toks[2], line)?,
                    parse_index(toks[3], line)?,
                ]);
            }
            Some(other) => {
                return Err(parse_err(line, format!("unsupported record '{other}'")));
            }
        }
    }
    PolyhedronMesh::new(vertices, faces)
}

fn parse_tabular(text: &str) -> Result<PolyhedronMesh, MeshError> {
    let mut scale = 1.0;
    let mut header: Option<(usize, usize)> = None;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let (body, unit) = strip_comment(raw, line)?;
        if let Some(u) = unit {
            if !vertices.is_empty() {
                return Err(parse_err(line, "unit directive must precede vertex data"));
            }
            scale = u;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let Some((nv, nf)) = header else {
            if toks.len() != 2 {
                return Err(parse_err(line, "header must be 'V F'"));
            }
            let nv = toks[0]
                .parse()
                .map_err(|_| parse_err(line, "vertex count is not an integer"))?;
            let nf = toks[1]
                .parse()
                .map_err(|_| parse_err(line, "face count is not an integer"))?;
            header = Some((nv, nf));
            continue;
        };
        if toks.len() != 3 {
            return Err(parse_err(line, "expected 3 columns"));
        }
        if vertices.len() < nv {
            let x = parse_f64(toks[0], line)?;
            let y = parse_f64(toks[1], line)?;
            let z = parse_f64(toks[2], line)?;
            vertices.push(Vector3::new(x, y, z) * scale);
        } else if faces.len() < nf {
            faces.push([
                parse_index(toks[0], line)?,
                parse_index(toks[1], line)?,
                parse_index(toks[2], line)?,
            ]);
        } else {
            return Err(parse_err(line, "more rows than the header declares"));
        }
    }
    let Some((nv, nf)) = header else {
        return Err(parse_err(last_line.max(1), "missing 'V F' header"));
    };
    if vertices.len() != nv || faces.len() != nf {
        return Err(parse_err(
            last_line,
            format!(
                "header declares {nv} vertices and {nf} faces, found {} and {}",
                vertices.len(),
                faces.len()
            ),
        ));
    }
    PolyhedronMesh::new(vertices, faces)
}

impl PolyhedronMesh {
    /// OBJ-subset text in meters. Coordinates use the shortest decimal form
    /// that reparses to the same `f64`.
    pub fn to_obj(&self) -> String {
        let mut out = String::from("# units: m\n");
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    /// Headered vertex/face table in meters.
    pub fn to_tabular(&self) -> String {
        let mut out = format!("{} {}\n", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "{} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }
}
