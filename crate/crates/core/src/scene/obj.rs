//! Minimal Wavefront OBJ reader: `v`, `vn`, `vt` and `f` records. Polygons
//! are fan-triangulated; every other record type is ignored.

use glam::{DVec2, DVec3};
use std::collections::HashMap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshData {
    pub positions: Vec<DVec3>,
    pub normals: Vec<DVec3>,
    pub uvs: Vec<DVec2>,
    pub triangles: Vec<[u32; 3]>,
}

impl MeshData {
    fn check(&self) -> Result<(), String> {
        let n = self.positions.len();
        if self.triangles.iter().flatten().any(|&i| i as usize >= n) {
            return Err("triangle index out of range".into());
        }
        if !self.normals.is_empty() && self.normals.len() != n {
            return Err("normal count must match vertex count".into());
        }
        if !self.uvs.is_empty() && self.uvs.len() != n {
            return Err("uv count must match vertex count".into());
        }
        Ok(())
    }
}

/// Parses OBJ text. Errors carry a 1-based line number.
pub fn parse_obj(text: &str) -> Result<MeshData, (usize, String)> {
    let mut v = Vec::new();
    let mut vn = Vec::new();
    let mut vt = Vec::new();
    let mut mesh = MeshData::default();
    // (v, vt, vn) corner -> unified vertex index
    let mut corners: HashMap<(usize, Option<usize>, Option<usize>), u32> = HashMap::new();
    let mut corner_keys = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        let nums = |fields: std::str::SplitWhitespace<'_>, want: usize| -> Result<Vec<f64>, (usize, String)> {
            let vals: Vec<f64> = fields
                .take(want)
                .map(|s| s.parse::<f64>().map_err(|_| (line, format!("invalid number '{s}'"))))
                .collect::<Result<_, _>>()?;
            if vals.len() < want || vals.iter().any(|x| !x.is_finite()) {
                return Err((line, format!("expected {want} finite numbers")));
            }
            Ok(vals)
        };
        match tag {
            "v" => {
                let p = nums(fields, 3)?;
                v.push(DVec3::new(p[0], p[1], p[2]));
            }
            "vn" => {
                let p = nums(fields, 3)?;
                vn.push(DVec3::new(p[0], p[1], p[2]));
            }
            "vt" => {
                let p = nums(fields, 2)?;
                vt.push(DVec2::new(p[0], p[1]));
            }
            "f" => {
                let mut face = Vec::new();
                for corner in fields {
                    let mut parts = corner.split('/');
                    let resolve = |s: Option<&str>, len: usize, what: &str| -> Result<Option<usize>, (usize, String)> {
                        match s {
                            None | Some("") => Ok(None),
                            Some(s) => {
                                let i: i64 = s.parse().map_err(|_| (line, format!("invalid {what} index '{s}'")))?;
                                let idx = if i > 0 { i - 1 } else { len as i64 + i };
                                if i == 0 || idx < 0 || idx >= len as i64 {
                                    return Err((line, format!("{what} index {i} out of range")));
                                }
                                Ok(Some(idx as usize))
                            }
                        }
                    };
                    let pi = resolve(parts.next(), v.len(), "vertex")?
                        .ok_or_else(|| (line, "face corner without vertex index".to_string()))?;
                    let ti = resolve(parts.next(), vt.len(), "texture")?;
                    let ni = resolve(parts.next(), vn.len(), "normal")?;
                    let key = (pi, ti, ni);
                    let next = corner_keys.len() as u32;
                    let id = *corners.entry(key).or_insert_with(|| {
                        corner_keys.push(key);
                        next
                    });
                    face.push(id);
                }
                if face.len() < 3 {
                    return Err((line, "face needs at least 3 vertices".into()));
                }
                for k in 1..face.len() - 1 {
                    mesh.triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }

    let all_normals = !corner_keys.is_empty() && corner_keys.iter().all(|k| k.2.is_some());
    let all_uvs = !corner_keys.is_empty() && corner_keys.iter().all(|k| k.1.is_some());
    for &(pi, ti, ni) in &corner_keys {
        mesh.positions.push(v[pi]);
        if all_normals {
            mesh.normals.push(vn[ni.unwrap()]);
        }
        if all_uvs {
            mesh.uvs.push(vt[ti.unwrap()]);
        }
    }
    mesh.check().map_err(|e| (0, e))?;
    Ok(mesh)
}
