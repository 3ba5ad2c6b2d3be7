//! Wavefront OBJ subset: `v`, `f`, `o`/`g`, comments. Normals and texture
//! coordinates are parsed past and ignored.

use std::collections::HashMap;
use std::path::Path;

use glam::Vec3;

use super::{Mesh, Scene};
use crate::{Error, Result};

pub fn load_obj(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Scene::new(parse_obj(&text, path)?)
}

struct Group {
    name: String,
    faces: Vec<[usize; 3]>,
}

/// Parses OBJ text into meshes, one per non-empty `o`/`g` group in file order.
/// Polygons are fan-triangulated around their first vertex.
pub fn parse_obj(text: &str, path: &Path) -> Result<Vec<Mesh>> {
    let err = |line: usize, msg: String| Error::Obj {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut positions: Vec<Vec3> = Vec::new();
    let mut groups = vec![Group {
        name: "default".into(),
        faces: Vec::new(),
    }];
    // Faces are validated after all vertices are known, keep the line for errors.
    let mut face_lines: Vec<usize> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        match tag {
            "v" => {
                let mut c = [0f32; 3];
                for (i, slot) in c.iter_mut().enumerate() {
                    let s = tok
                        .next()
                        .ok_or_else(|| err(lineno, format!("vertex needs 3 coordinates, got {i}")))?;
                    *slot = s.parse().map_err(|_| err(lineno, format!("bad coordinate `{s}`")))?;
                    if !slot.is_finite() {
                        return Err(err(lineno, format!("non-finite coordinate `{s}`")));
                    }
                }
                positions.push(Vec3::from(c));
            }
            "f" => {
                let mut poly = Vec::with_capacity(4);
                for t in tok {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| err(lineno, format!("bad face index `{t}`")))?;
                    let resolved = match i {
                        0 => return Err(err(lineno, "face index 0 is invalid".into())),
                        i if i > 0 => i - 1,
                        i => positions.len() as i64 + i,
                    };
                    if resolved < 0 {
                        return Err(err(lineno, format!("relative index {i} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(err(lineno, format!("face needs at least 3 vertices, got {}", poly.len())));
                }
                let g = groups.last_mut().expect("at least one group");
                for k in 1..poly.len() - 1 {
                    g.faces.push([poly[0], poly[k], poly[k + 1]]);
                    face_lines.push(lineno);
                }
            }
            "o" | "g" => {
                let name = tok.collect::<Vec<_>>().join(" ");
                let name = if name.is_empty() { "unnamed".to_string() } else { name };
                let last = groups.last_mut().expect("at least one group");
                if last.faces.is_empty() {
                    last.name = name;
                } else {
                    groups.push(Group { name, faces: Vec::new() });
                }
            }
            "vn" | "vt" | "vp" | "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => return Err(err(lineno, format!("unsupported record `{other}`"))),
        }
    }

    let mut meshes = Vec::new();
    let mut face_cursor = 0;
    for g in groups {
        if g.faces.is_empty() {
            continue;
        }
        let mut remap: HashMap<usize, u32> = HashMap::new();
        let mut verts = Vec::new();
        let mut indices = Vec::with_capacity(g.faces.len());
        for f in &g.faces {
            let line = face_lines[face_cursor];
            face_cursor += 1;
            let mut tri = [0u32; 3];
            for (k, &gi) in f.iter().enumerate() {
                if gi >= positions.len() {
                    return Err(err(
                        line,
                        format!("vertex index {} out of range ({} vertices)", gi + 1, positions.len()),
                    ));
                }
                tri[k] = *remap.entry(gi).or_insert_with(|| {
                    verts.push(positions[gi]);
                    (verts.len() - 1) as u32
                });
            }
            indices.push(tri);
        }
        meshes.push(Mesh::new(g.name, verts, indices)?);
    }
    if meshes.is_empty() {
        return Err(err(text.lines().count(), "no faces".into()));
    }
    Ok(meshes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<Mesh>> {
        parse_obj(s, Path::new("test.obj"))
    }

    #[test]
    fn minimal_triangle() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].indices, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_fan() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m[0].indices, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_reports_line() {
        match parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n") {
            Err(Error::Obj { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("expected obj error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_garbage() {
        assert!(matches!(parse("v 0 nan 0\n"), Err(Error::Obj { line: 1, .. })));
        assert!(matches!(parse("v 0 0\n"), Err(Error::Obj { line: 1, .. })));
        assert!(matches!(parse("v 0 0 0\nfoo\n"), Err(Error::Obj { line: 2, .. })));
    }

    #[test]
    fn groups_split_and_ignore_attributes() {
        let src = "# scene\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvn 0 0 1\nvt 0 0\n\
                   o first\nf 1/1/1 2/1/1 3/1/1\ng second\nf -3 4 -2\n";
        let m = parse(src).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].name, "first");
        assert_eq!(m[1].name, "second");
        // Second mesh is compacted to its own vertices in first-use order.
        assert_eq!(m[1].vertices, vec![Vec3::new(1., 0., 0.), Vec3::new(1., 1., 0.), Vec3::new(0., 1., 0.)]);
        assert_eq!(m[1].indices, vec![[0, 1, 2]]);
    }
}
