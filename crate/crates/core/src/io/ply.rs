//! Binary little-endian PLY for point clouds and triangle meshes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::meshing::TriangleMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return Err(Error::Format(format!("unknown PLY type {s:?}"))),
        })
    }

    fn read(self, r: &mut impl Read) -> Result<f64> {
        macro_rules! rd {
            ($t:ty) => {{
                let mut b = [0u8; std::mem::size_of::<$t>()];
                r.read_exact(&mut b).map_err(truncated)?;
                <$t>::from_le_bytes(b) as f64
            }};
        }
        Ok(match self {
            Scalar::I8 => rd!(i8),
            Scalar::U8 => rd!(u8),
            Scalar::I16 => rd!(i16),
            Scalar::U16 => rd!(u16),
            Scalar::I32 => rd!(i32),
            Scalar::U32 => rd!(u32),
            Scalar::F32 => rd!(f32),
            Scalar::F64 => rd!(f64),
        })
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt("PLY body ends early".into())
    } else {
        Error::Io(e)
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn parse_header(r: &mut impl BufRead) -> Result<Vec<Element>> {
    let mut line = String::new();
    let mut next = |line: &mut String| -> Result<String> {
        line.clear();
        if r.read_line(line)? == 0 {
            return Err(Error::Format("PLY header ends early".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next(&mut line)? != "ply" {
        return Err(Error::Format("missing PLY magic".into()));
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let l = next(&mut line)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", _] => {}
            ["format", f, _] => return Err(Error::Format(format!("unsupported PLY format {f}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| Error::Format(format!("bad element count {count:?}")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => elements
                .last_mut()
                .ok_or_else(|| Error::Format("property before element".into()))?
                .props
                .push(Property::List(name.to_string(), Scalar::parse(ct)?, Scalar::parse(it)?)),
            ["property", t, name] => elements
                .last_mut()
                .ok_or_else(|| Error::Format("property before element".into()))?
                .props
                .push(Property::Scalar(name.to_string(), Scalar::parse(t)?)),
            _ => return Err(Error::Format(format!("unexpected PLY header line {l:?}"))),
        }
    }
    Ok(elements)
}

/// Everything read from a PLY file that this crate uses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlyData {
    pub positions: Vec<[f64; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub faces: Vec<[u32; 3]>,
}

/// Reads vertices (`x y z`, optional `nx ny nz` and `red green blue`) and
/// faces (polygons are fan-triangulated). Other elements and properties
/// are skipped.
pub fn read_ply(path: &Path) -> Result<PlyData> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut r = BufReader::new(file);
    let elements = parse_header(&mut r)?;
    let mut out = PlyData::default();
    for el in &elements {
        let is_vertex = el.name == "vertex";
        let names: Vec<&str> = el
            .props
            .iter()
            .map(|p| match p {
                Property::Scalar(n, _) | Property::List(n, _, _) => n.as_str(),
            })
            .collect();
        let has = |n: &str| names.contains(&n);
        if is_vertex && !(has("x") && has("y") && has("z")) {
            return Err(Error::Format("PLY vertex element without x y z".into()));
        }
        let with_normals = is_vertex && has("nx") && has("ny") && has("nz");
        let with_colors = is_vertex && has("red") && has("green") && has("blue");
        let mut normals = Vec::new();
        let mut colors = Vec::new();
        for _ in 0..el.count {
            let mut p = [0.0; 3];
            let mut n = [0.0; 3];
            let mut c = [0u8; 3];
            for prop in &el.props {
                match prop {
                    Property::Scalar(name, t) => {
                        let v = t.read(&mut r)?;
                        if is_vertex {
                            match name.as_str() {
                                "x" => p[0] = v,
                                "y" => p[1] = v,
                                "z" => p[2] = v,
                                "nx" => n[0] = v,
                                "ny" => n[1] = v,
                                "nz" => n[2] = v,
                                "red" => c[0] = v as u8,
                                "green" => c[1] = v as u8,
                                "blue" => c[2] = v as u8,
                                _ => {}
                            }
                        }
                    }
                    Property::List(name, ct, it) => {
                        let len = ct.read(&mut r)? as usize;
                        let mut idx = Vec::with_capacity(len);
                        for _ in 0..len {
                            idx.push(it.read(&mut r)? as u32);
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            for k in 1..len.saturating_sub(1) {
                                out.faces.push([idx[0], idx[k], idx[k + 1]]);
                            }
                        }
                    }
                }
            }
            if is_vertex {
                out.positions.push(p);
                if with_normals {
                    normals.push(n);
                }
                if with_colors {
                    colors.push(c);
                }
            }
        }
        if is_vertex {
            out.normals = with_normals.then_some(normals);
            out.colors = with_colors.then_some(colors);
        }
    }
    let n = out.positions.len() as u32;
    if out.faces.iter().flatten().any(|&i| i >= n) {
        return Err(Error::Corrupt("PLY face index out of range".into()));
    }
    Ok(out)
}

fn write_header(
    w: &mut impl Write,
    vertices: usize,
    normals: bool,
    colors: bool,
    faces: Option<usize>,
) -> std::io::Result<()> {
    writeln!(w, "ply\nformat binary_little_endian 1.0")?;
    writeln!(w, "element vertex {vertices}")?;
    writeln!(w, "property float x\nproperty float y\nproperty float z")?;
    if normals {
        writeln!(w, "property float nx\nproperty float ny\nproperty float nz")?;
    }
    if colors {
        writeln!(w, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    if let Some(f) = faces {
        writeln!(w, "element face {f}\nproperty list uchar int vertex_indices")?;
    }
    writeln!(w, "end_header")
}

fn write_vertex(w: &mut impl Write, p: &[f64; 3], n: Option<&[f64; 3]>, c: Option<&[u8; 3]>) -> std::io::Result<()> {
    for v in p {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    if let Some(n) = n {
        for v in n {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    if let Some(c) = c {
        w.write_all(c)?;
    }
    Ok(())
}

/// Writes a point cloud with optional colors.
pub fn write_points(path: &Path, points: &[Vec3], colors: Option<&[[u8; 3]]>) -> Result<()> {
    if colors.is_some_and(|c| c.len() != points.len()) {
        return Err(Error::DimensionMismatch("point colors".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, points.len(), false, colors.is_some(), None)?;
    for (i, p) in points.iter().enumerate() {
        write_vertex(&mut w, &[p.x, p.y, p.z], None, colors.map(|c| &c[i]))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a triangle mesh with its optional normals and colors.
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    mesh.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, mesh.vertices.len(), mesh.normals.is_some(), mesh.colors.is_some(), Some(mesh.triangles.len()))?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        write_vertex(&mut w, p, mesh.normals.as_ref().map(|n| &n[i]), mesh.colors.as_ref().map(|c| &c[i]))?;
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &i in t {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let d = read_ply(path)?;
    Ok(TriangleMesh { vertices: d.positions, triangles: d.faces, normals: d.normals, colors: d.colors })
}
