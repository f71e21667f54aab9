use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nalgebra::Vector3;
use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyDef, PropertyType, ScalarType,
};
use ply_rs::writer::Writer;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::xyz::{read_xyz, write_atomic, write_xyz};

fn is_ply(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("ply"))
        .unwrap_or(false)
}

/// Reads `.ply` through the PLY parser and anything else as XYZ.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    if is_ply(path) {
        read_ply(path)
    } else {
        Ok(PointCloud::new(read_xyz(path)?))
    }
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    if is_ply(path) {
        write_ply(path, cloud)
    } else {
        write_xyz(path, &cloud.points)
    }
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

/// Vertex `x/y/z` and, when all three are present, `nx/ny/nz`.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let format = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ply = Parser::<DefaultElement>::new()
        .read_ply(&mut BufReader::new(file))
        .map_err(|e| format(e.to_string()))?;
    let vertices = ply
        .payload
        .get("vertex")
        .ok_or_else(|| format("no vertex element".into()))?;
    let get = |v: &DefaultElement, key: &str| v.get(key).and_then(scalar);
    let has_normals = vertices
        .first()
        .map(|v| ["nx", "ny", "nz"].iter().all(|k| v.contains_key(*k)))
        .unwrap_or(false);
    let mut points = Vec::with_capacity(vertices.len());
    let mut normals = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        let coord = |k: &str| get(v, k).ok_or_else(|| format(format!("vertex {i} lacks numeric '{k}'")));
        points.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
        if has_normals {
            let n = Vector3::new(coord("nx")?, coord("ny")?, coord("nz")?);
            let norm = n.norm();
            normals.push(if norm > 0.0 && (norm - 1.0).abs() > 1e-9 { n / norm } else { n });
        }
    }
    if has_normals {
        PointCloud::with_normals(points, normals).map_err(|e| format(e.to_string()))
    } else {
        Ok(PointCloud::new(points))
    }
}

/// ASCII PLY with double-precision vertex properties.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut ply = Ply::<DefaultElement>::new();
    ply.header.encoding = Encoding::Ascii;
    let mut keys = vec!["x", "y", "z"];
    if cloud.normals.is_some() {
        keys.extend(["nx", "ny", "nz"]);
    }
    let mut element = ElementDef::new("vertex".to_string());
    for k in &keys {
        element
            .properties
            .add(PropertyDef::new(k.to_string(), PropertyType::Scalar(ScalarType::Double)));
    }
    ply.header.elements.add(element);
    let rows = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut e = DefaultElement::new();
            let mut values = vec![p.x, p.y, p.z];
            if let Some(ns) = &cloud.normals {
                values.extend([ns[i].x, ns[i].y, ns[i].z]);
            }
            for (k, v) in keys.iter().zip(values) {
                e.insert(k.to_string(), Property::Double(v));
            }
            e
        })
        .collect();
    ply.payload.insert("vertex".to_string(), rows);
    let mut buf = Vec::new();
    Writer::new()
        .write_ply(&mut buf, &mut ply)
        .map_err(|e| Error::io(path, e))?;
    write_atomic(path, &buf)
}
