//! ASCII XYZ point files: one `x y z` triple per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parses whitespace- or comma-separated triples. Blank lines and `#`
/// comments are skipped; extra columns (normals, colors) are ignored.
pub fn parse_xyz(text: &str, path: &Path) -> Result<Vec<Vector3<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty());
        let mut v = [0.0f64; 3];
        for slot in v.iter_mut() {
            let field = fields
                .next()
                .ok_or_else(|| Error::parse(path, i + 1, "expected three coordinates"))?;
            *slot = field
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number '{field}'")))?;
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::parse(path, i + 1, "non-finite coordinate"));
        }
        out.push(Vector3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

pub fn read_xyz(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text, path)
}

/// Shortest round-trip formatting, so output is byte-stable.
pub fn format_xyz<T: Real>(points: &[Vector3<T>]) -> String {
    let mut s = String::with_capacity(points.len() * 64);
    for p in points {
        s.push_str(&format!("{} {} {}\n", p.x.as_f64(), p.y.as_f64(), p.z.as_f64()));
    }
    s
}

pub fn write_xyz<T: Real>(path: &Path, points: &[Vector3<T>]) -> Result<()> {
    write_atomic(path, format_xyz(points).as_bytes())
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let pts = vec![
            Vector3::new(0.1, -0.2, 1.0 / 3.0),
            Vector3::new(1e-300, 2.5e10, -0.0),
        ];
        let back = parse_xyz(&format_xyz(&pts), Path::new("mem")).unwrap();
        assert_eq!(back, pts);
    }

    #[test]
    fn accepts_commas_comments_and_extra_columns() {
        let text = "# header\n1,2,3\n\n4 5 6 0.1 0.2 0.3\n";
        let pts = parse_xyz(text, Path::new("t.xyz")).unwrap();
        assert_eq!(pts, vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn reports_line_of_bad_input() {
        let err = parse_xyz("1 2 3\n1 2\n", Path::new("t.xyz")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_xyz("1 x 3\n", Path::new("t.xyz")).is_err());
        assert!(parse_xyz("1 nan 3\n", Path::new("t.xyz")).is_err());
    }
}
