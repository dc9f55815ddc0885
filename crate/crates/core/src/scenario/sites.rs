//! Site-file ingestion: real-world cell / AP coordinates from CSV.
//!
//! Schema: header `id,kind,lat,lon` or `id,kind,x_m,y_m`; `kind` is
//! `cell` or `ap`; lines starting with `#` are comments. Lat/lon rows
//! are projected equirectangularly about the centroid of the ingested
//! points; either way the returned coordinates are local meters with
//! (0, 0) at the area centroid.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Area;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    OperatorCell,
    WifiAp,
}

impl SiteKind {
    fn matches(self, token: &str) -> bool {
        match self {
            SiteKind::OperatorCell => token == "cell",
            SiteKind::WifiAp => token == "ap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    /// Local meters, origin at the area centroid.
    pub positions: Vec<(f64, f64)>,
    /// Rows of the requested kind that fell outside the area.
    pub rejected: usize,
}

impl IngestReport {
    /// Shifts centered coordinates into the `[0, W) x [0, H)` area frame.
    pub fn to_area_frame(&self, area: &Area) -> Vec<(f64, f64)> {
        self.positions
            .iter()
            .map(|&(x, y)| (x + area.width_m / 2.0, y + area.height_m / 2.0))
            .collect()
    }
}

enum Columns {
    LatLon,
    LocalMeters,
}

/// Reads site positions of the requested kind from `path`, projecting to
/// local meters and dropping (but counting) points outside `area`.
pub fn ingest_sites(path: &Path, kind: SiteKind, area: &Area) -> Result<IngestReport> {
    let text = fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path_str.clone(),
        line,
        msg,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hdr_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty site file".into()))?;
    let columns = match header {
        "id,kind,lat,lon" => Columns::LatLon,
        "id,kind,x_m,y_m" => Columns::LocalMeters,
        other => {
            return Err(parse_err(
                hdr_line,
                format!("unrecognized header `{other}`"),
            ))
        }
    };

    // (line, raw coordinate pair) for rows of the requested kind.
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut any_rows = false;
    for (lineno, line) in lines {
        any_rows = true;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let row_kind = fields[1];
        if row_kind != "cell" && row_kind != "ap" {
            return Err(parse_err(lineno, format!("unknown kind `{row_kind}`")));
        }
        let a: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad number `{}`", fields[2])))?;
        let b: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad number `{}`", fields[3])))?;
        if let Columns::LatLon = columns {
            if !(-90.0..=90.0).contains(&a) {
                return Err(parse_err(lineno, format!("latitude {a} out of [-90, 90]")));
            }
            if !(-180.0..=180.0).contains(&b) {
                return Err(parse_err(
                    lineno,
                    format!("longitude {b} out of [-180, 180]"),
                ));
            }
        }
        if !kind.matches(row_kind) {
            continue;
        }
        raw.push((a, b));
    }
    if !any_rows {
        return Err(parse_err(hdr_line, "site file has no data rows".into()));
    }

    let local: Vec<(f64, f64)> = match columns {
        Columns::LocalMeters => raw.into_iter().collect(),
        Columns::LatLon => {
            let n = raw.len().max(1) as f64;
            let lat0 = raw.iter().map(|r| r.0).sum::<f64>() / n;
            let lon0 = raw.iter().map(|r| r.1).sum::<f64>() / n;
            let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
            raw.into_iter()
                .map(|(lat, lon)| ((lon - lon0) * k * lat0.to_radians().cos(), (lat - lat0) * k))
                .collect()
        }
    };

    let (hw, hh) = (area.width_m / 2.0, area.height_m / 2.0);
    let mut positions = Vec::with_capacity(local.len());
    let mut rejected = 0usize;
    for p in local {
        if p.0 >= -hw && p.0 < hw && p.1 >= -hh && p.1 < hh {
            positions.push(p);
        } else {
            rejected += 1;
        }
    }
    Ok(IngestReport {
        positions,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(name: &str, content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("obsim-site-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn area() -> Area {
        Area::new(1000.0, 1000.0, true)
    }

    #[test]
    fn reads_local_meter_rows() {
        let p = write_tmp(
            "local.csv",
            "# comment\nid,kind,x_m,y_m\n1,cell,0,0\n2,cell,100,-50\n3,cell,-499,499\n",
        );
        let rep = ingest_sites(&p, SiteKind::OperatorCell, &area()).unwrap();
        assert_eq!(rep.positions.len(), 3);
        assert_eq!(rep.rejected, 0);
        assert_eq!(rep.positions[0], (0.0, 0.0));
        let frame = rep.to_area_frame(&area());
        assert_eq!(frame[0], (500.0, 500.0));
    }

    #[test]
    fn filters_by_kind_and_counts_outside() {
        let p = write_tmp(
            "mixed.csv",
            "id,kind,x_m,y_m\n1,cell,0,0\n2,ap,10,10\n3,ap,2000,0\n",
        );
        let rep = ingest_sites(&p, SiteKind::WifiAp, &area()).unwrap();
        assert_eq!(rep.positions.len(), 1);
        assert_eq!(rep.rejected, 1);
    }

    #[test]
    fn latlon_centroid_projects_to_origin() {
        let p = write_tmp(
            "geo.csv",
            "id,kind,lat,lon\n1,cell,40.7260,-73.9850\n2,cell,40.7300,-73.9800\n",
        );
        let rep = ingest_sites(&p, SiteKind::OperatorCell, &area()).unwrap();
        assert_eq!(rep.positions.len(), 2);
        // Points are symmetric about the centroid.
        let mid = (
            (rep.positions[0].0 + rep.positions[1].0) / 2.0,
            (rep.positions[0].1 + rep.positions[1].1) / 2.0,
        );
        assert!(mid.0.abs() < 1e-9 && mid.1.abs() < 1e-9);
        // One point at the centroid projects to exactly (0, 0).
        let single = write_tmp("geo1.csv", "id,kind,lat,lon\n1,cell,40.73,-73.98\n");
        let rep = ingest_sites(&single, SiteKind::OperatorCell, &area()).unwrap();
        assert_eq!(rep.positions, vec![(0.0, 0.0)]);
    }

    #[test]
    fn rejects_bad_latitude_with_line_number() {
        let p = write_tmp("badlat.csv", "id,kind,lat,lon\n1,cell,91.0,10.0\n");
        let err = ingest_sites(&p, SiteKind::OperatorCell, &area()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_malformed_files() {
        let empty = write_tmp("empty.csv", "");
        assert!(ingest_sites(&empty, SiteKind::OperatorCell, &area()).is_err());
        let headers_only = write_tmp("hdr.csv", "id,kind,x_m,y_m\n");
        assert!(ingest_sites(&headers_only, SiteKind::OperatorCell, &area()).is_err());
        let short_row = write_tmp("short.csv", "id,kind,x_m,y_m\n1,cell,5\n");
        assert!(ingest_sites(&short_row, SiteKind::OperatorCell, &area()).is_err());
    }

    #[test]
    fn duplicate_coordinates_are_kept() {
        let p = write_tmp("dup.csv", "id,kind,x_m,y_m\n1,ap,10,10\n2,ap,10,10\n");
        let rep = ingest_sites(&p, SiteKind::WifiAp, &area()).unwrap();
        assert_eq!(rep.positions.len(), 2);
    }
}
