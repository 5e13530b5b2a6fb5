//! HURDAT2 best-track parser.
//!
//! A storm block is a header `AL112017, IRENE, 3,` followed by exactly the
//! declared number of data rows
//! `20170830, 0000,  , TS, 16.4N,  30.3W,  35, 1004, ...`.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::{latlon_to_sphere, DataError, DataResult};
use crate::curves::Curve;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

/// Tracks shorter than this are rejected by [`track_to_curve`] by default.
pub const MIN_TRACK_POINTS: usize = 10;

/// One data row of a storm block.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackPoint {
    pub time: NaiveDateTime,
    /// Record identifier such as `L` for landfall, empty when absent.
    pub record: String,
    pub status: String,
    pub lat: f64,
    /// Degrees east in (-180, 180].
    pub lon: f64,
    pub max_wind: i32,
    pub min_pressure: i32,
    /// Wind radii and any trailing numeric fields, `-999` kept as is.
    pub extra: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackRecord {
    /// Basin, cyclone number and year, e.g. `AL112017`.
    pub id: String,
    pub name: String,
    pub points: Vec<TrackPoint>,
}

impl TrackRecord {
    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.points.iter().map(|p| p.time).collect()
    }

    pub fn coordinates(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.lat, p.lon)).collect()
    }
}

pub fn read_hurdat2(path: impl AsRef<Path>) -> DataResult<Vec<TrackRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_hurdat2(&text)
}

fn fields(line: &str) -> Vec<&str> {
    let mut f: Vec<&str> = line.split(',').map(str::trim).collect();
    while f.last() == Some(&"") {
        f.pop();
    }
    f
}

fn is_data_row(f: &[&str]) -> bool {
    f.first().is_some_and(|s| s.len() == 8 && s.bytes().all(|b| b.is_ascii_digit()))
}

fn parse_header(line: usize, f: &[&str]) -> DataResult<(String, String, usize)> {
    let bad = |reason: &str| DataError::MalformedHeader { line, reason: reason.into() };
    if f.len() != 3 {
        return Err(bad("expected id, name and row count"));
    }
    let id = f[0];
    let well_formed = id.len() == 8
        && id[..2].bytes().all(|b| b.is_ascii_uppercase())
        && id[2..].bytes().all(|b| b.is_ascii_digit());
    if !well_formed {
        return Err(bad("id must look like AL112017"));
    }
    let rows = f[2].parse::<usize>().map_err(|_| bad("row count is not an integer"))?;
    Ok((id.to_string(), f[1].to_string(), rows))
}

fn coordinate(line: usize, text: &str, pos: char, neg: char, limit: f64) -> DataResult<f64> {
    let bad = || DataError::BadCoordinate { line, text: text.to_string() };
    let hemi = text.chars().last().ok_or_else(bad)?;
    let sign = match hemi {
        c if c == pos => 1.0,
        c if c == neg => -1.0,
        _ => return Err(bad()),
    };
    let value: f64 = text[..text.len() - 1].trim().parse().map_err(|_| bad())?;
    if !value.is_finite() || !(0.0..=limit).contains(&value) {
        return Err(bad());
    }
    Ok(sign * value)
}

fn integer(line: usize, field: &'static str, text: &str) -> DataResult<i32> {
    text.parse().map_err(|_| DataError::BadField { line, field, text: text.to_string() })
}

fn parse_row(line: usize, f: &[&str]) -> DataResult<TrackPoint> {
    if f.len() < 8 {
        return Err(DataError::BadField { line, field: "row", text: f.join(",") });
    }
    let date = NaiveDate::parse_from_str(f[0], "%Y%m%d")
        .map_err(|_| DataError::BadField { line, field: "date", text: f[0].into() })?;
    let time = (f[1].len() == 4)
        .then(|| NaiveTime::parse_from_str(f[1], "%H%M").ok())
        .flatten()
        .ok_or_else(|| DataError::BadField { line, field: "time", text: f[1].into() })?;
    let lat = coordinate(line, f[4], 'N', 'S', 90.0)?;
    let mut lon = coordinate(line, f[5], 'E', 'W', 360.0)?;
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon <= -180.0 {
        lon += 360.0;
    }
    let extra = f[8..].iter().map(|s| integer(line, "radius", s)).collect::<DataResult<_>>()?;
    Ok(TrackPoint {
        time: date.and_time(time),
        record: f[2].to_string(),
        status: f[3].to_string(),
        lat,
        lon,
        max_wind: integer(line, "wind", f[6])?,
        min_pressure: integer(line, "pressure", f[7])?,
        extra,
    })
}

/// Parses a HURDAT2 file. Errors carry 1-based line numbers; a block with
/// fewer rows than declared is reported at its header line.
pub fn parse_hurdat2(text: &str) -> DataResult<Vec<TrackRecord>> {
    let mut out = Vec::new();
    let mut current: Option<(usize, usize, TrackRecord)> = None;
    let close = |cur: Option<(usize, usize, TrackRecord)>, out: &mut Vec<TrackRecord>| -> DataResult<()> {
        if let Some((line, declared, rec)) = cur {
            if rec.points.len() != declared {
                return Err(DataError::RowCountMismatch { line, declared, found: rec.points.len() });
            }
            out.push(rec);
        }
        Ok(())
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let f = fields(raw);
        if f.is_empty() {
            continue;
        }
        if is_data_row(&f) {
            let Some((header, declared, rec)) = current.as_mut() else {
                return Err(DataError::OrphanRow { line });
            };
            if rec.points.len() == *declared {
                return Err(DataError::RowCountMismatch {
                    line: *header,
                    declared: *declared,
                    found: declared.saturating_add(1),
                });
            }
            rec.points.push(parse_row(line, &f)?);
        } else {
            close(current.take(), &mut out)?;
            let (id, name, declared) = parse_header(line, &f)?;
            current = Some((line, declared, TrackRecord { id, name, points: Vec::with_capacity(declared) }));
        }
    }
    close(current, &mut out)?;
    Ok(out)
}

/// Converts a track to a curve on `n` uniform samples. Time is mapped
/// affinely onto `[0, 1]` and longitudes are unwrapped across the dateline
/// before interpolation.
pub fn track_to_curve<T: Real>(track: &TrackRecord, n: usize, min_points: usize) -> DataResult<Curve<T>> {
    let got = track.points.len();
    if got < min_points.max(2) {
        return Err(DataError::TooShort { id: track.id.clone(), needed: min_points.max(2), got });
    }
    let t0 = track.points[0].time;
    let hours: Vec<f64> = track.points.iter().map(|p| (p.time - t0).num_seconds() as f64 / 3600.0).collect();
    for (k, w) in hours.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(DataError::NonMonotoneTime { row: k + 2 });
        }
    }
    let span = hours[got - 1];
    let times: Vec<T> = hours.iter().map(|h| T::lit(h / span)).collect();
    let mut prev = track.points[0].lon;
    let mut points: Vec<SpherePoint<T>> = Vec::with_capacity(got);
    for p in &track.points {
        let mut lon = p.lon;
        while lon - prev > 180.0 {
            lon -= 360.0;
        }
        while lon - prev < -180.0 {
            lon += 360.0;
        }
        prev = lon;
        points.push(latlon_to_sphere(p.lat, lon)?);
    }
    Ok(Curve::from_timed(&times, &points, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
AL092011,              IRENE,      3,
20110821, 0000,  , TS, 15.0N,  59.0W,  45, 1006,    0,    0,    0,    0,    0,    0,    0,    0,    0,    0,    0,    0,
20110821, 0600,  , TS, 16.0N,  60.6W,  45, 1006,  105,    0,    0,   45,    0,    0,    0,    0,    0,    0,    0,    0,
20110821, 1200, L, HU, 16.8S, 179.5E,  65,  990, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999, -999,
";

    #[test]
    fn parses_block() {
        let t = parse_hurdat2(SAMPLE).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].id, "AL092011");
        assert_eq!(t[0].name, "IRENE");
        let p = &t[0].points[2];
        assert_eq!((p.lat, p.lon, p.record.as_str(), p.status.as_str()), (-16.8, 179.5, "L", "HU"));
        assert_eq!(p.extra, vec![-999; 12]);
        assert_eq!(t[0].points[1].extra[0], 105);
    }

    #[test]
    fn truncated_block_reports_header_line() {
        let text = SAMPLE.lines().take(3).collect::<Vec<_>>().join("\n");
        match parse_hurdat2(&text) {
            Err(DataError::RowCountMismatch { line: 1, declared: 3, found: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_coordinate_has_line() {
        let text = SAMPLE.replace("16.0N", "16.0Q");
        assert!(matches!(parse_hurdat2(&text), Err(DataError::BadCoordinate { line: 3, .. })));
        let text = SAMPLE.replace("60.6W", "6x.6W");
        assert!(matches!(parse_hurdat2(&text), Err(DataError::BadCoordinate { line: 3, .. })));
    }

    #[test]
    fn short_track_rejected() {
        let t = parse_hurdat2(SAMPLE).unwrap();
        assert!(matches!(track_to_curve::<f64>(&t[0], 50, MIN_TRACK_POINTS), Err(DataError::TooShort { .. })));
        let c = track_to_curve::<f64>(&t[0], 50, 3).unwrap();
        assert_eq!(c.len(), 50);
        assert!(c.samples()[0].distance(&latlon_to_sphere(15.0, -59.0).unwrap()) < 1e-12);
    }
}
