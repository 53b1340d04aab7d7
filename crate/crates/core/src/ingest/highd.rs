//! Reader and writer for the highD three-file layout.
//!
//! highD stores the upper-left corner of each bounding box in image
//! coordinates (`y` grows downward). Parsing converts to vehicle centers in a
//! right-handed frame by negating `y`, so that for traffic moving toward
//! increasing `x` the passing lane lies toward increasing `y`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use super::{Direction, LaneMarkings, Recording, Track, TrackPoint};
use crate::{Error, Result};

struct Table {
    path: std::path::PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let columns = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            rows.push((line, record));
        }
        Ok(Table {
            path: path.to_path_buf(),
            columns,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns.get(name).copied().ok_or_else(|| Error::Schema {
            path: self.path.clone(),
            column: name.to_string(),
        })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    fn cell<'a>(&self, row: &'a (usize, csv::StringRecord), col: usize) -> Result<&'a str> {
        row.1.get(col).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            row: row.0,
            message: format!("row has no column {col}"),
        })
    }

    fn number<T: std::str::FromStr>(&self, row: &(usize, csv::StringRecord), col: usize) -> Result<T> {
        let raw = self.cell(row, col)?;
        raw.parse::<T>().map_err(|_| Error::Parse {
            path: self.path.clone(),
            row: row.0,
            message: format!("non-numeric value `{raw}`"),
        })
    }

    fn float(&self, row: &(usize, csv::StringRecord), col: usize) -> Result<f64> {
        let v: f64 = self.number(row, col)?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: self.path.clone(),
                row: row.0,
                message: format!("non-finite value {v}"),
            });
        }
        Ok(v)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("{other:?}"),
        },
    }
}

fn parse_markings(raw: &str, table: &Table, row: &(usize, csv::StringRecord)) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = part.parse().map_err(|_| Error::Parse {
            path: table.path.clone(),
            row: row.0,
            message: format!("non-numeric lane marking `{part}`"),
        })?;
        // image y -> right-handed y
        out.push(-v);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Parses one highD recording from its three CSV files.
///
/// Track points are grouped by vehicle id and sorted by frame. Bounding-box
/// corners become centers and `y` is negated (see module docs).
pub fn parse_recording(
    tracks_csv: &Path,
    tracks_meta_csv: &Path,
    recording_meta_csv: &Path,
) -> Result<Recording> {
    let rec_meta = Table::read(recording_meta_csv)?;
    let frame_rate_col = rec_meta.column("frameRate")?;
    let upper_col = rec_meta.column("upperLaneMarkings")?;
    let lower_col = rec_meta.column("lowerLaneMarkings")?;
    let row = rec_meta.rows.first().ok_or_else(|| Error::Parse {
        path: rec_meta.path.clone(),
        row: 2,
        message: "recording meta has no data row".into(),
    })?;
    let frame_rate = rec_meta.float(row, frame_rate_col)?;
    let id = match rec_meta.optional_column("id") {
        Some(c) => rec_meta.cell(row, c)?.to_string(),
        None => recording_meta_csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    // upper carriageway drives toward decreasing x in highD
    let lane_markings = vec![
        LaneMarkings {
            direction: Direction::Reversed,
            positions: parse_markings(rec_meta.cell(row, upper_col)?, &rec_meta, row)?,
        },
        LaneMarkings {
            direction: Direction::Forward,
            positions: parse_markings(rec_meta.cell(row, lower_col)?, &rec_meta, row)?,
        },
    ];

    let meta = Table::read(tracks_meta_csv)?;
    let meta_id = meta.column("id")?;
    let meta_w = meta.column("width")?;
    let meta_h = meta.column("height")?;
    let meta_dir = meta.optional_column("drivingDirection");
    let mut dims: HashMap<u32, (f64, f64, Option<Direction>)> = HashMap::new();
    for row in &meta.rows {
        let vid: u32 = meta.number(row, meta_id)?;
        let length = meta.float(row, meta_w)?;
        let width = meta.float(row, meta_h)?;
        let dir = match meta_dir {
            Some(c) => match meta.number::<i64>(row, c)? {
                1 => Some(Direction::Reversed),
                _ => Some(Direction::Forward),
            },
            None => None,
        };
        dims.insert(vid, (length, width, dir));
    }

    let tracks_table = Table::read(tracks_csv)?;
    let cols = [
        "frame",
        "id",
        "x",
        "y",
        "xVelocity",
        "yVelocity",
        "xAcceleration",
        "yAcceleration",
        "laneId",
    ]
    .map(|c| tracks_table.column(c));
    let [c_frame, c_id, c_x, c_y, c_vx, c_vy, c_ax, c_ay, c_lane] = {
        let mut out = [0usize; 9];
        for (slot, c) in out.iter_mut().zip(cols) {
            *slot = c?;
        }
        out
    };

    let mut grouped: BTreeMap<u32, Vec<TrackPoint>> = BTreeMap::new();
    for row in &tracks_table.rows {
        let vid: u32 = tracks_table.number(row, c_id)?;
        let &(length, width, _) = dims.get(&vid).ok_or_else(|| Error::Parse {
            path: tracks_table.path.clone(),
            row: row.0,
            message: format!("vehicle {vid} missing from tracks meta"),
        })?;
        let p = TrackPoint {
            frame: tracks_table.number(row, c_frame)?,
            x: tracks_table.float(row, c_x)? + length / 2.0,
            y: -(tracks_table.float(row, c_y)? + width / 2.0),
            vx: tracks_table.float(row, c_vx)?,
            vy: -tracks_table.float(row, c_vy)?,
            ax: tracks_table.float(row, c_ax)?,
            ay: -tracks_table.float(row, c_ay)?,
            lane_id: tracks_table.number(row, c_lane)?,
        };
        grouped.entry(vid).or_default().push(p);
    }

    let mut tracks = Vec::with_capacity(grouped.len());
    for (vid, mut points) in grouped {
        points.sort_by_key(|p| p.frame);
        let (length, width, dir) = dims[&vid];
        let mean_vx = points.iter().map(|p| p.vx).sum::<f64>() / points.len() as f64;
        let direction = dir.unwrap_or(if mean_vx < 0.0 {
            Direction::Reversed
        } else {
            Direction::Forward
        });
        tracks.push(Track {
            vehicle_id: vid,
            length,
            width,
            direction,
            points,
        });
    }

    let recording = Recording {
        id,
        frame_rate,
        lane_markings,
        tracks,
    };
    recording.validate()?;
    Ok(recording)
}

fn io_csv(path: &Path, e: csv::Error) -> Error {
    csv_error(path, e)
}

/// Writes a recording in highD layout (`<prefix>_tracks.csv`,
/// `<prefix>_tracksMeta.csv`, `<prefix>_recordingMeta.csv`).
///
/// Inverse of [`parse_recording`] up to float formatting. Returns the three
/// paths in that order.
pub fn write_highd(recording: &Recording, dir: &Path, prefix: &str) -> Result<[std::path::PathBuf; 3]> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tracks_path = dir.join(format!("{prefix}_tracks.csv"));
    let meta_path = dir.join(format!("{prefix}_tracksMeta.csv"));
    let rec_path = dir.join(format!("{prefix}_recordingMeta.csv"));

    let mut w = csv::Writer::from_path(&tracks_path).map_err(|e| io_csv(&tracks_path, e))?;
    w.write_record([
        "frame",
        "id",
        "x",
        "y",
        "width",
        "height",
        "xVelocity",
        "yVelocity",
        "xAcceleration",
        "yAcceleration",
        "laneId",
    ])
    .map_err(|e| io_csv(&tracks_path, e))?;
    // highD sorts rows by vehicle; interleaving by frame is also accepted on read
    for t in &recording.tracks {
        for p in &t.points {
            w.write_record([
                p.frame.to_string(),
                t.vehicle_id.to_string(),
                (p.x - t.length / 2.0).to_string(),
                (-p.y - t.width / 2.0).to_string(),
                t.length.to_string(),
                t.width.to_string(),
                p.vx.to_string(),
                (-p.vy).to_string(),
                p.ax.to_string(),
                (-p.ay).to_string(),
                p.lane_id.to_string(),
            ])
            .map_err(|e| io_csv(&tracks_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&tracks_path, e))?;

    let mut w = csv::Writer::from_path(&meta_path).map_err(|e| io_csv(&meta_path, e))?;
    w.write_record([
        "id",
        "width",
        "height",
        "initialFrame",
        "finalFrame",
        "numFrames",
        "drivingDirection",
    ])
    .map_err(|e| io_csv(&meta_path, e))?;
    for t in &recording.tracks {
        let dir = match t.direction {
            Direction::Reversed => "1",
            Direction::Forward => "2",
        };
        w.write_record([
            t.vehicle_id.to_string(),
            t.length.to_string(),
            t.width.to_string(),
            t.first_frame().to_string(),
            t.last_frame().to_string(),
            t.points.len().to_string(),
            dir.to_string(),
        ])
        .map_err(|e| io_csv(&meta_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&meta_path, e))?;

    let markings = |d: Direction| {
        recording
            .lane_markings
            .iter()
            .find(|m| m.direction == d)
            .map(|m| {
                let mut img: Vec<f64> = m.positions.iter().map(|v| -v).collect();
                img.sort_by(f64::total_cmp);
                img.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
            })
            .unwrap_or_default()
    };
    let mut w = csv::Writer::from_path(&rec_path).map_err(|e| io_csv(&rec_path, e))?;
    w.write_record(["id", "frameRate", "upperLaneMarkings", "lowerLaneMarkings"])
        .map_err(|e| io_csv(&rec_path, e))?;
    w.write_record([
        recording.id.clone(),
        recording.frame_rate.to_string(),
        markings(Direction::Reversed),
        markings(Direction::Forward),
    ])
    .map_err(|e| io_csv(&rec_path, e))?;
    w.flush().map_err(|e| Error::io(&rec_path, e))?;

    Ok([tracks_path, meta_path, rec_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    const HEADER: &str = "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId\n";

    fn meta_files(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let meta = write(
            dir,
            "tm.csv",
            "id,width,height,drivingDirection\n1,4.5,2.0,2\n2,10.0,2.5,2\n",
        );
        let rec = write(
            dir,
            "rm.csv",
            "id,frameRate,upperLaneMarkings,lowerLaneMarkings\n7,25,8.5;12.5;16.4,21.0;25.0;29.0\n",
        );
        (meta, rec)
    }

    #[test]
    fn three_rows_one_vehicle() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEADER}0,1,10,20,4.5,2,30,0,0,0,5\n1,1,11.2,20,4.5,2,30,0,0,0,5\n2,1,12.4,20,4.5,2,30,0,0,0,5\n"
        );
        let tracks = write(dir.path(), "t.csv", &body);
        let (meta, rec) = meta_files(dir.path());
        let r = parse_recording(&tracks, &meta, &rec).unwrap();
        assert_eq!(r.id, "7");
        assert_eq!(r.frame_rate, 25.0);
        assert_eq!(r.tracks.len(), 1);
        let t = &r.tracks[0];
        assert_eq!(t.points.len(), 3);
        assert_eq!(t.points[0].x, 12.25);
        assert_eq!(t.points[0].y, -21.0);
        assert_eq!(r.lane_markings[0].positions, vec![-16.4, -12.5, -8.5]);
    }

    #[test]
    fn header_only_gives_empty_recording() {
        let dir = tempfile::tempdir().unwrap();
        let tracks = write(dir.path(), "t.csv", HEADER);
        let (meta, rec) = meta_files(dir.path());
        let r = parse_recording(&tracks, &meta, &rec).unwrap();
        assert!(r.tracks.is_empty());
    }

    #[test]
    fn interleaved_rows_sorted_per_vehicle() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [
            (2, 2, 50.0),
            (1, 1, 11.0),
            (0, 2, 48.0),
            (0, 1, 10.0),
            (1, 2, 49.0),
            (2, 1, 12.0),
        ];
        let mut body = HEADER.to_string();
        for (frame, id, x) in rows {
            body.push_str(&format!("{frame},{id},{x},20,4,2,25,0,0,0,5\n"));
        }
        let tracks = write(dir.path(), "t.csv", &body);
        let (meta, rec) = meta_files(dir.path());
        let r = parse_recording(&tracks, &meta, &rec).unwrap();

        // oracle: stable sort rows by (id, frame), then group
        let mut sorted = rows.to_vec();
        sorted.sort_by_key(|&(f, id, _)| (id, f));
        for t in &r.tracks {
            let expected: Vec<i64> = sorted
                .iter()
                .filter(|r| r.1 == t.vehicle_id)
                .map(|r| r.0)
                .collect();
            let got: Vec<i64> = t.points.iter().map(|p| p.frame).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let (meta, rec) = meta_files(dir.path());
        let missing = dir.path().join("nope.csv");
        let err = parse_recording(&missing, &meta, &rec).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("nope.csv"));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let tracks = write(dir.path(), "t.csv", "frame,id,x,y\n0,1,1,1\n");
        let (meta, rec) = meta_files(dir.path());
        match parse_recording(&tracks, &meta, &rec).unwrap_err() {
            Error::Schema { column, .. } => assert_eq!(column, "xVelocity"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}0,1,10,20,4.5,2,30,0,0,0,5\n1,1,abc,20,4.5,2,30,0,0,0,5\n");
        let tracks = write(dir.path(), "t.csv", &body);
        let (meta, rec) = meta_files(dir.path());
        match parse_recording(&tracks, &meta, &rec).unwrap_err() {
            Error::Parse { row, message, .. } => {
                assert_eq!(row, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other}"),
        }
    }
}
