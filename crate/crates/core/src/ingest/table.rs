//! Single-file CSV form of canonical recordings.
//!
//! Each recording contributes one metadata comment line followed by its rows:
//!
//! ```text
//! # recording id=<id> frame_rate=<hz> markings.forward=<m1;m2;..> markings.reversed=<..>
//! recording_id,vehicle_id,length,width,direction,frame,x,y,vx,vy,ax,ay,lane_id
//! ```
//!
//! The header row appears once, after the first comment line. Floats are
//! written in shortest round-trip form, so re-reading is lossless.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Direction, LaneMarkings, Recording, Track, TrackPoint};
use crate::{Error, Result};

const HEADER: [&str; 13] = [
    "recording_id",
    "vehicle_id",
    "length",
    "width",
    "direction",
    "frame",
    "x",
    "y",
    "vx",
    "vy",
    "ax",
    "ay",
    "lane_id",
];

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_recordings_csv(recordings: &[Recording], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    let mut header_written = false;
    for r in recordings {
        let mut meta = format!("# recording id={} frame_rate={}", r.id, r.frame_rate);
        for m in &r.lane_markings {
            meta.push_str(&format!(
                " markings.{}={}",
                m.direction.as_str(),
                join(&m.positions)
            ));
        }
        writeln!(out, "{meta}").map_err(|e| Error::io(path, e))?;
        if !header_written {
            writeln!(out, "{}", HEADER.join(",")).map_err(|e| Error::io(path, e))?;
            header_written = true;
        }
        for t in &r.tracks {
            for p in &t.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.id,
                    t.vehicle_id,
                    t.length,
                    t.width,
                    t.direction.as_str(),
                    p.frame,
                    p.x,
                    p.y,
                    p.vx,
                    p.vy,
                    p.ax,
                    p.ay,
                    p.lane_id
                )
                .map_err(|e| Error::io(path, e))?;
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn parse_meta(path: &Path, row: usize, line: &str) -> Result<Recording> {
    let mut rec = Recording {
        id: String::new(),
        frame_rate: 0.0,
        lane_markings: Vec::new(),
        tracks: Vec::new(),
    };
    for field in line.split_whitespace().skip(1) {
        let Some((key, value)) = field.split_once('=') else {
            continue;
        };
        match key {
            "id" => rec.id = value.to_string(),
            "frame_rate" => {
                rec.frame_rate = value
                    .parse()
                    .map_err(|_| parse_err(path, row, format!("bad frame_rate `{value}`")))?
            }
            k if k.starts_with("markings.") => {
                let direction = Direction::parse(&k["markings.".len()..])
                    .ok_or_else(|| parse_err(path, row, format!("unknown carriageway `{k}`")))?;
                let positions = value
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| parse_err(path, row, format!("bad marking `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rec.lane_markings.push(LaneMarkings { direction, positions });
            }
            _ => {}
        }
    }
    Ok(rec)
}

pub fn read_recordings_csv(path: &Path) -> Result<Vec<Recording>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut recordings: Vec<Recording> = Vec::new();
    let mut saw_header = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if line.starts_with("# recording") {
                recordings.push(parse_meta(path, row, &line)?);
            }
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            for h in HEADER {
                if !cols.contains(&h) {
                    return Err(Error::Schema {
                        path: path.to_path_buf(),
                        column: h.to_string(),
                    });
                }
            }
            if cols != HEADER {
                return Err(parse_err(path, row, "columns out of order"));
            }
            saw_header = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != HEADER.len() {
            return Err(parse_err(
                path,
                row,
                format!("expected {} cells, got {}", HEADER.len(), cells.len()),
            ));
        }
        let f = |k: usize| -> Result<f64> {
            cells[k]
                .parse::<f64>()
                .map_err(|_| parse_err(path, row, format!("non-numeric value `{}`", cells[k])))
        };
        let rec = recordings
            .iter_mut()
            .rev()
            .find(|r| r.id == cells[0])
            .ok_or_else(|| parse_err(path, row, format!("row for unknown recording `{}`", cells[0])))?;
        let vehicle_id: u32 = cells[1]
            .parse()
            .map_err(|_| parse_err(path, row, format!("bad vehicle id `{}`", cells[1])))?;
        let direction = Direction::parse(cells[4])
            .ok_or_else(|| parse_err(path, row, format!("bad direction `{}`", cells[4])))?;
        let point = TrackPoint {
            frame: cells[5]
                .parse()
                .map_err(|_| parse_err(path, row, format!("bad frame `{}`", cells[5])))?,
            x: f(6)?,
            y: f(7)?,
            vx: f(8)?,
            vy: f(9)?,
            ax: f(10)?,
            ay: f(11)?,
            lane_id: cells[12]
                .parse()
                .map_err(|_| parse_err(path, row, format!("bad lane id `{}`", cells[12])))?,
        };
        match rec.tracks.last_mut() {
            Some(t) if t.vehicle_id == vehicle_id => t.points.push(point),
            _ => rec.tracks.push(Track {
                vehicle_id,
                length: f(2)?,
                width: f(3)?,
                direction,
                points: vec![point],
            }),
        }
    }
    for r in &recordings {
        r.validate()?;
    }
    Ok(recordings)
}
