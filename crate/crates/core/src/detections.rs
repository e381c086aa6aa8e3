//! Detection data model, validation and CSV/JSON I/O.
//!
//! A [`Detection`] is a square window `{x, y, z, s}`: left edge, top edge,
//! side length (width = height = `z`) and confidence score. A
//! [`DetectionVector`] stores detections in a fixed-capacity buffer of
//! length `d_max`, with unused slots zeroed out (`z = 0`, `s = 0`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NmsError, Result};

/// Largest admissible right/bottom edge (`x + z`, `y + z`).
///
/// Keeps every intersection and area product below 2^53 so the overlap test
/// stays exact in double precision.
pub const MAX_COORD: u32 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Detection {
    pub x: u32,
    pub y: u32,
    pub z: u32,
    pub s: f64,
}

impl Detection {
    pub const PADDING: Detection = Detection {
        x: 0,
        y: 0,
        z: 0,
        s: 0.0,
    };

    pub const fn new(x: u32, y: u32, z: u32, s: f64) -> Self {
        Detection { x, y, z, s }
    }

    pub fn is_padding(&self) -> bool {
        self.z == 0 && self.s == 0.0
    }

    /// Checks the invariants of a real (non-padding) detection.
    pub fn validate(&self) -> Result<()> {
        if self.z == 0 {
            return Err(NmsError::Validation(format!(
                "side length must be >= 1: {self:?}"
            )));
        }
        if !self.s.is_finite() || self.s <= 0.0 {
            return Err(NmsError::Validation(format!(
                "score must be finite and > 0: {self:?}"
            )));
        }
        let fits = |lo: u32| lo.checked_add(self.z).is_some_and(|hi| hi <= MAX_COORD);
        if !fits(self.x) || !fits(self.y) {
            return Err(NmsError::Validation(format!(
                "coordinates exceed {MAX_COORD}: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Fixed-capacity, zero-padded vector of detections.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionVector {
    slots: Vec<Detection>,
    count: usize,
}

impl DetectionVector {
    /// Validates `detections` and pads them with zero slots up to `d_max`.
    pub fn new(detections: Vec<Detection>, d_max: usize) -> Result<Self> {
        if detections.len() > d_max {
            return Err(NmsError::Capacity {
                count: detections.len(),
                d_max,
            });
        }
        for d in &detections {
            d.validate()?;
        }
        let count = detections.len();
        let mut slots = detections;
        slots.resize(d_max, Detection::PADDING);
        Ok(DetectionVector { slots, count })
    }

    pub fn empty(d_max: usize) -> Self {
        DetectionVector {
            slots: vec![Detection::PADDING; d_max],
            count: 0,
        }
    }

    /// All `d_max` slots, padding included.
    pub fn slots(&self) -> &[Detection] {
        &self.slots
    }

    /// The valid prefix.
    pub fn valid(&self) -> &[Detection] {
        &self.slots[..self.count]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn d_max(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Same valid detections in a buffer of a different capacity.
    pub fn with_capacity(&self, d_max: usize) -> Result<Self> {
        DetectionVector::new(self.valid().to_vec(), d_max)
    }
}

/// Survivors of an NMS pass, in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NmsResult {
    pub survivors: Vec<Detection>,
    pub suppressed_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = NmsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(NmsError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Raw record before validation. Keeping the fields signed and real lets
/// negative or fractional values surface as validation errors instead of
/// opaque parse failures.
#[derive(Debug, Deserialize)]
struct RawRecord {
    x: f64,
    y: f64,
    z: f64,
    s: f64,
}

impl RawRecord {
    fn into_detection(self, index: usize) -> Result<Detection> {
        let coord = |name: &str, v: f64| -> Result<u32> {
            if v.fract() != 0.0 || v < 0.0 || v > MAX_COORD as f64 {
                return Err(NmsError::Validation(format!(
                    "record {index}: `{name}` must be an integer in [0, {MAX_COORD}], got {v}"
                )));
            }
            Ok(v as u32)
        };
        let det = Detection {
            x: coord("x", self.x)?,
            y: coord("y", self.y)?,
            z: coord("z", self.z)?,
            s: self.s,
        };
        det.validate()
            .map_err(|e| NmsError::Validation(format!("record {index}: {e}")))?;
        Ok(det)
    }
}

pub fn read_detections<R: Read>(reader: R, format: Format) -> Result<Vec<Detection>> {
    let raw: Vec<RawRecord> = match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(reader);
            let headers = rdr
                .headers()
                .map_err(|e| NmsError::Parse(e.to_string()))?
                .clone();
            if !headers.is_empty() && headers.iter().collect::<Vec<_>>() != ["x", "y", "z", "s"] {
                return Err(NmsError::Parse(format!(
                    "expected header `x,y,z,s`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
            rdr.deserialize()
                .enumerate()
                .map(|(i, r)| r.map_err(|e| NmsError::Parse(format!("record {i}: {e}"))))
                .collect::<Result<_>>()?
        }
        Format::Json => {
            let mut text = String::new();
            BufReader::new(reader).read_to_string(&mut text)?;
            if text.trim().is_empty() {
                Vec::new()
            } else {
                serde_json::from_str(&text).map_err(|e| NmsError::Parse(e.to_string()))?
            }
        }
    };
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.into_detection(i))
        .collect()
}

pub fn write_detections<W: Write>(
    writer: W,
    detections: &[Detection],
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut wtr = csv::WriterBuilder::new()
                .has_headers(false)
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(writer);
            wtr.write_record(["x", "y", "z", "s"])
                .map_err(|e| NmsError::Io(e.into()))?;
            for d in detections {
                wtr.serialize(d).map_err(|e| NmsError::Io(e.into()))?;
            }
            wtr.flush()?;
        }
        Format::Json => {
            let mut w = BufWriter::new(writer);
            serde_json::to_writer(&mut w, detections).map_err(|e| NmsError::Io(e.into()))?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Loads a detection file into a vector of capacity `d_max`, in file order.
pub fn load_detections(path: &Path, format: Format, d_max: usize) -> Result<DetectionVector> {
    let file = File::open(path)?;
    let dets = read_detections(BufReader::new(file), format)?;
    DetectionVector::new(dets, d_max)
}

/// Writes the survivors of `result`, in order.
pub fn store_result(result: &NmsResult, path: &Path, format: Format) -> Result<()> {
    store_detections(&result.survivors, path, format)
}

pub fn store_detections(detections: &[Detection], path: &Path, format: Format) -> Result<()> {
    let file = File::create(path)?;
    write_detections(BufWriter::new(file), detections, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_csv(text: &str) -> Result<Vec<Detection>> {
        read_detections(text.as_bytes(), Format::Csv)
    }

    #[test]
    fn load_pads_to_capacity() {
        let dets = parse_csv("x,y,z,s\n0,0,10,0.5\n5,5,10,0.9\n").unwrap();
        let v = DetectionVector::new(dets, 4).unwrap();
        assert_eq!(v.count(), 2);
        assert_eq!(v.d_max(), 4);
        assert_eq!(v.slots()[1], Detection::new(5, 5, 10, 0.9));
        assert!(v.slots()[2..].iter().all(Detection::is_padding));
    }

    #[test]
    fn empty_inputs() {
        assert!(parse_csv("").unwrap().is_empty());
        assert!(parse_csv("x,y,z,s\n").unwrap().is_empty());
        assert!(read_detections(&b"[]"[..], Format::Json)
            .unwrap()
            .is_empty());
        let v = DetectionVector::new(vec![], 3).unwrap();
        assert_eq!(v.count(), 0);
        assert!(v.slots().iter().all(Detection::is_padding));
    }

    #[test]
    fn rejects_invalid_records() {
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,10,-1.0\n"),
            Err(NmsError::Validation(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,0,0.5\n"),
            Err(NmsError::Validation(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,10,0\n"),
            Err(NmsError::Validation(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,10,NaN\n"),
            Err(NmsError::Validation(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n-3,0,10,0.5\n"),
            Err(NmsError::Validation(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n1.5,0,10,0.5\n"),
            Err(NmsError::Validation(_))
        ));
        let overflow = format!("x,y,z,s\n{},0,10,0.5\n", MAX_COORD - 5);
        assert!(matches!(parse_csv(&overflow), Err(NmsError::Validation(_))));
    }

    #[test]
    fn rejects_malformed_records() {
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,abc,0.5\n"),
            Err(NmsError::Parse(_))
        ));
        assert!(matches!(
            parse_csv("x,y,z,s\n0,0,10\n"),
            Err(NmsError::Parse(_))
        ));
        assert!(matches!(
            parse_csv("a,b,c,d\n0,0,10,0.5\n"),
            Err(NmsError::Parse(_))
        ));
        assert!(matches!(
            read_detections(&br#"[{"x":0,"y":0,"z":10}]"#[..], Format::Json),
            Err(NmsError::Parse(_))
        ));
    }

    #[test]
    fn capacity_error() {
        let dets = vec![Detection::new(0, 0, 1, 1.0); 5];
        assert!(matches!(
            DetectionVector::new(dets, 4),
            Err(NmsError::Capacity { count: 5, d_max: 4 })
        ));
    }

    #[test]
    fn csv_layout_is_exact() {
        let survivors = vec![
            Detection::new(0, 0, 10, 0.9),
            Detection::new(50, 50, 10, 0.8),
        ];
        let mut buf = Vec::new();
        write_detections(&mut buf, &survivors, Format::Csv).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,z,s\n0,0,10,0.9\n50,50,10,0.8\n"
        );

        let mut buf = Vec::new();
        write_detections(&mut buf, &[], Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,z,s\n");

        let mut buf = Vec::new();
        write_detections(&mut buf, &survivors[..1], Format::Json).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "[{\"x\":0,\"y\":0,\"z\":10,\"s\":0.9}]\n"
        );
    }

    #[test]
    fn store_then_load_files() {
        let dir = tempfile::tempdir().unwrap();
        for (name, format) in [("r.csv", Format::Csv), ("r.json", Format::Json)] {
            let path = dir.path().join(name);
            let result = NmsResult {
                survivors: vec![Detection::new(3, 4, 5, 0.123456789)],
                suppressed_count: 2,
            };
            store_result(&result, &path, format).unwrap();
            let back = load_detections(&path, Format::from_path(&path), 8).unwrap();
            assert_eq!(back.valid(), &result.survivors[..]);

            store_result(&NmsResult::default(), &path, format).unwrap();
            assert_eq!(load_detections(&path, format, 8).unwrap().count(), 0);
        }
    }

    #[test]
    fn scores_round_trip_bit_exact() {
        let dets: Vec<Detection> = [0.9717157287525381, 1.0 - f64::EPSILON, 5e-324, 0.1 + 0.2]
            .iter()
            .map(|&s| Detection::new(1, 2, 3, s))
            .collect();
        for format in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            write_detections(&mut buf, &dets, format).unwrap();
            let back = read_detections(&buf[..], format).unwrap();
            let bits = |v: &[Detection]| v.iter().map(|d| d.s.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back), bits(&dets), "{format:?}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_detections(Path::new("/nonexistent/dets.csv"), Format::Csv, 4).unwrap_err();
        assert!(matches!(err, NmsError::Io(_)));
    }
}
