//! Single-file JSON container for a calibrated detector.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! reloaded detector produces bit-identical p-values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CalibratedDetector;
use crate::{Error, Result};

pub const FORMAT_NAME: &str = "conformal-ad/calibrated-detector";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'static str,
    version: u32,
    detector: &'a CalibratedDetector,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    version: u32,
    detector: serde_json::Value,
}

pub fn to_writer<W: Write>(det: &CalibratedDetector, writer: W) -> Result<()> {
    let env = EnvelopeOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        detector: det,
    };
    serde_json::to_writer(writer, &env).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_reader<R: Read>(reader: R) -> Result<CalibratedDetector> {
    let env: EnvelopeIn = serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))?;
    if env.format != FORMAT_NAME {
        return Err(Error::Format(format!("unexpected format tag '{}'", env.format)));
    }
    if env.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "version {} is not supported (expected {FORMAT_VERSION})",
            env.version
        )));
    }
    let det: CalibratedDetector =
        serde_json::from_value(env.detector).map_err(|e| Error::Format(e.to_string()))?;
    let (strategy, calibration, inference) = det.into_parts();
    strategy.validate()?;
    CalibratedDetector::from_parts(strategy, calibration, inference)
}

pub fn save(det: &CalibratedDetector, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    to_writer(det, &mut w)?;
    w.flush().map_err(io)
}

pub fn load(path: &Path) -> Result<CalibratedDetector> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_reader(BufReader::new(file))
}
