//! On-disk cube and label formats.
//!
//! A cube is a JSON header `<name>.json` next to a raw payload `<name>.raw`
//! holding B contiguous H×W planes (row-major within a plane) of 32-bit
//! little-endian floats. Labels are `<name>.labels.raw`: H×W row-major
//! 16-bit little-endian unsigned ids, 0 for unlabeled.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HyperCube, LabelMap};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const CUBE_MAGIC: &str = "HSTC1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeHeader {
    pub magic: String,
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub dtype: String,
    pub order: String,
    pub endianness: String,
}

impl CubeHeader {
    pub fn new(height: usize, width: usize, bands: usize) -> Self {
        Self {
            magic: CUBE_MAGIC.into(),
            height,
            width,
            bands,
            dtype: "f32".into(),
            order: "bsq".into(),
            endianness: "little".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let expect = |field: &str, got: &str, want: &str| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Format(format!("header field {field} is {got:?}, expected {want:?}")))
            }
        };
        expect("magic", &self.magic, CUBE_MAGIC)?;
        expect("dtype", &self.dtype, "f32")?;
        expect("order", &self.order, "bsq")?;
        expect("endianness", &self.endianness, "little")?;
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return Err(Error::Format("cube dimensions must be positive".into()));
        }
        Ok(())
    }

    fn payload_bytes(&self) -> usize {
        self.height * self.width * self.bands * 4
    }
}

/// Header and payload paths for a cube given either file or the bare stem.
pub fn cube_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut json = stem.clone().into_os_string();
    json.push(".json");
    let mut raw = stem.into_os_string();
    raw.push(".raw");
    (json.into(), raw.into())
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let (json_path, raw_path) = cube_paths(path.as_ref());
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: CubeHeader = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {}", json_path.display(), e)))?;
    header.validate()?;
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    if bytes.len() != header.payload_bytes() {
        return Err(Error::Format(format!(
            "{}: expected {} bytes for a {}x{}x{} cube, found {}",
            raw_path.display(),
            header.payload_bytes(),
            header.height,
            header.width,
            header.bands,
            bytes.len()
        )));
    }
    let (h, w) = (header.height, header.width);
    let mut data = vec![0.0; h * w * header.bands];
    for (offset, chunk) in bytes.chunks_exact(4).enumerate() {
        let value = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        let band = offset / (h * w);
        let row = (offset / w) % h;
        let col = offset % w;
        data[row + h * (col + w * band)] = value;
    }
    HyperCube::new(DenseTensor::new(vec![h, w, header.bands], data)?)
}

/// Writes `<stem>.json` and `<stem>.raw`. Values are narrowed to `f32`.
pub fn save_cube(path: impl AsRef<Path>, cube: &HyperCube) -> Result<()> {
    let (json_path, raw_path) = cube_paths(path.as_ref());
    let header = CubeHeader::new(cube.height(), cube.width(), cube.bands());
    let text = serde_json::to_string(&header).expect("header serializes");
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    let mut bytes = Vec::with_capacity(header.payload_bytes());
    for b in 0..cube.bands() {
        for r in 0..cube.height() {
            for c in 0..cube.width() {
                bytes.extend_from_slice(&(cube.get(r, c, b) as f32).to_le_bytes());
            }
        }
    }
    fs::write(&raw_path, bytes).map_err(|e| Error::io(&raw_path, e))
}

pub fn load_labels(path: impl AsRef<Path>, height: usize, width: usize) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != height * width * 2 {
        return Err(Error::Format(format!(
            "{}: expected {} bytes for {}x{} labels, found {}",
            path.display(),
            height * width * 2,
            height,
            width,
            bytes.len()
        )));
    }
    let ids = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    LabelMap::new(height, width, ids)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = labels.ids().iter().flat_map(|id| id.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cube_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cube = HyperCube::from_fn(2, 2, 1, |_| 0.0);
        save_cube(dir.path().join("z"), &cube).unwrap();
        let back = load_cube(dir.path().join("z.json")).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn hand_written_bsq_payload() {
        // 1x2x2: band 0 plane = (1, 2), band 1 plane = (3, 4).
        let dir = tempfile::tempdir().unwrap();
        let header = r#"{"magic":"HSTC1","height":1,"width":2,"bands":2,"dtype":"f32","order":"bsq","endianness":"little"}"#;
        fs::write(dir.path().join("h.json"), header).unwrap();
        let payload: Vec<u8> = [1.0f32, 2.0, 3.0, 4.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(dir.path().join("h.raw"), payload).unwrap();
        let cube = load_cube(dir.path().join("h")).unwrap();
        assert_eq!(cube.get(0, 0, 0), 1.0);
        assert_eq!(cube.get(0, 1, 0), 2.0);
        assert_eq!(cube.get(0, 0, 1), 3.0);
        assert_eq!(cube.get(0, 1, 1), 4.0);
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let cube = HyperCube::from_fn(2, 3, 2, |i| i[2] as f64);
        save_cube(dir.path().join("t"), &cube).unwrap();
        let raw = dir.path().join("t.raw");
        let mut bytes = fs::read(&raw).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&raw, bytes).unwrap();
        let err = load_cube(dir.path().join("t.json")).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Format(_)));
        assert!(msg.contains("48") && msg.contains("45"), "{msg}");
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let header = r#"{"magic":"NOPE","height":1,"width":1,"bands":1,"dtype":"f32","order":"bsq","endianness":"little"}"#;
        fs::write(dir.path().join("m.json"), header).unwrap();
        fs::write(dir.path().join("m.raw"), [0u8; 4]).unwrap();
        assert!(matches!(load_cube(dir.path().join("m")), Err(Error::Format(_))));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let labels = LabelMap::new(2, 3, vec![0, 1, 2, 65535, 3, 0]).unwrap();
        let path = dir.path().join("x.labels.raw");
        save_labels(&path, &labels).unwrap();
        assert_eq!(load_labels(&path, 2, 3).unwrap(), labels);
        assert!(matches!(load_labels(&path, 3, 3), Err(Error::Format(_))));
    }
}
