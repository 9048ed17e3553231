//! IDX binary files: a big-endian `u32` magic, one big-endian `u32` per
//! dimension, then unsigned bytes in row-major order.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::nn::Targets;
use crate::tensor::Tensor;

use super::{Dataset, DatasetError};

/// Three-dimensional unsigned-byte array (count x rows x cols).
pub const IMAGES_MAGIC: u32 = 0x0000_0803;
/// One-dimensional unsigned-byte array.
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Image count, rows, cols and the raw pixel bytes.
pub type IdxImages = (usize, usize, usize, Vec<u8>);

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a str,
}

impl Reader<'_> {
    fn fail(&self, offset: usize, reason: String) -> DatasetError {
        DatasetError::Parse {
            path: self.path.to_string(),
            offset,
            reason,
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32, DatasetError> {
        let end = self.offset + 4;
        let chunk = self
            .bytes
            .get(self.offset..end)
            .ok_or_else(|| self.fail(self.bytes.len(), format!("file truncated while reading {what}")))?;
        self.offset = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("four bytes")))
    }

    fn magic(&mut self, expected: u32) -> Result<(), DatasetError> {
        let found = self.u32("magic number")?;
        if found != expected {
            return Err(self.fail(0, format!("bad magic 0x{found:08x}, expected 0x{expected:08x}")));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&[u8], DatasetError> {
        let available = self.bytes.len() - self.offset;
        if available < len {
            return Err(self.fail(
                self.bytes.len(),
                format!("file truncated: header promises {len} data bytes, {available} present"),
            ));
        }
        if available > len {
            return Err(self.fail(self.offset + len, format!("{} unexpected trailing bytes", available - len)));
        }
        let out = &self.bytes[self.offset..];
        self.offset += len;
        Ok(out)
    }
}

pub fn parse_idx_images(bytes: &[u8], path: &str) -> Result<IdxImages, DatasetError> {
    let mut r = Reader { bytes, offset: 0, path };
    r.magic(IMAGES_MAGIC)?;
    let count = r.u32("image count")? as usize;
    let rows = r.u32("row count")? as usize;
    let cols = r.u32("column count")? as usize;
    let pixels = r.payload(count * rows * cols)?.to_vec();
    Ok((count, rows, cols, pixels))
}

pub fn parse_idx_labels(bytes: &[u8], path: &str) -> Result<Vec<u8>, DatasetError> {
    let mut r = Reader { bytes, offset: 0, path };
    r.magic(LABELS_MAGIC)?;
    let count = r.u32("label count")? as usize;
    Ok(r.payload(count)?.to_vec())
}

pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len() / (rows * cols).max(1);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an image file and its label file. Each image becomes one row of
/// `rows * cols` features, pixel / 255, in row-major order.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, DatasetError> {
    let image_bytes = read(images_path)?;
    let label_bytes = read(labels_path)?;
    let (count, rows, cols, pixels) = parse_idx_images(&image_bytes, &images_path.display().to_string())?;
    let labels = parse_idx_labels(&label_bytes, &labels_path.display().to_string())?;
    if labels.len() != count {
        return Err(DatasetError::Parse {
            path: labels_path.display().to_string(),
            offset: 4,
            reason: format!("{} labels but {} images in {}", labels.len(), count, images_path.display()),
        });
    }
    if count == 0 || rows * cols == 0 {
        return Err(DatasetError::Config(format!("{} holds no pixels", images_path.display())));
    }
    let features = Tensor::new(&[count, rows * cols], pixels.iter().map(|&p| f64::from(p) / 255.0).collect())?;
    let provenance = format!(
        "idx(images={} sha256={}, labels={} sha256={})",
        images_path.display(),
        hex::encode(Sha256::digest(&image_bytes)),
        labels_path.display(),
        hex::encode(Sha256::digest(&label_bytes)),
    );
    Dataset::new(features, Targets::Classes(labels.into_iter().map(usize::from).collect()), provenance)
}
