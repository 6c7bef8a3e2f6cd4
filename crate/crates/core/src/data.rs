//! IDX and CIFAR-10 binary readers plus image preprocessing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const CIFAR_RECORD: usize = 1 + 3 * 1024;
pub const N_CLASSES: usize = 10;

/// Row-major grayscale image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: pixels.len(),
            });
        }
        Ok(Image { rows, cols, pixels })
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.cols + c]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: usize,
}

/// Contents of one IDX file.
#[derive(Debug, Clone, PartialEq)]
pub enum Idx {
    Images(Vec<Image>),
    Labels(Vec<u8>),
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(bytes.len(), "truncated header"))
}

pub fn parse_idx(bytes: &[u8]) -> Result<Idx> {
    match be_u32(bytes, 0)? {
        IDX_IMAGES_MAGIC => parse_idx_images(bytes).map(Idx::Images),
        IDX_LABELS_MAGIC => parse_idx_labels(bytes).map(Idx::Labels),
        other => Err(Error::parse(0, format!("bad magic 0x{other:08x}"))),
    }
}

fn check_magic(bytes: &[u8], want: u32) -> Result<()> {
    let got = be_u32(bytes, 0)?;
    if got != want {
        return Err(Error::parse(0, format!("bad magic 0x{got:08x}, expected 0x{want:08x}")));
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    bytes.get(start..start + len).ok_or_else(|| {
        Error::parse(
            bytes.len(),
            format!(
                "truncated data: need {len} bytes after header, found {}",
                bytes.len() - start
            ),
        )
    })
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(8, "zero image dimension"));
    }
    let data = payload(bytes, 16, count * rows * cols)?;
    Ok(data
        .chunks_exact(rows * cols)
        .map(|px| Image {
            rows,
            cols,
            pixels: px.iter().map(|&b| b as f64 / 255.0).collect(),
        })
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

/// CIFAR-10 binary batch, converted to luma `0.299 R + 0.587 G + 0.114 B`.
pub fn parse_cifar10(bytes: &[u8]) -> Result<Vec<LabeledImage>> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::parse(
            bytes.len() - bytes.len() % CIFAR_RECORD,
            format!("length {} is not a multiple of {CIFAR_RECORD}", bytes.len()),
        ));
    }
    bytes
        .chunks_exact(CIFAR_RECORD)
        .enumerate()
        .map(|(n, rec)| {
            let label = rec[0] as usize;
            if label >= N_CLASSES {
                return Err(Error::parse(n * CIFAR_RECORD, format!("label {label} out of range")));
            }
            let (r, rest) = rec[1..].split_at(1024);
            let (g, b) = rest.split_at(1024);
            let pixels = (0..1024)
                .map(|i| (0.299 * r[i] as f64 + 0.587 * g[i] as f64 + 0.114 * b[i] as f64) / 255.0)
                .collect();
            Ok(LabeledImage {
                image: Image {
                    rows: 32,
                    cols: 32,
                    pixels,
                },
                label,
            })
        })
        .collect()
}

/// Replaces each `f × f` block by its mean.
pub fn avg_pool_downsample(image: &Image, f: usize) -> Result<Image> {
    if f == 0 || !image.rows.is_multiple_of(f) || !image.cols.is_multiple_of(f) {
        return Err(Error::Dataset(format!(
            "{}x{} image is not divisible by downsample factor {f}",
            image.rows, image.cols
        )));
    }
    let (rows, cols) = (image.rows / f, image.cols / f);
    let scale = 1.0 / (f * f) as f64;
    let mut pixels = vec![0.0; rows * cols];
    for r in 0..image.rows {
        for c in 0..image.cols {
            pixels[(r / f) * cols + c / f] += image.at(r, c) * scale;
        }
    }
    Ok(Image { rows, cols, pixels })
}

/// Centers `image` in a `rows × cols` canvas; an odd remainder goes to the bottom/right.
pub fn pad_to(image: &Image, rows: usize, cols: usize, value: f64) -> Result<Image> {
    if rows < image.rows || cols < image.cols {
        return Err(Error::Dataset(format!(
            "cannot pad {}x{} down to {rows}x{cols}",
            image.rows, image.cols
        )));
    }
    let top = (rows - image.rows) / 2;
    let left = (cols - image.cols) / 2;
    let mut pixels = vec![value; rows * cols];
    for r in 0..image.rows {
        let dst = (top + r) * cols + left;
        pixels[dst..dst + image.cols].copy_from_slice(&image.pixels[r * image.cols..(r + 1) * image.cols]);
    }
    Ok(Image { rows, cols, pixels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Fashion,
    Cifar10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Where a dataset lives and how to turn its images into network inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Directory holding the standard file names; relative paths resolve
    /// against the config file's directory.
    pub path: PathBuf,
    pub train_count: usize,
    pub test_count: usize,
    #[serde(default)]
    pub pad_to: Option<[usize; 2]>,
    #[serde(default = "one")]
    pub downsample: usize,
}

fn one() -> usize {
    1
}

impl DatasetSpec {
    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_count,
            Split::Test => self.test_count,
        }
    }

    pub fn files(&self, split: Split) -> Vec<PathBuf> {
        let p = &self.path;
        match (self.kind, split) {
            (DatasetKind::Cifar10, Split::Train) => (1..=5).map(|i| p.join(format!("data_batch_{i}.bin"))).collect(),
            (DatasetKind::Cifar10, Split::Test) => vec![p.join("test_batch.bin")],
            (_, Split::Train) => vec![p.join("train-images-idx3-ubyte"), p.join("train-labels-idx1-ubyte")],
            (_, Split::Test) => vec![p.join("t10k-images-idx3-ubyte"), p.join("t10k-labels-idx1-ubyte")],
        }
    }

    /// Shape after padding and downsampling of a `rows × cols` source image.
    pub fn output_shape(&self, rows: usize, cols: usize) -> [usize; 2] {
        let [r, c] = self.pad_to.unwrap_or([rows, cols]);
        [r / self.downsample.max(1), c / self.downsample.max(1)]
    }

    pub fn source_shape(&self) -> [usize; 2] {
        match self.kind {
            DatasetKind::Cifar10 => [32, 32],
            _ => [28, 28],
        }
    }

    pub fn preprocess(&self, image: &Image) -> Result<Image> {
        let padded = match self.pad_to {
            Some([r, c]) => pad_to(image, r, c, 0.0)?,
            None => image.clone(),
        };
        if self.downsample > 1 {
            avg_pool_downsample(&padded, self.downsample)
        } else {
            Ok(padded)
        }
    }

    /// The first `count(split)` records in file order, preprocessed.
    pub fn load(&self, split: Split) -> Result<Vec<LabeledImage>> {
        let want = self.count(split);
        let raw = match self.kind {
            DatasetKind::Cifar10 => {
                let mut out = Vec::new();
                for f in self.files(split) {
                    if out.len() >= want {
                        break;
                    }
                    out.extend(parse_cifar10(&read(&f)?)?);
                }
                out
            }
            _ => {
                let files = self.files(split);
                let images = parse_idx_images(&read(&files[0])?)?;
                let labels = parse_idx_labels(&read(&files[1])?)?;
                if images.len() != labels.len() {
                    return Err(Error::Dataset(format!(
                        "{} images but {} labels in {}",
                        images.len(),
                        labels.len(),
                        self.path.display()
                    )));
                }
                images
                    .into_iter()
                    .zip(labels)
                    .map(|(image, l)| {
                        if l as usize >= N_CLASSES {
                            return Err(Error::Dataset(format!("label {l} out of range")));
                        }
                        Ok(LabeledImage {
                            image,
                            label: l as usize,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if raw.len() < want {
            return Err(Error::Dataset(format!(
                "requested {want} records but {} holds {}",
                self.path.display(),
                raw.len()
            )));
        }
        raw.into_iter()
            .take(want)
            .map(|s| {
                Ok(LabeledImage {
                    image: self.preprocess(&s.image)?,
                    label: s.label,
                })
            })
            .collect()
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
