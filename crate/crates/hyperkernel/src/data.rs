//! Image datasets for pixel-regression tasks: IDX file I/O, a synthetic
//! rectangle corpus for offline runs, and construction of (x, z, y)
//! samples where x is a flattened image, z a pixel coordinate (optionally
//! lifted to random Fourier features), and y the pixel intensity.

use crate::kernels::fourier_feature_rows;
use crate::linalg::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },
    #[error("file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("invalid task config: {reason}")]
    InvalidTask { reason: String },
}

const IDX3_MAGIC: u32 = 0x0000_0803;
const IDX1_MAGIC: u32 = 0x0000_0801;

/// A set of equally sized grayscale images stored as raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major pixel bytes, image-major: `count * height * width` entries.
    pub pixels: Vec<u8>,
}

impl ImageSet {
    pub fn pixel(&self, image: usize, row: usize, col: usize) -> u8 {
        self.pixels[(image * self.height + row) * self.width + col]
    }

    /// A new set holding images `start..start + count`.
    pub fn subset(&self, start: usize, count: usize) -> ImageSet {
        assert!(start + count <= self.count);
        let n = self.height * self.width;
        ImageSet {
            count,
            height: self.height,
            width: self.width,
            pixels: self.pixels[start * n..(start + count) * n].to_vec(),
        }
    }

    /// One image flattened row-major and scaled to [0, 1].
    pub fn normalized(&self, image: usize) -> Vec<f64> {
        let n = self.height * self.width;
        self.pixels[image * n..(image + 1) * n]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect()
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(DataError::Truncated {
            needed: end,
            found: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Reads an IDX3 (big-endian, unsigned byte) image file.
pub fn load_idx(path: &Path) -> Result<ImageSet, DataError> {
    let bytes = fs::read(path)?;
    let magic = read_u32(&bytes, 0)?;
    if magic != IDX3_MAGIC {
        return Err(DataError::BadMagic {
            found: magic,
            expected: IDX3_MAGIC,
        });
    }
    let count = read_u32(&bytes, 4)? as usize;
    let height = read_u32(&bytes, 8)? as usize;
    let width = read_u32(&bytes, 12)? as usize;
    let needed = 16 + count * height * width;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    Ok(ImageSet {
        count,
        height,
        width,
        pixels: bytes[16..needed].to_vec(),
    })
}

/// Writes an IDX3 image file.
pub fn write_idx(images: &ImageSet, path: &Path) -> Result<(), DataError> {
    let mut bytes = Vec::with_capacity(16 + images.pixels.len());
    bytes.extend_from_slice(&IDX3_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.count as u32).to_be_bytes());
    bytes.extend_from_slice(&(images.height as u32).to_be_bytes());
    bytes.extend_from_slice(&(images.width as u32).to_be_bytes());
    bytes.extend_from_slice(&images.pixels);
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads an IDX1 (big-endian, unsigned byte) label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>, DataError> {
    let bytes = fs::read(path)?;
    let magic = read_u32(&bytes, 0)?;
    if magic != IDX1_MAGIC {
        return Err(DataError::BadMagic {
            found: magic,
            expected: IDX1_MAGIC,
        });
    }
    let count = read_u32(&bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Writes an IDX1 label file.
pub fn write_idx_labels(labels: &[u8], path: &Path) -> Result<(), DataError> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&IDX1_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes)?;
    Ok(())
}

/// Generates images of a single bright axis-aligned rectangle on a dark
/// noisy background. Every image contains at least one pixel >= 200 and
/// one pixel <= 55, so pixel regression is nondegenerate.
pub fn synthetic_images(count: usize, size: usize, seed: u64) -> ImageSet {
    assert!(size >= 4);
    let mut rng = stream_rng(seed, 0);
    let mut pixels = Vec::with_capacity(count * size * size);
    for _ in 0..count {
        let dark = rng.gen_range(0u8..=40);
        let bright = rng.gen_range(200u8..=255);
        let h = rng.gen_range(size / 4..=size / 2);
        let w = rng.gen_range(size / 4..=size / 2);
        let r0 = rng.gen_range(0..=size - h);
        let c0 = rng.gen_range(0..=size - w);
        for r in 0..size {
            for c in 0..size {
                let inside = r >= r0 && r < r0 + h && c >= c0 && c < c0 + w;
                let base = if inside { bright } else { dark };
                // Small per-pixel jitter that cannot cross the band limits.
                let jitter = rng.gen_range(0i16..=15);
                let value = if inside {
                    (base as i16 - jitter).max(200) as u8
                } else {
                    (base as i16 + jitter).min(55) as u8
                };
                pixels.push(value);
            }
        }
    }
    ImageSet {
        count,
        height: size,
        width: size,
        pixels,
    }
}

/// What the meta network sees as its input image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskMode {
    /// Full image as meta input.
    Representation,
    /// Right half of the image zeroed in the meta input; targets still come
    /// from the unmasked image.
    Inpainting,
}

/// One (image, coordinate) -> intensity sample.
#[derive(Debug, Clone)]
pub struct TaskSample {
    /// Index into `PixelTask::xs`.
    pub image: usize,
    pub row: usize,
    pub col: usize,
    /// Primary input: normalized coordinate, optionally Fourier-lifted.
    pub z: Vec<f64>,
    /// Target intensity in [0, 1] from the unmasked image.
    pub y: f64,
}

/// A pixel-regression task: meta inputs per selected image plus samples.
#[derive(Debug, Clone)]
pub struct PixelTask {
    /// Meta inputs (flattened, normalized, possibly masked), one per image.
    pub xs: Vec<Vec<f64>>,
    /// Indices of the selected images in the source `ImageSet`.
    pub image_ids: Vec<usize>,
    pub samples: Vec<TaskSample>,
    pub mode: TaskMode,
    /// Primary input dimension (2, or k when Fourier features are on).
    pub m0: usize,
}

/// Optional random Fourier lift of the coordinate input.
#[derive(Debug, Clone, Copy)]
pub struct FourierSpec {
    pub k: usize,
    /// Coordinates in [0, 1]^2 are multiplied by this before the lift.
    pub scale: f64,
    pub seed: u64,
}

pub const DEFAULT_FOURIER_SCALE: f64 = 4.0;

fn coord_z(row: usize, col: usize, height: usize, width: usize) -> Vec<f64> {
    vec![
        col as f64 / (width - 1).max(1) as f64,
        row as f64 / (height - 1).max(1) as f64,
    ]
}

fn mask_right_half(x: &mut [f64], height: usize, width: usize) {
    for r in 0..height {
        for c in width / 2..width {
            x[r * width + c] = 0.0;
        }
    }
}

/// Builds a task of `n_samples` pixel targets drawn from
/// `n_samples / pixels_per_image` distinct images (rounded up). All
/// samples of a task built with the same Fourier spec share one feature
/// map, so z vectors are comparable across samples.
pub fn build_task(
    images: &ImageSet,
    n_samples: usize,
    pixels_per_image: usize,
    mode: TaskMode,
    fourier: Option<FourierSpec>,
    seed: u64,
) -> Result<PixelTask, DataError> {
    if n_samples == 0 || pixels_per_image == 0 {
        return Err(DataError::InvalidTask {
            reason: "n_samples and pixels_per_image must be positive".into(),
        });
    }
    let n_images = n_samples.div_ceil(pixels_per_image);
    if n_images > images.count {
        return Err(DataError::InvalidTask {
            reason: format!(
                "need {} images for {} samples at {} pixels per image, have {}",
                n_images, n_samples, pixels_per_image, images.count
            ),
        });
    }
    let pixels_per = images.height * images.width;
    if pixels_per_image > pixels_per {
        return Err(DataError::InvalidTask {
            reason: format!(
                "pixels_per_image {} exceeds image size {}",
                pixels_per_image, pixels_per
            ),
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut all_ids: Vec<usize> = (0..images.count).collect();
    all_ids.shuffle(&mut rng);
    let image_ids: Vec<usize> = all_ids[..n_images].to_vec();

    let mut xs = Vec::with_capacity(n_images);
    for &id in &image_ids {
        let mut x = images.normalized(id);
        if mode == TaskMode::Inpainting {
            mask_right_half(&mut x, images.height, images.width);
        }
        xs.push(x);
    }

    let mut samples = Vec::with_capacity(n_samples);
    let mut coords: Vec<(usize, usize)> = (0..images.height)
        .flat_map(|r| (0..images.width).map(move |c| (r, c)))
        .collect();
    'outer: for (slot, &id) in image_ids.iter().enumerate() {
        coords.shuffle(&mut rng);
        for &(r, c) in coords.iter().take(pixels_per_image) {
            samples.push(TaskSample {
                image: slot,
                row: r,
                col: c,
                z: coord_z(r, c, images.height, images.width),
                y: images.pixel(id, r, c) as f64 / 255.0,
            });
            if samples.len() == n_samples {
                break 'outer;
            }
        }
    }

    let m0 = if let Some(spec) = fourier {
        let raw: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| s.z.iter().map(|v| v * spec.scale).collect())
            .collect();
        let lifted = fourier_feature_rows(&raw, spec.k, spec.seed);
        for (i, s) in samples.iter_mut().enumerate() {
            s.z = lifted.row(i).to_vec();
        }
        spec.k
    } else {
        2
    };

    Ok(PixelTask {
        xs,
        image_ids,
        samples,
        mode,
        m0,
    })
}

/// Exports task samples as `image_id,row,col,label` rows (image ids refer
/// to the source image set).
pub fn write_task_csv(task: &PixelTask, path: &Path) -> Result<(), DataError> {
    let mut out = String::from("image_id,row,col,label\n");
    for s in &task.samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            task.image_ids[s.image], s.row, s.col, s.y
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads rows written by `write_task_csv` back as (image_id, row, col,
/// label) tuples.
pub fn read_task_csv(path: &Path) -> Result<Vec<(usize, usize, usize, f64)>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse_err = || DataError::InvalidTask {
            reason: format!("bad task csv line {}: {:?}", i + 1, line),
        };
        if fields.len() != 4 {
            return Err(parse_err());
        }
        out.push((
            fields[0].parse().map_err(|_| parse_err())?,
            fields[1].parse().map_err(|_| parse_err())?,
            fields[2].parse().map_err(|_| parse_err())?,
            fields[3].parse().map_err(|_| parse_err())?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_path(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("hyperkernel-data-{}-{}", std::process::id(), name))
    }

    #[test]
    fn idx_round_trip() {
        let images = synthetic_images(5, 8, 42);
        let path = tmp_path("rt.idx3");
        write_idx(&images, &path).unwrap();
        let back = load_idx(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(images, back);
    }

    #[test]
    fn idx_labels_round_trip() {
        let labels = vec![0u8, 3, 9, 255, 7];
        let path = tmp_path("rt.idx1");
        write_idx_labels(&labels, &path).unwrap();
        let back = load_idx_labels(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(labels, back);
    }

    #[test]
    fn idx_rejects_bad_magic() {
        let path = tmp_path("bad.idx3");
        std::fs::write(&path, [0u8, 0, 8, 1, 0, 0, 0, 0]).unwrap();
        let err = load_idx(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(matches!(err, DataError::BadMagic { .. }));
    }

    #[test]
    fn idx_rejects_truncated() {
        let images = synthetic_images(3, 8, 1);
        let path = tmp_path("trunc.idx3");
        write_idx(&images, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        let err = load_idx(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(matches!(err, DataError::Truncated { .. }));
    }

    #[test]
    fn synthetic_images_have_contrast_and_calibrated_mean() {
        let images = synthetic_images(40, 12, 7);
        for i in 0..images.count {
            let slice = &images.pixels[i * 144..(i + 1) * 144];
            assert!(slice.iter().any(|&p| p >= 200));
            assert!(slice.iter().any(|&p| p <= 55));
            let mean = slice.iter().map(|&p| p as f64).sum::<f64>() / 144.0;
            assert!(
                (20.0..=160.0).contains(&mean),
                "image {} mean {} out of band",
                i,
                mean
            );
        }
    }

    #[test]
    fn synthetic_images_deterministic() {
        assert_eq!(synthetic_images(3, 8, 5), synthetic_images(3, 8, 5));
        assert_ne!(synthetic_images(3, 8, 5), synthetic_images(3, 8, 6));
    }

    #[test]
    fn task_samples_consistent_with_images() {
        let images = synthetic_images(30, 10, 3);
        let task = build_task(&images, 50, 5, TaskMode::Representation, None, 9).unwrap();
        assert_eq!(task.samples.len(), 50);
        assert_eq!(task.xs.len(), 10);
        assert_eq!(task.m0, 2);
        for s in &task.samples {
            let id = task.image_ids[s.image];
            let expected = images.pixel(id, s.row, s.col) as f64 / 255.0;
            assert_eq!(s.y, expected);
            assert_eq!(s.z[0], s.col as f64 / 9.0);
            assert_eq!(s.z[1], s.row as f64 / 9.0);
            assert_eq!(
                task.xs[s.image][s.row * 10 + s.col],
                expected,
                "representation mode meta input must expose the pixel"
            );
        }
        // Pixels within one image are distinct.
        for slot in 0..task.xs.len() {
            let mut seen: Vec<(usize, usize)> = task
                .samples
                .iter()
                .filter(|s| s.image == slot)
                .map(|s| (s.row, s.col))
                .collect();
            let n = seen.len();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), n);
        }
    }

    #[test]
    fn inpainting_masks_meta_input_only() {
        let images = synthetic_images(10, 8, 4);
        let task = build_task(&images, 16, 4, TaskMode::Inpainting, None, 11).unwrap();
        for (slot, x) in task.xs.iter().enumerate() {
            let id = task.image_ids[slot];
            for r in 0..8 {
                for c in 0..8 {
                    if c >= 4 {
                        assert_eq!(x[r * 8 + c], 0.0);
                    } else {
                        assert_eq!(x[r * 8 + c], images.pixel(id, r, c) as f64 / 255.0);
                    }
                }
            }
        }
        // Targets still come from the unmasked image.
        assert!(task
            .samples
            .iter()
            .any(|s| s.col >= 4 && s.y > 200.0 / 255.0));
    }

    #[test]
    fn fourier_lift_applies_shared_map() {
        let images = synthetic_images(10, 8, 4);
        let spec = FourierSpec {
            k: 16,
            scale: DEFAULT_FOURIER_SCALE,
            seed: 77,
        };
        let task = build_task(&images, 12, 4, TaskMode::Representation, Some(spec), 13).unwrap();
        assert_eq!(task.m0, 16);
        for s in &task.samples {
            assert_eq!(s.z.len(), 16);
            let raw = vec![
                s.col as f64 / 7.0 * spec.scale,
                s.row as f64 / 7.0 * spec.scale,
            ];
            let direct = fourier_feature_rows(&[raw], spec.k, spec.seed);
            assert_eq!(s.z.as_slice(), direct.row(0));
        }
    }

    #[test]
    fn task_csv_round_trip() {
        let images = synthetic_images(10, 8, 21);
        let task = build_task(&images, 12, 4, TaskMode::Representation, None, 22).unwrap();
        let path = tmp_path("task.csv");
        write_task_csv(&task, &path).unwrap();
        let rows = read_task_csv(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(rows.len(), task.samples.len());
        for (row, s) in rows.iter().zip(&task.samples) {
            assert_eq!(row.0, task.image_ids[s.image]);
            assert_eq!((row.1, row.2), (s.row, s.col));
            assert_eq!(row.3, s.y);
        }
    }

    #[test]
    fn task_config_errors() {
        let images = synthetic_images(4, 8, 2);
        assert!(matches!(
            build_task(&images, 100, 5, TaskMode::Representation, None, 1),
            Err(DataError::InvalidTask { .. })
        ));
        assert!(matches!(
            build_task(&images, 0, 5, TaskMode::Representation, None, 1),
            Err(DataError::InvalidTask { .. })
        ));
        assert!(matches!(
            build_task(&images, 4, 100, TaskMode::Representation, None, 1),
            Err(DataError::InvalidTask { .. })
        ));
    }
}
