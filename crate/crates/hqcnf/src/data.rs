//! MNIST-style IDX ingestion, digit filtering, downscaling, and conversion
//! between images and flow samples.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{SampleVector, Splits};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale image with pixels in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

/// Labeled image collection.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub images: Vec<Image>,
    pub labels: Vec<u8>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                needed: self.pos + n - self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decodes the big-endian IDX image and label streams into a dataset with
/// pixels scaled to [0, 1].
pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<ImageDataset> {
    let mut ir = Reader {
        bytes: image_bytes,
        pos: 0,
    };
    let magic = ir.u32_be()?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::BadMagic {
            got: magic,
            expected: IDX_IMAGE_MAGIC,
        });
    }
    let count = ir.u32_be()? as usize;
    let height = ir.u32_be()? as usize;
    let width = ir.u32_be()? as usize;
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = ir.take(height * width)?;
        let pixels = raw.iter().map(|&b| b as f64 / 255.0).collect();
        images.push(Image {
            height,
            width,
            pixels,
        });
    }

    let mut lr = Reader {
        bytes: label_bytes,
        pos: 0,
    };
    let magic = lr.u32_be()?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::BadMagic {
            got: magic,
            expected: IDX_LABEL_MAGIC,
        });
    }
    let label_count = lr.u32_be()? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let labels = lr.take(label_count)?.to_vec();
    Ok(ImageDataset { images, labels })
}

/// Encodes a dataset back to IDX byte streams. Pixel values are rounded to
/// the nearest u8 step. Test and tooling counterpart of [`parse_idx`].
pub fn write_idx(ds: &ImageDataset) -> (Vec<u8>, Vec<u8>) {
    let (h, w) = ds
        .images
        .first()
        .map(|im| (im.height, im.width))
        .unwrap_or((0, 0));
    let mut images = Vec::new();
    images.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
    images.extend_from_slice(&(ds.images.len() as u32).to_be_bytes());
    images.extend_from_slice(&(h as u32).to_be_bytes());
    images.extend_from_slice(&(w as u32).to_be_bytes());
    for im in &ds.images {
        for &p in &im.pixels {
            images.push((p.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    let mut labels = Vec::new();
    labels.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(ds.labels.len() as u32).to_be_bytes());
    labels.extend_from_slice(&ds.labels);
    (images, labels)
}

/// Keeps exactly the samples whose label is in `keep`, preserving order.
/// An empty result is a valid dataset, left to the caller to warn about.
pub fn filter_digits(ds: &ImageDataset, keep: &[u8]) -> ImageDataset {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (im, &lab) in ds.images.iter().zip(&ds.labels) {
        if keep.contains(&lab) {
            images.push(im.clone());
            labels.push(lab);
        }
    }
    ImageDataset { images, labels }
}

/// Center-crops to the largest square multiple of `target` and block-average
/// pools down to target x target. 28 -> crop 24 -> 8 uses 3x3 pooling.
pub fn downscale(image: &Image, target: usize) -> Result<Image> {
    let side = image.height.min(image.width);
    if target == 0 || target > side {
        return Err(Error::InvalidDownscale {
            target,
            h: image.height,
            w: image.width,
        });
    }
    let block = side / target;
    let crop = block * target;
    let row0 = (image.height - crop) / 2;
    let col0 = (image.width - crop) / 2;
    let mut pixels = Vec::with_capacity(target * target);
    for r in 0..target {
        for c in 0..target {
            let mut acc = 0.0;
            for dr in 0..block {
                for dc in 0..block {
                    acc += image.at(row0 + r * block + dr, col0 + c * block + dc);
                }
            }
            pixels.push(acc / (block * block) as f64);
        }
    }
    Ok(Image {
        height: target,
        width: target,
        pixels,
    })
}

/// Flattens row-major and splits per the model configuration; the quantum
/// segment gets zero imaginary parts. No dequantization noise.
pub fn to_sample(image: &Image, splits: Splits) -> Result<SampleVector> {
    if image.pixels.len() != splits.total {
        return Err(Error::DimensionMismatch {
            expected: splits.total,
            got: image.pixels.len(),
        });
    }
    Ok(SampleVector {
        classical: image.pixels[..splits.d2].to_vec(),
        quantum: image.pixels[splits.d2..]
            .iter()
            .map(|&p| Complex64::new(p, 0.0))
            .collect(),
    })
}

/// [`to_sample`] plus uniform U[0, 1/255) dequantization noise on every pixel
/// coordinate, the standard treatment for flows on discrete data.
pub fn to_sample_dequantized(
    image: &Image,
    splits: Splits,
    rng: &mut ChaCha8Rng,
) -> Result<SampleVector> {
    let mut s = to_sample(image, splits)?;
    for v in &mut s.classical {
        *v += rng.random_range(0.0..1.0 / 255.0);
    }
    for a in &mut s.quantum {
        a.re += rng.random_range(0.0..1.0 / 255.0);
    }
    Ok(s)
}

/// Real parts back to pixels, clamped to [0, 1], reshaped to side x side.
pub fn from_sample(sample: &SampleVector, side: usize) -> Result<Image> {
    let total = sample.classical.len() + sample.quantum.len();
    if side * side != total {
        return Err(Error::DimensionMismatch {
            expected: side * side,
            got: total,
        });
    }
    let mut pixels = Vec::with_capacity(total);
    pixels.extend(sample.classical.iter().map(|&v| v.clamp(0.0, 1.0)));
    pixels.extend(sample.quantum.iter().map(|a| a.re.clamp(0.0, 1.0)));
    Ok(Image {
        height: side,
        width: side,
        pixels,
    })
}

/// Procedurally drawn 28x28 zeros (elliptical rings) and ones (tilted bars)
/// with jittered geometry. Stand-in corpus for environments without the MNIST
/// files; written and read through the same IDX pipeline.
pub fn synthetic_digits(count: usize, rng: &mut ChaCha8Rng) -> ImageDataset {
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let label = (i % 2) as u8;
        let cx = 13.5 + rng.random_range(-1.5..1.5);
        let cy = 13.5 + rng.random_range(-1.5..1.5);
        let mut pixels = vec![0.0; 28 * 28];
        if label == 0 {
            let rx = rng.random_range(5.5..8.0);
            let ry = rng.random_range(7.0..9.5);
            let thickness = rng.random_range(1.6..2.6);
            for r in 0..28 {
                for c in 0..28 {
                    let dx = (c as f64 - cx) / rx;
                    let dy = (r as f64 - cy) / ry;
                    let rad = (dx * dx + dy * dy).sqrt();
                    // bright near the unit ellipse, fading with distance
                    let d = (rad - 1.0).abs() * rx.min(ry) / thickness;
                    let v = (1.0 - d).clamp(0.0, 1.0);
                    pixels[r * 28 + c] = v * rng.random_range(0.82..1.0);
                }
            }
        } else {
            let slope = rng.random_range(-0.18..0.18);
            let half_w = rng.random_range(0.9..1.7);
            let half_h = rng.random_range(8.0..10.5);
            for r in 0..28 {
                for c in 0..28 {
                    let dy = r as f64 - cy;
                    if dy.abs() > half_h {
                        continue;
                    }
                    let center_c = cx + slope * dy;
                    let d = (c as f64 - center_c).abs() / half_w;
                    let v = (1.5 - d).clamp(0.0, 1.0).min(1.0);
                    pixels[r * 28 + c] = v * rng.random_range(0.82..1.0);
                }
            }
        }
        images.push(Image {
            height: 28,
            width: 28,
            pixels,
        });
        labels.push(label);
    }
    ImageDataset { images, labels }
}
