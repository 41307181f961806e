//! Frechet-distance evaluation between generated and real image sets.
//!
//! Features are raw flattened pixels, so the reported value is a pixel-space
//! proxy ("FID-proxy") with the same comparative structure as an
//! Inception-based FID, but never numerically comparable to one.

use nalgebra::{DMatrix, DVector};

use crate::data::Image;
use crate::error::{Error, Result};

/// Eigenvalues above this (negative) threshold are treated as roundoff and
/// clipped to zero.
const CLIP_EIGENVALUE: f64 = -1e-8;
/// Below this threshold the inputs are considered genuinely non-PSD.
const HARD_EIGENVALUE: f64 = -1e-6;
/// Ridge added to pixel covariances before the square root.
const COVARIANCE_RIDGE: f64 = 1e-6;

/// Sample mean and unbiased covariance of a feature cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

pub fn gaussian_stats(samples: &[Vec<f64>]) -> Result<GaussianStats> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let dim = samples[0].len();
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
    }
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(dim);
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean /= n;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in samples {
        let d = DVector::from_row_slice(s) - &mean;
        cov += &d * d.transpose();
    }
    cov /= n - 1.0;
    Ok(GaussianStats {
        mean,
        covariance: cov,
    })
}

/// Symmetric PSD square root via eigendecomposition, with roundoff-level
/// negative eigenvalues clipped to zero.
fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        if *v < HARD_EIGENVALUE {
            return Err(Error::NotPsd(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Frechet distance between two Gaussians:
/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
///
/// The cross term is computed as tr sqrt(A S_b A) with A = S_a^{1/2}, which
/// symmetrizes the product before the eigendecomposition.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: a.mean.len(),
            got: b.mean.len(),
        });
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_a = sqrt_psd(&a.covariance)?;
    let inner = &root_a * &b.covariance * &root_a;
    let sym = (&inner + inner.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut cross = 0.0;
    for &v in eig.eigenvalues.iter() {
        if v < HARD_EIGENVALUE {
            return Err(Error::NotPsd(v));
        }
        if v > CLIP_EIGENVALUE {
            cross += v.max(0.0).sqrt();
        }
    }
    let dist = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(dist.max(0.0))
}

fn pixel_stats(images: &[Image]) -> Result<GaussianStats> {
    let features: Vec<Vec<f64>> = images.iter().map(|im| im.pixels.clone()).collect();
    let mut stats = gaussian_stats(&features)?;
    let dim = stats.mean.len();
    for i in 0..dim {
        stats.covariance[(i, i)] += COVARIANCE_RIDGE;
    }
    Ok(stats)
}

/// Pixel-space Frechet distance between two image sets.
pub fn fid_proxy(generated: &[Image], real: &[Image]) -> Result<f64> {
    if generated.is_empty() || real.is_empty() {
        return Err(Error::TooFewSamples { needed: 2, got: 0 });
    }
    let shape = (real[0].height, real[0].width);
    for im in generated.iter().chain(real) {
        if (im.height, im.width) != shape {
            return Err(Error::DimensionMismatch {
                expected: shape.0 * shape.1,
                got: im.height * im.width,
            });
        }
    }
    frechet_distance(&pixel_stats(generated)?, &pixel_stats(real)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn stats_hand_arithmetic() {
        let s = gaussian_stats(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(s.mean.as_slice(), &[1.0, 0.0]);
        assert_eq!(s.covariance[(0, 0)], 2.0);
        assert_eq!(s.covariance[(0, 1)], 0.0);
        assert_eq!(s.covariance[(1, 1)], 0.0);
    }

    #[test]
    fn identical_samples_zero_covariance() {
        let s = gaussian_stats(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(s.covariance.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn stats_match_two_pass_estimator() {
        let mut rng = testutil::rng(1);
        let cloud: Vec<Vec<f64>> = (0..50)
            .map(|_| testutil::uniform_vec(&mut rng, 3, -2.0, 2.0))
            .collect();
        let s = gaussian_stats(&cloud).unwrap();
        // independent two-pass estimator
        let n = cloud.len() as f64;
        for j in 0..3 {
            let mean: f64 = cloud.iter().map(|v| v[j]).sum::<f64>() / n;
            assert!((s.mean[j] - mean).abs() < 1e-12);
            for k in 0..3 {
                let meank: f64 = cloud.iter().map(|v| v[k]).sum::<f64>() / n;
                let cov: f64 = cloud
                    .iter()
                    .map(|v| (v[j] - mean) * (v[k] - meank))
                    .sum::<f64>()
                    / (n - 1.0);
                assert!((s.covariance[(j, k)] - cov).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stats_reject_single_sample() {
        assert!(gaussian_stats(&[vec![1.0]]).is_err());
    }

    #[test]
    fn frechet_zero_for_equal_stats() {
        let mut rng = testutil::rng(2);
        let cloud: Vec<Vec<f64>> = (0..40)
            .map(|_| testutil::uniform_vec(&mut rng, 4, -1.0, 1.0))
            .collect();
        let s = gaussian_stats(&cloud).unwrap();
        let d = frechet_distance(&s, &s).unwrap();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn frechet_identity_covariances_reduce_to_mean_distance() {
        let dim = 3;
        let eye = DMatrix::identity(dim, dim);
        let a = GaussianStats {
            mean: DVector::zeros(dim),
            covariance: eye.clone(),
        };
        let mu = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let want = mu.norm_squared();
        let b = GaussianStats {
            mean: mu,
            covariance: eye,
        };
        let d = frechet_distance(&a, &b).unwrap();
        assert!((d - want).abs() < 1e-9);
    }

    #[test]
    fn frechet_scalar_closed_form() {
        // (mu, var) = (0, 1) vs (1, 4): (0-1)^2 + (1 + 4 - 2*2) = 2
        let a = GaussianStats {
            mean: DVector::from_vec(vec![0.0]),
            covariance: DMatrix::from_vec(1, 1, vec![1.0]),
        };
        let b = GaussianStats {
            mean: DVector::from_vec(vec![1.0]),
            covariance: DMatrix::from_vec(1, 1, vec![4.0]),
        };
        let d = frechet_distance(&a, &b).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn frechet_is_symmetric_and_bounded_below_by_mean_term() {
        let mut rng = testutil::rng(3);
        let ca: Vec<Vec<f64>> = (0..30)
            .map(|_| testutil::uniform_vec(&mut rng, 4, -1.0, 1.0))
            .collect();
        let cb: Vec<Vec<f64>> = (0..30)
            .map(|_| testutil::uniform_vec(&mut rng, 4, 0.0, 3.0))
            .collect();
        let a = gaussian_stats(&ca).unwrap();
        let b = gaussian_stats(&cb).unwrap();
        let dab = frechet_distance(&a, &b).unwrap();
        let dba = frechet_distance(&b, &a).unwrap();
        assert!((dab - dba).abs() < 1e-9);
        let mean_term = (&a.mean - &b.mean).norm_squared();
        assert!(dab >= mean_term - 1e-9);
    }

    #[test]
    fn fid_proxy_same_set_is_zero() {
        let mut rng = testutil::rng(4);
        let ds = crate::data::synthetic_digits(32, &mut rng);
        let small: Vec<Image> = ds
            .images
            .iter()
            .map(|im| crate::data::downscale(im, 8).unwrap())
            .collect();
        let d = fid_proxy(&small, &small).unwrap();
        assert!(d.abs() < 1e-6, "self distance {d}");
    }

    #[test]
    fn fid_proxy_orders_noise_above_holdout() {
        let mut rng = testutil::rng(5);
        let ds = crate::data::synthetic_digits(256, &mut rng);
        let small: Vec<Image> = ds
            .images
            .iter()
            .map(|im| crate::data::downscale(im, 8).unwrap())
            .collect();
        let (half_a, half_b) = small.split_at(128);
        let floor = fid_proxy(half_a, half_b).unwrap();
        let noise: Vec<Image> = (0..128)
            .map(|_| Image {
                height: 8,
                width: 8,
                pixels: testutil::uniform_vec(&mut rng, 64, 0.0, 1.0),
            })
            .collect();
        let noisy = fid_proxy(&noise, half_b).unwrap();
        assert!(
            noisy > floor,
            "noise {noisy} should exceed holdout floor {floor}"
        );
        assert!(noisy > 0.0);
    }
}
