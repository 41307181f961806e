//! Binary PGM (P5) output, maxval 255, pixel = round(clamp(x, 0, 1) * 255).

use std::path::Path;

use crate::data::Image;
use crate::error::Result;

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .pixels
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    std::fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Tiles images into a grid with `columns` per row and 1-pixel separators.
pub fn contact_sheet(images: &[Image], columns: usize) -> Image {
    assert!(!images.is_empty() && columns > 0);
    let (h, w) = (images[0].height, images[0].width);
    let rows = images.len().div_ceil(columns);
    let sheet_h = rows * h + rows.saturating_sub(1);
    let sheet_w = columns * w + columns.saturating_sub(1);
    let mut sheet = Image::constant(sheet_h, sheet_w, 0.25);
    for (i, im) in images.iter().enumerate() {
        let (gr, gc) = (i / columns, i % columns);
        let (r0, c0) = (gr * (h + 1), gc * (w + 1));
        for r in 0..h {
            for c in 0..w {
                sheet.pixels[(r0 + r) * sheet_w + c0 + c] = im.at(r, c);
            }
        }
    }
    sheet
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_rounding() {
        let im = Image {
            height: 1,
            width: 3,
            pixels: vec![0.0, 0.5, 1.3],
        };
        let bytes = encode_pgm(&im);
        assert!(bytes.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
    }

    #[test]
    fn contact_sheet_geometry() {
        let images: Vec<Image> = (0..5)
            .map(|i| Image::constant(2, 2, i as f64 / 4.0))
            .collect();
        let sheet = contact_sheet(&images, 2);
        assert_eq!(sheet.width, 2 * 2 + 1);
        assert_eq!(sheet.height, 3 * 2 + 2);
        assert_eq!(sheet.at(0, 0), 0.0);
        assert_eq!(sheet.at(0, 3), 0.25);
        assert_eq!(sheet.at(3, 0), 0.5);
    }
}
