//! Binary portable graymap ("P5", maxval 255).

use std::fs;
use std::path::Path;

use hstc::data::LabelMap;

pub const UNLABELED: u8 = 128;
pub const WRONG: u8 = 255;
pub const RIGHT: u8 = 0;

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write(path: &Path, width: usize, height: usize, pixels: &[u8]) -> std::io::Result<()> {
    fs::write(path, encode(width, height, pixels))
}

/// `round(k · 255 / C)` for the one-based class `k`.
pub fn class_gray(class: usize, num_classes: usize) -> u8 {
    ((class * 255) as f64 / num_classes as f64).round() as u8
}

/// Row-major class map and misclassification map from one-based predicted
/// classes of the labeled pixels (in `labels.labeled_pixels()` order).
pub fn render(labels: &LabelMap, predicted: &[usize], num_classes: usize) -> (Vec<u8>, Vec<u8>) {
    let (h, w) = (labels.height(), labels.width());
    let mut classes = vec![0u8; h * w];
    let mut errors = vec![UNLABELED; h * w];
    for (p, &k) in labels.labeled_pixels().zip(predicted) {
        let i = p.row * w + p.col;
        classes[i] = class_gray(k, num_classes);
        errors[i] = if k == p.class { RIGHT } else { WRONG };
    }
    (classes, errors)
}
