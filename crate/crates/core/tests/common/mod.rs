#![allow(dead_code)]

use std::path::PathBuf;

use vidlink_core::frame_prep::RgbFrame;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

/// Minimal binary PPM (P6, maxval 255) reader.
pub fn read_ppm(name: &str) -> RgbFrame {
    let bytes = std::fs::read(data_path(name)).expect("test image present");
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if bytes[i] == b'#' {
            while bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        fields.push(String::from_utf8(bytes[start..i].to_vec()).unwrap());
    }
    assert_eq!(fields[0], "P6");
    assert_eq!(fields[3], "255");
    let (w, h): (usize, usize) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
    RgbFrame::new(w, h, bytes[i + 1..i + 1 + w * h * 3].to_vec()).unwrap()
}

pub fn natural_image() -> RgbFrame {
    read_ppm("coffee_320x180.ppm")
}

pub fn second_image() -> RgbFrame {
    read_ppm("chelsea_320x180.ppm")
}

/// Orthonormal 2D DCT-II in double precision.
pub fn dct_oracle(samples: &[i16; 64]) -> [f64; 64] {
    let s = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
    let basis = |k: usize, n: usize| s(k) * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / 16.0).cos();
    std::array::from_fn(|i| {
        let (u, v) = (i / 8, i % 8);
        let mut acc = 0.0;
        for y in 0..8 {
            for x in 0..8 {
                acc += basis(u, y) * basis(v, x) * f64::from(samples[y * 8 + x]);
            }
        }
        acc
    })
}
