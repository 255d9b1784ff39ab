//! Componentwise time shifts.
//!
//! Shifting node `(m, n)` by `eta_{m,n}` maps solutions of the homogeneous
//! lattice onto solutions of a lattice with edge delays
//! `tau - eta_{m,n} + eta_{source}`: `v_{m,n}(t) = u_{m,n}(t + eta_{m,n})`.
//! Nodes with larger shift therefore run ahead.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dde::Trajectory;
use crate::lattice::{DelayMap, Edge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("shift field needs {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("shift at ({m}, {n}) is not finite")]
    NonFinite { m: usize, n: usize },
    #[error("delay must be positive, got {0}")]
    NonPositiveDelay(f64),
    #[error("shifts produce non-positive delays on {} edge(s): {}", .0.len(), describe(.0))]
    NegativeDelays(Vec<OffendingEdge>),
    #[error("image is {width}x{height} but the lattice needs {cols}x{rows}")]
    ImageSize { width: usize, height: usize, rows: usize, cols: usize },
    #[error("unsupported maximum gray value {0}; only 8-bit images with maxval 255 are read")]
    Depth(u32),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("shift range is reversed: {min} > {max}")]
    Range { min: f64, max: f64 },
    #[error("period must be positive, got {0}")]
    Period(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffendingEdge {
    pub edge: Edge,
    pub m: usize,
    pub n: usize,
    pub delay: f64,
}

fn describe(edges: &[OffendingEdge]) -> String {
    let shown: Vec<String> =
        edges.iter().take(8).map(|e| format!("{} ({}, {}) = {}", e.edge, e.m, e.n, e.delay)).collect();
    let more = if edges.len() > 8 { format!(", and {} more", edges.len() - 8) } else { String::new() };
    format!("{}{more}", shown.join(", "))
}

/// Time shift of every node, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftField {
    rows: usize,
    cols: usize,
    eta: Vec<f64>,
}

impl ShiftField {
    pub fn new(rows: usize, cols: usize, eta: Vec<f64>) -> Result<Self, PatternError> {
        if eta.len() != rows * cols {
            return Err(PatternError::Shape { expected: rows * cols, got: eta.len() });
        }
        if let Some(i) = eta.iter().position(|x| !x.is_finite()) {
            return Err(PatternError::NonFinite { m: i / cols, n: i % cols });
        }
        Ok(Self { rows, cols, eta })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, eta: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.eta[m * self.cols + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.eta
    }
}

/// Edge delays realising the shift field on top of a homogeneous delay `tau`.
pub fn delays_from_timeshifts(eta: &ShiftField, tau: f64) -> Result<DelayMap, PatternError> {
    if !(tau > 0.0) {
        return Err(PatternError::NonPositiveDelay(tau));
    }
    let (rows, cols) = (eta.rows, eta.cols);
    let mut down = Vec::with_capacity(rows * cols);
    let mut right = Vec::with_capacity(rows * cols);
    let mut bad = Vec::new();
    for m in 0..rows {
        for n in 0..cols {
            let here = eta.get(m, n);
            let d = tau - here + eta.get((m + rows - 1) % rows, n);
            let r = tau - here + eta.get(m, (n + cols - 1) % cols);
            for (edge, delay) in [(Edge::Down, d), (Edge::Right, r)] {
                if !(delay > 0.0) {
                    bad.push(OffendingEdge { edge, m, n, delay });
                }
            }
            down.push(d);
            right.push(r);
        }
    }
    if !bad.is_empty() {
        return Err(PatternError::NegativeDelays(bad));
    }
    Ok(DelayMap::new(rows, cols, down, right).expect("validated above"))
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Parse a binary (P5) or ASCII (P2) PGM file.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, PatternError> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| PatternError::Pgm("empty file".into()))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(PatternError::Pgm(format!("unknown magic {other:?}"))),
    };
    let mut header = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| PatternError::Pgm(format!("missing {name}")))?;
        header[i] = tok.parse().map_err(|_| PatternError::Pgm(format!("bad {name} {tok:?}")))?;
    }
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(PatternError::Depth(maxval as u32));
    }
    let count = width * height;
    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let data = bytes.get(pos..pos + count).ok_or_else(|| {
            PatternError::Pgm(format!("raster has {} bytes, expected {count}", bytes.len().saturating_sub(pos)))
        })?;
        data.to_vec()
    } else {
        let mut px = Vec::with_capacity(count);
        for i in 0..count {
            let tok = next_token(bytes, &mut pos)
                .ok_or_else(|| PatternError::Pgm(format!("raster ends after {i} of {count} values")))?;
            let v: u32 = tok.parse().map_err(|_| PatternError::Pgm(format!("bad gray value {tok:?}")))?;
            if v > 255 {
                return Err(PatternError::Pgm(format!("gray value {v} exceeds maxval")));
            }
            px.push(v as u8);
        }
        px
    };
    Ok(GrayImage { width, height, pixels })
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Binary PGM encoding of an image.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// `eta = eta_min + (g / 255)(eta_max - eta_min)`; image row `m` is lattice row `m`.
pub fn eta_from_image(
    img: &GrayImage,
    rows: usize,
    cols: usize,
    eta_min: f64,
    eta_max: f64,
) -> Result<ShiftField, PatternError> {
    if img.width != cols || img.height != rows {
        return Err(PatternError::ImageSize { width: img.width, height: img.height, rows, cols });
    }
    if eta_min > eta_max {
        return Err(PatternError::Range { min: eta_min, max: eta_max });
    }
    let eta = img.pixels.iter().map(|&g| eta_min + g as f64 / 255.0 * (eta_max - eta_min)).collect();
    ShiftField::new(rows, cols, eta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Circular correlation of measured against encoded offsets; absent when
    /// either set has no spread.
    pub correlation: Option<f64>,
    /// Largest circular distance between measured and encoded offset.
    pub max_dev: f64,
    pub missing_nodes: Vec<(usize, usize)>,
    /// Measured offsets `(t_ref - t_node) mod T`, row-major; NaN for missing nodes.
    pub offsets: Vec<f64>,
}

fn wrap(x: f64, period: f64) -> f64 {
    x.rem_euclid(period)
}

fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = wrap(a - b, period);
    d.min(period - d)
}

fn circular_mean(angles: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for a in angles {
        s += a.sin();
        c += a.cos();
    }
    s.atan2(c)
}

/// Circular correlation coefficient of paired angles (radians).
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let ma = circular_mean(a.iter().copied());
    let mb = circular_mean(b.iter().copied());
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (sa, sb) = ((x - ma).sin(), (y - mb).sin());
        num += sa * sb;
        da += sa * sa;
        db += sb * sb;
    }
    let den = (da * db).sqrt();
    (den > 1e-300 && den.is_finite()).then(|| num / den)
}

/// Compare per-node event times with the encoded shifts. Node `(0, 0)` is the reference.
pub fn verify_offsets(
    events: &[Vec<f64>],
    eta: &ShiftField,
    period: f64,
    t_discard: f64,
) -> Result<FidelityReport, PatternError> {
    if !(period > 0.0) {
        return Err(PatternError::Period(period));
    }
    let nodes = eta.rows * eta.cols;
    if events.len() != nodes {
        return Err(PatternError::Shape { expected: nodes, got: events.len() });
    }
    let kept: Vec<Vec<f64>> =
        events.iter().map(|e| e.iter().copied().filter(|&t| t >= t_discard).collect()).collect();
    let reference = &kept[0];
    let mut offsets = vec![f64::NAN; nodes];
    let mut missing = Vec::new();
    for node in 0..nodes {
        if kept[node].is_empty() || reference.is_empty() {
            missing.push((node / eta.cols, node % eta.cols));
            continue;
        }
        // circular mean of the lead over every event of the node
        let angles = kept[node].iter().map(|&t| {
            let nearest = reference
                .iter()
                .copied()
                .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
                .unwrap();
            TAU * wrap(nearest - t, period) / period
        });
        offsets[node] = wrap(circular_mean(angles) / TAU * period, period);
    }
    let eta_ref = eta.eta[0];
    let mut measured = Vec::new();
    let mut expected = Vec::new();
    let mut max_dev: f64 = 0.0;
    for node in 0..nodes {
        if offsets[node].is_nan() {
            continue;
        }
        let want = wrap(eta.eta[node] - eta_ref, period);
        max_dev = max_dev.max(circular_distance(offsets[node], want, period));
        measured.push(TAU * offsets[node] / period);
        expected.push(TAU * want / period);
    }
    Ok(FidelityReport {
        correlation: circular_correlation(&measured, &expected),
        max_dev,
        missing_nodes: missing,
        offsets,
    })
}

/// [`verify_offsets`] on the trajectory's events, detected on component 0
/// at threshold 0 when the run did not collect them.
pub fn verify_pattern(
    traj: &Trajectory,
    eta: &ShiftField,
    period: f64,
    t_discard: f64,
) -> Result<FidelityReport, PatternError> {
    let detected;
    let events = match &traj.spikes {
        Some(s) => s,
        None => {
            detected = crate::dde::detect_spikes(traj, 0, 0.0);
            &detected
        }
    };
    verify_offsets(events, eta, period, t_discard)
}
