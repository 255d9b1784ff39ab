//! Plain-text and raw exports: CSV tables with `%.17g` numbers, trajectory
//! snapshots, spike trains and delay matrices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dde::Trajectory;
use crate::lattice::{DelayMap, LatticeError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{what}: line {line}: {reason}")]
    Parse { what: String, line: usize, reason: String },
    #[error("{what}: expected {rows}x{cols} matrix, got {got_rows} rows with {got_cols} columns")]
    Shape { what: String, rows: usize, cols: usize, got_rows: usize, got_cols: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("raw frame data has {got} bytes, expected a multiple of {frame}")]
    RawLength { got: usize, frame: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// C `printf("%.17g")`: 17 significant digits, trailing zeros removed,
/// exponent form outside `1e-4 <= |x| < 1e17`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV table built row by row; numbers always go through [`fmt_g17`].
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    text: String,
    columns: usize,
}

/// One CSV cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell<'a> {
    Num(f64),
    Int(i64),
    Str(&'a str),
}

impl From<f64> for Cell<'_> {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell<'_> {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell<'_> {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(x: &'a str) -> Self {
        Cell::Str(x)
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.columns, "row width must match header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(x) => self.text.push_str(&fmt_g17(*x)),
                Cell::Int(n) => {
                    let _ = write!(self.text, "{n}");
                }
                Cell::Str(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Rows `t,m,n,x0,x1,...` for every recorded frame and node.
pub fn snapshot_csv(traj: &Trajectory) -> String {
    let mut header = vec!["t".to_string(), "m".into(), "n".into()];
    header.extend((0..traj.dim).map(|k| format!("x{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(&header);
    for (f, &t) in traj.times.iter().enumerate() {
        for node in 0..traj.nodes() {
            let mut cells = vec![Cell::Num(t), Cell::from(node / traj.cols), Cell::from(node % traj.cols)];
            cells.extend(traj.node_state(f, node).iter().map(|&x| Cell::Num(x)));
            table.row(&cells);
        }
    }
    table.into_string()
}

/// Header stored next to a raw frame file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    #[serde(rename = "M")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub cols: usize,
    pub d: usize,
    pub dt: f64,
    pub record_every: usize,
    pub t0: f64,
}

/// Little-endian `f64` frames `[frame][node][component]` and their JSON header.
pub fn raw_frames(traj: &Trajectory) -> (Vec<u8>, String) {
    let mut bytes = Vec::with_capacity(traj.states.len() * 8);
    for x in &traj.states {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let header = RawHeader {
        rows: traj.rows,
        cols: traj.cols,
        d: traj.dim,
        dt: traj.dt,
        record_every: traj.record_every,
        t0: traj.times.first().copied().unwrap_or(0.0),
    };
    (bytes, serde_json::to_string_pretty(&header).expect("header serializes"))
}

pub fn read_raw_frames(bytes: &[u8], header: &str) -> Result<(RawHeader, Vec<f64>), IoError> {
    let header: RawHeader = serde_json::from_str(header)?;
    let frame = header.rows * header.cols * header.d * 8;
    if frame == 0 || bytes.len() % frame != 0 {
        return Err(IoError::RawLength { got: bytes.len(), frame });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

/// Rows `m,n,t` ordered by node, then time.
pub fn spikes_csv(spikes: &[Vec<f64>], cols: usize) -> String {
    let mut table = CsvTable::new(&["m", "n", "t"]);
    for (node, times) in spikes.iter().enumerate() {
        for &t in times {
            table.row(&[Cell::from(node / cols), Cell::from(node % cols), Cell::Num(t)]);
        }
    }
    table.into_string()
}

/// Inverse of [`spikes_csv`] on an `rows x cols` lattice.
pub fn parse_spikes_csv(text: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>, IoError> {
    let mut out = vec![Vec::new(); rows * cols];
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| IoError::Parse { what: "spikes".into(), line: i + 1, reason };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", f.len())));
        }
        let m: usize = f[0].parse().map_err(|e| err(format!("{e}")))?;
        let n: usize = f[1].parse().map_err(|e| err(format!("{e}")))?;
        let t: f64 = f[2].parse().map_err(|e| err(format!("{e}")))?;
        if m >= rows || n >= cols {
            return Err(err(format!("node ({m}, {n}) outside {rows}x{cols} lattice")));
        }
        out[m * cols + n].push(t);
    }
    Ok(out)
}

/// Row-major matrix, one lattice row per line, no header.
pub fn matrix_csv(values: &[f64], cols: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|&x| fmt_g17(x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Parse a numeric matrix; `shape` enforces `(rows, cols)` when given.
pub fn parse_matrix_csv(text: &str, what: &str, shape: Option<(usize, usize)>) -> Result<(usize, usize, Vec<f64>), IoError> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::Parse { what: what.into(), line: i + 1, reason: e.to_string() })?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(IoError::Parse {
                    what: what.into(),
                    line: i + 1,
                    reason: format!("expected {c} columns, got {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if let Some((r, c)) = shape {
        if (r, c) != (rows, cols) {
            return Err(IoError::Shape { what: what.into(), rows: r, cols: c, got_rows: rows, got_cols: cols });
        }
    }
    Ok((rows, cols, values))
}

/// `(down, right)` matrices of a delay map.
pub fn delay_map_csv(delays: &DelayMap) -> (String, String) {
    (matrix_csv(delays.down_slice(), delays.cols()), matrix_csv(delays.right_slice(), delays.cols()))
}

pub fn parse_delay_map(down: &str, right: &str, shape: Option<(usize, usize)>) -> Result<DelayMap, IoError> {
    let (rows, cols, d) = parse_matrix_csv(down, "down delays", shape)?;
    let (_, _, r) = parse_matrix_csv(right, "right delays", Some((rows, cols)))?;
    Ok(DelayMap::new(rows, cols, d, r)?)
}
