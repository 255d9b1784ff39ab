//! Fixed-step integration of the delay-coupled lattice.
//!
//! Classical RK4; delayed neighbour values at the stage times come from
//! cubic Hermite interpolation of a per-node ring buffer holding the coupled
//! components and their derivatives at every step.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fhn::{gate_rate, GATE_DECAY};
use crate::lattice::{DelayMap, FhnParams, LatticeSpec, ModelParams};
use crate::sl::PlaneWave;

/// Minimum spacing between two detected events of one node.
pub const REFRACTORY: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("time step {dt} exceeds a quarter of the smallest delay {min_delay}")]
    StepTooLarge { dt: f64, min_delay: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("end time must be positive, got {0}")]
    InvalidEnd(f64),
    #[error("delay map is {got_rows}x{got_cols} but the lattice is {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, got_rows: usize, got_cols: usize },
    #[error("initial history has {got} values, expected {expected}")]
    InitShape { expected: usize, got: usize },
    #[error("plane-wave history requires the Stuart-Landau model")]
    InitModel,
    #[error("history lookup at offset {offset} steps is outside the buffer of {depth}")]
    LookupOutOfRange { offset: i64, depth: usize },
    #[error("state became non-finite at t = {t} in node ({m}, {n})")]
    NonFinite { t: f64, m: usize, n: usize },
    #[error("replayed series does not cover t = {t}")]
    ReplayRange { t: f64 },
    #[error("only {found} events after t = {t_discard}; at least 3 are needed")]
    InsufficientEvents { found: usize, t_discard: f64 },
    #[error("trajectory was recorded without derivatives")]
    NoDerivatives,
}

/// Right-hand side of one node.
#[derive(Debug, Clone, Copy)]
enum Rhs {
    Sl { alpha: f64, beta: f64, half_c: f64 },
    Fhn { p: FhnParams, half_c: f64 },
}

impl Rhs {
    fn new(spec: &LatticeSpec) -> Self {
        let half_c = 0.5 * spec.coupling();
        match spec.params {
            ModelParams::StuartLandau(p) => Rhs::Sl { alpha: p.alpha, beta: p.beta, half_c },
            ModelParams::FitzHughNagumo(p) => Rhs::Fhn { p, half_c },
        }
    }

    /// Components seen by the neighbours through the delayed edges.
    fn coupled(&self) -> &'static [usize] {
        match self {
            Rhs::Sl { .. } => &[0, 1],
            Rhs::Fhn { .. } => &[2],
        }
    }

    #[inline]
    fn eval(&self, x: &[f64], down: &[f64], right: &[f64], out: &mut [f64]) {
        match *self {
            Rhs::Sl { alpha, beta, half_c } => {
                let (re, im) = (x[0], x[1]);
                let r2 = re * re + im * im;
                out[0] = alpha * re - beta * im - re * r2 + half_c * (down[0] + right[0]);
                out[1] = beta * re + alpha * im - im * r2 + half_c * (down[1] + right[1]);
            }
            Rhs::Fhn { p, half_c } => {
                let (v, w, s) = (x[0], x[1], x[2]);
                out[0] = v - v * v * v / 3.0 - w + p.current + half_c * (p.v_r - v) * (down[0] + right[0]);
                out[1] = p.eps * (v + p.a - p.b * w);
                out[2] = gate_rate(v) * (1.0 - s) - GATE_DECAY * s;
            }
        }
    }
}

/// State and derivative of every node, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSeries {
    pub t0: f64,
    pub dt: f64,
    pub nodes: usize,
    pub dim: usize,
    /// `[sample][node][component]`
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl DenseSeries {
    pub fn len(&self) -> usize {
        self.values.len() / (self.nodes * self.dim).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.len().saturating_sub(1)) as f64 * self.dt
    }

    /// Hermite interpolation of node `node` at time `t`.
    pub fn sample(&self, node: usize, t: f64, value: &mut [f64], derivative: &mut [f64]) -> Result<(), DdeError> {
        let x = (t - self.t0) / self.dt;
        let last = self.len() as f64 - 1.0;
        if !(x >= -1e-9 && x <= last + 1e-9) {
            return Err(DdeError::ReplayRange { t });
        }
        let mut i = x.floor().max(0.0) as usize;
        if i as f64 >= last {
            i = (last as usize).saturating_sub(1);
        }
        let th = (x - i as f64).clamp(0.0, 1.0);
        let d = self.dim;
        let a = (i * self.nodes + node) * d;
        let b = ((i + 1) * self.nodes + node) * d;
        let w = hermite_weights(th);
        let dw = hermite_derivative_weights(th);
        for c in 0..d {
            let (y0, y1) = (self.values[a + c], self.values[b + c]);
            let (m0, m1) = (self.derivatives[a + c] * self.dt, self.derivatives[b + c] * self.dt);
            value[c] = w[0] * y0 + w[1] * m0 + w[2] * y1 + w[3] * m1;
            derivative[c] = (dw[0] * y0 + dw[1] * m0 + dw[2] * y1 + dw[3] * m1) / self.dt;
        }
        Ok(())
    }
}

/// History of every node on `[-max_delay, 0]`.
#[derive(Clone)]
pub enum HistoryInit {
    /// One state for all nodes (length `d`) or one per node (length `nodes * d`).
    Constant(Vec<f64>),
    /// Stuart-Landau travelling wave.
    PlaneWave(PlaneWave),
    /// `x_{m,n}(t) = series(node, t + offset + shifts[node])`; a single-node
    /// series is shared by all nodes.
    Replay { series: Arc<DenseSeries>, shifts: Vec<f64>, offset: f64 },
    /// `f(node, t) -> (state, derivative)`.
    Custom(Arc<dyn Fn(usize, f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>),
    /// Base history with uniform noise of the given amplitude added to the state at `t = 0`.
    Perturbed { base: Box<HistoryInit>, amplitude: f64, seed: u64 },
}

impl fmt::Debug for HistoryInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryInit::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            HistoryInit::PlaneWave(w) => f.debug_tuple("PlaneWave").field(w).finish(),
            HistoryInit::Replay { shifts, offset, .. } => {
                f.debug_struct("Replay").field("shifts", shifts).field("offset", offset).finish()
            }
            HistoryInit::Custom(_) => f.write_str("Custom"),
            HistoryInit::Perturbed { base, amplitude, seed } => f
                .debug_struct("Perturbed")
                .field("base", base)
                .field("amplitude", amplitude)
                .field("seed", seed)
                .finish(),
        }
    }
}

impl HistoryInit {
    fn validate(&self, spec: &LatticeSpec) -> Result<(), DdeError> {
        let d = spec.params.dim();
        match self {
            HistoryInit::Constant(v) if v.len() != d && v.len() != d * spec.nodes() => {
                Err(DdeError::InitShape { expected: d * spec.nodes(), got: v.len() })
            }
            HistoryInit::PlaneWave(_) if d != 2 => Err(DdeError::InitModel),
            HistoryInit::Replay { series, shifts, .. } => {
                if series.dim != d || (series.nodes != 1 && series.nodes != spec.nodes()) {
                    return Err(DdeError::InitShape { expected: d * spec.nodes(), got: series.dim * series.nodes });
                }
                if shifts.len() != spec.nodes() {
                    return Err(DdeError::InitShape { expected: spec.nodes(), got: shifts.len() });
                }
                Ok(())
            }
            HistoryInit::Perturbed { base, .. } => base.validate(spec),
            _ => Ok(()),
        }
    }

    fn eval(&self, spec: &LatticeSpec, node: usize, t: f64, x: &mut [f64], dx: &mut [f64]) -> Result<(), DdeError> {
        let d = x.len();
        match self {
            HistoryInit::Constant(v) => {
                let base = if v.len() == d { 0 } else { node * d };
                x.copy_from_slice(&v[base..base + d]);
                dx.fill(0.0);
            }
            HistoryInit::PlaneWave(w) => {
                let (m, n) = (node / spec.cols(), node % spec.cols());
                let z = w.state(m, n, t);
                x[0] = z.re;
                x[1] = z.im;
                dx[0] = -w.omega * z.im;
                dx[1] = w.omega * z.re;
            }
            HistoryInit::Replay { series, shifts, offset } => {
                let src = if series.nodes == 1 { 0 } else { node };
                series.sample(src, t + offset + shifts[node], x, dx)?;
            }
            HistoryInit::Custom(f) => {
                let (a, b) = f(node, t);
                x.copy_from_slice(&a[..d]);
                dx.copy_from_slice(&b[..d]);
            }
            HistoryInit::Perturbed { base, .. } => base.eval(spec, node, t, x, dx)?,
        }
        Ok(())
    }

    /// Noise added to the state at `t = 0`.
    fn kick(&self, state: &mut [f64]) {
        if let HistoryInit::Perturbed { base, amplitude, seed } = self {
            base.kick(state);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for x in state.iter_mut() {
                *x += rng.gen_range(-*amplitude..=*amplitude);
            }
        }
    }
}

/// Which component and threshold define an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeOptions {
    pub component: usize,
    pub threshold: f64,
}

impl SpikeOptions {
    /// `v` crossing 0 for FitzHugh-Nagumo, `Re z` crossing 0 for Stuart-Landau.
    pub fn default_for(_params: &ModelParams) -> Self {
        Self { component: 0, threshold: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    /// `None` selects `min(0.01, min_delay / 8)`.
    pub dt: Option<f64>,
    pub record_every: usize,
    /// Frames before this time are not stored.
    pub record_from: f64,
    pub record_derivatives: bool,
    pub spikes: Option<SpikeOptions>,
}

impl SimOptions {
    pub fn new(t_end: f64) -> Self {
        Self { t_end, dt: None, record_every: 1, record_from: 0.0, record_derivatives: false, spikes: None }
    }
}

pub fn default_dt(min_delay: f64) -> f64 {
    (min_delay / 8.0).min(0.01)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub dt: f64,
    pub record_every: usize,
    pub times: Vec<f64>,
    /// `[frame][node][component]`
    pub states: Vec<f64>,
    pub derivatives: Option<Vec<f64>>,
    /// Per-node event times when on-the-fly detection was requested.
    pub spikes: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let s = self.nodes() * self.dim;
        &self.states[i * s..(i + 1) * s]
    }

    pub fn last_frame(&self) -> &[f64] {
        self.frame(self.times.len() - 1)
    }

    pub fn node_state(&self, frame: usize, node: usize) -> &[f64] {
        let base = (frame * self.nodes() + node) * self.dim;
        &self.states[base..base + self.dim]
    }

    /// One component of one node over all frames.
    pub fn series(&self, node: usize, component: usize) -> Vec<f64> {
        (0..self.times.len()).map(|f| self.node_state(f, node)[component]).collect()
    }

    /// Dense series for replay; requires recorded derivatives.
    pub fn to_dense(&self) -> Result<DenseSeries, DdeError> {
        let derivatives = self.derivatives.clone().ok_or(DdeError::NoDerivatives)?;
        Ok(DenseSeries {
            t0: self.times.first().copied().unwrap_or(0.0),
            dt: self.dt * self.record_every as f64,
            nodes: self.nodes(),
            dim: self.dim,
            values: self.states.clone(),
            derivatives,
        })
    }

    /// Dense series of a single node.
    pub fn node_dense(&self, node: usize) -> Result<DenseSeries, DdeError> {
        let der = self.derivatives.as_ref().ok_or(DdeError::NoDerivatives)?;
        let d = self.dim;
        let mut values = Vec::with_capacity(self.times.len() * d);
        let mut derivatives = Vec::with_capacity(self.times.len() * d);
        for f in 0..self.times.len() {
            let base = (f * self.nodes() + node) * d;
            values.extend_from_slice(&self.states[base..base + d]);
            derivatives.extend_from_slice(&der[base..base + d]);
        }
        Ok(DenseSeries {
            t0: self.times.first().copied().unwrap_or(0.0),
            dt: self.dt * self.record_every as f64,
            nodes: 1,
            dim: d,
            values,
            derivatives,
        })
    }
}

fn hermite_weights(th: f64) -> [f64; 4] {
    let om = 1.0 - th;
    [(1.0 + 2.0 * th) * om * om, th * om * om, th * th * (3.0 - 2.0 * th), th * th * (th - 1.0)]
}

fn hermite_derivative_weights(th: f64) -> [f64; 4] {
    [6.0 * th * (th - 1.0), (1.0 - th) * (1.0 - 3.0 * th), 6.0 * th * (1.0 - th), th * (3.0 * th - 2.0)]
}

/// Where a delayed lookup lands relative to the current step index.
#[derive(Debug, Clone, Copy)]
struct Tap {
    offset: i64,
    w: [f64; 4],
}

impl Tap {
    fn new(stage_fraction: f64, delay: f64, dt: f64) -> Self {
        let x = stage_fraction - delay / dt;
        let mut offset = x.floor();
        let mut th = x - offset;
        // keep the interval strictly in the past when the delay is a grid multiple
        if th >= 1.0 {
            offset += 1.0;
            th -= 1.0;
        }
        let mut w = hermite_weights(th);
        w[1] *= dt;
        w[3] *= dt;
        Self { offset: offset as i64, w }
    }
}

const STAGES: [f64; 3] = [0.0, 0.5, 1.0];

struct History {
    depth: usize,
    nodes: usize,
    nc: usize,
    values: Vec<f64>,
    derivatives: Vec<f64>,
}

impl History {
    fn slot(&self, index: i64) -> usize {
        index.rem_euclid(self.depth as i64) as usize
    }

    fn write(&mut self, index: i64, node: usize, value: &[f64], derivative: &[f64]) {
        let base = (self.slot(index) * self.nodes + node) * self.nc;
        self.values[base..base + self.nc].copy_from_slice(value);
        self.derivatives[base..base + self.nc].copy_from_slice(derivative);
    }

    #[inline]
    fn lookup(&self, step: i64, node: usize, tap: &Tap, out: &mut [f64]) {
        let i0 = step + tap.offset;
        let a = (self.slot(i0) * self.nodes + node) * self.nc;
        let b = (self.slot(i0 + 1) * self.nodes + node) * self.nc;
        for c in 0..self.nc {
            out[c] = tap.w[0] * self.values[a + c]
                + tap.w[1] * self.derivatives[a + c]
                + tap.w[2] * self.values[b + c]
                + tap.w[3] * self.derivatives[b + c];
        }
    }
}

/// Integrate the lattice from its history on `[-max_delay, 0]` up to `t_end`.
pub fn simulate(
    spec: &LatticeSpec,
    delays: &DelayMap,
    init: &HistoryInit,
    opts: &SimOptions,
) -> Result<Trajectory, DdeError> {
    if delays.rows() != spec.rows() || delays.cols() != spec.cols() {
        return Err(DdeError::ShapeMismatch {
            rows: spec.rows(),
            cols: spec.cols(),
            got_rows: delays.rows(),
            got_cols: delays.cols(),
        });
    }
    if !(opts.t_end > 0.0) {
        return Err(DdeError::InvalidEnd(opts.t_end));
    }
    let min_delay = delays.min_delay();
    let dt = opts.dt.unwrap_or_else(|| default_dt(min_delay));
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DdeError::InvalidStep(dt));
    }
    if dt > min_delay / 4.0 {
        return Err(DdeError::StepTooLarge { dt, min_delay });
    }
    init.validate(spec)?;

    let rhs = Rhs::new(spec);
    let d = spec.params.dim();
    let coupled = rhs.coupled();
    let nc = coupled.len();
    let nodes = spec.nodes();
    let depth = (delays.max_delay() / dt).ceil() as usize + 3;

    // taps[node][edge][stage]
    let mut taps = Vec::with_capacity(nodes);
    let mut sources = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let (m, n) = (node / spec.cols(), node % spec.cols());
        let mut t = [[Tap { offset: 0, w: [0.0; 4] }; 3]; 2];
        for (e, delay) in [delays.down(m, n), delays.right(m, n)].into_iter().enumerate() {
            for (s, c) in STAGES.iter().enumerate() {
                let tap = Tap::new(*c, delay, dt);
                if tap.offset + 1 > 0 || -tap.offset >= depth as i64 - 1 {
                    return Err(DdeError::LookupOutOfRange { offset: tap.offset, depth });
                }
                t[e][s] = tap;
            }
        }
        taps.push(t);
        let (um, un) = spec.up_neighbor(m, n);
        let (lm, ln) = spec.left_neighbor(m, n);
        sources.push([spec.index(um, un), spec.index(lm, ln)]);
    }

    let mut hist = History {
        depth,
        nodes,
        nc,
        values: vec![0.0; depth * nodes * nc],
        derivatives: vec![0.0; depth * nodes * nc],
    };
    let mut x = vec![0.0; nodes * d];
    {
        let (mut xv, mut dv) = (vec![0.0; d], vec![0.0; d]);
        let mut cv = vec![0.0; nc];
        let mut cd = vec![0.0; nc];
        for k in 0..depth as i64 {
            let index = -k;
            let t = index as f64 * dt;
            for node in 0..nodes {
                init.eval(spec, node, t, &mut xv, &mut dv)?;
                for (j, &c) in coupled.iter().enumerate() {
                    cv[j] = xv[c];
                    cd[j] = dv[c];
                }
                hist.write(index, node, &cv, &cd);
                if index == 0 {
                    x[node * d..(node + 1) * d].copy_from_slice(&xv);
                }
            }
        }
    }
    init.kick(&mut x);
    // the slot at t = 0 must hold the state actually integrated
    for node in 0..nodes {
        let base = (hist.slot(0) * nodes + node) * nc;
        for (j, &c) in coupled.iter().enumerate() {
            hist.values[base + j] = x[node * d + c];
        }
    }

    let steps = ((opts.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let record_every = opts.record_every.max(1);
    let mut traj = Trajectory {
        rows: spec.rows(),
        cols: spec.cols(),
        dim: d,
        dt,
        record_every,
        times: Vec::new(),
        states: Vec::new(),
        derivatives: opts.record_derivatives.then(Vec::new),
        spikes: opts.spikes.map(|_| vec![Vec::new(); nodes]),
    };

    let mut k = [vec![0.0; nodes * d], vec![0.0; nodes * d], vec![0.0; nodes * d], vec![0.0; nodes * d]];
    let mut xs = vec![0.0; nodes * d];
    let mut down = vec![0.0; nc];
    let mut right = vec![0.0; nc];
    let mut last_spike = vec![f64::NEG_INFINITY; nodes];

    let stage = |hist: &History, step: i64, s: usize, state: &[f64], out: &mut [f64], down: &mut [f64], right: &mut [f64]| {
        for node in 0..nodes {
            let [up, left] = sources[node];
            hist.lookup(step, up, &taps[node][0][s], down);
            hist.lookup(step, left, &taps[node][1][s], right);
            rhs.eval(&state[node * d..(node + 1) * d], down, right, &mut out[node * d..(node + 1) * d]);
        }
    };

    for step in 0..=steps as i64 {
        let t = step as f64 * dt;
        // derivative at the current grid point doubles as the first RK stage
        let [k1, k2, k3, k4] = &mut k;
        stage(&hist, step, 0, &x, k1, &mut down, &mut right);
        {
            let base_slot = hist.slot(step);
            for node in 0..nodes {
                let base = (base_slot * nodes + node) * nc;
                for (j, &c) in coupled.iter().enumerate() {
                    hist.derivatives[base + j] = k1[node * d + c];
                }
            }
        }
        if step as usize % record_every == 0 && t >= opts.record_from - 1e-12 {
            traj.times.push(t);
            traj.states.extend_from_slice(&x);
            if let Some(der) = traj.derivatives.as_mut() {
                der.extend_from_slice(k1);
            }
        }
        if step as usize == steps {
            break;
        }
        for i in 0..nodes * d {
            xs[i] = x[i] + 0.5 * dt * k1[i];
        }
        stage(&hist, step, 1, &xs, k2, &mut down, &mut right);
        for i in 0..nodes * d {
            xs[i] = x[i] + 0.5 * dt * k2[i];
        }
        stage(&hist, step, 1, &xs, k3, &mut down, &mut right);
        for i in 0..nodes * d {
            xs[i] = x[i] + dt * k3[i];
        }
        stage(&hist, step, 2, &xs, k4, &mut down, &mut right);

        let t_next = (step + 1) as f64 * dt;
        let next_slot = hist.slot(step + 1);
        for node in 0..nodes {
            for c in 0..d {
                let i = node * d + c;
                xs[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let new = &xs[node * d..(node + 1) * d];
            if new.iter().any(|v| !v.is_finite()) {
                return Err(DdeError::NonFinite { t: t_next, m: node / spec.cols(), n: node % spec.cols() });
            }
            if let (Some(sp), Some(events)) = (opts.spikes, traj.spikes.as_mut()) {
                let (a, b) = (x[node * d + sp.component], new[sp.component]);
                if a < sp.threshold && b >= sp.threshold {
                    let te = t + dt * (sp.threshold - a) / (b - a);
                    if te - last_spike[node] >= REFRACTORY {
                        events[node].push(te);
                        last_spike[node] = te;
                    }
                }
            }
            let base = (next_slot * nodes + node) * nc;
            for (j, &c) in coupled.iter().enumerate() {
                hist.values[base + j] = new[c];
            }
        }
        std::mem::swap(&mut x, &mut xs);
    }
    Ok(traj)
}

/// Upward threshold crossings with linear interpolation and a refractory window.
pub fn upward_crossings(times: &[f64], values: &[f64], threshold: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for i in 1..times.len().min(values.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a < threshold && b >= threshold {
            let t = times[i - 1] + (times[i] - times[i - 1]) * (threshold - a) / (b - a);
            if out.last().map_or(true, |&l| t - l >= REFRACTORY) {
                out.push(t);
            }
        }
    }
    out
}

/// Per-node event times from recorded frames.
pub fn detect_spikes(traj: &Trajectory, component: usize, threshold: f64) -> Vec<Vec<f64>> {
    (0..traj.nodes())
        .map(|node| upward_crossings(&traj.times, &traj.series(node, component), threshold))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub mean: f64,
    pub std: f64,
    pub intervals: usize,
}

/// Mean and standard deviation of inter-event intervals after `t_discard`.
pub fn estimate_period(events: &[f64], t_discard: f64) -> Result<PeriodEstimate, DdeError> {
    let kept: Vec<f64> = events.iter().copied().filter(|&t| t >= t_discard).collect();
    if kept.len() < 3 {
        return Err(DdeError::InsufficientEvents { found: kept.len(), t_discard });
    }
    let gaps: Vec<f64> = kept.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    Ok(PeriodEstimate { mean, std: var.sqrt(), intervals: gaps.len() })
}

/// Period of node `node` from the trajectory's own events, or from recorded
/// frames with the default event definition when none were collected.
pub fn estimate_period_of(traj: &Trajectory, node: usize, t_discard: f64) -> Result<PeriodEstimate, DdeError> {
    match &traj.spikes {
        Some(s) => estimate_period(&s[node], t_discard),
        None => estimate_period(&upward_crossings(&traj.times, &traj.series(node, 0), 0.0), t_discard),
    }
}
