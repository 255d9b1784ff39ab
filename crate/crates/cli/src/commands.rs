use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use delaylattice::config::{parse_config, DelaySource, InitSpec, RunConfig};
use delaylattice::dde::{self, DdeError, HistoryInit, SimOptions, SpikeOptions};
use delaylattice::io::{self, Cell, CsvTable};
use delaylattice::lambertw::branch_span;
use delaylattice::pattern::{self, ShiftField};
use delaylattice::roots::{self, Window};
use delaylattice::sl::{self, FloquetOptions, PlaneWave, QGrid};
use delaylattice::{fhn, DelayMap, FhnParams, LatticeSpec, ModelParams, SlParams, WaveVector};

use crate::output::{Failure, Run};
use crate::ConfigArgs;

struct Loaded {
    cfg: RunConfig,
    /// Directory against which relative paths in the config resolve.
    base: PathBuf,
}

fn load(run: &mut Run, a: &ConfigArgs) -> Result<Loaded, Failure> {
    let text = run.input_text(&a.config)?;
    let mut cfg = parse_config(&text).map_err(Failure::config)?;
    match &mut cfg.params {
        ModelParams::StuartLandau(p) => {
            if a.current.is_some() {
                return Err(Failure::Config("--current applies to model \"fhn\" only".into()));
            }
            p.alpha = a.alpha.unwrap_or(p.alpha);
            p.beta = a.beta.unwrap_or(p.beta);
        }
        ModelParams::FitzHughNagumo(p) => {
            if a.alpha.is_some() || a.beta.is_some() {
                return Err(Failure::Config("--alpha and --beta apply to model \"sl\" only".into()));
            }
            p.current = a.current.unwrap_or(p.current);
        }
    }
    if let Some(c) = a.coupling {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Failure::Config(format!("config C: coupling must be finite and >= 0, got {c}")));
        }
        cfg.coupling = c;
    }
    if let Some(t) = a.tau {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Config(format!("config delay.homogeneous: delay must be > 0, got {t}")));
        }
        cfg.delay = DelaySource::Homogeneous(t);
    }
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { cfg, base })
}

fn resolved(cfg: &RunConfig, extra: Value) -> Value {
    json!({ "config": serde_json::to_value(cfg).expect("config serializes"), "options": extra })
}

fn require_tau(cfg: &RunConfig) -> Result<f64, Failure> {
    cfg.tau().ok_or_else(|| Failure::Config("this command needs a homogeneous delay (delay.homogeneous or --tau)".into()))
}

fn require_sl(cfg: &RunConfig, command: &str) -> Result<SlParams, Failure> {
    match cfg.params {
        ModelParams::StuartLandau(p) => Ok(p),
        ModelParams::FitzHughNagumo(_) => Err(Failure::Config(format!("{command} needs model \"sl\""))),
    }
}

fn mode_cells(wv: &WaveVector) -> [Cell<'static>; 4] {
    [Cell::Num(wv.k1()), Cell::Num(wv.k2()), Cell::Num(wv.k_plus()), Cell::Num(wv.k_minus())]
}

fn sorted(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    roots.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    roots
}

/// `n` midpoints of `[lo, hi]`.
fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

fn fhn_state(p: &FhnParams, c: f64, index: usize) -> Result<fhn::FhnSteadyState, Failure> {
    let states = fhn::steady_states(p, c);
    states.get(index).copied().ok_or_else(|| {
        Failure::Config(format!("steady state {index} requested but only {} exist", states.len()))
    })
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Keep eigenvalues with |Im| up to this bound (default 3|beta| + 3 for SL, 3 for FHN).
    #[arg(long)]
    pub im_max: Option<f64>,
    /// Real-part window for the FHN root search.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub re_max: f64,
}

pub fn spectrum_stst(a: SpectrumArgs) -> Result<(), Failure> {
    let mut run = Run::new("spectrum-stst", &a.common.out)?;
    let Loaded { cfg, .. } = load(&mut run, &a.common)?;
    let tau = require_tau(&cfg)?;
    let modes = cfg.lattice().modes();
    let mut table = CsvTable::new(&["state", "k1", "k2", "k_plus", "k_minus", "re_lambda", "im_lambda"]);
    let summary;
    let im_max;
    match cfg.params {
        ModelParams::StuartLandau(p) => {
            im_max = a.im_max.unwrap_or(3.0 * p.beta.abs() + 3.0);
            let span = branch_span(tau * (im_max + p.beta.abs()));
            let spectra: Vec<Vec<Complex64>> = modes
                .par_iter()
                .map(|wv| {
                    sl::stst_eigenvalues(p, cfg.coupling, tau, *wv, -span..=span)
                        .map(|s| sorted(s.roots.into_iter().filter(|l| l.im.abs() <= im_max).collect()))
                })
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::numerical("sl", e))?;
            let mut rightmost = f64::NEG_INFINITY;
            for (wv, roots) in modes.iter().zip(&spectra) {
                for l in roots {
                    rightmost = rightmost.max(l.re);
                    let mut row = vec![Cell::Int(0)];
                    row.extend(mode_cells(wv));
                    row.extend([Cell::Num(l.re), Cell::Num(l.im)]);
                    table.row(&row);
                }
            }
            summary = json!({ "rightmost_re": rightmost, "stable": rightmost < 0.0 });
        }
        ModelParams::FitzHughNagumo(p) => {
            im_max = a.im_max.unwrap_or(3.0);
            let window = Window::new(a.re_min, a.re_max, -im_max, im_max).map_err(Failure::config)?;
            let mut states = Vec::new();
            for (i, st) in fhn::steady_states(&p, cfg.coupling).iter().enumerate() {
                let spectra: Vec<Vec<Complex64>> = modes
                    .par_iter()
                    .map(|wv| fhn::char_roots(st, &p, cfg.coupling, tau, wv, window).map(|s| sorted(s.roots)))
                    .collect::<Result<_, _>>()
                    .map_err(|e| Failure::numerical("fhn", e))?;
                let mut rightmost = f64::NEG_INFINITY;
                for (wv, roots) in modes.iter().zip(&spectra) {
                    for l in roots {
                        rightmost = rightmost.max(l.re);
                        let mut row = vec![Cell::from(i)];
                        row.extend(mode_cells(wv));
                        row.extend([Cell::Num(l.re), Cell::Num(l.im)]);
                        table.row(&row);
                    }
                }
                states.push(json!({ "v": st.v, "w": st.w, "s": st.s, "rightmost_re": rightmost, "stable": rightmost < 0.0 }));
            }
            summary = json!({ "states": states });
        }
    }
    run.write("spectrum.csv", table.into_string().as_bytes())?;
    run.write_json("summary.json", &summary)?;
    let extra = json!({ "im_max": im_max, "re_min": a.re_min, "re_max": a.re_max });
    run.finish(resolved(&cfg, extra))
}

#[derive(Debug, Clone, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// SL plane wave (index from `planewaves`); without it the steady-state curve is exported.
    #[arg(long)]
    pub wave: Option<usize>,
    /// FHN steady state index.
    #[arg(long, default_value_t = 0)]
    pub state: usize,
    /// Frequency range is [-omega_max, omega_max] (default 3|beta| + 3 for SL, 3 for FHN).
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

pub fn dispersion(a: DispersionArgs) -> Result<(), Failure> {
    let mut run = Run::new("dispersion", &a.common.out)?;
    let Loaded { cfg, .. } = load(&mut run, &a.common)?;
    if a.samples == 0 {
        return Err(Failure::Config("--samples must be positive".into()));
    }
    let c = cfg.coupling;
    let omega_max = a.omega_max.unwrap_or(match cfg.params {
        ModelParams::StuartLandau(p) => 3.0 * p.beta.abs() + 3.0,
        ModelParams::FitzHughNagumo(_) => 3.0,
    });
    let omegas = midpoints(-omega_max, omega_max, a.samples);
    let ks = midpoints(-PI, PI, a.samples);
    let (name, table) = match (cfg.params, a.wave) {
        (ModelParams::StuartLandau(p), Some(i)) => {
            let w = pick_wave(&cfg, p, i)?;
            let mut t = CsvTable::new(&["omega", "q_minus", "gamma_plus", "gamma_minus"]);
            for &om in &omegas {
                for &q in &ks {
                    let (gp, gm) = sl::floquet_pcs(&w, c, om, q);
                    t.row(&[Cell::Num(om), Cell::Num(q), Cell::Num(gp), Cell::Num(gm)]);
                }
            }
            ("floquet_pcs.csv", t)
        }
        (ModelParams::StuartLandau(p), None) => {
            let mut t = CsvTable::new(&["omega", "k_minus", "gamma"]);
            for &om in &omegas {
                for &k in &ks {
                    match sl::stst_pcs(p, c, k, om) {
                        Ok(g) => t.row(&[Cell::Num(om), Cell::Num(k), Cell::Num(g)]),
                        Err(sl::SlError::Decoupled) => {}
                        Err(e) => return Err(Failure::numerical("sl", e)),
                    }
                }
            }
            ("stst_pcs.csv", t)
        }
        (ModelParams::FitzHughNagumo(p), _) => {
            if a.wave.is_some() {
                return Err(Failure::Config("--wave applies to model \"sl\" only".into()));
            }
            let st = fhn_state(&p, c, a.state)?;
            let surface = fhn::hybrid_surface(&st, &p, c, &omegas, &ks).map_err(|e| Failure::numerical("fhn", e))?;
            let mut t = CsvTable::new(&["omega", "k_minus", "gamma"]);
            for (om, k, g) in surface {
                t.row(&[Cell::Num(om), Cell::Num(k), Cell::Num(g)]);
            }
            ("hybrid_dispersion.csv", t)
        }
    };
    run.write(name, table.into_string().as_bytes())?;
    let extra = json!({ "wave": a.wave, "state": a.state, "omega_max": omega_max, "samples": a.samples });
    run.finish(resolved(&cfg, extra))
}

fn all_waves(cfg: &RunConfig, p: SlParams) -> Result<Vec<PlaneWave>, Failure> {
    let tau = require_tau(cfg)?;
    Ok(sl::enumerate_plane_waves(p, cfg.coupling, tau, &cfg.lattice().modes()))
}

fn pick_wave(cfg: &RunConfig, p: SlParams, index: usize) -> Result<PlaneWave, Failure> {
    let waves = all_waves(cfg, p)?;
    waves
        .get(index)
        .copied()
        .ok_or_else(|| Failure::Config(format!("plane wave {index} requested but only {} exist", waves.len())))
}

#[derive(Debug, Clone, Args)]
pub struct PlanewaveArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
}

pub fn planewaves(a: PlanewaveArgs) -> Result<(), Failure> {
    let mut run = Run::new("planewaves", &a.common.out)?;
    let Loaded { cfg, .. } = load(&mut run, &a.common)?;
    let p = require_sl(&cfg, "planewaves")?;
    let tau = require_tau(&cfg)?;
    let waves = all_waves(&cfg, p)?;
    let mut table = CsvTable::new(&[
        "index", "k1", "k2", "k_plus", "k_minus", "omega", "amplitude", "k_tau", "r", "asymptotic_class",
    ]);
    for (i, w) in waves.iter().enumerate() {
        let mut row = vec![Cell::from(i)];
        row.extend(mode_cells(&w.wave));
        row.extend([Cell::Num(w.omega), Cell::Num(w.amplitude), Cell::Num(w.k_tau), Cell::Num(w.r)]);
        row.push(Cell::Str(sl::asymptotic_class(w, p).label()));
        table.row(&row);
    }
    run.write("planewaves.csv", table.into_string().as_bytes())?;
    let count = sl::hopf_count(p.beta, cfg.coupling, tau, &cfg.lattice().modes());
    let mut summary = json!({ "waves": waves.len(), "hopf_count": count });
    if cfg.rows == cfg.cols {
        summary["hopf_count_estimate"] = json!(sl::hopf_count_estimate(cfg.rows, cfg.coupling, tau));
        summary["hopf_count_asymptotic"] = json!(sl::hopf_count_asymptotic(cfg.rows, cfg.coupling, tau));
    }
    run.write_json("summary.json", &summary)?;
    run.finish(resolved(&cfg, json!({})))
}

#[derive(Debug, Clone, Args)]
pub struct FloquetArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Only this plane wave (index from `planewaves`).
    #[arg(long)]
    pub wave: Option<usize>,
    /// Sample perturbations on an n x n grid of the continuum instead of the lattice modes.
    #[arg(long)]
    pub continuous: Option<usize>,
    /// Newton seeds per axis and mode.
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
}

pub fn floquet(a: FloquetArgs) -> Result<(), Failure> {
    let mut run = Run::new("floquet", &a.common.out)?;
    let Loaded { cfg, .. } = load(&mut run, &a.common)?;
    let p = require_sl(&cfg, "floquet")?;
    let tau = require_tau(&cfg)?;
    let all = all_waves(&cfg, p)?;
    let selected: Vec<(usize, PlaneWave)> = match a.wave {
        Some(i) => vec![(i, pick_wave(&cfg, p, i)?)],
        None => all.into_iter().enumerate().collect(),
    };
    let qgrid = match a.continuous {
        Some(0) => return Err(Failure::Config("--continuous must be positive".into())),
        Some(n) => QGrid::Continuous { n },
        None => QGrid::Lattice { rows: cfg.rows, cols: cfg.cols },
    };
    if a.grid == 0 {
        return Err(Failure::Config("--grid must be positive".into()));
    }
    let opts = FloquetOptions { grid: (a.grid, a.grid), ..FloquetOptions::default() };
    let scans: Vec<sl::FloquetScan> = selected
        .par_iter()
        .map(|(_, w)| sl::floquet_exact(w, p, cfg.coupling, tau, qgrid, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::numerical("sl", e))?;

    let mut spectrum = CsvTable::new(&["wave", "k1", "k2", "q1", "q2", "re_lambda", "im_lambda", "class"]);
    let mut verdicts = CsvTable::new(&[
        "wave", "k1", "k2", "omega", "amplitude", "class", "max_growth", "witness_omega", "witness_q_minus",
        "witness_q_plus", "asymptotic_class",
    ]);
    for ((i, w), scan) in selected.iter().zip(&scans) {
        let v = &scan.verdict;
        for m in &scan.modes {
            for l in sorted(m.roots.roots.clone()) {
                spectrum.row(&[
                    Cell::from(*i),
                    Cell::Num(w.wave.k1()),
                    Cell::Num(w.wave.k2()),
                    Cell::Num(m.q.k1()),
                    Cell::Num(m.q.k2()),
                    Cell::Num(l.re),
                    Cell::Num(l.im),
                    Cell::Str(v.class.label()),
                ]);
            }
        }
        verdicts.row(&[
            Cell::from(*i),
            Cell::Num(w.wave.k1()),
            Cell::Num(w.wave.k2()),
            Cell::Num(w.omega),
            Cell::Num(w.amplitude),
            Cell::Str(v.class.label()),
            Cell::Num(v.max_growth),
            Cell::Num(v.witness.0),
            Cell::Num(v.witness.1),
            Cell::Num(v.witness.2),
            Cell::Str(sl::asymptotic_class(w, p).label()),
        ]);
    }
    run.write("floquet.csv", spectrum.into_string().as_bytes())?;
    run.write("verdicts.csv", verdicts.into_string().as_bytes())?;
    let extra = json!({ "wave": a.wave, "qgrid": qgrid, "options": opts });
    run.finish(resolved(&cfg, extra))
}

#[derive(Debug, Clone, Args)]
pub struct HopfArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Current interval searched for FHN Hopf points.
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub current_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub current_max: f64,
}

pub fn hopf(a: HopfArgs) -> Result<(), Failure> {
    let mut run = Run::new("hopf", &a.common.out)?;
    let Loaded { cfg, .. } = load(&mut run, &a.common)?;
    let tau = require_tau(&cfg)?;
    let modes = cfg.lattice().modes();
    let c = cfg.coupling;
    match cfg.params {
        ModelParams::StuartLandau(p) => {
            let mut table = CsvTable::new(&["k1", "k2", "k_plus", "k_minus", "omega"]);
            let mut count = 0;
            for wv in &modes {
                for om in roots::solve_kepler(p.beta, c * wv.k_minus().cos(), wv.k_plus(), tau) {
                    let mut row = mode_cells(wv).to_vec();
                    row.push(Cell::Num(om));
                    table.row(&row);
                    count += 1;
                }
            }
            run.write("hopf.csv", table.into_string().as_bytes())?;
            let alpha_h = sl::hopf_threshold(p.beta, c, tau, cfg.rows, cfg.cols).map_err(|e| Failure::numerical("sl", e))?;
            let mut summary = json!({ "alpha_h": alpha_h, "hopf_count": count });
            if cfg.rows == cfg.cols {
                summary["hopf_count_estimate"] = json!(sl::hopf_count_estimate(cfg.rows, c, tau));
                summary["hopf_count_asymptotic"] = json!(sl::hopf_count_asymptotic(cfg.rows, c, tau));
            }
            run.write_json("summary.json", &summary)?;
        }
        ModelParams::FitzHughNagumo(p) => {
            if !(a.current_min < a.current_max) {
                return Err(Failure::Config("--current-min must be below --current-max".into()));
            }
            let points: Vec<Vec<fhn::HopfPoint>> = modes
                .par_iter()
                .map(|wv| fhn::hopf_points(&p, c, tau, wv, (a.current_min, a.current_max)))
                .collect();
            let mut table = CsvTable::new(&["k1", "k2", "k_plus", "k_minus", "current", "omega", "v"]);
            for (wv, pts) in modes.iter().zip(&points) {
                for h in pts {
                    let mut row = mode_cells(wv).to_vec();
                    row.extend([Cell::Num(h.current), Cell::Num(h.omega), Cell::Num(h.v)]);
                    table.row(&row);
                }
            }
            run.write("hopf.csv", table.into_string().as_bytes())?;
            let c_sn = fhn::saddle_node_coupling(&p).map_err(|e| Failure::numerical("fhn", e))?;
            let summary = json!({
                "saddle_node_coupling": c_sn,
                "fold_currents": fhn::fold_currents(&p, c),
                "hopf_points": points.iter().map(Vec::len).sum::<usize>(),
            });
            run.write_json("summary.json", &summary)?;
        }
    }
    let extra = json!({ "current_range": [a.current_min, a.current_max] });
    run.finish(resolved(&cfg, extra))
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Override sim.t_end.
    #[arg(long)]
    pub t_end: Option<f64>,
}

fn dde_failure(e: DdeError) -> Failure {
    match e {
        DdeError::StepTooLarge { .. }
        | DdeError::InvalidStep(_)
        | DdeError::InvalidEnd(_)
        | DdeError::ShapeMismatch { .. }
        | DdeError::InitShape { .. }
        | DdeError::InitModel => Failure::Config(format!("simulation setup: {e}")),
        e => Failure::numerical("dde", e),
    }
}

fn read_delays(run: &mut Run, cfg: &RunConfig, base: &Path) -> Result<DelayMap, Failure> {
    match &cfg.delay {
        DelaySource::Homogeneous(t) => DelayMap::homogeneous(cfg.rows, cfg.cols, *t).map_err(Failure::config),
        DelaySource::Files { down, right } => {
            let d = run.input_text(&base.join(down))?;
            let r = run.input_text(&base.join(right))?;
            io::parse_delay_map(&d, &r, Some((cfg.rows, cfg.cols))).map_err(Failure::config)
        }
    }
}

fn history(
    run: &mut Run,
    cfg: &RunConfig,
    base: &Path,
    spec: &LatticeSpec,
    delays: &DelayMap,
) -> Result<HistoryInit, Failure> {
    let init = match &cfg.sim.init {
        InitSpec::Constant(s) => HistoryInit::Constant(s.clone()),
        InitSpec::PlaneWave { index } => {
            let p = require_sl(cfg, "plane_wave history")?;
            HistoryInit::PlaneWave(pick_wave(cfg, p, *index)?)
        }
        InitSpec::Sync { state, settle, eta } => {
            let shifts = match eta {
                Some(path) => {
                    let text = run.input_text(&base.join(path))?;
                    io::parse_matrix_csv(&text, "eta", Some((cfg.rows, cfg.cols))).map_err(Failure::config)?.2
                }
                None => vec![0.0; spec.nodes()],
            };
            // every row of any admissible delay map sums to cols * tau
            let tau = delays.right_slice().iter().sum::<f64>() / spec.nodes() as f64;
            let lo = shifts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = delays.max_delay() + (hi - lo) + 1.0;
            let single = LatticeSpec::new(1, 1, spec.params, spec.coupling()).map_err(Failure::config)?;
            let opts = SimOptions {
                dt: cfg.sim.dt,
                record_from: *settle,
                record_derivatives: true,
                ..SimOptions::new(settle + span)
            };
            let single_delay = DelayMap::homogeneous(1, 1, tau).map_err(Failure::config)?;
            let orbit = dde::simulate(&single, &single_delay, &HistoryInit::Constant(state.clone()), &opts)
                .map_err(dde_failure)?;
            let series = orbit.to_dense().map_err(dde_failure)?;
            HistoryInit::Replay { series: Arc::new(series), shifts, offset: settle + delays.max_delay() - lo + 0.5 }
        }
    };
    Ok(if cfg.sim.noise > 0.0 {
        HistoryInit::Perturbed { base: Box::new(init), amplitude: cfg.sim.noise, seed: cfg.seed }
    } else {
        init
    })
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut run = Run::new("simulate", &a.common.out)?;
    let Loaded { mut cfg, base } = load(&mut run, &a.common)?;
    if let Some(t) = a.t_end {
        if !(t > 0.0) {
            return Err(Failure::Config(format!("--t-end must be > 0, got {t}")));
        }
        cfg.sim.t_end = t;
    }
    let spec = cfg.lattice();
    let delays = read_delays(&mut run, &cfg, &base)?;
    let init = history(&mut run, &cfg, &base, &spec, &delays)?;
    let spikes = SpikeOptions { threshold: cfg.sim.spike_threshold, ..SpikeOptions::default_for(&spec.params) };
    let opts = SimOptions {
        t_end: cfg.sim.t_end,
        dt: cfg.sim.dt,
        record_every: cfg.sim.record_every,
        record_from: cfg.sim.record_from,
        record_derivatives: false,
        spikes: Some(spikes),
    };
    let traj = dde::simulate(&spec, &delays, &init, &opts).map_err(dde_failure)?;

    run.write("trajectory.csv", io::snapshot_csv(&traj).as_bytes())?;
    let (raw, header) = io::raw_frames(&traj);
    run.write("trajectory.f64", &raw)?;
    run.write("trajectory.json", (header + "\n").as_bytes())?;
    let events = traj.spikes.clone().unwrap_or_default();
    run.write("spikes.csv", io::spikes_csv(&events, spec.cols()).as_bytes())?;
    let period = dde::estimate_period(&events[0], 0.5 * cfg.sim.t_end).ok();
    let summary = json!({
        "dt": traj.dt,
        "frames": traj.times.len(),
        "spikes": events.iter().map(Vec::len).sum::<usize>(),
        "period": period.as_ref().map(|p| p.mean),
        "period_std": period.as_ref().map(|p| p.std),
    });
    run.write_json("summary.json", &summary)?;
    run.finish(resolved(&cfg, json!({ "dt": traj.dt, "spikes": spikes })))
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    /// 8-bit PGM (P2 or P5); height is M, width is N.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub tau: f64,
    /// Shift assigned to black pixels.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eta_min: f64,
    /// Shift assigned to white pixels.
    #[arg(long, allow_hyphen_values = true)]
    pub eta_max: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn encode(a: EncodeArgs) -> Result<(), Failure> {
    let mut run = Run::new("encode", &a.out)?;
    let bytes = run.input(&a.image)?;
    let img = pattern::parse_pgm(&bytes).map_err(Failure::config)?;
    if !(a.tau > 0.0 && a.tau.is_finite()) {
        return Err(Failure::Config(format!("--tau must be > 0, got {}", a.tau)));
    }
    let eta = pattern::eta_from_image(&img, img.height, img.width, a.eta_min, a.eta_max).map_err(Failure::config)?;
    let delays = pattern::delays_from_timeshifts(&eta, a.tau).map_err(|e| Failure::numerical("pattern", e))?;
    run.write("eta.csv", io::matrix_csv(eta.values(), eta.cols()).as_bytes())?;
    let (down, right) = io::delay_map_csv(&delays);
    run.write("delays_down.csv", down.as_bytes())?;
    run.write("delays_right.csv", right.as_bytes())?;
    let summary = json!({
        "M": img.height,
        "N": img.width,
        "min_delay": delays.min_delay(),
        "max_delay": delays.max_delay(),
    });
    run.write_json("summary.json", &summary)?;
    let resolved = json!({
        "image": a.image.display().to_string(),
        "tau": a.tau,
        "eta_min": a.eta_min,
        "eta_max": a.eta_max,
    });
    run.finish(resolved)
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Spike times `m,n,t` as written by `simulate`.
    #[arg(long)]
    pub spikes: PathBuf,
    /// Encoded shift field as written by `encode`.
    #[arg(long)]
    pub eta: PathBuf,
    /// Oscillation period; estimated from node (0, 0) when absent.
    #[arg(long)]
    pub period: Option<f64>,
    /// Ignore spikes before this time (default: half the last spike time).
    #[arg(long)]
    pub t_discard: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let mut run = Run::new("verify", &a.out)?;
    let eta_text = run.input_text(&a.eta)?;
    let (rows, cols, values) = io::parse_matrix_csv(&eta_text, "eta", None).map_err(Failure::config)?;
    let eta = ShiftField::new(rows, cols, values).map_err(Failure::config)?;
    let spikes_text = run.input_text(&a.spikes)?;
    let events = io::parse_spikes_csv(&spikes_text, rows, cols).map_err(Failure::config)?;
    let last = events.iter().flatten().copied().fold(0.0, f64::max);
    let t_discard = a.t_discard.unwrap_or(0.5 * last);
    let period = match a.period {
        Some(t) => t,
        None => dde::estimate_period(&events[0], t_discard).map_err(|e| Failure::numerical("dde", e))?.mean,
    };
    let report = pattern::verify_offsets(&events, &eta, period, t_discard).map_err(|e| Failure::numerical("pattern", e))?;

    let mut table = CsvTable::new(&["m", "n", "encoded", "measured"]);
    for node in 0..rows * cols {
        let encoded = (eta.values()[node] - eta.values()[0]).rem_euclid(period);
        table.row(&[Cell::from(node / cols), Cell::from(node % cols), Cell::Num(encoded), Cell::Num(report.offsets[node])]);
    }
    run.write("offsets.csv", table.into_string().as_bytes())?;
    let fidelity = json!({
        "correlation": report.correlation,
        "max_dev": report.max_dev,
        "missing_nodes": report.missing_nodes,
        "period": period,
    });
    run.write_json("fidelity.json", &fidelity)?;
    let resolved = json!({
        "spikes": a.spikes.display().to_string(),
        "eta": a.eta.display().to_string(),
        "period": period,
        "t_discard": t_discard,
    });
    run.finish(resolved)
}
