//! Time-shift transformation checked against direct simulation.

use std::sync::Arc;

use delaylattice::dde::{self, DenseSeries, HistoryInit, SimOptions, SpikeOptions};
use delaylattice::pattern::{self, ShiftField};
use delaylattice::sl::{self, StabilityClass};
use delaylattice::{enumerate_modes, DelayMap, FhnParams, LatticeSpec, ModelParams, SlParams};

fn fhn_orbit(c: f64, tau: f64) -> (DenseSeries, f64) {
    let spec = LatticeSpec::new(1, 1, ModelParams::FitzHughNagumo(FhnParams::default()), c).unwrap();
    let opts = SimOptions {
        record_from: 3000.0,
        record_derivatives: true,
        spikes: Some(SpikeOptions { component: 0, threshold: 0.0 }),
        ..SimOptions::new(3200.0)
    };
    let delays = DelayMap::homogeneous(1, 1, tau).unwrap();
    let traj = dde::simulate(&spec, &delays, &HistoryInit::Constant(vec![1.5, 0.0, 0.5]), &opts).unwrap();
    let period = dde::estimate_period_of(&traj, 0, 3000.0).unwrap().mean;
    (traj.to_dense().unwrap(), period)
}

#[test]
fn stuart_landau_conjugacy_on_two_by_two() {
    let p = SlParams { alpha: 1.0, beta: 0.5 };
    let (c, tau) = (1.0, 10.0);
    let w = sl::enumerate_plane_waves(p, c, tau, &enumerate_modes(2, 2))
        .into_iter()
        .find(|w| sl::asymptotic_class(w, p) == StabilityClass::Stable)
        .unwrap();
    let spec = LatticeSpec::new(2, 2, ModelParams::StuartLandau(p), c).unwrap();
    let init = HistoryInit::Perturbed { base: Box::new(HistoryInit::PlaneWave(w)), amplitude: 1e-3, seed: 1 };
    let opts = SimOptions { record_derivatives: true, ..SimOptions::new(120.0) };
    let hom = dde::simulate(&spec, &DelayMap::homogeneous(2, 2, tau).unwrap(), &init, &opts).unwrap();
    let hom = Arc::new(hom.to_dense().unwrap());

    let eta = ShiftField::new(2, 2, vec![0.0, 0.7, 1.9, 0.4]).unwrap();
    let delays = pattern::delays_from_timeshifts(&eta, tau).unwrap();
    let t0 = 20.0;
    let shifted = HistoryInit::Replay { series: hom.clone(), shifts: eta.values().to_vec(), offset: t0 };
    let traj = dde::simulate(&spec, &delays, &shifted, &SimOptions::new(80.0)).unwrap();

    let (mut v, mut dv) = ([0.0; 2], [0.0; 2]);
    let mut worst: f64 = 0.0;
    for (f, &t) in traj.times.iter().enumerate() {
        for node in 0..4 {
            hom.sample(node, t + t0 + eta.values()[node], &mut v, &mut dv).unwrap();
            let s = traj.node_state(f, node);
            worst = worst.max((s[0] - v[0]).abs()).max((s[1] - v[1]).abs());
        }
    }
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn synchronous_orbit_has_no_offsets() {
    let (c, tau) = (3.0, 50.0);
    let (orbit, period) = fhn_orbit(c, tau);
    let spec = LatticeSpec::new(3, 3, ModelParams::FitzHughNagumo(FhnParams::default()), c).unwrap();
    let eta = ShiftField::zeros(3, 3);
    let init = HistoryInit::Replay { series: Arc::new(orbit), shifts: vec![0.0; 9], offset: 3100.0 };
    let opts = SimOptions {
        record_every: 1000,
        spikes: Some(SpikeOptions { component: 0, threshold: 0.0 }),
        ..SimOptions::new(10.0 * period)
    };
    let traj = dde::simulate(&spec, &DelayMap::homogeneous(3, 3, tau).unwrap(), &init, &opts).unwrap();
    let report = pattern::verify_pattern(&traj, &eta, period, 2.0 * period).unwrap();
    assert!(report.correlation.is_none());
    assert!(report.max_dev < 2.0 * traj.dt, "{}", report.max_dev);
}

#[test]
fn two_cluster_field_on_four_by_four() {
    let (c, tau) = (3.0, 50.0);
    let (orbit, period) = fhn_orbit(c, tau);
    let eta: Vec<f64> = (0..16).map(|i| if (i / 4 + i % 4) % 2 == 0 { 0.0 } else { 0.5 * period }).collect();
    let eta = ShiftField::new(4, 4, eta).unwrap();
    let delays = pattern::delays_from_timeshifts(&eta, tau).unwrap();
    let spec = LatticeSpec::new(4, 4, ModelParams::FitzHughNagumo(FhnParams::default()), c).unwrap();
    let init = HistoryInit::Replay { series: Arc::new(orbit), shifts: eta.values().to_vec(), offset: 3100.0 };
    let opts = SimOptions {
        record_every: 100_000,
        spikes: Some(SpikeOptions { component: 0, threshold: 0.0 }),
        ..SimOptions::new(20.0 * period)
    };
    let traj = dde::simulate(&spec, &delays, &init, &opts).unwrap();
    let report = pattern::verify_pattern(&traj, &eta, period, 10.0 * period).unwrap();
    assert!(report.missing_nodes.is_empty());
    for (i, off) in report.offsets.iter().enumerate() {
        let want = if eta.values()[i] == 0.0 { 0.0 } else { 0.5 * period };
        let d = (off - want).rem_euclid(period);
        assert!(d.min(period - d) < 0.01 * period, "node {i}: {off} vs {want}");
    }
}
