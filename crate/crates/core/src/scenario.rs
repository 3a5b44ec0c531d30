//! Named experiments. Each `compute_*` function returns plain data; the
//! `run_scenario` entry point writes it as CSV plus a `.meta` sidecar.
//!
//! CSV layouts:
//!
//! | file | header |
//! |------|--------|
//! | trajectories | `t_s,p_aa,p_dd,p_uu,p_psi1,norm,n_mean` |
//! | `fig3_unmapped.csv` | `t_s,p_dark2,p_dark1,p_dark0` |
//! | parity scans | `theta_rad,parity` |
//! | coherence | `tau_s,fidelity,stderr` |
//! | `fig4b_fits.csv` | `case,model,coherence_time_s,stderr_s,amplitude,offset,residual,unbounded` |
//! | `fig4c.csv` | `ratio,fidelity` |
//! | `fig4c_detail.csv` | `ratio,fidelity,t_opt_s,p_uu,p_dd` |
//! | `convergence.csv` | `n_max,next_n_max,max_change` |
//! | summaries | `quantity,value` |

use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    bell_fidelity, equal_population_time, first_prominent_max, fit_decay, fit_sinusoid, parity_scan, qutrit_fidelity,
    DecayFit, DecayModel, Estimate, ParityScan, SinusoidFit,
};
use crate::config::{Resolved, ScenarioName};
use crate::dynamics::{
    evolve, noise_average, run_protocol, AveragedPoint, EvolveOptions, Observable, Protocol, Segment, Trajectory,
    default_step, fock_convergence, ConvergenceReport, CONVERGENCE_TOL,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{angular, DriveParams, NoiseParams};
use crate::hilbert::{
    basis_state, make_space, named_internal, named_state, Level, NamedState, Pair, SpaceConfig, StateVector,
};

pub const TRAJECTORY_HEADER: &str = "t_s,p_aa,p_dd,p_uu,p_psi1,norm,n_mean";
pub const UNMAPPED_HEADER: &str = "t_s,p_dark2,p_dark1,p_dark0";
pub const SCAN_HEADER: &str = "theta_rad,parity";
pub const COHERENCE_HEADER: &str = "tau_s,fidelity,stderr";
pub const FITS_HEADER: &str = "case,model,coherence_time_s,stderr_s,amplitude,offset,residual,unbounded";
pub const SWEEP_HEADER: &str = "ratio,fidelity";
pub const SWEEP_DETAIL_HEADER: &str = "ratio,fidelity,t_opt_s,p_uu,p_dd";
pub const CONVERGENCE_HEADER: &str = "n_max,next_n_max,max_change";
pub const SUMMARY_HEADER: &str = "quantity,value";

/// Minimum fall after a maximum for it to count as a peak rather than
/// a ripple of the fast sideband oscillation.
pub const PEAK_DROP: f64 = 0.05;
/// Window searched for the point where P_aa, P↓↓ and P↑↑ coincide.
pub const EQUAL_POPULATION_WINDOW_S: (f64, f64) = (0.45e-3, 0.70e-3);

pub fn drive_params(r: &Resolved) -> Result<DriveParams> {
    Ok(DriveParams::from_hz(r.omega1_hz, r.eta_omega2_hz, r.delta_hz)?.with_phases(r.phase_rf, r.phase_opt))
}

pub fn space(r: &Resolved) -> Result<SpaceConfig> {
    make_space(2, r.n_max)
}

fn options(r: &Resolved, params: &DriveParams) -> EvolveOptions {
    EvolveOptions { dt: r.dt_s.unwrap_or_else(|| default_step(params)), sample_every: r.sample_every_s, keep_states: false }
}

fn aa_ground(sp: SpaceConfig) -> Result<StateVector> {
    basis_state(sp, &[Level::A, Level::A], 0)
}

/// Amplitudes above one by rounding only are accepted as one.
fn unit_amplitude(fit: &SinusoidFit) -> f64 {
    if fit.amplitude > 1.0 && fit.amplitude < 1.0 + 1e-9 {
        1.0
    } else {
        fit.amplitude
    }
}

#[derive(Clone, Debug)]
pub struct TransferPoint {
    pub index: usize,
    pub t: f64,
    pub fidelity: f64,
    pub p_aa: f64,
    pub p_dd: f64,
    pub p_uu: f64,
}

impl TransferPoint {
    fn at(traj: &Trajectory, index: usize) -> Self {
        let s = traj.samples[index];
        Self { index, t: s.t, fidelity: s.p_psi1, p_aa: s.p_aa, p_dd: s.p_dd, p_uu: s.p_uu }
    }
}

/// First prominent maximum of the |ψ1⟩ fidelity.
pub fn transfer_optimum(traj: &Trajectory) -> Option<TransferPoint> {
    first_prominent_max(&traj.column(|s| s.p_psi1), PEAK_DROP).map(|i| TransferPoint::at(traj, i))
}

#[derive(Clone, Debug)]
pub struct Fig1c {
    pub trajectory: Trajectory,
    pub final_state: StateVector,
    pub optimum: Option<TransferPoint>,
    /// Sample in the search window where the three populations are closest,
    /// with their spread `max − min`.
    pub equal: Option<(f64, f64)>,
}

pub fn compute_fig1c(r: &Resolved) -> Result<Fig1c> {
    let params = drive_params(r)?;
    let (final_state, trajectory) = evolve(&aa_ground(space(r)?)?, &params, r.duration_s, &options(r, &params))?;
    let optimum = transfer_optimum(&trajectory);
    let equal = equal_point(&trajectory);
    Ok(Fig1c { trajectory, final_state, optimum, equal })
}

fn equal_point(traj: &Trajectory) -> Option<(f64, f64)> {
    let (aa, dd, uu) = (traj.column(|s| s.p_aa), traj.column(|s| s.p_dd), traj.column(|s| s.p_uu));
    let (lo, hi) = EQUAL_POPULATION_WINDOW_S;
    equal_population_time(&traj.times(), &[&aa, &dd, &uu], lo, hi).map(|(i, spread)| (traj.samples[i].t, spread))
}

#[derive(Clone, Debug)]
pub struct Fig3 {
    pub trajectory: Trajectory,
    /// Populations with two, one and zero ions in |a⟩ at each sample.
    pub unmapped: Vec<[f64; 4]>,
    /// First sample where P↓↓ stops rising, however slightly.
    pub first_local_max: Option<TransferPoint>,
    /// First P↓↓ maximum followed by a fall of at least [`PEAK_DROP`].
    pub peak: Option<TransferPoint>,
}

/// `|↓↓,0⟩`, optical π pulse, drive for `duration`.
pub fn fig3_protocol(r: &Resolved, duration: f64) -> Result<Protocol> {
    let params = drive_params(r)?;
    let init = basis_state(space(r)?, &[Level::Down, Level::Down], 0)?;
    Ok(Protocol::new(
        init,
        vec![Segment::pi_pulse(Pair::Optical, 2), Segment::Drive { params, duration }],
        r.sample_every_s,
    )
    .with_dt(r.dt_s))
}

fn dark_classes(state: &StateVector) -> [f64; 3] {
    let sp = state.space();
    let mut out = [0.0; 3];
    for (k, p) in state.internal_populations().iter().enumerate() {
        let (levels, _) = sp.decompose(k * sp.fock_dim());
        let dark = levels.iter().filter(|&&l| l == Level::A).count();
        out[2 - dark] += p;
    }
    out
}

pub fn compute_fig3(r: &Resolved) -> Result<Fig3> {
    let mut proto = fig3_protocol(r, r.duration_s)?;
    proto.keep_states = true;
    let (_, trajectory) = run_protocol(&proto, None)?;
    let snaps = trajectory.snapshots.as_ref().expect("requested");
    let unmapped = trajectory
        .samples
        .iter()
        .zip(snaps)
        .map(|(s, st)| {
            let [d2, d1, d0] = dark_classes(st);
            [s.t, d2, d1, d0]
        })
        .collect();
    let dd = trajectory.column(|s| s.p_dd);
    let first_local_max = (1..dd.len()).find(|&i| dd[i] < dd[i - 1]).map(|i| TransferPoint::at(&trajectory, i - 1));
    let peak = first_prominent_max(&dd, PEAK_DROP).map(|i| TransferPoint::at(&trajectory, i));
    let mut trajectory = trajectory;
    trajectory.snapshots = None;
    Ok(Fig3 { trajectory, unmapped, first_local_max, peak })
}

#[derive(Clone, Debug)]
pub struct ParityResult {
    pub state: StateVector,
    /// Drive time at which the state was taken (zero for the ideal source).
    pub stop_time: f64,
    pub scan: ParityScan,
    pub fit: SinusoidFit,
    pub p_uu: f64,
    pub p_dd: f64,
    pub fidelity: Estimate,
}

/// State after the fig3 sequence stopped at the first P↓↓ peak.
pub fn fig3_peak_state(r: &Resolved) -> Result<(StateVector, f64)> {
    let f3 = compute_fig3(r)?;
    let t = f3.peak.map(|p| p.t).ok_or_else(|| Error::InvalidScan("no P↓↓ maximum in the drive window".into()))?;
    let (state, _) = run_protocol(&fig3_protocol(r, t)?, None)?;
    Ok((state, t))
}

pub fn parity_analysis(state: StateVector, stop_time: f64, thetas: &[f64]) -> Result<ParityResult> {
    let scan = parity_scan(&state, Pair::Qubit, thetas)?;
    let fit = fit_sinusoid(&scan)?;
    let sp = state.space();
    let pops = state.internal_populations();
    let p_uu = pops[sp.internal_index(&[Level::Up, Level::Up])?];
    let p_dd = pops[sp.internal_index(&[Level::Down, Level::Down])?];
    let fidelity = bell_fidelity(p_uu.min(1.0), p_dd.min(1.0), unit_amplitude(&fit))?;
    Ok(ParityResult { state, stop_time, scan, fit, p_uu, p_dd, fidelity })
}

pub fn compute_parity(r: &Resolved) -> Result<ParityResult> {
    let (state, t) = match r.source {
        crate::config::StateSource::Ideal => (named_state(space(r)?, NamedState::Psi1, 0)?, 0.0),
        crate::config::StateSource::Simulated => fig3_peak_state(r)?,
    };
    parity_analysis(state, t, &r.theta_grid_rad)
}

#[derive(Clone, Debug)]
pub struct Coherence {
    pub sigma_b: f64,
    pub bare: Vec<AveragedPoint>,
    pub dressed: Vec<AveragedPoint>,
    pub fits: Vec<(&'static str, DecayFit)>,
}

/// Shot-averaged |ψ1⟩ fidelity after a wait of each `tau`.
pub fn coherence_curve(
    r: &Resolved,
    taus: &[f64],
    dressing: Option<DriveParams>,
    noise: &NoiseParams,
) -> Result<Vec<AveragedPoint>> {
    let init = named_state(space(r)?, NamedState::Psi1, 0)?;
    let obs = Observable::Fidelity(named_internal(NamedState::Psi1));
    taus.iter()
        .map(|&tau| {
            let seg = Segment::Wait { duration: tau, dressing_on: dressing.is_some(), noise_on: true };
            let proto = Protocol::new(init.clone(), vec![seg], if tau > 0.0 { tau } else { 1.0 })
                .with_dressing(dressing.unwrap_or_else(DriveParams::off));
            let pts = noise_average(&proto, noise, &obs)?;
            let last = *pts.last().expect("at least the initial sample");
            Ok(AveragedPoint { t: tau, ..last })
        })
        .collect()
}

pub fn noise_params(r: &Resolved) -> Result<NoiseParams> {
    let mut n = NoiseParams::new(angular(r.sigma_b_hz), r.n_samples, r.seed)?;
    if r.thermal_mean > 0.0 {
        n.thermal_mean = Some(r.thermal_mean);
        n.validate()?;
    }
    Ok(n)
}

pub fn compute_fig4b(r: &Resolved) -> Result<Coherence> {
    let noise = noise_params(r)?;
    let dressing = DriveParams::from_hz(r.omega1_hz, 0.0, 0.0)?.with_phases(r.phase_rf, 0.0);
    let bare = coherence_curve(r, &r.tau_grid_s, None, &noise)?;
    let dressed = coherence_curve(r, &r.tau_grid_dressed_s, Some(dressing), &noise)?;
    let mut fits = Vec::new();
    for (case, curve) in [("bare", &bare), ("dressed", &dressed)] {
        let taus: Vec<f64> = curve.iter().map(|p| p.t).collect();
        let ys: Vec<f64> = curve.iter().map(|p| p.mean).collect();
        for model in [DecayModel::Exponential, DecayModel::Gaussian] {
            fits.push((case, fit_decay(&taus, &ys, model)?));
        }
    }
    Ok(Coherence { sigma_b: noise.sigma_b, bare, dressed, fits })
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub ratio: f64,
    pub optimum: TransferPoint,
}

/// Transfer from |aa,0⟩ for each Ω1/(ηΩ2); the fidelity is taken at the
/// first prominent |ψ1⟩ maximum.
pub fn compute_fig4c(r: &Resolved) -> Result<Vec<SweepPoint>> {
    let sp = space(r)?;
    let init = aa_ground(sp)?;
    r.ratio_grid
        .par_iter()
        .map(|&ratio| {
            let params = DriveParams::from_hz(ratio * r.eta_omega2_hz, r.eta_omega2_hz, r.delta_hz)?
                .with_phases(r.phase_rf, r.phase_opt);
            let (_, traj) = evolve(&init, &params, r.duration_s, &options(r, &params))?;
            let optimum = transfer_optimum(&traj).ok_or_else(|| Error::InvalidScan("empty trajectory".into()))?;
            Ok(SweepPoint { ratio, optimum })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Qutrit {
    pub trajectory: Trajectory,
    pub stop_time: f64,
    pub spread: f64,
    pub diagonals: [f64; 3],
    pub scans: Vec<(Pair, ParityScan, SinusoidFit)>,
    pub fidelity: Estimate,
}

pub fn qutrit_analysis(state: &StateVector, thetas: &[f64]) -> Result<([f64; 3], Vec<(Pair, ParityScan, SinusoidFit)>, Estimate)> {
    let sp = state.space();
    let pops = state.internal_populations();
    let mut d = [0.0; 3];
    for (k, l) in [Level::A, Level::Down, Level::Up].into_iter().enumerate() {
        d[k] = pops[sp.internal_index(&[l, l])?].min(1.0);
    }
    let mut scans = Vec::new();
    let mut a = [0.0; 3];
    for (k, pair) in [Pair::Qubit, Pair::Optical, Pair::Composite].into_iter().enumerate() {
        let scan = parity_scan(state, pair, thetas)?;
        let fit = fit_sinusoid(&scan)?;
        a[k] = unit_amplitude(&fit);
        scans.push((pair, scan, fit));
    }
    let f = qutrit_fidelity(d, a)?;
    Ok((d, scans, f))
}

pub fn compute_qutrit(r: &Resolved) -> Result<Qutrit> {
    let params = drive_params(r)?;
    let init = aa_ground(space(r)?)?;
    let opts = options(r, &params);
    let (_, trajectory) = evolve(&init, &params, r.duration_s, &opts)?;
    let (stop_time, spread) = equal_point(&trajectory)
        .ok_or_else(|| Error::InvalidScan("drive window does not reach the equal-population search window".into()))?;
    let (state, _) = evolve(&init, &params, stop_time, &opts)?;
    let (diagonals, scans, fidelity) = qutrit_analysis(&state, &r.theta_grid_rad)?;
    Ok(Qutrit { trajectory, stop_time, spread, diagonals, scans, fidelity })
}

#[derive(Clone, Debug)]
pub struct MsBaseline {
    pub trajectory: Trajectory,
    pub gate_time: f64,
    pub fidelity: f64,
    pub max_n_mean: f64,
}

pub fn compute_msbaseline(r: &Resolved) -> Result<MsBaseline> {
    let params = drive_params(r)?;
    let (state, trajectory) = evolve(&aa_ground(space(r)?)?, &params, r.duration_s, &options(r, &params))?;
    let fidelity = state.internal_fidelity(&named_internal(NamedState::BellAaDd))?;
    let max_n_mean = trajectory.samples.iter().map(|s| s.n_mean).fold(0.0, f64::max);
    Ok(MsBaseline { trajectory, gate_time: r.duration_s, fidelity, max_n_mean })
}

pub fn compute_convergence(r: &Resolved) -> Result<ConvergenceReport> {
    let params = drive_params(r)?;
    let dt = r.dt_s;
    let every = r.sample_every_s;
    let duration = r.duration_s;
    fock_convergence(
        move |sp| {
            Ok(Protocol::new(aa_ground(sp)?, vec![Segment::Drive { params, duration }], every).with_dt(dt))
        },
        2,
        &r.nmax_grid,
        CONVERGENCE_TOL,
    )
}

struct Csv {
    out: BufWriter<fs::File>,
}

impl Csv {
    fn create(path: &Path, header: &str) -> Result<Self> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "{header}")?;
        Ok(Self { out })
    }

    fn row(&mut self, cells: &[&dyn Display]) -> Result<()> {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn trajectory(&mut self, name: &str, traj: &Trajectory) -> Result<()> {
        let mut csv = Csv::create(&self.path(name), TRAJECTORY_HEADER)?;
        for s in &traj.samples {
            csv.row(&[&s.t, &s.p_aa, &s.p_dd, &s.p_uu, &s.p_psi1, &s.norm, &s.n_mean])?;
        }
        csv.finish()
    }

    fn scan(&mut self, name: &str, scan: &ParityScan) -> Result<()> {
        let mut csv = Csv::create(&self.path(name), SCAN_HEADER)?;
        for (t, p) in scan.thetas.iter().zip(&scan.parities) {
            csv.row(&[t, p])?;
        }
        csv.finish()
    }

    fn coherence(&mut self, name: &str, pts: &[AveragedPoint]) -> Result<()> {
        let mut csv = Csv::create(&self.path(name), COHERENCE_HEADER)?;
        for p in pts {
            csv.row(&[&p.t, &p.mean, &p.stderr])?;
        }
        csv.finish()
    }

    fn summary(&mut self, name: &str, rows: &[(&str, String)]) -> Result<()> {
        let mut csv = Csv::create(&self.path(name), SUMMARY_HEADER)?;
        for (k, v) in rows {
            csv.row(&[k, v])?;
        }
        csv.finish()
    }
}

fn opt_str<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn transfer_rows(prefix: &str, p: &Option<TransferPoint>) -> Vec<(String, String)> {
    let f = |g: fn(&TransferPoint) -> f64| opt_str(p.as_ref().map(g));
    vec![
        (format!("{prefix}_t_s"), f(|p| p.t)),
        (format!("{prefix}_fidelity_psi1"), f(|p| p.fidelity)),
        (format!("{prefix}_p_aa"), f(|p| p.p_aa)),
        (format!("{prefix}_p_dd"), f(|p| p.p_dd)),
        (format!("{prefix}_p_uu"), f(|p| p.p_uu)),
    ]
}

fn as_rows(v: &[(String, String)]) -> Vec<(&str, String)> {
    v.iter().map(|(k, s)| (k.as_str(), s.clone())).collect()
}

/// Runs `r.scenario` and writes its artifacts into `r.output`. Returns the
/// paths written, the `.meta` sidecar last.
pub fn run_scenario(r: &Resolved) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&r.output)?;
    let mut w = Writer { dir: r.output.clone(), written: Vec::new() };
    match r.scenario {
        ScenarioName::Fig1c => {
            let res = compute_fig1c(r)?;
            w.trajectory("fig1c.csv", &res.trajectory)?;
            let mut rows = transfer_rows("optimum", &res.optimum);
            rows.push(("equal_t_s".into(), opt_str(res.equal.map(|e| e.0))));
            rows.push(("equal_spread".into(), opt_str(res.equal.map(|e| e.1))));
            rows.push(("max_norm_drift".into(), res.trajectory.max_norm_drift().to_string()));
            w.summary("fig1c_summary.csv", &as_rows(&rows))?;
        }
        ScenarioName::Fig3 => {
            let res = compute_fig3(r)?;
            w.trajectory("fig3.csv", &res.trajectory)?;
            let mut csv = Csv::create(&w.path("fig3_unmapped.csv"), UNMAPPED_HEADER)?;
            for row in &res.unmapped {
                csv.row(&[&row[0], &row[1], &row[2], &row[3]])?;
            }
            csv.finish()?;
            let mut rows = transfer_rows("first_local_max", &res.first_local_max);
            rows.extend(transfer_rows("peak", &res.peak));
            rows.push(("max_norm_drift".into(), res.trajectory.max_norm_drift().to_string()));
            w.summary("fig3_summary.csv", &as_rows(&rows))?;
        }
        ScenarioName::Parity => {
            let res = compute_parity(r)?;
            w.scan("parity.csv", &res.scan)?;
            w.summary(
                "parity_summary.csv",
                &[
                    ("source", r.source.to_string()),
                    ("stop_time_s", res.stop_time.to_string()),
                    ("amplitude", res.fit.amplitude.to_string()),
                    ("phase_rad", res.fit.phase.to_string()),
                    ("offset", res.fit.offset.to_string()),
                    ("residual", res.fit.residual.to_string()),
                    ("p_uu", res.p_uu.to_string()),
                    ("p_dd", res.p_dd.to_string()),
                    ("bell_fidelity", res.fidelity.value.to_string()),
                    ("bell_fidelity_clipped", res.fidelity.clipped.to_string()),
                ],
            )?;
        }
        ScenarioName::Fig4b => {
            let res = compute_fig4b(r)?;
            w.coherence("fig4b_bare.csv", &res.bare)?;
            w.coherence("fig4b_dressed.csv", &res.dressed)?;
            let mut csv = Csv::create(&w.path("fig4b_fits.csv"), FITS_HEADER)?;
            for (case, f) in &res.fits {
                csv.row(&[case, &f.model.name(), &f.coherence_time, &f.stderr, &f.amplitude, &f.offset, &f.residual, &f.unbounded])?;
            }
            csv.finish()?;
        }
        ScenarioName::Fig4c => {
            let res = compute_fig4c(r)?;
            let mut csv = Csv::create(&w.path("fig4c.csv"), SWEEP_HEADER)?;
            for p in &res {
                csv.row(&[&p.ratio, &p.optimum.fidelity])?;
            }
            csv.finish()?;
            let mut csv = Csv::create(&w.path("fig4c_detail.csv"), SWEEP_DETAIL_HEADER)?;
            for p in &res {
                csv.row(&[&p.ratio, &p.optimum.fidelity, &p.optimum.t, &p.optimum.p_uu, &p.optimum.p_dd])?;
            }
            csv.finish()?;
        }
        ScenarioName::Qutrit => {
            let res = compute_qutrit(r)?;
            w.trajectory("qutrit.csv", &res.trajectory)?;
            for (pair, scan, _) in &res.scans {
                w.scan(&format!("qutrit_scan_{pair}.csv"), scan)?;
            }
            let mut rows: Vec<(String, String)> = vec![
                ("stop_time_s".into(), res.stop_time.to_string()),
                ("spread".into(), res.spread.to_string()),
                ("d_aa".into(), res.diagonals[0].to_string()),
                ("d_dd".into(), res.diagonals[1].to_string()),
                ("d_uu".into(), res.diagonals[2].to_string()),
            ];
            for (pair, _, fit) in &res.scans {
                rows.push((format!("amplitude_{pair}"), fit.amplitude.to_string()));
            }
            rows.push(("f3".into(), res.fidelity.value.to_string()));
            rows.push(("f3_raw".into(), res.fidelity.raw.to_string()));
            rows.push(("f3_clipped".into(), res.fidelity.clipped.to_string()));
            w.summary("qutrit_summary.csv", &as_rows(&rows))?;
        }
        ScenarioName::MsBaseline => {
            let res = compute_msbaseline(r)?;
            w.trajectory("msbaseline.csv", &res.trajectory)?;
            w.summary(
                "msbaseline_summary.csv",
                &[
                    ("gate_time_s", res.gate_time.to_string()),
                    ("fidelity_bell_aa_dd", res.fidelity.to_string()),
                    ("max_n_mean", res.max_n_mean.to_string()),
                    ("max_norm_drift", res.trajectory.max_norm_drift().to_string()),
                ],
            )?;
        }
        ScenarioName::Convergence => {
            let res = compute_convergence(r)?;
            let mut csv = Csv::create(&w.path("convergence.csv"), CONVERGENCE_HEADER)?;
            for s in &res.steps {
                csv.row(&[&s.n_max, &s.next_n_max, &s.max_change])?;
            }
            csv.finish()?;
            w.summary("convergence_summary.csv", &[("tolerance", res.tol.to_string()), ("chosen_n_max", opt_str(res.chosen))])?;
        }
    }
    let meta = w.path(&format!("{}.meta", r.scenario));
    let text = format!("# rfdress {} resolved configuration\n{}", env!("CARGO_PKG_VERSION"), r.to_config_text());
    fs::write(&meta, text)?;
    Ok(w.written)
}
