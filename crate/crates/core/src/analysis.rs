//! Parity scans, sinusoid and decay fits, and the Bell / qutrit fidelity
//! estimators built from populations and parity contrasts.

use std::f64::consts::PI;

use crate::dynamics::ideal_pulse;
use crate::error::{Error, Result};
use crate::hilbert::{InternalState, Pair, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct ParityScan {
    pub pair: Pair,
    pub thetas: Vec<f64>,
    pub parities: Vec<f64>,
}

/// Parity `⟨Π_i z_i⟩` with `z = +1` for the pair's upper level and `−1` for
/// its lower level and the spectator (which stays dark on readout).
pub fn parity(state: &StateVector, pair: Pair) -> f64 {
    let space = state.space();
    let upper = pair.upper();
    state
        .internal_populations()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (levels, _) = space.decompose(k * space.fock_dim());
            let flips = levels.iter().filter(|&&l| l != upper).count();
            if flips % 2 == 0 {
                *p
            } else {
                -*p
            }
        })
        .sum()
}

/// For each θ, applies a π/2 pulse of phase θ on `pair` to every ion and
/// records the parity.
pub fn parity_scan(state: &StateVector, pair: Pair, thetas: &[f64]) -> Result<ParityScan> {
    let ions: Vec<usize> = (0..state.space().n_ions()).collect();
    let parities = thetas
        .iter()
        .map(|&th| ideal_pulse(state, pair, PI / 2.0, th, &ions).map(|s| parity(&s, pair)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParityScan { pair, thetas: thetas.to_vec(), parities })
}

/// `A·sin(2θ + φ) + C` with `A ≥ 0`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    /// Euclidean norm of the residuals.
    pub residual: f64,
    /// Set when the scan has no variation; amplitude is then zero.
    pub degenerate: bool,
}

impl SinusoidFit {
    pub fn eval(&self, theta: f64) -> f64 {
        self.amplitude * (2.0 * theta + self.phase).sin() + self.offset
    }
}

/// Solves a small symmetric positive definite system by Gaussian elimination
/// with partial pivoting. Returns `None` if it is numerically singular.
fn solve_small<const N: usize>(mut m: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for k in col..N {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

/// Least-squares fit at frequency 2θ. Writing the model as
/// `p·sin 2θ + q·cos 2θ + C` makes it linear, so the global optimum is
/// found directly; `A = √(p² + q²)`, `φ = atan2(q, p)`.
pub fn fit_sinusoid(scan: &ParityScan) -> Result<SinusoidFit> {
    let n = scan.thetas.len();
    if n != scan.parities.len() {
        return Err(Error::InvalidScan(format!("{n} angles but {} parities", scan.parities.len())));
    }
    if n < 6 {
        return Err(Error::InvalidScan(format!("need at least 6 points, got {n}")));
    }
    if scan.thetas.iter().chain(&scan.parities).any(|x| !x.is_finite()) {
        return Err(Error::InvalidScan("non-finite value".into()));
    }
    let lo = scan.thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scan.thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // n samples cover (hi − lo)·n/(n − 1) of the θ axis
    let coverage = (hi - lo) * n as f64 / (n - 1) as f64;
    if coverage < PI * (1.0 - 1e-9) {
        return Err(Error::InvalidScan("angles must cover one period of 2θ".into()));
    }

    let ys = &scan.parities;
    let mean = ys.iter().sum::<f64>() / n as f64;
    let spread = ys.iter().fold(0.0f64, |m, y| m.max((y - mean).abs()));
    if spread < 1e-12 {
        let residual = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>().sqrt();
        return Ok(SinusoidFit { amplitude: 0.0, phase: 0.0, offset: mean, residual, degenerate: true });
    }

    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&th, &y) in scan.thetas.iter().zip(ys) {
        let row = [(2.0 * th).sin(), (2.0 * th).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * y;
        }
    }
    let [p, q, c] = solve_small(ata, aty).ok_or_else(|| Error::InvalidScan("ill-conditioned angle grid".into()))?;
    let fit = SinusoidFit { amplitude: p.hypot(q), phase: q.atan2(p), offset: c, residual: 0.0, degenerate: false };
    let residual = scan.thetas.iter().zip(ys).map(|(&th, &y)| (y - fit.eval(th)).powi(2)).sum::<f64>().sqrt();
    Ok(SinusoidFit { residual, ..fit })
}

/// Estimator output clipped to `[0, 1]`; `clipped` records whether the raw
/// value was outside.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub raw: f64,
    pub clipped: bool,
}

impl Estimate {
    fn from_raw(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self { value, raw, clipped: value != raw }
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::EstimatorInput { name, value: v })
    }
}

/// Neumaier-compensated sum, so short sums come out correctly rounded
/// rather than depending on the order of the terms.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// `(P↑↑ + P↓↓)/2 + A/2`
pub fn bell_fidelity(p_uu: f64, p_dd: f64, amplitude: f64) -> Result<Estimate> {
    check_unit("p_uu", p_uu)?;
    check_unit("p_dd", p_dd)?;
    check_unit("amplitude", amplitude)?;
    Ok(Estimate::from_raw(compensated_sum(&[p_uu, p_dd, amplitude]) / 2.0))
}

/// `Σ_i ½(D_i + A_i/2)`
pub fn qutrit_fidelity(d: [f64; 3], a: [f64; 3]) -> Result<Estimate> {
    for v in d {
        check_unit("d", v)?;
    }
    for v in a {
        check_unit("a", v)?;
    }
    let terms = [d[0], d[1], d[2], a[0] / 2.0, a[1] / 2.0, a[2] / 2.0];
    Ok(Estimate::from_raw(compensated_sum(&terms) / 2.0))
}

/// Internal-state fidelity `⟨t|ρ_int|t⟩` with the motion traced out.
pub fn state_fidelity(state: &StateVector, target: &InternalState) -> Result<f64> {
    state.internal_fidelity(target)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    Gaussian,
}

impl DecayModel {
    pub fn power(self) -> f64 {
        match self {
            DecayModel::Exponential => 1.0,
            DecayModel::Gaussian => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Gaussian => "gaussian",
        }
    }
}

/// `F(τ) = F0·exp(−(τ/T)^p) + F∞`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    /// 1/e time in seconds; `+∞` when `unbounded` is set.
    pub coherence_time: f64,
    /// Standard error of `coherence_time` (NaN if not estimable).
    pub stderr: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual: f64,
    /// No resolvable decay: the data are flat, rising, or still decaying
    /// slower than the longest time the grid can distinguish.
    pub unbounded: bool,
}

/// Data whose total variation is below this are treated as not decaying.
pub const MIN_DECAY_CONTRAST: f64 = 1e-3;

/// For fixed `T`, the best `(F0, F∞)` and the residual sum of squares.
fn profile(taus: &[f64], ys: &[f64], t: f64, p: f64) -> (f64, f64, f64) {
    let n = taus.len() as f64;
    let g: Vec<f64> = taus.iter().map(|&tau| (-(tau / t).powf(p)).exp()).collect();
    let sg: f64 = g.iter().sum();
    let sgg: f64 = g.iter().map(|x| x * x).sum();
    let sy: f64 = ys.iter().sum();
    let sgy: f64 = g.iter().zip(ys).map(|(a, b)| a * b).sum();
    let det = n * sgg - sg * sg;
    let (f0, finf) = if det.abs() < 1e-14 * n * sgg.max(1e-300) {
        (0.0, sy / n)
    } else {
        ((n * sgy - sg * sy) / det, (sgg * sy - sg * sgy) / det)
    };
    let ssr = g.iter().zip(ys).map(|(gi, y)| (y - f0 * gi - finf).powi(2)).sum();
    (f0, finf, ssr)
}

pub fn fit_decay(taus: &[f64], fidelities: &[f64], model: DecayModel) -> Result<DecayFit> {
    let n = taus.len();
    if n != fidelities.len() {
        return Err(Error::InvalidScan(format!("{n} delays but {} fidelities", fidelities.len())));
    }
    if n < 4 {
        return Err(Error::InvalidScan(format!("need at least 4 points, got {n}")));
    }
    if taus.iter().chain(fidelities).any(|x| !x.is_finite()) {
        return Err(Error::InvalidScan("non-finite value".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) || taus[0] < 0.0 {
        return Err(Error::InvalidScan("delays must be non-negative and strictly increasing".into()));
    }
    let p = model.power();
    let hi = fidelities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = fidelities.iter().sum::<f64>() / n as f64;
    let flat = |residual: f64| DecayFit {
        model,
        coherence_time: f64::INFINITY,
        stderr: f64::NAN,
        amplitude: 0.0,
        offset: mean,
        residual,
        unbounded: true,
    };
    if hi - lo < MIN_DECAY_CONTRAST {
        let r = fidelities.iter().map(|y| (y - mean).powi(2)).sum::<f64>().sqrt();
        return Ok(flat(r));
    }

    // search ln T over a bracket wide around the sampled window
    let span = taus[n - 1];
    let min_gap = taus.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (a, b) = ((min_gap * 1e-2).ln(), (span * 1e3).ln());
    let ssr_at = |x: f64| profile(taus, fidelities, x.exp(), p).2;
    const GRID: usize = 600;
    let xs: Vec<f64> = (0..=GRID).map(|k| a + (b - a) * k as f64 / GRID as f64).collect();
    let best = (0..=GRID).min_by(|&i, &j| ssr_at(xs[i]).total_cmp(&ssr_at(xs[j]))).expect("non-empty grid");
    let (mut l, mut r) = (xs[best.saturating_sub(1)], xs[(best + 1).min(GRID)]);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = r - gr * (r - l);
    let mut d = l + gr * (r - l);
    let (mut fc, mut fd) = (ssr_at(c), ssr_at(d));
    for _ in 0..200 {
        if (r - l).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            r = d;
            d = c;
            fd = fc;
            c = r - gr * (r - l);
            fc = ssr_at(c);
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + gr * (r - l);
            fd = ssr_at(d);
        }
    }
    let x = 0.5 * (l + r);
    let t = x.exp();
    let (f0, finf, ssr) = profile(taus, fidelities, t, p);
    if best == GRID || f0 <= 0.0 {
        return Ok(flat(ssr.sqrt()));
    }

    // curvature of the profiled SSR in T gives the standard error
    let hstep = 1e-4 * t;
    let s_plus = profile(taus, fidelities, t + hstep, p).2;
    let s_minus = profile(taus, fidelities, t - hstep, p).2;
    let curv = (s_plus - 2.0 * ssr + s_minus) / (hstep * hstep);
    let stderr = if n > 3 && curv > 0.0 { (2.0 * (ssr / (n - 3) as f64) / curv).sqrt() } else { f64::NAN };

    Ok(DecayFit {
        model,
        coherence_time: t,
        stderr,
        amplitude: f0,
        offset: finf,
        residual: ssr.sqrt(),
        unbounded: false,
    })
}

/// Index of the first running maximum that is followed by a fall of at
/// least `drop`. Falls back to the global maximum when no such fall occurs.
pub fn first_prominent_max(values: &[f64], drop: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if v > values[b] => best = Some(i),
            Some(b) if v <= values[b] - drop => return Some(b),
            _ => {}
        }
    }
    best
}

/// Sample inside `[t_lo, t_hi]` where the given population curves are
/// closest together; returns the index and the spread `max − min` there.
pub fn equal_population_time(times: &[f64], curves: &[&[f64]], t_lo: f64, t_hi: f64) -> Option<(usize, f64)> {
    times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= t_lo && t <= t_hi)
        .map(|(i, _)| {
            let vals = curves.iter().map(|c| c[i]);
            let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.fold(f64::INFINITY, f64::min);
            (i, max - min)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}
