use std::io::Write;

use super::ode::{dop853_step, next_step, IntegratorConfig};
use super::systems::{c, FlowSystem, Thermostat};
use crate::error::{Error, Result};
use crate::geometry::{metric_norm, word_label, PhasePoint, SurfaceGroup};
use crate::thermostat::FieldFamily;

/// Counters of one integration run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub events: usize,
    /// Largest `| |v|_g - |v_0|_g |` over the stored samples.
    pub max_energy_drift: f64,
}

/// What the driver reports to its observer.
pub(crate) enum Sample<'a> {
    Step,
    Crossing(&'a [u8]),
}

/// Integrate `sys` from `y0` over `[0, t_end]`, reducing into the polygon at
/// every side crossing. The driver lands exactly on each time in `stops`.
pub(crate) fn run<const N: usize, S: FlowSystem<N>>(
    sys: &S,
    group: &SurfaceGroup,
    y0: [f64; N],
    t_end: f64,
    stops: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut dyn FnMut(f64, &[f64; N], Sample),
) -> Result<IntegratorStats> {
    let f = |y: &[f64; N]| sys.rhs(y);
    let mut stats = IntegratorStats::default();
    let mut t = 0.0;
    let mut y = y0;
    let mut h = cfg.initial_step.min(cfg.max_step);
    let mut next_stop = stops.iter().copied().filter(|&s| s > 0.0 && s < t_end).peekable();
    observe(0.0, &y, Sample::Step);
    if t_end <= 0.0 {
        return Ok(stats);
    }
    let outside = |y: &[f64; N]| !group.contains(c(y, 0));
    while t < t_end {
        if stats.steps + stats.rejected >= cfg.max_steps {
            return Err(Error::Integration { t, reason: "step budget exhausted".into() });
        }
        while next_stop.peek().is_some_and(|&s| s <= t) {
            next_stop.next();
        }
        let target = next_stop.peek().copied().unwrap_or(t_end);
        // snap onto a stop within rounding so that replaying a stored step
        // sequence reproduces it
        let (h_try, hits) = if t + h * (1.0 + 1e-9) >= target { (target - t, true) } else { (h, false) };
        let k1 = f(&y);
        let (y1, err) = dop853_step(&f, &y, &k1, h_try, N, cfg);
        if !err.is_finite() || y1.iter().any(|x| !x.is_finite()) {
            stats.rejected += 1;
            h = 0.25 * h_try;
            if h < 1e-14 {
                return Err(Error::Integration { t, reason: "non-finite state".into() });
            }
            continue;
        }
        if err > 1.0 {
            stats.rejected += 1;
            h = next_step(h_try, err);
            if h < 1e-14 {
                return Err(Error::Integration { t, reason: "step size underflow".into() });
            }
            continue;
        }
        stats.steps += 1;
        if !outside(&y1) {
            t = if hits { target } else { t + h_try };
            y = y1;
            observe(t, &y, Sample::Step);
            if !hits || h_try >= 0.5 * h {
                h = next_step(h_try, err).min(cfg.max_step);
            }
            continue;
        }
        // bisect the exit time by re-stepping from the last accepted state
        let (mut lo, mut hi) = (0.0, h_try);
        while hi - lo > cfg.event_tol {
            let mid = 0.5 * (lo + hi);
            if outside(&dop853_step(&f, &y, &k1, mid, N, cfg).0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut y_out = dop853_step(&f, &y, &k1, hi, N, cfg).0;
        let (_, word) = group.reduce_point(c(&y_out, 0))?;
        if word.is_empty() {
            return Err(Error::Integration { t: t + hi, reason: "crossing without reduction".into() });
        }
        for &j in &word {
            sys.transport(&mut y_out, group.generator(j));
        }
        t += hi;
        y = y_out;
        stats.events += 1;
        observe(t, &y, Sample::Crossing(&word));
    }
    Ok(stats)
}

/// A side crossing: the letters applied and the index of the sample taken
/// right after the reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub word: Vec<u8>,
    pub sample: usize,
}

/// Sampled orbit of the thermostat flow, kept inside the closed polygon.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub crossings: Vec<Crossing>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn initial(&self) -> PhasePoint {
        self.states[0]
    }

    pub fn final_state(&self) -> PhasePoint {
        *self.states.last().expect("trajectory has samples")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has samples")
    }

    /// All deck letters applied, in order of application.
    pub fn deck_word(&self) -> Vec<u8> {
        self.crossings.iter().flat_map(|c| c.word.iter().copied()).collect()
    }

    /// Deck letters applied before sample `k`.
    pub fn deck_word_at(&self, k: usize) -> Vec<u8> {
        self.crossings.iter().take_while(|c| c.sample <= k).flat_map(|c| c.word.iter().copied()).collect()
    }

    /// Final state in the universal cover, continuing the initial lift.
    pub fn unwrapped_final(&self, group: &SurfaceGroup) -> PhasePoint {
        group.unreduce(&self.final_state(), &self.deck_word())
    }

    /// Index of the sample at time `t`, if one was stored.
    pub fn sample_at(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t);
        (k < self.times.len() && self.times[k] == t).then_some(k)
    }

    /// Sample times other than the post-crossing samples.
    pub fn step_times(&self) -> Vec<f64> {
        let mut cross = self.crossings.iter().map(|c| c.sample).peekable();
        let mut out = Vec::with_capacity(self.times.len());
        for (k, &t) in self.times.iter().enumerate() {
            if cross.next_if_eq(&k).is_none() {
                out.push(t);
            }
        }
        out
    }

    /// CSV dump with header `t,x,y,v1,v2,deck_word`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,y,v1,v2,deck_word")?;
        let mut word: Vec<u8> = Vec::new();
        let mut next = self.crossings.iter().peekable();
        for (k, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            while let Some(c) = next.next_if(|c| c.sample == k) {
                word.extend_from_slice(&c.word);
            }
            writeln!(out, "{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}", s.p.re, s.p.im, s.v.re, s.v.im, word_label(&word))?;
        }
        Ok(())
    }

    pub(crate) fn push(&mut self, t: f64, y: &[f64], crossing: Option<&[u8]>) {
        let th = PhasePoint::new(c(y, 0), c(y, 2));
        let speed = metric_norm(th.p, th.v);
        let s0 = self.states.first().map_or(speed, |s| metric_norm(s.p, s.v));
        self.stats.max_energy_drift = self.stats.max_energy_drift.max((speed - s0).abs());
        if let Some(word) = crossing {
            self.crossings.push(Crossing { t, word: word.to_vec(), sample: self.times.len() });
        }
        self.times.push(t);
        self.states.push(th);
    }

    fn empty(lambda: f64) -> Self {
        Self { lambda, times: Vec::new(), states: Vec::new(), crossings: Vec::new(), stats: IntegratorStats::default() }
    }
}

pub(crate) fn check_start(group: &SurfaceGroup, theta: &PhasePoint) -> Result<()> {
    if !group.contains(theta.p) {
        return Err(Error::InvalidArgument(format!("initial point {} is outside the polygon", theta.p)));
    }
    if !(theta.speed() > 0.0 && theta.speed().is_finite()) {
        return Err(Error::InvalidArgument("initial velocity must be nonzero".into()));
    }
    Ok(())
}

/// Integrate the thermostat from `theta0` (inside the polygon) up to `t_end`.
pub fn integrate_flow(
    group: &SurfaceGroup,
    field: &FieldFamily,
    lambda: f64,
    theta0: &PhasePoint,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_flow_at(group, field, lambda, theta0, t_end, &[], cfg)
}

/// As [`integrate_flow`], additionally sampling exactly at `stops`.
pub fn integrate_flow_at(
    group: &SurfaceGroup,
    field: &FieldFamily,
    lambda: f64,
    theta0: &PhasePoint,
    t_end: f64,
    stops: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_start(group, theta0)?;
    let sys = Thermostat { field, lambda };
    let y0 = [theta0.p.re, theta0.p.im, theta0.v.re, theta0.v.im];
    let mut traj = Trajectory::empty(lambda);
    let stats = run(&sys, group, y0, t_end, stops, cfg, &mut |t, y, s| {
        traj.push(t, y, match s {
            Sample::Step => None,
            Sample::Crossing(w) => Some(w),
        })
    })?;
    let drift = traj.stats.max_energy_drift;
    traj.stats = IntegratorStats { max_energy_drift: drift, ..stats };
    Ok(traj)
}

/// Flip the velocity. The thermostat is reversible: following the flipped
/// state forward retraces the orbit backwards.
pub fn reversed(theta: &PhasePoint) -> PhasePoint {
    PhasePoint::new(theta.p, -theta.v)
}
