//! Front tracking: exact entropy solutions for a piecewise-linear flux and
//! rigidly translated weak solutions.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::{FluxEval, FluxFunction, PiecewiseLinearFunction};
use crate::piecewise::PiecewiseConstant1D;
use crate::riemann::{fan_from_nodes, Wave};

/// A front at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Front {
    pub position: f64,
    pub speed: f64,
    pub left_state: f64,
    pub right_state: f64,
}

/// The full history of one front: it is born at `(x0, t0)`, moves with
/// constant speed and dies at `died` (the end time if it survives).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackedFront {
    pub x0: f64,
    pub t0: f64,
    pub speed: f64,
    pub left: f64,
    pub right: f64,
    pub died: f64,
}

impl TrackedFront {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.speed * (t - self.t0)
    }
}

/// A time interval between consecutive events with the fronts alive on it,
/// ordered left to right.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub fronts: Vec<u32>,
}

/// The flux a solution is exact for.
#[derive(Clone, Debug)]
pub enum SolutionFlux {
    Lattice(PiecewiseLinearFunction),
    Exact(FluxFunction),
}

impl FluxEval for SolutionFlux {
    fn value(&self, u: f64) -> f64 {
        match self {
            SolutionFlux::Lattice(p) => p.eval(u),
            SolutionFlux::Exact(f) => f.eval(u),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrontTrackSolution {
    flux: SolutionFlux,
    delta: Option<f64>,
    t_end: f64,
    fronts: Vec<TrackedFront>,
    intervals: Vec<FrontInterval>,
    far_left: f64,
    far_right: f64,
    entropic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontTrackOptions {
    pub delta: f64,
    pub t_end: f64,
    /// Values that must be lattice nodes in addition to the initial data,
    /// typically every level `c` that will be tested.
    pub extra_nodes: Vec<f64>,
    pub max_events: usize,
}

impl FrontTrackOptions {
    pub fn new(delta: f64, t_end: f64) -> Self {
        Self {
            delta,
            t_end,
            extra_nodes: Vec::new(),
            max_events: 1_000_000,
        }
    }

    pub fn with_extra_nodes(mut self, nodes: impl IntoIterator<Item = f64>) -> Self {
        self.extra_nodes.extend(nodes);
        self
    }
}

/// Interpolates `f` on the `δ`-lattice over its range, refined by the
/// mandatory values. Lattice points closer than `1e-12` to a mandatory value
/// are replaced by it.
pub fn flux_grid(f: &FluxFunction, delta: f64, mandatory: &[f64]) -> Result<PiecewiseLinearFunction> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::argument(format!("flux grid spacing must be positive, got {delta}")));
    }
    for &v in mandatory {
        f.check("mandatory node", v)?;
    }
    let (lo, hi) = f.u_range();
    let count = (hi - lo) / delta;
    if count > 1e8 {
        return Err(Error::Resource(format!("flux grid with delta = {delta} needs {count:.0} nodes")));
    }
    let mut pts: Vec<(f64, bool)> = vec![(lo, false), (hi, false)];
    let k0 = (lo / delta).ceil() as i64;
    let k1 = (hi / delta).floor() as i64;
    pts.extend((k0..=k1).map(|k| (k as f64 * delta, false)));
    pts.extend(mandatory.iter().map(|&v| (v.clamp(lo, hi), true)));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut nodes: Vec<(f64, bool)> = Vec::with_capacity(pts.len());
    for (v, must) in pts {
        match nodes.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 * (1.0 + v.abs()) => {
                if must && !last.1 {
                    *last = (v, true);
                }
            }
            _ => nodes.push((v, must)),
        }
    }
    let knots: Vec<f64> = nodes.into_iter().map(|(v, _)| v).collect();
    let values = knots.iter().map(|&v| f.eval(v)).collect();
    PiecewiseLinearFunction::new(knots, values)
}

/// Riemann fan of the lattice flux between two lattice nodes.
fn lattice_fan(lattice: &PiecewiseLinearFunction, u_left: f64, u_right: f64) -> Result<Vec<Wave>> {
    let node = |v: f64| {
        lattice
            .knot_index(v)
            .ok_or_else(|| Error::Internal(format!("state {v} is not a lattice node")))
    };
    let (i, j) = (node(u_left)?, node(u_right)?);
    let (a, b) = (i.min(j), i.max(j));
    let xs = &lattice.knots()[a..=b];
    let ys = &lattice.values()[a..=b];
    let (ul, ur) = (lattice.knots()[i], lattice.knots()[j]);
    // Nearly collinear hull pieces give neighbours whose speeds differ by
    // round-off in either direction; they would collide again at once.
    let mut waves: Vec<Wave> = Vec::new();
    for w in fan_from_nodes(xs, ys, ul, ur).waves {
        match waves.last_mut() {
            Some(prev) if w.speed - prev.speed <= 1e-12 * (1.0 + prev.speed.abs()) => {
                prev.right = w.right;
                prev.speed = (lattice.eval(prev.right) - lattice.eval(prev.left)) / (prev.right - prev.left);
            }
            _ => waves.push(w),
        }
    }
    Ok(waves)
}

pub fn front_track(
    u0: &PiecewiseConstant1D,
    f: &FluxFunction,
    delta: f64,
    t_end: f64,
) -> Result<FrontTrackSolution> {
    front_track_with(u0, f, &FrontTrackOptions::new(delta, t_end))
}

pub fn front_track_with(
    u0: &PiecewiseConstant1D,
    f: &FluxFunction,
    opts: &FrontTrackOptions,
) -> Result<FrontTrackSolution> {
    let t_end = opts.t_end;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::argument(format!("end time must be positive, got {t_end}")));
    }
    for &v in u0.values() {
        f.check("initial value", v)?;
    }
    let mut mandatory: Vec<f64> = u0.values().to_vec();
    mandatory.extend(&opts.extra_nodes);
    let lattice = flux_grid(f, opts.delta, &mandatory)?;
    let snap = |v: f64| lattice.knot_index(v).map(|i| lattice.knots()[i]).unwrap_or(v);

    let mut fronts: Vec<TrackedFront> = Vec::new();
    let mut active: Vec<u32> = Vec::new();
    let values = u0.values();
    for (k, &x) in u0.breakpoints().iter().enumerate() {
        for w in lattice_fan(&lattice, values[k], values[k + 1])? {
            active.push(fronts.len() as u32);
            fronts.push(TrackedFront {
                x0: x,
                t0: 0.0,
                speed: w.speed,
                left: w.left,
                right: w.right,
                died: t_end,
            });
        }
    }

    let t_tol = 1e-12 * t_end;
    let mut intervals = vec![FrontInterval {
        t_start: 0.0,
        t_end,
        fronts: active.clone(),
    }];
    let mut t_now = 0.0;
    let mut events = 0usize;
    let mut hits: Vec<f64> = Vec::new();
    loop {
        hits.clear();
        hits.extend(active.windows(2).map(|w| {
            let (a, b) = (&fronts[w[0] as usize], &fronts[w[1] as usize]);
            if a.speed > b.speed {
                let gap = (b.position(t_now) - a.position(t_now)).max(0.0);
                t_now + gap / (a.speed - b.speed)
            } else {
                f64::INFINITY
            }
        }));
        let t_hit = hits.iter().copied().fold(f64::INFINITY, f64::min);
        if !(t_hit < t_end) {
            break;
        }
        let mut next: Vec<u32> = Vec::with_capacity(active.len());
        let mut i = 0;
        while i < active.len() {
            if i + 1 < active.len() && hits[i] <= t_hit + t_tol {
                let mut j = i + 1;
                while j + 1 < active.len() && hits[j] <= t_hit + t_tol {
                    j += 1;
                }
                let members = &active[i..=j];
                let x = members
                    .iter()
                    .map(|&id| fronts[id as usize].position(t_hit))
                    .sum::<f64>()
                    / members.len() as f64;
                let left = fronts[members[0] as usize].left;
                let right = fronts[*members.last().unwrap() as usize].right;
                for &id in members {
                    fronts[id as usize].died = t_hit;
                }
                for w in lattice_fan(&lattice, snap(left), snap(right))? {
                    next.push(fronts.len() as u32);
                    fronts.push(TrackedFront {
                        x0: x,
                        t0: t_hit,
                        speed: w.speed,
                        left: w.left,
                        right: w.right,
                        died: t_end,
                    });
                }
                events += 1;
                if events > opts.max_events {
                    return Err(Error::Resource(format!(
                        "front tracking with delta = {} exceeded {} events before t = {t_hit}",
                        opts.delta, opts.max_events
                    )));
                }
                i = j + 1;
            } else {
                next.push(active[i]);
                i += 1;
            }
        }
        active = next;
        intervals.last_mut().unwrap().t_end = t_hit;
        intervals.push(FrontInterval {
            t_start: t_hit,
            t_end,
            fronts: active.clone(),
        });
        t_now = t_hit;
    }

    Ok(FrontTrackSolution {
        flux: SolutionFlux::Lattice(lattice),
        delta: Some(opts.delta),
        t_end,
        fronts,
        intervals,
        far_left: values[0],
        far_right: *values.last().unwrap(),
        entropic: true,
    })
}

/// The weak solution `u(x, t) = u0(x − speed·t)`. Every jump of `u0` must
/// satisfy the Rankine–Hugoniot relation for `f` with the given speed.
pub fn prescribe_traveling_wave(
    u0: &PiecewiseConstant1D,
    f: &FluxFunction,
    speed: f64,
    t_end: f64,
) -> Result<FrontTrackSolution> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::argument(format!("end time must be positive, got {t_end}")));
    }
    let values = u0.values();
    for &v in values {
        f.check("initial value", v)?;
    }
    let mut fronts = Vec::new();
    for (k, &x) in u0.breakpoints().iter().enumerate() {
        let (left, right) = (values[k], values[k + 1]);
        if left == right {
            continue;
        }
        let rh_speed = f.slope(right, left);
        if (rh_speed - speed).abs() > 1e-10 * (1.0 + speed.abs()) {
            return Err(Error::RankineHugoniot {
                position: x,
                left,
                right,
                rh_speed,
                speed,
            });
        }
        fronts.push(TrackedFront {
            x0: x,
            t0: 0.0,
            speed,
            left,
            right,
            died: t_end,
        });
    }
    Ok(FrontTrackSolution {
        flux: SolutionFlux::Exact(f.clone()),
        delta: None,
        t_end,
        intervals: vec![FrontInterval {
            t_start: 0.0,
            t_end,
            fronts: (0..fronts.len() as u32).collect(),
        }],
        fronts,
        far_left: values[0],
        far_right: *values.last().unwrap(),
        entropic: false,
    })
}

impl FrontTrackSolution {
    pub fn flux(&self) -> &SolutionFlux {
        &self.flux
    }

    /// The lattice spacing, absent for prescribed solutions.
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn entropic(&self) -> bool {
        self.entropic
    }

    pub fn far_states(&self) -> (f64, f64) {
        (self.far_left, self.far_right)
    }

    pub fn tracked_fronts(&self) -> &[TrackedFront] {
        &self.fronts
    }

    pub fn intervals(&self) -> &[FrontInterval] {
        &self.intervals
    }

    /// Collision instants in increasing order.
    pub fn event_times(&self) -> Vec<f64> {
        self.intervals[1..].iter().map(|iv| iv.t_start).collect()
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && t >= 0.0 && t <= self.t_end * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.t_end,
            })
        }
    }

    /// Index of the interval governing time `t`.
    pub(crate) fn interval_index(&self, t: f64) -> usize {
        self.intervals
            .partition_point(|iv| iv.t_start <= t)
            .saturating_sub(1)
    }

    pub(crate) fn front(&self, id: u32) -> &TrackedFront {
        &self.fronts[id as usize]
    }

    /// State of the region `slot` (0 = left of every front) of an interval.
    pub(crate) fn slot_state(&self, interval: usize, slot: usize) -> f64 {
        let ids = &self.intervals[interval].fronts;
        if slot == 0 {
            ids.first().map_or(self.far_left, |&id| self.front(id).left)
        } else {
            self.front(ids[slot - 1]).right
        }
    }

    pub fn fronts_at(&self, t: f64) -> Result<Vec<Front>> {
        self.check_time(t)?;
        let iv = &self.intervals[self.interval_index(t)];
        Ok(iv
            .fronts
            .iter()
            .map(|&id| {
                let r = self.front(id);
                Front {
                    position: r.position(t),
                    speed: r.speed,
                    left_state: r.left,
                    right_state: r.right,
                }
            })
            .collect())
    }

    /// One-sided values `(u(x−, t), u(x+, t))`.
    pub fn evaluate(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        let k = self.interval_index(t);
        let ids = &self.intervals[k].fronts;
        let tol = 1e-12 * (1.0 + x.abs());
        let g0 = ids.partition_point(|&id| self.front(id).position(t) < x - tol);
        let g1 = ids.partition_point(|&id| self.front(id).position(t) <= x + tol);
        Ok((self.slot_state(k, g0), self.slot_state(k, g1)))
    }

    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstant1D> {
        let fronts = self.fronts_at(t)?;
        Ok(PiecewiseConstant1D::from_jumps(
            self.far_left,
            fronts.iter().map(|f| (f.position, f.left_state, f.right_state)),
        ))
    }

    /// Writes rows `t, x_breakpoint, u_left, u_right` for each time.
    pub fn write_snapshot_csv<W: Write>(&self, times: &[f64], out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Internal(format!("writing snapshot: {e}"));
        writeln!(out, "t,x_breakpoint,u_left,u_right").map_err(io)?;
        for &t in times {
            let snap = self.snapshot(t)?;
            let v = snap.values();
            for (i, x) in snap.breakpoints().iter().enumerate() {
                writeln!(out, "{t:.16e},{x:.16e},{:.16e},{:.16e}", v[i], v[i + 1]).map_err(io)?;
            }
        }
        Ok(())
    }
}
