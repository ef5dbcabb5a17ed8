//! Filippov particle paths of `a_c(x, t) = A(u(x, t), c)` over step-function
//! solutions, extremal selections and flow maps.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxFunction;
use crate::fronttrack::FrontTrackSolution;
use crate::godunov::GridSolution;
use crate::piecewise::PiecewiseConstant1D;

/// Default number of uniform samples stored alongside path events.
pub const DEFAULT_PATH_SAMPLES: usize = 512;

#[derive(Clone, Copy, Debug)]
pub enum FieldSource<'a> {
    Fronts(&'a FrontTrackSolution),
    Grid(&'a GridSolution),
}

impl FieldSource<'_> {
    pub fn t_end(&self) -> f64 {
        match self {
            FieldSource::Fronts(s) => s.t_end(),
            FieldSource::Grid(g) => g.t_end(),
        }
    }

    /// The solution at time `t`; grid sources give the latest level not
    /// after `t`.
    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstant1D> {
        match self {
            FieldSource::Fronts(s) => s.snapshot(t),
            FieldSource::Grid(g) => g.snapshot(t),
        }
    }
}

/// The velocity field `a_c` of a solution for the level `c`.
#[derive(Clone, Debug)]
pub struct VelocityField<'a> {
    source: FieldSource<'a>,
    flux: FluxFunction,
    c: f64,
    state_range: (f64, f64),
    speed_bound: f64,
}

impl<'a> VelocityField<'a> {
    pub fn over_fronts(sol: &'a FrontTrackSolution, f: &FluxFunction, c: f64) -> Result<Self> {
        let (l, r) = sol.far_states();
        let range = sol
            .tracked_fronts()
            .iter()
            .flat_map(|fr| [fr.left, fr.right])
            .fold((l.min(r), l.max(r)), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::build(FieldSource::Fronts(sol), f, c, range)
    }

    pub fn over_grid(grid: &'a GridSolution, f: &FluxFunction, c: f64) -> Result<Self> {
        let range = (0..grid.times().len())
            .flat_map(|k| grid.level(k).iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::build(FieldSource::Grid(grid), f, c, range)
    }

    fn build(source: FieldSource<'a>, f: &FluxFunction, c: f64, range: (f64, f64)) -> Result<Self> {
        f.check("c", c)?;
        f.check("solution state", range.0)?;
        f.check("solution state", range.1)?;
        let (lo, hi) = (range.0.min(c), range.1.max(c));
        Ok(Self {
            source,
            flux: f.clone(),
            c,
            state_range: range,
            speed_bound: f.max_speed(lo, hi),
        })
    }

    pub fn source(&self) -> FieldSource<'a> {
        self.source
    }

    pub fn flux(&self) -> &FluxFunction {
        &self.flux
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Smallest and largest state taken by the solution.
    pub fn state_range(&self) -> (f64, f64) {
        self.state_range
    }

    /// `max |f'|` over the hull of the solution range and `c`.
    pub fn speed_bound(&self) -> f64 {
        self.speed_bound
    }

    pub fn t_end(&self) -> f64 {
        self.source.t_end()
    }

    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstant1D> {
        self.source.snapshot(t)
    }

    /// One-sided states `(u(x−, t), u(x+, t))`. Grid sources report the
    /// latest level not after `t`.
    pub fn state(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        match self.source {
            FieldSource::Fronts(s) => s.evaluate(x, t),
            FieldSource::Grid(g) => Ok(g.snapshot(t)?.limits(x)),
        }
    }

    /// `(a_c(x−, t), a_c(x+, t))`.
    pub fn value(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let (l, r) = self.state(x, t)?;
        Ok((self.a(l), self.a(r)))
    }

    pub(crate) fn a(&self, u: f64) -> f64 {
        self.flux.slope(u, self.c)
    }
}

/// Tie-breaking rule at points where several Filippov solutions may leave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Selection {
    /// Prefer riding compressive fronts, then fronts strictly inside their
    /// Filippov interval, then free flight, then marginal attachments.
    Default,
    /// Leftmost admissible continuation.
    Lower,
    /// Rightmost admissible continuation.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    Free,
    Attached,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Free => "free",
            SegmentKind::Attached => "attached",
        }
    }
}

/// Linear motion on `[t0, t1]`. Free segments carry the region state on
/// both sides; attached segments carry the front's states and its index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSegment {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub velocity: f64,
    pub kind: SegmentKind,
    pub left_state: f64,
    pub right_state: f64,
    pub front: Option<usize>,
}

impl PathSegment {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.velocity * (t - self.t0)
    }

    pub fn x1(&self) -> f64 {
        self.position(self.t1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticlePath {
    pub start: (f64, f64),
    pub segments: Vec<PathSegment>,
    /// Decisions where more than one continuation was admissible.
    pub ambiguous_decisions: usize,
    /// Decisions that attached to a front whose speed sat on an endpoint of
    /// its Filippov interval while another continuation was admissible.
    pub marginal_decisions: usize,
}

impl ParticlePath {
    pub fn start_time(&self) -> f64 {
        self.start.1
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.start.1, |s| s.t1)
    }

    pub fn end_position(&self) -> f64 {
        self.segments.last().map_or(self.start.0, |s| s.x1())
    }

    /// `x_t`, clamped to the traced time range.
    pub fn position(&self, t: f64) -> f64 {
        if t <= self.start.1 || self.segments.is_empty() {
            return self.start.0;
        }
        let i = self.segments.partition_point(|s| s.t1 < t);
        match self.segments.get(i) {
            Some(s) => s.position(t.max(s.t0)),
            None => self.end_position(),
        }
    }

    /// The segment in force at time `t`.
    pub fn segment_at(&self, t: f64) -> Option<&PathSegment> {
        let i = self.segments.partition_point(|s| s.t1 <= t);
        self.segments.get(i.min(self.segments.len().saturating_sub(1)))
    }

    pub fn max_speed(&self) -> f64 {
        self.segments.iter().map(|s| s.velocity.abs()).fold(0.0, f64::max)
    }

    /// `(t, x)` at every segment boundary and at `n` uniform times.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let (s, e) = (self.start_time(), self.end_time());
        let mut ts: Vec<f64> = self.segments.iter().map(|seg| seg.t0).collect();
        ts.push(e);
        if n >= 2 {
            ts.extend((0..n).map(|i| s + (e - s) * i as f64 / (n - 1) as f64));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.into_iter().map(|t| (t, self.position(t))).collect()
    }
}

fn tie(speed: f64) -> f64 {
    if speed.is_finite() {
        1e-11 * (1.0 + speed.abs())
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Compressive,
    Branching,
    Free,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Sector(usize),
    Front(usize),
}

struct Decision {
    choice: Choice,
    ambiguous: bool,
    marginal: bool,
}

/// Chooses how a particle leaves a point where fronts with nondecreasing
/// `speeds` separate `states` (`speeds.len() + 1` of them).
fn decide(states: &[f64], speeds: &[f64], a: impl Fn(f64) -> f64, sel: Selection) -> Decision {
    let m = speeds.len();
    let mut options: Vec<(Choice, Class, bool)> = Vec::with_capacity(2 * m + 1);
    let mut fallback = (Choice::Sector(0), f64::INFINITY);
    for j in 0..=m {
        let v = a(states[j]);
        let lower = if j == 0 { f64::NEG_INFINITY } else { speeds[j - 1] };
        let upper = if j == m { f64::INFINITY } else { speeds[j] };
        if v > lower + tie(lower) && v < upper - tie(upper) {
            options.push((Choice::Sector(j), Class::Free, false));
        }
        if j == m {
            break;
        }
        let sigma = speeds[j];
        let (am, ap) = (v, a(states[j + 1]));
        let (lo, hi) = (am.min(ap), am.max(ap));
        let eps = tie(sigma);
        let miss = (lo - sigma).max(sigma - hi);
        if miss < fallback.1 {
            fallback = (Choice::Front(j), miss);
        }
        if miss > eps {
            continue;
        }
        let endpoint = (sigma - lo).abs() <= eps || (sigma - hi).abs() <= eps;
        let class = if ap - eps <= sigma && sigma <= am + eps {
            Class::Compressive
        } else if !endpoint {
            Class::Branching
        } else {
            Class::Marginal
        };
        options.push((Choice::Front(j), class, endpoint));
    }
    if options.is_empty() {
        return Decision {
            choice: fallback.0,
            ambiguous: false,
            marginal: false,
        };
    }
    let pick = match sel {
        Selection::Lower => options[0],
        Selection::Upper => options[options.len() - 1],
        Selection::Default => *options.iter().min_by_key(|o| o.1).unwrap(),
    };
    let ambiguous = options.len() > 1;
    Decision {
        choice: pick.0,
        ambiguous,
        marginal: ambiguous && matches!(pick.0, Choice::Front(_)) && pick.2,
    }
}

fn check_span(start_t: f64, t_end: f64, horizon: f64) -> Result<()> {
    if !(start_t >= 0.0 && start_t < t_end) {
        return Err(Error::argument(format!(
            "start time {start_t} must lie in [0, {t_end})"
        )));
    }
    if t_end > horizon * (1.0 + 1e-12) {
        return Err(Error::Domain {
            what: "t_end",
            value: t_end,
            lo: 0.0,
            hi: horizon,
        });
    }
    Ok(())
}

/// Traces the Filippov path from `start = (x, s)` up to `t_end` with the
/// default selection.
pub fn trace(field: &VelocityField, start: (f64, f64), t_end: f64) -> Result<ParticlePath> {
    trace_with(field, start, t_end, Selection::Default)
}

pub fn trace_with(
    field: &VelocityField,
    start: (f64, f64),
    t_end: f64,
    sel: Selection,
) -> Result<ParticlePath> {
    match field.source {
        FieldSource::Fronts(sol) => Tracer::new(field, start).run_fronts(sol, t_end, sel),
        FieldSource::Grid(grid) => Tracer::new(field, start).run_grid(grid, t_end, 1, sel),
    }
}

/// The lower and upper extremal paths from `start`.
pub fn trace_extremal(
    field: &VelocityField,
    start: (f64, f64),
    t_end: f64,
) -> Result<(ParticlePath, ParticlePath)> {
    Ok((
        trace_with(field, start, t_end, Selection::Lower)?,
        trace_with(field, start, t_end, Selection::Upper)?,
    ))
}

/// Traces over a grid field, splitting each time step into `substeps`
/// slabs whose states blend linearly between the bounding levels.
pub fn trace_grid(
    field: &VelocityField,
    start: (f64, f64),
    t_end: f64,
    substeps: usize,
) -> Result<ParticlePath> {
    trace_grid_with(field, start, t_end, substeps, Selection::Default)
}

pub fn trace_grid_with(
    field: &VelocityField,
    start: (f64, f64),
    t_end: f64,
    substeps: usize,
    sel: Selection,
) -> Result<ParticlePath> {
    match field.source {
        FieldSource::Grid(grid) => {
            if substeps == 0 {
                return Err(Error::argument("substeps must be at least 1"));
            }
            Tracer::new(field, start).run_grid(grid, t_end, substeps, sel)
        }
        FieldSource::Fronts(_) => Err(Error::argument("trace_grid needs a grid velocity field")),
    }
}

enum Mode {
    Free(usize),
    Attached(usize),
}

struct Tracer<'f, 'a> {
    field: &'f VelocityField<'a>,
    path: ParticlePath,
    t: f64,
    p: f64,
}

impl<'f, 'a> Tracer<'f, 'a> {
    fn new(field: &'f VelocityField<'a>, start: (f64, f64)) -> Self {
        Self {
            field,
            path: ParticlePath {
                start,
                segments: Vec::new(),
                ambiguous_decisions: 0,
                marginal_decisions: 0,
            },
            t: start.1,
            p: start.0,
        }
    }

    fn push(&mut self, t1: f64, velocity: f64, kind: SegmentKind, states: (f64, f64), front: Option<usize>) {
        if t1 > self.t {
            self.path.segments.push(PathSegment {
                t0: self.t,
                t1,
                x0: self.p,
                velocity,
                kind,
                left_state: states.0,
                right_state: states.1,
                front,
            });
        }
    }

    fn record(&mut self, d: &Decision) {
        self.path.ambiguous_decisions += d.ambiguous as usize;
        self.path.marginal_decisions += d.marginal as usize;
    }

    fn locate_fronts(&mut self, sol: &FrontTrackSolution, k: usize, sel: Selection) -> Mode {
        let ids = &sol.intervals()[k].fronts;
        let (p, t) = (self.p, self.t);
        let tol = 1e-10 * (1.0 + p.abs());
        let g0 = ids.partition_point(|&id| sol.front(id).position(t) < p - tol);
        let g1 = ids.partition_point(|&id| sol.front(id).position(t) <= p + tol);
        if g0 == g1 {
            return Mode::Free(g0);
        }
        let states: Vec<f64> = std::iter::once(sol.slot_state(k, g0))
            .chain(ids[g0..g1].iter().map(|&id| sol.front(id).right))
            .collect();
        let speeds: Vec<f64> = ids[g0..g1].iter().map(|&id| sol.front(id).speed).collect();
        let d = decide(&states, &speeds, |u| self.field.a(u), sel);
        self.record(&d);
        match d.choice {
            Choice::Sector(j) => Mode::Free(g0 + j),
            Choice::Front(j) => {
                self.p = sol.front(ids[g0 + j]).position(t);
                Mode::Attached(g0 + j)
            }
        }
    }

    fn run_fronts(mut self, sol: &FrontTrackSolution, t_end: f64, sel: Selection) -> Result<ParticlePath> {
        check_span(self.t, t_end, sol.t_end())?;
        let intervals = sol.intervals();
        let mut k = sol.interval_index(self.t);
        let mut mode = self.locate_fronts(sol, k, sel);
        let budget = 4 * (sol.tracked_fronts().len() + intervals.len()) + 64;
        let mut steps = 0;
        let tiny = 1e-13 * (1.0 + t_end);
        loop {
            steps += 1;
            if steps > budget {
                return Err(Error::Internal(format!(
                    "particle from {:?} made no progress at t = {}",
                    self.path.start, self.t
                )));
            }
            let iv = &intervals[k];
            let te = iv.t_end.min(t_end);
            match mode {
                Mode::Attached(idx) => {
                    let id = iv.fronts[idx];
                    let fr = sol.front(id);
                    self.push(te, fr.speed, SegmentKind::Attached, (fr.left, fr.right), Some(id as usize));
                    self.p = fr.position(te);
                    self.t = te;
                }
                Mode::Free(slot) => {
                    let u = sol.slot_state(k, slot);
                    let v = self.field.a(u);
                    let mut hit: Option<(f64, usize)> = None;
                    if slot > 0 {
                        let fr = sol.front(iv.fronts[slot - 1]);
                        if fr.speed > v + tie(fr.speed) {
                            let tau = (self.p - fr.position(self.t)).max(0.0) / (fr.speed - v);
                            hit = Some((self.t + tau, slot - 1));
                        }
                    }
                    if slot < iv.fronts.len() {
                        let fr = sol.front(iv.fronts[slot]);
                        if v > fr.speed + tie(fr.speed) {
                            let tau = (fr.position(self.t) - self.p).max(0.0) / (v - fr.speed);
                            if hit.is_none_or(|h| self.t + tau < h.0) {
                                hit = Some((self.t + tau, slot));
                            }
                        }
                    }
                    match hit {
                        Some((t_hit, idx)) if t_hit < te - tiny => {
                            self.push(t_hit, v, SegmentKind::Free, (u, u), None);
                            self.t = t_hit;
                            self.p = sol.front(iv.fronts[idx]).position(t_hit);
                            mode = self.locate_fronts(sol, k, sel);
                            continue;
                        }
                        _ => {
                            self.push(te, v, SegmentKind::Free, (u, u), None);
                            self.p += v * (te - self.t);
                            self.t = te;
                        }
                    }
                }
            }
            if self.t >= t_end - tiny || k + 1 >= intervals.len() {
                break;
            }
            k += 1;
            mode = self.locate_fronts(sol, k, sel);
        }
        Ok(self.path)
    }

    fn run_grid(
        mut self,
        grid: &GridSolution,
        t_end: f64,
        substeps: usize,
        sel: Selection,
    ) -> Result<ParticlePath> {
        check_span(self.t, t_end, grid.t_end())?;
        let times = grid.times();
        let n = grid.n_cells();
        let (x_min, dx) = (grid.x_min(), grid.dx());
        let tiny = 1e-13 * (1.0 + t_end);
        let mut level = times.partition_point(|&s| s <= self.t).saturating_sub(1);
        while level + 1 < times.len() && self.t < t_end - tiny {
            let (ta, tb) = (times[level], times[level + 1]);
            let (ua, ub) = (grid.level(level), grid.level(level + 1));
            let h = (tb - ta) / substeps as f64;
            for j in 0..substeps {
                let s0 = ta + h * j as f64;
                let s1 = if j + 1 == substeps { tb } else { s0 + h };
                let s1 = s1.min(t_end);
                if s1 <= self.t {
                    continue;
                }
                let theta = j as f64 / substeps as f64;
                let state = |i: usize| (1.0 - theta) * ua[i] + theta * ub[i];
                self.grid_slab(grid, &state, s1, sel, n, x_min, dx, tiny)?;
                if self.t >= t_end - tiny {
                    break;
                }
            }
            level += 1;
        }
        Ok(self.path)
    }

    #[allow(clippy::too_many_arguments)]
    fn grid_slab(
        &mut self,
        grid: &GridSolution,
        state: &impl Fn(usize) -> f64,
        s1: f64,
        sel: Selection,
        n: usize,
        x_min: f64,
        dx: f64,
        tiny: f64,
    ) -> Result<()> {
        let mut mode = self.locate_grid(grid, state, sel, n, x_min, dx);
        for _ in 0..(4 * n + 16) {
            match mode {
                Mode::Attached(r) => {
                    let states = (state(r), state(r + 1));
                    self.push(s1, 0.0, SegmentKind::Attached, states, Some(r));
                    self.t = s1;
                    return Ok(());
                }
                Mode::Free(i) => {
                    let u = state(i);
                    let v = self.field.a(u);
                    let hit = if v > tie(0.0) && i + 1 < n {
                        Some(((grid.interface(i) - self.p).max(0.0) / v, i))
                    } else if v < -tie(0.0) && i > 0 {
                        Some(((self.p - grid.interface(i - 1)).max(0.0) / -v, i - 1))
                    } else {
                        None
                    };
                    match hit {
                        Some((tau, r)) if self.t + tau < s1 - tiny => {
                            let t_hit = self.t + tau;
                            self.push(t_hit, v, SegmentKind::Free, (u, u), None);
                            self.t = t_hit;
                            self.p = grid.interface(r);
                            mode = self.decide_grid(state, r, sel);
                        }
                        _ => {
                            self.push(s1, v, SegmentKind::Free, (u, u), None);
                            self.p += v * (s1 - self.t);
                            self.t = s1;
                            return Ok(());
                        }
                    }
                }
            }
        }
        Err(Error::Internal(format!(
            "particle from {:?} made no progress at t = {}",
            self.path.start, self.t
        )))
    }

    fn locate_grid(
        &mut self,
        grid: &GridSolution,
        state: &impl Fn(usize) -> f64,
        sel: Selection,
        n: usize,
        x_min: f64,
        dx: f64,
    ) -> Mode {
        let p = self.p;
        let tol = 1e-10 * (1.0 + p.abs());
        let r = ((p - x_min) / dx).round() as i64 - 1;
        if r >= 0 && (r as usize) + 1 < n && (p - grid.interface(r as usize)).abs() <= tol {
            self.p = grid.interface(r as usize);
            return self.decide_grid(state, r as usize, sel);
        }
        Mode::Free((((p - x_min) / dx).floor().max(0.0) as usize).min(n - 1))
    }

    fn decide_grid(&mut self, state: &impl Fn(usize) -> f64, r: usize, sel: Selection) -> Mode {
        let d = decide(&[state(r), state(r + 1)], &[0.0], |u| self.field.a(u), sel);
        self.record(&d);
        match d.choice {
            Choice::Sector(j) => Mode::Free(r + j),
            Choice::Front(_) => Mode::Attached(r),
        }
    }
}

/// Positions `X_t(x_i, s)` of a grid of starts at several times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowMap {
    pub c: f64,
    pub s: f64,
    pub starts: Vec<f64>,
    pub times: Vec<f64>,
    /// `positions[k][i] = X_{times[k]}(starts[i], s)`
    pub positions: Vec<Vec<f64>>,
    /// Number of adjacent pairs whose order was reversed at some time.
    pub monotonicity_violations: usize,
    pub worst_inversion: f64,
}

impl FlowMap {
    pub fn image(&self, k: usize) -> &[f64] {
        &self.positions[k]
    }

    /// Gaps `X(x_{i+1}) − X(x_i)` at time index `k`.
    pub fn separations(&self, k: usize) -> Vec<f64> {
        self.positions[k].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Monotone interpolant of the map at time index `k`: the running
    /// maximum of the images, linearly interpolated in the start.
    pub fn interpolate(&self, k: usize, x: f64) -> f64 {
        let xs = &self.starts;
        let mut ys = self.positions[k].clone();
        for i in 1..ys.len() {
            ys[i] = ys[i].max(ys[i - 1]);
        }
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[xs.len() - 1] {
            return ys[ys.len() - 1];
        }
        let i = xs.partition_point(|&s| s <= x);
        let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + w * (ys[i] - ys[i - 1])
    }

    /// Writes rows `t, x_start, x_image`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Internal(format!("writing flow map: {e}"));
        writeln!(out, "t,x_start,x_image").map_err(io)?;
        for (k, &t) in self.times.iter().enumerate() {
            for (x, y) in self.starts.iter().zip(&self.positions[k]) {
                writeln!(out, "{t:.16e},{x:.16e},{y:.16e}").map_err(io)?;
            }
        }
        Ok(())
    }
}

/// Traces every start in parallel and samples the images at `times`.
pub fn flow_map(field: &VelocityField, s: f64, starts: &[f64], times: &[f64]) -> Result<FlowMap> {
    Ok(flow_map_with_paths(field, s, starts, times)?.0)
}

/// As [`flow_map`], also returning the traced paths.
pub fn flow_map_with_paths(
    field: &VelocityField,
    s: f64,
    starts: &[f64],
    times: &[f64],
) -> Result<(FlowMap, Vec<ParticlePath>)> {
    if starts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::argument("flow-map starts must be sorted"));
    }
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|&t| t < s) {
        return Err(Error::argument("flow-map times must be sorted and not before s"));
    }
    let horizon = times.last().copied().unwrap_or(s);
    let paths: Vec<ParticlePath> = starts
        .par_iter()
        .map(|&x| {
            if horizon > s {
                trace(field, (x, s), horizon)
            } else {
                Ok(ParticlePath {
                    start: (x, s),
                    segments: Vec::new(),
                    ambiguous_decisions: 0,
                    marginal_decisions: 0,
                })
            }
        })
        .collect::<Result<_>>()?;
    let positions: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| paths.iter().map(|p| p.position(t)).collect())
        .collect();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for i in 0..starts.len().saturating_sub(1) {
        let inversion = positions
            .iter()
            .map(|row| row[i] - row[i + 1])
            .fold(f64::NEG_INFINITY, f64::max);
        if inversion > 1e-12 * (1.0 + positions[0][i].abs()) {
            violations += 1;
            worst = worst.max(inversion);
        }
    }
    Ok((
        FlowMap {
            c: field.c(),
            s,
            starts: starts.to_vec(),
            times: times.to_vec(),
            positions,
            monotonicity_violations: violations,
            worst_inversion: worst,
        },
        paths,
    ))
}

/// Writes rows `path_id, t, x, segment_kind` with `n` uniform samples per
/// path besides the event times.
pub fn write_paths_csv<W: Write>(paths: &[ParticlePath], n: usize, out: &mut W) -> Result<()> {
    let io = |e: std::io::Error| Error::Internal(format!("writing paths: {e}"));
    writeln!(out, "path_id,t,x,segment_kind").map_err(io)?;
    for (id, path) in paths.iter().enumerate() {
        for (t, x) in path.samples(n) {
            let kind = path.segment_at(t).map_or("free", |s| s.kind.as_str());
            writeln!(out, "{id},{t:.16e},{x:.16e},{kind}").map_err(io)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxSpec;
    use crate::fronttrack::{front_track_with, prescribe_traveling_wave, FrontTrackOptions};
    use crate::godunov::{godunov_solve, GodunovOptions};

    fn example_6() -> PiecewiseConstant1D {
        PiecewiseConstant1D::new(vec![0.0, 1.0], vec![1.0, 3.0, 1.0]).unwrap()
    }

    #[test]
    fn decide_prefers_compressive_fronts() {
        let a = |u: f64| 0.5 * u; // Burgers with c = 0
        let d = decide(&[1.0, 0.0], &[0.5], a, Selection::Default);
        assert_eq!(d.choice, Choice::Front(0));
        assert!(!d.ambiguous);
        // A rarefaction-like jump is crossed or avoided, never ridden.
        let d = decide(&[0.0, 1.0], &[0.25], |u| 0.5 * (u + 1.0), Selection::Default);
        assert_eq!(d.choice, Choice::Sector(1));
    }

    #[test]
    fn decide_branches_on_nonentropic_front() {
        let a = |u: f64| 0.5 * (u + 2.0); // Burgers with c = 2
        let states = [1.0, 3.0];
        assert_eq!(decide(&states, &[2.0], a, Selection::Default).choice, Choice::Front(0));
        assert_eq!(decide(&states, &[2.0], a, Selection::Lower).choice, Choice::Sector(0));
        assert_eq!(decide(&states, &[2.0], a, Selection::Upper).choice, Choice::Sector(1));
        assert!(decide(&states, &[2.0], a, Selection::Lower).ambiguous);
    }

    #[test]
    fn nonentropic_wave_extremal_paths() {
        let f = FluxSpec::Burgers.build(0.0, 3.0).unwrap();
        let tw = prescribe_traveling_wave(&example_6(), &f, 2.0, 3.0).unwrap();
        let field = VelocityField::over_fronts(&tw, &f, 2.0).unwrap();
        let (lo, hi) = trace_extremal(&field, (0.0, 0.0), 3.0).unwrap();
        assert!((lo.position(1.0) - 1.5).abs() < 1e-12);
        assert!((hi.position(1.0) - 2.5).abs() < 1e-12);
        assert!((hi.position(2.0) - 5.0).abs() < 1e-12);
        assert!((hi.position(3.0) - 7.0).abs() < 1e-12);
        assert_eq!(hi.segments.last().unwrap().kind, SegmentKind::Attached);
        let mid = trace(&field, (0.0, 0.0), 3.0).unwrap();
        assert!((mid.position(3.0) - 6.0).abs() < 1e-12);

        let field0 = VelocityField::over_fronts(&tw, &f, 0.0).unwrap();
        let (lo, hi) = trace_extremal(&field0, (0.0, 0.0), 3.0).unwrap();
        assert_eq!(lo.position(1.0), hi.position(1.0));
        assert!((lo.position(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heaviside_fan_paths() {
        let f = FluxSpec::Burgers.build(0.0, 1.0).unwrap();
        let u0 = PiecewiseConstant1D::new(vec![0.0], vec![0.0, 1.0]).unwrap();
        let delta = 1.0 / 256.0;
        let sol = front_track_with(&u0, &f, &FrontTrackOptions::new(delta, 2.0).with_extra_nodes([0.0])).unwrap();
        let field = VelocityField::over_fronts(&sol, &f, 0.0).unwrap();
        let stay = trace(&field, (0.0, 0.0), 2.0).unwrap();
        assert_eq!(stay.position(2.0), 0.0);
        let p = trace(&field, (0.125, 0.0), 1.0).unwrap();
        assert!((p.position(1.0) - 0.5).abs() < 4.0 * delta.sqrt(), "{}", p.position(1.0));
        let q = trace(&field, (1.0, 0.0), 1.0).unwrap();
        assert!((q.position(1.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn grid_paths() {
        let f = FluxSpec::Burgers.build(-1.0, 1.0).unwrap();
        let k = PiecewiseConstant1D::constant(0.6);
        let grid = godunov_solve(&k, &f, &GodunovOptions::new(-2.0, 2.0, 0.1, 1.0)).unwrap();
        let field = VelocityField::over_grid(&grid, &f, 0.0).unwrap();
        let p = trace_grid(&field, (-0.55, 0.0), 1.0, 2).unwrap();
        assert!((p.position(1.0) - (-0.55 + 0.3)).abs() < 1e-14);

        let shock = PiecewiseConstant1D::new(vec![0.0], vec![1.0, 0.0]).unwrap();
        let grid = godunov_solve(&shock, &f, &GodunovOptions::new(-2.0, 2.0, 0.02, 1.0)).unwrap();
        let field = VelocityField::over_grid(&grid, &f, -1.0).unwrap();
        let p = trace_grid(&field, (-0.1, 0.0), 1.0, 1).unwrap();
        assert!((p.position(1.0) + 0.1).abs() < 1e-12);
        assert!(trace_grid(&field, (0.0, 0.0), 1.0, 0).is_err());
    }

    #[test]
    fn rejects_bad_start() {
        let f = FluxSpec::Burgers.build(0.0, 3.0).unwrap();
        let tw = prescribe_traveling_wave(&example_6(), &f, 2.0, 1.0).unwrap();
        let field = VelocityField::over_fronts(&tw, &f, 0.0).unwrap();
        assert!(trace(&field, (0.0, 1.0), 1.0).is_err());
        assert!(trace(&field, (0.0, 0.0), 2.0).is_err());
        assert!(VelocityField::over_fronts(&tw, &f, 7.0).is_err());
    }

    #[test]
    fn flow_map_of_constant_state_translates() {
        let f = FluxSpec::Burgers.build(-1.0, 1.0).unwrap();
        let tw = prescribe_traveling_wave(&PiecewiseConstant1D::constant(0.5), &f, 0.0, 2.0).unwrap();
        let field = VelocityField::over_fronts(&tw, &f, -0.5).unwrap();
        let fm = flow_map(&field, 0.0, &[-1.0, 0.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(fm.image(2), &[-1.0, 0.0, 1.0]);
        let field = VelocityField::over_fronts(&tw, &f, 0.5).unwrap();
        let fm = flow_map(&field, 0.0, &[-1.0, 0.0, 1.0], &[2.0]).unwrap();
        assert_eq!(fm.image(0), &[0.0, 1.0, 2.0]);
        assert_eq!(fm.monotonicity_violations, 0);
        let mut buf = Vec::new();
        fm.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
