//! Exact Riemann fans from sampled envelopes and the particle velocity
//! `V(u_L, u_R)` of the straight path through the fan origin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::{
    hull_function, lower_hull_indices, sample_grid, FluxFunction, PiecewiseLinearFunction,
};
use crate::piecewise::PiecewiseConstant1D;

/// Default number of envelope samples.
pub const DEFAULT_SAMPLES: usize = 4097;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WaveKind {
    Shock,
    /// A jump between neighbouring sample nodes; a stack of these
    /// approximates a rarefaction.
    RarefactionStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Wave {
    pub speed: f64,
    pub left: f64,
    pub right: f64,
    pub kind: WaveKind,
}

/// Self-similar solution of a Riemann problem: constant states separated by
/// waves with nondecreasing speeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiemannFan {
    pub u_left: f64,
    pub u_right: f64,
    pub waves: Vec<Wave>,
}

impl RiemannFan {
    pub fn wave_speeds(&self) -> Vec<f64> {
        self.waves.iter().map(|w| w.speed).collect()
    }

    /// `m + 1` constant states for `m` waves.
    pub fn states(&self) -> Vec<f64> {
        std::iter::once(self.u_left)
            .chain(self.waves.iter().map(|w| w.right))
            .collect()
    }

    /// For each adjacent pair of waves, whether the state between them
    /// belongs to a rarefaction (both neighbours are rarefaction steps).
    pub fn rarefaction_segments(&self) -> Vec<bool> {
        self.waves
            .windows(2)
            .map(|w| w[0].kind == WaveKind::RarefactionStep && w[1].kind == WaveKind::RarefactionStep)
            .collect()
    }

    pub fn inverses(&self) -> RightInverses {
        RightInverses {
            speeds: self.wave_speeds(),
            states: self.states(),
        }
    }

    /// `(u(ξ−), u(ξ+))` at the similarity coordinate `ξ = x/t`.
    pub fn evaluate(&self, xi: f64) -> (f64, f64) {
        let inv = self.inverses();
        (inv.left(xi), inv.right(xi))
    }

    /// The fan at time `t > 0` centered at `x0`, as a step function.
    pub fn snapshot(&self, x0: f64, t: f64) -> PiecewiseConstant1D {
        PiecewiseConstant1D::from_jumps(
            self.u_left,
            self.waves.iter().map(|w| (x0 + w.speed * t, w.left, w.right)),
        )
    }
}

/// Left- and right-continuous inverses `g_L`, `g_R` of the envelope
/// derivative, mapping speeds to states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RightInverses {
    speeds: Vec<f64>,
    states: Vec<f64>,
}

impl RightInverses {
    /// `g_L(y)`: the smallest preimage in the direction of travel.
    pub fn left(&self, y: f64) -> f64 {
        self.states[self.speeds.partition_point(|&s| s < y)]
    }

    /// `g_R(y)`: the largest preimage in the direction of travel.
    pub fn right(&self, y: f64) -> f64 {
        self.states[self.speeds.partition_point(|&s| s <= y)]
    }
}

/// Builds `g_L`, `g_R` from an envelope on `[min(u_L,u_R), max(u_L,u_R)]`:
/// the convex one when `u_L < u_R`, the concave one otherwise.
pub fn right_inverses(
    envelope: &PiecewiseLinearFunction,
    u_left: f64,
    u_right: f64,
) -> Result<RightInverses> {
    if u_left == u_right {
        return Ok(RightInverses {
            speeds: Vec::new(),
            states: vec![u_left],
        });
    }
    if envelope.knots().len() < 2 {
        return Err(Error::Internal("empty envelope".into()));
    }
    let (lo, hi) = envelope.domain();
    let (a, b) = (u_left.min(u_right), u_left.max(u_right));
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if (lo - a).abs() > tol || (hi - b).abs() > tol {
        return Err(Error::argument(format!(
            "envelope covers [{lo}, {hi}] but the Riemann data span [{a}, {b}]"
        )));
    }
    let mut speeds = envelope.slopes();
    let mut states = envelope.knots().to_vec();
    if u_left > u_right {
        speeds.reverse();
        states.reverse();
    }
    Ok(RightInverses { speeds, states })
}

/// Fan of the Riemann problem for the piecewise-linear flux through the
/// points `(xs, ys)`, where `xs` runs exactly from `min(u_L,u_R)` to
/// `max(u_L,u_R)`.
pub(crate) fn fan_from_nodes(xs: &[f64], ys: &[f64], u_left: f64, u_right: f64) -> RiemannFan {
    let mut waves = Vec::new();
    if u_left < u_right {
        let idx = lower_hull_indices(xs, ys);
        for w in idx.windows(2) {
            waves.push(Wave {
                speed: (ys[w[1]] - ys[w[0]]) / (xs[w[1]] - xs[w[0]]),
                left: xs[w[0]],
                right: xs[w[1]],
                kind: kind_of(w[0], w[1]),
            });
        }
    } else if u_left > u_right {
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let idx = lower_hull_indices(xs, &neg);
        for w in idx.windows(2).rev() {
            waves.push(Wave {
                speed: (ys[w[1]] - ys[w[0]]) / (xs[w[1]] - xs[w[0]]),
                left: xs[w[1]],
                right: xs[w[0]],
                kind: kind_of(w[0], w[1]),
            });
        }
    }
    RiemannFan {
        u_left,
        u_right,
        waves,
    }
}

fn kind_of(i: usize, j: usize) -> WaveKind {
    if j == i + 1 {
        WaveKind::RarefactionStep
    } else {
        WaveKind::Shock
    }
}

/// A Riemann problem solved on a sample grid of the true flux, optionally
/// refined by extra nodes.
#[derive(Clone, Debug)]
pub struct SampledRiemann {
    nodes: Vec<f64>,
    values: Vec<f64>,
    fan: RiemannFan,
}

impl SampledRiemann {
    pub fn new(
        f: &FluxFunction,
        u_left: f64,
        u_right: f64,
        samples: usize,
        extra_nodes: &[f64],
    ) -> Result<Self> {
        f.check("u_L", u_left)?;
        f.check("u_R", u_right)?;
        if samples < 2 {
            return Err(Error::argument("Riemann solver needs at least two samples"));
        }
        let (a, b) = (u_left.min(u_right), u_left.max(u_right));
        let nodes = if a == b {
            vec![a]
        } else {
            let mut nodes = sample_grid(a, b, samples);
            nodes.extend(extra_nodes.iter().copied().filter(|&v| v > a && v < b));
            nodes.sort_by(f64::total_cmp);
            nodes.dedup();
            nodes
        };
        let values: Vec<f64> = nodes.iter().map(|&v| f.eval(v)).collect();
        let fan = fan_from_nodes(&nodes, &values, u_left, u_right);
        Ok(Self { nodes, values, fan })
    }

    pub fn fan(&self) -> &RiemannFan {
        &self.fan
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The envelope used for the fan: convex for `u_L < u_R`, concave for
    /// `u_L > u_R`.
    pub fn envelope(&self) -> PiecewiseLinearFunction {
        let ascending = self.fan.u_left <= self.fan.u_right;
        let ys: Vec<f64> = if ascending {
            self.values.clone()
        } else {
            self.values.iter().map(|y| -y).collect()
        };
        let env = hull_function(&self.nodes, &ys, &lower_hull_indices(&self.nodes, &ys));
        if ascending {
            env
        } else {
            env.negated()
        }
    }

    pub fn inverses(&self) -> RightInverses {
        self.fan.inverses()
    }
}

/// Exact entropy solution of the Riemann problem, on the default sample grid.
pub fn solve_riemann(f: &FluxFunction, u_left: f64, u_right: f64) -> Result<RiemannFan> {
    Ok(SampledRiemann::new(f, u_left, u_right, DEFAULT_SAMPLES, &[])?.fan)
}

/// Which of the six closed-form cases produced a particle velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VelocityCase {
    /// `u_L = u_R`
    Degenerate,
    /// `c < u_L ≤ u_R`: minimum of `A(v, c)`
    MinBelow,
    /// `c < u_R ≤ u_L`: maximum of `A(v, c)`
    MaxBelow,
    /// `u_L ≤ c ≤ u_R`: convex envelope slope at `c`
    ConvexEnvelope,
    /// `u_R ≤ c ≤ u_L`: concave envelope slope at `c`
    ConcaveEnvelope,
    /// `u_L ≤ u_R < c`: maximum of `A(v, c)`
    MaxAbove,
    /// `u_R ≤ u_L < c`: minimum of `A(v, c)`
    MinAbove,
}

/// How the velocity was read off the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlopeChoice {
    /// Extremum of the divided difference over the data interval.
    Extremum,
    /// `c` lies inside a wave; its speed is the only slope.
    Interior,
    /// `c` is a knot and `f'(c)` lies between the adjacent speeds.
    Tangent,
    /// `c` is a knot and `f'(c)` was clamped to the slower neighbour.
    LeftSlope,
    /// `c` is a knot and `f'(c)` was clamped to the faster neighbour.
    RightSlope,
    /// `u_L = u_R`, so `V = A(u, c)`.
    Constant,
}

/// The velocity `V` of the path through the fan origin, together with
/// everything needed to rebuild the fan it was read from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticleVelocity {
    pub velocity: f64,
    pub case: VelocityCase,
    pub slope: SlopeChoice,
    pub u_left: f64,
    pub u_right: f64,
    pub c: f64,
    pub samples: usize,
    pub extra_nodes: Vec<f64>,
}

pub fn particle_velocity(
    f: &FluxFunction,
    u_left: f64,
    u_right: f64,
    c: f64,
) -> Result<ParticleVelocity> {
    particle_velocity_with(f, u_left, u_right, c, DEFAULT_SAMPLES)
}

pub fn particle_velocity_with(
    f: &FluxFunction,
    u_left: f64,
    u_right: f64,
    c: f64,
    samples: usize,
) -> Result<ParticleVelocity> {
    f.check("u_L", u_left)?;
    f.check("u_R", u_right)?;
    f.check("c", c)?;
    let build = |velocity, case, slope, extra_nodes| ParticleVelocity {
        velocity,
        case,
        slope,
        u_left,
        u_right,
        c,
        samples,
        extra_nodes,
    };
    if u_left == u_right {
        return Ok(build(
            f.slope(u_left, c),
            VelocityCase::Degenerate,
            SlopeChoice::Constant,
            Vec::new(),
        ));
    }
    let (a, b) = (u_left.min(u_right), u_left.max(u_right));
    let ascending = u_left < u_right;
    if c >= a && c <= b {
        let extra = vec![c];
        let rp = SampledRiemann::new(f, u_left, u_right, samples, &extra)?;
        let states = rp.fan.states();
        let speeds = rp.fan.wave_speeds();
        let case = if ascending {
            VelocityCase::ConvexEnvelope
        } else {
            VelocityCase::ConcaveEnvelope
        };
        let (velocity, slope) = match states.iter().position(|&w| w == c) {
            Some(j) => {
                let before = if j == 0 { f64::NEG_INFINITY } else { speeds[j - 1] };
                let after = if j == speeds.len() { f64::INFINITY } else { speeds[j] };
                let d = f.derivative(c);
                if d < before {
                    (before, SlopeChoice::LeftSlope)
                } else if d > after {
                    (after, SlopeChoice::RightSlope)
                } else {
                    (d, SlopeChoice::Tangent)
                }
            }
            None => {
                let wave = rp
                    .fan
                    .waves
                    .iter()
                    .find(|w| w.left.min(w.right) < c && c < w.left.max(w.right))
                    .ok_or_else(|| Error::Internal(format!("no wave contains c = {c}")))?;
                (wave.speed, SlopeChoice::Interior)
            }
        };
        return Ok(build(velocity, case, slope, extra));
    }

    // c outside the data interval: extremize A(·, c) over [a, b].
    let below = c < a;
    let (case, minimize) = match (below, ascending) {
        (true, true) => (VelocityCase::MinBelow, true),
        (true, false) => (VelocityCase::MaxBelow, false),
        (false, true) => (VelocityCase::MaxAbove, false),
        (false, false) => (VelocityCase::MinAbove, true),
    };
    let sign = if minimize { 1.0 } else { -1.0 };
    let g = |v: f64| sign * f.slope(v, c);
    let grid = sample_grid(a, b, samples);
    let (imin, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, g(v)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let lo = grid[imin.saturating_sub(1)];
    let hi = grid[(imin + 1).min(grid.len() - 1)];
    let polished = golden_section(&g, lo, hi);
    let mut extra = Vec::new();
    if g(polished) < g(grid[imin]) && polished > a && polished < b {
        extra.push(polished);
    }
    let best = grid
        .iter()
        .chain(&extra)
        .map(|&v| g(v))
        .fold(f64::INFINITY, f64::min);
    Ok(build(sign * best, case, SlopeChoice::Extremum, extra))
}

fn golden_section(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2);
        }
    }
    if g1 < g2 {
        x1
    } else {
        x2
    }
}

/// `min(V − A(g_R(V), c), A(g_L(V), c) − V)` for the fan rebuilt
/// independently from the recorded sample grid and extra nodes.
pub fn verify_squeeze(f: &FluxFunction, pv: &ParticleVelocity) -> Result<f64> {
    let rp = SampledRiemann::new(f, pv.u_left, pv.u_right, pv.samples, &pv.extra_nodes)?;
    Ok(squeeze_margin(f, &rp.inverses(), pv.c, pv.velocity))
}

/// Squeeze margin of a velocity `v` against given inverses.
pub fn squeeze_margin(f: &FluxFunction, inv: &RightInverses, c: f64, v: f64) -> f64 {
    let upper = f.slope(inv.left(v), c) - v;
    let lower = v - f.slope(inv.right(v), c);
    upper.min(lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{convex_envelope, FluxSpec, Smoothness};

    fn burgers(lo: f64, hi: f64) -> FluxFunction {
        FluxSpec::Burgers.build(lo, hi).unwrap()
    }

    #[test]
    fn burgers_rarefaction_inverses_are_clipped_identity() {
        let env = convex_envelope(&burgers(0.0, 1.0), 0.0, 1.0, 1001).unwrap();
        let inv = right_inverses(&env, 0.0, 1.0).unwrap();
        for &y in &[-0.5f64, 0.0, 0.2501, 0.5, 0.77, 1.0, 2.0] {
            let expect = y.clamp(0.0, 1.0);
            assert!((inv.left(y) - expect).abs() <= 1e-3, "y={y}");
            assert!((inv.right(y) - expect).abs() <= 1e-3, "y={y}");
            assert!(inv.left(y) <= inv.right(y));
        }
    }

    #[test]
    fn degenerate_inverses_are_constant() {
        let env = convex_envelope(&burgers(0.0, 1.0), 0.0, 1.0, 11).unwrap();
        let inv = right_inverses(&env, 0.4, 0.4).unwrap();
        assert_eq!((inv.left(-3.0), inv.right(9.0)), (0.4, 0.4));
    }

    #[test]
    fn flat_segment_inverses_split() {
        let f = FluxFunction::new(
            "double well",
            |u| (u * u - 1.0).powi(2),
            |u| 4.0 * u * (u * u - 1.0),
            (-1.0, 1.0),
            Smoothness::C1,
        )
        .unwrap();
        let env = convex_envelope(&f, -1.0, 1.0, 201).unwrap();
        let inv = right_inverses(&env, -1.0, 1.0).unwrap();
        assert_eq!(inv.left(0.0), -1.0);
        assert_eq!(inv.right(0.0), 1.0);
    }

    #[test]
    fn flat_envelope_with_one_knot_is_an_error() {
        let env = PiecewiseLinearFunction::new(vec![0.0], vec![0.0]).unwrap();
        assert!(matches!(right_inverses(&env, 0.0, 1.0), Err(Error::Internal(_))));
    }

    #[test]
    fn burgers_fans() {
        let f = burgers(0.0, 1.0);
        let shock = solve_riemann(&f, 1.0, 0.0).unwrap();
        assert_eq!(shock.waves.len(), 1);
        assert_eq!(shock.waves[0].speed, 0.5);
        assert_eq!(shock.waves[0].kind, WaveKind::Shock);
        assert_eq!(shock.evaluate(0.5), (1.0, 0.0));

        let fan = solve_riemann(&f, 0.0, 1.0).unwrap();
        assert_eq!(fan.waves.len(), DEFAULT_SAMPLES - 1);
        assert!(fan.waves.iter().all(|w| w.kind == WaveKind::RarefactionStep));
        let (l, r) = fan.evaluate(0.3);
        assert!((l - 0.3).abs() < 1e-3 && (r - 0.3).abs() < 1e-3);
        assert_eq!(fan.states()[0], 0.0);
        assert_eq!(*fan.states().last().unwrap(), 1.0);
    }

    #[test]
    fn particle_velocity_examples() {
        let f = burgers(-1.0, 3.0);
        let v = |ul, ur, c| particle_velocity(&f, ul, ur, c).unwrap();
        let a = v(0.0, 1.0, 0.0);
        assert_eq!(a.velocity, 0.0);
        assert_eq!(a.case, VelocityCase::ConvexEnvelope);
        let b = v(1.0, 0.0, 0.0);
        assert_eq!(b.velocity, 0.5);
        assert_eq!(b.case, VelocityCase::ConcaveEnvelope);
        let m = v(1.0, 2.0, 0.0);
        assert!((m.velocity - 0.5).abs() < 1e-15);
        assert_eq!(m.case, VelocityCase::MinBelow);
        assert_eq!(v(2.0, 2.0, 0.0).velocity, 1.0);
    }

    #[test]
    fn squeeze_examples_bind() {
        let f = burgers(0.0, 1.0);
        for (ul, ur) in [(0.0, 1.0), (1.0, 0.0)] {
            let pv = particle_velocity(&f, ul, ur, 0.0).unwrap();
            assert_eq!(verify_squeeze(&f, &pv).unwrap(), 0.0);
        }
    }

    #[test]
    fn interior_max_is_polished() {
        // A(v, c) for f = sin on [0, 3] with c = -1 has an interior maximum.
        let f = FluxFunction::new("sin", f64::sin, f64::cos, (-1.0, 3.0), Smoothness::C1).unwrap();
        let pv = particle_velocity_with(&f, 0.0, 3.0, 3.0, 17).unwrap();
        assert_eq!(pv.case, VelocityCase::ConvexEnvelope);
        let pv = particle_velocity_with(&f, 3.0, 0.0, -1.0, 17).unwrap();
        assert_eq!(pv.case, VelocityCase::MaxBelow);
        let fine = sample_grid(0.0, 3.0, 200_001)
            .iter()
            .map(|&v| f.slope(v, -1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((pv.velocity - fine).abs() < 1e-9);
        assert!(verify_squeeze(&f, &pv).unwrap() >= -1e-12);
    }
}
