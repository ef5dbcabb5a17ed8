//! Entropy pairs, jump entropy production and quantitative checks on
//! solutions, particle paths and flow maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filippov::{trace, FieldSource, FlowMap, ParticlePath, VelocityField};
use crate::flux::{FluxEval, FluxFunction};
use crate::fronttrack::{FrontTrackSolution, SolutionFlux};

/// `(a ∨ v) ∧ b`
pub fn truncate(v: f64, a: f64, b: f64) -> f64 {
    v.max(a).min(b)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EntropyPair {
    /// `η = |u − k|`, `q = sgn(u − k)(f(u) − f(k))`
    Kruzkhov { k: f64 },
    /// `η = max(1, |v − c|/k)` with the flux vanishing on `[c − k, c + k]`
    EtaCK { c: f64, k: f64 },
}

impl EntropyPair {
    pub fn eta(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Kruzkhov { k } => (u - k).abs(),
            EntropyPair::EtaCK { c, k } => ((u - c).abs() / k).max(1.0),
        }
    }

    pub fn q(&self, f: &impl FluxEval, u: f64) -> f64 {
        match *self {
            EntropyPair::Kruzkhov { k } => sgn(u - k) * (f.value(u) - f.value(k)),
            EntropyPair::EtaCK { c, k } => {
                let t = truncate(u, c - k, c + k);
                sgn(u - t) * (f.value(u) - f.value(t)) / k
            }
        }
    }
}

/// `σ[η] − [q]` across a jump `u⁻ → u⁺` moving with speed `σ`. The jump
/// dissipates this entropy when the value is nonnegative.
pub fn entropy_production_jump(
    f: &impl FluxEval,
    u_minus: f64,
    u_plus: f64,
    speed: f64,
    pair: EntropyPair,
) -> f64 {
    speed * (pair.eta(u_plus) - pair.eta(u_minus)) - (pair.q(f, u_plus) - pair.q(f, u_minus))
}

/// The worst value of a check and where it occurred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Worst {
    pub value: f64,
    pub x: f64,
    pub t: f64,
}

impl Worst {
    fn min() -> Self {
        Self {
            value: f64::INFINITY,
            x: f64::NAN,
            t: f64::NAN,
        }
    }

    fn max() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            x: f64::NAN,
            t: f64::NAN,
        }
    }

    fn lower(&mut self, value: f64, x: f64, t: f64) {
        if value < self.value {
            *self = Self { value, x, t };
        }
    }

    fn raise(&mut self, value: f64, x: f64, t: f64) {
        if value > self.value {
            *self = Self { value, x, t };
        }
    }
}

/// Smallest slack of `a_c(x+) ≤ ẋ ≤ a_c(x−)` over segment midpoints.
pub fn check_velocity_compression(path: &ParticlePath, field: &VelocityField) -> Result<Worst> {
    let mut worst = Worst::min();
    for seg in &path.segments {
        let t = 0.5 * (seg.t0 + seg.t1);
        let x = seg.position(t);
        let (am, ap) = field.value(x, t)?;
        worst.lower((seg.velocity - ap).min(am - seg.velocity), x, t);
    }
    if path.segments.is_empty() {
        worst.value = 0.0;
    }
    Ok(worst)
}

fn bracket_times(path_x: &ParticlePath, path_y: &ParticlePath, times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::argument("sample times must be sorted"));
    }
    for &t in times {
        let (x, y) = (path_x.position(t), path_y.position(t));
        if x > y + 1e-12 * (1.0 + x.abs()) {
            return Err(Error::argument(format!(
                "paths cross at t = {t}: x_t = {x} > y_t = {y}"
            )));
        }
    }
    Ok(())
}

/// Largest increase of `∫_{x_t}^{y_t} |u − c|` between consecutive times.
pub fn check_mass_decay(
    field: &VelocityField,
    path_x: &ParticlePath,
    path_y: &ParticlePath,
    times: &[f64],
) -> Result<Worst> {
    bracket_times(path_x, path_y, times)?;
    let c = field.c();
    let mass = |t: f64| -> Result<f64> {
        Ok(field
            .snapshot(t)?
            .integrate(path_x.position(t), path_y.position(t), |u| (u - c).abs()))
    };
    let mut worst = Worst::max();
    let mut prev = match times.first() {
        Some(&t) => mass(t)?,
        None => return Ok(Worst { value: 0.0, ..Worst::max() }),
    };
    for w in times.windows(2) {
        let next = mass(w[1])?;
        worst.raise(next - prev, path_x.position(w[1]), w[1]);
        prev = next;
    }
    if times.len() < 2 {
        worst.value = 0.0;
    }
    Ok(worst)
}

/// Largest excess of the entropy growth rate of `η_{c,k}` between two paths
/// over the bound `A([u(y−)], c) − A([u(x+)], c)`, with the bound integrated
/// exactly along the path segments.
pub fn check_entropy_growth(
    field: &VelocityField,
    k: f64,
    path_x: &ParticlePath,
    path_y: &ParticlePath,
    times: &[f64],
) -> Result<Worst> {
    if !(k > 0.0) {
        return Err(Error::argument(format!("entropy truncation k must be positive, got {k}")));
    }
    bracket_times(path_x, path_y, times)?;
    let c = field.c();
    let pair = EntropyPair::EtaCK { c, k };
    let entropy = |t: f64| -> Result<f64> {
        Ok(field
            .snapshot(t)?
            .integrate(path_x.position(t), path_y.position(t), |u| pair.eta(u)))
    };
    let bound_rate = |t: f64| -> Result<f64> {
        let (ym, _) = field.state(path_y.position(t), t)?;
        let (_, xp) = field.state(path_x.position(t), t)?;
        let f = field.flux();
        Ok(f.slope(truncate(ym, c - k, c + k), c) - f.slope(truncate(xp, c - k, c + k), c))
    };
    let mut cuts: Vec<f64> = path_x
        .segments
        .iter()
        .chain(&path_y.segments)
        .map(|s| s.t0)
        .collect();
    if let FieldSource::Grid(g) = field.source() {
        cuts.extend_from_slice(g.times());
    }
    cuts.sort_by(f64::total_cmp);

    let mut worst = Worst::max();
    let mut prev = match times.first() {
        Some(&t) => entropy(t)?,
        None => return Ok(Worst { value: 0.0, ..Worst::max() }),
    };
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let next = entropy(t1)?;
        if t1 > t0 {
            let lo = cuts.partition_point(|&c| c <= t0);
            let hi = cuts.partition_point(|&c| c < t1);
            let mut knots = vec![t0];
            knots.extend_from_slice(&cuts[lo..hi]);
            knots.push(t1);
            let mut bound = 0.0;
            for s in knots.windows(2) {
                if s[1] > s[0] {
                    bound += bound_rate(0.5 * (s[0] + s[1]))? * (s[1] - s[0]);
                }
            }
            worst.raise((next - prev - bound) / (t1 - t0), path_x.position(t1), t1);
        }
        prev = next;
    }
    if times.len() < 2 {
        worst.value = 0.0;
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderCheck {
    /// `min (bound − |X(y) − X(x)|)` over start pairs and times.
    pub margin: Worst,
    /// Least-squares slope of log separation against log initial gap for
    /// pairs anchored at the first start, at the last time.
    pub fitted_exponent: Option<f64>,
}

/// Checks `|X_t(y) − X_t(x)| ≤ |y − x| + 2√(L(t − s)·dev·|y − x|)` where
/// `dev = ‖u₀ − c‖_∞` and `L` is the Lipschitz constant of `f'`.
pub fn check_holder(flow: &FlowMap, f: &FluxFunction, deviation: f64) -> Result<HolderCheck> {
    let l = f.lipschitz().ok_or_else(|| {
        Error::Config(format!("flux {} declares no Lipschitz constant for f'", f.name()))
    })?;
    let starts = &flow.starts;
    let mut margin = Worst::min();
    for (k, &t) in flow.times.iter().enumerate() {
        let row = flow.image(k);
        for i in 0..starts.len() {
            for j in (i + 1)..starts.len() {
                let gap = starts[j] - starts[i];
                let bound = gap + 2.0 * (l * (t - flow.s) * deviation * gap).sqrt();
                margin.lower(bound - (row[j] - row[i]).abs(), starts[i], t);
            }
        }
    }
    if margin.value == f64::INFINITY {
        margin.value = 0.0;
    }
    let fitted_exponent = flow.times.len().checked_sub(1).and_then(|last| {
        let row = flow.image(last);
        let pts: Vec<(f64, f64)> = (1..starts.len())
            .filter_map(|i| {
                let gap = starts[i] - starts[0];
                let sep = (row[i] - row[0]).abs();
                (gap > 0.0 && sep > 0.0).then(|| (gap.ln(), sep.ln()))
            })
            .collect();
        least_squares_slope(&pts)
    });
    Ok(HolderCheck {
        margin,
        fitted_exponent,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_convex(f: &FluxFunction, lo: f64, hi: f64) -> Result<()> {
    let n = 512;
    let mut prev = f.derivative(lo);
    for i in 1..=n {
        let d = f.derivative(lo + (hi - lo) * i as f64 / n as f64);
        if d < prev - 1e-12 * (1.0 + prev.abs()) {
            return Err(Error::NotApplicable(format!(
                "flux {} is not convex on [{lo}, {hi}]",
                f.name()
            )));
        }
        prev = d;
    }
    Ok(())
}

/// Largest excess of `Δf'(u)/gap` over `1/t` across each jump between
/// bounded regions, `gap` being the wider of the two regions. Negative
/// increments are skipped.
pub fn check_oleinik(source: FieldSource, f: &FluxFunction, times: &[f64]) -> Result<Worst> {
    let mut worst = Worst::max();
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let snaps = times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::argument("Oleinik times must be positive"));
            }
            let s = source.snapshot(t)?;
            let (lo, hi) = s.min_max();
            range = (range.0.min(lo), range.1.max(hi));
            Ok((t, s))
        })
        .collect::<Result<Vec<_>>>()?;
    if range.0 < range.1 {
        check_convex(f, range.0, range.1)?;
    }
    for (t, snap) in &snaps {
        let b = snap.breakpoints();
        let v = snap.values();
        for i in 0..b.len().saturating_sub(2) {
            // A shock absorbing a neighbouring step thins one side only.
            let gap = (b[i + 1] - b[i]).max(b[i + 2] - b[i + 1]);
            let inc = f.derivative(v[i + 2]) - f.derivative(v[i + 1]);
            if inc > 0.0 {
                worst.raise(inc / gap - 1.0 / t, b[i + 1], *t);
            }
        }
    }
    if worst.value == f64::NEG_INFINITY {
        // No positive increments anywhere: report the slack at the last time.
        worst.value = -1.0 / times.iter().copied().fold(0.0, f64::max);
    }
    Ok(worst)
}

/// Largest `|∫_a^b (u(t) − c) − ∫_{X_t^{-1}[a,b]} (u(s) − c)|` over the
/// intervals, with preimages found by bisection on the monotone flow map.
pub fn check_pushforward(
    field: &VelocityField,
    flow: &FlowMap,
    intervals: &[(f64, f64)],
    t: f64,
) -> Result<Worst> {
    if (flow.c - field.c()).abs() > 0.0 {
        return Err(Error::argument("flow map and field use different levels c"));
    }
    let k = flow
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
        .ok_or_else(|| Error::argument(format!("flow map was not sampled at t = {t}")))?;
    let c = field.c();
    let now = field.snapshot(t)?;
    let before = field.snapshot(flow.s)?;
    let (x_lo, x_hi) = (flow.starts[0], *flow.starts.last().unwrap());
    let map = |x: f64| flow.interpolate(k, x);
    let mut worst = Worst::max();
    for &(a, b) in intervals {
        if !(a < b) {
            return Err(Error::argument(format!("empty interval [{a}, {b}]")));
        }
        if map(x_lo) > a || map(x_hi) < b {
            return Err(Error::argument(format!(
                "interval [{a}, {b}] is not covered by the flow image [{}, {}]",
                map(x_lo),
                map(x_hi)
            )));
        }
        let alpha = bisect(x_lo, x_hi, |x| map(x) >= a);
        let beta = bisect(x_lo, x_hi, |x| map(x) > b);
        let m1 = now.integrate(a, b, |u| u - c);
        let m2 = before.integrate(alpha, beta, |u| u - c);
        worst.raise((m1 - m2).abs(), a, t);
    }
    if intervals.is_empty() {
        worst.value = 0.0;
    }
    Ok(worst)
}

/// The boundary of a monotone predicate on `[lo, hi]` (false then true).
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest `|X_t(X_τ(x, s), τ) − X_t(x, s)|` over the starts.
pub fn check_semigroup(field: &VelocityField, s: f64, tau: f64, t: f64, starts: &[f64]) -> Result<Worst> {
    if !(s < tau && tau < t) {
        return Err(Error::argument("semigroup check needs s < tau < t"));
    }
    let mut worst = Worst::max();
    for &x in starts {
        let direct = trace(field, (x, s), t)?;
        let mid = direct.position(tau);
        let restarted = trace(field, (mid, tau), t)?;
        worst.raise((restarted.position(t) - direct.position(t)).abs(), x, t);
    }
    if starts.is_empty() {
        worst.value = 0.0;
    }
    Ok(worst)
}

/// A front whose jump produces entropy of the wrong sign for some `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffendingFront {
    pub x0: f64,
    pub t0: f64,
    pub left: f64,
    pub right: f64,
    pub speed: f64,
    pub worst_production: f64,
    pub worst_k: f64,
    /// Tested levels strictly inside the jump with negative production.
    pub branching_c: Vec<f64>,
    /// Tested levels equal to one of the jump states.
    pub marginal_c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub entropic: bool,
    pub fronts_checked: usize,
    pub offending: Vec<OffendingFront>,
}

/// Checks every front of a solution against Kruzkhov pairs on `k` values
/// strictly inside its jump, using the flux the solution is exact for.
pub fn classify_solution(sol: &FrontTrackSolution, c_grid: &[f64]) -> Classification {
    let flux = sol.flux();
    let mut seen: Vec<(f64, f64, f64)> = Vec::new();
    let mut offending = Vec::new();
    for fr in sol.tracked_fronts() {
        let key = (fr.left, fr.right, fr.speed);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let (lo, hi) = (fr.left.min(fr.right), fr.left.max(fr.right));
        let mut ks: Vec<f64> = vec![0.5 * (lo + hi)];
        match flux {
            SolutionFlux::Lattice(p) => {
                ks.extend(p.knots().iter().copied().filter(|&k| k > lo && k < hi));
            }
            SolutionFlux::Exact(_) => {
                ks.extend((1..64).map(|i| lo + (hi - lo) * i as f64 / 64.0));
            }
        }
        ks.extend(c_grid.iter().copied().filter(|&k| k > lo && k < hi));
        let scale = 1.0 + fr.speed.abs() * (hi - lo) + (flux.value(hi) - flux.value(lo)).abs();
        let tol = -1e-12 * scale;
        let production = |k: f64| {
            entropy_production_jump(flux, fr.left, fr.right, fr.speed, EntropyPair::Kruzkhov { k })
        };
        let (worst_k, worst) = ks
            .iter()
            .map(|&k| (k, production(k)))
            .fold((f64::NAN, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if worst >= tol {
            continue;
        }
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        offending.push(OffendingFront {
            x0: fr.x0,
            t0: fr.t0,
            left: fr.left,
            right: fr.right,
            speed: fr.speed,
            worst_production: worst,
            worst_k,
            branching_c: c_grid
                .iter()
                .copied()
                .filter(|&c| c > lo && c < hi && production(c) < tol)
                .collect(),
            marginal_c: c_grid
                .iter()
                .copied()
                .filter(|&c| near(c, lo) || near(c, hi))
                .collect(),
        });
    }
    Classification {
        entropic: offending.is_empty(),
        fronts_checked: seen.len(),
        offending,
    }
}

/// One entry of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    /// The checked quantity (a margin, an excess or a gap).
    pub value: f64,
    pub tolerance: f64,
    /// Location `(x, t)` of the worst case, when meaningful.
    pub location: Option<(f64, f64)>,
    pub parameters: serde_json::Value,
    pub note: Option<String>,
}

impl CheckRecord {
    /// A record that passes when `value ≥ −tolerance`.
    pub fn at_least(name: &str, worst: Worst, tolerance: f64, parameters: serde_json::Value) -> Self {
        Self::new(name, worst.value >= -tolerance, worst, tolerance, parameters)
    }

    /// A record that passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, worst: Worst, tolerance: f64, parameters: serde_json::Value) -> Self {
        Self::new(name, worst.value <= tolerance, worst, tolerance, parameters)
    }

    fn new(name: &str, pass: bool, worst: Worst, tolerance: f64, parameters: serde_json::Value) -> Self {
        let location = (worst.x.is_finite() && worst.t.is_finite()).then_some((worst.x, worst.t));
        Self {
            name: name.to_string(),
            pass,
            value: worst.value,
            tolerance,
            location,
            parameters,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            checks: Vec::new(),
        }
    }

    /// Adds a record; each check name may appear only once.
    pub fn push(&mut self, record: CheckRecord) -> Result<()> {
        if self.checks.iter().any(|r| r.name == record.name) {
            return Err(Error::Internal(format!("check {} reported twice", record.name)));
        }
        self.checks.push(record);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are serializable")
    }
}
