//! Flux functions, the divided-difference velocity `A(u, c)` and
//! convex/concave envelopes of sampled fluxes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that can be evaluated as a scalar flux.
pub trait FluxEval {
    fn value(&self, u: f64) -> f64;
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularity class of a flux. `C2` carries a Lipschitz constant of `f'`
/// valid on the declared range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Smoothness {
    C1,
    C2 { lipschitz: f64 },
}

/// A flux `f` together with its exact derivative and the interval on which
/// both are trusted.
#[derive(Clone)]
pub struct FluxFunction {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
    lo: f64,
    hi: f64,
    smoothness: Smoothness,
}

impl fmt::Debug for FluxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxFunction")
            .field("name", &self.name)
            .field("u_range", &(self.lo, self.hi))
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl FluxEval for FluxFunction {
    fn value(&self, u: f64) -> f64 {
        (self.f)(u)
    }
}

impl FluxFunction {
    pub fn new<F, D>(
        name: impl Into<String>,
        f: F,
        df: D,
        u_range: (f64, f64),
        smoothness: Smoothness,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = u_range;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::argument(format!(
                "flux range [{lo}, {hi}] must be a finite closed interval"
            )));
        }
        if let Smoothness::C2 { lipschitz } = smoothness {
            if !(lipschitz.is_finite() && lipschitz >= 0.0) {
                return Err(Error::argument("Lipschitz constant must be finite and >= 0"));
            }
        }
        Ok(Self {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            lo,
            hi,
            smoothness,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Lipschitz constant of `f'`, when the flux declares one.
    pub fn lipschitz(&self) -> Option<f64> {
        match self.smoothness {
            Smoothness::C1 => None,
            Smoothness::C2 { lipschitz } => Some(lipschitz),
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        u >= self.lo - slack && u <= self.hi + slack
    }

    pub(crate) fn check(&self, what: &'static str, u: f64) -> Result<()> {
        if u.is_finite() && self.contains(u) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: u,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// `A(u, c)` without the range check. Inside the switch radius the exact
    /// derivative at `c` is used.
    pub fn slope(&self, u: f64, c: f64) -> f64 {
        let eps = 1e-12 * (1.0 + u.abs() + c.abs());
        if (u - c).abs() > eps {
            (self.eval(u) - self.eval(c)) / (u - c)
        } else {
            self.derivative(c)
        }
    }

    /// The flux `u ↦ f(−u)` on the reflected range.
    pub fn reflected(&self) -> Self {
        let f = self.f.clone();
        let df = self.df.clone();
        Self {
            name: format!("reflect({})", self.name),
            f: Arc::new(move |u| f(-u)),
            df: Arc::new(move |u| -df(-u)),
            lo: -self.hi,
            hi: -self.lo,
            smoothness: self.smoothness,
        }
    }

    /// The flux `−f`.
    pub fn negated(&self) -> Self {
        let f = self.f.clone();
        let df = self.df.clone();
        Self {
            name: format!("neg({})", self.name),
            f: Arc::new(move |u| -f(u)),
            df: Arc::new(move |u| -df(u)),
            lo: self.lo,
            hi: self.hi,
            smoothness: self.smoothness,
        }
    }

    /// Largest `|f'|` over `[a, b]`, estimated on a fine probe grid.
    pub fn max_speed(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let n = 256;
        (0..=n)
            .map(|i| self.derivative(a + (b - a) * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Worst relative mismatch between `f'` and centered differences of `f`
    /// on a probe grid of the given spacing.
    pub fn derivative_mismatch(&self, spacing: f64) -> f64 {
        let h = 1e-5 * (1.0 + self.lo.abs().max(self.hi.abs()));
        probe_grid(self.lo, self.hi, spacing)
            .map(|u| {
                let fd = (self.eval(u + h) - self.eval(u - h)) / (2.0 * h);
                let d = self.derivative(u);
                (fd - d).abs() / (1.0 + d.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest excess of `|f'(a) − f'(b)| − L|a − b|` over neighbouring probe
    /// pairs. Non-positive when the declared constant is valid.
    pub fn lipschitz_excess(&self, spacing: f64) -> Option<f64> {
        let l = self.lipschitz()?;
        let pts: Vec<f64> = probe_grid(self.lo, self.hi, spacing).collect();
        let mut worst = f64::NEG_INFINITY;
        for w in pts.windows(2) {
            let gap = (self.derivative(w[1]) - self.derivative(w[0])).abs() - l * (w[1] - w[0]);
            worst = worst.max(gap);
        }
        Some(worst)
    }
}

fn probe_grid(lo: f64, hi: f64, spacing: f64) -> impl Iterator<Item = f64> {
    let n = (((hi - lo) / spacing).ceil() as usize).max(1);
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// `A(u, c) = (f(u) − f(c)) / (u − c)`, extended by `f'(c)` on the diagonal.
pub fn divided_difference(f: &FluxFunction, u: f64, c: f64) -> Result<f64> {
    f.check("u", u)?;
    f.check("c", c)?;
    Ok(f.slope(u, c))
}

/// Builtin flux identifiers accepted by configuration files and the CLI.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxSpec {
    /// `u²/2`
    Burgers,
    /// `u³/3`
    Cubic,
    /// `|u|^p / p`, `p > 1`
    Monomial(f64),
    /// Ascending coefficients `a₀ + a₁u + a₂u² + …`
    Polynomial(Vec<f64>),
}

impl FromStr for FluxSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "burgers" => return Ok(FluxSpec::Burgers),
            "cubic" => return Ok(FluxSpec::Cubic),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("monomial:") {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad monomial exponent in {s:?}")))?;
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::Config(format!("monomial exponent must exceed 1, got {p}")));
            }
            return Ok(FluxSpec::Monomial(p));
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs: Vec<f64> = serde_json::from_str(rest.trim())
                .map_err(|e| Error::Config(format!("bad polynomial coefficients in {s:?}: {e}")))?;
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config("polynomial needs finite coefficients".into()));
            }
            return Ok(FluxSpec::Polynomial(coeffs));
        }
        Err(Error::Config(format!(
            "unknown flux {s:?}; expected burgers, cubic, monomial:p or poly:[c0,c1,...]"
        )))
    }
}

impl fmt::Display for FluxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxSpec::Burgers => write!(f, "burgers"),
            FluxSpec::Cubic => write!(f, "cubic"),
            FluxSpec::Monomial(p) => write!(f, "monomial:{p}"),
            FluxSpec::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "poly:[{}]", parts.join(","))
            }
        }
    }
}

impl FluxSpec {
    /// Instantiate the flux on `[lo, hi]`, computing a Lipschitz constant of
    /// `f'` on that range where one exists.
    pub fn build(&self, lo: f64, hi: f64) -> Result<FluxFunction> {
        let m = lo.abs().max(hi.abs());
        let name = self.to_string();
        match self.clone() {
            FluxSpec::Burgers => FluxFunction::new(
                name,
                |u| 0.5 * u * u,
                |u| u,
                (lo, hi),
                Smoothness::C2 { lipschitz: 1.0 },
            ),
            FluxSpec::Cubic => FluxFunction::new(
                name,
                |u| u * u * u / 3.0,
                |u| u * u,
                (lo, hi),
                Smoothness::C2 { lipschitz: 2.0 * m },
            ),
            FluxSpec::Monomial(p) => {
                let smoothness = if p >= 2.0 {
                    Smoothness::C2 {
                        lipschitz: (p - 1.0) * m.powf(p - 2.0),
                    }
                } else {
                    Smoothness::C1
                };
                FluxFunction::new(
                    name,
                    move |u: f64| u.abs().powf(p) / p,
                    move |u: f64| u.signum() * u.abs().powf(p - 1.0),
                    (lo, hi),
                    smoothness,
                )
            }
            FluxSpec::Polynomial(coeffs) => {
                let lipschitz: f64 = coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, a)| (k * (k - 1)) as f64 * a.abs() * m.powi(k as i32 - 2))
                    .sum();
                let d: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, a)| k as f64 * a)
                    .collect();
                FluxFunction::new(
                    name,
                    move |u| horner(&coeffs, u),
                    move |u| horner(&d, u),
                    (lo, hi),
                    Smoothness::C2 { lipschitz },
                )
            }
        }
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

/// Linear interpolation between strictly increasing knots, constant outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl FluxEval for PiecewiseLinearFunction {
    fn value(&self, u: f64) -> f64 {
        self.eval(u)
    }
}

impl PiecewiseLinearFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::argument("need one value per knot and at least one knot"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::argument("knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::argument("knots and values must be finite"));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn eval(&self, v: f64) -> f64 {
        let k = &self.knots;
        if v <= k[0] {
            return self.values[0];
        }
        if v >= k[k.len() - 1] {
            return self.values[k.len() - 1];
        }
        let i = k.partition_point(|&x| x <= v);
        let (x0, x1) = (k[i - 1], k[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (v - x0) / (x1 - x0)
    }

    /// Slope of each segment between consecutive knots.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Index of `v` among the knots if it coincides with one.
    pub(crate) fn knot_index(&self, v: f64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + v.abs());
        let i = self.knots.partition_point(|&x| x < v - tol);
        (i < self.knots.len() && (self.knots[i] - v).abs() <= tol).then_some(i)
    }
}

/// `n` equally spaced samples of `[a, b]` including both endpoints exactly.
pub fn sample_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut xs: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    xs[n - 1] = b;
    xs
}

/// Indices of the vertices of the lower convex hull of the points
/// `(xs[i], ys[i])`, with `xs` strictly increasing. Collinear interior
/// points are dropped.
pub fn lower_hull_indices(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

pub(crate) fn hull_function(xs: &[f64], ys: &[f64], idx: &[usize]) -> PiecewiseLinearFunction {
    PiecewiseLinearFunction {
        knots: idx.iter().map(|&i| xs[i]).collect(),
        values: idx.iter().map(|&i| ys[i]).collect(),
    }
}

fn envelope_args(f: &FluxFunction, a: f64, b: f64, n_samples: usize) -> Result<()> {
    if !(a < b) {
        return Err(Error::argument(format!("envelope interval needs a < b, got [{a}, {b}]")));
    }
    if n_samples < 2 {
        return Err(Error::argument("envelope needs at least two samples"));
    }
    f.check("a", a)?;
    f.check("b", b)
}

/// Largest convex minorant of the sampled graph of `f` on `[a, b]`.
pub fn convex_envelope(
    f: &FluxFunction,
    a: f64,
    b: f64,
    n_samples: usize,
) -> Result<PiecewiseLinearFunction> {
    envelope_args(f, a, b, n_samples)?;
    let xs = sample_grid(a, b, n_samples);
    let ys: Vec<f64> = xs.iter().map(|&v| f.eval(v)).collect();
    Ok(hull_function(&xs, &ys, &lower_hull_indices(&xs, &ys)))
}

/// Smallest concave majorant of the sampled graph, as `−(−f)⌣`.
pub fn concave_envelope(
    f: &FluxFunction,
    a: f64,
    b: f64,
    n_samples: usize,
) -> Result<PiecewiseLinearFunction> {
    envelope_args(f, a, b, n_samples)?;
    let xs = sample_grid(a, b, n_samples);
    let ys: Vec<f64> = xs.iter().map(|&v| -f.eval(v)).collect();
    Ok(hull_function(&xs, &ys, &lower_hull_indices(&xs, &ys)).negated())
}

/// One-sided slopes `(left, right)` of a piecewise-linear envelope at `v`.
/// At the outer knots the single adjacent slope is reported on both sides.
pub fn envelope_derivative(env: &PiecewiseLinearFunction, v: f64) -> Result<(f64, f64)> {
    let (lo, hi) = env.domain();
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if !(v >= lo - slack && v <= hi + slack) {
        return Err(Error::Domain {
            what: "v",
            value: v,
            lo,
            hi,
        });
    }
    let slopes = env.slopes();
    if slopes.is_empty() {
        return Ok((0.0, 0.0));
    }
    if let Some(j) = env.knot_index(v) {
        let left = if j == 0 { slopes[0] } else { slopes[j - 1] };
        let right = if j == slopes.len() { slopes[j - 1] } else { slopes[j] };
        return Ok((left, right));
    }
    let i = env.knots.partition_point(|&x| x <= v) - 1;
    Ok((slopes[i], slopes[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burgers(lo: f64, hi: f64) -> FluxFunction {
        FluxSpec::Burgers.build(lo, hi).unwrap()
    }

    fn custom(f: fn(f64) -> f64, df: fn(f64) -> f64, lo: f64, hi: f64) -> FluxFunction {
        FluxFunction::new("custom", f, df, (lo, hi), Smoothness::C1).unwrap()
    }

    #[test]
    fn divided_difference_examples() {
        let f = burgers(-5.0, 5.0);
        assert_eq!(divided_difference(&f, 3.0, 1.0).unwrap(), 2.0);
        assert_eq!(divided_difference(&f, 2.0, 2.0).unwrap(), 2.0);
        let g = custom(|u| u * u * u, |u| 3.0 * u * u, -3.0, 3.0);
        assert_eq!(divided_difference(&g, 2.0, 1.0).unwrap(), 7.0);
    }

    #[test]
    fn divided_difference_rejects_out_of_range() {
        let f = burgers(0.0, 1.0);
        match divided_difference(&f, 3.0, 0.5) {
            Err(Error::Domain { value, .. }) => assert_eq!(value, 3.0),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(divided_difference(&f, 0.5, -1.0).is_err());
    }

    #[test]
    fn divided_difference_is_continuous_at_switch() {
        let f = FluxSpec::Cubic.build(-2.0, 2.0).unwrap();
        for &c in &[-1.3f64, 0.0, 0.7, 1.9] {
            let eps = 1e-12 * (1.0 + 2.0 * c.abs());
            // Just outside the switch radius the quotient loses about
            // ulp(f) / |u - c| to cancellation.
            for u in [c - 2.0 * eps, c + 2.0 * eps] {
                assert!((f.slope(u, c) - f.derivative(c)).abs() < 1e-3, "c={c} u={u}");
            }
            assert!((f.slope(c + 1e-7, c) - f.derivative(c)).abs() < 1e-6);
        }
    }

    #[test]
    fn builtin_derivatives_match_finite_differences() {
        let specs = [
            FluxSpec::Burgers,
            FluxSpec::Cubic,
            FluxSpec::Monomial(4.0),
            FluxSpec::Monomial(2.5),
            FluxSpec::Polynomial(vec![0.1, -1.0, 0.5, 0.25]),
        ];
        for spec in specs {
            let f = spec.build(-2.0, 2.0).unwrap();
            assert!(f.derivative_mismatch(1e-4) < 1e-6, "{spec}");
            if let Some(excess) = f.lipschitz_excess(1e-3) {
                assert!(excess <= 1e-12, "{spec}: {excess}");
            }
        }
    }

    #[test]
    fn flux_spec_round_trips_through_text() {
        for s in ["burgers", "cubic", "monomial:4", "poly:[0,1,0.5]"] {
            let spec: FluxSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<FluxSpec>().unwrap(), spec);
        }
        assert!("monomial:1".parse::<FluxSpec>().is_err());
        assert!("sine".parse::<FluxSpec>().is_err());
        assert!("poly:[]".parse::<FluxSpec>().is_err());
        assert!(matches!(
            "monomial:1.5".parse::<FluxSpec>().unwrap().build(-1.0, 1.0).unwrap().smoothness(),
            Smoothness::C1
        ));
    }

    #[test]
    fn convex_envelope_of_convex_flux_is_the_sample_graph() {
        let f = burgers(0.0, 1.0);
        let env = convex_envelope(&f, 0.0, 1.0, 101).unwrap();
        assert_eq!(env.knots().len(), 101);
        for &v in env.knots() {
            assert!((env.eval(v) - f.eval(v)).abs() < 1e-15);
        }
    }

    #[test]
    fn double_well_envelope_has_flat_segment() {
        let f = custom(|u| (u * u - 1.0).powi(2), |u| 4.0 * u * (u * u - 1.0), -1.5, 1.5);
        let env = convex_envelope(&f, -1.5, 1.5, 3001).unwrap();
        assert!(env.eval(0.0).abs() < 1e-5);
        assert_eq!(envelope_derivative(&env, 0.0).unwrap(), (0.0, 0.0));
    }

    /// Brute force: the envelope at v is the largest value at v among all
    /// chords (v_i, v_j) whose line stays below every sample.
    fn chord_oracle(xs: &[f64], ys: &[f64], v: f64, lower: bool) -> f64 {
        let sign = if lower { 1.0 } else { -1.0 };
        let mut best = f64::NEG_INFINITY;
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                if !(xs[i] <= v && v <= xs[j]) {
                    continue;
                }
                let slope = (ys[j] - ys[i]) / (xs[j] - xs[i]);
                let line = |x: f64| ys[i] + slope * (x - xs[i]);
                let minorant = xs
                    .iter()
                    .zip(ys)
                    .all(|(&x, &y)| sign * (y - line(x)) >= -1e-12);
                if minorant {
                    best = best.max(sign * line(v));
                }
            }
        }
        sign * best
    }

    #[test]
    fn cubic_envelope_matches_chord_oracle() {
        let f = custom(|u| u * u * u, |u| 3.0 * u * u, -1.0, 1.0);
        let env = convex_envelope(&f, -1.0, 1.0, 3001).unwrap();
        // The chord oracle is quadratic per point; run it on a coarser grid
        // whose nodes are a subset of the fine one and compare on that grid.
        let coarse = sample_grid(-1.0, 1.0, 61);
        let ys: Vec<f64> = coarse.iter().map(|&v| f.eval(v)).collect();
        let oracle = chord_oracle(&coarse, &ys, 0.0, true);
        let coarse_env = convex_envelope(&f, -1.0, 1.0, 61).unwrap();
        assert!((coarse_env.eval(0.0) - oracle).abs() < 1e-12);
        // Tangent from (-1, -1) touches u³ at 1/2: the envelope at 0 is -1/4.
        assert!((env.eval(0.0) + 0.25).abs() < 1e-5);
    }

    #[test]
    fn concave_envelope_examples() {
        let f = burgers(0.0, 1.0);
        let env = concave_envelope(&f, 0.0, 1.0, 101).unwrap();
        assert_eq!(env.knots(), &[0.0, 1.0]);
        assert_eq!(env.values(), &[0.0, 0.5]);
        assert_eq!(envelope_derivative(&env, 0.5).unwrap(), (0.5, 0.5));

        let g = custom(|u| (u * u - 1.0).powi(2), |u| 4.0 * u * (u * u - 1.0), -1.5, 1.5);
        let cav = concave_envelope(&g, -1.5, 1.5, 61).unwrap();
        let neg = convex_envelope(&g.negated(), -1.5, 1.5, 61).unwrap();
        for &v in &sample_grid(-1.5, 1.5, 61) {
            assert!((cav.eval(v) + neg.eval(v)).abs() < 1e-14);
            assert!(cav.eval(v) >= g.eval(v) - 1e-14);
        }
        let xs = sample_grid(-1.5, 1.5, 61);
        let ys: Vec<f64> = xs.iter().map(|&v| g.eval(v)).collect();
        assert!((cav.eval(0.0) - chord_oracle(&xs, &ys, 0.0, false)).abs() < 1e-12);
    }

    #[test]
    fn envelope_derivative_of_burgers() {
        let f = burgers(0.0, 1.0);
        let n = 101;
        let env = convex_envelope(&f, 0.0, 1.0, n).unwrap();
        let (l, r) = envelope_derivative(&env, 0.5).unwrap();
        assert!((l - 0.5).abs() <= 2.0 / n as f64 && (r - 0.5).abs() <= 2.0 / n as f64);
        assert!(l <= r);
        assert!(envelope_derivative(&env, 1.5).is_err());
    }

    #[test]
    fn envelope_rejects_bad_interval() {
        let f = burgers(0.0, 1.0);
        assert!(convex_envelope(&f, 1.0, 0.0, 10).is_err());
        assert!(convex_envelope(&f, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn reflected_flux_evaluates_mirror() {
        let f = FluxSpec::Cubic.build(-1.0, 2.0).unwrap();
        let g = f.reflected();
        assert_eq!(g.u_range(), (-2.0, 1.0));
        assert_eq!(g.eval(0.5), f.eval(-0.5));
        assert_eq!(g.derivative(0.5), -f.derivative(-0.5));
    }
}
