//! Step functions on the real line with good-representative queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A step function `u` given by strictly increasing breakpoints
/// `x₁ < … < x_n` and `n + 1` values: the value left of `x₁`, between
/// consecutive breakpoints, and right of `x_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant1D {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

impl PiecewiseConstant1D {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::argument(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::argument("breakpoints must be strictly increasing"));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::argument("breakpoints and values must be finite"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(k: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![k],
        }
    }

    /// Builds a step function from jumps sorted by position. Jumps at the
    /// same point are merged (left state of the first, right state of the
    /// last) and jumps with equal sides are dropped.
    pub fn from_jumps(far_left: f64, jumps: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut values = vec![far_left];
        for (x, _left, right) in jumps {
            match breakpoints.last() {
                Some(&last) if same_point(last, x) || x < last => {
                    *values.last_mut().unwrap() = right;
                }
                _ => {
                    breakpoints.push(x);
                    values.push(right);
                }
            }
        }
        Self { breakpoints, values }.simplified()
    }

    /// Removes breakpoints across which the value does not change.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = Vec::with_capacity(self.breakpoints.len());
        let mut values = vec![self.values[0]];
        for (i, &x) in self.breakpoints.iter().enumerate() {
            let v = self.values[i + 1];
            if v != *values.last().unwrap() {
                breakpoints.push(x);
                values.push(v);
            }
        }
        Self { breakpoints, values }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One-sided limits `(u(x−), u(x+))`.
    pub fn limits(&self, x: f64) -> (f64, f64) {
        let tol = 1e-12 * (1.0 + x.abs());
        let i = self.breakpoints.partition_point(|&b| b < x - tol);
        if i < self.breakpoints.len() && (self.breakpoints[i] - x).abs() <= tol {
            (self.values[i], self.values[i + 1])
        } else {
            (self.values[i], self.values[i])
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// `∫ₐᵇ g(u(z)) dz`, exact for the step function. Reversed bounds give
    /// the negated integral.
    pub fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        if b < a {
            return -self.integrate(b, a, g);
        }
        let mut total = 0.0;
        let mut left = a;
        let start = self.breakpoints.partition_point(|&x| x <= a);
        for (i, &x) in self.breakpoints.iter().enumerate().skip(start) {
            if x >= b {
                break;
            }
            total += g(self.values[i]) * (x - left);
            left = x;
        }
        let last = self.breakpoints.partition_point(|&x| x < b);
        total + g(self.values[last]) * (b - left)
    }

    /// `∫ₐᵇ |u − w| dz` for another step function `w`.
    pub fn l1_distance(&self, other: &Self, a: f64, b: f64) -> f64 {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (self.limits(mid).0 - other.limits(mid).0).abs() * (w[1] - w[0])
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_6() -> PiecewiseConstant1D {
        PiecewiseConstant1D::new(vec![0.0, 1.0], vec![1.0, 3.0, 1.0]).unwrap()
    }

    #[test]
    fn limits_follow_good_representative() {
        let u = example_6();
        assert_eq!(u.limits(0.0), (1.0, 3.0));
        assert_eq!(u.limits(1.0), (3.0, 1.0));
        assert_eq!(u.limits(0.5), (3.0, 3.0));
        assert_eq!(u.limits(-7.0), (1.0, 1.0));
        assert_eq!(PiecewiseConstant1D::constant(2.0).limits(5.0), (2.0, 2.0));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(PiecewiseConstant1D::new(vec![1.0, 0.0], vec![0.0; 3]).is_err());
        assert!(PiecewiseConstant1D::new(vec![0.0], vec![0.0]).is_err());
        assert!(PiecewiseConstant1D::new(vec![0.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn integrate_is_exact() {
        let u = example_6();
        assert_eq!(u.integrate(-1.0, 2.0, |v| v), 1.0 + 3.0 + 1.0);
        assert_eq!(u.integrate(0.25, 0.75, |v| v), 1.5);
        assert_eq!(u.integrate(2.0, -1.0, |v| v), -5.0);
        assert_eq!(u.integrate(-1.0, 2.0, |v| (v - 2.0).abs()), 3.0);
    }

    #[test]
    fn from_jumps_merges_coincident_fronts() {
        let u = PiecewiseConstant1D::from_jumps(
            0.0,
            [(0.0, 0.0, 0.5), (0.0, 0.5, 1.0), (2.0, 1.0, 1.0)],
        );
        assert_eq!(u.breakpoints(), &[0.0]);
        assert_eq!(u.values(), &[0.0, 1.0]);
    }

    #[test]
    fn l1_distance_of_shifted_steps() {
        let a = PiecewiseConstant1D::new(vec![0.0], vec![1.0, 0.0]).unwrap();
        let b = PiecewiseConstant1D::new(vec![0.25], vec![1.0, 0.0]).unwrap();
        assert!((a.l1_distance(&b, -1.0, 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(a.l1_distance(&a, -1.0, 1.0), 0.0);
    }
}
