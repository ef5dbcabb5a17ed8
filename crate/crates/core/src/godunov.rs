//! First-order Godunov scheme with the Osher interface flux.

use std::io::Write;

use crate::error::{Error, Result};
use crate::flux::FluxFunction;
use crate::fronttrack::FrontTrackSolution;
use crate::piecewise::PiecewiseConstant1D;

#[derive(Clone, Debug, PartialEq)]
pub struct GodunovOptions {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Times the stepper must land on exactly, besides `t_end`.
    pub save_times: Vec<f64>,
}

impl GodunovOptions {
    pub fn new(x_min: f64, x_max: f64, dx: f64, t_end: f64) -> Self {
        Self {
            x_min,
            x_max,
            dx,
            t_end,
            cfl: 0.9,
            save_times: Vec::new(),
        }
    }
}

/// Cell averages on a uniform grid at every time level.
#[derive(Clone, Debug)]
pub struct GridSolution {
    x_min: f64,
    dx: f64,
    n_cells: usize,
    times: Vec<f64>,
    levels: Vec<Vec<f64>>,
    flux: FluxFunction,
    cfl: f64,
}

/// Osher flux: the minimum of `f` over `[a, b]` when `a ≤ b`, the maximum
/// over `[b, a]` otherwise.
pub fn interface_flux(f: &FluxFunction, a: f64, b: f64) -> f64 {
    if a == b {
        return f.eval(a);
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let pick: fn(f64, f64) -> f64 = if a < b { f64::min } else { f64::max };
    let mut best = pick(f.eval(lo), f.eval(hi));
    const PIECES: usize = 8;
    let width = (hi - lo) / PIECES as f64;
    let mut x0 = lo;
    let mut d0 = f.derivative(lo);
    for k in 1..=PIECES {
        let x1 = if k == PIECES { hi } else { lo + width * k as f64 };
        let d1 = f.derivative(x1);
        if d0 == 0.0 {
            best = pick(best, f.eval(x0));
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            let (mut p, mut q, mut dp) = (x0, x1, d0);
            for _ in 0..60 {
                let m = 0.5 * (p + q);
                let dm = f.derivative(m);
                if dm.signum() == dp.signum() {
                    p = m;
                    dp = dm;
                } else {
                    q = m;
                }
            }
            best = pick(best, f.eval(0.5 * (p + q)));
        }
        x0 = x1;
        d0 = d1;
    }
    best
}

/// Godunov solution of `u_t + f(u)_x = 0` on `[x_min, x_max]` with
/// constant extension outside. The initial data are averaged exactly over
/// each cell.
pub fn godunov_solve(
    u0: &PiecewiseConstant1D,
    f: &FluxFunction,
    opts: &GodunovOptions,
) -> Result<GridSolution> {
    let GodunovOptions {
        x_min,
        x_max,
        dx,
        t_end,
        cfl,
        ..
    } = *opts;
    if !(dx > 0.0 && x_max > x_min) {
        return Err(Error::argument(format!(
            "need dx > 0 and x_min < x_max, got dx = {dx} on [{x_min}, {x_max}]"
        )));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::argument(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::argument(format!("end time must be positive, got {t_end}")));
    }
    for &v in u0.values() {
        f.check("initial value", v)?;
    }
    let n = ((x_max - x_min) / dx).round() as usize;
    if n == 0 || ((n as f64) * dx - (x_max - x_min)).abs() > 1e-9 * (x_max - x_min) {
        return Err(Error::argument(format!(
            "dx = {dx} does not divide [{x_min}, {x_max}] into whole cells"
        )));
    }
    let cells: Vec<f64> = (0..n)
        .map(|i| {
            let a = x_min + i as f64 * dx;
            let b = a + dx;
            let bps = u0.breakpoints();
            let first = bps.partition_point(|&x| x <= a);
            if first == bps.len() || bps[first] >= b {
                u0.values()[first]
            } else {
                u0.integrate(a, b, |v| v) / dx
            }
        })
        .collect();

    let mut stops: Vec<f64> = opts
        .save_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t_end)
        .collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut times = vec![0.0];
    let mut levels = vec![cells];
    let mut t = 0.0;
    let mut fluxes = vec![0.0; n + 1];
    let mut next_stop = 0;
    while next_stop < stops.len() {
        let u = levels.last().unwrap();
        let speed = u.iter().map(|&v| f.derivative(v).abs()).fold(0.0, f64::max);
        let target = stops[next_stop];
        let mut dt = if speed > 0.0 { cfl * dx / speed } else { target - t };
        let landed = t + dt >= target - 1e-14 * (1.0 + target);
        if landed {
            dt = target - t;
            next_stop += 1;
        }
        if speed * dt / dx > cfl * (1.0 + 1e-12) {
            return Err(Error::Internal(format!(
                "CFL number {} exceeds {cfl} at t = {t}",
                speed * dt / dx
            )));
        }
        fluxes[0] = f.eval(u[0]);
        fluxes[n] = f.eval(u[n - 1]);
        for i in 1..n {
            fluxes[i] = interface_flux(f, u[i - 1], u[i]);
        }
        let r = dt / dx;
        let next: Vec<f64> = (0..n).map(|i| u[i] - r * (fluxes[i + 1] - fluxes[i])).collect();
        t = if landed { target } else { t + dt };
        times.push(t);
        levels.push(next);
    }

    Ok(GridSolution {
        x_min,
        dx,
        n_cells: n,
        times,
        levels,
        flux: f.clone(),
        cfl,
    })
}

impl GridSolution {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.dx * self.n_cells as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    pub fn flux(&self) -> &FluxFunction {
        &self.flux
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Interface between cells `i` and `i + 1`.
    pub(crate) fn interface(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.dx
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        let hi = self.t_end();
        if t.is_finite() && t >= 0.0 && t <= hi * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi,
            })
        }
    }

    /// The latest level at or before `t`.
    pub fn level_index(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        let tol = 1e-12 * (1.0 + t.abs());
        Ok(self.times.partition_point(|&s| s <= t + tol).saturating_sub(1))
    }

    /// The grid function at the latest level not after `t`, extended by
    /// the boundary cells.
    pub fn snapshot(&self, t: f64) -> Result<PiecewiseConstant1D> {
        let k = self.level_index(t)?;
        let bps = (0..self.n_cells - 1).map(|i| self.interface(i)).collect();
        PiecewiseConstant1D::new(bps, self.levels[k].clone())
    }

    /// `Δx · Σ u_i` at level `k`.
    pub fn mass(&self, k: usize) -> f64 {
        self.dx * self.levels[k].iter().sum::<f64>()
    }

    /// Writes rows `t, cell_center, u_avg` at the levels nearest to `times`.
    pub fn write_snapshot_csv<W: Write>(&self, times: &[f64], out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Internal(format!("writing snapshot: {e}"));
        writeln!(out, "t,cell_center,u_avg").map_err(io)?;
        for &t in times {
            let k = self.level_index(t)?;
            for (i, u) in self.levels[k].iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e},{u:.16e}", self.times[k], self.cell_center(i))
                    .map_err(io)?;
            }
        }
        Ok(())
    }
}

/// `∫_window |u_grid(·, t) − u_front(·, t)|`, exact for the two step functions.
pub fn l1_distance(
    a: &GridSolution,
    b: &FrontTrackSolution,
    t: f64,
    window: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::argument(format!("empty window [{lo}, {hi}]")));
    }
    if hi <= a.x_min() || lo >= a.x_max() {
        return Err(Error::argument(format!(
            "window [{lo}, {hi}] is disjoint from the grid [{}, {}]",
            a.x_min(),
            a.x_max()
        )));
    }
    let ga = a.snapshot(t)?;
    let fb = b.snapshot(t)?;
    Ok(ga.l1_distance(&fb, lo, hi))
}
