use proptest::prelude::*;

use clawpath::diagnostics::{entropy_production_jump, EntropyPair};
use clawpath::filippov::flow_map;
use clawpath::flux::{convex_envelope, divided_difference, lower_hull_indices};
use clawpath::fronttrack::{front_track_with, prescribe_traveling_wave};
use clawpath::godunov::godunov_solve;
use clawpath::riemann::{particle_velocity, solve_riemann, verify_squeeze, DEFAULT_SAMPLES};
use clawpath::{
    FluxFunction, FluxSpec, FrontTrackOptions, FrontTrackSolution, GodunovOptions, PiecewiseConstant1D,
    VelocityField,
};

fn flux(kind: u8) -> FluxFunction {
    match kind % 3 {
        0 => FluxSpec::Burgers,
        1 => FluxSpec::Cubic,
        _ => FluxSpec::Polynomial(vec![0.0, 0.3, -0.5, 0.0, 0.25]),
    }
    .build(-2.0, 2.0)
    .unwrap()
}

/// Random step data on [-1, 1] with states in [-1, 1].
fn step_data(max_jumps: usize) -> impl Strategy<Value = PiecewiseConstant1D> {
    (1..=max_jumps)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(-1.0f64..1.0, n + 1),
            )
        })
        .prop_filter_map("distinct breakpoints", |(mut xs, vs)| {
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                return None;
            }
            PiecewiseConstant1D::new(xs, vs).ok()
        })
}

/// Step data that vanish outside [-1, 1].
fn bump_data(max_jumps: usize) -> impl Strategy<Value = PiecewiseConstant1D> {
    step_data(max_jumps).prop_map(|u| {
        let mut v = u.values().to_vec();
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        PiecewiseConstant1D::new(u.breakpoints().to_vec(), v).unwrap()
    })
}

fn track(u0: &PiecewiseConstant1D, f: &FluxFunction, delta: f64, t: f64, nodes: &[f64]) -> FrontTrackSolution {
    let opts = FrontTrackOptions::new(delta, t).with_extra_nodes(nodes.iter().copied());
    front_track_with(u0, f, &opts).unwrap()
}

fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (g(a) + g(b) + inner) * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divided_difference_averages_the_derivative(kind in 0u8..3, u in -2.0f64..2.0, c in -2.0f64..2.0) {
        let f = flux(kind);
        let a = divided_difference(&f, u, c).unwrap();
        let avg = simpson(|s| f.derivative(c + s * (u - c)), 0.0, 1.0, 64);
        prop_assert!((a - avg).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {avg}");
    }

    #[test]
    fn envelope_is_convex_below_and_idempotent(kind in 0u8..3, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let f = flux(kind);
        let (lo, hi) = (a.min(b), a.max(b));
        let env = convex_envelope(&f, lo, hi, 513).unwrap();
        let s = env.slopes();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!((env.eval(lo) - f.eval(lo)).abs() < 1e-12);
        prop_assert!((env.eval(hi) - f.eval(hi)).abs() < 1e-12);
        for &v in env.knots() {
            prop_assert!(env.eval(v) <= f.eval(v) + 1e-12);
        }
        let again = lower_hull_indices(env.knots(), env.values());
        prop_assert_eq!(again.len(), env.knots().len());
    }

    #[test]
    fn mirrored_problem_mirrors_velocity(kind in 0u8..3, ul in -2.0f64..2.0, ur in -2.0f64..2.0, c in -2.0f64..2.0) {
        let f = flux(kind);
        let v = particle_velocity(&f, ul, ur, c).unwrap().velocity;
        let m = particle_velocity(&f.reflected(), -ur, -ul, -c).unwrap().velocity;
        prop_assert!((v + m).abs() < 1e-6, "{v} vs {m}");
    }

    #[test]
    fn constant_data_move_with_the_divided_difference(kind in 0u8..3, u in -2.0f64..2.0, c in -2.0f64..2.0) {
        let f = flux(kind);
        let v = particle_velocity(&f, u, u, c).unwrap().velocity;
        prop_assert!((v - f.slope(u, c)).abs() < 1e-9);
    }

    #[test]
    fn squeeze_holds(kind in 0u8..3, ul in -2.0f64..2.0, ur in -2.0f64..2.0, c in -2.0f64..2.0) {
        let f = flux(kind);
        let pv = particle_velocity(&f, ul, ur, c).unwrap();
        prop_assert!(verify_squeeze(&f, &pv).unwrap() >= -1e-8);
    }

    #[test]
    fn riemann_jumps_are_entropic(kind in 0u8..3, ul in -2.0f64..2.0, ur in -2.0f64..2.0) {
        let f = flux(kind);
        let fan = solve_riemann(&f, ul, ur).unwrap();
        // Single sampling steps stand in for rarefactions; they are entropic
        // only for the sampled flux.
        let spacing = (ul - ur).abs() / (DEFAULT_SAMPLES - 1) as f64;
        let states = fan.states();
        prop_assert_eq!(states[0], ul);
        prop_assert_eq!(*states.last().unwrap(), ur);
        for w in fan.waves.iter().filter(|w| (w.right - w.left).abs() > 2.5 * spacing) {
            let (lo, hi) = (w.left.min(w.right), w.left.max(w.right));
            for i in 1..16 {
                let k = lo + (hi - lo) * i as f64 / 16.0;
                let p = entropy_production_jump(&f, w.left, w.right, w.speed, EntropyPair::Kruzkhov { k });
                prop_assert!(p >= -1e-10, "jump {} -> {} at k = {k}: {p}", w.left, w.right);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn front_tracking_conserves_mass(kind in 0u8..3, u0 in step_data(5)) {
        let f = flux(kind);
        let sol = track(&u0, &f, 1.0 / 64.0, 1.0, &[]);
        let (l, r) = sol.far_states();
        // Over [-a, a] the mass changes only by the boundary fluxes.
        let a = 10.0;
        let m0 = u0.integrate(-a, a, |u| u);
        let m1 = sol.snapshot(1.0).unwrap().integrate(-a, a, |u| u);
        let boundary = f.eval(l) - f.eval(r);
        prop_assert!((m1 - m0 - boundary).abs() < 1e-9, "{m0} {m1} {boundary}");
    }

    #[test]
    fn front_tracking_contracts_in_l1(kind in 0u8..3, u0 in bump_data(4), v0 in bump_data(4)) {
        let f = flux(kind);
        let nodes: Vec<f64> = u0.values().iter().chain(v0.values()).copied().collect();
        let a = track(&u0, &f, 1.0 / 64.0, 1.0, &nodes);
        let b = track(&v0, &f, 1.0 / 64.0, 1.0, &nodes);
        let before = u0.l1_distance(&v0, -10.0, 10.0);
        for t in [0.25, 0.5, 1.0] {
            let after = a.snapshot(t).unwrap().l1_distance(&b.snapshot(t).unwrap(), -10.0, 10.0);
            prop_assert!(after <= before + 1e-9, "t = {t}: {after} > {before}");
        }
    }

    #[test]
    fn total_variation_does_not_grow(kind in 0u8..3, u0 in step_data(5)) {
        let f = flux(kind);
        let sol = track(&u0, &f, 1.0 / 64.0, 1.0, &[]);
        let tv0 = u0.total_variation();
        for t in [0.25, 0.5, 1.0] {
            prop_assert!(sol.snapshot(t).unwrap().total_variation() <= tv0 + 1e-9);
        }
    }

    #[test]
    fn interactions_never_add_fronts(kind in 0u8..3, u0 in step_data(5)) {
        let f = flux(kind);
        let sol = track(&u0, &f, 1.0 / 64.0, 1.0, &[]);
        let mut prev = usize::MAX;
        let mut times = sol.event_times();
        times.push(1.0);
        for t in times {
            let n = sol.fronts_at(t).unwrap().len();
            prop_assert!(n <= prev, "front count rose to {n} at t = {t}");
            prev = n;
        }
    }

    #[test]
    fn godunov_is_monotone_and_conservative(kind in 0u8..3, u0 in step_data(4), bump in 0.0f64..0.5) {
        let f = flux(kind);
        // Far states of ±1.5 fix the largest wave speed, so both runs take
        // the same time steps.
        let padded = |vals: &[f64]| {
            let mut bps = vec![-2.5];
            bps.extend(u0.breakpoints());
            bps.push(2.5);
            let mut vs = vec![-1.5];
            vs.extend(vals);
            vs.push(1.5);
            PiecewiseConstant1D::new(bps, vs).unwrap()
        };
        let mut raised = u0.values().to_vec();
        raised[1] += bump;
        let opts = GodunovOptions::new(-6.0, 6.0, 0.02, 0.25);
        let a = godunov_solve(&padded(u0.values()), &f, &opts).unwrap();
        let b = godunov_solve(&padded(&raised), &f, &opts).unwrap();
        prop_assert_eq!(a.times(), b.times());
        let k = a.times().len() - 1;
        prop_assert!(a.level(k).iter().zip(b.level(k)).all(|(x, y)| x <= &(y + 1e-12)));
        let boundary = 0.25 * (f.eval(-1.5) - f.eval(1.5));
        prop_assert!((a.mass(k) - a.mass(0) - boundary).abs() < 1e-9);
    }

    #[test]
    fn entropic_flow_is_monotone(kind in 0u8..3, u0 in step_data(4), c in -1.0f64..1.0) {
        let f = flux(kind);
        let sol = track(&u0, &f, 1.0 / 64.0, 1.0, &[c]);
        let field = VelocityField::over_fronts(&sol, &f, c).unwrap();
        let starts: Vec<f64> = (0..81).map(|i| -2.0 + 4.0 * i as f64 / 80.0).collect();
        let flow = flow_map(&field, 0.0, &starts, &[0.5, 1.0]).unwrap();
        prop_assert_eq!(flow.monotonicity_violations, 0);
    }

    #[test]
    fn l1_distance_is_a_metric(u in step_data(4), v in step_data(4), w in step_data(4)) {
        let d = |a: &PiecewiseConstant1D, b: &PiecewiseConstant1D| a.l1_distance(b, -3.0, 3.0);
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-12);
        prop_assert!((d(&u, &v) - d(&v, &u)).abs() < 1e-12);
        prop_assert!(d(&u, &u).abs() < 1e-15);
    }

    /// The entropy dissipated by a traveling jump, measured weakly against a
    /// smooth space-time bump, equals the jump production times ∫φ along it.
    #[test]
    fn jump_production_matches_weak_form(ul in -1.5f64..1.5, ur in -1.5f64..1.5, k in -1.5f64..1.5) {
        prop_assume!((ul - ur).abs() > 0.1);
        let f = flux(0);
        let speed = 0.5 * (ul + ur);
        let u0 = PiecewiseConstant1D::new(vec![0.0], vec![ul, ur]).unwrap();
        let sol = prescribe_traveling_wave(&u0, &f, speed, 2.0).unwrap();
        let pair = EntropyPair::Kruzkhov { k };
        // φ = ψ(x − 0.1)ψ(t − 1) with ψ a C³ bump of radius 0.5.
        let psi = |z: f64| if z.abs() < 0.5 { (1.0 - 4.0 * z * z).powi(4) } else { 0.0 };
        let dpsi = |z: f64| if z.abs() < 0.5 { -32.0 * z * (1.0 - 4.0 * z * z).powi(3) } else { 0.0 };
        let weak = simpson(|t| {
            let x0 = speed * t;
            let (left, right) = sol.evaluate(x0, t).unwrap();
            let g = |u: f64, x: f64| {
                pair.eta(u) * psi(x - 0.1) * dpsi(t - 1.0) + pair.q(&f, u) * dpsi(x - 0.1) * psi(t - 1.0)
            };
            // Split at the jump so each side is smooth.
            simpson(|x| g(left, x), -3.4, x0, 2000) + simpson(|x| g(right, x), x0, 3.6, 2000)
        }, 0.5, 1.5, 200);
        let along = simpson(|t| psi(speed * t - 0.1) * psi(t - 1.0), 0.5, 1.5, 2000);
        let production = entropy_production_jump(&f, ul, ur, speed, pair);
        // ∫∫ η φ_t + q φ_x = ∫ (σ[η] − [q]) φ along the jump
        prop_assert!((weak - production * along).abs() < 1e-5, "{weak} vs {}", production * along);
    }
}
