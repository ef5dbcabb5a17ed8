//! Named initial data and ready-to-run scenarios.

use super::config::{parse_config, InitialData, ScenarioConfig};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub flux: &'static str,
    pub initial: InitialData,
    /// Whether the preset is meant to be solved as an entropy solution.
    pub entropic: bool,
}

const NAMES: [&str; 9] = [
    "example_3_1",
    "example_6",
    "example_6_nonentropic",
    "burgers_shock",
    "burgers_wave",
    "cubic_riemann",
    "cubic_bump",
    "quartic_rarefaction",
    "sign_traveling_wave",
];

pub fn names() -> Vec<&'static str> {
    NAMES.to_vec()
}

fn data(breakpoints: &[f64], values: &[f64], speed: Option<f64>) -> InitialData {
    InitialData {
        breakpoints: breakpoints.to_vec(),
        values: values.to_vec(),
        traveling_speed: speed,
    }
}

pub fn initial_data(name: &str) -> Option<Preset> {
    let (description, flux, initial) = match name {
        "example_3_1" => (
            "Burgers, Heaviside step 0 | 1: a centred rarefaction",
            "burgers",
            data(&[0.0], &[0.0, 1.0], None),
        ),
        "example_6" => (
            "Burgers, box 1 | 3 | 1 on (0, 1): rarefaction followed by a shock",
            "burgers",
            data(&[0.0, 1.0], &[1.0, 3.0, 1.0], None),
        ),
        "example_6_nonentropic" => (
            "Burgers, the box 1 | 3 | 1 translated rigidly at speed 2",
            "burgers",
            data(&[0.0, 1.0], &[1.0, 3.0, 1.0], Some(2.0)),
        ),
        "burgers_shock" => (
            "Burgers, step 1 | 0: a single shock of speed 1/2",
            "burgers",
            data(&[0.0], &[1.0, 0.0], None),
        ),
        "burgers_wave" => (
            "Burgers, 0 | 1 | -1 | 0: interacting rarefactions and shock",
            "burgers",
            data(&[-1.0, 0.0, 1.0], &[0.0, 1.0, -1.0, 0.0], None),
        ),
        "cubic_riemann" => (
            "u^3/3, step -1 | 1: a shock attached to a rarefaction",
            "cubic",
            data(&[0.0], &[-1.0, 1.0], None),
        ),
        "cubic_bump" => (
            "u^3/3, -1 | 1 | -0.5: colliding composite waves",
            "cubic",
            data(&[0.0, 1.0], &[-1.0, 1.0, -0.5], None),
        ),
        "quartic_rarefaction" => (
            "|u|^4/4, step -1 | 1: a centred rarefaction",
            "monomial:4",
            data(&[0.0], &[-1.0, 1.0], None),
        ),
        "sign_traveling_wave" => (
            "Burgers, 1 + sgn(x - t): an upward jump translated at its shock speed",
            "burgers",
            data(&[0.0], &[0.0, 2.0], Some(1.0)),
        ),
        _ => return None,
    };
    let entropic = initial.traveling_speed.is_none();
    Some(Preset {
        name: NAMES.iter().find(|n| **n == name).copied()?,
        description,
        flux,
        initial,
        entropic,
    })
}

/// A complete scenario for a preset with moderate resolution and the checks
/// that apply to it.
pub fn scenario(name: &str) -> Option<ScenarioConfig> {
    let p = initial_data(name)?;
    let convex = p.flux != "cubic";
    let (c_list, starts, t_end) = match name {
        "example_3_1" => ("[0, 1]", "[0, 0.125, 0.5, 1, -0.5, 1.5]", 2.0),
        "example_6" => ("[0, 2]", "[-0.5, 0, 0.5, 1, 1.5, 2.5, 3]", 1.0),
        "example_6_nonentropic" => ("[0, 2]", "[-0.5, 0, 0.5, 1, 1.5, 3]", 1.0),
        "burgers_shock" => ("[0, 0.5, 1]", "[-1, -0.25, 0, 0.25, 1]", 1.0),
        "burgers_wave" => ("[0, 0.5]", "[-1.5, -1, -0.5, 0, 0.5, 1, 1.5]", 1.0),
        "cubic_riemann" => ("[0, 0.5]", "[-1, -0.25, 0, 0.25, 0.5, 1.5]", 1.0),
        "cubic_bump" => ("[0, 0.5]", "[-1, -0.25, 0, 0.5, 1, 1.5]", 1.0),
        "quartic_rarefaction" => ("[0]", "[-1.5, -0.5, 0, 0.5, 1.5]", 2.0),
        "sign_traveling_wave" => ("[0, 1]", "[-1, -0.5, 0, 0.5, 1.5]", 1.0),
        _ => return None,
    };
    let mut checks = vec!["classify", "extremal", "flow_structure", "squeeze"];
    if p.entropic {
        checks.extend(["compression", "mass_decay", "entropy_growth", "holder", "pushforward"]);
        if convex {
            checks.push("oleinik");
        }
        if p.initial.traveling_speed.is_none() {
            checks.push("oracle");
        }
    }
    let checks: Vec<String> = checks.iter().map(|c| format!("\"{c}\"")).collect();
    // The box data put two rarefaction corners and a shock in the support.
    let dx = if name == "example_6" { 0.0025 } else { 0.005 };
    let text = format!(
        r#"{{
            "name": "{name}",
            "preset": "{name}",
            "c_list": {c_list},
            "T": {t_end},
            "delta": 0.00390625,
            "dx": {dx},
            "starts": {starts},
            "checks": [{}]
        }}"#,
        checks.join(", ")
    );
    Some(parse_config(&text).expect("preset scenarios are valid"))
}
