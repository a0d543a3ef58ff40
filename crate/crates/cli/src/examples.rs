//! Built-in scenarios.

use serde_json::{json, Value};

use crate::scenario::Scenario;

/// Names accepted by `examples --name`.
pub const NAMES: [&str; 4] = ["inverted-oscillator", "radial-r2", "vplus-vminus", "sphere-geodesic"];

fn scenario(v: Value) -> Scenario {
    serde_json::from_value(v).expect("built-in scenarios are well formed")
}

fn inverted_oscillator() -> Scenario {
    scenario(json!({
        "name": "inverted-oscillator",
        "seed": 1,
        "system": {
            "dimension": 1,
            "parameters": { "mu": 1.0 },
            "natural": { "kinetic": [["1"]], "potential": "-0.5*mu^2*x1^2" }
        },
        "analysis": [
            { "kind": "spectrum", "initial": [1.0, 0.0], "horizon": 50.0, "interval": 0.5 },
            {
                "kind": "lyapunov",
                "initial": [1.0, 0.0],
                "seminorm": { "type": "custom", "matrix": [["1/(x1^2 + 1)"]], "block": "configuration" },
                "horizon": 50.0,
                "interval": 0.5
            },
            { "kind": "local-stability", "initial": [1.0, 0.0], "t_end": 5.0, "samples": 50 },
            {
                "kind": "compare",
                "initial": [std::f64::consts::SQRT_2, 1.0],
                "energy": -0.5,
                "horizon": 50.0,
                "interval": 0.5
            }
        ],
        "output": { "directory": "inverted-oscillator-out" }
    }))
}

fn radial_r2() -> Scenario {
    scenario(json!({
        "name": "radial-r2",
        "system": {
            "dimension": 2,
            "natural": { "kinetic": [["1", "0"], ["0", "1"]], "potential": "x1^2 + x2^2" }
        },
        "analysis": [
            {
                "kind": "jacobi-translate",
                "initial": [0.0, 0.0, std::f64::consts::SQRT_2, 0.0],
                "energy": 1.0,
                "tau_end": 100.0
            },
            {
                "kind": "jacobi-translate",
                "initial": [0.5, 0.0, 1.2083045973594573, 0.2],
                "energy": 1.0,
                "tau_end": 100.0
            },
            {
                "kind": "compare",
                "initial": [0.5, 0.0, 1.2083045973594573, 0.2],
                "energy": 1.0,
                "horizon": 50.0,
                "interval": 0.5
            }
        ],
        "output": { "directory": "radial-r2-out" }
    }))
}

fn vplus_vminus(sign: &str) -> Scenario {
    let name = format!("vplus-vminus-{}", if sign == "+" { "plus" } else { "minus" });
    scenario(json!({
        "name": name,
        "system": {
            "dimension": 2,
            "definitions": [["r2", "x1^2 + x2^2"]],
            "natural": {
                "kinetic": [["1", "0"], ["0", "1"]],
                "potential": format!("2*r2 - r2^2 {sign} 2*step(r2 - 1)*(r2 - 1)^2")
            }
        },
        "analysis": [
            {
                "kind": "jacobi-translate",
                "initial": [0.1, 0.0, 1.3964956140282, 0.1],
                "energy": 1.0,
                "tau_end": 50.0
            },
            { "kind": "local-stability", "initial": [1.2, 0.0, 0.0, 0.0], "t_end": 0.1, "samples": 2 },
            {
                "kind": "compare",
                "initial": [0.1, 0.0, 1.3964956140282, 0.1],
                "energy": 1.0,
                "horizon": 20.0,
                "interval": 0.5
            }
        ],
        "output": { "directory": format!("{name}-out") }
    }))
}

fn sphere_geodesic() -> Scenario {
    let start = [std::f64::consts::FRAC_PI_2, 0.0, 0.0, 1.0];
    scenario(json!({
        "name": "sphere-geodesic",
        "system": {
            "dimension": 2,
            "natural": { "kinetic": [["1", "0"], ["0", "sin(x1)^2"]], "potential": "0" }
        },
        "analysis": [
            { "kind": "simulate", "initial": start, "t_end": 2.0 * std::f64::consts::PI, "samples": 100 },
            { "kind": "local-stability", "initial": start, "t_end": 3.0, "samples": 30 },
            { "kind": "spectrum", "initial": start, "seminorm": { "type": "lagrange-lift" }, "horizon": 20.0 },
            { "kind": "jacobi-translate", "initial": start, "energy": 0.5, "tau_end": 10.0, "samples": 100 }
        ],
        "output": { "directory": "sphere-geodesic-out" }
    }))
}

/// Scenarios of the named example; the paired potentials give two.
pub fn example(name: &str) -> Option<Vec<Scenario>> {
    match name {
        "inverted-oscillator" => Some(vec![inverted_oscillator()]),
        "radial-r2" => Some(vec![radial_r2()]),
        "vplus-vminus" => Some(vec![vplus_vminus("+"), vplus_vminus("-")]),
        "sphere-geodesic" => Some(vec![sphere_geodesic()]),
        _ => None,
    }
}

pub fn all() -> Vec<Scenario> {
    NAMES.iter().flat_map(|n| example(n).expect("known name")).collect()
}
