//! Built-in parameter sets for the reference example flocks.

use crate::model::FlockSpec;

pub const FIGURE1_JSON: &str = include_str!("../fixtures/figure1.json");
pub const FIGURE2_JSON: &str = include_str!("../fixtures/figure2.json");
pub const FIGURE3AB_JSON: &str = include_str!("../fixtures/figure3ab.json");
pub const FIGURE3C_JSON: &str = include_str!("../fixtures/figure3c.json");

/// Fitted slope of `ln|magnitude|` against `N` for [`figure2`] over
/// `N = 30, 45, ..., 180`, boundary type I, `dt = 0.01`, `t_max = 3 N`.
/// Regression value from the first verified run.
pub const FIGURE2_SCAN_SLOPE: f64 = 3.361931306656226e-2;

/// Vehicle counts behind [`FIGURE2_SCAN_SLOPE`].
pub fn figure2_scan_sizes() -> Vec<usize> {
    (30..=180).step_by(15).collect()
}

fn load(text: &str) -> FlockSpec {
    FlockSpec::from_json(text).expect("built-in fixture is valid")
}

/// Stable triatomic flock.
pub fn figure1() -> FlockSpec {
    load(FIGURE1_JSON)
}

/// Triatomic flock with zero first moment but nonzero correction.
pub fn figure2() -> FlockSpec {
    load(FIGURE2_JSON)
}

/// Diatomic next-nearest-neighbor flock satisfying the necessary conditions.
pub fn figure3ab() -> FlockSpec {
    load(FIGURE3AB_JSON)
}

/// Diatomic flock violating the necessary condition; one weight completed
/// from the row constraint.
pub fn figure3c() -> FlockSpec {
    load(FIGURE3C_JSON)
}

/// Look up a fixture by name (`figure1`, `figure2`, `figure3ab`, `figure3c`).
pub fn by_name(name: &str) -> Option<FlockSpec> {
    match name {
        "figure1" => Some(figure1()),
        "figure2" => Some(figure2()),
        "figure3ab" => Some(figure3ab()),
        "figure3c" => Some(figure3c()),
        _ => None,
    }
}
