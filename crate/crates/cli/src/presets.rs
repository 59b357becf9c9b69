//! Named building blocks and bundled example configs.

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../configs/", $name, ".toml")))),*]
    };
}

pub const CONFIGS: &[(&str, &str)] = bundled!(
    "classical_harmonic",
    "classical_linear",
    "forward_real_weak_value",
    "imaginary_weak_value_reverse",
    "order_symmetry_qutrit",
    "pointer_conditions_boosted",
    "pointer_conditions_gaussian",
    "strange_weak_value_tan_theta",
    "strong_asymmetry_pauli",
    "strong_asymmetry_projector",
);

pub const OPERATORS: &[&str] = &["identity", "pauli_x", "pauli_y", "pauli_z"];
pub const STATES: &[&str] = &["maximally_mixed", "minus", "minus_i", "one", "plus", "plus_i", "zero"];
pub const CLASSICAL_OBSERVABLES: &[&str] = &["p", "q", "q2p2"];

pub fn listing() -> String {
    let mut out = String::new();
    let mut section = |title: &str, names: &mut dyn Iterator<Item = &str>| {
        out.push_str(title);
        out.push_str(":\n");
        for n in names {
            out.push_str("  ");
            out.push_str(n);
            out.push('\n');
        }
    };
    section("operators", &mut OPERATORS.iter().copied());
    section("states", &mut STATES.iter().copied());
    section("classical observables", &mut CLASSICAL_OBSERVABLES.iter().copied());
    section("example configs", &mut CONFIGS.iter().map(|c| c.0));
    out
}
