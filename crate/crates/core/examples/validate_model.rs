//! Checks a user model from JSON against the structural assumptions.

use pullin::model::{validate_assumptions, GridSpec, ModelSpec};

pub fn main() {
    for text in [
        r#"{"g": {"family": "inverse_power", "p": 2.0}, "beta": 1.0, "f": {"family": "linear"}}"#,
        r#"{"g": {"family": "poly_even", "k": 2}, "beta": 1.0}"#,
    ] {
        let (g, f) = ModelSpec::from_json(text).unwrap().build().unwrap();
        let report = validate_assumptions(&g, &f, &GridSpec::default());
        println!("{text}");
        for e in &report.entries {
            println!(
                "  {:<18} {}",
                e.name,
                if e.passed { "ok" } else { "FAILED" }
            );
        }
    }
}
