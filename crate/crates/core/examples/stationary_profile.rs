//! Fold point, stationary threshold and energy-critical pair for the
//! built-in nonlinearities.

use pullin::stationary::StationaryProfile;
use pullin::GModel;

pub fn main() {
    let models = [
        ("power_even k=1", GModel::power_even(1, 1.0).unwrap()),
        ("exponential", GModel::exponential(1.0).unwrap()),
        ("poly_even k=1", GModel::poly_even(1, 1.0).unwrap()),
        ("inverse_power p=2", GModel::flores()),
    ];
    println!(
        "{:<18} {:>20} {:>20} {:>20} {:>20}",
        "model", "p", "lambda*", "lambda_bar", "phi2_bar"
    );
    for (name, g) in &models {
        let s = StationaryProfile::compute(g).expect("profile");
        println!(
            "{name:<18} {:>20.15} {:>20.15} {:>20.15} {:>20.15}",
            s.p, s.lambda_star, s.lambda_bar, s.phi2_bar
        );
    }
}
