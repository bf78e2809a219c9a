//! The damping-dependent pull-in threshold and its inverse `α*(λ)`.

use pullin::manifold::{alpha_star, lambda_threshold};
use pullin::stationary::StationaryProfile;
use pullin::GModel;

pub fn main() {
    let g = GModel::flores();
    let s = StationaryProfile::compute(&g).unwrap();
    println!(
        "lambda_bar = {:.12}, lambda* = {:.12}",
        s.lambda_bar, s.lambda_star
    );
    for alpha in [0.0, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0] {
        println!(
            "lambda(0,0)({alpha}) = {:.12}",
            lambda_threshold(&g, alpha, 1e-10).unwrap()
        );
    }
    // α* approaches a finite limit as λ approaches the fold.
    for k in 2..=7 {
        let lambda = s.lambda_star - 10f64.powi(-k);
        println!(
            "alpha*(lambda* - 1e-{k}) = {:.10}",
            alpha_star(&g, lambda, 1e-10).unwrap()
        );
    }
}
