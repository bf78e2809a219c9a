//! Both stationary branches over a grid of λ below the fold, as CSV.

use pullin::stationary::{bifurcation_sweep, StationaryProfile};
use pullin::GModel;

pub fn main() {
    let g = GModel::flores();
    let ls = StationaryProfile::compute(&g).unwrap().lambda_star;
    let grid: Vec<f64> = (1..40).map(|i| ls * i as f64 / 40.0).collect();
    let table = bifurcation_sweep(&g, &grid).expect("sweep");
    print!("{}", table.to_csv());
}
