//! Shoots the saddle's stable manifold back to the `u`-axis. `x_α > 0`
//! means the orbit from rest escapes.

use pullin::manifold::{shoot_stable_manifold, ShootOptions};
use pullin::GModel;

pub fn main() {
    let g = GModel::flores();
    let lambda = 0.14;
    for alpha in [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 1.0, 10.0] {
        let r = shoot_stable_manifold(&g, lambda, alpha, &ShootOptions::default()).unwrap();
        match r.x_alpha {
            Some(x) => println!("alpha = {alpha:>5}: {:?}, x = {x:+.12}", r.outcome),
            None => println!("alpha = {alpha:>5}: {:?}", r.outcome),
        }
    }
}
