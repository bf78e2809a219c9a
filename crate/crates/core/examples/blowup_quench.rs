//! Above the fold every orbit leaves: bounded `b` quenches, unbounded `b`
//! blows up. Both respect the quadratic lower bound.

use pullin::dynamics::{blowup_bound_check, integrate, IntegrationOptions, Problem};
use pullin::{FModel, GModel};

pub fn main() {
    let cases = [
        (
            "inverse_power, lambda = 0.2",
            Problem::flores(0.0, 0.2).unwrap(),
        ),
        (
            "power_even, lambda = 0.3",
            Problem::new(
                GModel::power_even(1, 1.0).unwrap(),
                FModel::linear(),
                0.0,
                0.3,
                0.0,
                0.0,
            )
            .unwrap(),
        ),
    ];
    for (name, prob) in cases {
        let traj = integrate(&prob, 100.0, &IntegrationOptions::default()).unwrap();
        let bound = blowup_bound_check(&prob, &traj).unwrap();
        println!(
            "{name}: {:?} at t = {:.9}, max u = {:.6e}, lower bound holds: {bound}",
            traj.termination,
            traj.t_end,
            traj.max_u()
        );
    }
}
