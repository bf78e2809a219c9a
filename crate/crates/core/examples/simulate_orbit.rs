//! Integrates a damped orbit from rest and lists the recorded events.

use pullin::dynamics::{check_energy_identity, integrate, IntegrationOptions, Problem};

pub fn main() {
    let prob = Problem::flores(1.0, 0.1).unwrap();
    let opts = IntegrationOptions {
        stop_on_entrapment: false,
        ..Default::default()
    };
    let traj = integrate(&prob, 60.0, &opts).expect("integration");
    println!(
        "termination: {:?} at t = {:.6}",
        traj.termination, traj.t_end
    );
    println!(
        "samples: {}, final state: {:?}",
        traj.times.len(),
        traj.last()
    );
    println!(
        "energy identity residual: {:.3e}",
        check_energy_identity(&prob, &traj)
    );
    for e in traj.events.iter().take(8) {
        println!("  t = {:>10.6}  {:?}  u = {:.9}", e.t, e.kind, e.u);
    }
}
