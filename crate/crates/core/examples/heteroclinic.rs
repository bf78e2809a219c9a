//! Follows the saddle's unstable branch down to the stable node.

use pullin::manifold::heteroclinic_check;
use pullin::GModel;

pub fn main() {
    let h = heteroclinic_check(&GModel::flores(), 0.125, 2.0).unwrap();
    let (u, v) = h.trajectory.last();
    println!("connects: {}", h.connects);
    println!(
        "triangle: ({:.6}, 0) ({:.6}, 0) slope {}",
        h.phi1, h.phi2, h.slope
    );
    println!(
        "{} samples, end state ({u:.12}, {v:.3e}) at t = {:.3}",
        h.trajectory.times.len(),
        h.trajectory.t_end
    );
}
