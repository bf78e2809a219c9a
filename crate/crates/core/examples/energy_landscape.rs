//! Potential levels at the equilibria, the barrier point `l(λ)` and
//! membership of a few starts in the trapping set.

use pullin::energy::EnergyContext;
use pullin::GModel;

pub fn main() {
    let ctx = EnergyContext::new(&GModel::flores(), 0.1).expect("lambda below the fold");
    let s = ctx.summary();
    println!(
        "phi1 = {:.12}, phi2 = {:.12}, q = {:.12}",
        s.phi1, s.phi2, s.q
    );
    println!(
        "J(phi1) = {:.12}, J(phi2) = {:.12}, l = {:.12}",
        s.j_phi1, s.j_phi2, s.l
    );
    for (u0, v0) in [(0.0, 0.0), (0.0, 0.2), (-0.1, 0.05), (0.5, 0.0)] {
        println!(
            "({u0:>5}, {v0:>5}) in D0: {:<5} sharp well: {}",
            ctx.in_d0(u0, v0),
            ctx.in_d0_sharp(u0, v0)
        );
    }
    let mid = 0.5 * (s.j_phi1 + s.j_phi2);
    println!(
        "J^-1({mid:.6}) on [phi1, phi2] = {:.12}",
        ctx.j_inverse(mid).unwrap()
    );
}
