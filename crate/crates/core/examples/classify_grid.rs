//! Classifies orbits from rest over a small (λ, α) grid.

use pullin::cli::classification_label;
use pullin::dynamics::{classify_orbit, ClassifyOptions, Problem};

pub fn main() {
    let opts = ClassifyOptions {
        t_max: 600.0,
        ..Default::default()
    };
    let alphas = [0.0, 0.1, 0.5, 1.0];
    let lambdas = [0.10, 0.12, 0.13, 0.14, 0.15];
    print!("{:>8}", "lambda");
    for a in alphas {
        print!("{:>14}", format!("alpha={a}"));
    }
    println!();
    for l in lambdas {
        print!("{l:>8}");
        for a in alphas {
            let c = classify_orbit(&Problem::flores(a, l).unwrap(), &opts).unwrap();
            print!("{:>14}", classification_label(&c));
        }
        println!();
    }
}
