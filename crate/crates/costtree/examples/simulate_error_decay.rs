//! Monte-Carlo study of structure-recovery error versus sample size on
//! the built-in scenario: draws samples, learns a tree per trial, and
//! tabulates the error rate against the large-deviation prediction. The
//! fitted decay slope should be positive wherever errors remain observable.

use costtree::experiments::{builtin_data_tree, builtin_line_network, run_error_study, StudyConfig};
use costtree::inference::Protocol;
use costtree::ldp::empirical_decay_rate;

fn main() {
    let model = builtin_data_tree();
    let network = builtin_line_network(0.005);
    let cfg = StudyConfig {
        protocol: Protocol::Async,
        gammas: vec![0.0, 2.0],
        beta: 1.0,
        sample_sizes: vec![50, 100, 200, 500, 1000],
        trials: 60,
        seed: 7,
    };
    let study = run_error_study(&model, &network, &cfg).unwrap();

    println!("{:>6} {:>6} {:>10} {:>10} {:>12}", "gamma", "n", "err-rate", "map-err", "bound");
    for row in &study.rows {
        println!(
            "{:>6.1} {:>6} {:>10.3} {:>10.3} {:>12.3e}",
            row.gamma, row.n, row.structure_error_rate, row.map_error_rate, row.bound
        );
    }

    let width = cfg.sample_sizes.len();
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        let grid: Vec<(usize, f64)> = study.rows[gi * width..(gi + 1) * width]
            .iter()
            .map(|r| (r.n, r.structure_error_rate))
            .collect();
        match empirical_decay_rate(&grid) {
            Ok(est) => println!(
                "gamma {gamma}: fitted decay slope {:.2e} (stderr {:.2e}, {} points)",
                est.slope, est.stderr, est.points_used
            ),
            Err(_) => println!("gamma {gamma}: too few positive error rates to fit a slope"),
        }
    }
    println!("\nbounds are union bounds with loose prefactors; they certify the decay");
    println!("direction long before they bite numerically at this dimension.");
}
