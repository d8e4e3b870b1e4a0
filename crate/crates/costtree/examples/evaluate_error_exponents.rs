//! Computes large-deviation error exponents for structure learning on a
//! five-node chain: per-pair crossover rates, the governing exponent, and
//! the finite-sample error bounds it implies. Ends with a constraint so
//! lopsided that the crossover event is empty and the rate is infinite.

use costtree::inference::Protocol;
use costtree::ldp::{
    crossover_rate, error_exponent_async, finite_sample_bound, CrossoverProblem, Rate,
    SolverOptions,
};
use costtree::model::TreeModel;
use costtree::physnet::PhysicalNetwork;
use std::f64::consts::LN_2;

fn main() {
    let channels = vec![
        (0usize, 1usize, [0.85, 0.25]),
        (1, 2, [0.8, 0.3]),
        (2, 3, [0.75, 0.2]),
        (3, 4, [0.9, 0.35]),
    ];
    let model = TreeModel::from_root_channels(5, 0, [0.55, 0.45], &channels).unwrap();
    let costs = PhysicalNetwork::line(5, 0.4, &[]).unwrap().all_pairs_costs();
    let opts = SolverOptions::default();

    for gamma in [0.0, 0.6] {
        let report = error_exponent_async(&model, &costs, gamma, &opts).unwrap();
        println!("gamma = {gamma}");
        println!("  ideal tree edges: {:?}", report.ideal_edges);
        for pr in &report.pairs {
            println!(
                "  crossover {:?} vs {:?}: {}",
                pr.favored,
                pr.rival,
                match pr.rate {
                    Rate::Finite(r) => format!("{r:.6}"),
                    Rate::Infinite => "infinite (event empty)".into(),
                }
            );
        }
        match report.exponent {
            Rate::Finite(k) => {
                println!("  governing exponent K = {k:.6}");
                for n in [100usize, 1000, 10000] {
                    let b = finite_sample_bound(5, n, report.exponent, Protocol::Async, 2);
                    println!("    error bound at n = {n:>5}: {b:.3e}");
                }
            }
            Rate::Infinite => println!("  exponent infinite: the learner cannot err"),
        }
    }

    // A constant gap beyond ln 2 exceeds any mutual-information swing on
    // binary variables, so no distribution can flip the comparison.
    let uniform = vec![1.0 / 16.0; 16];
    let impossible =
        CrossoverProblem::new(uniform, vec![0, 1, 2, 3], (0, 1), (2, 3), LN_2 + 0.05, 0.0);
    let res = crossover_rate(&impossible, &SolverOptions::default()).unwrap();
    println!("\nconstant gap above ln 2: rate is {:?}", res.rate);
}
