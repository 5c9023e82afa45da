//! Use the branch-and-bound solver on a plain MILP that has nothing to do
//! with ventilators, then cut it short with a node limit.
//!
//! ```bash
//! cargo run --example branch_and_bound
//! ```

use ventplan::model::{MilpModel, Sense};
use ventplan::solver::{branch_and_bound, check_feasibility, SolveLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // pick items to maximize value under a weight budget of 10
    let items = [("tent", 5.0, 4.0), ("stove", 4.0, 3.0), ("rope", 3.0, 3.0), ("lamp", 6.0, 5.0), ("map", 1.0, 1.0)];
    let mut model = MilpModel::new("knapsack");
    let picks: Vec<usize> = items
        .iter()
        .map(|(name, value, _)| model.add_column(*name, 0.0, 1.0, -value, true))
        .collect();
    let weights = picks.iter().zip(&items).map(|(&j, (_, _, w))| (j, *w)).collect();
    model.add_row("budget", weights, Sense::Le, 10.0);

    let result = branch_and_bound(&model, &SolveLimits::default())?;
    let x = result.incumbent.clone().unwrap();
    let chosen: Vec<&str> = items.iter().zip(&x).filter(|(_, v)| **v > 0.5).map(|(i, _)| i.0).collect();
    println!(
        "{:?}: value {}, {} nodes, {} simplex iterations",
        result.status, -result.objective, result.node_count, result.simplex_iterations
    );
    println!("take {chosen:?}");
    assert!(check_feasibility(&model, &x, 1e-9).is_empty());

    let limited = SolveLimits {
        node_limit: Some(3),
        ..SolveLimits::default()
    };
    let early = branch_and_bound(&model, &limited)?;
    match early.incumbent {
        Some(_) => println!(
            "after 3 nodes: {:?}, value {}, bound {:.2}, gap {:.3}",
            early.status,
            -early.objective,
            -early.best_bound,
            early.gap()
        ),
        None => println!("after 3 nodes: {:?}, bound {:.2}", early.status, -early.best_bound),
    }
    Ok(())
}
