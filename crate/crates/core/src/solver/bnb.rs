use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{solve_lp, LpOptions, LpSolution, LpStatus};
use super::{SolveLimits, SolveResult, SolveStatus, SolverError, INTEGRALITY_TOL};
use crate::model::MilpModel;

/// Open node; children are evaluated when created, so `bound` is the LP
/// value of the node itself.
struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
    branch_column: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: the smallest bound, then the oldest node, pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Most fractional binary; ties go to the lowest column index.
fn branching_column(model: &MilpModel, values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in model.columns.iter().enumerate() {
        if !c.binary {
            continue;
        }
        let frac = values[j] - values[j].floor();
        if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let score = (frac - 0.5).abs();
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

struct Search<'a> {
    model: &'a MilpModel,
    limits: &'a SolveLimits,
    opts: LpOptions,
    base_lower: Vec<f64>,
    base_upper: Vec<f64>,
    start: Instant,
    nodes: usize,
    iterations: usize,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn solve(&mut self, fixings: &[(usize, f64)]) -> Result<LpSolution, SolverError> {
        let mut lower = self.base_lower.clone();
        let mut upper = self.base_upper.clone();
        for &(j, v) in fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let lp = solve_lp(self.model, &lower, &upper, &self.opts)?;
        self.nodes += 1;
        self.iterations += lp.iterations;
        Ok(lp)
    }

    fn out_of_budget(&self) -> bool {
        self.start.elapsed() >= self.limits.time_limit()
            || self.limits.node_limit.is_some_and(|n| self.nodes >= n)
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.limits.absolute_gap.max(self.limits.relative_gap * obj.abs()),
            None => f64::INFINITY,
        }
    }

    /// Records an LP point whose binaries are integral. Binaries are snapped
    /// and the continuous part re-solved so the stored values are exact.
    fn offer(&mut self, lp: &LpSolution, fixings: &[(usize, f64)]) -> Result<(), SolverError> {
        let snapped: Vec<(usize, f64)> = self
            .model
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.binary)
            .map(|(j, _)| (j, lp.values[j].round()))
            .collect();
        let needs_resolve = snapped.iter().any(|&(j, v)| lp.values[j] != v);
        let (objective, values) = if needs_resolve {
            let mut all = fixings.to_vec();
            all.extend(snapped);
            let clean = self.solve(&all)?;
            if clean.status != LpStatus::Optimal {
                return Ok(());
            }
            (clean.objective, clean.values)
        } else {
            (lp.objective, lp.values.clone())
        };
        if self.incumbent.as_ref().is_none_or(|(best, _)| objective < *best) {
            self.incumbent = Some((objective, values));
        }
        Ok(())
    }
}

/// Best-bound-first branch-and-bound over the binary columns.
///
/// The root relaxation is rounded once for a starting incumbent. Results are
/// deterministic for a fixed model unless a time limit interrupts the search.
pub fn branch_and_bound(model: &MilpModel, limits: &SolveLimits) -> Result<SolveResult, SolverError> {
    if !model.is_well_formed() {
        return Err(SolverError::Malformed("row references a missing column".into()));
    }
    let mut search = Search {
        model,
        limits,
        opts: LpOptions::default(),
        base_lower: model.columns.iter().map(|c| c.lower).collect(),
        base_upper: model
            .columns
            .iter()
            .map(|c| if c.binary { c.upper.min(1.0) } else { c.upper })
            .collect(),
        start: Instant::now(),
        nodes: 0,
        iterations: 0,
        incumbent: None,
    };
    for (j, c) in model.columns.iter().enumerate() {
        if c.binary {
            search.base_lower[j] = c.lower.max(0.0).ceil();
            search.base_upper[j] = search.base_upper[j].floor();
        }
    }

    let finish = |search: &Search, status: SolveStatus, bound: f64| {
        let (objective, incumbent) = match &search.incumbent {
            Some((obj, values)) => (*obj, Some(values.clone())),
            None => (
                match status {
                    SolveStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
                None,
            ),
        };
        SolveResult {
            status,
            incumbent,
            objective,
            best_bound: bound.min(objective),
            node_count: search.nodes,
            simplex_iterations: search.iterations,
            wall_time: search.start.elapsed().as_secs_f64(),
        }
    };

    let root = search.solve(&[])?;
    match root.status {
        LpStatus::Infeasible => return Ok(finish(&search, SolveStatus::Infeasible, f64::INFINITY)),
        LpStatus::Unbounded => return Ok(finish(&search, SolveStatus::Unbounded, f64::NEG_INFINITY)),
        LpStatus::Optimal => {}
    }
    let Some(root_branch) = branching_column(model, &root.values) else {
        search.offer(&root, &[])?;
        let bound = root.objective;
        return Ok(finish(&search, SolveStatus::Optimal, bound));
    };

    // rounding the root relaxation
    let rounded: Vec<(usize, f64)> = model
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.binary)
        .map(|(j, _)| (j, root.values[j].round()))
        .collect();
    let guess = search.solve(&rounded)?;
    if guess.status == LpStatus::Optimal {
        search.incumbent = Some((guess.objective, guess.values));
    }

    let mut next_id = 0u64;
    let mut open = BinaryHeap::new();
    open.push(Node {
        bound: root.objective,
        id: next_id,
        fixings: Vec::new(),
        branch_column: root_branch,
    });
    // smallest bound among nodes discarded within the gap tolerance
    let mut pruned_bound = f64::INFINITY;

    while let Some(node) = open.pop() {
        if node.bound >= search.cutoff() {
            pruned_bound = pruned_bound.min(node.bound);
            for rest in open.drain() {
                pruned_bound = pruned_bound.min(rest.bound);
            }
            break;
        }
        if search.out_of_budget() {
            let bound = open.iter().map(|n| n.bound).fold(node.bound, f64::min).min(pruned_bound);
            let status = if search.incumbent.is_some() {
                SolveStatus::FeasibleTimeLimit
            } else {
                SolveStatus::TimeLimitNoSolution
            };
            return Ok(finish(&search, status, bound));
        }
        for value in [0.0, 1.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((node.branch_column, value));
            let lp = search.solve(&fixings)?;
            match lp.status {
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    return Ok(finish(&search, SolveStatus::Unbounded, f64::NEG_INFINITY));
                }
                LpStatus::Optimal => {}
            }
            if lp.objective >= search.cutoff() {
                pruned_bound = pruned_bound.min(lp.objective);
                continue;
            }
            match branching_column(model, &lp.values) {
                None => search.offer(&lp, &fixings)?,
                Some(branch_column) => {
                    next_id += 1;
                    open.push(Node {
                        bound: lp.objective,
                        id: next_id,
                        fixings,
                        branch_column,
                    });
                }
            }
        }
    }

    match search.incumbent {
        Some(_) => Ok(finish(&search, SolveStatus::Optimal, pruned_bound)),
        None => Ok(finish(&search, SolveStatus::Infeasible, f64::INFINITY)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn knapsack() -> MilpModel {
        // max 5a + 4b + 3c, 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = MilpModel::new("k");
        let v: Vec<usize> = [5.0, 4.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| m.add_column(format!("b{i}"), 0.0, 1.0, -c, true))
            .collect();
        m.add_row("r1", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
        m.add_row("r2", vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
        m.add_row("r3", vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0);
        m
    }

    #[test]
    fn small_binary_program() {
        let r = branch_and_bound(&knapsack(), &SolveLimits::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        // exhaustive: a + b -> 9 is the best packing
        assert!((r.objective + 9.0).abs() < 1e-9);
        assert!(r.best_bound <= r.objective + 1e-9);
    }

    #[test]
    fn node_limit_returns_incumbent_and_bound() {
        let limits = SolveLimits {
            node_limit: Some(1),
            ..Default::default()
        };
        let r = branch_and_bound(&knapsack(), &limits).unwrap();
        assert!(matches!(
            r.status,
            SolveStatus::FeasibleTimeLimit | SolveStatus::TimeLimitNoSolution | SolveStatus::Optimal
        ));
        if r.has_incumbent() {
            assert!(r.best_bound <= r.objective + 1e-9);
        }
    }

    #[test]
    fn infeasible_binary_program() {
        let mut m = MilpModel::new("i");
        let a = m.add_column("a", 0.0, 1.0, 1.0, true);
        m.add_row("half", vec![(a, 2.0)], Sense::Eq, 1.0);
        let r = branch_and_bound(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }
}
