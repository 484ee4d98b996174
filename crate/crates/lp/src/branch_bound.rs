//! Branch-and-bound over LP relaxations.
//!
//! Nodes are explored best-bound first; among nodes with equal bound the
//! deepest is taken, then the oldest. Branching picks the most fractional
//! integer column (lowest index on ties) and the child nearest to the
//! relaxation value is queued ahead of its sibling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::LpError;
use crate::problem::{MipProblem, Sense, Solution, SolveStatus};
use crate::simplex::{solve_with_bounds, LpOptions};

#[derive(Clone, Copy, Debug)]
pub struct MipOptions {
    /// Relative optimality gap, measured as `(incumbent - bound) / max(1, |incumbent|)`.
    pub gap_tol: f64,
    pub int_tol: f64,
    pub node_limit: usize,
    pub lp: LpOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            int_tol: 1e-6,
            node_limit: 1_000_000,
            lp: LpOptions::default(),
        }
    }
}

pub fn solve_mip(mip: &MipProblem) -> Result<Solution, LpError> {
    solve_mip_with(mip, &MipOptions::default())
}

struct Node {
    /// Bound in minimization sense inherited from the parent relaxation.
    bound: f64,
    depth: usize,
    seq: usize,
    changes: Vec<(usize, f64, f64)>,
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
    // BinaryHeap pops the greatest element: smallest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn solve_mip_with(mip: &MipProblem, opts: &MipOptions) -> Result<Solution, LpError> {
    mip.validate()?;
    let lp = &mip.lp;
    let integral = mip.integral_columns();
    let to_min = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Integer columns get their bounds rounded inward once up front.
    let mut root_lo = lp.lower.clone();
    let mut root_hi = lp.upper.clone();
    for &j in &integral {
        root_lo[j] = (root_lo[j] - opts.int_tol).ceil();
        root_hi[j] = (root_hi[j] + opts.int_tol).floor();
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        changes: Vec::new(),
    });
    let mut seq = 1usize;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut root_status = None;
    let mut hit_limit = false;
    let mut lo = root_lo.clone();
    let mut hi = root_hi.clone();

    let prune_level = |inc: f64| inc - opts.gap_tol * inc.abs().max(1.0);

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= prune_level(*inc) {
                // Everything left in the heap is at least as bad.
                heap.clear();
                break;
            }
        }
        if nodes >= opts.node_limit {
            hit_limit = true;
            heap.push(node);
            break;
        }
        nodes += 1;

        lo.copy_from_slice(&root_lo);
        hi.copy_from_slice(&root_hi);
        for &(j, l, h) in &node.changes {
            lo[j] = l;
            hi[j] = h;
        }
        let relax = solve_with_bounds(lp, &lo, &hi, &opts.lp);
        iterations += relax.iterations;
        if root_status.is_none() {
            root_status = Some(relax.status);
        }
        match relax.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if incumbent.is_none() && nodes == 1 {
                    let mut s = Solution::without_point(SolveStatus::Unbounded, iterations);
                    s.nodes = nodes;
                    return Ok(s);
                }
                continue;
            }
            SolveStatus::IterationLimit => {
                hit_limit = true;
                continue;
            }
        }
        let value = to_min * relax.objective;
        if let Some((inc, _)) = &incumbent {
            if value >= prune_level(*inc) {
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = opts.int_tol;
        for &j in &integral {
            let v = relax.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac + 1e-12 {
                best_frac = frac;
                branch = Some((j, v));
            }
        }

        match branch {
            None => {
                let mut x = relax.x;
                for &j in &integral {
                    x[j] = x[j].round();
                }
                let obj = to_min * lp.objective_value(&x);
                let better = incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc);
                if better {
                    incumbent = Some((obj, x));
                }
            }
            Some((j, v)) => {
                let down = {
                    let mut c = node.changes.clone();
                    c.push((j, lo[j], v.floor()));
                    c
                };
                let up = {
                    let mut c = node.changes.clone();
                    c.push((j, v.ceil(), hi[j]));
                    c
                };
                let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
                for changes in [first, second] {
                    heap.push(Node {
                        bound: value,
                        depth: node.depth + 1,
                        seq,
                        changes,
                    });
                    seq += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((obj, x)) => {
            let bound = obj.min(open_bound);
            let status = if hit_limit && (bound < prune_level(obj) || open_bound == f64::INFINITY) {
                SolveStatus::IterationLimit
            } else {
                SolveStatus::Optimal
            };
            Ok(Solution {
                status,
                objective: to_min * obj,
                x,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations,
                nodes,
                bound: to_min * bound,
            })
        }
        None => {
            let status = if hit_limit {
                SolveStatus::IterationLimit
            } else if root_status == Some(SolveStatus::Unbounded) {
                SolveStatus::Unbounded
            } else {
                SolveStatus::Infeasible
            };
            let mut s = Solution::without_point(status, iterations);
            s.nodes = nodes;
            Ok(s)
        }
    }
}
