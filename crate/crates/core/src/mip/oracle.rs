//! Decides whether a fixed beat assignment admits sinks and flows that
//! satisfy the exported rows, by max-flow rather than graph search.

use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{MipModel, Solution, Var};

/// Tries each member as the sink in turn: every other member supplies one
/// unit, arcs and node inflow are capped at q − 1, and the beat is
/// feasible when the max flow into the sink is |S| − 1.
fn beat_flow(model: &MipModel, members: &[usize], in_beat: &[bool]) -> Option<(usize, Vec<(usize, usize, f64)>)> {
    let cap = (model.q() - 1) as u64;
    let m = members.len();
    let mut local = vec![usize::MAX; in_beat.len()];
    for (x, &i) in members.iter().enumerate() {
        local[i] = x;
    }
    for &sink in members {
        let mut g: DiGraph<(), u64> = DiGraph::new();
        let src = g.add_node(());
        let dst = g.add_node(());
        // node x: inlet 2 + 2x, outlet 3 + 2x
        for _ in 0..m {
            g.add_node(());
            g.add_node(());
        }
        let inlet = |x: usize| NodeIndex::new(2 + 2 * x);
        let outlet = |x: usize| NodeIndex::new(3 + 2 * x);
        let mut arcs = Vec::new();
        for (x, &i) in members.iter().enumerate() {
            if i == sink {
                g.add_edge(inlet(x), dst, cap);
            } else {
                g.add_edge(inlet(x), outlet(x), cap);
                g.add_edge(src, outlet(x), 1);
            }
            for &j in model.neighbors(i).iter().filter(|&&j| in_beat[j]) {
                let e = g.add_edge(outlet(x), inlet(local[j]), cap);
                arcs.push((e, i, j));
            }
        }
        let (value, flows) = dinics(&g, src, dst);
        if value == (m - 1) as u64 {
            let mut f: Vec<(usize, usize, f64)> = Vec::new();
            for &(e, i, j) in &arcs {
                let fwd = flows[e.index()];
                let back = arcs
                    .iter()
                    .find(|&&(_, a, b)| a == j && b == i)
                    .map_or(0, |&(e2, _, _)| flows[e2.index()]);
                if fwd > back {
                    f.push((i, j, (fwd - back) as f64));
                }
            }
            return Some((sink, f));
        }
    }
    None
}

/// A full solution (d, h, f, e) for `assignment` that passes every
/// exported row, or None when the assignment is infeasible. A max-flow
/// witness is only reported after `MipModel::violations` accepts it.
pub fn feasible_completion(model: &MipModel, assignment: &[usize]) -> Option<Solution> {
    let n = model.n_atoms();
    if assignment.len() != n || assignment.iter().any(|&b| b >= model.k()) {
        return None;
    }
    let mut sol = Solution::default();
    for (i, &b) in assignment.iter().enumerate() {
        sol.set(Var::D(i, b), 1.0);
    }
    for b in 0..model.k() {
        let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == b).collect();
        if members.is_empty() {
            return None;
        }
        let in_beat: Vec<bool> = assignment.iter().map(|&a| a == b).collect();
        let (sink, flows) = beat_flow(model, &members, &in_beat)?;
        sol.set(Var::H(sink, b), 1.0);
        for (i, j, x) in flows {
            sol.set(Var::F(i, j, b), x);
        }
        if model.compactness_enabled() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    sol.set(Var::E(i, j, b), 1.0);
                }
            }
        }
    }
    model.violations(&sol, 1e-9).is_empty().then_some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::tests::grid;
    use crate::mip::{build_model, MipMode, MipParams};

    #[test]
    fn path_of_four_exhaustive() {
        // every 0/1 pattern of d on a 4-atom path with K = 2 and q = 4
        let g = grid(1, 4);
        let m = build_model(&g, &[1.0; 4], &MipParams { k: 2, q: Some(4), ..Default::default() }, false).unwrap();
        let mut feasible = Vec::new();
        for mask in 0u32..256 {
            let d = |i: usize, b: usize| mask >> (2 * i + b) & 1 == 1;
            // the assignment rows admit exactly one beat per atom
            if (0..4).any(|i| d(i, 0) == d(i, 1)) {
                continue;
            }
            let a: Vec<usize> = (0..4).map(|i| usize::from(d(i, 1))).collect();
            if feasible_completion(&m, &a).is_some() {
                feasible.push(a);
            }
        }
        // contiguous 2-splits of a path: a prefix/suffix cut, either label order
        let mut expected: Vec<Vec<usize>> = Vec::new();
        for cut in 1..4 {
            expected.push((0..4).map(|i| usize::from(i >= cut)).collect());
            expected.push((0..4).map(|i| usize::from(i < cut)).collect());
        }
        feasible.sort();
        expected.sort();
        assert_eq!(feasible, expected);
    }

    #[test]
    fn capacity_binds() {
        let g = grid(1, 4);
        let m = build_model(&g, &[1.0; 4], &MipParams { k: 2, q: Some(2), ..Default::default() }, false).unwrap();
        assert!(feasible_completion(&m, &[0, 0, 1, 1]).is_some());
        assert!(feasible_completion(&m, &[0, 0, 0, 1]).is_none());
        let dense = build_model(
            &g,
            &[1.0; 4],
            &MipParams { k: 2, mode: MipMode::Dense, ..Default::default() },
            false,
        )
        .unwrap();
        assert!(feasible_completion(&dense, &[0, 1, 1, 0]).is_none());
    }
}
