use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::cfg::{build_cfg, normalize_barriers, CfgOptions};
use crate::frontend::parse_source;
use crate::taskgraph::build_taskgraph;

const INF: u64 = DEFAULT_UPPER_BOUND;

fn pi(lb: u64, ub: u64) -> PhaseInterval {
    PhaseInterval::new(lb, ub)
}

fn lat() -> PiaLattice {
    PiaLattice::default()
}

fn solve_src(src: &str) -> (TaskGraph, PiaResult) {
    let ast = parse_source("t.c", src).unwrap().ast;
    let cfg = normalize_barriers(build_cfg(&ast, "main", CfgOptions::default()));
    let g = build_taskgraph(&[cfg]).unwrap();
    let r = run_pia(&g, &lat()).unwrap();
    (g, r)
}

#[test]
fn join_meet_leq_examples() {
    assert_eq!(pi(1, 1).join(pi(2, 2)), pi(1, 2));
    assert_eq!(PhaseInterval::BOTTOM.join(pi(3, 5)), pi(3, 5));
    assert_eq!(pi(0, 0).join(lat().top()), lat().top());
    assert_eq!(pi(1, 3).meet(pi(2, 5)), pi(2, 3));
    assert_eq!(pi(1, 1).meet(pi(2, 2)), PhaseInterval::BOTTOM);
    assert!(pi(2, 3).leq(pi(1, 4)));
    assert!(!pi(1, 4).leq(pi(2, 3)));
    assert!(PhaseInterval::BOTTOM.leq(pi(7, 7)));
    assert_eq!(PhaseInterval::new(5, 2), PhaseInterval { lb: 1, ub: 0 });
}

#[test]
fn scale_and_delta_examples() {
    let l = lat();
    assert_eq!(l.scale(3, pi(1, 2)), pi(3, 6));
    assert_eq!(l.scale(0, pi(5, 9)), pi(0, 0));
    assert_eq!(l.scale(4, pi(2, INF)), pi(8, INF));
    assert_eq!(l.scale(1 << 40, pi(1, 1)), pi(INF, INF));
    assert_eq!(l.delta(pi(1, 1), pi(2, 3)), Ok(pi(1, 2)));
    assert_eq!(l.delta(pi(4, 6), pi(4, 6)), Ok(pi(0, 0)));
    assert_eq!(l.delta(pi(0, 2), pi(1, 5)), Ok(pi(1, 3)));
    assert_eq!(l.delta(pi(1, INF), pi(2, INF)), Ok(PhaseInterval { lb: 1, ub: 0 }));
    assert_eq!(l.delta(pi(1, 3), pi(2, INF)), Ok(PhaseInterval { lb: 1, ub: INF }));
    assert!(matches!(l.delta(pi(2, 2), pi(1, 3)), Err(PiaError::NegativeDelta { .. })));
}

#[test]
fn widen_examples() {
    let l = lat();
    assert_eq!(l.widen(pi(2, 2), pi(2, 3), 0, INF), pi(2, INF));
    assert_eq!(l.widen(pi(2, 2), pi(2, 2), 5, 7), pi(2, 2));
    assert_eq!(l.widen(pi(3, 4), pi(2, 5), 1, 9), pi(1, 9));
    assert_eq!(l.widen(PhaseInterval::BOTTOM, pi(4, 4), 0, INF), pi(4, 4));
}

#[test]
fn accelerate_examples() {
    let l = lat();
    assert_eq!(l.accelerate_loop(pi(1, 1), pi(2, 2), Some(10)), Ok(pi(1, 11)));
    for tc in [0, 1, 7, 1000] {
        assert_eq!(l.accelerate_loop(pi(1, 1), pi(1, 1), Some(tc)), Ok(pi(1, 1)));
    }
    assert_eq!(l.accelerate_loop(pi(1, 1), pi(2, 2), None), Ok(pi(1, INF)));
    assert_eq!(l.accelerate_loop(pi(1, INF), pi(2, INF), Some(3)), Ok(pi(1, INF)));
    assert_eq!(l.accelerate_loop(pi(1, 2), pi(2, 4), Some(3)), Ok(pi(1, 8)));
}

#[test]
fn transfer_examples() {
    let l = lat();
    let mut g = TaskGraph::new();
    let s1 = g.add_node("S1");
    g.nodes[s1].is_parallel_entry = true;
    let s2 = g.add_node("S2");
    let bar = g.add_node("bar2");
    g.nodes[bar].is_barrier = true;
    let both = g.add_node("X");
    g.nodes[both].is_barrier = true;
    g.nodes[both].is_parallel_exit = true;
    assert_eq!(l.transfer(&g.nodes[s1], pi(0, 0)), pi(1, 1));
    assert_eq!(l.transfer(&g.nodes[s2], pi(1, 1)), pi(1, 1));
    assert_eq!(l.transfer(&g.nodes[bar], pi(2, 2)), pi(3, 3));
    assert_eq!(l.transfer(&g.nodes[both], pi(2, 2)), pi(3, 3));
    assert_eq!(l.transfer(&g.nodes[bar], PhaseInterval::BOTTOM), PhaseInterval::BOTTOM);
    assert_eq!(l.transfer(&g.nodes[bar], pi(3, INF)), pi(4, INF));
}

#[test]
fn display_uses_inf() {
    assert_eq!(lat().display(pi(2, INF)).to_string(), "[2,inf]");
    assert_eq!(lat().display(pi(0, 3)).to_string(), "[0,3]");
    assert_eq!(PiaLattice::new(5).display(pi(5, 5)).to_string(), "[inf,inf]");
}

#[test]
fn two_singles_intervals() {
    let (g, r) = solve_src(include_str!("../../tests/corpus/single_two.c"));
    let got: Vec<_> = g.nodes.iter().map(|n| (n.name.as_str(), r.inputs[n.id], r.outputs[n.id])).collect();
    assert_eq!(got, [
        ("R", pi(0, 0), pi(0, 0)),
        ("S1", pi(0, 0), pi(1, 1)),
        ("S2", pi(1, 1), pi(1, 1)),
        ("bar1", pi(1, 1), pi(2, 2)),
        ("S3", pi(2, 2), pi(2, 2)),
        ("S4", pi(2, 2), pi(2, 2)),
        ("bar2", pi(2, 2), pi(3, 3)),
        ("S5", pi(3, 3), pi(3, 3)),
        ("T", pi(3, 3), pi(4, 4)),
    ]);
}

#[test]
fn plain_chain_stays_at_zero() {
    let mut g = TaskGraph::new();
    let a = g.add_node("A");
    let t = g.add_terminal();
    g.add_edge(0, a);
    g.add_edge(a, t);
    let r = run_pia(&g, &lat()).unwrap();
    assert_eq!(r.inputs, [pi(0, 0); 3]);
    assert_eq!(r.outputs, [pi(0, 0); 3]);
}

#[test]
fn diamond_with_one_barrier_arm() {
    let mut g = TaskGraph::new();
    let e = g.add_node("E");
    g.nodes[e].is_parallel_entry = true;
    let b = g.add_node("B");
    g.nodes[b].is_barrier = true;
    let c = g.add_node("C");
    let m = g.add_node("M");
    let t = g.add_terminal();
    for (x, y) in [(0, e), (e, b), (e, c), (b, m), (c, m), (m, t)] {
        g.add_edge(x, y);
    }
    let r = run_pia(&g, &lat()).unwrap();
    assert_eq!(r.inputs[m], pi(1, 2));
    assert_eq!(r.outputs[t], pi(1, 2));
}

#[test]
fn known_trip_count_loop_with_barrier() {
    let src = "int main() {\n#pragma omp parallel\n{\n for (k = 0; k < 4; k++) {\n  x = 1;\n#pragma omp barrier\n }\n y = 2;\n}\n}";
    let (g, r) = solve_src(src);
    let l = &g.loops[0];
    assert_eq!(r.inputs[l.header], pi(1, 5));
    let after = g.succs(l.header).iter().copied().find(|s| !l.body.contains(s)).unwrap();
    assert_eq!(r.inputs[after], pi(1, 5));
}

#[test]
fn unknown_trip_count_widens() {
    let src = "int main() {\n#pragma omp parallel\n{\n for (k = 0; k < n; k++) {\n#pragma omp barrier\n }\n}\n}";
    let (g, r) = solve_src(src);
    assert_eq!(r.inputs[g.loops[0].header], pi(1, INF));
    let barrier_free = "int main() {\n#pragma omp parallel\n{\n for (k = 0; k < n; k++) x = k;\n}\n}";
    let (g, r) = solve_src(barrier_free);
    assert_eq!(r.inputs[g.loops[0].header], pi(1, 1));
}

#[test]
fn nested_known_loops_multiply() {
    let src = "int main() {\n#pragma omp parallel\n{\n for (a = 0; a < 3; a++)\n  for (b = 0; b < 2; b++) {\n#pragma omp barrier\n  }\n}\n}";
    let (g, r) = solve_src(src);
    let outer = g.loops.iter().max_by_key(|l| l.body.len()).unwrap();
    let inner = g.loops.iter().min_by_key(|l| l.body.len()).unwrap();
    assert_eq!(r.inputs[outer.header], pi(1, 7));
    // The inner loop is also entered from the outer header's final phase,
    // which the header interval cannot exclude.
    assert_eq!(r.inputs[inner.header], pi(1, 9));
}

#[test]
fn small_upper_bound_saturates() {
    let ast = parse_source("t.c", include_str!("../../tests/corpus/single_two.c")).unwrap().ast;
    let g = build_taskgraph(&[build_cfg(&ast, "main", CfgOptions::default())]).unwrap();
    let r = run_pia(&g, &PiaLattice::new(2)).unwrap();
    assert_eq!(r.outputs[g.terminal], pi(2, 2));
}

// ---- properties -----------------------------------------------------------

fn arb_pi() -> impl Strategy<Value = PhaseInterval> {
    prop_oneof![
        1 => Just(PhaseInterval::BOTTOM),
        8 => (0u64..20, 0u64..20).prop_map(|(a, b)| pi(a.min(b), a.max(b))),
        1 => (0u64..20).prop_map(|a| pi(a, INF)),
    ]
}

fn phase_node(changes: bool) -> crate::taskgraph::TgNode {
    let mut g = TaskGraph::new();
    let n = g.add_node("N");
    g.nodes[n].is_barrier = changes;
    g.nodes[n].clone()
}

proptest! {
    #[test]
    fn lattice_laws(a in arb_pi(), b in arb_pi(), c in arb_pi()) {
        prop_assert_eq!(a.join(b), b.join(a));
        prop_assert_eq!(a.join(b).join(c), a.join(b.join(c)));
        prop_assert_eq!(a.join(a), a);
        prop_assert!(a.leq(a.join(b)) && b.leq(a.join(b)));
        if a.leq(c) && b.leq(c) {
            prop_assert!(a.join(b).leq(c));
        }
        if a.leq(b) && b.leq(a) {
            prop_assert_eq!(a, b);
        }
        if a.leq(b) && b.leq(c) {
            prop_assert!(a.leq(c));
        }
        prop_assert_eq!(a.meet(lat().top()), a);
        prop_assert!(a.meet(b).leq(a) && a.meet(b).leq(b));
    }

    #[test]
    fn transfer_is_monotone(a in arb_pi(), b in arb_pi(), changes: bool) {
        let n = phase_node(changes);
        let j = a.join(b);
        prop_assert!(lat().transfer(&n, a).leq(lat().transfer(&n, j)));
    }

    #[test]
    fn widen_twice_is_stable(a in arb_pi(), b in arb_pi()) {
        let l = lat();
        let w = l.widen(a, b, 0, INF);
        prop_assert_eq!(l.widen(w, b, 0, INF), w);
        prop_assert!(a.leq(w) && b.leq(w));
    }

    #[test]
    fn overlap_is_set_intersection(a in arb_pi(), b in arb_pi()) {
        let set = |p: PhaseInterval| -> BTreeSet<u64> {
            if p.is_bottom() { BTreeSet::new() } else { (p.lb..=p.ub.min(40)).collect() }
        };
        prop_assert_eq!(a.overlaps(b), !set(a).is_disjoint(&set(b)));
        prop_assert_eq!(a.overlaps(b), b.overlaps(a));
    }
}

/// Random loop-free graph: nodes `1..n` each get a predecessor among earlier
/// nodes, sinks flow into `T`.
fn arb_dag() -> impl Strategy<Value = TaskGraph> {
    (1usize..11).prop_flat_map(|n| {
        let flags = prop::collection::vec(0u8..4, n);
        let preds = prop::collection::vec(any::<prop::sample::Index>(), n);
        let extra = prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..2 * n);
        (flags, preds, extra).prop_map(move |(flags, preds, extra)| {
            let mut g = TaskGraph::new();
            for (i, f) in flags.iter().enumerate() {
                let id = g.add_node(format!("N{i}"));
                g.nodes[id].is_barrier = *f == 1;
                g.nodes[id].is_parallel_entry = *f == 2;
                g.nodes[id].is_parallel_exit = *f == 3;
                g.add_edge(preds[i].index(id), id);
            }
            for (a, b) in extra {
                let (a, b) = (a.index(n + 1), b.index(n + 1));
                if a < b {
                    g.add_edge(a, b);
                }
            }
            let t = g.add_terminal();
            for x in 0..t {
                if g.succs(x).is_empty() {
                    g.add_edge(x, t);
                }
            }
            g
        })
    })
}

/// `[min, max]` of phase-changing nodes strictly before each node, over
/// every root path.
fn path_oracle(g: &TaskGraph) -> Vec<PhaseInterval> {
    fn walk(g: &TaskGraph, n: NodeId, count: u64, out: &mut Vec<PhaseInterval>) {
        out[n] = out[n].join(PhaseInterval::point(count));
        let c = count + u64::from(g.nodes[n].changes_phase());
        for &s in g.succs(n) {
            walk(g, s, c, out);
        }
    }
    let mut out = vec![PhaseInterval::BOTTOM; g.len()];
    walk(g, g.root, 0, &mut out);
    out
}

proptest! {
    #[test]
    fn loop_free_matches_path_oracle(g in arb_dag()) {
        let r = run_pia(&g, &lat()).unwrap();
        let want = path_oracle(&g);
        prop_assert_eq!(&r.inputs, &want);
        for n in &g.nodes {
            prop_assert_eq!(r.outputs[n.id], lat().transfer(n, want[n.id]));
        }
    }

    #[test]
    fn result_is_a_fixpoint(g in arb_dag()) {
        let l = lat();
        let r = run_pia(&g, &l).unwrap();
        for n in &g.nodes {
            if n.id == g.root {
                continue;
            }
            let j = g.preds(n.id).iter().fold(PhaseInterval::BOTTOM, |acc, &p| acc.join(r.outputs[p]));
            prop_assert_eq!(r.inputs[n.id], j);
            prop_assert_eq!(r.outputs[n.id], l.transfer(n, j));
        }
        let cap = 16 * (g.len() + 1) * (g.len() + 1);
        prop_assert!(r.iterations <= cap);
    }
}

/// Loop `H -> B1 .. Bk -> H` after a parallel entry, optionally with a
/// branch skipping `B2`; barriers sit on the listed positions (0 = header).
#[derive(Debug, Clone)]
struct LoopShape {
    body: usize,
    barriers: Vec<usize>,
    skip: bool,
    tc: u64,
}

fn arb_loop() -> impl Strategy<Value = LoopShape> {
    (1usize..5, 0u64..=8, any::<bool>()).prop_flat_map(|(body, tc, skip)| {
        prop::collection::vec(0..=body, 0..=2).prop_map(move |mut barriers| {
            barriers.sort();
            barriers.dedup();
            LoopShape { body, barriers, skip: skip && body >= 3, tc }
        })
    })
}

/// Emit `H, B1..Bk` into `g` after `pred`; returns (header, last body node).
fn emit_iteration(g: &mut TaskGraph, s: &LoopShape, pred: NodeId, tag: &str) -> (NodeId, NodeId) {
    let h = g.add_node(format!("H{tag}"));
    g.add_edge(pred, h);
    let mut ids = vec![h];
    for i in 1..=s.body {
        let b = g.add_node(format!("B{i}{tag}"));
        g.add_edge(ids[i - 1], b);
        ids.push(b);
    }
    if s.skip {
        g.add_edge(ids[1], ids[3]);
    }
    for &p in &s.barriers {
        g.nodes[ids[p]].is_barrier = true;
    }
    (h, ids[s.body])
}

fn looped(s: &LoopShape) -> (TaskGraph, NodeId) {
    let mut g = TaskGraph::new();
    let e = g.add_node("E");
    g.nodes[e].is_parallel_entry = true;
    g.add_edge(0, e);
    let (h, latch) = emit_iteration(&mut g, s, e, "");
    g.add_edge(latch, h);
    g.add_loop(crate::taskgraph::TgLoop {
        header: h,
        latches: vec![latch],
        body: (h..=latch).collect(),
        trip_count: Some(s.tc),
    });
    let x = g.add_node("X");
    g.add_edge(h, x);
    let t = g.add_terminal();
    g.add_edge(x, t);
    (g, h)
}

/// The loop unrolled `tc` times; returns the header copies.
fn unrolled(s: &LoopShape) -> (TaskGraph, Vec<NodeId>) {
    let mut g = TaskGraph::new();
    let e = g.add_node("E");
    g.nodes[e].is_parallel_entry = true;
    g.add_edge(0, e);
    let mut pred = e;
    let mut headers = Vec::new();
    for k in 0..s.tc {
        let (h, last) = emit_iteration(&mut g, s, pred, &format!("_{k}"));
        headers.push(h);
        pred = last;
    }
    let h = g.add_node("H_exit");
    g.nodes[h].is_barrier = s.barriers.first() == Some(&0);
    g.add_edge(pred, h);
    headers.push(h);
    let t = g.add_terminal();
    g.add_edge(h, t);
    (g, headers)
}

proptest! {
    #[test]
    fn acceleration_matches_unrolling(s in arb_loop()) {
        let (g, h) = looped(&s);
        let r = run_pia(&g, &lat()).unwrap();
        let (u, hs) = unrolled(&s);
        let ru = run_pia(&u, &lat()).unwrap();
        let want = hs.iter().fold(PhaseInterval::BOTTOM, |acc, &x| acc.join(ru.inputs[x]));
        prop_assert_eq!(r.inputs[h], want);
    }
}
