use proptest::prelude::*;

use super::*;
use crate::pipeline::{analyze_source, Analysis, Config};

const DRB013: &str = include_str!("../../tests/corpus/drb013_nowait.c");
const SECTIONS: &str = include_str!("../../tests/corpus/sections_race1.c");

fn analyze(src: &str) -> Analysis {
    analyze_source("t.c", src, &Config::default()).unwrap()
}

fn races(src: &str) -> Vec<(String, u32, u32, RaceKind)> {
    analyze(src).races.iter().map(|r| (r.source.name.clone(), r.source.loc.line, r.sink.loc.line, r.kind)).collect()
}

fn parallel(body: &str) -> String {
    format!("int a[100];\nint main() {{\n#pragma omp parallel\n{{\n{body}\n}}\n}}\n")
}

fn sharing_of(a: &Analysis, name: &str, line: u32) -> SharingClass {
    collect_accesses(&a.cfgs, &a.graph)
        .into_iter()
        .find(|m| m.name == name && m.loc.line == line)
        .unwrap_or_else(|| panic!("no access to {name} on line {line}"))
        .sharing
}

#[test]
fn drb013_accesses_and_classes() {
    let a = analyze(DRB013);
    let acc = collect_accesses(&a.cfgs, &a.graph);
    let line12: Vec<_> = acc.iter().filter(|m| m.loc.line == 12).map(|m| (m.name.as_str(), m.kind)).collect();
    assert_eq!(line12, [
        ("b", AccessKind::Read),
        ("i", AccessKind::Read),
        ("a", AccessKind::Read),
        ("i", AccessKind::Read),
        ("a", AccessKind::Write),
    ]);
    let nodes: BTreeSet<_> = acc.iter().filter(|m| m.loc.line == 12).map(|m| m.node).collect();
    assert_eq!(nodes.len(), 1);
    let line14: Vec<_> = acc.iter().filter(|m| m.loc.line == 14).map(|m| (m.name.as_str(), m.kind)).collect();
    assert_eq!(line14, [("a", AccessKind::Read), ("error", AccessKind::Write)]);
    assert_eq!(sharing_of(&a, "b", 12), SharingClass::Shared);
    assert_eq!(sharing_of(&a, "i", 12), SharingClass::LoopInduction);
    assert_eq!(sharing_of(&a, "a", 12), SharingClass::Shared);
}

#[test]
fn drb013_single_race() {
    let a = analyze(DRB013);
    assert_eq!(a.races.len(), 1);
    let r = &a.races[0];
    assert_eq!((r.source.name.as_str(), r.source.kind, r.source.loc.line), ("a", AccessKind::Write, 12));
    assert_eq!((r.sink.name.as_str(), r.sink.kind, r.sink.loc.line), ("a", AccessKind::Read, 14));
    assert_eq!(r.kind, RaceKind::WriteRead);
    assert!(races(&DRB013.replace("for nowait", "for")).is_empty());
}

#[test]
fn sections_write_write() {
    let got = races(SECTIONS);
    assert_eq!(got, [("x".to_string(), 10, 12, RaceKind::WriteWrite)]);
    let a = analyze(SECTIONS);
    assert_eq!((a.races[0].source.loc.col, a.races[0].sink.loc.col), (11, 11));
}

#[test]
fn reduction_clause() {
    let src = "int main() {\n int s = 0;\n#pragma omp parallel for reduction(+: s)\n for (i = 0; i < 10; i++)\n  s += i;\n}";
    let a = analyze(src);
    assert_eq!(sharing_of(&a, "s", 5), SharingClass::ReductionVar);
    assert!(a.races.is_empty());
}

#[test]
fn private_and_declared_inside() {
    assert!(races(&parallel("int t;\n t = 1;")).is_empty());
    let src = "int main() {\n int t;\n#pragma omp parallel private(t)\n { t = 1; }\n}";
    assert!(races(src).is_empty());
    let src = "int main() {\n int t;\n#pragma omp parallel firstprivate(t)\n { t = t + 1; }\n}";
    assert!(races(src).is_empty());
    let src = "int main() {\n int t;\n#pragma omp parallel\n { t = 1; }\n}";
    assert_eq!(races(src), [("t".to_string(), 4, 4, RaceKind::WriteWrite)]);
}

#[test]
fn threadprivate_global() {
    let src = "int g;\n#pragma omp threadprivate(g)\nint main() {\n#pragma omp parallel\n { g = 1; }\n}";
    let a = analyze(src);
    assert_eq!(sharing_of(&a, "g", 5), SharingClass::ThreadPrivate);
    assert!(a.races.is_empty());
}

#[test]
fn atomic_pairs() {
    assert!(races(&parallel("#pragma omp atomic\n a[0] += 1;")).is_empty());
    let got = races(&parallel("#pragma omp atomic\n a[0] += 1;\n a[0] = 2;"));
    assert!(!got.is_empty());
}

#[test]
fn critical_same_and_different_locks() {
    assert!(races(&parallel("#pragma omp critical\n a[0] = 1;")).is_empty());
    assert!(races(&parallel("#pragma omp critical(x)\n a[0] = 1;\n#pragma omp critical(x)\n a[0] = 2;")).is_empty());
    assert!(!races(&parallel("#pragma omp critical(x)\n a[0] = 1;\n#pragma omp critical(y)\n a[0] = 2;")).is_empty());
}

#[test]
fn subscript_rules() {
    let lp = |body: &str| {
        format!("int a[100];\nint main() {{\n#pragma omp parallel for\n for (i = 0; i < 50; i++) {{\n {body}\n }}\n}}\n")
    };
    assert!(races(&lp("a[i] = a[i] + 1;")).is_empty());
    assert!(!races(&lp("a[i] = a[i + 1];")).is_empty());
    assert!(races(&lp("a[i + 1] = a[i + 1] * 2;")).is_empty());
    assert!(!races(&lp("a[2 * i] = 1;")).is_empty());
    assert!(!races(&lp("a[3] = 1;")).is_empty());
    assert!(races(&parallel("#pragma omp single nowait\n a[3] = 1;\n int t; t = a[4];")).is_empty());
    assert!(!races(&parallel("#pragma omp single nowait\n a[3] = 1;\n int t; t = a[3];")).is_empty());
}

#[test]
fn sequential_loop_in_region_races_on_counter() {
    let got = races(&parallel("for (k = 0; k < 4; k++) a[k] = 0;"));
    assert!(got.iter().any(|r| r.0 == "k"));
    assert!(got.iter().any(|r| r.0 == "a"));
}

#[test]
fn barrier_removes_race() {
    assert!(!races(&parallel("#pragma omp single nowait\n a[0] = 1;\n int t; t = a[0];")).is_empty());
    assert!(races(&parallel("#pragma omp single nowait\n a[0] = 1;\n#pragma omp barrier\n int t; t = a[0];")).is_empty());
}

#[test]
fn master_pairs() {
    assert!(races(&parallel("#pragma omp master\n a[0] = 1;\n#pragma omp master\n a[0] = 2;")).is_empty());
    assert!(!races(&parallel("#pragma omp master\n a[0] = 1;\n a[1] = a[0];")).is_empty());
}

#[test]
fn conflicting_clauses() {
    let src = "int main() {\n int t;\n#pragma omp parallel private(t) shared(t)\n { t = 1; }\n}";
    let err = analyze_source("t.c", src, &Config::default()).unwrap_err();
    assert!(matches!(err, crate::pipeline::AnalysisError::Race(RaceError::ConflictingClauses { .. })));
    let ok = "int main() {\n int t;\n#pragma omp parallel for firstprivate(t) lastprivate(t)\n for (i = 0; i < 4; i++) t = i;\n}";
    assert!(analyze_source("t.c", ok, &Config::default()).is_ok());
}

#[test]
fn sequential_code_never_races() {
    assert!(races("int main() { x = 1; x = 2; y = x; }").is_empty());
}

#[test]
fn inlined_callee_races_on_alias() {
    let src = "void put(int v[], int k) { v[0] = k; }\nint a[4];\nint main() {\n#pragma omp parallel\n {\n  put(a, 1);\n }\n}";
    let got = races(src);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].0, "a");
}

// ---- properties -----------------------------------------------------------

fn arb_stmt(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        Just("x = 1;".to_string()),
        Just("y = x;".to_string()),
        Just("a[0] = a[1];".to_string()),
        Just("int p; p = x;".to_string()),
        Just("#pragma omp barrier\n".to_string()),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = prop::collection::vec(arb_stmt(depth - 1), 1..3).prop_map(|v| format!("{{\n{}\n}}", v.join("\n")));
    prop_oneof![
        leaf,
        inner.clone().prop_map(|b| format!("#pragma omp single\n{b}")),
        inner.clone().prop_map(|b| format!("#pragma omp single nowait\n{b}")),
        inner.clone().prop_map(|b| format!("#pragma omp master\n{b}")),
        inner.clone().prop_map(|b| format!("#pragma omp critical\n{b}")),
        inner.clone().prop_map(|b| format!("#pragma omp sections\n{{\n#pragma omp section\n{b}\n#pragma omp section\n{b}\n}}")),
        inner.prop_map(|b| format!("if (c) {b}")),
    ]
    .boxed()
}

fn arb_program() -> impl Strategy<Value = String> {
    prop::collection::vec(arb_stmt(2), 1..4)
        .prop_map(|v| format!("int a[10];\nint main() {{\n#pragma omp parallel\n{{\n{}\n}}\n}}", v.join("\n")))
}

proptest! {
    #[test]
    fn reports_are_sound_and_deterministic(src in arb_program()) {
        let Ok(a) = analyze_source("p.c", &src, &Config::default()) else { return Ok(()) };
        let again = analyze_source("p.c", &src, &Config::default()).unwrap();
        prop_assert_eq!(&a.races, &again.races);
        let mut keys = BTreeSet::new();
        for r in &a.races {
            prop_assert!(r.source.kind == AccessKind::Write || r.sink.kind == AccessKind::Write);
            prop_assert!(r.source.sharing.is_racy() && r.sink.sharing.is_racy());
            prop_assert!(r.source.name != "p");
            let v = may_happen_in_parallel(r.source.node, r.sink.node, &a.graph, &a.pia, MhpOptions::default()).unwrap();
            prop_assert!(v.may_happen_in_parallel);
            prop_assert!(keys.insert((r.source.loc.clone(), r.sink.loc.clone())));
        }
        let mut sorted = a.races.clone();
        sorted.sort_by(|x, y| (&x.source.loc, &x.sink.loc).cmp(&(&y.source.loc, &y.sink.loc)));
        prop_assert_eq!(sorted, a.races);
    }
}
