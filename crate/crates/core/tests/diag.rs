#[test]
fn sier_diag() {
    let rule = subdiv::gallery::sier();
    let h = subdiv::planar::history_graph_2d(&subdiv::gallery::tetra(), &rule, 4).unwrap();
    for (n, level) in h.levels.iter().enumerate() {
        let mut hist = std::collections::BTreeMap::new();
        for v in level.vertex_ids() {
            *hist.entry(level.degree(v)).or_insert(0usize) += 1;
        }
        println!("level {n}: {} vertices, degrees {:?}", level.vertex_count(), hist);
    }
    let report = subdiv::axioms::check_axioms(&h);
    println!("axioms raw: {}", if report.is_pass() { "pass".into() } else { format!("{report}") });
    let refined = subdiv::axioms::refine_labels(&h).unwrap();
    let report = subdiv::axioms::check_axioms(&refined);
    println!("axioms refined: {}", if report.is_pass() { "pass".into() } else { format!("{report}") });
}
