use homothet::assemble::{represent, Method, PipelineConfig};
use homothet::geometry::{q, Scalar};
use homothet::perturb::{face_gap, find_bad_triples};
use homothet::planar::{
    decompose, gen_four_connected, gen_stacked, gen_triangulation, separating_triangles, validate,
    GraphInput,
};
use homothet::solver::{snap_contacts, solve_contacts, Representation, SolverParams};
use homothet::verify::{
    check_graph, check_simple, extract_drawing, full_report, Drawing, ReportOptions,
    VerificationReport,
};

fn round_trip<T>(value: &T) -> T
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    serde_json::from_str(&serde_json::to_string(value).unwrap()).unwrap()
}

#[test]
fn artifacts_round_trip_exactly() {
    let g = gen_triangulation(18, 4).unwrap();
    let input = g.to_input();
    assert_eq!(round_trip(&input), input);
    assert_eq!(validate(&round_trip(&input)).unwrap(), g);

    let config = PipelineConfig {
        epsilon: q(1, 3),
        ..PipelineConfig::default()
    };
    assert_eq!(round_trip(&config), config);
    let assembly = represent(&g, &config).unwrap();
    assert_eq!(round_trip(&assembly), assembly);
    let rep = &assembly.representation;
    assert_eq!(&round_trip::<Representation>(rep), rep);

    let report = full_report(
        rep,
        &g,
        &config.epsilon,
        ReportOptions {
            audit: true,
            faces: true,
            drawing: true,
        },
    );
    assert!(report.passed, "{:?}", report.failures());
    assert_eq!(round_trip::<VerificationReport>(&report), report);
    let drawing = extract_drawing(rep, &g).unwrap();
    assert_eq!(round_trip::<Drawing>(&drawing), drawing);
}

#[test]
fn pipeline_is_deterministic() {
    let g = gen_triangulation(24, 9).unwrap();
    let config = PipelineConfig::default();
    let a = represent(&g, &config).unwrap();
    let b = represent(&g, &config).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn pieces_cover_the_decomposition() {
    let g = gen_triangulation(30, 2).unwrap();
    let tree = decompose(&g);
    assert_eq!(tree.len(), separating_triangles(&g).len() + 1);
    let glued: Vec<_> = tree.reglue().into_iter().collect();
    assert_eq!(glued, g.edges());

    let assembly = represent(&g, &PipelineConfig::default()).unwrap();
    assert_eq!(assembly.pieces.len(), tree.len());
    let mut eps = assembly.pieces[0].epsilon.clone();
    for piece in &assembly.pieces[1..] {
        assert!(piece.face_margin.as_ref().unwrap().is_positive());
        assert!(piece.epsilon.is_positive());
        eps = eps.min(piece.epsilon.clone());
    }
    assert!(eps.is_positive());
    let rep = &assembly.representation;
    assert!(check_graph(rep, &g).ok);
    assert!(check_simple(rep).ok);
    assert!(find_bad_triples(rep).unwrap().is_empty());
    for face in g.inner_faces() {
        let (_, margin) = face_gap(rep, *face, &[]).unwrap();
        assert!(margin.is_positive());
    }
}

#[test]
fn stacked_graphs_need_no_solver() {
    let g = gen_stacked(40, 3).unwrap();
    let assembly = represent(&g, &PipelineConfig::default()).unwrap();
    assert!(assembly
        .pieces
        .iter()
        .all(|p| p.method == Method::Stacked && p.solver.is_none()));
    assert!(
        full_report(
            &assembly.representation,
            &g,
            &Scalar::one(),
            ReportOptions::default()
        )
        .passed
    );
}

#[test]
fn contact_solution_snaps_to_exact_contacts() {
    let g = gen_four_connected(14, 6).unwrap();
    let config = PipelineConfig::default();
    let float = solve_contacts(
        &g,
        config.outer.clone(),
        config.epsilon.clone(),
        &config.solver,
    )
    .unwrap();
    assert!(float.stats.max_edge_residual <= config.solver.delta);
    let rep = snap_contacts(&g, &float).unwrap();
    assert!(check_graph(&rep, &g).ok);
    // a contact representation overlaps nowhere, so no bound on epsilon is needed
    let report = full_report(
        &rep,
        &g,
        &q(1, 1_000_000),
        ReportOptions {
            audit: false,
            faces: false,
            drawing: false,
        },
    );
    assert!(report.graph.ok && report.boundary.ok);
}

#[test]
fn invalid_solver_parameters_are_rejected() {
    let g = gen_four_connected(8, 0).unwrap();
    let config = PipelineConfig {
        solver: SolverParams {
            delta: 1.0,
            ..SolverParams::default()
        },
        ..PipelineConfig::default()
    };
    assert!(represent(&g, &config).is_err());
}

#[test]
fn malformed_graphs_are_rejected() {
    let bad = [
        GraphInput {
            n: 4,
            outer: [0, 1, 2],
            edges: vec![[0, 1], [1, 2], [0, 2]],
        },
        GraphInput {
            n: 4,
            outer: [0, 1, 3],
            edges: vec![[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3], [2, 2]],
        },
        GraphInput {
            n: 4,
            outer: [0, 1, 7],
            edges: vec![[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]],
        },
    ];
    for input in bad {
        assert!(validate(&input).is_err(), "{input:?}");
    }
}
