use graph_poisson::connection::{gauge_act, sample_rng, GaugeElement, GraphConnection, Move, MoveMap};
use graph_poisson::lie::{self, Flavor};
use graph_poisson::observable::Observable;
use graph_poisson::poisson::{random_closed_walk, random_trace_polynomial};
use graph_poisson::ribbon_graph::{named_graph, CiliatedFatGraph, NamedGraph};
use graph_poisson::ruijsenaars::{self as rs, FlowTimes, LeafPoint, LeafSpec, TorusPoint};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn gallery_graph(i: usize) -> CiliatedFatGraph {
    named_graph(NamedGraph::gallery()[i % 6]).unwrap()
}

fn random_move<R: Rng>(g: &CiliatedFatGraph, rng: &mut R) -> Option<MoveMap> {
    for _ in 0..64 {
        let ends = g.end_count();
        let verts = g.vertex_count();
        let mv = match rng.gen_range(0..4) {
            0 if ends > 2 => Move::Erase {
                end: g.end_name(rng.gen_range(0..ends)).to_string(),
            },
            1 if ends > 0 => {
                let e = rng.gen_range(0..ends);
                Move::Contract {
                    end: g.end_name(e).to_string(),
                    toward: g.vertex_of(e),
                }
            }
            2 if verts > 1 => Move::Glue {
                n1: rng.gen_range(0..verts),
                n2: rng.gen_range(0..verts),
            },
            3 => {
                let v = rng.gen_range(0..verts);
                Move::AddLoop {
                    vertex: v,
                    position: rng.gen_range(0..=g.valence(v)),
                }
            }
            _ => continue,
        };
        if let Ok(map) = MoveMap::new(g, &mv) {
            if map.target.surface().is_ok() && map.target.end_count() <= 16 {
                return Some(map);
            }
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn involution_and_euler_characteristic_survive_moves(graph in 0usize..6, seed in any::<u64>()) {
        let mut rng = sample_rng(seed, 0);
        let mut g = gallery_graph(graph);
        for _ in 0..12 {
            let Some(map) = random_move(&g, &mut rng) else { break };
            g = map.target;
            for e in 0..g.end_count() {
                prop_assert_ne!(g.partner(e), e);
                prop_assert_eq!(g.partner(g.partner(e)), e);
            }
            let s = g.surface().unwrap();
            prop_assert_eq!(s.euler_characteristic, s.vertex_count as i64 - s.edge_count as i64);
            prop_assert_eq!(s.euler_characteristic, 2 - 2 * s.genus as i64 - s.boundary_count as i64);
        }
    }

    #[test]
    fn graph_json_round_trips(graph in 0usize..6) {
        let g = gallery_graph(graph);
        let back = CiliatedFatGraph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), g.to_json());
    }

    #[test]
    fn gauge_action_composes(graph in 0usize..6, k in 2usize..4, seed in any::<u64>()) {
        let g = gallery_graph(graph);
        let mut rng = sample_rng(seed, 1);
        let a = GraphConnection::random_with(g.clone(), k, Flavor::SL, &mut rng);
        let x = GaugeElement::random_with(&g, k, Flavor::SL, &mut rng);
        let y = GaugeElement::random_with(&g, k, Flavor::SL, &mut rng);
        let lhs = gauge_act(&x.compose(&y), &a).unwrap();
        let rhs = gauge_act(&x, &gauge_act(&y, &a).unwrap()).unwrap();
        for e in 0..g.end_count() {
            prop_assert!(lie::max_norm(&(lhs.value(e) - rhs.value(e))) < 1e-9);
        }
        prop_assert!(lhs.inverse_residual() < 1e-9);
    }

    #[test]
    fn wilson_loops_are_gauge_invariant(graph in 0usize..6, seed in any::<u64>()) {
        let g = gallery_graph(graph);
        let mut rng = sample_rng(seed, 2);
        let walk = random_closed_walk(&g, &mut rng, 3);
        let first = g.vertex_of(g.partner(walk[0]));
        prop_assert_eq!(g.vertex_of(*walk.last().unwrap()), first);
        let f = random_trace_polynomial(&g, &mut rng, 5);
        let a = GraphConnection::random_with(g.clone(), 2, Flavor::SL, &mut rng);
        let h = GaugeElement::random_with(&g, 2, Flavor::SL, &mut rng);
        let before = f.eval(&a).unwrap();
        let after = f.eval(&gauge_act(&h, &a).unwrap()).unwrap();
        prop_assert!((before - after).norm() < 1e-8 * (1.0 + before.norm()));
    }

    #[test]
    fn flows_form_a_group(k in 2usize..4, seed in any::<u64>(), s in -0.5f64..0.5, t in -0.5f64..0.5) {
        let p = TorusPoint::random(k, seed, 0);
        let dir = FlowTimes((1..k).map(|n| Complex64::new(1.0 / n as f64, 0.3)).collect());
        let two_steps = rs::flow(&rs::flow(&p, &dir.scaled(s)).unwrap(), &dir.scaled(t)).unwrap();
        let one_step = rs::flow(&p, &dir.scaled(s + t)).unwrap();
        prop_assert!(two_steps.max_distance(&one_step) < 1e-9);
        let back = rs::flow(&rs::flow(&p, &dir.scaled(s)).unwrap(), &dir.scaled(-s)).unwrap();
        prop_assert!(back.max_distance(&p) < 1e-9);
    }

    #[test]
    fn momentum_map_is_conjugation_equivariant(k in 2usize..4, seed in any::<u64>()) {
        let p = TorusPoint::random(k, seed, 0);
        let mut rng = sample_rng(seed, 3);
        let g = graph_poisson::connection::random_group_element(&mut rng, k, Flavor::SL);
        let q = p.conjugated(&g).unwrap();
        let mu = rs::momentum_map(&p).unwrap();
        let mu_q = rs::momentum_map(&q).unwrap();
        let ginv = lie::try_inverse(&g).unwrap();
        let lhs_a = lie::max_norm(&(&mu_q - &ginv * &mu * &g));
        let lhs_b = lie::max_norm(&(&mu_q - &g * &mu * &ginv));
        prop_assert!(lhs_a.min(lhs_b) < 1e-8 * (1.0 + lie::max_norm(&mu)));
    }

    #[test]
    fn leaf_points_lie_on_the_minimal_leaf(k in 2usize..4, seed in any::<u64>()) {
        let mut rng = sample_rng(seed, 4);
        let spec = LeafSpec::random(k, &mut rng);
        let leaf = LeafPoint::from_spec(&spec).unwrap();
        prop_assert!(leaf.spectrum_residual() < 1e-8);
        prop_assert!(leaf.rank_ratio() < 1e-8);
        let h = rs::ruijsenaars_hamiltonian(&leaf).unwrap();
        prop_assert!(h.residual < 1e-8);
    }
}
