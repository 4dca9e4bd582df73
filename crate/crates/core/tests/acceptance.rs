//! Acceptance harness: runs the twelve criteria at their stated tolerances
//! and prints one PASS/FAIL line for each. Exits non-zero on any failure
//! not listed in `KNOWN_DEVIATIONS`.

use std::process::Command as Process;
use std::time::Instant;

use graph_poisson::cli::parse_move;
use graph_poisson::connection::{random_algebra_element, sample_rng, Move, MoveMap};
use graph_poisson::lie::{self, Flavor};
use graph_poisson::poisson::{Configuration, PoissonStructure, SKLYANIN_SIGN};
use graph_poisson::ribbon_graph::{named_graph, CiliatedFatGraph, NamedGraph};
use graph_poisson::ruijsenaars::{self as rs, FlowTimes, LeafPoint, LeafSpec, TorusPoint};
use graph_poisson::suites::{self, SuiteConfig, SuiteReport, TripleKind};
use graph_poisson::RMatrix;
use rand::Rng;

const SEED: u64 = 20240611;

/// Criteria whose literal form is known not to hold; see the README.
const KNOWN_DEVIATIONS: &[u32] = &[3, 9];

struct Outcome {
    pass: bool,
    /// Every clause except the literal one recorded as a known deviation.
    rest_pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        rest_pass: pass,
        summary: summary.into(),
    }
}

type Check = Result<Outcome, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn graph(name: NamedGraph) -> CiliatedFatGraph {
    named_graph(name).expect("named graph")
}

fn fmt(x: f64) -> String {
    format!("{x:.2e}")
}

fn require(report: &SuiteReport, worst: &mut f64) -> bool {
    *worst = worst.max(report.max_residual);
    report.pass
}

fn c1_axioms() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for k in 2..=4 {
        let rep = suites::axioms(&SuiteConfig::new(k, SEED, 1)).map_err(|e| e.to_string())?;
        pass &= rep.max_residual < 1e-12;
        worst = worst.max(rep.max_residual);
    }
    Ok(outcome(pass, format!("k=2..4 CYBE/symmetric part max {}", fmt(worst))))
}

fn c2_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for c in Configuration::ALL {
        let (g, _, _) = c.realize();
        for k in [2, 3] {
            let s = PoissonStructure::standard(g.clone(), k, Flavor::SL).map_err(|e| e.to_string())?;
            let rep = suites::bivector_oracle(&s, c.label(), &SuiteConfig::new(k, SEED, 100)).map_err(|e| e.to_string())?;
            pass &= require(&rep, &mut worst) && rep.max_residual < 1e-9;
        }
    }
    Ok(outcome(pass, format!("5 configurations x k=2,3 x 100 points, max {}", fmt(worst))))
}

/// `t` plus a random element of 𝔤∧𝔤: correct symmetric part, generic
/// (non-invariant) Yang-Baxter defect.
fn non_cybe_r(k: usize, stream: u64) -> Result<RMatrix, String> {
    let t = lie::casimir::<f64>(k, Flavor::SL).map_err(|e| e.to_string())?.tensor;
    let mut rng = sample_rng(SEED, 900 + stream);
    let x = random_algebra_element(&mut rng, k, Flavor::SL);
    let y = random_algebra_element(&mut rng, k, Flavor::SL);
    let tensor = t + x.kronecker(&y) - y.kronecker(&x);
    RMatrix::new(k, Flavor::SL, tensor).map_err(|e| e.to_string())
}

fn c3_jacobi() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for name in NamedGraph::gallery() {
        let s = PoissonStructure::standard(graph(name), 2, Flavor::SL).map_err(|e| e.to_string())?;
        for kind in [TripleKind::Traces, TripleKind::Mixed] {
            let rep = suites::jacobi_with(&s, &name.label(), &SuiteConfig::new(2, SEED, 50), kind)
                .map_err(|e| e.to_string())?;
            pass &= require(&rep, &mut worst) && rep.max_residual < 1e-8;
        }
    }
    let (mut traces, mut entries): (f64, f64) = (0.0, 0.0);
    for stream in 0..3 {
        let r = non_cybe_r(2, stream)?;
        let s = PoissonStructure::uniform(graph(NamedGraph::Double), &r).map_err(|e| e.to_string())?;
        let cfg = SuiteConfig::new(2, SEED, 50);
        let run = |kind| suites::jacobi_with(&s, "double", &cfg, kind).map_err(|e| e.to_string());
        traces = traces.max(run(TripleKind::Traces)?.max_residual);
        entries = entries.max(run(TripleKind::Entries)?.max_residual);
    }
    Ok(Outcome {
        pass: pass && traces > 1e-3,
        rest_pass: pass && entries > 1e-3,
        summary: format!(
            "6 graphs x 50 triples max {}; non-CYBE control on trace triples {} (gauge-invariant triples cannot see it), on entry triples {}",
            fmt(worst),
            fmt(traces),
            fmt(entries)
        ),
    })
}

fn c4_action() -> Check {
    let mut worst: f64 = 0.0;
    let mut opposite: f64 = f64::INFINITY;
    let mut pass = true;
    for name in [NamedGraph::TorusOneHole, NamedGraph::Double] {
        let s = PoissonStructure::standard(graph(name), 2, Flavor::SL).map_err(|e| e.to_string())?;
        let cfg = SuiteConfig::new(2, SEED, 50);
        let rep = suites::poisson_action(&s, &name.label(), &cfg, SKLYANIN_SIGN).map_err(|e| e.to_string())?;
        pass &= require(&rep, &mut worst) && rep.max_residual < 1e-8;
        let bad = suites::poisson_action(&s, &name.label(), &cfg, -SKLYANIN_SIGN).map_err(|e| e.to_string())?;
        opposite = opposite.min(bad.max_residual);
    }
    pass &= opposite > 1e-3;
    Ok(outcome(
        pass,
        format!("torus, double x 50 samples max {}; opposite sign min-over-graphs {}", fmt(worst), fmt(opposite)),
    ))
}

fn c5_moves() -> Check {
    let single = graph(NamedGraph::SingleEdge);
    let double = graph(NamedGraph::Double);
    let cases: Vec<(&str, CiliatedFatGraph, Vec<usize>, &str)> = vec![
        ("glue GxG", single.disjoint_union(&single), vec![2], "glue:1:2"),
        ("glue DxD", double.disjoint_union(&double), vec![2], "glue:1:2"),
        ("contract D", double.clone(), vec![], "contract:e1:0"),
        ("erase", double.clone(), vec![], "erase:e1"),
    ];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (label, g, flips, mv) in &cases {
        let s = suites::structure_with_flips(g, 2, Flavor::SL, flips).map_err(|e| e.to_string())?;
        let mv: Move = parse_move(mv)?;
        let rep = suites::move_poisson(&s, &mv, label, &SuiteConfig::new(2, SEED, 100)).map_err(|e| e.to_string())?;
        pass &= require(&rep, &mut worst) && rep.max_residual < 1e-9;
    }
    let union = single.disjoint_union(&single);
    let s = suites::structure_with_flips(&union, 2, Flavor::SL, &[]).map_err(|e| e.to_string())?;
    let rejected = suites::move_poisson(&s, &parse_move("glue:1:2")?, "glue", &SuiteConfig::new(2, SEED, 1))
        .err()
        .is_some_and(|e| e.to_string().contains("opposite"));
    pass &= rejected;
    Ok(outcome(
        pass,
        format!("4 moves x 100 samples max {}; glue without opposite r_a rejected: {rejected}", fmt(worst)),
    ))
}

fn c6_quotient() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for name in NamedGraph::gallery() {
        let g = graph(name);
        let cfg = SuiteConfig::new(2, SEED, 20);
        let rep = suites::ra_independence(&g, &name.label(), &cfg).map_err(|e| e.to_string())?;
        pass &= require(&rep, &mut worst) && rep.max_residual < 1e-9;
        let s = PoissonStructure::standard(g, 2, Flavor::SL).map_err(|e| e.to_string())?;
        let rep = suites::casimir(&s, &name.label(), &cfg).map_err(|e| e.to_string())?;
        pass &= require(&rep, &mut worst) && rep.max_residual < 1e-9;
    }
    Ok(outcome(pass, format!("r_a independence and face Casimirs on 6 graphs, max {}", fmt(worst))))
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
                let toward = if rng.gen_bool(0.5) {
                    g.vertex_of(e)
                } else {
                    g.vertex_of(g.partner(e))
                };
                Move::Contract {
                    end: g.end_name(e).to_string(),
                    toward,
                }
            }
            2 if verts > 1 => {
                let n1 = rng.gen_range(0..verts);
                let n2 = rng.gen_range(0..verts);
                Move::Glue { n1, n2 }
            }
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

fn c7_surfaces() -> Check {
    let torus = graph(NamedGraph::TorusOneHole).surface().map_err(|e| e.to_string())?;
    let disk = graph(NamedGraph::SingleEdge).surface().map_err(|e| e.to_string())?;
    let annulus = graph(NamedGraph::Polygon(3)).surface().map_err(|e| e.to_string())?;
    let mut pass = (torus.genus, torus.boundary_count) == (1, 1)
        && (disk.genus, disk.boundary_count) == (0, 1)
        && (annulus.genus, annulus.boundary_count) == (0, 2);
    let mut sequences = 0;
    let mut moves = 0;
    for name in NamedGraph::gallery() {
        for stream in 0..5 {
            let mut rng = sample_rng(SEED, stream);
            let mut g = graph(name);
            for _ in 0..20 {
                let Some(map) = random_move(&g, &mut rng) else { break };
                g = map.target;
                let s = g.surface().map_err(|e| e.to_string())?;
                let chi = s.vertex_count as i64 - s.edge_count as i64;
                pass &= s.euler_characteristic == chi
                    && chi == 2 - 2 * s.genus as i64 - s.boundary_count as i64;
                moves += 1;
            }
            sequences += 1;
        }
    }
    Ok(outcome(
        pass,
        format!(
            "torus (g,b)=({},{}), single edge disk, polygon(3) annulus; chi checked after {moves} moves in {sequences} sequences",
            torus.genus, torus.boundary_count
        ),
    ))
}

fn c8_leaf() -> Check {
    let (mut spec_w, mut det_w, mut h_w): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in [2, 3] {
        let mut rng = sample_rng(SEED, 100 + k as u64);
        for _ in 0..20 {
            let spec = LeafSpec::random(k, &mut rng);
            let leaf = LeafPoint::from_spec(&spec).map_err(|e| e.to_string())?;
            spec_w = spec_w.max(leaf.spectrum_residual());
            det_w = det_w.max(
                rs::det_b_check(&spec.lambda, &spec.q, spec.x)
                    .map_err(|e| e.to_string())?
                    .relative_error,
            );
            h_w = h_w.max(rs::ruijsenaars_hamiltonian(&leaf).map_err(|e| e.to_string())?.residual);
        }
    }
    Ok(outcome(
        spec_w < 1e-8 && det_w < 1e-10 && h_w < 1e-8,
        format!("k=2,3 x 20 leaves: spectrum {}, det B {}, H {}", fmt(spec_w), fmt(det_w), fmt(h_w)),
    ))
}

fn c9_coordinates() -> Check {
    let mut main: f64 = 0.0;
    let mut literal: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for k in [2, 3] {
        let mut rng = sample_rng(SEED, 200 + k as u64);
        for _ in 0..3 {
            let leaf = LeafPoint::from_spec(&LeafSpec::random(k, &mut rng)).map_err(|e| e.to_string())?;
            let r = rs::coordinate_brackets_check(&leaf).map_err(|e| e.to_string())?;
            main = main.max(r.lambda_lambda).max(r.lambda_q).max(r.lambda_s).max(r.s_s);
            literal = literal.max(r.q_q);
            corrected = corrected.max(r.q_q_corrected);
        }
    }
    Ok(Outcome {
        pass: main < 1e-5 && literal < 1e-4,
        rest_pass: main < 1e-5 && corrected < 1e-4,
        summary: format!(
            "lambda/q/s brackets max {}; literal {{q,q}} {}; {{q,q}} with (1-x)^2 factor {}",
            fmt(main),
            fmt(literal),
            fmt(corrected)
        ),
    })
}

fn c10_flows() -> Check {
    let (mut comm, mut add, mut drift): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut tr_b_const = true;
    for k in [2, 3] {
        for stream in 0..4 {
            let p = TorusPoint::random(k, SEED, stream);
            let mut rng = sample_rng(SEED, 300 + stream);
            let t1 = FlowTimes((1..k).map(|_| rs_complex(&mut rng)).collect());
            let t2 = FlowTimes((1..k).map(|_| rs_complex(&mut rng)).collect());
            comm = comm.max(rs::flows_commute_check(&p, &t1, &t2).map_err(|e| e.to_string())?);
            add = add.max(rs::flow_additivity_check(&p, &t1, &t2).map_err(|e| e.to_string())?);
            let rows = rs::trajectory(&p, &t1.scaled(0.05), 50).map_err(|e| e.to_string())?;
            tr_b_const &= rows.iter().all(|r| r.tr_b == rows[0].tr_b);
            for r in &rows {
                for (a, b) in r.mu_char_poly.iter().zip(&rows[0].mu_char_poly) {
                    drift = drift.max((a - b).norm());
                }
            }
        }
    }
    Ok(outcome(
        comm < 1e-10 && add < 1e-10 && drift < 1e-8 && tr_b_const,
        format!(
            "commute {}, additivity {}, char-poly drift {} over 50 steps, tr B^n constant: {tr_b_const}",
            fmt(comm),
            fmt(add),
            fmt(drift)
        ),
    ))
}

fn rs_complex<R: Rng>(rng: &mut R) -> num_complex::Complex64 {
    num_complex::Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
}

fn c11_spin() -> Check {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for name in [NamedGraph::SingleEdge, NamedGraph::Loop] {
        let rep = suites::spin_network_suite(&graph(name), &name.label(), &SuiteConfig::new(2, SEED, 20))
            .map_err(|e| e.to_string())?;
        pass &= require(&rep, &mut worst) && rep.max_residual < 1e-10;
        pass &= rep.details["orientation_exact"] == serde_json::Value::Bool(true);
    }
    Ok(outcome(pass, format!("single edge and loop, k=2: gauge residual {}; orientation choice exact", fmt(worst))))
}

fn c12_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_graph-poisson");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: Vec<Vec<&str>> = vec![
        vec!["axioms", "--k", "2..4"],
        vec!["verify", "--suite", "all", "--graph", "torus_one_hole", "--samples", "5"],
        vec!["verify", "--suite", "all", "--graph", "double", "--samples", "5", "--move", "contract:e1:0"],
        vec!["ruijsenaars", "leaf", "--k", "3"],
        vec!["ruijsenaars", "hamiltonian", "--k", "3"],
        vec!["ruijsenaars", "detb", "--k", "3"],
        vec!["ruijsenaars", "brackets", "--k", "2"],
        vec!["ruijsenaars", "relations", "--k", "3"],
        vec!["ruijsenaars", "flow", "--k", "3", "--times", "0.1,0.05", "--steps", "10"],
        vec!["graph", "gallery"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{i}_{rep}.out"));
            let status = Process::new(bin)
                .args(args)
                .args(["--out", path.to_str().expect("utf-8 path")])
                .env("RP_DEFAULT_SEED", SEED.to_string())
                .status()
                .map_err(|e| e.to_string())?;
            if status.code().is_none_or(|c| c > 1) {
                return Err(format!("`{}` exited with {status}", args.join(" ")));
            }
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    Ok(outcome(
        identical == runs.len(),
        format!("{identical}/{} CLI reports byte-identical across two runs", runs.len()),
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "r-matrix axioms", c1_axioms),
        (2, "bivector vs closed formulas", c2_oracle),
        (3, "Jacobi identity", c3_jacobi),
        (4, "Poisson gauge action", c4_action),
        (5, "Poisson moves", c5_moves),
        (6, "quotient corollaries", c6_quotient),
        (7, "surface topology", c7_surfaces),
        (8, "Ruijsenaars leaf", c8_leaf),
        (9, "coordinate brackets", c9_coordinates),
        (10, "flows", c10_flows),
        (11, "spin networks", c11_spin),
        (12, "determinism", c12_determinism),
    ];
    let mut unexpected = Vec::new();
    for (n, title, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, rest_pass, summary) = match result {
            Ok(o) => (o.pass, o.rest_pass, o.summary),
            Err(e) => (false, false, format!("error: {e}")),
        };
        let known = !pass && rest_pass && KNOWN_DEVIATIONS.contains(&n);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {n:>2} {tag:<12} {title}: {summary} [{secs:.2}s]");
        if !pass && !known {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
