//! Seeded verification suites shared by the command-line tool and the
//! acceptance tests. Every suite returns a [`SuiteReport`] whose serialized
//! form depends only on its inputs.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::connection::{sample_rng, GaugeElement, GraphConnection, Move, MoveMap};
use crate::error::{BracketError, ConnectionError};
use crate::lie::{self, Flavor};
use crate::RMatrix;
use crate::poisson::{
    closed_formula_tensor, face_power_trace, fixed_monodromy_leaf_check, jacobi_residual, move_is_poisson_residual,
    poisson_action_residual, ra_independence_residual, random_trace_polynomial, random_word_entry, Configuration,
    PoissonStructure, SKLYANIN_SIGN,
};
use crate::ribbon_graph::CiliatedFatGraph;
use crate::spin_network::{self, Intertwiner, Rep, SpinNetwork};

/// Suite names accepted by `verify --suite`.
pub const SUITES: [&str; 9] = [
    "bivector-oracle",
    "jacobi",
    "poisson-action",
    "move-poisson",
    "ra-independence",
    "casimir",
    "leaf-submanifold",
    "spin-network",
    "axioms",
];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub graph: String,
    pub k: usize,
    pub flavor: Flavor,
    pub seed: u64,
    pub samples: u64,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
    /// Sample index (RNG stream) attaining `max_residual`.
    pub worst_sample: Option<u64>,
    pub details: serde_json::Value,
}

/// Common inputs of a suite run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub k: usize,
    pub flavor: Flavor,
    pub seed: u64,
    pub samples: u64,
    pub tol: Option<f64>,
}

impl SuiteConfig {
    pub fn new(k: usize, seed: u64, samples: u64) -> Self {
        SuiteConfig {
            k,
            flavor: Flavor::SL,
            seed,
            samples,
            tol: None,
        }
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Running maximum with the index that attained it.
#[derive(Debug, Default, Clone, Copy)]
struct Worst {
    value: f64,
    sample: Option<u64>,
}

impl Worst {
    fn push(&mut self, sample: u64, v: f64) {
        if self.sample.is_none() || v > self.value || v.is_nan() {
            self.value = if v.is_nan() { f64::INFINITY } else { v };
            self.sample = Some(sample);
        }
    }
}

fn report(
    suite: &str,
    graph: &str,
    cfg: &SuiteConfig,
    tol: f64,
    worst: Worst,
    details: serde_json::Value,
) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        graph: graph.to_string(),
        k: cfg.k,
        flavor: cfg.flavor,
        seed: cfg.seed,
        samples: cfg.samples,
        tol,
        max_residual: worst.value,
        pass: worst.value < tol,
        worst_sample: worst.sample,
        details,
    }
}

/// Standard r at every vertex, `r₂₁` at the vertices listed in `flipped`.
pub fn structure_with_flips(
    graph: &CiliatedFatGraph,
    k: usize,
    flavor: Flavor,
    flipped: &[usize],
) -> Result<PoissonStructure, BracketError> {
    let r = lie::standard_r_with::<f64>(k, flavor)?;
    let rs: Vec<RMatrix> = (0..graph.vertex_count())
        .map(|v| if flipped.contains(&v) { r.flipped() } else { r.clone() })
        .collect();
    PoissonStructure::new(graph.clone(), rs)
}

/// CYBE, symmetric part and Casimir completeness of the standard r-matrix.
pub fn axioms(cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let r = lie::standard_r_with::<f64>(cfg.k, cfg.flavor)?;
    let cybe = lie::cybe_residual(&r);
    let sym = r.symmetric_part_residual()?;
    let completeness = lie::max_norm(
        &(lie::casimir::<f64>(cfg.k, cfg.flavor)?.tensor - lie::casimir_closed_form::<f64>(cfg.k, cfg.flavor)),
    );
    let mut worst = Worst::default();
    worst.push(0, cybe.max(sym).max(completeness));
    let tol = cfg.tol_or(1e-12);
    Ok(report(
        "axioms",
        "-",
        cfg,
        tol,
        worst,
        serde_json::json!({"cybe": cybe, "symmetric_part": sym, "completeness": completeness}),
    ))
}

/// Every ordered pair of ends in a configuration with a closed formula:
/// bivector matrix bracket against the formula.
pub fn bivector_oracle(s: &PoissonStructure, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let graph = s.graph();
    let mut pairs: Vec<(Configuration, usize, usize)> = Vec::new();
    for c in Configuration::ALL {
        for alpha in 0..graph.end_count() {
            for beta in 0..graph.end_count() {
                if c.holds(graph, alpha, beta) {
                    pairs.push((c, alpha, beta));
                }
            }
        }
    }
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let a = GraphConnection::random_with(graph.clone(), s.k(), s.flavor(), &mut rng);
        for &(c, alpha, beta) in &pairs {
            let lhs = s.matrix_bracket(&a, alpha, beta)?;
            let rhs = closed_formula_tensor(c, s, &a, alpha, beta)?;
            worst.push(sample, lie::max_norm(&(lhs - rhs)));
        }
    }
    let tol = cfg.tol_or(1e-9);
    let mut rep = report(
        "bivector-oracle",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({
            "pairs": pairs
                .iter()
                .map(|(c, a, b)| format!("{}({},{})", c.label(), graph.end_name(*a), graph.end_name(*b)))
                .collect::<Vec<_>>()
        }),
    );
    if pairs.is_empty() {
        rep.pass = false;
    }
    Ok(rep)
}

/// Observables drawn for a Jacobi triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleKind {
    /// Two word entries and one Wilson loop.
    Mixed,
    /// Three Wilson loops.
    Traces,
    /// Three word entries; the only kind that sees a non-invariant
    /// Yang-Baxter defect.
    Entries,
}

/// Jacobi identity on two word entries and one trace, exact backend.
pub fn jacobi(s: &PoissonStructure, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    jacobi_with(s, name, cfg, TripleKind::Mixed)
}

pub fn jacobi_with(s: &PoissonStructure, name: &str, cfg: &SuiteConfig, kind: TripleKind) -> Result<SuiteReport, BracketError> {
    let graph = s.graph();
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let a = GraphConnection::random_with(graph.clone(), s.k(), s.flavor(), &mut rng);
        let mut draw = |entry: bool| {
            if entry {
                random_word_entry(graph, s.k(), &mut rng, 3)
            } else {
                random_trace_polynomial(graph, &mut rng, 3)
            }
        };
        let (f, g, h) = match kind {
            TripleKind::Mixed => (draw(true), draw(true), draw(false)),
            TripleKind::Traces => (draw(false), draw(false), draw(false)),
            TripleKind::Entries => (draw(true), draw(true), draw(true)),
        };
        worst.push(sample, jacobi_residual(s, &f, &g, &h, &a)?);
    }
    let tol = cfg.tol_or(1e-8);
    Ok(report("jacobi", name, cfg, tol, worst, serde_json::json!({"triples": kind})))
}

/// Poisson property of the gauge action with the given Sklyanin sign.
pub fn poisson_action(
    s: &PoissonStructure,
    name: &str,
    cfg: &SuiteConfig,
    sign: f64,
) -> Result<SuiteReport, BracketError> {
    let graph = s.graph();
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let f = random_word_entry(graph, s.k(), &mut rng, 3);
        let g = random_word_entry(graph, s.k(), &mut rng, 3);
        let point_seed = cfg.seed.wrapping_add(sample).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        worst.push(sample, poisson_action_residual(s, &f, &g, sign, 1, point_seed)?);
    }
    let tol = cfg.tol_or(1e-8);
    Ok(report(
        "poisson-action",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({"sklyanin_sign": sign}),
    ))
}

/// Poisson property of a move's connection map, with observables drawn on
/// the target graph.
pub fn move_poisson(s: &PoissonStructure, mv: &Move, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let map = MoveMap::new(s.graph(), mv).map_err(ConnectionError::from)?;
    let target = map.target.clone();
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let f = random_word_entry(&target, s.k(), &mut rng, 3);
        let g = random_word_entry(&target, s.k(), &mut rng, 3);
        let point_seed = cfg.seed.wrapping_add(sample).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        worst.push(sample, move_is_poisson_residual(s, mv, &f, &g, 1, point_seed)?);
    }
    let tol = cfg.tol_or(1e-9);
    Ok(report(
        "move-poisson",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({"move": mv, "target": target.to_json()}),
    ))
}

/// Brackets of Wilson loops under `r ↦ r₂₁` at every vertex (same `t`).
pub fn ra_independence(graph: &CiliatedFatGraph, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let all: Vec<usize> = (0..graph.vertex_count()).collect();
    let s1 = structure_with_flips(graph, cfg.k, cfg.flavor, &[])?;
    let s2 = structure_with_flips(graph, cfg.k, cfg.flavor, &all)?;
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let a = GraphConnection::random_with(graph.clone(), cfg.k, cfg.flavor, &mut rng);
        let f = random_trace_polynomial(graph, &mut rng, 4);
        let g = random_trace_polynomial(graph, &mut rng, 4);
        worst.push(sample, ra_independence_residual(&s1, &s2, &f, &g, &a, cfg.seed)?);
    }
    let tol = cfg.tol_or(1e-9);
    Ok(report("ra-independence", name, cfg, tol, worst, serde_json::json!({})))
}

/// `{tr Mⁿ, g}` for every face monodromy `M`, `n = 1..k`, and random
/// Wilson loops `g`.
pub fn casimir(s: &PoissonStructure, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let graph = s.graph();
    let faces = graph.face_cycles();
    let mut worst = Worst::default();
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let a = GraphConnection::random_with(graph.clone(), s.k(), s.flavor(), &mut rng);
        let g = random_trace_polynomial(graph, &mut rng, 4);
        for face in &faces {
            for n in 1..=s.k() {
                let m = face_power_trace(graph, face, n);
                worst.push(sample, s.bracket(&m, &g, &a)?.value.norm());
            }
        }
    }
    let tol = cfg.tol_or(1e-9);
    Ok(report(
        "casimir",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({"faces": graph.faces()}),
    ))
}

/// Tangency of Hamiltonian flows to fixed face-monodromy conjugacy classes,
/// over every cilium-free face. Graphs whose faces all pass a cilium are
/// refused.
pub fn leaf_submanifold(s: &PoissonStructure, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let graph = s.graph();
    let mut worst = Worst::default();
    let mut checked = Vec::new();
    let mut refused = Vec::new();
    for face in graph.face_cycles() {
        let names: Vec<String> = face.iter().map(|&e| graph.end_name(e).to_string()).collect();
        match fixed_monodromy_leaf_check(s, &face, cfg.samples, cfg.seed) {
            Ok(r) => {
                worst.push(0, r.max_residual);
                checked.push(names);
            }
            Err(BracketError::CiliumInFace) => refused.push(names),
            Err(e) => return Err(e),
        }
    }
    let tol = cfg.tol_or(1e-8);
    let mut rep = report(
        "leaf-submanifold",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({"checked_faces": checked, "refused_faces_with_cilium": refused}),
    );
    if checked.is_empty() {
        rep.pass = false;
        rep.max_residual = f64::NAN;
    }
    Ok(rep)
}

/// The invariant intertwiner used at a vertex: the `ε`-built one for two
/// slots and `k = 2`, otherwise the first vector of the invariant basis, or
/// zero when the vertex admits no invariant.
pub fn default_intertwiner(kinds: &[spin_network::SlotKind], k: usize) -> Result<Intertwiner, BracketError> {
    if k == 2 && kinds.len() == 2 {
        return spin_network::epsilon_intertwiner(kinds);
    }
    Ok(spin_network::invariant_basis(kinds, k)?
        .into_iter()
        .next()
        .unwrap_or_else(|| Intertwiner::zeros(k, kinds.len())))
}

/// Fundamental representation on every orientation-set end, default
/// intertwiners at each vertex.
pub fn default_spin_network(graph: &CiliatedFatGraph, k: usize) -> Result<SpinNetwork, BracketError> {
    let reps: BTreeMap<String, Rep> = graph
        .orientation_set()
        .into_iter()
        .map(|e| (graph.end_name(e).to_string(), Rep::Fundamental))
        .collect();
    let probe_c: Vec<Intertwiner> = (0..graph.vertex_count())
        .map(|v| Intertwiner::zeros(k, graph.valence(v)))
        .collect();
    let probe = SpinNetwork::new(graph.clone(), k, &reps, probe_c)?;
    let c = (0..graph.vertex_count())
        .map(|v| {
            let kinds: Vec<_> = graph.vertex(v).iter().map(|&e| probe.slot_kind(e)).collect();
            default_intertwiner(&kinds, k)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SpinNetwork::new(graph.clone(), k, &reps, c)
}

/// Gauge invariance of the default spin network and exact independence of
/// the orientation-set choice.
pub fn spin_network_suite(graph: &CiliatedFatGraph, name: &str, cfg: &SuiteConfig) -> Result<SuiteReport, BracketError> {
    let net = default_spin_network(graph, cfg.k)?;
    let e1 = graph.orientation_set();
    let flipped: Vec<usize> = e1.iter().map(|&e| graph.partner(e)).collect();
    let mut worst = Worst::default();
    let mut orientation_exact = true;
    let mut max_value: f64 = 0.0;
    for sample in 0..cfg.samples {
        let mut rng = sample_rng(cfg.seed, sample);
        let a = GraphConnection::random_with(graph.clone(), cfg.k, cfg.flavor, &mut rng);
        let base = net.eval(&a)?;
        max_value = max_value.max(base.norm());
        orientation_exact &= net.eval_with_orientation(&a, &flipped)? == base;
        for _ in 0..3 {
            let h = GaugeElement::random_with(graph, cfg.k, cfg.flavor, &mut rng);
            let moved = crate::connection::gauge_act(&h, &a)?;
            worst.push(sample, (net.eval(&moved)? - base).norm());
        }
    }
    let tol = cfg.tol_or(1e-10);
    let mut rep = report(
        "spin-network",
        name,
        cfg,
        tol,
        worst,
        serde_json::json!({"orientation_exact": orientation_exact, "max_abs_value": max_value}),
    );
    rep.pass &= orientation_exact;
    Ok(rep)
}

/// Runs a named suite with default structures: uniform standard r, pinned
/// Sklyanin sign, and a required move for `move-poisson`.
pub fn run_suite(
    suite: &str,
    graph: &CiliatedFatGraph,
    name: &str,
    cfg: &SuiteConfig,
    flipped: &[usize],
    mv: Option<&Move>,
) -> Result<SuiteReport, BracketError> {
    let s = || structure_with_flips(graph, cfg.k, cfg.flavor, flipped);
    match suite {
        "axioms" => axioms(cfg),
        "bivector-oracle" => bivector_oracle(&s()?, name, cfg),
        "jacobi" => jacobi(&s()?, name, cfg),
        "poisson-action" => poisson_action(&s()?, name, cfg, SKLYANIN_SIGN),
        "move-poisson" => match mv {
            Some(mv) => move_poisson(&s()?, mv, name, cfg),
            None => Err(BracketError::Inconsistent("suite move-poisson needs --move".into())),
        },
        "ra-independence" => ra_independence(graph, name, cfg),
        "casimir" => casimir(&s()?, name, cfg),
        "leaf-submanifold" => leaf_submanifold(&s()?, name, cfg),
        "spin-network" => spin_network_suite(graph, name, cfg),
        other => Err(BracketError::Inconsistent(format!("unknown suite `{other}`"))),
    }
}

/// Complex number as `[re, im]`.
pub fn complex_json(z: Complex64) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}
