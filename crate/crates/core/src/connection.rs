//! Graph connections: one invertible matrix per edge-end with `A_{α∨} = A_α⁻¹`,
//! the vertexwise gauge group, monodromies along paths, and the maps of
//! connections induced by graph moves.

use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{ConnectionError, GraphError, LieError};
use crate::lie::{self, Flavor};
use crate::ribbon_graph::CiliatedFatGraph;
use crate::CMat;

/// Deterministic generator for sample `stream` of a seeded run.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_entry<R: Rng>(rng: &mut R, bound: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-bound..bound), rng.gen_range(-bound..bound))
}

/// Random element of `gl(k)` or `sl(k)` with entries of modulus below one.
pub fn random_algebra_element<R: Rng>(rng: &mut R, k: usize, flavor: Flavor) -> CMat {
    let x = CMat::from_fn(k, k, |_, _| random_entry(rng, 0.35));
    match flavor {
        Flavor::GL => x,
        Flavor::SL => lie::traceless_part(&x),
    }
}

/// Random group element `exp(X)` with `X` from [`random_algebra_element`].
pub fn random_group_element<R: Rng>(rng: &mut R, k: usize, flavor: Flavor) -> CMat {
    let x = random_algebra_element(rng, k, flavor);
    lie::group_exp(&x).expect("bounded algebra element has a finite exponential")
}

fn product(k: usize, factors: impl IntoIterator<Item = CMat>) -> CMat {
    factors.into_iter().fold(lie::identity(k), |acc, m| acc * m)
}

/// Matrix-valued edge-end assignment.
#[derive(Debug, Clone)]
pub struct GraphConnection {
    graph: CiliatedFatGraph,
    k: usize,
    flavor: Flavor,
    values: Vec<CMat>,
}

impl PartialEq for GraphConnection {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
            && self.k == other.k
            && self.flavor == other.flavor
            && self.values == other.values
    }
}

#[derive(Serialize, Deserialize)]
struct ConnectionJson {
    graph: serde_json::Value,
    k: usize,
    flavor: Flavor,
    values: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

pub(crate) fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>], k: usize) -> Result<CMat, ConnectionError> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(ConnectionError::Dimension {
            expected: k,
            found: rows.len(),
        });
    }
    Ok(CMat::from_fn(k, k, |i, j| {
        let [a, b] = rows[i][j];
        Complex64::new(a, b)
    }))
}

impl GraphConnection {
    /// Builds a connection from values on the orientation set; the opposite
    /// ends receive the inverses.
    pub fn from_representatives(
        graph: CiliatedFatGraph,
        k: usize,
        flavor: Flavor,
        reps: &BTreeMap<String, CMat>,
    ) -> Result<Self, ConnectionError> {
        if k < 2 {
            return Err(LieError::InvalidDimension(k).into());
        }
        let n = graph.end_count();
        let mut values = vec![CMat::zeros(0, 0); n];
        for e in graph.orientation_set() {
            let name = graph.end_name(e);
            let m = reps
                .get(name)
                .ok_or_else(|| ConnectionError::MissingValue(name.to_string()))?;
            if m.nrows() != k || m.ncols() != k {
                return Err(ConnectionError::Dimension {
                    expected: k,
                    found: m.nrows(),
                });
            }
            values[graph.partner(e)] = lie::try_inverse(m)?;
            values[e] = m.clone();
        }
        let c = GraphConnection {
            graph,
            k,
            flavor,
            values,
        };
        c.check_flavor()?;
        Ok(c)
    }

    fn from_end_values(graph: CiliatedFatGraph, k: usize, flavor: Flavor, values: Vec<CMat>) -> Self {
        GraphConnection {
            graph,
            k,
            flavor,
            values,
        }
    }

    fn check_flavor(&self) -> Result<(), ConnectionError> {
        if self.flavor == Flavor::SL {
            for e in self.graph.orientation_set() {
                let d = self.values[e].clone().determinant();
                if (d - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
                    return Err(ConnectionError::Lie(LieError::Parse(format!(
                        "determinant of `{}` is {d}, not 1",
                        self.graph.end_name(e)
                    ))));
                }
            }
        }
        Ok(())
    }

    pub fn identity(graph: CiliatedFatGraph, k: usize, flavor: Flavor) -> Self {
        let values = vec![lie::identity(k); graph.end_count()];
        Self::from_end_values(graph, k, flavor, values)
    }

    /// Deterministic in `seed`: every orientation representative gets
    /// `exp(X)` for a fresh random algebra element `X`.
    pub fn random(graph: CiliatedFatGraph, k: usize, flavor: Flavor, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(graph, k, flavor, &mut rng)
    }

    pub fn random_with<R: Rng>(graph: CiliatedFatGraph, k: usize, flavor: Flavor, rng: &mut R) -> Self {
        let mut values = vec![CMat::zeros(0, 0); graph.end_count()];
        for e in graph.orientation_set() {
            let x = random_algebra_element(rng, k, flavor);
            values[e] = lie::group_exp(&x).expect("finite");
            values[graph.partner(e)] = lie::group_exp(&(-x)).expect("finite");
        }
        Self::from_end_values(graph, k, flavor, values)
    }

    pub fn graph(&self) -> &CiliatedFatGraph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// `A_α` for any end.
    pub fn value(&self, end: usize) -> &CMat {
        &self.values[end]
    }

    pub fn value_of(&self, name: &str) -> Result<&CMat, ConnectionError> {
        Ok(&self.values[self.graph.end_index(name)?])
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    /// Replaces `A_end` (and its partner by the inverse).
    pub fn with_value(&self, end: usize, m: CMat) -> Result<Self, ConnectionError> {
        let mut c = self.clone();
        c.values[self.graph.partner(end)] = lie::try_inverse(&m)?;
        c.values[end] = m;
        Ok(c)
    }

    /// Right-action curve `A_α ↦ A_α e^{sX}`, `A_{α∨} ↦ e^{−sX} A_{α∨}`.
    pub fn perturbed(&self, end: usize, x: &CMat, s: f64) -> Self {
        let sx = x * Complex64::new(s, 0.0);
        let mut c = self.clone();
        let partner = self.graph.partner(end);
        c.values[end] = &self.values[end] * lie::group_exp(&sx).expect("finite");
        c.values[partner] = lie::group_exp(&(-sx)).expect("finite") * &self.values[partner];
        c
    }

    /// Largest `‖A_α A_{α∨} − Id‖_max`.
    pub fn inverse_residual(&self) -> f64 {
        let id = lie::identity::<f64>(self.k);
        self.graph
            .orientation_set()
            .into_iter()
            .map(|e| lie::max_norm(&(&self.values[e] * &self.values[self.graph.partner(e)] - &id)))
            .fold(0.0, f64::max)
    }

    /// Ordered product along a path of ends, each end being the one the
    /// traversed edge arrives at; consecutive ends must satisfy
    /// `[α_i] = [α_{i+1}∨]`.
    pub fn monodromy(&self, path: &[usize]) -> Result<CMat, ConnectionError> {
        for (i, w) in path.windows(2).enumerate() {
            if self.graph.vertex_of(w[0]) != self.graph.vertex_of(self.graph.partner(w[1])) {
                return Err(ConnectionError::NonConsecutivePath(i + 1));
            }
        }
        Ok(product(self.k, path.iter().map(|&e| self.values[e].clone())))
    }

    pub fn monodromy_by_name(&self, path: &[&str]) -> Result<CMat, ConnectionError> {
        let ends = path
            .iter()
            .map(|n| self.graph.end_index(n))
            .collect::<Result<Vec<_>, _>>()?;
        self.monodromy(&ends)
    }

    /// Path traversing a face cycle `(α₁, …, α_m)` of [`CiliatedFatGraph::face_cycles`]:
    /// the edge through `α_i` is entered at `α_i∨`.
    pub fn face_path(graph: &CiliatedFatGraph, face: &[usize]) -> Vec<usize> {
        face.iter().map(|&a| graph.partner(a)).collect()
    }

    pub fn face_monodromy(&self, face: &[usize]) -> CMat {
        self.monodromy(&Self::face_path(&self.graph, face))
            .expect("face cycles are consecutive paths")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let values = self
            .graph
            .orientation_set()
            .into_iter()
            .map(|e| (self.graph.end_name(e).to_string(), matrix_to_rows(&self.values[e])))
            .collect();
        serde_json::to_value(ConnectionJson {
            graph: self.graph.to_json(),
            k: self.k,
            flavor: self.flavor,
            values,
        })
        .expect("connection serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, ConnectionError> {
        let raw: ConnectionJson =
            serde_json::from_value(value.clone()).map_err(|e| ConnectionError::Parse(e.to_string()))?;
        let graph = CiliatedFatGraph::from_json(&raw.graph)?;
        let reps = raw
            .values
            .iter()
            .map(|(name, rows)| Ok((name.clone(), matrix_from_rows(rows, raw.k)?)))
            .collect::<Result<BTreeMap<_, _>, ConnectionError>>()?;
        Self::from_representatives(graph, raw.k, raw.flavor, &reps)
    }
}

/// One matrix per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    pub matrices: Vec<CMat>,
}

impl GaugeElement {
    pub fn identity(graph: &CiliatedFatGraph, k: usize) -> Self {
        GaugeElement {
            matrices: vec![lie::identity(k); graph.vertex_count()],
        }
    }

    pub fn random_with<R: Rng>(graph: &CiliatedFatGraph, k: usize, flavor: Flavor, rng: &mut R) -> Self {
        GaugeElement {
            matrices: (0..graph.vertex_count())
                .map(|_| random_group_element(rng, k, flavor))
                .collect(),
        }
    }

    /// Composition for which `act(g.then(h)…)`: `gauge_act(&g.compose(&h), A)
    /// = gauge_act(&g, &gauge_act(&h, A))`, i.e. vertexwise `h_n g_n`.
    pub fn compose(&self, inner: &GaugeElement) -> GaugeElement {
        GaugeElement {
            matrices: inner
                .matrices
                .iter()
                .zip(&self.matrices)
                .map(|(h, g)| h * g)
                .collect(),
        }
    }
}

/// `A_α ↦ g_{[α∨]}⁻¹ A_α g_{[α]}`.
pub fn gauge_act(g: &GaugeElement, a: &GraphConnection) -> Result<GraphConnection, ConnectionError> {
    if g.matrices.len() != a.graph.vertex_count() {
        return Err(ConnectionError::GaugeShape);
    }
    if g.matrices.iter().any(|m| m.nrows() != a.k || m.ncols() != a.k) {
        return Err(ConnectionError::Dimension {
            expected: a.k,
            found: g.matrices.iter().map(|m| m.nrows()).find(|&r| r != a.k).unwrap_or(0),
        });
    }
    let inv = g
        .matrices
        .iter()
        .map(lie::try_inverse)
        .collect::<Result<Vec<_>, _>>()?;
    let graph = &a.graph;
    let values = (0..graph.end_count())
        .map(|e| {
            let start = graph.vertex_of(graph.partner(e));
            let stop = graph.vertex_of(e);
            &inv[start] * &a.values[e] * &g.matrices[stop]
        })
        .collect();
    Ok(GraphConnection::from_end_values(graph.clone(), a.k, a.flavor, values))
}

/// A graph move, with edges named by either end and vertices by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    Erase { end: String },
    Contract { end: String, toward: usize },
    Glue { n1: usize, n2: usize },
    AddLoop { vertex: usize, position: usize },
}

/// A move on a graph together with the pullback of edge values: every end of
/// the target graph carries a word in source ends whose ordered product is its
/// new value. Each word is itself a trace-word fragment, so pulled-back trace
/// observables remain polynomial in traces of words.
#[derive(Debug, Clone)]
pub struct MoveMap {
    pub source: CiliatedFatGraph,
    pub target: CiliatedFatGraph,
    pub words: Vec<Vec<usize>>,
    /// Source vertex whose cilium and r-matrix each target vertex inherits;
    /// `None` for glue junctions.
    pub vertex_origin: Vec<Option<usize>>,
}

fn invert_word(source: &CiliatedFatGraph, word: &[usize]) -> Vec<usize> {
    word.iter().rev().map(|&e| source.partner(e)).collect()
}

impl MoveMap {
    /// `self` followed by `next` (which must start where `self` ends).
    fn then(self, next: MoveMap) -> MoveMap {
        let words = next
            .words
            .iter()
            .map(|w| w.iter().flat_map(|&mid| self.words[mid].iter().copied()).collect())
            .collect();
        let vertex_origin = next
            .vertex_origin
            .iter()
            .map(|o| o.and_then(|mid| self.vertex_origin[mid]))
            .collect();
        MoveMap {
            source: self.source,
            target: next.target,
            words,
            vertex_origin,
        }
    }

    /// Target ends carried over by name, plus fresh ends with empty words.
    fn by_name(source: &CiliatedFatGraph, target: CiliatedFatGraph) -> MoveMap {
        let words = (0..target.end_count())
            .map(|e| match source.end_index(target.end_name(e)) {
                Ok(s) => vec![s],
                Err(_) => Vec::new(),
            })
            .collect();
        let vertex_origin = (0..target.vertex_count())
            .map(|v| {
                target
                    .vertex(v)
                    .iter()
                    .find_map(|&e| source.end_index(target.end_name(e)).ok())
                    .map(|s| source.vertex_of(s))
                    .or((v < source.vertex_count()).then_some(v))
            })
            .collect();
        MoveMap {
            source: source.clone(),
            target,
            words,
            vertex_origin,
        }
    }

    pub fn new(source: &CiliatedFatGraph, mv: &Move) -> Result<MoveMap, GraphError> {
        match mv {
            Move::Erase { end } => {
                let e = source.end_index(end)?;
                Ok(Self::by_name(source, source.erase_edge(e)?))
            }
            Move::AddLoop { vertex, position } => {
                let (g, _) = source.add_loop(*vertex, *position)?;
                Ok(Self::by_name(source, g))
            }
            Move::Contract { end, toward } => {
                let e = source.end_index(end)?;
                Self::contract(source, e, *toward)
            }
            Move::Glue { n1, n2 } => {
                let (staged, from_n1) = source.glue_insert_junctions(*n1, *n2)?;
                let names: Vec<String> = from_n1.iter().map(|&e| staged.end_name(e).to_string()).collect();
                let junctions = from_n1.len();
                let mut map = Self::by_name(source, staged);
                let first_junction = map.target.vertex_count() - junctions;
                for o in &mut map.vertex_origin[first_junction..] {
                    *o = None;
                }
                for name in names {
                    let g = &map.target;
                    let e = g.end_index(&name)?;
                    let far = g.partner(e);
                    if g.vertex_of(far) == g.vertex_of(e) {
                        return Err(GraphError::VertexlessCycle(name));
                    }
                    let step = Self::contract(g, e, g.vertex_of(far))?;
                    map = map.then(step);
                }
                Ok(map)
            }
        }
    }

    /// Gauge-fixes `A_α = Id` with `g = A_α` at the absorbed vertex `[α∨]`,
    /// then merges: `A_β ↦ g_{[β∨]}⁻¹ A_β g_{[β]}`.
    fn contract(source: &CiliatedFatGraph, end: usize, toward: usize) -> Result<MoveMap, GraphError> {
        let target = source.contract_edge(end, toward)?;
        let alpha = source.oriented_toward(end, toward)?;
        let alpha_v = source.partner(alpha);
        let absorbed = source.vertex_of(alpha_v);
        let words = (0..target.end_count())
            .map(|t| {
                let b = source
                    .end_index(target.end_name(t))
                    .expect("contraction keeps end names");
                let mut w = Vec::with_capacity(3);
                if source.vertex_of(source.partner(b)) == absorbed {
                    w.push(alpha_v);
                }
                w.push(b);
                if source.vertex_of(b) == absorbed {
                    w.push(alpha);
                }
                w
            })
            .collect();
        let vertex_origin = (0..source.vertex_count())
            .filter(|&v| v != absorbed)
            .map(Some)
            .collect();
        Ok(MoveMap {
            source: source.clone(),
            target,
            words,
            vertex_origin,
        })
    }

    /// Pulls a connection on the source graph forward to the target graph.
    pub fn apply(&self, a: &GraphConnection) -> Result<GraphConnection, ConnectionError> {
        if a.graph != self.source {
            return Err(ConnectionError::Graph(GraphError::Parse(
                "connection graph does not match the move's source".into(),
            )));
        }
        let values = self
            .words
            .iter()
            .map(|w| product(a.k, w.iter().map(|&e| a.values[e].clone())))
            .collect();
        Ok(GraphConnection::from_end_values(self.target.clone(), a.k, a.flavor, values))
    }

    /// Word whose product is the inverse of target end `t`'s value.
    pub fn inverse_word(&self, t: usize) -> Vec<usize> {
        invert_word(&self.source, &self.words[t])
    }
}

/// Connection-level map of a move.
pub fn move_map(mv: &Move, a: &GraphConnection) -> Result<GraphConnection, ConnectionError> {
    MoveMap::new(&a.graph, mv)?.apply(a)
}

/// Disjoint union of two connections with the same `k` and flavor.
pub fn disjoint_union(a: &GraphConnection, b: &GraphConnection) -> Result<GraphConnection, ConnectionError> {
    if a.k != b.k {
        return Err(ConnectionError::Dimension {
            expected: a.k,
            found: b.k,
        });
    }
    let graph = a.graph.disjoint_union(&b.graph);
    let values = a.values.iter().chain(&b.values).cloned().collect();
    Ok(GraphConnection::from_end_values(graph, a.k, a.flavor, values))
}

/// Characteristic polynomial coefficients `det(z − M) = Σ c_i z^i`, highest first,
/// via Faddeev–LeVerrier.
pub fn char_poly(m: &CMat) -> Vec<Complex64> {
    let k = m.nrows();
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut aux = CMat::zeros(k, k);
    let id = lie::identity::<f64>(k);
    for i in 1..=k {
        aux = m * &aux + &id * *coeffs.last().unwrap();
        let c = -(m * &aux).trace() / Complex64::new(i as f64, 0.0);
        coeffs.push(c);
    }
    coeffs
}

pub fn char_poly_distance(a: &CMat, b: &CMat) -> f64 {
    char_poly(a)
        .iter()
        .zip(char_poly(b))
        .map(|(x, y)| ComplexField::modulus(x - y))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ribbon_graph::{named_graph, NamedGraph};

    fn named(n: NamedGraph) -> CiliatedFatGraph {
        named_graph(n).unwrap()
    }

    #[test]
    fn random_is_deterministic_and_unimodular() {
        let g = named(NamedGraph::TorusOneHole);
        let a = GraphConnection::random(g.clone(), 3, Flavor::SL, 7);
        let b = GraphConnection::random(g.clone(), 3, Flavor::SL, 7);
        assert_eq!(a, b);
        for e in 0..g.end_count() {
            assert!((a.value(e).clone().determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
        assert!(a.inverse_residual() < 1e-12);
        assert!(a.value(0).iter().all(|z| z.norm().is_finite()));
    }

    #[test]
    fn identity_connection_has_trivial_monodromy() {
        let g = named(NamedGraph::Polygon(3));
        let a = GraphConnection::identity(g.clone(), 2, Flavor::SL);
        for f in g.face_cycles() {
            assert!(lie::max_norm(&(a.face_monodromy(&f) - lie::identity::<f64>(2))) < 1e-15);
        }
        assert_eq!(a.monodromy(&[]).unwrap(), lie::identity::<f64>(2));
    }

    #[test]
    fn gauge_action_composes() {
        let g = named(NamedGraph::Double);
        let mut rng = sample_rng(3, 0);
        let a = GraphConnection::random_with(g.clone(), 3, Flavor::GL, &mut rng);
        let x = GaugeElement::random_with(&g, 3, Flavor::GL, &mut rng);
        let y = GaugeElement::random_with(&g, 3, Flavor::GL, &mut rng);
        let lhs = gauge_act(&x.compose(&y), &a).unwrap();
        let rhs = gauge_act(&x, &gauge_act(&y, &a).unwrap()).unwrap();
        for e in 0..g.end_count() {
            assert!(lie::max_norm(&(lhs.value(e) - rhs.value(e))) < 1e-11);
        }
        let same = gauge_act(&GaugeElement::identity(&g, 3), &a).unwrap();
        assert!(same.values().iter().zip(a.values()).all(|(p, q)| lie::max_norm(&(p - q)) < 1e-15));
    }

    #[test]
    fn loop_edge_is_conjugated() {
        let g = named(NamedGraph::Loop);
        let mut rng = sample_rng(5, 0);
        let a = GraphConnection::random_with(g.clone(), 2, Flavor::SL, &mut rng);
        let h = GaugeElement::random_with(&g, 2, Flavor::SL, &mut rng);
        let b = gauge_act(&h, &a).unwrap();
        let hn = &h.matrices[0];
        let expected = lie::try_inverse(hn).unwrap() * a.value(0) * hn;
        assert!(lie::max_norm(&(b.value(0) - expected)) < 1e-12);
    }

    #[test]
    fn torus_commutator_path() {
        let g = named(NamedGraph::TorusOneHole);
        let a = GraphConnection::random(g.clone(), 2, Flavor::SL, 11);
        let (ma, mb) = (a.value_of("a").unwrap().clone(), a.value_of("b").unwrap().clone());
        let mu = &ma * &mb * lie::try_inverse(&ma).unwrap() * lie::try_inverse(&mb).unwrap();
        let m = a.monodromy_by_name(&["a", "b", "a_v", "b_v"]).unwrap();
        assert!(lie::max_norm(&(m - &mu)) < 1e-12);
        let face = &g.face_cycles()[0];
        let fm = a.face_monodromy(face);
        assert!(char_poly_distance(&fm, &lie::try_inverse(&mu).unwrap()) < 1e-10);
    }

    #[test]
    fn monodromy_reversal_and_gauge_covariance() {
        let g = named(NamedGraph::Polygon(3));
        let mut rng = sample_rng(9, 1);
        let a = GraphConnection::random_with(g.clone(), 3, Flavor::GL, &mut rng);
        let faces = g.face_cycles();
        let path = GraphConnection::face_path(&g, &faces[0]);
        let rev: Vec<usize> = path.iter().rev().map(|&e| g.partner(e)).collect();
        let m = a.monodromy(&path).unwrap();
        let r = a.monodromy(&rev).unwrap();
        assert!(lie::max_norm(&(&m * &r - lie::identity::<f64>(3))) < 1e-11);
        let h = GaugeElement::random_with(&g, 3, Flavor::GL, &mut rng);
        let b = gauge_act(&h, &a).unwrap();
        for f in &faces {
            assert!(char_poly_distance(&a.face_monodromy(f), &b.face_monodromy(f)) < 1e-10);
        }
    }

    #[test]
    fn non_consecutive_path_rejected() {
        let g = named(NamedGraph::Polygon(3));
        let a = GraphConnection::identity(g.clone(), 2, Flavor::SL);
        let e0 = g.end_index("e0").unwrap();
        let e0v = g.end_index("e0_v").unwrap();
        assert!(matches!(a.monodromy(&[e0, e0v, e0v]), Err(ConnectionError::NonConsecutivePath(_))));
    }

    #[test]
    fn glue_single_edges_is_product() {
        let s = named(NamedGraph::SingleEdge);
        let a1 = GraphConnection::random(s.clone(), 2, Flavor::SL, 1);
        let a2 = GraphConnection::random(s.clone(), 2, Flavor::SL, 2);
        let u = disjoint_union(&a1, &a2).unwrap();
        let glued = move_map(&Move::Glue { n1: 0, n2: 3 }, &u).unwrap();
        let (x, y) = (a1.value_of("a").unwrap(), a2.value_of("a").unwrap());
        let got = glued.value_of("r.a").unwrap();
        assert!(lie::max_norm(&(got - x * y)) < 1e-12);
        assert!(glued.inverse_residual() < 1e-11);
    }

    #[test]
    fn contract_double_gives_loop_value() {
        let d = named(NamedGraph::Double);
        let a = GraphConnection::random(d.clone(), 2, Flavor::SL, 4);
        let c = move_map(&Move::Contract { end: "e1".into(), toward: 0 }, &a).unwrap();
        let (x1, x2) = (a.value_of("e1").unwrap(), a.value_of("e2").unwrap());
        let expected = lie::try_inverse(x1).unwrap() * x2;
        assert!(lie::max_norm(&(c.value_of("e2").unwrap() - expected)) < 1e-12);
        assert!(c.inverse_residual() < 1e-11);
    }

    #[test]
    fn erase_and_add_loop_maps() {
        let t = named(NamedGraph::TorusOneHole);
        let a = GraphConnection::random(t.clone(), 2, Flavor::SL, 6);
        let e = move_map(&Move::Erase { end: "b".into() }, &a).unwrap();
        assert_eq!(e.value_of("a").unwrap(), a.value_of("a").unwrap());
        let l = move_map(&Move::AddLoop { vertex: 0, position: 1 }, &a).unwrap();
        assert_eq!(l.value_of("e0").unwrap(), &lie::identity::<f64>(2));
        assert_eq!(l.value_of("b").unwrap(), a.value_of("b").unwrap());
    }

    #[test]
    fn move_commutes_with_untouched_gauge() {
        let d = named(NamedGraph::Polygon(3));
        let mut rng = sample_rng(12, 0);
        let a = GraphConnection::random_with(d.clone(), 2, Flavor::GL, &mut rng);
        let mv = Move::Contract { end: "e0".into(), toward: 0 };
        let map = MoveMap::new(&d, &mv).unwrap();
        // gauge only at vertex 2, which the contraction of e0 does not touch
        let mut h = GaugeElement::identity(&d, 2);
        h.matrices[2] = random_group_element(&mut rng, 2, Flavor::GL);
        let lhs = map.apply(&gauge_act(&h, &a).unwrap()).unwrap();
        let mut h2 = GaugeElement::identity(&map.target, 2);
        let v2 = map.target.vertex_of(map.target.end_index("e2").unwrap());
        h2.matrices[v2] = h.matrices[2].clone();
        let rhs = gauge_act(&h2, &map.apply(&a).unwrap()).unwrap();
        for e in 0..map.target.end_count() {
            assert!(lie::max_norm(&(lhs.value(e) - rhs.value(e))) < 1e-11);
        }
    }

    #[test]
    fn json_round_trip() {
        let g = named(NamedGraph::TorusOneHole);
        let a = GraphConnection::random(g, 2, Flavor::SL, 21);
        let b = GraphConnection::from_json(&a.to_json()).unwrap();
        for e in a.graph().orientation_set() {
            assert_eq!(a.value(e), b.value(e));
        }
    }

    #[test]
    fn char_poly_of_identity() {
        let c = char_poly(&lie::identity::<f64>(2));
        let expected = [1.0, -2.0, 1.0];
        for (z, e) in c.iter().zip(expected) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-14);
        }
    }
}
