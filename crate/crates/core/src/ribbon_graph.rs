//! Ciliated fat graphs: a finite set of edge-ends, a fixed-point-free
//! involution pairing the two ends of each edge, and an ordered partition of
//! the ends into vertices. The list order at a vertex is the linear order
//! fixed by its cilium; closing it up gives the cyclic (fat) order.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{GraphError, GraphViolation};

/// Serialized form; vertex arrays are in ciliation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub ends: Vec<String>,
    pub involution: BTreeMap<String, String>,
    pub vertices: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct CiliatedFatGraph {
    ends: Vec<String>,
    partner: Vec<usize>,
    vertices: Vec<Vec<usize>>,
    vertex_of: Vec<usize>,
    position: Vec<usize>,
    index: HashMap<String, usize>,
    fresh: u64,
}

impl PartialEq for CiliatedFatGraph {
    fn eq(&self, other: &Self) -> bool {
        self.to_spec() == other.to_spec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceData {
    #[serde(rename = "V")]
    pub vertex_count: usize,
    #[serde(rename = "E")]
    pub edge_count: usize,
    #[serde(rename = "b")]
    pub boundary_count: usize,
    #[serde(rename = "chi")]
    pub euler_characteristic: i64,
    pub genus: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "m")]
pub enum NamedGraph {
    SingleEdge,
    Double,
    Loop,
    TorusOneHole,
    Polyuble(usize),
    Polygon(usize),
}

impl NamedGraph {
    /// The six gallery entries (polyuble and polygon at size 3).
    pub fn gallery() -> [NamedGraph; 6] {
        [
            NamedGraph::SingleEdge,
            NamedGraph::Double,
            NamedGraph::Loop,
            NamedGraph::TorusOneHole,
            NamedGraph::Polyuble(3),
            NamedGraph::Polygon(3),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            NamedGraph::SingleEdge => "single_edge".into(),
            NamedGraph::Double => "double".into(),
            NamedGraph::Loop => "loop".into(),
            NamedGraph::TorusOneHole => "torus_one_hole".into(),
            NamedGraph::Polyuble(m) => format!("polyuble({m})"),
            NamedGraph::Polygon(m) => format!("polygon({m})"),
        }
    }
}

impl std::str::FromStr for NamedGraph {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let sized = |prefix: &str| -> Option<Result<usize, GraphError>> {
            let rest = s.strip_prefix(prefix)?;
            let inner = rest.trim_start_matches(['(', ':', '_']).trim_end_matches(')');
            Some(
                inner
                    .parse::<usize>()
                    .map_err(|_| GraphError::Parse(format!("bad size in `{s}`"))),
            )
        };
        match s {
            "single_edge" => Ok(NamedGraph::SingleEdge),
            "double" => Ok(NamedGraph::Double),
            "loop" => Ok(NamedGraph::Loop),
            "torus" | "torus_one_hole" => Ok(NamedGraph::TorusOneHole),
            _ => {
                if let Some(m) = sized("polyuble") {
                    return Ok(NamedGraph::Polyuble(m?));
                }
                if let Some(m) = sized("polygon") {
                    return Ok(NamedGraph::Polygon(m?));
                }
                Err(GraphError::Parse(format!("unknown named graph `{s}`")))
            }
        }
    }
}

/// Checks every invariant of a raw graph description, reporting the first
/// violation together with the offending end.
pub fn validate(spec: &GraphSpec) -> Result<(), GraphViolation> {
    let mut seen = HashSet::new();
    for e in &spec.ends {
        if !seen.insert(e.as_str()) {
            return Err(GraphViolation::DuplicateEnd(e.clone()));
        }
    }
    for e in &spec.ends {
        let p = spec
            .involution
            .get(e)
            .ok_or_else(|| GraphViolation::MissingPartner(e.clone()))?;
        if p == e {
            return Err(GraphViolation::FixedPoint(e.clone()));
        }
        if !seen.contains(p.as_str()) {
            return Err(GraphViolation::MissingPartner(e.clone()));
        }
        if spec.involution.get(p) != Some(e) {
            return Err(GraphViolation::NotInvolutive(e.clone()));
        }
    }
    for key in spec.involution.keys() {
        if !seen.contains(key.as_str()) {
            return Err(GraphViolation::Partition(key.clone()));
        }
    }
    let mut placed = HashSet::new();
    for v in &spec.vertices {
        for e in v {
            if !seen.contains(e.as_str()) || !placed.insert(e.as_str()) {
                return Err(GraphViolation::Partition(e.clone()));
            }
        }
    }
    if let Some(e) = spec.ends.iter().find(|e| !placed.contains(e.as_str())) {
        return Err(GraphViolation::Partition(e.clone()));
    }
    Ok(())
}

impl CiliatedFatGraph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphViolation> {
        validate(spec)?;
        let index: HashMap<String, usize> = spec
            .ends
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let partner = spec.ends.iter().map(|e| index[&spec.involution[e]]).collect();
        let vertices = spec
            .vertices
            .iter()
            .map(|v| v.iter().map(|e| index[e]).collect())
            .collect();
        Ok(Self::assemble(spec.ends.clone(), partner, vertices, 0))
    }

    fn assemble(ends: Vec<String>, partner: Vec<usize>, vertices: Vec<Vec<usize>>, fresh: u64) -> Self {
        let n = ends.len();
        let mut vertex_of = vec![usize::MAX; n];
        let mut position = vec![usize::MAX; n];
        for (vi, v) in vertices.iter().enumerate() {
            for (pi, &e) in v.iter().enumerate() {
                vertex_of[e] = vi;
                position[e] = pi;
            }
        }
        let index = ends.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        CiliatedFatGraph {
            ends,
            partner,
            vertices,
            vertex_of,
            position,
            index,
            fresh,
        }
    }

    /// Builds a graph from end names; `vertices` lists ends in ciliation order.
    pub fn from_parts(edges: &[(&str, &str)], vertices: &[&[&str]]) -> Result<Self, GraphViolation> {
        let mut ends = Vec::new();
        let mut involution = BTreeMap::new();
        for (a, b) in edges {
            ends.push(a.to_string());
            ends.push(b.to_string());
            involution.insert(a.to_string(), b.to_string());
            involution.insert(b.to_string(), a.to_string());
        }
        let vertices = vertices
            .iter()
            .map(|v| v.iter().map(|s| s.to_string()).collect())
            .collect();
        Self::from_spec(&GraphSpec {
            ends,
            involution,
            vertices,
        })
    }

    pub fn empty() -> Self {
        Self::assemble(Vec::new(), Vec::new(), Vec::new(), 0)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            ends: self.ends.clone(),
            involution: (0..self.ends.len())
                .map(|i| (self.ends[i].clone(), self.ends[self.partner[i]].clone()))
                .collect(),
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|&e| self.ends[e].clone()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_spec()).expect("graph spec serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, GraphError> {
        let spec: GraphSpec =
            serde_json::from_value(value.clone()).map_err(|e| GraphError::Parse(e.to_string()))?;
        Ok(Self::from_spec(&spec)?)
    }

    pub fn end_count(&self) -> usize {
        self.ends.len()
    }

    pub fn edge_count(&self) -> usize {
        self.ends.len() / 2
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn end_name(&self, end: usize) -> &str {
        &self.ends[end]
    }

    pub fn end_names(&self) -> &[String] {
        &self.ends
    }

    pub fn end_index(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownEnd(name.to_string()))
    }

    /// `α ↦ α∨`.
    pub fn partner(&self, end: usize) -> usize {
        self.partner[end]
    }

    /// `[α]`.
    pub fn vertex_of(&self, end: usize) -> usize {
        self.vertex_of[end]
    }

    /// Position of an end in its vertex's linear order.
    pub fn position(&self, end: usize) -> usize {
        self.position[end]
    }

    pub fn vertex(&self, v: usize) -> &[usize] {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec<usize>] {
        &self.vertices
    }

    pub fn valence(&self, v: usize) -> usize {
        self.vertices[v].len()
    }

    pub fn is_loop(&self, end: usize) -> bool {
        self.vertex_of[end] == self.vertex_of[self.partner[end]]
    }

    /// Orientation representative of each edge: the lexicographically smaller
    /// end identifier. Returned in the order of `ends`.
    pub fn orientation_set(&self) -> Vec<usize> {
        (0..self.ends.len())
            .filter(|&e| self.ends[e] < self.ends[self.partner[e]])
            .collect()
    }

    pub fn is_representative(&self, end: usize) -> bool {
        self.ends[end] < self.ends[self.partner[end]]
    }

    /// Successor of an end in the cyclic order at its vertex.
    pub fn next_cyclic(&self, end: usize) -> usize {
        let v = &self.vertices[self.vertex_of[end]];
        v[(self.position[end] + 1) % v.len()]
    }

    /// Face cycles: orbits of `α ↦ next_cyclic(α∨)`, each started at its
    /// earliest end in storage order.
    pub fn face_cycles(&self) -> Vec<Vec<usize>> {
        let n = self.ends.len();
        let mut seen = vec![false; n];
        let mut faces = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut face = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                face.push(cur);
                cur = self.next_cyclic(self.partner[cur]);
            }
            faces.push(face);
        }
        faces
    }

    pub fn faces(&self) -> Vec<Vec<String>> {
        self.face_cycles()
            .into_iter()
            .map(|f| f.into_iter().map(|e| self.ends[e].clone()).collect())
            .collect()
    }

    /// A face passes the cilium of a vertex when it turns the corner from the
    /// last end of that vertex's linear order to the first one.
    pub fn face_has_cilium(&self, face: &[usize]) -> bool {
        face.iter().any(|&a| {
            let arrive = self.partner[a];
            self.position[arrive] + 1 == self.valence(self.vertex_of[arrive])
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in 0..self.ends.len() {
            let (a, b) = (
                find(&mut parent, self.vertex_of[e]),
                find(&mut parent, self.vertex_of[self.partner[e]]),
            );
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..self.vertices.len()).all(|v| find(&mut parent, v) == root)
    }

    /// Topology of the thickened graph.
    pub fn surface(&self) -> Result<SurfaceData, GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let v = self.vertex_count();
        let e = self.edge_count();
        let b = self.face_cycles().len();
        let chi = v as i64 - e as i64;
        let twice_genus = 2 - b as i64 - chi;
        if twice_genus < 0 || twice_genus % 2 != 0 {
            return Err(GraphError::NonIntegerGenus { v, e, b });
        }
        Ok(SurfaceData {
            vertex_count: v,
            edge_count: e,
            boundary_count: b,
            euler_characteristic: chi,
            genus: (twice_genus / 2) as usize,
        })
    }

    fn fresh_name(&mut self) -> String {
        loop {
            let name = format!("e{}", self.fresh);
            self.fresh += 1;
            if !self.index.contains_key(&name) && !self.index.contains_key(&format!("{name}_v")) {
                return name;
            }
        }
    }

    /// Rebuilds the graph from new vertex lists (end indices of `self`),
    /// keeping only the ends listed and renumbering them in storage order.
    fn rebuild(&self, vertices: Vec<Vec<usize>>, drop_empty: bool) -> Self {
        let mut keep: Vec<usize> = vertices.iter().flatten().copied().collect();
        keep.sort_unstable();
        let mut renum = vec![usize::MAX; self.ends.len()];
        for (new, &old) in keep.iter().enumerate() {
            renum[old] = new;
        }
        let ends = keep.iter().map(|&e| self.ends[e].clone()).collect();
        let partner = keep.iter().map(|&e| renum[self.partner[e]]).collect();
        let vertices = vertices
            .into_iter()
            .filter(|v| !drop_empty || !v.is_empty())
            .map(|v| v.into_iter().map(|e| renum[e]).collect())
            .collect();
        Self::assemble(ends, partner, vertices, self.fresh)
    }

    /// Removes both ends of an edge; vertices left empty are dropped.
    pub fn erase_edge(&self, end: usize) -> Result<Self, GraphError> {
        if end >= self.ends.len() {
            return Err(GraphError::UnknownEnd(end.to_string()));
        }
        let gone = [end, self.partner[end]];
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().copied().filter(|e| !gone.contains(e)).collect())
            .collect();
        Ok(self.rebuild(vertices, true))
    }

    /// Contracts the edge through `end` toward vertex `toward`, which must be
    /// one of its two distinct endpoints. With `α` the end at `toward`, the
    /// survivor's linear order has `α` replaced by the remaining ends of `[α∨]`
    /// read cyclically from just after `α∨`; the cilium of `[α∨]` is dropped.
    pub fn contract_edge(&self, end: usize, toward: usize) -> Result<Self, GraphError> {
        if end >= self.ends.len() {
            return Err(GraphError::UnknownEnd(end.to_string()));
        }
        if toward >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(toward));
        }
        let alpha = self.oriented_toward(end, toward)?;
        let alpha_v = self.partner[alpha];
        let absorbed = self.vertex_of[alpha_v];
        let spliced = self.cyclic_after(alpha_v);
        let mut vertices = Vec::with_capacity(self.vertices.len() - 1);
        for (vi, v) in self.vertices.iter().enumerate() {
            if vi == absorbed {
                continue;
            }
            if vi == toward {
                let mut order = Vec::with_capacity(v.len() + spliced.len());
                for &e in v {
                    if e == alpha {
                        order.extend(&spliced);
                    } else {
                        order.push(e);
                    }
                }
                vertices.push(order);
            } else {
                vertices.push(v.clone());
            }
        }
        Ok(self.rebuild(vertices, false))
    }

    /// Given an edge (by either end) and one of its endpoints, returns the end
    /// of that edge sitting at the endpoint; errors on loops and non-endpoints.
    pub fn oriented_toward(&self, end: usize, toward: usize) -> Result<usize, GraphError> {
        let other = self.partner[end];
        if self.vertex_of[end] == self.vertex_of[other] {
            return Err(GraphError::LoopEdge(self.ends[end].clone()));
        }
        if self.vertex_of[end] == toward {
            Ok(end)
        } else if self.vertex_of[other] == toward {
            Ok(other)
        } else {
            Err(GraphError::NotAnEndpoint {
                end: self.ends[end].clone(),
                vertex: toward,
            })
        }
    }

    /// Remaining ends of `[e]` in cyclic order starting just after `e`.
    pub fn cyclic_after(&self, e: usize) -> Vec<usize> {
        let v = &self.vertices[self.vertex_of[e]];
        let p = self.position[e];
        (1..v.len()).map(|i| v[(p + i) % v.len()]).collect()
    }

    /// First stage of gluing: deletes `n1`, `n2` and joins the `k`-th end of
    /// `n1` with the `(N+1−k)`-th end of `n2` at a fresh 2-valent vertex whose
    /// linear order is (end from `n1`, end from `n2`). Returns the new graph and
    /// the ends coming from `n1`, in junction order.
    pub fn glue_insert_junctions(&self, n1: usize, n2: usize) -> Result<(Self, Vec<usize>), GraphError> {
        if n1 >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(n1));
        }
        if n2 >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(n2));
        }
        if n1 == n2 {
            return Err(GraphError::SameVertex);
        }
        let (a, b) = (&self.vertices[n1], &self.vertices[n2]);
        if a.len() != b.len() {
            return Err(GraphError::ValenceMismatch(a.len(), b.len()));
        }
        let n = a.len();
        let mut vertices: Vec<Vec<usize>> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(vi, _)| *vi != n1 && *vi != n2)
            .map(|(_, v)| v.clone())
            .collect();
        let mut from_n1 = Vec::with_capacity(n);
        for k in 0..n {
            vertices.push(vec![a[k], b[n - 1 - k]]);
            from_n1.push(a[k]);
        }
        let g = self.rebuild(vertices, false);
        let from_n1 = from_n1
            .into_iter()
            .map(|e| g.index[&self.ends[e]])
            .collect();
        Ok((g, from_n1))
    }

    /// Glues `n1` to `n2`. Each junction vertex is absorbed by contracting the
    /// edge coming from `n1` toward its far endpoint, which splices the two
    /// liberated edges into one.
    pub fn glue_vertices(&self, n1: usize, n2: usize) -> Result<Self, GraphError> {
        let (mut g, from_n1) = self.glue_insert_junctions(n1, n2)?;
        let names: Vec<String> = from_n1.iter().map(|&e| g.ends[e].clone()).collect();
        for name in names {
            let e = g.end_index(&name)?;
            let far = g.partner[e];
            if g.vertex_of[far] == g.vertex_of[e] {
                return Err(GraphError::VertexlessCycle(name));
            }
            g = g.contract_edge(e, g.vertex_of[far])?;
        }
        Ok(g)
    }

    /// Inserts a new loop `(α, α∨)` as consecutive ends at `position`.
    /// Returns the graph and the new end `α`.
    pub fn add_loop(&self, vertex: usize, position: usize) -> Result<(Self, usize), GraphError> {
        if vertex >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(vertex));
        }
        let valence = self.vertices[vertex].len();
        if position > valence {
            return Err(GraphError::BadPosition { position, valence });
        }
        let mut g = self.clone();
        let name = g.fresh_name();
        let (a, av) = (g.ends.len(), g.ends.len() + 1);
        g.ends.push(name.clone());
        g.ends.push(format!("{name}_v"));
        g.partner.push(av);
        g.partner.push(a);
        g.vertices[vertex].splice(position..position, [a, av]);
        let g = Self::assemble(g.ends, g.partner, g.vertices, g.fresh);
        Ok((g, a))
    }

    /// Adds an isolated vertex with no ends, used as a seed for `add_loop`.
    pub fn with_isolated_vertex(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.push(Vec::new());
        let mut g = Self::assemble(self.ends.clone(), self.partner.clone(), Vec::new(), self.fresh);
        g.vertices = vertices;
        g
    }

    /// Disjoint union; ends of `other` whose names collide are prefixed with `r.`
    /// (repeatedly, until unique). Vertices of `other` follow those of `self`.
    pub fn disjoint_union(&self, other: &Self) -> Self {
        let mut ends = self.ends.clone();
        let mut taken: HashSet<String> = ends.iter().cloned().collect();
        let offset = ends.len();
        for e in &other.ends {
            let mut name = e.clone();
            while taken.contains(&name) {
                name = format!("r.{name}");
            }
            taken.insert(name.clone());
            ends.push(name);
        }
        let partner = self
            .partner
            .iter()
            .copied()
            .chain(other.partner.iter().map(|p| p + offset))
            .collect();
        let vertices = self
            .vertices
            .iter()
            .cloned()
            .chain(other.vertices.iter().map(|v| v.iter().map(|e| e + offset).collect()))
            .collect();
        Self::assemble(ends, partner, vertices, self.fresh.max(other.fresh))
    }
}

/// The distinguished example graphs with fixed ciliations:
/// - `single_edge`: `[a] [a_v]`
/// - `loop`: `[a, a_v]`
/// - `torus_one_hole`: `[a, b, a_v, b_v]`
/// - `polyuble(m)`: `[e1 … em] [em_v … e1_v]` (opposite orders); `double` is `polyuble(2)`
/// - `polygon(m)`: vertex `i` is `[e{i}, e{i−1}_v]`, edge `e{i}` runs from vertex `i` to `i+1`
pub fn named_graph(name: NamedGraph) -> Result<CiliatedFatGraph, GraphError> {
    let g = match name {
        NamedGraph::SingleEdge => CiliatedFatGraph::from_parts(&[("a", "a_v")], &[&["a"], &["a_v"]])?,
        NamedGraph::Loop => CiliatedFatGraph::from_parts(&[("a", "a_v")], &[&["a", "a_v"]])?,
        NamedGraph::TorusOneHole => CiliatedFatGraph::from_parts(
            &[("a", "a_v"), ("b", "b_v")],
            &[&["a", "b", "a_v", "b_v"]],
        )?,
        NamedGraph::Double => named_graph(NamedGraph::Polyuble(2))?,
        NamedGraph::Polyuble(m) => {
            if m == 0 {
                return Err(GraphError::BadSize);
            }
            let mut spec = GraphSpec {
                ends: Vec::new(),
                involution: BTreeMap::new(),
                vertices: vec![Vec::new(), Vec::new()],
            };
            for i in 1..=m {
                let (a, b) = (format!("e{i}"), format!("e{i}_v"));
                spec.ends.push(a.clone());
                spec.ends.push(b.clone());
                spec.involution.insert(a.clone(), b.clone());
                spec.involution.insert(b.clone(), a.clone());
                spec.vertices[0].push(a);
                spec.vertices[1].insert(0, b);
            }
            CiliatedFatGraph::from_spec(&spec)?
        }
        NamedGraph::Polygon(m) => {
            if m == 0 {
                return Err(GraphError::BadSize);
            }
            let mut spec = GraphSpec {
                ends: Vec::new(),
                involution: BTreeMap::new(),
                vertices: vec![Vec::new(); m],
            };
            for i in 0..m {
                let (a, b) = (format!("e{i}"), format!("e{i}_v"));
                spec.ends.push(a.clone());
                spec.ends.push(b.clone());
                spec.involution.insert(a.clone(), b.clone());
                spec.involution.insert(b.clone(), a.clone());
            }
            for i in 0..m {
                spec.vertices[i].push(format!("e{i}"));
                spec.vertices[i].push(format!("e{}_v", (i + m - 1) % m));
            }
            CiliatedFatGraph::from_spec(&spec)?
        }
    };
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(edges: &[(&str, &str)], vertices: &[&[&str]]) -> GraphSpec {
        CiliatedFatGraph::from_parts(edges, vertices).unwrap().to_spec()
    }

    #[test]
    fn validate_accepts_one_loop() {
        assert_eq!(validate(&spec(&[("a", "a_v")], &[&["a", "a_v"]])), Ok(()));
    }

    #[test]
    fn validate_reports_fixed_point() {
        let mut s = spec(&[("a", "a_v")], &[&["a", "a_v"]]);
        s.involution.insert("a".into(), "a".into());
        assert_eq!(validate(&s), Err(GraphViolation::FixedPoint("a".into())));
    }

    #[test]
    fn validate_reports_partition_violation() {
        let mut s = spec(&[("a", "a_v")], &[&["a"], &["a_v"]]);
        s.vertices[1].push("a".into());
        assert_eq!(validate(&s), Err(GraphViolation::Partition("a".into())));
        let mut s = spec(&[("a", "a_v")], &[&["a"], &["a_v"]]);
        s.vertices[1].clear();
        assert_eq!(validate(&s), Err(GraphViolation::Partition("a_v".into())));
    }

    #[test]
    fn torus_has_one_commutator_face() {
        let g = named_graph(NamedGraph::TorusOneHole).unwrap();
        let faces = g.faces();
        assert_eq!(faces.len(), 1);
        assert_eq!(faces[0], vec!["a", "b_v", "a_v", "b"]);
        let s = g.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count, s.boundary_count, s.euler_characteristic, s.genus), (1, 2, 1, -1, 1));
    }

    #[test]
    fn small_graph_faces() {
        let single = named_graph(NamedGraph::SingleEdge).unwrap();
        assert_eq!(single.faces(), vec![vec!["a", "a_v"]]);
        let s = single.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count, s.boundary_count, s.genus), (2, 1, 1, 0));

        let double = named_graph(NamedGraph::Double).unwrap();
        assert_eq!(double.faces().len(), 2);

        let lp = named_graph(NamedGraph::Loop).unwrap();
        let s = lp.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count, s.boundary_count, s.euler_characteristic, s.genus), (1, 1, 2, 0, 0));
    }

    #[test]
    fn polygon_three_is_an_annulus() {
        // A cycle thickens to an annulus: V=E=3, two boundary circles.
        let g = named_graph(NamedGraph::Polygon(3)).unwrap();
        let s = g.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count, s.boundary_count, s.genus), (3, 3, 2, 0));
    }

    #[test]
    fn polyuble_two_is_double() {
        assert_eq!(
            named_graph(NamedGraph::Polyuble(2)).unwrap(),
            named_graph(NamedGraph::Double).unwrap()
        );
    }

    #[test]
    fn erase_moves() {
        let single = named_graph(NamedGraph::SingleEdge).unwrap();
        let e = single.erase_edge(0).unwrap();
        assert_eq!(e.vertex_count(), 0);
        assert_eq!(e.end_count(), 0);

        let torus = named_graph(NamedGraph::TorusOneHole).unwrap();
        let g = torus.erase_edge(torus.end_index("b_v").unwrap()).unwrap();
        assert_eq!(g.to_spec(), named_graph(NamedGraph::Loop).unwrap().to_spec());

        let double = named_graph(NamedGraph::Double).unwrap();
        let g = double.erase_edge(double.end_index("e2").unwrap()).unwrap();
        let s = g.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count), (2, 1));
    }

    #[test]
    fn contract_moves() {
        let single = named_graph(NamedGraph::SingleEdge).unwrap();
        for toward in 0..2 {
            let g = single.contract_edge(0, toward).unwrap();
            assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));
        }

        let double = named_graph(NamedGraph::Double).unwrap();
        let e1 = double.end_index("e1").unwrap();
        let g = double.contract_edge(e1, 0).unwrap();
        assert_eq!(g.to_spec().vertices, vec![vec!["e2_v".to_string(), "e2".to_string()]]);
        let s = g.surface().unwrap();
        assert_eq!((s.vertex_count, s.edge_count, s.boundary_count), (1, 1, 2));
        let h = double.contract_edge(e1, 1).unwrap();
        assert_eq!(h.edge_count(), 1);
        assert!(h.is_loop(0));

        let lp = named_graph(NamedGraph::Loop).unwrap();
        assert!(matches!(lp.contract_edge(0, 0), Err(GraphError::LoopEdge(_))));
    }

    #[test]
    fn glue_two_single_edges() {
        let a = named_graph(NamedGraph::SingleEdge).unwrap();
        let u = a.disjoint_union(&a);
        // vertices: 0=[a] 1=[a_v] 2=[r.a] 3=[r.a_v]; glue [a] with [r.a_v]
        let g = u.glue_vertices(0, 3).unwrap();
        assert_eq!(g.to_spec().vertices, vec![vec!["r.a_v".to_string()], vec!["r.a".to_string()]]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.surface().unwrap().boundary_count, 1);
    }

    #[test]
    fn glue_two_doubles_gives_double_shape() {
        let d = named_graph(NamedGraph::Double).unwrap();
        let u = d.disjoint_union(&d);
        let g = u.glue_vertices(1, 2).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 2);
        let spec = g.to_spec();
        // survivors keep the opposite-order shape of the double
        assert_eq!(spec.vertices[0], vec!["r.e1", "r.e2"]);
        assert_eq!(spec.vertices[1], vec!["r.e2_v", "r.e1_v"]);
    }

    #[test]
    fn glue_ends_of_a_path_gives_loop() {
        let path = CiliatedFatGraph::from_parts(
            &[("a", "a_v"), ("b", "b_v")],
            &[&["a"], &["a_v", "b"], &["b_v"]],
        )
        .unwrap();
        let g = path.glue_vertices(0, 2).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 1);
        assert!(g.is_loop(0));
    }

    #[test]
    fn glue_rejects_mismatch_and_self_cycles() {
        let torus = named_graph(NamedGraph::TorusOneHole).unwrap();
        let u = torus.disjoint_union(&named_graph(NamedGraph::SingleEdge).unwrap());
        assert!(matches!(u.glue_vertices(0, 1), Err(GraphError::ValenceMismatch(4, 1))));
        let d = named_graph(NamedGraph::Double).unwrap();
        assert!(matches!(d.glue_vertices(0, 1), Err(GraphError::VertexlessCycle(_))));
    }

    #[test]
    fn add_loop_moves() {
        let g = CiliatedFatGraph::empty().with_isolated_vertex();
        let (g, a) = g.add_loop(0, 0).unwrap();
        assert_eq!(g.end_name(a), "e0");
        assert_eq!(validate(&g.to_spec()), Ok(()));
        assert_eq!(g.surface().unwrap(), named_graph(NamedGraph::Loop).unwrap().surface().unwrap());

        let torus = named_graph(NamedGraph::TorusOneHole).unwrap();
        let before = torus.surface().unwrap();
        let (g, _) = torus.add_loop(0, 2).unwrap();
        let after = g.surface().unwrap();
        assert_eq!(after.genus, before.genus);
        assert_eq!(after.euler_characteristic, before.euler_characteristic - 1);
        assert_eq!(after.boundary_count, before.boundary_count + 1);
        assert!(matches!(torus.add_loop(0, 5), Err(GraphError::BadPosition { .. })));
    }

    #[test]
    fn json_round_trip() {
        for name in NamedGraph::gallery() {
            let g = named_graph(name).unwrap();
            let back = CiliatedFatGraph::from_json(&g.to_json()).unwrap();
            assert_eq!(g.to_spec(), back.to_spec());
        }
    }

    #[test]
    fn named_graph_parsing() {
        assert_eq!("torus".parse::<NamedGraph>().unwrap(), NamedGraph::TorusOneHole);
        assert_eq!("polyuble(4)".parse::<NamedGraph>().unwrap(), NamedGraph::Polyuble(4));
        assert_eq!("polygon:5".parse::<NamedGraph>().unwrap(), NamedGraph::Polygon(5));
        assert!("hexagon".parse::<NamedGraph>().is_err());
    }

    #[test]
    fn cilium_detection() {
        let torus = named_graph(NamedGraph::TorusOneHole).unwrap();
        assert!(torus.face_has_cilium(&torus.face_cycles()[0]));
        let lp = named_graph(NamedGraph::Loop).unwrap();
        let flags: Vec<bool> = lp.face_cycles().iter().map(|f| lp.face_has_cilium(f)).collect();
        assert_eq!(flags.iter().filter(|&&c| c).count(), 1);
    }
}
