//! Spin-network functions: full contraction of per-vertex intertwiners with
//! edge tensors `π_α(A_α)` over an orientation set, for the fundamental and
//! dual-fundamental representations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::connection::GraphConnection;
use crate::error::BracketError;
use crate::lie::{self, Flavor};
use crate::observable::FiniteDifference;
use crate::ribbon_graph::CiliatedFatGraph;
use crate::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Rep {
    Fundamental,
    Dual,
}

impl Rep {
    pub fn dual(self) -> Rep {
        match self {
            Rep::Fundamental => Rep::Dual,
            Rep::Dual => Rep::Fundamental,
        }
    }
}

/// How an intertwiner slot transforms under the vertex's gauge matrix:
/// as a vector (`C ↦ g C`) or as a covector (`C ↦ g⁻ᵀ C`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Vector,
    Covector,
}

/// Dense tensor with `arity` indices of range `k`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Intertwiner {
    pub k: usize,
    pub arity: usize,
    pub data: Vec<Complex64>,
}

impl Intertwiner {
    pub fn zeros(k: usize, arity: usize) -> Self {
        Intertwiner {
            k,
            arity,
            data: vec![Complex64::new(0.0, 0.0); k.pow(arity as u32)],
        }
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.flat(idx)]
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.k + i)
    }

    /// Levi-Civita symbol with `k` indices.
    pub fn epsilon(k: usize) -> Self {
        let mut t = Self::zeros(k, k);
        let mut perm: Vec<usize> = (0..k).collect();
        permutations(&mut perm, 0, &mut |p| {
            let pos = t.flat(p);
            t.data[pos] = Complex64::new(permutation_sign(p), 0.0);
        });
        t
    }

    /// `δ_{ij}`.
    pub fn delta(k: usize) -> Self {
        let mut t = Self::zeros(k, 2);
        for i in 0..k {
            t.data[i * k + i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    /// One-index tensor `e_i`.
    pub fn unit_vector(k: usize, i: usize) -> Self {
        let mut t = Self::zeros(k, 1);
        t.data[i] = Complex64::new(1.0, 0.0);
        t
    }
}

fn permutations(p: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, visit);
        p.swap(start, i);
    }
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `ψ(A) = ⟨⊗_n C_n, ⊗_{α∈E₁} π_α(A_α)⟩`.
#[derive(Debug, Clone)]
pub struct SpinNetwork {
    graph: CiliatedFatGraph,
    k: usize,
    /// Representation per end; both ends of every edge are filled in.
    reps: Vec<Rep>,
    intertwiners: Vec<Intertwiner>,
}

impl SpinNetwork {
    /// `reps` names at least one end per edge; when both ends of an edge are
    /// given they must carry dual representations. Intertwiner indices follow
    /// the vertex's linear order.
    pub fn new(
        graph: CiliatedFatGraph,
        k: usize,
        reps: &BTreeMap<String, Rep>,
        intertwiners: Vec<Intertwiner>,
    ) -> Result<Self, BracketError> {
        let err = |m: String| BracketError::SpinNetwork(m);
        let mut per_end: Vec<Option<Rep>> = vec![None; graph.end_count()];
        for (name, &rep) in reps {
            let e = graph
                .end_index(name)
                .map_err(|_| err(format!("unknown end `{name}`")))?;
            per_end[e] = Some(rep);
        }
        for e in 0..graph.end_count() {
            let p = graph.partner(e);
            match (per_end[e], per_end[p]) {
                (Some(x), Some(y)) if x.dual() != y => {
                    return Err(err(format!(
                        "ends `{}` and `{}` must carry dual representations",
                        graph.end_name(e),
                        graph.end_name(p)
                    )))
                }
                (None, None) => {
                    return Err(err(format!("no representation for the edge of `{}`", graph.end_name(e))))
                }
                _ => {}
            }
        }
        let reps: Vec<Rep> = (0..graph.end_count())
            .map(|e| per_end[e].unwrap_or_else(|| per_end[graph.partner(e)].unwrap().dual()))
            .collect();
        if intertwiners.len() != graph.vertex_count() {
            return Err(err(format!(
                "{} intertwiners for {} vertices",
                intertwiners.len(),
                graph.vertex_count()
            )));
        }
        for (n, c) in intertwiners.iter().enumerate() {
            if c.arity != graph.valence(n) || c.k != k || c.data.len() != k.pow(c.arity as u32) {
                return Err(err(format!(
                    "intertwiner at vertex {n} has arity {} but the vertex has valence {}",
                    c.arity,
                    graph.valence(n)
                )));
            }
        }
        Ok(SpinNetwork {
            graph,
            k,
            reps,
            intertwiners,
        })
    }

    pub fn rep(&self, end: usize) -> Rep {
        self.reps[end]
    }

    /// Transformation type of the slot that end `e` occupies at `[e]`.
    pub fn slot_kind(&self, e: usize) -> SlotKind {
        slot_kind(self.reps[e])
    }

    /// Evaluation using `ends` as the orientation set (one end per edge).
    pub fn eval_with_orientation(&self, a: &GraphConnection, ends: &[usize]) -> Result<Complex64, BracketError> {
        if a.graph() != &self.graph || a.k() != self.k {
            return Err(BracketError::SpinNetwork("connection does not match the network".into()));
        }
        let k = self.k;
        let n_ends = self.graph.end_count();
        // Edge tensor indexed by (slot index at [α∨], slot index at [α]).
        let edges: Vec<(usize, usize, CMat)> = ends
            .iter()
            .map(|&alpha| {
                let t = match self.reps[alpha] {
                    Rep::Fundamental => a.value(alpha).clone(),
                    Rep::Dual => a.value(self.graph.partner(alpha)).transpose(),
                };
                (self.graph.partner(alpha), alpha, t)
            })
            .collect();
        let mut idx = vec![0usize; n_ends];
        let mut total = Complex64::new(0.0, 0.0);
        let combos = k.pow(n_ends as u32);
        let mut slot_buf: Vec<usize> = Vec::new();
        for code in 0..combos {
            let mut c = code;
            for slot in idx.iter_mut() {
                *slot = c % k;
                c /= k;
            }
            let mut term = Complex64::new(1.0, 0.0);
            for (row_end, col_end, t) in &edges {
                term *= t[(idx[*row_end], idx[*col_end])];
                if term == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            if term == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (n, cn) in self.intertwiners.iter().enumerate() {
                slot_buf.clear();
                slot_buf.extend(self.graph.vertex(n).iter().map(|&e| idx[e]));
                term *= cn.get(&slot_buf);
            }
            total += term;
        }
        Ok(total)
    }

    /// Evaluation over the default orientation set.
    pub fn eval(&self, a: &GraphConnection) -> Result<Complex64, BracketError> {
        self.eval_with_orientation(a, &self.graph.orientation_set())
    }

    /// The network as a finite-difference observable.
    pub fn into_observable(self, flavor: Flavor) -> FiniteDifference<impl Fn(&GraphConnection) -> Complex64> {
        FiniteDifference::new(
            move |a: &GraphConnection| self.eval(a).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            flavor,
        )
    }
}

/// Slot kind of an end given its representation: the fundamental's column
/// index transforms as a vector at `[α]`; the dual swaps.
pub fn slot_kind(rep: Rep) -> SlotKind {
    match rep {
        Rep::Fundamental => SlotKind::Vector,
        Rep::Dual => SlotKind::Covector,
    }
}

/// Kinds of a vertex's slots in linear order.
pub fn vertex_slot_kinds(graph: &CiliatedFatGraph, reps: &[Rep], vertex: usize) -> Vec<SlotKind> {
    graph.vertex(vertex).iter().map(|&e| slot_kind(reps[e])).collect()
}

/// The `ε`-built invariant for `k = 2` and two slots: `ε` when both slots
/// have the same kind, `ε·ε = −δ` when they differ.
pub fn epsilon_intertwiner(kinds: &[SlotKind]) -> Result<Intertwiner, BracketError> {
    if kinds.len() != 2 {
        return Err(BracketError::SpinNetwork(format!(
            "epsilon intertwiner needs two slots, vertex has {}",
            kinds.len()
        )));
    }
    let eps = Intertwiner::epsilon(2);
    if kinds[0] == kinds[1] {
        return Ok(eps);
    }
    let mut t = Intertwiner::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            t.data[i * 2 + j] = (0..2).map(|m| eps.get(&[i, m]) * eps.get(&[m, j])).sum();
        }
    }
    Ok(t)
}

/// Basis of the tensors invariant under `sl(k)` acting on slots of the given
/// kinds, from the null space of the infinitesimal action.
pub fn invariant_basis(kinds: &[SlotKind], k: usize) -> Result<Vec<Intertwiner>, BracketError> {
    let arity = kinds.len();
    let dim = k.pow(arity as u32);
    let basis = lie::build_basis::<f64>(k, Flavor::SL)?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for x in &basis.elements {
        // generator on slot s: vector slots see x, covector slots see −xᵀ
        let mut op = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let idx = unflatten(col, k, arity);
            for (s, kind) in kinds.iter().enumerate() {
                for m in 0..k {
                    let coeff = match kind {
                        SlotKind::Vector => x[(m, idx[s])],
                        SlotKind::Covector => -x[(idx[s], m)],
                    };
                    if coeff != Complex64::new(0.0, 0.0) {
                        let mut out = idx.clone();
                        out[s] = m;
                        op[(flatten(&out, k), col)] += coeff;
                    }
                }
            }
        }
        for r in 0..dim {
            rows.push(op.row(r).iter().copied().collect());
        }
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    let big = DMatrix::<Complex64>::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let gram = big.adjoint() * &big;
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let mut out = Vec::new();
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() < 1e-9 {
            let v = eig.eigenvectors.column(i);
            out.push(Intertwiner {
                k,
                arity,
                data: v.iter().copied().collect(),
            });
        }
    }
    Ok(out)
}

fn unflatten(mut code: usize, k: usize, arity: usize) -> Vec<usize> {
    let mut idx = vec![0; arity];
    for s in (0..arity).rev() {
        idx[s] = code % k;
        code /= k;
    }
    idx
}

fn flatten(idx: &[usize], k: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * k + i)
}

/// Largest `|ψ(g·A) − ψ(A)|` over random gauge elements.
pub fn gauge_invariance_residual(net: &SpinNetwork, a: &GraphConnection, trials: u64, seed: u64) -> Result<f64, BracketError> {
    use crate::connection::{gauge_act, sample_rng, GaugeElement};
    let base = net.eval(a)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = sample_rng(seed, t);
        let h = GaugeElement::random_with(a.graph(), a.k(), a.flavor(), &mut rng);
        worst = worst.max((net.eval(&gauge_act(&h, a)?)? - base).norm());
    }
    Ok(worst)
}
