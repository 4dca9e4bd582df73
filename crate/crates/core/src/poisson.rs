//! The r-matrix bivector on graph-connection space, its closed-form matrix
//! brackets for small configurations, and nested brackets for Jacobi checks.

use num_complex::Complex64;

use crate::connection::{GraphConnection, Move, MoveMap};
use crate::error::{BracketError, ConnectionError};
use crate::lie::{self, Flavor};
use crate::observable::{Observable, TracePolynomial};
use crate::ribbon_graph::CiliatedFatGraph;
use crate::{CMat, RMatrix};

/// Wedge normalization `(w₁, w₂)` of the bivector, pinned against the
/// single-edge closed formula by [`pin_wedge_weights`].
pub const WEDGE_WEIGHTS: (f64, f64) = (1.0, 1.0);

/// Candidate wedge normalizations.
pub const WEDGE_CANDIDATES: [(f64, f64); 2] = [(1.0, 1.0), (0.5, 0.5)];

/// An r-matrix per vertex sharing one symmetric part.
#[derive(Debug, Clone)]
pub struct PoissonStructure {
    graph: CiliatedFatGraph,
    k: usize,
    flavor: Flavor,
    r: Vec<CMat>,
    weights: (f64, f64),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `tr((M⊗N) R)`.
pub fn tensor_pairing(m: &CMat, n: &CMat, r: &CMat) -> Complex64 {
    (m * partial_trace_second(n, r)).trace()
}

/// `Z` with `tr(M Z) = tr((M⊗N) R)`: `Z_{ij} = Σ N_{lk} R_{(i,k),(j,l)}`.
pub fn partial_trace_second(n: &CMat, r: &CMat) -> CMat {
    let k = n.nrows();
    CMat::from_fn(k, k, |i, j| {
        let mut s = Complex64::new(0.0, 0.0);
        for kk in 0..k {
            for l in 0..k {
                s += n[(l, kk)] * r[(i * k + kk, j * k + l)];
            }
        }
        s
    })
}

/// `Y` with `tr(N Y) = tr((M⊗N) R)`: `Y_{kl} = Σ M_{ji} R_{(i,k),(j,l)}`.
pub fn partial_trace_first(m: &CMat, r: &CMat) -> CMat {
    let k = m.nrows();
    CMat::from_fn(k, k, |kk, l| {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                s += m[(j, i)] * r[(i * k + kk, j * k + l)];
            }
        }
        s
    })
}

/// Per-vertex breakdown of a bracket value.
#[derive(Debug, Clone)]
pub struct BracketResult {
    pub value: Complex64,
    pub per_vertex: Vec<Complex64>,
}

impl PoissonStructure {
    /// Requires every `r(n)` to have symmetric part equal to the trace-form
    /// Casimir to 1e-12.
    pub fn new(graph: CiliatedFatGraph, r: Vec<RMatrix>) -> Result<Self, BracketError> {
        Self::with_casimir_scale(graph, r, 1.0)
    }

    /// Like [`new`](Self::new) with symmetric part `scale · t`.
    pub fn with_casimir_scale(graph: CiliatedFatGraph, r: Vec<RMatrix>, scale: f64) -> Result<Self, BracketError> {
        let s = Self::unchecked(graph, r)?;
        let t = lie::casimir::<f64>(s.k, s.flavor)?.tensor * c(scale);
        for (vertex, rn) in s.r.iter().enumerate() {
            let sym = (rn + lie::flip_factors(rn, s.k)) * c(0.5);
            let deviation = lie::max_norm(&(sym - &t));
            if deviation > 1e-12 {
                return Err(BracketError::SymmetricPart { vertex, deviation });
            }
        }
        Ok(s)
    }

    /// No symmetric-part check; for negative controls.
    pub fn unchecked(graph: CiliatedFatGraph, r: Vec<RMatrix>) -> Result<Self, BracketError> {
        if r.len() != graph.vertex_count() {
            return Err(BracketError::Inconsistent(format!(
                "{} r-matrices for {} vertices",
                r.len(),
                graph.vertex_count()
            )));
        }
        let first = r
            .first()
            .ok_or_else(|| BracketError::Inconsistent("graph has no vertices".into()))?;
        let (k, flavor) = (first.k, first.flavor);
        if r.iter().any(|x| x.k != k || x.flavor != flavor) {
            return Err(BracketError::Inconsistent("r-matrices disagree on k or flavor".into()));
        }
        Ok(PoissonStructure {
            graph,
            k,
            flavor,
            r: r.into_iter().map(|x| x.tensor).collect(),
            weights: WEDGE_WEIGHTS,
        })
    }

    /// The same r-matrix at every vertex.
    pub fn uniform(graph: CiliatedFatGraph, r: &RMatrix) -> Result<Self, BracketError> {
        let n = graph.vertex_count();
        Self::new(graph, vec![r.clone(); n])
    }

    /// `standard_r_with(k, flavor)` at every vertex.
    pub fn standard(graph: CiliatedFatGraph, k: usize, flavor: Flavor) -> Result<Self, BracketError> {
        let r = lie::standard_r_with::<f64>(k, flavor)?;
        Self::uniform(graph, &r)
    }

    pub fn with_weights(mut self, weights: (f64, f64)) -> Self {
        self.weights = weights;
        self
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

    pub fn r_tensor(&self, vertex: usize) -> &CMat {
        &self.r[vertex]
    }

    pub fn r_matrix(&self, vertex: usize) -> RMatrix {
        RMatrix {
            k: self.k,
            flavor: self.flavor,
            tensor: self.r[vertex].clone(),
        }
    }

    /// `r_a(n) = ½(r − r₂₁)`.
    pub fn skew(&self, vertex: usize) -> CMat {
        (&self.r[vertex] - lie::flip_factors(&self.r[vertex], self.k)) * c(0.5)
    }

    fn check(&self, a: &GraphConnection) -> Result<(), BracketError> {
        if a.k() != self.k || a.graph() != &self.graph {
            return Err(BracketError::Inconsistent(
                "connection does not live on this structure's graph".into(),
            ));
        }
        Ok(())
    }

    /// Pair weight for ends at positions `p ≤ q` of one vertex.
    fn pair_weight(&self, p: usize, q: usize) -> f64 {
        if p == q {
            0.5 * self.weights.1
        } else {
            self.weights.0
        }
    }

    /// The bivector evaluated on two gradients.
    pub fn bracket_from_gradients(&self, gf: &[CMat], gg: &[CMat]) -> BracketResult {
        let mut per_vertex = Vec::with_capacity(self.graph.vertex_count());
        for (n, ends) in self.graph.vertices().iter().enumerate() {
            let r = &self.r[n];
            let mut s = Complex64::new(0.0, 0.0);
            for (p, &u) in ends.iter().enumerate() {
                let zf = partial_trace_first(&gf[u], r);
                let zg = partial_trace_first(&gg[u], r);
                for (q, &v) in ends.iter().enumerate().skip(p) {
                    let w = self.pair_weight(p, q);
                    s += ((&gg[v] * &zf).trace() - (&gf[v] * &zg).trace()) * w;
                }
            }
            per_vertex.push(s);
        }
        BracketResult {
            value: per_vertex.iter().sum(),
            per_vertex,
        }
    }

    pub fn bracket(&self, f: &dyn Observable, g: &dyn Observable, a: &GraphConnection) -> Result<BracketResult, BracketError> {
        self.check(a)?;
        let gf = f.gradient(a)?;
        let gg = g.gradient(a)?;
        let res = self.bracket_from_gradients(&gf, &gg);
        if !res.value.re.is_finite() || !res.value.im.is_finite() {
            return Err(BracketError::NonFinite);
        }
        Ok(res)
    }

    /// Per end `u`, the direction `Y_u` with `{f, g}` varying in `f`'s
    /// gradient at `u` as `tr(δM^f_u Y_u)`; `Y_u` depends only on `g`.
    fn dual_directions(&self, gg: &[CMat]) -> Vec<CMat> {
        let k = self.k;
        let mut out = vec![CMat::zeros(k, k); self.graph.end_count()];
        for (n, ends) in self.graph.vertices().iter().enumerate() {
            let r = &self.r[n];
            for (p, &u) in ends.iter().enumerate() {
                for (q, &v) in ends.iter().enumerate() {
                    if q >= p {
                        out[u] += partial_trace_second(&gg[v], r) * c(self.pair_weight(p, q));
                    }
                    if q <= p {
                        out[u] -= partial_trace_first(&gg[v], r) * c(self.pair_weight(q, p));
                    }
                }
            }
        }
        out
    }

    /// Hamiltonian derivative `D_u({·, g}; X)`-style data: `{f, g}` for every
    /// `f` equals `Σ_u tr(M^f_u Y_u)` with `Y` returned here.
    pub fn hamiltonian_directions(&self, g: &dyn Observable, a: &GraphConnection) -> Result<Vec<CMat>, BracketError> {
        self.check(a)?;
        Ok(self.dual_directions(&g.gradient(a)?))
    }

    /// `{(A_α)_{ij}, (A_β)_{kl}}` arranged as a `k²×k²` tensor at
    /// `((i,k),(j,l))`.
    pub fn matrix_bracket(&self, a: &GraphConnection, alpha: usize, beta: usize) -> Result<CMat, BracketError> {
        self.check(a)?;
        let k = self.k;
        let grads_a: Vec<Vec<CMat>> = (0..k * k)
            .map(|ij| TracePolynomial::entry(alpha, ij / k, ij % k, k).gradient(a))
            .collect::<Result<_, _>>()?;
        let grads_b: Vec<Vec<CMat>> = (0..k * k)
            .map(|kl| TracePolynomial::entry(beta, kl / k, kl % k, k).gradient(a))
            .collect::<Result<_, _>>()?;
        let mut out = CMat::zeros(k * k, k * k);
        for i in 0..k {
            for j in 0..k {
                for kk in 0..k {
                    for l in 0..k {
                        out[(i * k + kk, j * k + l)] = self
                            .bracket_from_gradients(&grads_a[i * k + j], &grads_b[kk * k + l])
                            .value;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Gradient of `A ↦ {f, g}(A)`; needs second derivatives of both.
    pub fn bracket_gradient(&self, f: &dyn Observable, g: &dyn Observable, a: &GraphConnection) -> Result<Vec<CMat>, BracketError> {
        self.check(a)?;
        let gf = f.gradient(a)?;
        let gg = g.gradient(a)?;
        let yf = self.dual_directions(&gg);
        let yg = self.dual_directions(&gf);
        let k = self.k;
        let mut total = vec![CMat::zeros(k, k); self.graph.end_count()];
        for u in 0..self.graph.end_count() {
            if lie::max_norm(&yf[u]) > 0.0 {
                for (t, s) in total.iter_mut().zip(f.second_gradient(a, u, &yf[u])?) {
                    *t += s;
                }
            }
            if lie::max_norm(&yg[u]) > 0.0 {
                for (t, s) in total.iter_mut().zip(g.second_gradient(a, u, &yg[u])?) {
                    *t -= s;
                }
            }
        }
        Ok(total)
    }
}

/// `{f, g}` as an observable with a gradient, so it can sit inside another
/// bracket.
pub struct BracketObservable<'a> {
    pub structure: &'a PoissonStructure,
    pub f: &'a dyn Observable,
    pub g: &'a dyn Observable,
}

impl Observable for BracketObservable<'_> {
    fn eval(&self, a: &GraphConnection) -> Result<Complex64, BracketError> {
        Ok(self.structure.bracket(self.f, self.g, a)?.value)
    }

    fn gradient(&self, a: &GraphConnection) -> Result<Vec<CMat>, BracketError> {
        self.structure.bracket_gradient(self.f, self.g, a)
    }
}

/// `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|`.
pub fn jacobi_residual(
    s: &PoissonStructure,
    f: &dyn Observable,
    g: &dyn Observable,
    h: &dyn Observable,
    a: &GraphConnection,
) -> Result<f64, BracketError> {
    let gh = BracketObservable { structure: s, f: g, g: h };
    let hf = BracketObservable { structure: s, f: h, g: f };
    let fg = BracketObservable { structure: s, f, g };
    let total = s.bracket(f, &gh, a)?.value + s.bracket(g, &hf, a)?.value + s.bracket(h, &fg, a)?.value;
    Ok(total.norm())
}

/// Sign of the Sklyanin structure on each gauge copy,
/// `{g⊗g} = SKLYANIN_SIGN · (r_a (g⊗g) − (g⊗g) r_a)` with `r_a = r_a(n)`;
/// pinned by [`poisson_action_residual`].
pub const SKLYANIN_SIGN: f64 = -1.0;

/// One- and two-edge configurations with a closed-form bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Configuration {
    Edge,
    Loop,
    TwoEdges,
    Double,
    Torus,
}

impl Configuration {
    pub const ALL: [Configuration; 5] = [
        Configuration::Edge,
        Configuration::Loop,
        Configuration::TwoEdges,
        Configuration::Double,
        Configuration::Torus,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Configuration::Edge => "edge",
            Configuration::Loop => "loop",
            Configuration::TwoEdges => "twoedges",
            Configuration::Double => "double",
            Configuration::Torus => "torus",
        }
    }

    /// Minimal graph realizing the configuration with ends `alpha`, `beta`.
    ///
    /// Left tensor factors carry the row index of `A_α`, which sits at `[α∨]`;
    /// the two-edge and double realizations therefore share the vertex
    /// holding `α∨, β∨` (in that order).
    pub fn realize(&self) -> (CiliatedFatGraph, &'static str, &'static str) {
        let g = |edges: &[(&str, &str)], vertices: &[&[&str]]| {
            CiliatedFatGraph::from_parts(edges, vertices).expect("static configuration graph")
        };
        match self {
            Configuration::Edge => (g(&[("a", "a_v")], &[&["a"], &["a_v"]]), "a", "a"),
            Configuration::Loop => (g(&[("a", "a_v")], &[&["a", "a_v"]]), "a", "a"),
            Configuration::TwoEdges => (
                g(&[("a", "a_v"), ("b", "b_v")], &[&["a_v", "b_v"], &["a"], &["b"]]),
                "a",
                "b",
            ),
            Configuration::Double => (
                g(&[("a", "a_v"), ("b", "b_v")], &[&["a", "b"], &["a_v", "b_v"]]),
                "a",
                "b",
            ),
            Configuration::Torus => (
                g(&[("a", "a_v"), ("b", "b_v")], &[&["a", "b", "a_v", "b_v"]]),
                "a",
                "b",
            ),
        }
    }

    /// Whether ends `alpha`, `beta` of `graph` are in this configuration.
    pub fn holds(&self, graph: &CiliatedFatGraph, alpha: usize, beta: usize) -> bool {
        let v = |e: usize| graph.vertex_of(e);
        let p = |e: usize| graph.position(e);
        let (av, bv) = (graph.partner(alpha), graph.partner(beta));
        match self {
            Configuration::Edge => alpha == beta && v(alpha) != v(av),
            Configuration::Loop => alpha == beta && v(alpha) == v(av) && p(alpha) < p(av),
            Configuration::TwoEdges => {
                alpha != beta
                    && v(av) == v(bv)
                    && v(alpha) != v(av)
                    && v(beta) != v(bv)
                    && v(alpha) != v(beta)
                    && p(av) < p(bv)
            }
            Configuration::Double => {
                alpha != beta && v(alpha) == v(beta) && v(av) == v(bv) && v(alpha) != v(av) && p(alpha) < p(beta) && p(av) < p(bv)
            }
            Configuration::Torus => {
                let n = v(alpha);
                alpha != beta
                    && [beta, av, bv].iter().all(|&e| v(e) == n)
                    && p(alpha) < p(beta)
                    && p(beta) < p(av)
                    && p(av) < p(bv)
            }
        }
    }
}

/// Right-hand side of the closed-form matrix bracket `{A_α ⊗ A_β}` as a
/// `k²×k²` tensor, reading `r(1)` at `[α∨]` and `r(2)` at `[α]`.
pub fn closed_formula_tensor(
    config: Configuration,
    s: &PoissonStructure,
    a: &GraphConnection,
    alpha: usize,
    beta: usize,
) -> Result<CMat, BracketError> {
    let graph = a.graph();
    if !config.holds(graph, alpha, beta) {
        return Err(BracketError::ConfigurationMismatch(config.label().into()));
    }
    let k = s.k();
    let id = lie::identity::<f64>(k);
    let (ma, mb) = (a.value(alpha), a.value(beta));
    let ab = ma.kronecker(mb);
    let left = graph.vertex_of(graph.partner(alpha));
    let right = graph.vertex_of(alpha);
    let exchange = |r: &CMat| id.kronecker(mb) * lie::flip_factors(r, k) * ma.kronecker(&id) - ma.kronecker(&id) * r * id.kronecker(mb);
    Ok(match config {
        Configuration::Edge => s.skew(left) * &ab + &ab * s.skew(right),
        Configuration::Loop => {
            let r = s.r_tensor(right);
            s.skew(right) * &ab + &ab * s.skew(right) + exchange(r)
        }
        Configuration::TwoEdges => s.r_tensor(left) * &ab,
        Configuration::Double => s.r_tensor(left) * &ab + &ab * s.r_tensor(right),
        Configuration::Torus => {
            let r = s.r_tensor(right);
            r * &ab + &ab * r + exchange(r)
        }
    })
}

/// Component `((i,k),(j,l))` of [`closed_formula_tensor`].
pub fn closed_formula_bracket(
    config: Configuration,
    entries: ((usize, usize), (usize, usize)),
    s: &PoissonStructure,
    a: &GraphConnection,
    alpha: usize,
    beta: usize,
) -> Result<Complex64, BracketError> {
    let k = s.k();
    let ((i, j), (kk, l)) = entries;
    Ok(closed_formula_tensor(config, s, a, alpha, beta)?[(i * k + kk, j * k + l)])
}

/// Picks the wedge normalization reproducing the single-edge closed formula
/// at `points` random connections; returns the winner and its residual.
pub fn pin_wedge_weights(k: usize, points: u64, seed: u64) -> Result<((f64, f64), f64), BracketError> {
    let (graph, alpha, _) = Configuration::Edge.realize();
    let r = lie::standard_r_with::<f64>(k, Flavor::SL)?;
    let mut best = (WEDGE_CANDIDATES[0], f64::INFINITY);
    for w in WEDGE_CANDIDATES {
        let s = PoissonStructure::new(graph.clone(), vec![r.clone(), r.flipped()])?.with_weights(w);
        let mut worst: f64 = 0.0;
        for p in 0..points {
            let mut rng = crate::connection::sample_rng(seed, p);
            let a = GraphConnection::random_with(graph.clone(), k, Flavor::SL, &mut rng);
            let e = graph.end_index(alpha).map_err(crate::error::ConnectionError::from)?;
            let m = s.matrix_bracket(&a, e, e)?;
            let f = closed_formula_tensor(Configuration::Edge, &s, &a, e, e)?;
            worst = worst.max(lie::max_norm(&(m - f)));
        }
        if worst < best.1 {
            best = (w, worst);
        }
    }
    Ok(best)
}

/// `{g⊗g}` componentwise at `((i,k),(j,l))`.
pub fn sklyanin_bracket(entries: ((usize, usize), (usize, usize)), g: &CMat, r: &RMatrix, sign: f64) -> Complex64 {
    let k = r.k;
    let gg = g.kronecker(g);
    let ra = r.skew_part();
    let t = (&ra * &gg - &gg * &ra) * c(sign);
    let ((i, j), (kk, l)) = entries;
    t[(i * k + kk, j * k + l)]
}

/// Sklyanin bracket of two functions on `G` from their left and right
/// gradients (`∇^L_X φ = tr(L X)` along `e^{sX} g`, `∇^R_X φ = tr(R X)` along `g e^{sX}`).
pub fn sklyanin_from_gradients(ra: &CMat, sign: f64, lf: &CMat, rf: &CMat, lg: &CMat, rg: &CMat) -> Complex64 {
    (tensor_pairing(lf, lg, ra) - tensor_pairing(rf, rg, ra)) * sign
}

/// Largest `|{F, G}_{𝒢×𝒜} − {f, g}∘act|` over samples, where `F(g, A) = f(g·A)`
/// and the product bracket is Sklyanin (with `sign`) on every gauge copy plus
/// the bivector on `𝒜^l`.
pub fn poisson_action_residual(
    s: &PoissonStructure,
    f: &dyn Observable,
    g: &dyn Observable,
    sign: f64,
    samples: u64,
    seed: u64,
) -> Result<f64, BracketError> {
    use crate::connection::{gauge_act, sample_rng, GaugeElement};
    let graph = s.graph().clone();
    let mut worst: f64 = 0.0;
    for sample in 0..samples {
        let mut rng = sample_rng(seed, sample);
        let a = GraphConnection::random_with(graph.clone(), s.k(), s.flavor(), &mut rng);
        let h = GaugeElement::random_with(&graph, s.k(), s.flavor(), &mut rng);
        let moved = gauge_act(&h, &a)?;
        let mf = f.gradient(&moved)?;
        let mg = g.gradient(&moved)?;
        let target = s.bracket_from_gradients(&mf, &mg).value;

        let inv: Vec<CMat> = h.matrices.iter().map(lie::try_inverse).collect::<Result<_, _>>()?;
        let pull = |m: &[CMat]| -> Vec<CMat> {
            (0..graph.end_count())
                .map(|u| {
                    let n = graph.vertex_of(u);
                    &h.matrices[n] * &m[u] * &inv[n]
                })
                .collect()
        };
        let mut total = s.bracket_from_gradients(&pull(&mf), &pull(&mg)).value;
        for (n, ends) in graph.vertices().iter().enumerate() {
            let right = |m: &[CMat]| ends.iter().fold(CMat::zeros(s.k(), s.k()), |acc, &u| acc + &m[u]);
            let (rf, rg) = (right(&mf), right(&mg));
            let lf = &h.matrices[n] * &rf * &inv[n];
            let lg = &h.matrices[n] * &rg * &inv[n];
            total += sklyanin_from_gradients(&s.skew(n), sign, &lf, &rf, &lg, &rg);
        }
        worst = worst.max((total - target).norm());
    }
    Ok(worst)
}

/// r-matrices on the target of a move, inherited through vertex origins.
/// Glue requires `r_a(n1) = −r_a(n2)`; junction vertices take `r(n1)`.
pub fn induced_structure(s: &PoissonStructure, map: &MoveMap, mv: &Move) -> Result<PoissonStructure, BracketError> {
    let mut junction_r = 0;
    if let Move::Glue { n1, n2 } = mv {
        let deviation = lie::max_norm(&(s.skew(*n1) + s.skew(*n2)));
        if deviation > 1e-10 {
            return Err(ConnectionError::GluePrecondition(deviation).into());
        }
        junction_r = *n1;
    }
    let r = map
        .vertex_origin
        .iter()
        .map(|o| s.r_matrix(o.unwrap_or(junction_r)))
        .collect();
    PoissonStructure::unchecked(map.target.clone(), r).map(|t| t.with_weights(s.weights))
}

/// Largest `|{f∘φ, g∘φ}_source − {f, g}_target∘φ|` over random source
/// connections, with `φ` the connection map of `mv`.
pub fn move_is_poisson_residual(
    s: &PoissonStructure,
    mv: &Move,
    f: &TracePolynomial,
    g: &TracePolynomial,
    samples: u64,
    seed: u64,
) -> Result<f64, BracketError> {
    let map = MoveMap::new(s.graph(), mv).map_err(ConnectionError::from)?;
    let target = induced_structure(s, &map, mv)?;
    let (fp, gp) = (f.substitute(&map.words), g.substitute(&map.words));
    let mut worst: f64 = 0.0;
    for sample in 0..samples {
        let mut rng = crate::connection::sample_rng(seed, sample);
        let a = GraphConnection::random_with(s.graph().clone(), s.k(), s.flavor(), &mut rng);
        let image = map.apply(&a)?;
        let lhs = s.bracket(&fp, &gp, &a)?.value;
        let rhs = target.bracket(f, g, &image)?.value;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Largest `|f(h·A) − f(A)|` over random gauge elements.
pub fn gauge_invariance_residual(f: &dyn Observable, a: &GraphConnection, trials: u64, seed: u64) -> Result<f64, BracketError> {
    use crate::connection::{gauge_act, sample_rng, GaugeElement};
    let base = f.eval(a)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = sample_rng(seed, t);
        let h = GaugeElement::random_with(a.graph(), a.k(), a.flavor(), &mut rng);
        worst = worst.max((f.eval(&gauge_act(&h, a)?)? - base).norm());
    }
    Ok(worst)
}

/// `|{f,g}_{s1}(A) − {f,g}_{s2}(A)|` for gauge-invariant `f`, `g` and two
/// structures sharing their symmetric part.
pub fn ra_independence_residual(
    s1: &PoissonStructure,
    s2: &PoissonStructure,
    f: &dyn Observable,
    g: &dyn Observable,
    a: &GraphConnection,
    seed: u64,
) -> Result<f64, BracketError> {
    for (vertex, (x, y)) in s1.r.iter().zip(&s2.r).enumerate() {
        let deviation = lie::max_norm(&((x + lie::flip_factors(x, s1.k)) - (y + lie::flip_factors(y, s2.k))));
        if deviation > 1e-12 {
            return Err(BracketError::SymmetricPart { vertex, deviation });
        }
    }
    for obs in [f, g] {
        let dev = gauge_invariance_residual(obs, a, 3, seed)?;
        if dev > 1e-9 {
            return Err(BracketError::NotGaugeInvariant(dev));
        }
    }
    Ok((s1.bracket(f, g, a)?.value - s2.bracket(f, g, a)?.value).norm())
}

/// `tr(M^n)` for the monodromy `M` along a face cycle.
pub fn face_power_trace(graph: &CiliatedFatGraph, face: &[usize], n: usize) -> TracePolynomial {
    let path = GraphConnection::face_path(graph, face);
    let word: Vec<usize> = (0..n).flat_map(|_| path.iter().copied()).collect();
    TracePolynomial::trace_of_ends(&word)
}

/// Report of the fixed-monodromy tangency check.
#[derive(Debug, Clone)]
pub struct LeafCheckReport {
    pub samples: u64,
    pub max_residual: f64,
}

/// Verifies that Hamiltonian vector fields of random trace observables
/// preserve the conjugacy class of the monodromy around a cilium-free face:
/// `{tr Mⁿ, g} = 0` for `n = 1..k`. Faces passing a cilium are refused.
pub fn fixed_monodromy_leaf_check(
    s: &PoissonStructure,
    face: &[usize],
    samples: u64,
    seed: u64,
) -> Result<LeafCheckReport, BracketError> {
    let graph = s.graph();
    if graph.face_has_cilium(face) {
        return Err(BracketError::CiliumInFace);
    }
    let mut worst: f64 = 0.0;
    for sample in 0..samples {
        let mut rng = crate::connection::sample_rng(seed, sample);
        let a = GraphConnection::random_with(graph.clone(), s.k(), s.flavor(), &mut rng);
        let g = random_trace_polynomial(graph, &mut rng, 4);
        for n in 1..=s.k() {
            let m = face_power_trace(graph, face, n);
            worst = worst.max(s.bracket(&m, &g, &a)?.value.norm());
        }
    }
    Ok(LeafCheckReport {
        samples,
        max_residual: worst,
    })
}

/// Word of `len` ends with no letter followed by its partner (cyclically),
/// so no factor cancels.
pub fn random_reduced_word<R: rand::Rng>(graph: &CiliatedFatGraph, rng: &mut R, len: usize) -> Vec<usize> {
    let n = graph.end_count();
    let mut word: Vec<usize> = Vec::with_capacity(len);
    while word.len() < len {
        let e = rng.gen_range(0..n);
        let clashes_prev = word.last().is_some_and(|&p| graph.partner(p) == e);
        let clashes_first = word.len() + 1 == len && len > 1 && graph.partner(word[0]) == e;
        if !clashes_prev && !clashes_first {
            word.push(e);
        }
    }
    word
}

/// Random closed walk of length at least `min_len`. Backtracking happens
/// only at 1-valent vertices, where nothing else is possible.
pub fn random_closed_walk<R: rand::Rng>(graph: &CiliatedFatGraph, rng: &mut R, min_len: usize) -> Vec<usize> {
    let start = rng.gen_range(0..graph.vertex_count());
    let mut word: Vec<usize> = Vec::new();
    let mut here = start;
    let cap = 8 * (min_len + graph.end_count());
    loop {
        let options: Vec<usize> = graph.vertex(here).iter().map(|&x| graph.partner(x)).collect();
        let forward: Vec<usize> = options
            .iter()
            .copied()
            .filter(|&e| word.last().is_none_or(|&p| graph.partner(p) != e))
            .collect();
        let pool = if forward.is_empty() { &options } else { &forward };
        let e = pool[rng.gen_range(0..pool.len())];
        word.push(e);
        here = graph.vertex_of(e);
        if here == start && (word.len() >= min_len || word.len() >= cap) {
            return word;
        }
    }
}

/// Random trace of a closed walk of length at least `1..=max_len`; always
/// gauge invariant.
pub fn random_trace_polynomial<R: rand::Rng>(graph: &CiliatedFatGraph, rng: &mut R, max_len: usize) -> TracePolynomial {
    let len = rng.gen_range(1..=max_len);
    TracePolynomial::trace_of_ends(&random_closed_walk(graph, rng, len))
}

/// Random word-entry observable `(A_{w₁}⋯A_{w_m})_{ij}` (not gauge invariant).
pub fn random_word_entry<R: rand::Rng>(graph: &CiliatedFatGraph, k: usize, rng: &mut R, max_len: usize) -> TracePolynomial {
    let len = rng.gen_range(1..=max_len);
    let word = random_reduced_word(graph, rng, len);
    TracePolynomial::word_entry(&word, rng.gen_range(0..k), rng.gen_range(0..k), k)
}
