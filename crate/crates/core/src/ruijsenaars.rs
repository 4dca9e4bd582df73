//! The trigonometric Ruijsenaars system on the once-holed torus: the pair
//! `(A, B)` of holonomies, the commuting flows of `tr Bⁿ`, the minimal
//! symplectic leaves, eigen-coordinates `(λ, q)`, canonical momenta `s` and
//! the Hamiltonian `tr(B + B⁻¹)`.

use nalgebra::{Schur, SVD};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::connection::GraphConnection;
use crate::error::{BracketError, LeafError, LieError};
use crate::lie::{self, Flavor};
use crate::observable::{FiniteDifference, Observable, TracePolynomial};
use crate::poisson::{closed_formula_tensor, Configuration, PoissonStructure};
use crate::ribbon_graph::{named_graph, NamedGraph};
use crate::CMat;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A point `(A, B)` of the holed-torus connection space.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    pub k: usize,
    pub a: CMat,
    pub b: CMat,
}

impl TorusPoint {
    /// Checks that both matrices are `k×k` with unit determinant to 1e-10.
    pub fn new(a: CMat, b: CMat) -> Result<Self, LieError> {
        let p = Self::unchecked(a, b)?;
        for m in [&p.a, &p.b] {
            let d = m.determinant();
            if (d - ONE).norm() > 1e-10 {
                return Err(LieError::NotUnimodular(d.norm()));
            }
        }
        Ok(p)
    }

    /// Shape check only; used for `GL(k)` points.
    pub fn unchecked(a: CMat, b: CMat) -> Result<Self, LieError> {
        let k = a.nrows();
        if k < 2 {
            return Err(LieError::InvalidDimension(k));
        }
        if a.ncols() != k || b.nrows() != k || b.ncols() != k {
            return Err(LieError::ShapeMismatch {
                expected: k,
                found: b.nrows(),
            });
        }
        Ok(TorusPoint { k, a, b })
    }

    pub fn random(k: usize, seed: u64, stream: u64) -> Self {
        let mut rng = crate::connection::sample_rng(seed, stream);
        let a = lie::group_exp(&crate::connection::random_algebra_element(&mut rng, k, Flavor::SL)).expect("finite");
        let b = lie::group_exp(&crate::connection::random_algebra_element(&mut rng, k, Flavor::SL)).expect("finite");
        TorusPoint { k, a, b }
    }

    /// Simultaneous conjugation `(gAg⁻¹, gBg⁻¹)`.
    pub fn conjugated(&self, g: &CMat) -> Result<Self, LieError> {
        let gi = lie::try_inverse(g)?;
        Ok(TorusPoint {
            k: self.k,
            a: g * &self.a * &gi,
            b: g * &self.b * &gi,
        })
    }

    pub fn max_distance(&self, other: &TorusPoint) -> f64 {
        lie::max_norm(&(&self.a - &other.a)).max(lie::max_norm(&(&self.b - &other.b)))
    }
}

/// `μ(A, B) = A B A⁻¹ B⁻¹`, the monodromy around the hole.
pub fn momentum_map(p: &TorusPoint) -> Result<CMat, LieError> {
    Ok(&p.a * &p.b * lie::try_inverse(&p.a)? * lie::try_inverse(&p.b)?)
}

/// Eigenvalues of a general complex matrix via its Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let t = Schur::new(m.clone()).unpack().1;
    (0..m.nrows()).map(|i| t[(i, i)]).collect()
}

/// Sort key: argument first, then modulus.
fn order_key(z: &Complex64) -> (f64, f64) {
    (z.arg(), z.norm())
}

/// Eigenvalues ordered by argument then modulus, with eigenvectors as the
/// columns of the returned matrix, each scaled so its first nonzero
/// component is 1. Requires a simple spectrum.
pub fn ordered_eigen(m: &CMat) -> (Vec<Complex64>, CMat) {
    let k = m.nrows();
    let (q, t) = Schur::new(m.clone()).unpack();
    let mut vectors = CMat::zeros(k, k);
    for j in 0..k {
        let mut y = vec![ZERO; k];
        y[j] = ONE;
        for i in (0..j).rev() {
            let s: Complex64 = ((i + 1)..=j).map(|l| t[(i, l)] * y[l]).sum();
            y[i] = -s / (t[(i, i)] - t[(j, j)]);
        }
        for r in 0..k {
            vectors[(r, j)] = (0..k).map(|l| q[(r, l)] * y[l]).sum();
        }
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| {
        order_key(&t[(i, i)])
            .partial_cmp(&order_key(&t[(j, j)]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambda: Vec<Complex64> = idx.iter().map(|&i| t[(i, i)]).collect();
    let mut v = CMat::zeros(k, k);
    for (new, &old) in idx.iter().enumerate() {
        let col = vectors.column(old);
        let scale = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = col.iter().copied().find(|z| z.norm() > 1e-12 * scale).unwrap_or(ONE);
        for r in 0..k {
            v[(r, new)] = vectors[(r, old)] / pivot;
        }
    }
    (lambda, v)
}

/// Eigen-coordinates of a point: ordered eigenvalues of `A` and the diagonal
/// of `B` in that eigenbasis.
pub fn eigen_coordinates(p: &TorusPoint) -> Result<(Vec<Complex64>, Vec<Complex64>), LieError> {
    let (lambda, v) = ordered_eigen(&p.a);
    let w = lie::try_inverse(&v)? * &p.b * &v;
    Ok((lambda, (0..p.k).map(|j| w[(j, j)]).collect()))
}

/// Smallest pairwise distance between eigenvalues.
pub fn spectral_separation(lambda: &[Complex64]) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..lambda.len() {
        for j in (i + 1)..lambda.len() {
            sep = sep.min((lambda[i] - lambda[j]).norm());
        }
    }
    sep
}

/// Leaf specification as read from JSON: `{k, x, lambda: [..], q: [..]}`,
/// complex numbers written as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSpec {
    pub k: usize,
    pub x: Complex64,
    pub lambda: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl LeafSpec {
    /// A random admissible specification: unimodular, well separated
    /// spectrum, every `λ_i/λ_j` far from `x`.
    pub fn random<R: Rng>(k: usize, rng: &mut R) -> Self {
        loop {
            let mut lambda: Vec<Complex64> = (0..k)
                .map(|_| Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-2.5..2.5)))
                .collect();
            let prod: Complex64 = lambda.iter().product();
            let root = prod.powf(1.0 / k as f64);
            for l in lambda.iter_mut() {
                *l /= root;
            }
            let x = Complex64::from_polar(rng.gen_range(1.5..3.0), rng.gen_range(-0.5..0.5));
            let q: Vec<Complex64> = (0..k)
                .map(|_| Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5)))
                .collect();
            let spec = LeafSpec { k, x, lambda, q };
            if spec.margin() > 0.1 {
                return spec;
            }
        }
    }

    /// Distance from the nearest excluded configuration (coincident
    /// eigenvalues or a pole of `B`).
    fn margin(&self) -> f64 {
        let mut m = spectral_separation(&self.lambda);
        for i in 0..self.k {
            for j in 0..self.k {
                m = m.min((self.lambda[i] / self.lambda[j] - self.x).norm());
                if i != j {
                    m = m.min((self.lambda[i] - self.x * self.lambda[j]).norm());
                }
            }
        }
        m
    }
}

/// `B^i_j = √q_i √q_j (1 − x)/(λ_i/λ_j − x)` with principal roots, as a
/// `GL(k)` matrix (no determinant normalization).
pub fn b_matrix(lambda: &[Complex64], q: &[Complex64], x: Complex64) -> Result<CMat, LeafError> {
    let k = lambda.len();
    if q.len() != k {
        return Err(LeafError::Length {
            expected: k,
            found: q.len(),
        });
    }
    if x == ZERO {
        return Err(LeafError::ZeroX);
    }
    let sq: Vec<Complex64> = q.iter().map(|z| z.sqrt()).collect();
    let mut b = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let den = lambda[i] / lambda[j] - x;
            if den.norm() < 1e-12 {
                return Err(LeafError::Pole { i, j });
            }
            b[(i, j)] = sq[i] * sq[j] * (ONE - x) / den;
        }
    }
    Ok(b)
}

/// `c_i = x^{(k−1)/2} (Π_{m≠i} (λ_m−λ_i)(λ_i−λ_m)/((λ_m−xλ_i)(λ_i−xλ_m)))^{1/2}`,
/// principal branches, so that `s_i = q_i c_i`.
pub fn correction_factors(lambda: &[Complex64], x: Complex64) -> Result<Vec<Complex64>, LeafError> {
    let k = lambda.len();
    let pre = x.powf((k as f64 - 1.0) / 2.0);
    (0..k)
        .map(|i| {
            let mut p = ONE;
            for m in (0..k).filter(|&m| m != i) {
                let (li, lm) = (lambda[i], lambda[m]);
                p *= (lm - li) * (li - lm) / ((lm - x * li) * (li - x * lm));
            }
            if p.norm() < 1e-300 || !p.re.is_finite() || !p.im.is_finite() {
                return Err(LeafError::BranchPoint(i));
            }
            Ok(pre * p.sqrt())
        })
        .collect()
}

/// A point on a minimal symplectic leaf, realized with `A = diag(λ)`.
#[derive(Debug, Clone)]
pub struct LeafPoint {
    pub k: usize,
    pub x: Complex64,
    pub lambda: Vec<Complex64>,
    /// Diagonal of the realized (unimodular) `B`.
    pub q: Vec<Complex64>,
    /// `q` as supplied, before the global rescaling of `B`.
    pub q_input: Vec<Complex64>,
    /// Scalar `c` with `B = c·B_raw`, `det B = 1`.
    pub scale: Complex64,
    pub factors: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub point: TorusPoint,
}

/// Builds the leaf point for `(λ, q, x)`; `B` is the raw matrix times
/// the principal `det(B)^{−1/k}`.
pub fn build_leaf_point(lambda: &[Complex64], q: &[Complex64], x: Complex64) -> Result<LeafPoint, LeafError> {
    let k = lambda.len();
    if k < 2 {
        return Err(LieError::InvalidDimension(k).into());
    }
    if q.len() != k {
        return Err(LeafError::Length {
            expected: k,
            found: q.len(),
        });
    }
    if x == ZERO {
        return Err(LeafError::ZeroX);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if (lambda[i] - lambda[j]).norm() < 1e-12 {
                return Err(LeafError::Degenerate { i, j });
            }
        }
    }
    let prod: Complex64 = lambda.iter().product();
    if (prod - ONE).norm() > 1e-10 {
        return Err(LeafError::NotUnimodular(format!("{prod}")));
    }
    if let Some(i) = q.iter().position(|z| *z == ZERO) {
        return Err(LeafError::ZeroQ(i));
    }
    let raw = b_matrix(lambda, q, x)?;
    let det = raw.determinant();
    if det.norm() < 1e-300 {
        return Err(LeafError::Lie(LieError::Singular));
    }
    let scale = det.powf(-1.0 / k as f64);
    let b = raw * scale;
    let q_real: Vec<Complex64> = q.iter().map(|z| z * scale).collect();
    let factors = correction_factors(lambda, x)?;
    let s = q_real.iter().zip(&factors).map(|(q, c)| q * c).collect();
    let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(lambda.to_vec()));
    Ok(LeafPoint {
        k,
        x,
        lambda: lambda.to_vec(),
        q: q_real,
        q_input: q.to_vec(),
        scale,
        factors,
        s,
        point: TorusPoint::new(a, b)?,
    })
}

impl LeafPoint {
    pub fn from_spec(spec: &LeafSpec) -> Result<Self, LeafError> {
        if spec.lambda.len() != spec.k {
            return Err(LeafError::Length {
                expected: spec.k,
                found: spec.lambda.len(),
            });
        }
        build_leaf_point(&spec.lambda, &spec.q, spec.x)
    }

    pub fn spec(&self) -> LeafSpec {
        LeafSpec {
            k: self.k,
            x: self.x,
            lambda: self.lambda.clone(),
            q: self.q_input.clone(),
        }
    }

    pub fn momentum(&self) -> CMat {
        momentum_map(&self.point).expect("leaf matrices are invertible")
    }

    /// Largest distance between the spectrum of `μ` and `{x, …, x, x^{1−k}}`.
    pub fn spectrum_residual(&self) -> f64 {
        spectrum_residual(&self.momentum(), self.x)
    }

    /// Second singular value of `μ − x·Id` relative to the first.
    pub fn rank_ratio(&self) -> f64 {
        let mut m = self.momentum();
        for i in 0..self.k {
            m[(i, i)] -= self.x;
        }
        let mut sv: Vec<f64> = SVD::new(m, false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        if sv[0] == 0.0 {
            0.0
        } else {
            sv[1] / sv[0]
        }
    }
}

/// Greedy matching distance between `spectrum(μ)` and `{x ×(k−1), x^{1−k}}`.
pub fn spectrum_residual(mu: &CMat, x: Complex64) -> f64 {
    let k = mu.nrows();
    let mut expected = vec![x; k - 1];
    expected.push(x.powi(1 - k as i32));
    let mut found = eigenvalues(mu);
    let mut worst: f64 = 0.0;
    for e in expected {
        let (pos, d) = found
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - e).norm()))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        worst = worst.max(d);
        found.remove(pos);
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct DetBReport {
    pub direct: Complex64,
    pub formula: Complex64,
    pub relative_error: f64,
}

/// Compares `det B` of the raw matrix with
/// `x^{k(k−1)/2} Π q_i Π_{i≠j} (λ_i−λ_j)/(xλ_i−λ_j)`.
pub fn det_b_check(lambda: &[Complex64], q: &[Complex64], x: Complex64) -> Result<DetBReport, LeafError> {
    let k = lambda.len();
    let direct = b_matrix(lambda, q, x)?.determinant();
    let mut formula = x.powi((k * (k - 1) / 2) as i32) * q.iter().product::<Complex64>();
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            formula *= (lambda[i] - lambda[j]) / (x * lambda[i] - lambda[j]);
        }
    }
    let scale = direct.norm().max(formula.norm());
    let relative_error = if scale == 0.0 { 0.0 } else { (direct - formula).norm() / scale };
    Ok(DetBReport {
        direct,
        formula,
        relative_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianReport {
    /// `Σ_i (s_i + s_i⁻¹)/c_i`.
    pub formula: Complex64,
    /// `Σ_i (s_i + s_i⁻¹)·c_i`, with the factors multiplied instead of divided.
    pub weighted: Complex64,
    /// `tr(B + B⁻¹)` on the realized matrix.
    pub trace: Complex64,
    pub residual: f64,
    pub weighted_residual: f64,
}

/// Evaluates the Hamiltonian in eigen-coordinates and as `tr(B + B⁻¹)`.
/// Both use the same factor table `c_i`; a mismatch beyond 1e-6 (relative)
/// is reported as a branch inconsistency.
pub fn ruijsenaars_hamiltonian(leaf: &LeafPoint) -> Result<HamiltonianReport, LeafError> {
    let b = &leaf.point.b;
    let trace = b.trace() + lie::try_inverse(b)?.trace();
    let mut formula = ZERO;
    let mut weighted = ZERO;
    for (s, c) in leaf.s.iter().zip(&leaf.factors) {
        let sum = s + s.inv();
        formula += sum / c;
        weighted += sum * c;
    }
    let residual = (formula - trace).norm();
    if residual > 1e-6 * trace.norm().max(1.0) {
        return Err(LeafError::BranchInconsistent {
            formula: format!("{formula}"),
            trace: format!("{trace}"),
        });
    }
    Ok(HamiltonianReport {
        formula,
        weighted,
        trace,
        residual,
        weighted_residual: (weighted - trace).norm(),
    })
}

/// Flow times `t₁, …, t_{k−1}` for the Hamiltonians `tr Bⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTimes(pub Vec<Complex64>);

impl FlowTimes {
    pub fn real(times: &[f64]) -> Self {
        FlowTimes(times.iter().map(|&t| cr(t)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        FlowTimes(self.0.iter().map(|t| t * s).collect())
    }

    pub fn combined(&self, other: &FlowTimes) -> Self {
        let n = self.0.len().max(other.0.len());
        FlowTimes(
            (0..n)
                .map(|i| self.0.get(i).copied().unwrap_or(ZERO) + other.0.get(i).copied().unwrap_or(ZERO))
                .collect(),
        )
    }
}

/// `B` fixed, `A ↦ A·exp((Σ tₙ Bⁿ)₀)`.
pub fn flow(p: &TorusPoint, times: &FlowTimes) -> Result<TorusPoint, LieError> {
    if times.0.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
        return Err(LieError::NonFinite);
    }
    let mut gen = CMat::zeros(p.k, p.k);
    let mut power = lie::identity::<f64>(p.k);
    for t in &times.0 {
        power = &power * &p.b;
        gen += &power * *t;
    }
    Ok(TorusPoint {
        k: p.k,
        a: &p.a * lie::group_exp(&lie::traceless_part(&gen))?,
        b: p.b.clone(),
    })
}

/// `‖flow(flow(p,t),t′) − flow(flow(p,t′),t)‖_max`.
pub fn flows_commute_check(p: &TorusPoint, t: &FlowTimes, t2: &FlowTimes) -> Result<f64, LieError> {
    let one = flow(&flow(p, t)?, t2)?;
    let two = flow(&flow(p, t2)?, t)?;
    Ok(one.max_distance(&two))
}

/// `‖flow(flow(p,t),t′) − flow(p,t+t′)‖_max`.
pub fn flow_additivity_check(p: &TorusPoint, t: &FlowTimes, t2: &FlowTimes) -> Result<f64, LieError> {
    Ok(flow(&flow(p, t)?, t2)?.max_distance(&flow(p, &t.combined(t2))?))
}

/// One sample of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub times: Vec<Complex64>,
    pub tr_a: Vec<Complex64>,
    pub tr_b: Vec<Complex64>,
    pub mu_spectrum: Vec<Complex64>,
    pub mu_char_poly: Vec<Complex64>,
    /// Frobenius condition number of `A`; roundoff in `μ` grows with it.
    pub a_condition: f64,
}

fn power_traces(m: &CMat) -> Vec<Complex64> {
    let k = m.nrows();
    let mut power = lie::identity::<f64>(k);
    (1..k)
        .map(|_| {
            power = &power * m;
            power.trace()
        })
        .collect()
}

/// Applies the flow `steps` times with increment `times`, recording each
/// point (step 0 is the start).
pub fn trajectory(p: &TorusPoint, times: &FlowTimes, steps: usize) -> Result<Vec<TrajectoryRow>, LieError> {
    let mut rows = Vec::with_capacity(steps + 1);
    let mut cur = p.clone();
    for step in 0..=steps {
        if step > 0 {
            cur = flow(&cur, times)?;
        }
        let mu = momentum_map(&cur)?;
        let a_condition = cur.a.norm() * lie::try_inverse(&cur.a)?.norm();
        let mut spectrum = eigenvalues(&mu);
        spectrum.sort_by(|a, b| order_key(a).partial_cmp(&order_key(b)).unwrap_or(std::cmp::Ordering::Equal));
        rows.push(TrajectoryRow {
            step,
            times: times.scaled(step as f64).0,
            tr_a: power_traces(&cur.a),
            tr_b: power_traces(&cur.b),
            mu_spectrum: spectrum,
            mu_char_poly: crate::connection::char_poly(&mu),
            a_condition,
        });
    }
    Ok(rows)
}

/// The torus graph `[a, b, a_v, b_v]` with a uniform standard r-matrix,
/// `A` on end `a` and `B` on end `b`.
#[derive(Debug, Clone)]
pub struct TorusSystem {
    structure: PoissonStructure,
    a_end: usize,
    b_end: usize,
}

impl TorusSystem {
    /// Standard normalization (`½(r + r₂₁) = t`).
    pub fn standard(k: usize, flavor: Flavor) -> Result<Self, BracketError> {
        let graph = named_graph(NamedGraph::TorusOneHole)?;
        let structure = PoissonStructure::standard(graph, k, flavor)?;
        Self::from_structure(structure)
    }

    /// The literal display `Σ E_α⊗E_{−α} + ½ΣH⊗H`, half the standard one.
    /// Coordinate brackets take their textbook form in this normalization.
    pub fn display(k: usize, flavor: Flavor) -> Result<Self, BracketError> {
        let graph = named_graph(NamedGraph::TorusOneHole)?;
        let r = lie::display_standard_r_with::<f64>(k, flavor)?;
        let structure = PoissonStructure::with_casimir_scale(graph, vec![r], 0.5)?;
        Self::from_structure(structure)
    }

    fn from_structure(structure: PoissonStructure) -> Result<Self, BracketError> {
        let g = structure.graph();
        let a_end = g.end_index("a")?;
        let b_end = g.end_index("b")?;
        Ok(TorusSystem {
            structure,
            a_end,
            b_end,
        })
    }

    pub fn structure(&self) -> &PoissonStructure {
        &self.structure
    }

    pub fn a_end(&self) -> usize {
        self.a_end
    }

    pub fn b_end(&self) -> usize {
        self.b_end
    }

    pub fn connection(&self, p: &TorusPoint) -> Result<GraphConnection, BracketError> {
        let reps: BTreeMap<String, CMat> = [("a".to_string(), p.a.clone()), ("b".to_string(), p.b.clone())].into();
        Ok(GraphConnection::from_representatives(
            self.structure.graph().clone(),
            p.k,
            self.structure.flavor(),
            &reps,
        )?)
    }

    pub fn bracket(&self, f: &dyn Observable, g: &dyn Observable, p: &TorusPoint) -> Result<Complex64, BracketError> {
        Ok(self.structure.bracket(f, g, &self.connection(p)?)?.value)
    }

    /// Entrywise distance between the bivector's `{A⊗A}`, `{A⊗B}`, `{B⊗B}`
    /// and their closed forms.
    pub fn displays_residual(&self, p: &TorusPoint) -> Result<[f64; 3], BracketError> {
        let conn = self.connection(p)?;
        let s = &self.structure;
        let (a, b) = (self.a_end, self.b_end);
        let mut out = [0.0; 3];
        for (slot, (cfg, x, y)) in [(Configuration::Loop, a, a), (Configuration::Torus, a, b), (Configuration::Loop, b, b)]
            .into_iter()
            .enumerate()
        {
            let lhs = s.matrix_bracket(&conn, x, y)?;
            let rhs = closed_formula_tensor(cfg, s, &conn, x, y)?;
            out[slot] = lie::max_norm(&(lhs - rhs));
        }
        Ok(out)
    }

    /// Matrix of brackets `{f, X_ij}` for `X` the holonomy on `end`.
    pub fn bracket_with_matrix(&self, f: &dyn Observable, end: usize, p: &TorusPoint) -> Result<CMat, BracketError> {
        let conn = self.connection(p)?;
        let k = p.k;
        let mut m = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self.structure.bracket(f, &TracePolynomial::entry(end, i, j, k), &conn)?.value;
            }
        }
        Ok(m)
    }
}

/// Least-squares constant `c` with `m ≈ c·form`, and the remaining max
/// entrywise residual.
pub fn fit_constant(m: &CMat, form: &CMat) -> (Complex64, f64) {
    let num: Complex64 = form.iter().zip(m.iter()).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = form.iter().map(|a| a.norm_sqr()).sum();
    let c = if den == 0.0 { ZERO } else { num / den };
    (c, lie::max_norm(&(m - form * c)))
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationFit {
    /// Right-hand side form that was fitted, e.g. `B(A^n)_0`.
    pub form: String,
    pub constant: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationsReport {
    pub n: usize,
    /// `max |{tr Aⁿ, A_ij}|` and `max |{tr Bⁿ, B_ij}|`.
    pub tr_a_with_a: f64,
    pub tr_b_with_b: f64,
    /// `max_m |{tr Aⁿ, tr Aᵐ}|`, `max_m |{tr Bⁿ, tr Bᵐ}|`.
    pub tr_a_with_tr_a: f64,
    pub tr_b_with_tr_b: f64,
    /// `{tr Aⁿ, B}` against the bare `(Aⁿ)₀` and the fitted `B(Aⁿ)₀`.
    pub tr_a_with_b_bare: RelationFit,
    pub tr_a_with_b: RelationFit,
    /// `{tr Bⁿ, A}` against the left-multiplied `A(Bⁿ)₀` and the fitted `(Bⁿ)₀A`.
    pub tr_b_with_a_left: RelationFit,
    pub tr_b_with_a: RelationFit,
}

fn relation_fit(form: &str, m: &CMat, rhs: &CMat) -> RelationFit {
    let (constant, residual) = fit_constant(m, rhs);
    RelationFit {
        form: form.to_string(),
        constant,
        residual,
    }
}

/// Evaluates the trace relations at `p` for power `n` (`1 ≤ n ≤ k−1`).
pub fn derived_relations_check(sys: &TorusSystem, p: &TorusPoint, n: usize) -> Result<RelationsReport, BracketError> {
    let k = p.k;
    let (a, b) = (sys.a_end, sys.b_end);
    let tr_a = |m: usize| TracePolynomial::trace_of_ends(&vec![a; m]);
    let tr_b = |m: usize| TracePolynomial::trace_of_ends(&vec![b; m]);
    let conn = sys.connection(p)?;
    let s = &sys.structure;
    let mut tr_a_with_tr_a: f64 = 0.0;
    let mut tr_b_with_tr_b: f64 = 0.0;
    for m in 1..k {
        tr_a_with_tr_a = tr_a_with_tr_a.max(s.bracket(&tr_a(n), &tr_a(m), &conn)?.value.norm());
        tr_b_with_tr_b = tr_b_with_tr_b.max(s.bracket(&tr_b(n), &tr_b(m), &conn)?.value.norm());
    }
    let an0 = lie::traceless_part(&p.a.pow(n as u32));
    let bn0 = lie::traceless_part(&p.b.pow(n as u32));
    let tra_b = sys.bracket_with_matrix(&tr_a(n), b, p)?;
    let trb_a = sys.bracket_with_matrix(&tr_b(n), a, p)?;
    Ok(RelationsReport {
        n,
        tr_a_with_a: lie::max_norm(&sys.bracket_with_matrix(&tr_a(n), a, p)?),
        tr_b_with_b: lie::max_norm(&sys.bracket_with_matrix(&tr_b(n), b, p)?),
        tr_a_with_tr_a,
        tr_b_with_tr_b,
        tr_a_with_b_bare: relation_fit("(A^n)_0", &tra_b, &an0),
        tr_a_with_b: relation_fit("B(A^n)_0", &tra_b, &(&p.b * &an0)),
        tr_b_with_a_left: relation_fit("A(B^n)_0", &trb_a, &(&p.a * &bn0)),
        tr_b_with_a: relation_fit("(B^n)_0A", &trb_a, &(&bn0 * &p.a)),
    })
}

/// Which coordinate observable to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Lambda(usize),
    Q(usize),
    /// `s_j = q_j c_j(λ, x)` with `x` frozen at the leaf value; `x` is a
    /// Casimir, so freezing it does not change brackets.
    S(usize),
}

/// Evaluates a coordinate on a torus connection (end `a` holds `A`).
pub fn coordinate_value(c: Coordinate, conn: &GraphConnection, a_end: usize, b_end: usize, x: Complex64) -> Complex64 {
    let am = conn.value(a_end);
    let (lambda, v) = ordered_eigen(am);
    let q = |j: usize| match lie::try_inverse(&v) {
        Ok(vi) => (vi.row(j) * conn.value(b_end) * v.column(j))[(0, 0)],
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    match c {
        Coordinate::Lambda(i) => lambda[i],
        Coordinate::Q(j) => q(j),
        Coordinate::S(j) => match correction_factors(&lambda, x) {
            Ok(f) => q(j) * f[j],
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateReport {
    pub k: usize,
    pub lambda_lambda: f64,
    pub lambda_q: f64,
    /// Against the rational formula of [`q_bracket_formula`].
    pub q_q: f64,
    /// Against that formula times `(1 − x)²`, the form implied
    /// by `{s_i, s_j} = 0` and `{λ_i, s_j} = λ_i s_j δ_ij`.
    pub q_q_corrected: f64,
    pub lambda_s: f64,
    pub s_s: f64,
    /// Whether Richardson extrapolation was needed.
    pub richardson: bool,
}

impl CoordinateReport {
    /// Largest residual among the brackets expected to hold
    /// (`q_q_corrected` in place of `q_q`).
    pub fn max_residual(&self) -> f64 {
        [self.lambda_lambda, self.lambda_q, self.q_q_corrected, self.lambda_s, self.s_s]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Rational right-hand side for `{q_i, q_j}` without the `(1 − x)²` factor.
pub fn q_bracket_formula(lambda: &[Complex64], q: &[Complex64], x: Complex64, i: usize, j: usize) -> Complex64 {
    if i == j {
        return ZERO;
    }
    let (li, lj) = (lambda[i], lambda[j]);
    q[i] * q[j] * (li + lj) / ((li / lj - x) * (lj / li - x) * (li - lj))
}

/// Finite-difference brackets of `λ`, `q`, `s` on the `GL(k)` torus with the
/// display r-matrix, compared with their closed forms.
pub fn coordinate_brackets_check(leaf: &LeafPoint) -> Result<CoordinateReport, LeafError> {
    let first = coordinate_brackets_at_step(leaf, FiniteDifference::<fn(&GraphConnection) -> Complex64>::DEFAULT_STEP, false)?;
    if first.max_residual() < 1e-6 {
        return Ok(first);
    }
    coordinate_brackets_at_step(leaf, FiniteDifference::<fn(&GraphConnection) -> Complex64>::DEFAULT_STEP, true)
}

fn coordinate_brackets_at_step(leaf: &LeafPoint, h: f64, richardson: bool) -> Result<CoordinateReport, LeafError> {
    let k = leaf.k;
    let sys = TorusSystem::display(k, Flavor::GL)?;
    let point = TorusPoint::unchecked(leaf.point.a.clone(), leaf.point.b.clone())?;
    let sep = spectral_separation(&leaf.lambda);
    if sep < 1e-4 {
        return Err(LeafError::NearDegenerate(sep));
    }
    let (lambda, q) = eigen_coordinates(&point)?;
    let factors = correction_factors(&lambda, leaf.x)?;
    let s: Vec<Complex64> = q.iter().zip(&factors).map(|(q, c)| q * c).collect();
    let (a_end, b_end, x) = (sys.a_end, sys.b_end, leaf.x);
    let conn = sys.connection(&point)?;
    let gradient = |c: Coordinate, step: f64| {
        let mut obs = FiniteDifference::new(move |g: &GraphConnection| coordinate_value(c, g, a_end, b_end, x), Flavor::GL);
        obs.h = step;
        obs.gradient(&conn)
    };
    let grad = |c: Coordinate| -> Result<Vec<CMat>, BracketError> {
        let g1 = gradient(c, h)?;
        if !richardson {
            return Ok(g1);
        }
        let g2 = gradient(c, h / 2.0)?;
        Ok(g1.iter().zip(&g2).map(|(a, b)| (b * cr(4.0) - a) / cr(3.0)).collect())
    };
    let mut grads: BTreeMap<(u8, usize), Vec<CMat>> = BTreeMap::new();
    for i in 0..k {
        grads.insert((0, i), grad(Coordinate::Lambda(i))?);
        grads.insert((1, i), grad(Coordinate::Q(i))?);
        grads.insert((2, i), grad(Coordinate::S(i))?);
    }
    let br = |x: (u8, usize), y: (u8, usize)| sys.structure.bracket_from_gradients(&grads[&x], &grads[&y]);
    let mut rep = CoordinateReport {
        k,
        lambda_lambda: 0.0,
        lambda_q: 0.0,
        q_q: 0.0,
        q_q_corrected: 0.0,
        lambda_s: 0.0,
        s_s: 0.0,
        richardson,
    };
    for i in 0..k {
        for j in 0..k {
            let delta = if i == j { ONE } else { ZERO };
            rep.lambda_lambda = rep.lambda_lambda.max(br((0, i), (0, j)).value.norm());
            rep.lambda_q = rep.lambda_q.max((br((0, i), (1, j)).value - lambda[i] * q[j] * delta).norm());
            rep.lambda_s = rep.lambda_s.max((br((0, i), (2, j)).value - lambda[i] * s[j] * delta).norm());
            rep.s_s = rep.s_s.max(br((2, i), (2, j)).value.norm());
            let qq = br((1, i), (1, j)).value;
            let shown = q_bracket_formula(&lambda, &q, x, i, j);
            rep.q_q = rep.q_q.max((qq - shown).norm());
            rep.q_q_corrected = rep.q_q_corrected.max((qq - shown * (ONE - x) * (ONE - x)).norm());
        }
    }
    Ok(rep)
}
