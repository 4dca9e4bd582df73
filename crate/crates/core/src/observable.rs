//! Functions on connection space and their end derivatives
//! `D_α(f;X) = d/ds f(A_α ↦ A_α e^{sX}, A_{α∨} ↦ e^{−sX} A_{α∨})`.
//!
//! Derivatives are represented as one matrix `M_α` per end with
//! `D_α(f;X) = tr(M_α X)`.

use num_complex::Complex64;

use crate::connection::GraphConnection;
use crate::error::BracketError;
use crate::lie::{self, Flavor};
use crate::ribbon_graph::CiliatedFatGraph;
use crate::CMat;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn finite(z: Complex64) -> Result<Complex64, BracketError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(BracketError::NonFinite)
    }
}

pub trait Observable {
    fn eval(&self, a: &GraphConnection) -> Result<Complex64, BracketError>;

    /// Per-end matrices `M_α` with `D_α(f;X) = tr(M_α X)`.
    fn gradient(&self, a: &GraphConnection) -> Result<Vec<CMat>, BracketError>;

    /// Gradient of `A ↦ D_end(f; x)(A)` at fixed `x`.
    fn second_gradient(&self, _a: &GraphConnection, _end: usize, _x: &CMat) -> Result<Vec<CMat>, BracketError> {
        Err(BracketError::Unsupported("second derivatives"))
    }

    fn end_derivative(&self, a: &GraphConnection, end: usize, x: &CMat) -> Result<Complex64, BracketError> {
        let g = self.gradient(a)?;
        finite((&g[end] * x).trace())
    }
}

/// A factor inside a trace: an edge value `A_e` or a constant matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Letter {
    End(usize),
    Const(CMat),
}

/// `coeff · Π tr(word)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: Complex64,
    pub traces: Vec<Vec<Letter>>,
}

/// Polynomial in traces of words in edge values and constants. Closed under
/// end differentiation: differentiating inserts a constant letter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TracePolynomial {
    pub terms: Vec<Monomial>,
}

fn word_product(a: &GraphConnection, word: &[Letter]) -> CMat {
    let k = a.k();
    let mut acc = lie::identity::<f64>(k);
    for l in word {
        acc = match l {
            Letter::End(e) => acc * a.value(*e),
            Letter::Const(m) => acc * m,
        };
    }
    acc
}

impl TracePolynomial {
    pub fn zero() -> Self {
        TracePolynomial { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        TracePolynomial {
            terms: vec![Monomial {
                coeff: c,
                traces: Vec::new(),
            }],
        }
    }

    pub fn trace(word: Vec<Letter>) -> Self {
        TracePolynomial {
            terms: vec![Monomial {
                coeff: Complex64::new(1.0, 0.0),
                traces: vec![word],
            }],
        }
    }

    /// `tr(A_{e₁} A_{e₂} ⋯)`.
    pub fn trace_of_ends(ends: &[usize]) -> Self {
        Self::trace(ends.iter().map(|&e| Letter::End(e)).collect())
    }

    /// Entry `(A_end)_{ij} = tr(A_end E_{ji})`.
    pub fn entry(end: usize, i: usize, j: usize, k: usize) -> Self {
        Self::trace(vec![Letter::End(end), Letter::Const(lie::elementary(k, j, i))])
    }

    /// Entry `(i, j)` of the ordered product along `word`.
    pub fn word_entry(word: &[usize], i: usize, j: usize, k: usize) -> Self {
        let mut letters: Vec<Letter> = word.iter().map(|&e| Letter::End(e)).collect();
        letters.push(Letter::Const(lie::elementary(k, j, i)));
        Self::trace(letters)
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    pub fn plus(mut self, other: &TracePolynomial) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn mul(&self, other: &TracePolynomial) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut traces = a.traces.clone();
                traces.extend(b.traces.iter().cloned());
                terms.push(Monomial {
                    coeff: a.coeff * b.coeff,
                    traces,
                });
            }
        }
        TracePolynomial { terms }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(Complex64::new(1.0, 0.0)), |acc, _| acc.mul(self))
    }

    /// Replaces every edge letter by a word in another graph's ends; used to
    /// pull observables back along move maps. `words[e]` is the word for `e`.
    pub fn substitute(&self, words: &[Vec<usize>]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|m| Monomial {
                coeff: m.coeff,
                traces: m
                    .traces
                    .iter()
                    .map(|w| {
                        w.iter()
                            .flat_map(|l| match l {
                                Letter::End(e) => words[*e].iter().map(|&s| Letter::End(s)).collect::<Vec<_>>(),
                                Letter::Const(c) => vec![Letter::Const(c.clone())],
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        TracePolynomial { terms }
    }

    /// The polynomial `A ↦ D_end(self; x)(A)`.
    pub fn derivative(&self, graph: &CiliatedFatGraph, end: usize, x: &CMat) -> TracePolynomial {
        let partner = graph.partner(end);
        let mut terms = Vec::new();
        for m in &self.terms {
            for (fi, word) in m.traces.iter().enumerate() {
                for (p, letter) in word.iter().enumerate() {
                    let (insert_at, sign) = match letter {
                        Letter::End(e) if *e == end => (p + 1, 1.0),
                        Letter::End(e) if *e == partner => (p, -1.0),
                        _ => continue,
                    };
                    let mut w = word.clone();
                    w.insert(insert_at, Letter::Const(x.clone()));
                    let mut traces = m.traces.clone();
                    traces[fi] = w;
                    terms.push(Monomial {
                        coeff: m.coeff * sign,
                        traces,
                    });
                }
            }
        }
        TracePolynomial { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Observable for TracePolynomial {
    fn eval(&self, a: &GraphConnection) -> Result<Complex64, BracketError> {
        let mut total = czero();
        for m in &self.terms {
            let mut v = m.coeff;
            for w in &m.traces {
                v *= word_product(a, w).trace();
            }
            total += v;
        }
        finite(total)
    }

    fn gradient(&self, a: &GraphConnection) -> Result<Vec<CMat>, BracketError> {
        let k = a.k();
        let graph = a.graph();
        let mut grad = vec![CMat::zeros(k, k); graph.end_count()];
        for m in &self.terms {
            let mats: Vec<Vec<CMat>> = m
                .traces
                .iter()
                .map(|w| {
                    w.iter()
                        .map(|l| match l {
                            Letter::End(e) => a.value(*e).clone(),
                            Letter::Const(c) => c.clone(),
                        })
                        .collect()
                })
                .collect();
            let traces: Vec<Complex64> = mats
                .iter()
                .map(|ls| ls.iter().fold(lie::identity::<f64>(k), |acc, x| acc * x).trace())
                .collect();
            for (fi, letters) in mats.iter().enumerate() {
                let others = traces
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != fi)
                    .fold(m.coeff, |acc, (_, t)| acc * t);
                if others == czero() {
                    continue;
                }
                let n = letters.len();
                // prefix[p] = L_1⋯L_p, suffix[p] = L_{p+1}⋯L_n
                let mut prefix = Vec::with_capacity(n + 1);
                prefix.push(lie::identity::<f64>(k));
                for l in letters {
                    let next = prefix.last().unwrap() * l;
                    prefix.push(next);
                }
                let mut suffix = vec![lie::identity::<f64>(k); n + 1];
                for p in (0..n).rev() {
                    suffix[p] = &letters[p] * &suffix[p + 1];
                }
                for (p, l) in m.traces[fi].iter().enumerate() {
                    if let Letter::End(e) = l {
                        let after = &suffix[p + 1] * &prefix[p + 1];
                        grad[*e] += after * others;
                        let before = &suffix[p] * &prefix[p];
                        grad[graph.partner(*e)] -= before * others;
                    }
                }
            }
        }
        if grad.iter().any(|g| g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(BracketError::NonFinite);
        }
        Ok(grad)
    }

    fn second_gradient(&self, a: &GraphConnection, end: usize, x: &CMat) -> Result<Vec<CMat>, BracketError> {
        self.derivative(a.graph(), end, x).gradient(a)
    }
}

/// Central differences in the exponential chart for observables without a
/// symbolic form; error is `O(h²)`.
pub struct FiniteDifference<F: Fn(&GraphConnection) -> Complex64> {
    pub f: F,
    pub h: f64,
    pub flavor: Flavor,
}

impl<F: Fn(&GraphConnection) -> Complex64> FiniteDifference<F> {
    pub const DEFAULT_STEP: f64 = 1e-5;

    pub fn new(f: F, flavor: Flavor) -> Self {
        FiniteDifference {
            f,
            h: Self::DEFAULT_STEP,
            flavor,
        }
    }

    fn derivative_at(&self, a: &GraphConnection, end: usize, x: &CMat, h: f64) -> Complex64 {
        let plus = (self.f)(&a.perturbed(end, x, h));
        let minus = (self.f)(&a.perturbed(end, x, -h));
        (plus - minus) / Complex64::new(2.0 * h, 0.0)
    }
}

impl<F: Fn(&GraphConnection) -> Complex64> Observable for FiniteDifference<F> {
    fn eval(&self, a: &GraphConnection) -> Result<Complex64, BracketError> {
        finite((self.f)(a))
    }

    fn gradient(&self, a: &GraphConnection) -> Result<Vec<CMat>, BracketError> {
        let basis = lie::build_basis::<f64>(a.k(), self.flavor)?;
        let mut grad = Vec::with_capacity(a.graph().end_count());
        for end in 0..a.graph().end_count() {
            let mut m = CMat::zeros(a.k(), a.k());
            for e in &basis.elements {
                let d = finite(self.derivative_at(a, end, e, self.h))?;
                m += e * d;
            }
            grad.push(m);
        }
        Ok(grad)
    }

    fn end_derivative(&self, a: &GraphConnection, end: usize, x: &CMat) -> Result<Complex64, BracketError> {
        finite(self.derivative_at(a, end, x, self.h))
    }

    fn second_gradient(&self, a: &GraphConnection, end: usize, x: &CMat) -> Result<Vec<CMat>, BracketError> {
        let outer = 1e-4;
        let basis = lie::build_basis::<f64>(a.k(), self.flavor)?;
        let mut grad = Vec::with_capacity(a.graph().end_count());
        for w in 0..a.graph().end_count() {
            let mut m = CMat::zeros(a.k(), a.k());
            for e in &basis.elements {
                let plus = self.derivative_at(&a.perturbed(w, e, outer), end, x, self.h);
                let minus = self.derivative_at(&a.perturbed(w, e, -outer), end, x, self.h);
                m += e * finite((plus - minus) / Complex64::new(2.0 * outer, 0.0))?;
            }
            grad.push(m);
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{random_algebra_element, sample_rng};
    use crate::ribbon_graph::{named_graph, NamedGraph};

    fn torus_point(seed: u64) -> GraphConnection {
        GraphConnection::random(named_graph(NamedGraph::TorusOneHole).unwrap(), 3, Flavor::GL, seed)
    }

    #[test]
    fn trace_derivative_examples() {
        let a = torus_point(1);
        let e = a.graph().end_index("a").unwrap();
        let mut rng = sample_rng(1, 0);
        let x = random_algebra_element(&mut rng, 3, Flavor::GL);
        let tr = TracePolynomial::trace_of_ends(&[e]);
        let d = tr.end_derivative(&a, e, &x).unwrap();
        assert!((d - (a.value(e) * &x).trace()).norm() < 1e-13);

        let sq = TracePolynomial::trace_of_ends(&[e, e]);
        let d = sq.end_derivative(&a, e, &x).unwrap();
        let expected = (a.value(e) * a.value(e) * &x).trace() * 2.0;
        assert!((d - expected).norm() < 1e-12);

        let c = TracePolynomial::constant(Complex64::new(3.0, 1.0));
        assert!(c.gradient(&a).unwrap().iter().all(|m| lie::max_norm(m) == 0.0));
    }

    #[test]
    fn exact_matches_finite_differences() {
        let a = torus_point(2);
        let g = a.graph().clone();
        let (ea, eb, eav) = (g.end_index("a").unwrap(), g.end_index("b").unwrap(), g.end_index("a_v").unwrap());
        let poly = TracePolynomial::trace_of_ends(&[ea, eb, eav, eb]).plus(&TracePolynomial::trace_of_ends(&[eb]).pow(2));
        let p2 = poly.clone();
        let fd = FiniteDifference::new(move |c: &GraphConnection| p2.eval(c).unwrap(), Flavor::GL);
        let ge = poly.gradient(&a).unwrap();
        let gf = fd.gradient(&a).unwrap();
        for (x, y) in ge.iter().zip(&gf) {
            assert!(lie::max_norm(&(x - y)) < 1e-8);
        }
    }

    #[test]
    fn linear_in_direction_and_consistent_across_ends() {
        let a = torus_point(3);
        let g = a.graph().clone();
        let ea = g.end_index("a").unwrap();
        let eb = g.end_index("b").unwrap();
        let poly = TracePolynomial::trace_of_ends(&[ea, eb, ea]);
        let mut rng = sample_rng(3, 1);
        let x = random_algebra_element(&mut rng, 3, Flavor::GL);
        let y = random_algebra_element(&mut rng, 3, Flavor::GL);
        let lhs = poly.end_derivative(&a, ea, &(&x * Complex64::new(2.0, 0.0) + &y)).unwrap();
        let rhs = poly.end_derivative(&a, ea, &x).unwrap() * 2.0 + poly.end_derivative(&a, ea, &y).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
        // A_α e^{sX} = e^{sX'} A_α with X' = A_α X A_α⁻¹: the opposite end sees −X'
        let xp = a.value(ea) * &x * a.value(g.partner(ea));
        let dv = poly.end_derivative(&a, g.partner(ea), &xp).unwrap();
        assert!((poly.end_derivative(&a, ea, &x).unwrap() + dv).norm() < 1e-10);
    }

    #[test]
    fn second_gradient_matches_differences_of_first() {
        let a = torus_point(4);
        let g = a.graph().clone();
        let (ea, eb) = (g.end_index("a").unwrap(), g.end_index("b").unwrap());
        let poly = TracePolynomial::trace_of_ends(&[ea, eb, ea, g.partner(eb)]);
        let mut rng = sample_rng(4, 0);
        let x = random_algebra_element(&mut rng, 3, Flavor::GL);
        let y = random_algebra_element(&mut rng, 3, Flavor::GL);
        let sg = poly.second_gradient(&a, ea, &x).unwrap();
        let h = 1e-5;
        let dp = poly.end_derivative(&a.perturbed(eb, &y, h), ea, &x).unwrap();
        let dm = poly.end_derivative(&a.perturbed(eb, &y, -h), ea, &x).unwrap();
        let fd = (dp - dm) / (2.0 * h);
        assert!((fd - (&sg[eb] * &y).trace()).norm() < 1e-7);
    }

    #[test]
    fn substitution_pulls_back() {
        let a = torus_point(5);
        let g = a.graph().clone();
        let (ea, eb) = (g.end_index("a").unwrap(), g.end_index("b").unwrap());
        let mut words: Vec<Vec<usize>> = (0..g.end_count()).map(|e| vec![e]).collect();
        words[ea] = vec![ea, eb];
        let p = TracePolynomial::trace_of_ends(&[ea, ea]).substitute(&words);
        let expected = (a.value(ea) * a.value(eb) * a.value(ea) * a.value(eb)).trace();
        assert!((p.eval(&a).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn entry_observable() {
        let a = torus_point(6);
        let e = a.graph().end_index("b").unwrap();
        let p = TracePolynomial::entry(e, 0, 2, 3);
        assert!((p.eval(&a).unwrap() - a.value(e)[(0, 2)]).norm() < 1e-14);
        let w = TracePolynomial::word_entry(&[e, e], 1, 0, 3);
        assert!((w.eval(&a).unwrap() - (a.value(e) * a.value(e))[(1, 0)]).norm() < 1e-13);
    }
}
