//! Complex matrix Lie algebra numerics for `gl(k)` and `sl(k)`.
//!
//! Everything here is generic over the real scalar `T` underlying the complex
//! entries. Tensors on `C^k ⊗ C^k` are stored as dense `k² × k²` matrices with
//! the composite index `(i, j) ↦ i·k + j`, first tensor factor major, which is
//! exactly the layout produced by [`nalgebra::DMatrix::kronecker`].

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt::{self, Display};

use crate::error::LieError;

/// Real scalar type the algebra is built over.
pub trait Real: RealField + Copy + Display {}
impl<T: RealField + Copy + Display> Real for T {}

pub type CMat<T> = DMatrix<Complex<T>>;

#[inline]
pub(crate) fn re<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

#[inline]
pub(crate) fn cx<T: Real>(re_part: f64, im_part: f64) -> Complex<T> {
    Complex::new(re(re_part), re(im_part))
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_subset().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    GL,
    SL,
}

impl Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::GL => write!(f, "GL"),
            Flavor::SL => write!(f, "SL"),
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GL" => Ok(Flavor::GL),
            "SL" => Ok(Flavor::SL),
            other => Err(LieError::UnknownFlavor(other.to_string())),
        }
    }
}

pub fn identity<T: Real>(k: usize) -> CMat<T> {
    CMat::<T>::identity(k, k)
}

pub fn elementary<T: Real>(k: usize, i: usize, j: usize) -> CMat<T> {
    let mut m = CMat::<T>::zeros(k, k);
    m[(i, j)] = Complex::one();
    m
}

/// Entrywise maximum modulus.
pub fn max_norm<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(nalgebra::ComplexField::modulus(*z)))
}

pub fn trace<T: Real>(m: &CMat<T>) -> Complex<T> {
    m.trace()
}

/// Traceless part `X − tr(X)/k · Id`.
pub fn traceless_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let k = m.nrows();
    let shift = m.trace() / Complex::new(re::<T>(k as f64), T::zero());
    let mut out = m.clone();
    for i in 0..k {
        out[(i, i)] -= shift;
    }
    out
}

pub fn try_inverse<T: Real>(m: &CMat<T>) -> Result<CMat<T>, LieError> {
    m.clone().try_inverse().ok_or(LieError::Singular)
}

/// Flip operator `P(u ⊗ v) = v ⊗ u` on `C^k ⊗ C^k`.
pub fn flip_operator<T: Real>(k: usize) -> CMat<T> {
    let n = k * k;
    let mut p = CMat::<T>::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            p[(j * k + i, i * k + j)] = Complex::one();
        }
    }
    p
}

/// `r ↦ r₂₁`, i.e. conjugation by the flip.
pub fn flip_factors<T: Real>(tensor: &CMat<T>, k: usize) -> CMat<T> {
    let n = k * k;
    CMat::<T>::from_fn(n, n, |row, col| {
        let (i, j) = (row / k, row % k);
        let (l, m) = (col / k, col % k);
        tensor[(j * k + i, m * k + l)]
    })
}

/// Orthonormal basis of `gl(k)` or `sl(k)` for the bilinear form `tr(XY)`.
#[derive(Debug, Clone)]
pub struct AlgebraBasis<T: Real> {
    pub k: usize,
    pub flavor: Flavor,
    pub elements: Vec<CMat<T>>,
}

impl<T: Real> AlgebraBasis<T> {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Coefficients `tr(X e_i)`.
    pub fn coefficients(&self, x: &CMat<T>) -> Vec<Complex<T>> {
        self.elements.iter().map(|e| trace_of_product(x, e)).collect()
    }

    pub fn combine(&self, coeffs: &[Complex<T>]) -> CMat<T> {
        let mut out = CMat::<T>::zeros(self.k, self.k);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            out += e * *c;
        }
        out
    }

    /// Projection onto the algebra (identity for GL, traceless part for SL).
    pub fn project(&self, x: &CMat<T>) -> CMat<T> {
        match self.flavor {
            Flavor::GL => x.clone(),
            Flavor::SL => traceless_part(x),
        }
    }

    /// Components `r^{ab}` of a tensor in the basis `e_a ⊗ e_b`.
    pub fn tensor_components(&self, tensor: &CMat<T>) -> DMatrix<Complex<T>> {
        let d = self.dim();
        let k = self.k;
        DMatrix::from_fn(d, d, |a, b| {
            // Tr((e_a ⊗ e_b) · R) without forming the Kronecker product.
            let (ea, eb) = (&self.elements[a], &self.elements[b]);
            let mut acc = Complex::<T>::zero();
            for i in 0..k {
                for j in 0..k {
                    let x = ea[(i, j)];
                    if x.is_zero() {
                        continue;
                    }
                    for p in 0..k {
                        for q in 0..k {
                            let y = eb[(p, q)];
                            if y.is_zero() {
                                continue;
                            }
                            acc += x * y * tensor[(j * k + q, i * k + p)];
                        }
                    }
                }
            }
            acc
        })
    }

    pub fn tensor_from_components(&self, comps: &DMatrix<Complex<T>>) -> CMat<T> {
        let n = self.k * self.k;
        let mut out = CMat::<T>::zeros(n, n);
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let c = comps[(a, b)];
                if c.is_zero() {
                    continue;
                }
                out += self.elements[a].kronecker(&self.elements[b]) * c;
            }
        }
        out
    }
}

pub(crate) fn trace_of_product<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Complex<T> {
    let k = a.nrows();
    let mut acc = Complex::<T>::zero();
    for i in 0..k {
        for j in 0..k {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Orthonormal Cartan elements of `sl(k)`:
/// `H_m = (E_11 + … + E_mm − m·E_{m+1,m+1}) / √(m(m+1))`.
fn sl_cartan<T: Real>(k: usize) -> Vec<CMat<T>> {
    (1..k)
        .map(|m| {
            let norm = re::<T>(((m * (m + 1)) as f64).sqrt());
            let mut h = CMat::<T>::zeros(k, k);
            for i in 0..m {
                h[(i, i)] = Complex::new(T::one() / norm, T::zero());
            }
            h[(m, m)] = Complex::new(-re::<T>(m as f64) / norm, T::zero());
            h
        })
        .collect()
}

/// Deterministic orthonormal basis: for each root pair `i < j` (lexicographic)
/// the combinations `(E_ij + E_ji)/√2` and `−i(E_ij − E_ji)/√2`, then the Cartan
/// part (`E_ii` for GL, [`sl_cartan`] for SL).
pub fn build_basis<T: Real>(k: usize, flavor: Flavor) -> Result<AlgebraBasis<T>, LieError> {
    if k < 2 {
        return Err(LieError::InvalidDimension(k));
    }
    let s = re::<T>(0.5f64.sqrt());
    let mut elements = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in (i + 1)..k {
            let eij = elementary::<T>(k, i, j);
            let eji = elementary::<T>(k, j, i);
            elements.push((&eij + &eji) * Complex::new(s, T::zero()));
            elements.push((eij - eji) * Complex::new(T::zero(), -s));
        }
    }
    match flavor {
        Flavor::GL => elements.extend((0..k).map(|i| elementary::<T>(k, i, i))),
        Flavor::SL => elements.extend(sl_cartan::<T>(k)),
    }
    Ok(AlgebraBasis { k, flavor, elements })
}

/// `t = Σ e_i ⊗ e_i`.
#[derive(Debug, Clone)]
pub struct CasimirTensor<T: Real> {
    pub k: usize,
    pub flavor: Flavor,
    pub tensor: CMat<T>,
}

pub fn casimir<T: Real>(k: usize, flavor: Flavor) -> Result<CasimirTensor<T>, LieError> {
    let basis = build_basis::<T>(k, flavor)?;
    let n = k * k;
    let mut tensor = CMat::<T>::zeros(n, n);
    for e in &basis.elements {
        tensor += e.kronecker(e);
    }
    Ok(CasimirTensor { k, flavor, tensor })
}

/// Closed form of the Casimir: `P` for GL, `P − Id/k` for SL.
pub fn casimir_closed_form<T: Real>(k: usize, flavor: Flavor) -> CMat<T> {
    let p = flip_operator::<T>(k);
    match flavor {
        Flavor::GL => p,
        Flavor::SL => {
            let n = k * k;
            p - CMat::<T>::identity(n, n) * Complex::new(T::one() / re::<T>(k as f64), T::zero())
        }
    }
}

/// Classical r-matrix as a `k² × k²` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix<T: Real> {
    pub k: usize,
    pub flavor: Flavor,
    pub tensor: CMat<T>,
}

impl<T: Real> RMatrix<T> {
    pub fn new(k: usize, flavor: Flavor, tensor: CMat<T>) -> Result<Self, LieError> {
        if k < 2 {
            return Err(LieError::InvalidDimension(k));
        }
        if tensor.nrows() != k * k || tensor.ncols() != k * k {
            return Err(LieError::ShapeMismatch {
                expected: k * k,
                found: tensor.nrows(),
            });
        }
        Ok(RMatrix { k, flavor, tensor })
    }

    pub fn zero(k: usize, flavor: Flavor) -> Self {
        RMatrix {
            k,
            flavor,
            tensor: CMat::<T>::zeros(k * k, k * k),
        }
    }

    /// `r₂₁`.
    pub fn flipped(&self) -> Self {
        RMatrix {
            k: self.k,
            flavor: self.flavor,
            tensor: flip_factors(&self.tensor, self.k),
        }
    }

    /// `r_a = ½(r − r₂₁)`.
    pub fn skew_part(&self) -> CMat<T> {
        let half = Complex::new(re::<T>(0.5), T::zero());
        (&self.tensor - flip_factors(&self.tensor, self.k)) * half
    }

    /// `½(r + r₂₁)`.
    pub fn symmetric_part(&self) -> CMat<T> {
        let half = Complex::new(re::<T>(0.5), T::zero());
        (&self.tensor + flip_factors(&self.tensor, self.k)) * half
    }

    /// Max-norm distance of the symmetric part from the Casimir.
    pub fn symmetric_part_residual(&self) -> Result<T, LieError> {
        let t = casimir::<T>(self.k, self.flavor)?;
        Ok(max_norm(&(self.symmetric_part() - t.tensor)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let tensor: Vec<[f64; 2]> = self
            .tensor
            .transpose()
            .iter()
            .map(|z| [to_f64(z.re), to_f64(z.im)])
            .collect();
        serde_json::json!({ "k": self.k, "flavor": self.flavor, "tensor": tensor })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, LieError> {
        #[derive(Deserialize)]
        struct Raw {
            k: usize,
            flavor: Flavor,
            tensor: Vec<[f64; 2]>,
        }
        let raw: Raw =
            serde_json::from_value(value.clone()).map_err(|e| LieError::Parse(e.to_string()))?;
        let n = raw.k * raw.k;
        if raw.tensor.len() != n * n {
            return Err(LieError::ShapeMismatch {
                expected: n * n,
                found: raw.tensor.len(),
            });
        }
        let tensor = CMat::<T>::from_fn(n, n, |i, j| {
            let [a, b] = raw.tensor[i * n + j];
            cx(a, b)
        });
        RMatrix::new(raw.k, raw.flavor, tensor)
    }
}

/// Standard r-matrix normalized so that `½(r + r₂₁) = t` for the trace-form
/// Casimir: `2 Σ_{α>0} E_α ⊗ E_{−α} + Σ_i H_i ⊗ H_i`, with an orthonormal
/// Cartan basis; `flavor` selects the Cartan of `sl(k)` or `gl(k)`.
pub fn standard_r_with<T: Real>(k: usize, flavor: Flavor) -> Result<RMatrix<T>, LieError> {
    let mut r = display_standard_r_with::<T>(k, flavor)?;
    r.tensor *= Complex::new(re::<T>(2.0), T::zero());
    Ok(r)
}

/// `Σ_{α>0} E_α ⊗ E_{−α} + ½ Σ_i H_i ⊗ H_i` taken literally. Its symmetric
/// part is `t/2`; it still solves the CYBE and is the normalization under
/// which the torus coordinate brackets take their textbook form.
pub fn display_standard_r_with<T: Real>(k: usize, flavor: Flavor) -> Result<RMatrix<T>, LieError> {
    if k < 2 {
        return Err(LieError::InvalidDimension(k));
    }
    let n = k * k;
    let mut tensor = CMat::<T>::zeros(n, n);
    for i in 0..k {
        for j in (i + 1)..k {
            tensor += elementary::<T>(k, i, j).kronecker(&elementary::<T>(k, j, i));
        }
    }
    let cartan: Vec<CMat<T>> = match flavor {
        Flavor::SL => sl_cartan(k),
        Flavor::GL => (0..k).map(|i| elementary(k, i, i)).collect(),
    };
    let half = Complex::new(re::<T>(0.5), T::zero());
    for h in &cartan {
        tensor += h.kronecker(h) * half;
    }
    RMatrix::new(k, flavor, tensor)
}

pub fn standard_r<T: Real>(k: usize) -> Result<RMatrix<T>, LieError> {
    standard_r_with(k, Flavor::SL)
}

/// Embeds a `k²×k²` tensor as `r₁₂`, `r₁₃`, `r₂₃` on `(C^k)^{⊗3}`.
fn three_fold_legs<T: Real>(tensor: &CMat<T>, k: usize) -> (CMat<T>, CMat<T>, CMat<T>) {
    let id = identity::<T>(k);
    let r12 = tensor.kronecker(&id);
    let r23 = id.kronecker(tensor);
    let p23 = id.kronecker(&flip_operator::<T>(k));
    let r13 = &p23 * &r12 * &p23;
    (r12, r13, r23)
}

/// Max-norm of `[r₁₂,r₁₃] + [r₁₂,r₂₃] + [r₁₃,r₂₃]`.
pub fn cybe_residual<T: Real>(r: &RMatrix<T>) -> T {
    let (r12, r13, r23) = three_fold_legs(&r.tensor, r.k);
    let comm = |a: &CMat<T>, b: &CMat<T>| a * b - b * a;
    let total = comm(&r12, &r13) + comm(&r12, &r23) + comm(&r13, &r23);
    max_norm(&total)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn group_exp<T: Real>(x: &CMat<T>) -> Result<CMat<T>, LieError> {
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LieError::NonFinite);
    }
    let k = x.nrows();
    let norm = (0..k)
        .map(|j| (0..k).fold(T::zero(), |acc, i| acc + nalgebra::ComplexField::modulus(x[(i, j)])))
        .fold(T::zero(), |a, b| a.max(b));
    let mut squarings = 0u32;
    let quarter = re::<T>(0.25);
    let mut scaled_norm = norm;
    while scaled_norm > quarter {
        scaled_norm *= re::<T>(0.5);
        squarings += 1;
    }
    let scale = Complex::new(re::<T>(0.5f64.powi(squarings as i32)), T::zero());
    let y = x * scale;
    let mut sum = identity::<T>(k);
    let mut term = identity::<T>(k);
    let eps = T::default_epsilon();
    for n in 1..40 {
        term = &term * &y * Complex::new(T::one() / re::<T>(n as f64), T::zero());
        sum += &term;
        if max_norm(&term) <= eps * max_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = CMat<f64>;

    fn kron_sum(basis: &AlgebraBasis<f64>) -> M {
        let n = basis.k * basis.k;
        basis
            .elements
            .iter()
            .fold(M::zeros(n, n), |acc, e| acc + e.kronecker(e))
    }

    #[test]
    fn basis_dimensions_and_orthonormality() {
        for (k, flavor, dim) in [(2, Flavor::SL, 3), (2, Flavor::GL, 4), (3, Flavor::SL, 8)] {
            let b = build_basis::<f64>(k, flavor).unwrap();
            assert_eq!(b.dim(), dim);
            for (i, ei) in b.elements.iter().enumerate() {
                for (j, ej) in b.elements.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((trace_of_product(ei, ej) - Complex::new(want, 0.0)).norm() < 1e-12);
                }
                if flavor == Flavor::SL {
                    assert!(ei.trace().norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_rejects_small_k() {
        assert!(matches!(
            build_basis::<f64>(1, Flavor::SL),
            Err(LieError::InvalidDimension(1))
        ));
    }

    #[test]
    fn basis_is_deterministic() {
        let a = build_basis::<f64>(3, Flavor::SL).unwrap();
        let b = build_basis::<f64>(3, Flavor::SL).unwrap();
        assert_eq!(a.elements, b.elements);
    }

    #[test]
    fn gl2_casimir_is_the_flip() {
        // brute-force sum over the basis compared entrywise to the 4×4 permutation
        let b = build_basis::<f64>(2, Flavor::GL).unwrap();
        let t = kron_sum(&b);
        let mut perm = M::zeros(4, 4);
        for (row, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            perm[(row, col)] = Complex::new(1.0, 0.0);
        }
        assert!(max_norm(&(t - perm)) < 1e-12);
    }

    #[test]
    fn sl_casimirs_match_closed_form() {
        for k in [2, 3, 4] {
            let t = casimir::<f64>(k, Flavor::SL).unwrap();
            assert!(max_norm(&(&t.tensor - casimir_closed_form::<f64>(k, Flavor::SL))) < 1e-12);
            let p = flip_operator::<f64>(k);
            assert!(max_norm(&(&p * &t.tensor * &p - &t.tensor)) < 1e-12);
        }
    }

    #[test]
    fn standard_r_k2_in_efh_form() {
        // r = E⊗F + ¼ H⊗H with H = diag(1,−1)
        let e = elementary::<f64>(2, 0, 1);
        let f = elementary::<f64>(2, 1, 0);
        let mut h = M::zeros(2, 2);
        h[(0, 0)] = Complex::new(1.0, 0.0);
        h[(1, 1)] = Complex::new(-1.0, 0.0);
        let expected = e.kronecker(&f) + h.kronecker(&h) * Complex::new(0.25, 0.0);
        let shown = display_standard_r_with::<f64>(2, Flavor::SL).unwrap();
        assert!(max_norm(&(&shown.tensor - &expected)) < 1e-14);
        let r = standard_r::<f64>(2).unwrap();
        assert!(max_norm(&(r.tensor - expected * Complex::new(2.0, 0.0))) < 1e-14);
        let half_t = casimir::<f64>(2, Flavor::SL).unwrap().tensor * Complex::new(0.5, 0.0);
        assert!(max_norm(&(shown.symmetric_part() - half_t)) < 1e-14);
        assert!(cybe_residual(&shown) < 1e-14);
    }

    #[test]
    fn standard_r_axioms() {
        for k in [2, 3, 4] {
            let r = standard_r::<f64>(k).unwrap();
            assert!(cybe_residual(&r) < 1e-12, "k={k}");
            assert!(r.symmetric_part_residual().unwrap() < 1e-12);
            assert!(cybe_residual(&r.flipped()) < 1e-12);
        }
        let rgl = standard_r_with::<f64>(3, Flavor::GL).unwrap();
        assert!(cybe_residual(&rgl) < 1e-12);
        assert!(rgl.symmetric_part_residual().unwrap() < 1e-12);
    }

    #[test]
    fn casimir_alone_does_not_solve_cybe() {
        let t = casimir::<f64>(2, Flavor::GL).unwrap();
        let r = RMatrix::new(2, Flavor::GL, t.tensor).unwrap();
        assert!(cybe_residual(&r) > 0.1);
        assert_eq!(cybe_residual(&RMatrix::<f64>::zero(2, Flavor::SL)), 0.0);
    }

    #[test]
    fn components_round_trip() {
        let b = build_basis::<f64>(3, Flavor::SL).unwrap();
        let r = standard_r::<f64>(3).unwrap();
        let comps = b.tensor_components(&r.tensor);
        assert!(max_norm(&(b.tensor_from_components(&comps) - &r.tensor)) < 1e-12);
    }

    #[test]
    fn exp_special_cases() {
        let zero = M::zeros(3, 3);
        assert_eq!(group_exp(&zero).unwrap(), identity::<f64>(3));

        let mut d = M::zeros(2, 2);
        d[(0, 0)] = Complex::new(0.7, 0.2);
        d[(1, 1)] = Complex::new(-1.3, 0.0);
        let e = group_exp(&d).unwrap();
        assert!((e[(0, 0)] - d[(0, 0)].exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - d[(1, 1)].exp()).norm() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-15);

        let n = elementary::<f64>(3, 0, 2) * Complex::new(2.5, -1.0);
        assert!(max_norm(&(group_exp(&n).unwrap() - identity::<f64>(3) - &n)) < 1e-14);
    }

    #[test]
    fn exp_rejects_non_finite() {
        let mut m = M::zeros(2, 2);
        m[(0, 1)] = Complex::new(f64::NAN, 0.0);
        assert!(matches!(group_exp(&m), Err(LieError::NonFinite)));
    }

    #[test]
    fn works_in_single_precision() {
        let r = standard_r::<f32>(2).unwrap();
        assert!(cybe_residual(&r) < 1e-6);
        assert!(r.symmetric_part_residual().unwrap() < 1e-6);
    }

    #[test]
    fn rmatrix_json_round_trip() {
        let r = standard_r::<f64>(2).unwrap();
        let back = RMatrix::<f64>::from_json(&r.to_json()).unwrap();
        assert_eq!(r, back);
    }
}
