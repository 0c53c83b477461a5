//! Sparse Laurent polynomials with real coefficients.
//!
//! Activation probabilities of cycles and concatenated-cycle objects are constant terms of
//! products of coupling polynomials `f(X) = Σ p_i X^{a_i}` evaluated at monomials. The exact
//! types [`LaurentPoly`] and [`MultiLaurent`] back the public operations; [`MonomialProduct`]
//! evaluates the same constant terms (and their gradients) through a discrete Fourier sum,
//! which is what the gradient-descent loops use.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use thiserror::Error;

/// Coefficients with magnitude below this are dropped.
pub const PRUNE: f64 = 1e-15;

/// Largest number of cycle-basis variables a [`MultiLaurent`] can carry.
pub const MAX_VARS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaurentError {
    #[error("length mismatch: pattern has {pattern} entries, distribution has {probs}")]
    LengthMismatch { pattern: usize, probs: usize },
    #[error("substitution scale must be non-zero")]
    ZeroScale,
    #[error("basis mismatch: {left} vs {right} variables")]
    BasisMismatch { left: usize, right: usize },
    #[error("{0} variables requested, at most {MAX_VARS} supported")]
    TooManyVariables(usize),
}

/// Univariate Laurent polynomial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, f64>,
}

impl LaurentPoly {
    pub fn one() -> Self {
        Self::monomial(0, 1.0)
    }

    pub fn monomial(exp: i64, coeff: f64) -> Self {
        let mut out = LaurentPoly::default();
        out.add_term(exp, coeff);
        out
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I: IntoIterator<Item = (i64, f64)>>(terms: I) -> Self {
        let mut out = LaurentPoly::default();
        for (e, c) in terms {
            *out.terms.entry(e).or_insert(0.0) += c;
        }
        out.prune();
        out
    }

    fn add_term(&mut self, exp: i64, coeff: f64) {
        if libm::fabs(coeff) >= PRUNE {
            *self.terms.entry(exp).or_insert(0.0) += coeff;
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| libm::fabs(*c) >= PRUNE);
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.terms.values().sum()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &other.terms {
                *acc.entry(ea + eb).or_insert(0.0) += ca * cb;
            }
        }
        let mut out = LaurentPoly { terms: acc };
        out.prune();
        out
    }
}

/// `Σ p_i X^{a_i}`.
pub fn coupling_poly(a: &[u32], p: &[f64]) -> Result<LaurentPoly, LaurentError> {
    if a.len() != p.len() {
        return Err(LaurentError::LengthMismatch {
            pattern: a.len(),
            probs: p.len(),
        });
    }
    Ok(LaurentPoly::from_terms(
        a.iter().zip(p).map(|(&ai, &pi)| (ai as i64, pi)),
    ))
}

/// Substitutes `X -> X^scale`.
pub fn lp_compose(f: &LaurentPoly, scale: i64) -> Result<LaurentPoly, LaurentError> {
    if scale == 0 {
        return Err(LaurentError::ZeroScale);
    }
    Ok(LaurentPoly {
        terms: f.terms.iter().map(|(&e, &c)| (e * scale, c)).collect(),
    })
}

/// Product of all polynomials in `fs`; the empty product is 1.
pub fn lp_mul(fs: &[LaurentPoly]) -> LaurentPoly {
    fs.iter().fold(LaurentPoly::one(), |acc, f| acc.mul(f))
}

/// Coefficient `[f]_k`, zero when absent.
pub fn lp_coeff(f: &LaurentPoly, k: i64) -> f64 {
    f.terms.get(&k).copied().unwrap_or(0.0)
}

/// Exponent vector of a [`MultiLaurent`] term; unused slots stay zero.
pub type ExpVec = [i32; MAX_VARS];

/// Multivariate Laurent polynomial in up to [`MAX_VARS`] variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLaurent {
    nvars: usize,
    terms: BTreeMap<ExpVec, f64>,
}

impl MultiLaurent {
    pub fn one(nvars: usize) -> Result<Self, LaurentError> {
        if nvars > MAX_VARS {
            return Err(LaurentError::TooManyVariables(nvars));
        }
        let mut terms = BTreeMap::new();
        terms.insert([0; MAX_VARS], 1.0);
        Ok(MultiLaurent { nvars, terms })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i32], f64)> + '_ {
        self.terms.iter().map(move |(e, &c)| (&e[..self.nvars], c))
    }

    pub fn coeff(&self, exps: &[i32]) -> f64 {
        let mut key = [0; MAX_VARS];
        key[..exps.len()].copy_from_slice(exps);
        self.terms.get(&key).copied().unwrap_or(0.0)
    }
}

/// `f(Π_s X_s^{exps[s]})` as a multivariate polynomial.
pub fn ml_from_factor(exps: &[i32], f: &LaurentPoly) -> Result<MultiLaurent, LaurentError> {
    if exps.len() > MAX_VARS {
        return Err(LaurentError::TooManyVariables(exps.len()));
    }
    let mut terms: BTreeMap<ExpVec, f64> = BTreeMap::new();
    for (e, c) in f.terms() {
        let mut key = [0; MAX_VARS];
        for (k, &x) in key.iter_mut().zip(exps) {
            *k = (e as i32) * x;
        }
        *terms.entry(key).or_insert(0.0) += c;
    }
    terms.retain(|_, c| libm::fabs(*c) >= PRUNE);
    Ok(MultiLaurent {
        nvars: exps.len(),
        terms,
    })
}

pub fn ml_mul(x: &MultiLaurent, y: &MultiLaurent) -> Result<MultiLaurent, LaurentError> {
    if x.nvars != y.nvars {
        return Err(LaurentError::BasisMismatch {
            left: x.nvars,
            right: y.nvars,
        });
    }
    let mut terms: BTreeMap<ExpVec, f64> = BTreeMap::new();
    for (ex, &cx) in &x.terms {
        for (ey, &cy) in &y.terms {
            let mut key = [0; MAX_VARS];
            for s in 0..MAX_VARS {
                key[s] = ex[s] + ey[s];
            }
            *terms.entry(key).or_insert(0.0) += cx * cy;
        }
    }
    terms.retain(|_, c| libm::fabs(*c) >= PRUNE);
    Ok(MultiLaurent {
        nvars: x.nvars,
        terms,
    })
}

pub fn ml_constant_term(x: &MultiLaurent) -> f64 {
    x.terms.get(&[0; MAX_VARS]).copied().unwrap_or(0.0)
}

/// A product `Π_g f(X^{e_g})^{n_g}` of powers of the coupling polynomial at monomials.
///
/// The constant term of a Laurent polynomial `Q` whose exponents along coordinate `s` lie in
/// `[-N_s + 1, N_s - 1]` equals the average of `Q` over the grid of `N_s`-th roots of unity, so
/// both the constant term and its partial derivatives in `p` reduce to a finite Fourier sum.
/// The grid size depends only on the factors and the memory, never on `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialProduct {
    nvars: usize,
    factors: Vec<(ExpVec, u32)>,
}

impl MonomialProduct {
    /// Groups repeated monomials; factors with zero power are dropped.
    pub fn new(nvars: usize, factors: &[(ExpVec, u32)]) -> Result<Self, LaurentError> {
        if nvars > MAX_VARS {
            return Err(LaurentError::TooManyVariables(nvars));
        }
        let mut grouped: BTreeMap<ExpVec, u32> = BTreeMap::new();
        for &(e, n) in factors {
            if n > 0 {
                *grouped.entry(e).or_insert(0) += n;
            }
        }
        Ok(MonomialProduct {
            nvars,
            factors: grouped.into_iter().collect(),
        })
    }

    /// Univariate product `Π f(X^{scale})^{power}`.
    pub fn univariate(factors: &[(i32, u32)]) -> Self {
        let list: Vec<(ExpVec, u32)> = factors.iter().map(|&(s, n)| ([s, 0, 0, 0], n)).collect();
        Self::new(1, &list).expect("one variable is always supported")
    }

    pub fn factors(&self) -> &[(ExpVec, u32)] {
        &self.factors
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Total number of edges, i.e. the degree of the product as a polynomial in `p`.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.1).sum()
    }

    fn grid(&self, memory: u32) -> Vec<usize> {
        (0..self.nvars)
            .map(|s| {
                let (mut pos, mut neg) = (0i64, 0i64);
                for (e, n) in &self.factors {
                    let x = e[s] as i64 * *n as i64 * memory as i64;
                    if x > 0 {
                        pos += x;
                    } else {
                        neg -= x;
                    }
                }
                (pos.max(neg) + 1) as usize
            })
            .collect()
    }

    /// Constant term as an explicit polynomial product; slow, used as a reference.
    pub fn expand(&self, a: &[u32], p: &[f64]) -> Result<MultiLaurent, LaurentError> {
        let f = coupling_poly(a, p)?;
        let mut acc = MultiLaurent::one(self.nvars)?;
        for (e, n) in &self.factors {
            let factor = ml_from_factor(&e[..self.nvars], &f)?;
            for _ in 0..*n {
                acc = ml_mul(&acc, &factor)?;
            }
        }
        Ok(acc)
    }

    pub fn constant_term(&self, a: &[u32], p: &[f64]) -> f64 {
        self.run(a, p, false).0
    }

    /// Constant term together with its partial derivatives with respect to every `p_t`.
    pub fn constant_term_with_gradient(&self, a: &[u32], p: &[f64]) -> (f64, Vec<f64>) {
        self.run(a, p, true)
    }

    fn run(&self, a: &[u32], p: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        assert_eq!(a.len(), p.len(), "pattern and distribution lengths differ");
        let memory = a.iter().copied().max().unwrap_or(0);
        let dims = self.grid(memory);
        let roots: Vec<Vec<Complex64>> = dims
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
                    .collect()
            })
            .collect();
        let total: usize = dims.iter().product();
        let nf = self.factors.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; p.len()];
        let mut u = vec![0usize; self.nvars];
        let mut z = vec![Complex64::new(1.0, 0.0); nf];
        let mut powers = vec![Complex64::new(0.0, 0.0); nf * a.len()];
        let mut big_f = vec![Complex64::new(0.0, 0.0); nf];
        let mut big_d = vec![Complex64::new(0.0, 0.0); nf];
        let mut prefix = vec![Complex64::new(0.0, 0.0); nf + 1];
        for _ in 0..total {
            for (g, (e, n)) in self.factors.iter().enumerate() {
                let mut zg = Complex64::new(1.0, 0.0);
                for s in 0..self.nvars {
                    let k = (e[s] as i64 * u[s] as i64).rem_euclid(dims[s] as i64) as usize;
                    zg *= roots[s][k];
                }
                z[g] = zg;
                let mut base = Complex64::new(0.0, 0.0);
                for (t, (&at, &pt)) in a.iter().zip(p).enumerate() {
                    let w = zg.powu(at);
                    powers[g * a.len() + t] = w;
                    base += w * pt;
                }
                let below = base.powu(n - 1);
                big_f[g] = below * base;
                big_d[g] = below * (*n as f64);
            }
            prefix[0] = Complex64::new(1.0, 0.0);
            for g in 0..nf {
                prefix[g + 1] = prefix[g] * big_f[g];
            }
            value += prefix[nf].re;
            if want_grad {
                let mut suffix = Complex64::new(1.0, 0.0);
                for g in (0..nf).rev() {
                    let r = prefix[g] * suffix * big_d[g];
                    for (t, gt) in grad.iter_mut().enumerate() {
                        *gt += (r * powers[g * a.len() + t]).re;
                    }
                    suffix *= big_f[g];
                }
            }
            for s in 0..self.nvars {
                u[s] += 1;
                if u[s] < dims[s] {
                    break;
                }
                u[s] = 0;
            }
        }
        let scale = 1.0 / total as f64;
        for gt in grad.iter_mut() {
            *gt *= scale;
        }
        (value * scale, grad)
    }
}

#[cfg(test)]
mod test {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        libm::fabs(x - y) <= tol
    }

    #[test]
    fn coupling_poly_examples() {
        let f = coupling_poly(&[0, 1, 2], &[0.4, 0.2, 0.4]).unwrap();
        assert_eq!(f.terms().collect::<Vec<_>>(), vec![(0, 0.4), (1, 0.2), (2, 0.4)]);
        assert_eq!(coupling_poly(&[0], &[1.0]).unwrap(), LaurentPoly::one());
        assert_eq!(
            coupling_poly(&[0, 1], &[1.0]),
            Err(LaurentError::LengthMismatch {
                pattern: 2,
                probs: 1
            })
        );
    }

    #[test]
    fn compose_examples() {
        let f = coupling_poly(&[0, 1, 2], &[0.4, 0.2, 0.4]).unwrap();
        let g = lp_compose(&f, -1).unwrap();
        assert_eq!(g.terms().collect::<Vec<_>>(), vec![(-2, 0.4), (-1, 0.2), (0, 0.4)]);
        assert_eq!(lp_compose(&LaurentPoly::one(), 7).unwrap(), LaurentPoly::one());
        let h = lp_compose(&coupling_poly(&[0, 1], &[0.5, 0.5]).unwrap(), 2).unwrap();
        assert_eq!(h.terms().collect::<Vec<_>>(), vec![(0, 0.5), (2, 0.5)]);
        assert_eq!(lp_compose(&f, 0), Err(LaurentError::ZeroScale));
    }

    #[test]
    fn example_two_product() {
        let f = coupling_poly(&[0, 1, 2], &[0.4, 0.2, 0.4]).unwrap();
        let fb = lp_compose(&f, -1).unwrap();
        let prod = lp_mul(&[f.clone(), f.clone(), f, fb.clone(), fb.clone(), fb]);
        assert!(close(lp_coeff(&prod, 0), 0.1818, 5e-5));
        assert!(close(lp_coeff(&prod, 6), 0.0041, 5e-5));
        assert!(close(lp_coeff(&prod, -6), 0.0041, 5e-5));
        assert_eq!(lp_coeff(&prod, 99), 0.0);
        let one = lp_mul(&[LaurentPoly::one(), LaurentPoly::one()]);
        assert_eq!(lp_coeff(&one, 0), 1.0);
    }

    #[test]
    fn multivariate_factor() {
        let f = coupling_poly(&[0, 1], &[0.5, 0.5]).unwrap();
        let m = ml_from_factor(&[1, -1], &f).unwrap();
        assert_eq!(m.coeff(&[0, 0]), 0.5);
        assert_eq!(m.coeff(&[1, -1]), 0.5);
        assert_eq!(m.len(), 2);
        assert_eq!(ml_constant_term(&MultiLaurent::one(3).unwrap()), 1.0);
        let other = ml_from_factor(&[1], &f).unwrap();
        assert_eq!(
            ml_mul(&m, &other),
            Err(LaurentError::BasisMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn fourier_matches_expansion() {
        let a = [0, 1, 3, 4];
        let p = [0.3, 0.2, 0.15, 0.35];
        let prod = MonomialProduct::new(
            2,
            &[
                ([1, 1, 0, 0], 1),
                ([-1, -1, 0, 0], 1),
                ([1, 0, 0, 0], 3),
                ([-1, 0, 0, 0], 3),
                ([0, 1, 0, 0], 2),
                ([0, -1, 0, 0], 2),
                ([0, 0, 0, 0], 1),
            ],
        )
        .unwrap();
        let exact = ml_constant_term(&prod.expand(&a, &p).unwrap());
        assert!(close(prod.constant_term(&a, &p), exact, 1e-14));
    }

    #[test]
    fn fourier_gradient_matches_differences() {
        let a = [0, 2, 5];
        let p = [0.5, 0.3, 0.2];
        let prod =
            MonomialProduct::univariate(&[(2, 1), (1, 2), (-2, 1), (-1, 2)]);
        let (_, g) = prod.constant_term_with_gradient(&a, &p);
        let h = 1e-6;
        for t in 0..3 {
            let mut hi = p;
            let mut lo = p;
            hi[t] += h;
            lo[t] -= h;
            let fd = (prod.constant_term(&a, &hi) - prod.constant_term(&a, &lo)) / (2.0 * h);
            assert!(close(g[t], fd, 1e-8 * (1.0 + libm::fabs(fd))), "{t}: {} vs {fd}", g[t]);
        }
    }

    #[test]
    fn zero_memory_is_trivial() {
        let prod = MonomialProduct::univariate(&[(1, 3), (-1, 3)]);
        let (v, g) = prod.constant_term_with_gradient(&[0], &[1.0]);
        assert!(close(v, 1.0, 1e-15));
        assert!(close(g[0], 6.0, 1e-12));
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, len).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
    }

    fn poly(max_exp: i64) -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((-max_exp..=max_exp, -1.0f64..1.0), 1..6)
            .prop_map(LaurentPoly::from_terms)
    }

    fn max_abs_diff(x: &LaurentPoly, y: &LaurentPoly) -> f64 {
        let mut keys: Vec<i64> = x.terms().map(|t| t.0).chain(y.terms().map(|t| t.0)).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|k| libm::fabs(lp_coeff(x, k) - lp_coeff(y, k)))
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn probability_is_conserved(p in simplex(5)) {
            let f = coupling_poly(&[0, 1, 2, 5, 7], &p).unwrap();
            prop_assert!(close(f.coefficient_sum(), 1.0, 1e-12));
        }

        #[test]
        fn product_is_commutative_and_associative(x in poly(4), y in poly(4), z in poly(4)) {
            let xy_z = lp_mul(&[lp_mul(&[x.clone(), y.clone()]), z.clone()]);
            let x_yz = lp_mul(&[x.clone(), lp_mul(&[y.clone(), z.clone()])]);
            let zyx = lp_mul(&[z, y, x]);
            prop_assert!(max_abs_diff(&xy_z, &x_yz) <= 1e-12);
            prop_assert!(max_abs_diff(&xy_z, &zyx) <= 1e-12);
        }

        #[test]
        fn self_correlation_is_collision_probability(p in simplex(4)) {
            let f = coupling_poly(&[0, 1, 3, 6], &p).unwrap();
            let fb = lp_compose(&f, -1).unwrap();
            let ct = lp_coeff(&lp_mul(&[f, fb]), 0);
            let sq: f64 = p.iter().map(|x| x * x).sum();
            prop_assert!(close(ct, sq, 1e-12));
        }

        #[test]
        fn constant_terms_are_probabilities(p in simplex(3), k in 1u32..4) {
            let prod = MonomialProduct::new(2, &[
                ([1, 0, 0, 0], k), ([-1, 1, 0, 0], 1), ([0, -1, 0, 0], k),
            ]).unwrap();
            let exact = ml_constant_term(&prod.expand(&[0, 1, 3], &p).unwrap());
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&exact));
            prop_assert!(close(prod.constant_term(&[0, 1, 3], &p), exact, 1e-13));
        }
    }
}
