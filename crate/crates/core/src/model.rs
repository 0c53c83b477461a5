//! Core data types: code parameters, partitioning and lifting matrices, edge distributions.
//!
//! A QC-SC code is described by a γ×κ all-one base matrix, a partitioning matrix `P` that
//! assigns each base-matrix entry to one of the component matrices listed in the coupling
//! pattern `a`, and a lifting matrix `L` of circulant exponents in `[0, z)`.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Tolerance on the total mass of an edge distribution.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimensions out of range: gamma={gamma}, kappa={kappa} (need 2 <= gamma <= kappa)")]
    Dimension { gamma: usize, kappa: usize },
    #[error("invalid coupling pattern: {0}")]
    Pattern(&'static str),
    #[error("circulant size and replica count must be at least 1 (z={z}, L={replicas})")]
    Lifting { z: usize, replicas: usize },
    #[error("invalid edge distribution: {0}")]
    Distribution(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is {rows}x{cols}, expected {gamma}x{kappa}")]
    Shape {
        rows: usize,
        cols: usize,
        gamma: usize,
        kappa: usize,
    },
    #[error("entry {value} at ({row}, {col}) is not an allowed value")]
    Entry { row: usize, col: usize, value: u32 },
}

/// Parameters of a QC-SC code with an all-one base matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    /// Row count γ of the base matrix (VN degree).
    pub gamma: usize,
    /// Column count κ of the base matrix (CN degree).
    pub kappa: usize,
    /// Memory m, the index of the last component matrix.
    pub memory: usize,
    /// Pseudo-memory m_t: number of non-zero component matrices minus one.
    pub pseudo_memory: usize,
    /// Coupling pattern a, strictly increasing with a_0 = 0 and a_{m_t} = m.
    pub pattern: Vec<u32>,
    /// Circulant size z.
    pub circulant: usize,
    /// Number of replicas L.
    pub replicas: usize,
}

impl CodeParams {
    pub fn new(
        gamma: usize,
        kappa: usize,
        pattern: Vec<u32>,
        circulant: usize,
        replicas: usize,
    ) -> Result<Self, ModelError> {
        let memory = pattern.last().copied().unwrap_or(0) as usize;
        let pseudo_memory = pattern.len().saturating_sub(1);
        validate_params(CodeParams {
            gamma,
            kappa,
            memory,
            pseudo_memory,
            pattern,
            circulant,
            replicas,
        })
    }

    /// Full-memory parameters, pattern (0, 1, ..., m).
    pub fn full_memory(
        gamma: usize,
        kappa: usize,
        memory: usize,
        circulant: usize,
        replicas: usize,
    ) -> Result<Self, ModelError> {
        Self::new(gamma, kappa, full_pattern(memory), circulant, replicas)
    }

    pub fn is_full_memory(&self) -> bool {
        self.pseudo_memory == self.memory
    }

    /// Index of `value` in the coupling pattern.
    pub fn value_index(&self, value: u32) -> Option<usize> {
        self.pattern.binary_search(&value).ok()
    }

    pub fn entries(&self) -> usize {
        self.gamma * self.kappa
    }
}

/// The pattern (0, 1, ..., m).
pub fn full_pattern(memory: usize) -> Vec<u32> {
    (0..=memory as u32).collect()
}

/// Checks every invariant of [`CodeParams`] and passes the value through unchanged.
pub fn validate_params(raw: CodeParams) -> Result<CodeParams, ModelError> {
    if raw.gamma < 2 || raw.kappa < raw.gamma {
        return Err(ModelError::Dimension {
            gamma: raw.gamma,
            kappa: raw.kappa,
        });
    }
    validate_pattern(&raw.pattern, raw.memory)?;
    if raw.pattern.len() != raw.pseudo_memory + 1 {
        return Err(ModelError::Pattern("pattern length must equal pseudo-memory + 1"));
    }
    if raw.circulant == 0 || raw.replicas == 0 {
        return Err(ModelError::Lifting {
            z: raw.circulant,
            replicas: raw.replicas,
        });
    }
    Ok(raw)
}

pub fn validate_pattern(pattern: &[u32], memory: usize) -> Result<(), ModelError> {
    match pattern.first() {
        None => return Err(ModelError::Pattern("pattern is empty")),
        Some(&a0) if a0 != 0 => return Err(ModelError::Pattern("pattern must start at 0")),
        _ => {}
    }
    if pattern.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModelError::Pattern("pattern must be strictly increasing"));
    }
    if *pattern.last().unwrap() as usize != memory {
        return Err(ModelError::Pattern("pattern must end at the memory"));
    }
    Ok(())
}

/// Probability vector over the values of the coupling pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDistribution {
    probs: Vec<f64>,
}

impl EdgeDistribution {
    /// Strict constructor: every entry in (0, 1] and total mass 1.
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(ModelError::Distribution("entries must lie in (0, 1]"));
        }
        Self::check_sum(probs)
    }

    /// Like [`EdgeDistribution::new`] but zero entries are allowed. Used for empirical
    /// distributions and discretization inputs.
    pub fn new_allow_zero(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(ModelError::Distribution("entries must lie in [0, 1]"));
        }
        Self::check_sum(probs)
    }

    /// Rescales positive weights to unit mass.
    pub fn normalized(weights: &[f64]) -> Result<Self, ModelError> {
        if weights.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(ModelError::Distribution("weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution needs at least one component");
        EdgeDistribution {
            probs: vec![1.0 / len as f64; len],
        }
    }

    fn check_sum(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.is_empty() {
            return Err(ModelError::Distribution("distribution is empty"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::Distribution("entries must sum to 1"));
        }
        Ok(EdgeDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// L1 and L∞ distances to another distribution of the same length.
    pub fn distances(&self, other: &EdgeDistribution) -> (f64, f64) {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold((0.0, 0.0), |(l1, linf), (a, b)| {
                let d = (a - b).abs();
                (l1 + d, if d > linf { d } else { linf })
            })
    }
}

/// Integer vector u with ‖u‖₁ = `total` closest to `total · p` in the L2 sense.
///
/// Largest-remainder rounding (ties toward the lower index) followed by a ±1 exchange pass
/// that certifies optimality of the separable objective.
pub fn discretize_distribution(p: &EdgeDistribution, total: usize) -> Vec<usize> {
    discretize_weights(p.probs(), total)
}

pub(crate) fn discretize_weights(p: &[f64], total: usize) -> Vec<usize> {
    let targets: Vec<f64> = p.iter().map(|&x| x * total as f64).collect();
    let mut u: Vec<usize> = targets.iter().map(|&t| libm::floor(t) as usize).collect();
    let assigned: usize = u.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = targets[i] - libm::floor(targets[i]);
        let fj = targets[j] - libm::floor(targets[j]);
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    if assigned <= total {
        for &i in order.iter().cycle().take(total - assigned) {
            u[i] += 1;
        }
    } else {
        // Only reachable when p sums to slightly more than one.
        let mut excess = assigned - total;
        for &i in order.iter().rev() {
            while excess > 0 && u[i] > 0 {
                u[i] -= 1;
                excess -= 1;
            }
        }
    }
    // Moving a unit from i to j changes the squared error by 2(u_j - t_j) - 2(u_i - t_i) + 2.
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..u.len() {
            if u[i] == 0 {
                continue;
            }
            for j in 0..u.len() {
                if i == j {
                    continue;
                }
                let delta =
                    2.0 * (u[j] as f64 - targets[j]) - 2.0 * (u[i] as f64 - targets[i]) + 2.0;
                if delta < -1e-9 && best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                u[i] -= 1;
                u[j] += 1;
            }
            None => return u,
        }
    }
}

/// γ×κ partitioning matrix with entries drawn from the coupling pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitioningMatrix {
    gamma: usize,
    kappa: usize,
    entries: Vec<u32>,
}

impl PartitioningMatrix {
    /// Validated constructor from rows.
    pub fn new(params: &CodeParams, rows: &[Vec<u32>]) -> Result<Self, ModelError> {
        let entries = flatten(rows, params.gamma, params.kappa)?;
        Self::from_entries(params, entries)
    }

    /// Validated constructor from row-major entries.
    pub fn from_entries(params: &CodeParams, entries: Vec<u32>) -> Result<Self, ModelError> {
        if entries.len() != params.entries() {
            return Err(ModelError::LengthMismatch {
                expected: params.entries(),
                got: entries.len(),
            });
        }
        let m = PartitioningMatrix {
            gamma: params.gamma,
            kappa: params.kappa,
            entries,
        };
        if let Some((row, col, value)) = m.first_invalid(params) {
            return Err(ModelError::Entry { row, col, value });
        }
        Ok(m)
    }

    /// Unvalidated constructor for matrices whose entries are checked elsewhere.
    pub fn from_raw(gamma: usize, kappa: usize, entries: Vec<u32>) -> Self {
        assert_eq!(entries.len(), gamma * kappa, "entry count must be gamma*kappa");
        PartitioningMatrix {
            gamma,
            kappa,
            entries,
        }
    }

    pub fn filled(gamma: usize, kappa: usize, value: u32) -> Self {
        Self::from_raw(gamma, kappa, vec![value; gamma * kappa])
    }

    /// All cells whose value is outside vals(a) or whose shape disagrees with `params`.
    pub fn invalid_entries(&self, params: &CodeParams) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for i in 0..self.gamma {
            for j in 0..self.kappa {
                let v = self.get(i, j);
                if params.value_index(v).is_none() {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    fn first_invalid(&self, params: &CodeParams) -> Option<(usize, usize, u32)> {
        self.invalid_entries(params).into_iter().next()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.kappa + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        self.entries[i * self.kappa + j] = value;
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.kappa..(i + 1) * self.kappa]
    }

    /// Number of entries equal to each pattern value.
    pub fn value_counts(&self, params: &CodeParams) -> Vec<usize> {
        let mut counts = vec![0; params.pattern.len()];
        for &v in &self.entries {
            if let Some(k) = params.value_index(v) {
                counts[k] += 1;
            }
        }
        counts
    }
}

/// γ×κ matrix of circulant exponents, reduced modulo z.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiftingMatrix {
    gamma: usize,
    kappa: usize,
    circulant: usize,
    entries: Vec<u32>,
}

impl LiftingMatrix {
    pub fn new(
        gamma: usize,
        kappa: usize,
        circulant: usize,
        rows: &[Vec<u32>],
    ) -> Result<Self, ModelError> {
        if circulant == 0 {
            return Err(ModelError::Lifting {
                z: circulant,
                replicas: 1,
            });
        }
        let entries = flatten(rows, gamma, kappa)?;
        Ok(Self::from_raw(gamma, kappa, circulant, entries))
    }

    pub fn from_raw(gamma: usize, kappa: usize, circulant: usize, entries: Vec<u32>) -> Self {
        assert_eq!(entries.len(), gamma * kappa, "entry count must be gamma*kappa");
        let z = circulant as u32;
        LiftingMatrix {
            gamma,
            kappa,
            circulant,
            entries: entries.into_iter().map(|e| e % z).collect(),
        }
    }

    pub fn zeros(gamma: usize, kappa: usize, circulant: usize) -> Self {
        Self::from_raw(gamma, kappa, circulant, vec![0; gamma * kappa])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.kappa + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        self.entries[i * self.kappa + j] = value % self.circulant as u32;
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn circulant(&self) -> usize {
        self.circulant
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.kappa..(i + 1) * self.kappa]
    }
}

fn flatten(rows: &[Vec<u32>], gamma: usize, kappa: usize) -> Result<Vec<u32>, ModelError> {
    if rows.len() != gamma || rows.iter().any(|r| r.len() != kappa) {
        return Err(ModelError::Shape {
            rows: rows.len(),
            cols: rows.first().map_or(0, |r| r.len()),
            gamma,
            kappa,
        });
    }
    Ok(rows.iter().flatten().copied().collect())
}

/// Weights of the targeted objects in a partitioning objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveWeights {
    /// Weight w of one cycle-6 candidate relative to one cycle-8 candidate.
    Cycles { cycle6: f64 },
    /// Weights of 2-1-2, 2-1-3, 2-2-2 and 3-1-3 objects.
    Objects { w212: f64, w213: f64, w222: f64, w313: f64 },
}

impl ObjectiveWeights {
    pub fn validate(self) -> Result<Self, ModelError> {
        let ok = match self {
            ObjectiveWeights::Cycles { cycle6 } => cycle6 >= 0.0 && cycle6.is_finite(),
            ObjectiveWeights::Objects {
                w212,
                w213,
                w222,
                w313,
            } => [w212, w213, w222, w313]
                .iter()
                .all(|w| *w >= 0.0 && w.is_finite()),
        };
        if ok {
            Ok(self)
        } else {
            Err(ModelError::Distribution("objective weights must be non-negative"))
        }
    }
}

/// Empirical frequency of each pattern value in `p`.
pub fn distribution_from_matrix(
    p: &PartitioningMatrix,
    params: &CodeParams,
) -> Result<EdgeDistribution, ModelError> {
    if p.gamma() != params.gamma || p.kappa() != params.kappa {
        return Err(ModelError::Shape {
            rows: p.gamma(),
            cols: p.kappa(),
            gamma: params.gamma,
            kappa: params.kappa,
        });
    }
    if let Some((row, col, value)) = p.first_invalid(params) {
        return Err(ModelError::Entry { row, col, value });
    }
    let total = params.entries() as f64;
    let probs = p
        .value_counts(params)
        .into_iter()
        .map(|c| c as f64 / total)
        .collect();
    // Counts sum to γκ exactly, so only rounding can move the sum off 1.
    Ok(EdgeDistribution { probs })
}

/// Seeded generator shared by every randomized routine.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix whose entries are drawn independently from `p`.
pub fn sample_matrix<R: Rng>(
    params: &CodeParams,
    p: &EdgeDistribution,
    rng: &mut R,
) -> PartitioningMatrix {
    let entries = (0..params.entries())
        .map(|_| {
            let x: f64 = rng.random();
            let mut acc = 0.0;
            for (k, &pk) in p.probs().iter().enumerate() {
                acc += pk;
                if x < acc {
                    return params.pattern[k];
                }
            }
            *params.pattern.last().unwrap()
        })
        .collect();
    PartitioningMatrix::from_raw(params.gamma, params.kappa, entries)
}

/// Matrix holding exactly `counts[k]` copies of pattern value `a_k`, placed uniformly at random.
pub fn random_placement<R: Rng>(
    params: &CodeParams,
    counts: &[usize],
    rng: &mut R,
) -> PartitioningMatrix {
    assert_eq!(counts.len(), params.pattern.len());
    assert_eq!(counts.iter().sum::<usize>(), params.entries());
    let mut entries: Vec<u32> = counts
        .iter()
        .zip(&params.pattern)
        .flat_map(|(&c, &v)| core::iter::repeat_n(v, c))
        .collect();
    entries.shuffle(rng);
    PartitioningMatrix::from_raw(params.gamma, params.kappa, entries)
}

#[cfg(test)]
mod test {
    use super::*;
    use alloc::vec;

    #[test]
    fn params_accept_and_reject() {
        let p = CodeParams::new(3, 7, full_pattern(5), 13, 100).unwrap();
        assert_eq!((p.memory, p.pseudo_memory), (5, 5));
        assert!(p.is_full_memory());
        let p = CodeParams::new(3, 3, vec![0], 1, 1).unwrap();
        assert_eq!(p.memory, 0);
        assert!(matches!(
            CodeParams::new(3, 7, vec![0, 2, 1], 13, 100),
            Err(ModelError::Pattern(_))
        ));
        assert!(matches!(
            CodeParams::new(3, 7, vec![1, 2], 13, 100),
            Err(ModelError::Pattern(_))
        ));
        assert!(matches!(
            CodeParams::new(1, 7, vec![0, 1], 13, 100),
            Err(ModelError::Dimension { .. })
        ));
        assert!(matches!(
            CodeParams::new(3, 7, vec![0, 1], 0, 100),
            Err(ModelError::Lifting { .. })
        ));
        let raw = CodeParams {
            gamma: 3,
            kappa: 7,
            memory: 4,
            pseudo_memory: 3,
            pattern: vec![0, 1, 4],
            circulant: 7,
            replicas: 10,
        };
        assert!(matches!(validate_params(raw), Err(ModelError::Pattern(_))));
    }

    #[test]
    fn distribution_constructors() {
        assert!(EdgeDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(EdgeDistribution::new(vec![1.0, 0.0]).is_err());
        assert!(EdgeDistribution::new_allow_zero(vec![1.0, 0.0]).is_ok());
        assert!(EdgeDistribution::new(vec![0.5, 0.6]).is_err());
        let d = EdgeDistribution::normalized(&[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.probs(), &[0.4, 0.2, 0.4]);
    }

    #[test]
    fn discretize_examples() {
        let half = EdgeDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(discretize_distribution(&half, 4), vec![2, 2]);
        assert_eq!(discretize_distribution(&half, 3), vec![2, 1]);
        let one = EdgeDistribution::new(vec![1.0]).unwrap();
        assert_eq!(discretize_distribution(&one, 9), vec![9]);
    }

    /// Exhaustive search over all compositions of `total` into `parts` parts.
    fn brute_closest(p: &[f64], total: usize) -> (f64, Vec<usize>) {
        fn rec(
            p: &[f64],
            total: usize,
            left: usize,
            cur: &mut Vec<usize>,
            best: &mut (f64, Vec<usize>),
        ) {
            if cur.len() + 1 == p.len() {
                cur.push(left);
                let err: f64 = cur
                    .iter()
                    .zip(p)
                    .map(|(&u, &q)| (u as f64 / total as f64 - q).powi(2))
                    .sum();
                if err < best.0 - 1e-15 {
                    *best = (err, cur.clone());
                }
                cur.pop();
                return;
            }
            for x in 0..=left {
                cur.push(x);
                rec(p, total, left - x, cur, best);
                cur.pop();
            }
        }
        let mut best = (f64::INFINITY, Vec::new());
        rec(p, total, total, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn discretize_matches_exhaustive_search() {
        let p = [0.31, 0.13, 0.12, 0.13, 0.31];
        let (best_err, best) = brute_closest(&p, 21);
        let u = discretize_weights(&p, 21);
        let err: f64 = u
            .iter()
            .zip(&p)
            .map(|(&x, &q)| (x as f64 / 21.0 - q).powi(2))
            .sum();
        assert!((err - best_err).abs() < 1e-15, "{u:?} vs {best:?}");
        assert_eq!(u, best);
        assert_eq!(u, vec![6, 3, 3, 3, 6]);
    }

    #[test]
    fn empirical_distribution() {
        let params = CodeParams::new(3, 7, vec![0, 1], 7, 1).unwrap();
        let zero = PartitioningMatrix::filled(3, 7, 0);
        let d = distribution_from_matrix(&zero, &params).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
        let params = CodeParams::new(2, 2, vec![0, 1], 1, 1).unwrap();
        let m = PartitioningMatrix::new(&params, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(distribution_from_matrix(&m, &params).unwrap().probs(), &[0.5, 0.5]);
        let bad = PartitioningMatrix::from_raw(2, 2, vec![0, 1, 2, 0]);
        assert_eq!(
            distribution_from_matrix(&bad, &params),
            Err(ModelError::Entry {
                row: 1,
                col: 0,
                value: 2
            })
        );
    }

    #[test]
    fn placement_respects_counts() {
        let params = CodeParams::new(4, 6, vec![0, 1, 4], 7, 1).unwrap();
        let mut rng = rng_from_seed(9);
        let m = random_placement(&params, &[10, 8, 6], &mut rng);
        assert_eq!(m.value_counts(&params), vec![10, 8, 6]);
        assert!(m.invalid_entries(&params).is_empty());
    }

    #[test]
    fn lifting_entries_are_reduced() {
        let l = LiftingMatrix::new(2, 2, 7, &[vec![7, 8], vec![13, 2]]).unwrap();
        assert_eq!(l.entries(), &[0, 1, 6, 2]);
    }
}
