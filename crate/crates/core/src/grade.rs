//! Probability metrics for cycles and concatenated-cycle objects, their gradients, and the
//! gradient-descent distributor (GRADE).
//!
//! Every metric is the constant term of a product of coupling polynomials. For cycles the
//! products are univariate; for a general object `G` with cycle basis `S` each equivalence class
//! of edges contributes one factor `f(Π_s X_s^{δ_{ē,s}})`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::laurent::{
    coupling_poly, ml_from_factor, ml_mul, ExpVec, LaurentError, MonomialProduct, MultiLaurent,
    MAX_VARS,
};
use crate::math::{binom, falling};
use crate::model::{full_pattern, CodeParams, EdgeDistribution, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradeError {
    #[error("cycle-8 structure must be in 1..=6, got {0}")]
    BadStructure(u8),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("invalid object graph: {0}")]
    Object(&'static str),
    #[error("object list is empty")]
    NoObjects,
    #[error("pseudo-memory {pseudo_memory} exceeds memory {memory}")]
    Infeasible { memory: usize, pseudo_memory: usize },
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn cycle6_product() -> MonomialProduct {
    MonomialProduct::univariate(&[(1, 3), (-1, 3)])
}

/// Factor lists of the four distinct cycle-8 probabilities.
fn cycle8_products() -> [MonomialProduct; 4] {
    [
        MonomialProduct::univariate(&[(1, 2), (-1, 2)]),
        MonomialProduct::univariate(&[(2, 1), (-2, 1), (1, 2), (-1, 2)]),
        MonomialProduct::univariate(&[(2, 1), (1, 2), (-1, 4)]),
        MonomialProduct::univariate(&[(1, 4), (-1, 4)]),
    ]
}

/// Probability that a cycle-6 candidate is active: `[f³(X)f³(X⁻¹)]₀`.
pub fn p6(a: &[u32], p: &[f64]) -> f64 {
    cycle6_product().constant_term(a, p)
}

/// Probability that a cycle-8 candidate of structure `s` (1..=6) is active.
pub fn p8_structure(a: &[u32], p: &[f64], s: u8) -> Result<f64, GradeError> {
    let idx = match s {
        1..=3 => s as usize - 1,
        4..=6 => 3,
        _ => return Err(GradeError::BadStructure(s)),
    };
    Ok(cycle8_products()[idx].constant_term(a, p))
}

/// Number of cycle-6 candidates in a γ×κ all-one base matrix.
pub fn cycle6_candidates(gamma: usize, kappa: usize) -> f64 {
    6.0 * binom(gamma, 3) * binom(kappa, 3)
}

/// Candidate counts of the cycle-8 structure groups S1, S2, S3 and S4–S6.
///
/// A 4×4 footprint hosts 72 distinct cycles-8 (the Hamiltonian cycles of K₄,₄), which is the
/// coefficient used for S6.
pub fn n8_weights(gamma: usize, kappa: usize) -> [f64; 4] {
    let (g, k) = (gamma, kappa);
    [
        binom(g, 2) * binom(k, 2),
        3.0 * binom(g, 2) * binom(k, 3) + 3.0 * binom(g, 3) * binom(k, 2),
        18.0 * binom(g, 3) * binom(k, 3),
        6.0 * binom(g, 2) * binom(k, 4)
            + 6.0 * binom(g, 4) * binom(k, 2)
            + 36.0 * binom(g, 3) * binom(k, 4)
            + 36.0 * binom(g, 4) * binom(k, 3)
            + 72.0 * binom(g, 4) * binom(k, 4),
    ]
}

/// Expected number of active cycle-6 candidates.
pub fn n6(a: &[u32], p: &[f64], gamma: usize, kappa: usize) -> f64 {
    cycle6_candidates(gamma, kappa) * p6(a, p)
}

/// Expected number of active cycle-8 candidates.
pub fn n8(a: &[u32], p: &[f64], gamma: usize, kappa: usize) -> f64 {
    let w = n8_weights(gamma, kappa);
    cycle8_products()
        .iter()
        .zip(w)
        .map(|(prod, wi)| wi * prod.constant_term(a, p))
        .sum()
}

/// Objective minimized for cycles: `(w·N6 + N8) / C(γ,2)C(κ,2)`.
///
/// The normalization makes the S1 coefficient one, so the remaining coefficients are the
/// polynomial weights `w̄₁ = (2w/3)(γ−2)(κ−2)`, `w̄₂ = γ+κ−4`, `w̄₃ = 2(γ−2)(κ−2)` and `w̄₄`.
pub fn cycle_objective(a: &[u32], p: &[f64], gamma: usize, kappa: usize, w: f64) -> f64 {
    CycleEvaluator::new(gamma, kappa, Some(w)).value(a, p)
}

/// Mean-centered gradient of [`cycle_objective`].
pub fn grad_cycle_objective(a: &[u32], p: &[f64], gamma: usize, kappa: usize, w: f64) -> Vec<f64> {
    let mut g = CycleEvaluator::new(gamma, kappa, Some(w)).value_and_partials(a, p).1;
    center(&mut g);
    g
}

fn center(g: &mut [f64]) {
    if g.is_empty() {
        return;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    for x in g.iter_mut() {
        *x -= mean;
    }
}

/// Weighted sum of monomial products, the common shape of every GRADE objective.
#[derive(Debug, Clone)]
struct WeightedProducts {
    terms: Vec<(f64, MonomialProduct)>,
}

impl WeightedProducts {
    fn value(&self, a: &[u32], p: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.0 != 0.0)
            .map(|(w, prod)| w * prod.constant_term(a, p))
            .sum()
    }

    fn value_and_partials(&self, a: &[u32], p: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; p.len()];
        for (w, prod) in self.terms.iter().filter(|t| t.0 != 0.0) {
            let (v, g) = prod.constant_term_with_gradient(a, p);
            value += w * v;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += w * gi;
            }
        }
        (value, grad)
    }
}

struct CycleEvaluator;

impl CycleEvaluator {
    /// `None` selects the cycle-6-only objective `P6`.
    #[allow(clippy::new_ret_no_self)]
    fn new(gamma: usize, kappa: usize, w: Option<f64>) -> WeightedProducts {
        match w {
            None => WeightedProducts {
                terms: vec![(1.0, cycle6_product())],
            },
            Some(w) => {
                let w8 = n8_weights(gamma, kappa);
                let norm = w8[0];
                let mut terms = vec![(w * cycle6_candidates(gamma, kappa) / norm, cycle6_product())];
                for (wi, prod) in w8.iter().zip(cycle8_products()) {
                    terms.push((wi / norm, prod));
                }
                WeightedProducts { terms }
            }
        }
    }
}

/// Step size, stopping rule and projection floor of the distributor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradeConfig {
    /// Step size α of the normalized gradient step.
    pub step: f64,
    /// Stop once consecutive objective values differ by at most this much.
    pub tol: f64,
    pub max_iters: usize,
    /// Lower clamp applied to every entry before renormalizing.
    pub floor: f64,
    /// Stop after this many iterations without improving the best objective by more than `tol`.
    /// A fixed normalized step ends in a two-point oscillation around the minimizer, where the
    /// consecutive-difference rule never fires.
    pub patience: Option<usize>,
    /// Halve the step whenever a trial step would raise the objective, instead of taking it.
    /// Keeps the recorded objective sequence non-increasing.
    pub backtrack: bool,
}

impl Default for GradeConfig {
    fn default() -> Self {
        GradeConfig {
            step: 0.01,
            tol: 1e-9,
            max_iters: 100_000,
            floor: 1e-6,
            patience: Some(2_000),
            backtrack: true,
        }
    }
}

impl GradeConfig {
    pub fn validate(&self, components: usize) -> Result<(), GradeError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(GradeError::Config("step must be positive"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(GradeError::Config("tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(GradeError::Config("max_iters must be positive"));
        }
        if !(self.floor > 0.0 && self.floor * (components as f64) < 1.0) {
            return Err(GradeError::Config("floor must lie in (0, 1/(m_t+1))"));
        }
        Ok(())
    }
}

/// Why the descent loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Consecutive objective values agreed to within `tol`, the gradient vanished, or
    /// backtracking shrank the step to nothing.
    Tolerance,
    /// The best objective stopped improving for `patience` iterations.
    Stalled,
    /// `max_iters` was reached.
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeResult {
    /// Best iterate seen.
    pub distribution: EdgeDistribution,
    pub objective_initial: f64,
    /// Objective at `distribution`.
    pub objective_final: f64,
    pub iters: usize,
    pub stop: StopReason,
    /// Objective after every accepted step, starting with the uniform distribution.
    pub trace: Vec<f64>,
}

impl GradeResult {
    /// False only when the iteration cap ended the run.
    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIters
    }
}

/// Backtracking gives up once the step has shrunk by this factor.
const MIN_STEP_FRACTION: f64 = 1e-9;

fn descend(
    a: &[u32],
    config: &GradeConfig,
    objective: &WeightedProducts,
) -> Result<GradeResult, GradeError> {
    let n = a.len();
    config.validate(n)?;
    let mut p = vec![1.0 / n as f64; n];
    let (mut v, mut g) = objective.value_and_partials(a, &p);
    let initial = v;
    let mut best = (v, p.clone());
    let mut since_best = 0usize;
    let mut trace = vec![v];
    let mut iters = 0;
    let mut step = config.step;
    let stop = loop {
        if iters >= config.max_iters {
            break StopReason::MaxIters;
        }
        iters += 1;
        center(&mut g);
        let norm = libm::sqrt(g.iter().map(|x| x * x).sum::<f64>());
        if norm <= 1e-300 {
            break StopReason::Tolerance;
        }
        let mut q: Vec<f64> = p
            .iter()
            .zip(&g)
            .map(|(pi, gi)| (pi - step * gi / norm).max(config.floor))
            .collect();
        let total: f64 = q.iter().sum();
        for qi in q.iter_mut() {
            *qi /= total;
        }
        let (v_new, g_new) = objective.value_and_partials(a, &q);
        if config.backtrack && v_new > v {
            step *= 0.5;
            if step < config.step * MIN_STEP_FRACTION {
                break StopReason::Tolerance;
            }
            continue;
        }
        p = q;
        trace.push(v_new);
        g = g_new;
        if v_new < best.0 - config.tol {
            since_best = 0;
        } else {
            since_best += 1;
        }
        if v_new < best.0 {
            best = (v_new, p.clone());
        }
        let settled = libm::fabs(v - v_new) <= config.tol;
        v = v_new;
        if settled {
            break StopReason::Tolerance;
        }
        if config.patience.is_some_and(|k| since_best >= k) {
            break StopReason::Stalled;
        }
    };
    let distribution = EdgeDistribution::new(best.1)?;
    Ok(GradeResult {
        distribution,
        objective_initial: initial,
        objective_final: best.0,
        iters,
        stop,
        trace,
    })
}

/// Objective used by [`grade_cycles`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleObjective {
    /// Minimize `P6` alone.
    Cycle6Only,
    /// Minimize `(w·N6 + N8)/C(γ,2)C(κ,2)`.
    Weighted { w: f64 },
}

/// Default weight of a cycle-6 candidate relative to a cycle-8 candidate.
pub const DEFAULT_CYCLE6_WEIGHT: f64 = 100.0;

/// Gradient-descent distributor for cycles.
pub fn grade_cycles(
    params: &CodeParams,
    config: &GradeConfig,
    objective: CycleObjective,
) -> Result<GradeResult, GradeError> {
    let w = match objective {
        CycleObjective::Cycle6Only => None,
        CycleObjective::Weighted { w } if w >= 0.0 && w.is_finite() => Some(w),
        CycleObjective::Weighted { .. } => return Err(GradeError::Config("w must be non-negative")),
    };
    let eval = CycleEvaluator::new(params.gamma, params.kappa, w);
    descend(&params.pattern, config, &eval)
}

/// A variable node or check node of an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Vn(usize),
    Cn(usize),
}

/// A cycle `v₀ c₀ v₁ c₁ … v_{g−1} c_{g−1} v₀`, where `cns[t]` joins `vns[t]` and `vns[t+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisCycle {
    pub vns: Vec<usize>,
    pub cns: Vec<usize>,
}

/// A connected bipartite object together with a cycle basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectGraph {
    nv: usize,
    nc: usize,
    edges: Vec<(usize, usize)>,
    basis: Vec<BasisCycle>,
    /// `incidence[e][s]` is `δ_{e,s}`.
    incidence: Vec<ExpVec>,
}

impl ObjectGraph {
    /// Object with a fundamental cycle basis taken from a breadth-first spanning tree.
    pub fn new(nv: usize, nc: usize, edges: Vec<(usize, usize)>) -> Result<Self, GradeError> {
        let basis = fundamental_cycles(nv, nc, &edges)?;
        Self::with_basis(nv, nc, edges, basis)
    }

    pub fn with_basis(
        nv: usize,
        nc: usize,
        edges: Vec<(usize, usize)>,
        basis: Vec<BasisCycle>,
    ) -> Result<Self, GradeError> {
        check_edges(nv, nc, &edges)?;
        if !is_connected(nv, nc, &edges) {
            return Err(GradeError::Object("graph is not connected"));
        }
        if basis.len() + nv + nc != edges.len() + 1 {
            return Err(GradeError::Object("basis size must equal |E| - |V| - |C| + 1"));
        }
        if basis.len() > MAX_VARS {
            return Err(GradeError::Laurent(LaurentError::TooManyVariables(basis.len())));
        }
        let mut incidence = vec![[0i32; MAX_VARS]; edges.len()];
        for (s, cyc) in basis.iter().enumerate() {
            let g = cyc.vns.len();
            if g < 2 || cyc.cns.len() != g {
                return Err(GradeError::Object("basis cycle must alternate VNs and CNs"));
            }
            for t in 0..g {
                let c = cyc.cns[t];
                for (v, sign) in [(cyc.vns[t], 1), (cyc.vns[(t + 1) % g], -1)] {
                    let e = edges
                        .iter()
                        .position(|&x| x == (v, c))
                        .ok_or(GradeError::Object("basis cycle uses a missing edge"))?;
                    incidence[e][s] += sign;
                }
            }
        }
        if rank(&incidence, basis.len()) != basis.len() {
            return Err(GradeError::Object("basis cycles are dependent"));
        }
        Ok(ObjectGraph {
            nv,
            nc,
            edges,
            basis,
            incidence,
        })
    }

    /// A single cycle of length `2g`.
    pub fn cycle(g: usize) -> Result<Self, GradeError> {
        if g < 2 {
            return Err(GradeError::Object("a cycle needs at least two VNs"));
        }
        let mut edges = Vec::new();
        for t in 0..g {
            edges.push((t, t));
            edges.push(((t + 1) % g, t));
        }
        let basis = vec![BasisCycle {
            vns: (0..g).collect(),
            cns: (0..g).collect(),
        }];
        Self::with_basis(g, g, edges, basis)
    }

    /// Two cycles sharing a path: the degree-3 VNs 0 and 1 are joined by paths of types
    /// `types[0]`, `types[1]`, `types[2]` (a type-l path has l CNs). The basis consists of the
    /// middle path followed by the first path reversed, and the middle path followed by the
    /// last path reversed, so edges of the shared path carry equal signs in both cycles.
    pub fn concatenated(types: [usize; 3]) -> Result<Self, GradeError> {
        if types.iter().any(|&l| !(1..=3).contains(&l)) {
            return Err(GradeError::Object("path types must be 1, 2 or 3"));
        }
        if types.iter().filter(|&&l| l == 1).count() > 1 {
            return Err(GradeError::Object("at most one path may be of type 1"));
        }
        let (mut nv, mut nc) = (2, 0);
        let mut edges = Vec::new();
        let mut paths: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for &l in &types {
            let mut vns = vec![0];
            for _ in 1..l {
                vns.push(nv);
                nv += 1;
            }
            vns.push(1);
            let cns: Vec<usize> = (nc..nc + l).collect();
            nc += l;
            for t in 0..l {
                edges.push((vns[t], cns[t]));
                edges.push((vns[t + 1], cns[t]));
            }
            paths.push((vns, cns));
        }
        let join = |fwd: &(Vec<usize>, Vec<usize>), back: &(Vec<usize>, Vec<usize>)| {
            let mut vns: Vec<usize> = fwd.0[..fwd.0.len() - 1].to_vec();
            vns.extend(back.0[1..].iter().rev());
            let mut cns = fwd.1.clone();
            cns.extend(back.1.iter().rev());
            BasisCycle { vns, cns }
        };
        let basis = vec![join(&paths[1], &paths[0]), join(&paths[1], &paths[2])];
        Self::with_basis(nv, nc, edges, basis)
    }

    pub fn num_vns(&self) -> usize {
        self.nv
    }

    pub fn num_cns(&self) -> usize {
        self.nc
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn basis(&self) -> &[BasisCycle] {
        &self.basis
    }

    /// `δ_{e,s}` for edge `e` and basis cycle `s`.
    pub fn incidence(&self, e: usize, s: usize) -> i32 {
        self.incidence[e][s]
    }

    fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.nc]; self.nv];
        for &(v, c) in &self.edges {
            adj[v][c] = true;
        }
        adj
    }

    /// Edge-class monomials of a prototype class: equivalent edges merge into one factor.
    pub fn class_product(&self, class: &PrototypeClass) -> MonomialProduct {
        let mut merged: BTreeMap<(usize, usize), ExpVec> = BTreeMap::new();
        for (e, &(v, c)) in self.edges.iter().enumerate() {
            let key = (class.vn_partition[v], class.cn_partition[c]);
            let slot = merged.entry(key).or_insert([0; MAX_VARS]);
            for s in 0..MAX_VARS {
                slot[s] += self.incidence[e][s];
            }
        }
        let factors: Vec<(ExpVec, u32)> = merged.into_values().map(|e| (e, 1)).collect();
        MonomialProduct::new(self.basis.len(), &factors).expect("basis size checked on build")
    }
}

fn check_edges(nv: usize, nc: usize, edges: &[(usize, usize)]) -> Result<(), GradeError> {
    if edges.iter().any(|&(v, c)| v >= nv || c >= nc) {
        return Err(GradeError::Object("edge endpoint out of range"));
    }
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(GradeError::Object("repeated edge"));
    }
    Ok(())
}

fn is_connected(nv: usize, nc: usize, edges: &[(usize, usize)]) -> bool {
    if nv + nc == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..nv + nc).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for &(v, c) in edges {
        let (a, b) = (find(&mut parent, v), find(&mut parent, nv + c));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..nv + nc).all(|x| find(&mut parent, x) == root)
}

fn fundamental_cycles(
    nv: usize,
    nc: usize,
    edges: &[(usize, usize)],
) -> Result<Vec<BasisCycle>, GradeError> {
    check_edges(nv, nc, edges)?;
    if !is_connected(nv, nc, edges) {
        return Err(GradeError::Object("graph is not connected"));
    }
    // Combined indexing: VN v is v, CN c is nv + c.
    let n = nv + nc;
    let mut adj = vec![Vec::new(); n];
    for (e, &(v, c)) in edges.iter().enumerate() {
        adj[v].push((nv + c, e));
        adj[nv + c].push((v, e));
    }
    let mut parent = vec![usize::MAX; n];
    let mut tree_edge = vec![false; edges.len()];
    let mut seen = vec![false; n];
    let mut queue = alloc::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &(y, e) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                tree_edge[e] = true;
                queue.push_back(y);
            }
        }
    }
    let root_path = |mut x: usize| {
        let mut out = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            out.push(x);
        }
        out
    };
    let mut basis = Vec::new();
    for (e, &(v, c)) in edges.iter().enumerate() {
        if tree_edge[e] {
            continue;
        }
        let pv = root_path(v);
        let pc = root_path(nv + c);
        let mut common = 0;
        while common < pv.len()
            && common < pc.len()
            && pv[pv.len() - 1 - common] == pc[pc.len() - 1 - common]
        {
            common += 1;
        }
        // v → … → lca → … → c, closed by the non-tree edge (v, c).
        let mut seq: Vec<usize> = pv[..pv.len() - common + 1].to_vec();
        seq.extend(pc[..pc.len() - common].iter().rev());
        let vns = seq.iter().step_by(2).copied().collect();
        let cns = seq.iter().skip(1).step_by(2).map(|&x| x - nv).collect();
        basis.push(BasisCycle { vns, cns });
    }
    Ok(basis)
}

fn rank(rows: &[ExpVec], cols: usize) -> usize {
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r[..cols].iter().map(|&x| x as f64).collect())
        .collect();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| libm::fabs(m[i][c]) > 1e-9) else {
            continue;
        };
        m.swap(r, piv);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                for k in 0..cols {
                    m[i][k] -= f * m[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// Equivalence partitions of an object's VNs and CNs, written as restricted growth strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PrototypeClass {
    pub vn_partition: Vec<usize>,
    pub cn_partition: Vec<usize>,
    /// Number of distinct permutations of the classes induced by automorphisms of the object
    /// that preserve both partitions.
    pub aut_order: usize,
}

impl PrototypeClass {
    /// Every node in its own class.
    pub fn all_distinct(g: &ObjectGraph) -> Self {
        let automorphisms = automorphisms(g);
        let vn: Vec<usize> = (0..g.nv).collect();
        let cn: Vec<usize> = (0..g.nc).collect();
        let aut_order = class_symmetry(&automorphisms, &vn, &cn);
        PrototypeClass {
            vn_partition: vn,
            cn_partition: cn,
            aut_order,
        }
    }

    pub fn num_vn_classes(&self) -> usize {
        self.vn_partition.iter().max().map_or(0, |m| m + 1)
    }

    pub fn num_cn_classes(&self) -> usize {
        self.cn_partition.iter().max().map_or(0, |m| m + 1)
    }

    /// Number of prototypes of this class in a γ×κ base matrix.
    pub fn cardinality(&self, gamma: usize, kappa: usize) -> f64 {
        falling(kappa, self.num_vn_classes()) * falling(gamma, self.num_cn_classes())
            / self.aut_order as f64
    }
}

type Automorphism = (Vec<usize>, Vec<usize>);

/// All side-preserving automorphisms of the object, by backtracking.
fn automorphisms(g: &ObjectGraph) -> Vec<Automorphism> {
    let adj = g.adjacency();
    let vdeg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let cdeg: Vec<usize> = (0..g.nc)
        .map(|c| adj.iter().filter(|r| r[c]).count())
        .collect();
    let mut order: Vec<Node> = Vec::new();
    let mut placed_v = vec![false; g.nv];
    let mut placed_c = vec![false; g.nc];
    let mut queue = alloc::collections::VecDeque::from([Node::Vn(0)]);
    placed_v[0] = true;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        match x {
            Node::Vn(v) => {
                for c in 0..g.nc {
                    if adj[v][c] && !placed_c[c] {
                        placed_c[c] = true;
                        queue.push_back(Node::Cn(c));
                    }
                }
            }
            Node::Cn(c) => {
                for v in 0..g.nv {
                    if adj[v][c] && !placed_v[v] {
                        placed_v[v] = true;
                        queue.push_back(Node::Vn(v));
                    }
                }
            }
        }
    }
    struct State<'a> {
        adj: &'a [Vec<bool>],
        vdeg: &'a [usize],
        cdeg: &'a [usize],
        order: &'a [Node],
        vmap: Vec<usize>,
        cmap: Vec<usize>,
        vused: Vec<bool>,
        cused: Vec<bool>,
        out: Vec<Automorphism>,
    }
    fn rec(st: &mut State, depth: usize) {
        if depth == st.order.len() {
            st.out.push((st.vmap.clone(), st.cmap.clone()));
            return;
        }
        match st.order[depth] {
            Node::Vn(v) => {
                for img in 0..st.vmap.len() {
                    if st.vused[img] || st.vdeg[img] != st.vdeg[v] {
                        continue;
                    }
                    let ok = (0..st.cmap.len()).all(|c| {
                        st.cmap[c] == usize::MAX || st.adj[v][c] == st.adj[img][st.cmap[c]]
                    });
                    if ok {
                        st.vmap[v] = img;
                        st.vused[img] = true;
                        rec(st, depth + 1);
                        st.vused[img] = false;
                        st.vmap[v] = usize::MAX;
                    }
                }
            }
            Node::Cn(c) => {
                for img in 0..st.cmap.len() {
                    if st.cused[img] || st.cdeg[img] != st.cdeg[c] {
                        continue;
                    }
                    let ok = (0..st.vmap.len()).all(|v| {
                        st.vmap[v] == usize::MAX || st.adj[v][c] == st.adj[st.vmap[v]][img]
                    });
                    if ok {
                        st.cmap[c] = img;
                        st.cused[img] = true;
                        rec(st, depth + 1);
                        st.cused[img] = false;
                        st.cmap[c] = usize::MAX;
                    }
                }
            }
        }
    }
    let mut st = State {
        adj: &adj,
        vdeg: &vdeg,
        cdeg: &cdeg,
        order: &order,
        vmap: vec![usize::MAX; g.nv],
        cmap: vec![usize::MAX; g.nc],
        vused: vec![false; g.nv],
        cused: vec![false; g.nc],
        out: Vec::new(),
    };
    rec(&mut st, 0);
    st.out
}

/// Relabels so that classes are numbered by first appearance.
fn normalize_rgs(labels: &[usize]) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Partition labels after moving node `x` to `perm[x]`.
fn image(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    let mut out = vec![0; labels.len()];
    for (x, &l) in labels.iter().enumerate() {
        out[perm[x]] = l;
    }
    normalize_rgs(&out)
}

/// `|Aut(G|𝒱,𝒞)| / |K|`, where `K` fixes every class.
fn class_symmetry(auts: &[Automorphism], vn: &[usize], cn: &[usize]) -> usize {
    let mut stabilizer = 0;
    let mut kernel = 0;
    for (vp, cp) in auts {
        if image(vn, vp) == vn && image(cn, cp) == cn {
            stabilizer += 1;
            let fixes = (0..vn.len()).all(|v| vn[vp[v]] == vn[v])
                && (0..cn.len()).all(|c| cn[cp[c]] == cn[c]);
            if fixes {
                kernel += 1;
            }
        }
    }
    stabilizer / kernel
}

/// Restricted growth strings of all partitions where `conflict[x][y]` pairs stay apart.
fn valid_partitions(n: usize, conflict: &[Vec<bool>], max_classes: usize) -> Vec<Vec<usize>> {
    fn rec(
        x: usize,
        labels: &mut Vec<usize>,
        used: usize,
        conflict: &[Vec<bool>],
        max_classes: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if x == conflict.len() {
            out.push(labels.clone());
            return;
        }
        for l in 0..=used.min(max_classes.saturating_sub(1)) {
            if l == used && used >= max_classes {
                break;
            }
            if (0..x).any(|y| labels[y] == l && conflict[x][y]) {
                continue;
            }
            labels.push(l);
            rec(x + 1, labels, used.max(l + 1), conflict, max_classes, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, &mut Vec::with_capacity(n), 0, conflict, max_classes, &mut out);
    }
    out
}

/// All non-isomorphic prototype classes with at most κ VN classes and γ CN classes.
///
/// Two VNs sharing a CN (or two CNs sharing a VN) are never equivalent. Partition pairs related
/// by an automorphism of the object describe the same set of prototypes, so only the
/// lexicographically smallest representative is kept.
pub fn enumerate_prototype_classes(g: &ObjectGraph, gamma: usize, kappa: usize) -> Vec<PrototypeClass> {
    let adj = g.adjacency();
    let vconf: Vec<Vec<bool>> = (0..g.nv)
        .map(|x| (0..g.nv).map(|y| x != y && (0..g.nc).any(|c| adj[x][c] && adj[y][c])).collect())
        .collect();
    let cconf: Vec<Vec<bool>> = (0..g.nc)
        .map(|x| (0..g.nc).map(|y| x != y && (0..g.nv).any(|v| adj[v][x] && adj[v][y])).collect())
        .collect();
    let vparts = valid_partitions(g.nv, &vconf, kappa);
    let cparts = valid_partitions(g.nc, &cconf, gamma);
    let auts = automorphisms(g);
    let mut out = Vec::new();
    for vp in &vparts {
        for cp in &cparts {
            let canonical = auts.iter().all(|(vperm, cperm)| {
                let img = (image(vp, vperm), image(cp, cperm));
                (vp, cp) <= (&img.0, &img.1)
            });
            if canonical {
                out.push(PrototypeClass {
                    vn_partition: vp.clone(),
                    cn_partition: cp.clone(),
                    aut_order: class_symmetry(&auts, vp, cp),
                });
            }
        }
    }
    out
}

/// `h(X; G|𝒱,𝒞)` as an explicit multivariate polynomial.
pub fn characteristic_poly_prototype(
    g: &ObjectGraph,
    class: &PrototypeClass,
    a: &[u32],
    p: &[f64],
) -> Result<MultiLaurent, GradeError> {
    let f = coupling_poly(a, p)?;
    let prod = g.class_product(class);
    let mut acc = MultiLaurent::one(g.basis.len())?;
    for (e, n) in prod.factors() {
        let factor = ml_from_factor(&e[..g.basis.len()], &f)?;
        for _ in 0..*n {
            acc = ml_mul(&acc, &factor)?;
        }
    }
    Ok(acc)
}

/// Activation probability of any prototype in `class`.
pub fn object_probability(g: &ObjectGraph, class: &PrototypeClass, a: &[u32], p: &[f64]) -> f64 {
    g.class_product(class).constant_term(a, p)
}

/// Partial derivatives of [`object_probability`] with respect to each `p_t`.
pub fn grad_object_probability(
    g: &ObjectGraph,
    class: &PrototypeClass,
    a: &[u32],
    p: &[f64],
) -> Vec<f64> {
    g.class_product(class).constant_term_with_gradient(a, p).1
}

/// Expected number of active prototypes of `g` in a γ×κ base matrix.
pub fn expected_object_count(g: &ObjectGraph, gamma: usize, kappa: usize, a: &[u32], p: &[f64]) -> f64 {
    enumerate_prototype_classes(g, gamma, kappa)
        .iter()
        .map(|c| c.cardinality(gamma, kappa) * object_probability(g, c, a, p))
        .sum()
}

/// Which prototype classes enter the object objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectMode {
    /// Only the class with no equivalent edges, weighted by one.
    #[default]
    Typical,
    /// Every class, weighted by its cardinality.
    Full,
}

fn object_products(
    objects: &[(ObjectGraph, f64)],
    gamma: usize,
    kappa: usize,
    mode: ObjectMode,
) -> Result<WeightedProducts, GradeError> {
    if objects.is_empty() {
        return Err(GradeError::NoObjects);
    }
    let mut terms = Vec::new();
    for (g, w) in objects {
        if !(*w >= 0.0 && w.is_finite()) {
            return Err(GradeError::Config("object weights must be non-negative"));
        }
        match mode {
            ObjectMode::Typical => {
                terms.push((*w, g.class_product(&PrototypeClass::all_distinct(g))));
            }
            ObjectMode::Full => {
                for class in enumerate_prototype_classes(g, gamma, kappa) {
                    terms.push((w * class.cardinality(gamma, kappa), g.class_product(&class)));
                }
            }
        }
    }
    Ok(WeightedProducts { terms })
}

/// Weighted object objective at `p`.
pub fn object_objective(
    objects: &[(ObjectGraph, f64)],
    gamma: usize,
    kappa: usize,
    mode: ObjectMode,
    a: &[u32],
    p: &[f64],
) -> Result<f64, GradeError> {
    Ok(object_products(objects, gamma, kappa, mode)?.value(a, p))
}

/// Gradient-descent distributor for a weighted list of objects.
pub fn grade_objects(
    objects: &[(ObjectGraph, f64)],
    params: &CodeParams,
    config: &GradeConfig,
    mode: ObjectMode,
) -> Result<GradeResult, GradeError> {
    let eval = object_products(objects, params.gamma, params.kappa, mode)?;
    descend(&params.pattern, config, &eval)
}

/// What a coupling-pattern search minimizes.
#[derive(Debug, Clone)]
pub enum PatternObjective {
    Cycles { gamma: usize, kappa: usize, objective: CycleObjective },
    Objects { gamma: usize, kappa: usize, objects: Vec<(ObjectGraph, f64)>, mode: ObjectMode },
}

/// All patterns `0 = a_0 < … < a_{m_t} = m`, in lexicographic order.
pub fn coupling_patterns(memory: usize, pseudo_memory: usize) -> Result<Vec<Vec<u32>>, GradeError> {
    if pseudo_memory > memory || (pseudo_memory == 0 && memory > 0) {
        return Err(GradeError::Infeasible {
            memory,
            pseudo_memory,
        });
    }
    if memory == 0 {
        return Ok(vec![vec![0]]);
    }
    let mut out = Vec::new();
    let inner = pseudo_memory - 1;
    let mut pick: Vec<u32> = (1..=inner as u32).collect();
    loop {
        let mut a = vec![0];
        a.extend(&pick);
        a.push(memory as u32);
        out.push(a);
        // Advance the combination of inner values drawn from 1..m-1.
        let mut k = inner;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if pick[k] < (memory - inner + k) as u32 {
                pick[k] += 1;
                for t in k + 1..inner {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Runs GRADE for one pattern under a search objective.
pub fn evaluate_pattern(
    pattern: &[u32],
    objective: &PatternObjective,
    config: &GradeConfig,
) -> Result<GradeResult, GradeError> {
    let (gamma, kappa) = match objective {
        PatternObjective::Cycles { gamma, kappa, .. } | PatternObjective::Objects { gamma, kappa, .. } => {
            (*gamma, *kappa)
        }
    };
    let params = CodeParams::new(gamma, kappa, pattern.to_vec(), 1, 1)?;
    match objective {
        PatternObjective::Cycles { objective, .. } => grade_cycles(&params, config, *objective),
        PatternObjective::Objects { objects, mode, .. } => grade_objects(objects, &params, config, *mode),
    }
}

/// Relative tolerance under which two achieved objectives count as tied.
pub const PATTERN_TIE_TOLERANCE: f64 = 1e-9;

/// Index of the winning pattern; `results` must follow [`coupling_patterns`] order so that ties
/// resolve to the lexicographically smallest pattern.
pub fn select_pattern(results: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in results.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) => {
                let scale = libm::fabs(results[b]).max(libm::fabs(v)).max(1e-300);
                if v < results[b] - PATTERN_TIE_TOLERANCE * scale {
                    best = Some(i);
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSearch {
    pub pattern: Vec<u32>,
    pub result: GradeResult,
    /// Every pattern with its best achieved objective, in lexicographic order.
    pub ranking: Vec<(Vec<u32>, f64)>,
}

/// Exhaustive search over coupling patterns, running GRADE on each.
pub fn find_optimal_coupling_pattern(
    memory: usize,
    pseudo_memory: usize,
    objective: &PatternObjective,
    config: &GradeConfig,
) -> Result<PatternSearch, GradeError> {
    let patterns = coupling_patterns(memory, pseudo_memory)?;
    let mut results = Vec::with_capacity(patterns.len());
    for a in &patterns {
        results.push(evaluate_pattern(a, objective, config)?);
    }
    let values: Vec<f64> = results.iter().map(|r| r.objective_final).collect();
    let best = select_pattern(&values).expect("at least one pattern");
    Ok(PatternSearch {
        pattern: patterns[best].clone(),
        result: results.swap_remove(best),
        ranking: patterns.into_iter().zip(values).collect(),
    })
}

/// The concatenated-cycle objects targeted by the fine-grained optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    T212,
    T213,
    T222,
    T313,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [ObjectKind::T212, ObjectKind::T213, ObjectKind::T222, ObjectKind::T313];

    pub fn path_types(self) -> [usize; 3] {
        match self {
            ObjectKind::T212 => [2, 1, 2],
            ObjectKind::T213 => [2, 1, 3],
            ObjectKind::T222 => [2, 2, 2],
            ObjectKind::T313 => [3, 1, 3],
        }
    }

    pub fn graph(self) -> ObjectGraph {
        ObjectGraph::concatenated(self.path_types()).expect("fixed path types are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::T212 => "2-1-2",
            ObjectKind::T213 => "2-1-3",
            ObjectKind::T222 => "2-2-2",
            ObjectKind::T313 => "3-1-3",
        }
    }
}

/// Uniform distribution over the full pattern of memory `m`, a convenience for tests and reports.
pub fn uniform_full(memory: usize) -> (Vec<u32>, Vec<f64>) {
    let a = full_pattern(memory);
    let p = vec![1.0 / (memory + 1) as f64; memory + 1];
    (a, p)
}
