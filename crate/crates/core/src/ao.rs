//! Semi-greedy partitioning optimizers, an exhaustive oracle and a greedy lifting optimizer.
//!
//! Both partitioning optimizers start from a random placement of the discretized edge
//! distribution and sweep the entries in row-major order. For each entry every pattern value
//! is tried; a value is kept when it strictly lowers the objective and the deviation budget
//! admits one more change toward it. Sweeps repeat until a full pass changes nothing.
//!
//! The cycle optimizer scores a trial through the candidates passing the edited cell only,
//! which is exact for the global weighted count. The object optimizer keeps per-column-pair path
//! tables and updates them incrementally.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::model::{
    discretize_distribution, random_placement, rng_from_seed, CodeParams, EdgeDistribution,
    LiftingMatrix, ModelError, PartitioningMatrix,
};
use crate::topology::{
    enumerate_cycle4, enumerate_cycle6, enumerate_cycle8, CandidateLists, ObjectCounts,
    ObjectTables, Path, TopologyError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AoError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{0} partitioning matrices exceed the exhaustive search limit")]
    TooLarge(f64),
    #[error("distribution has {got} entries but the pattern has {expected}")]
    Distribution { expected: usize, got: usize },
    #[error("at least one restart is required")]
    NoRestarts,
}

/// Deviation budget: at most `d1` accepted changes in total and `d2` toward any single value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    deviation: Vec<usize>,
}

impl SearchBudget {
    pub fn new(d1: Option<usize>, d2: Option<usize>, values: usize) -> Self {
        SearchBudget {
            d1,
            d2,
            deviation: vec![0; values],
        }
    }

    pub fn unlimited(values: usize) -> Self {
        Self::new(None, None, values)
    }

    /// `d1 = ⌈γκ/10⌉`, `d2 = ⌈d1/2⌉`.
    pub fn default_for(params: &CodeParams) -> Self {
        let (d1, d2) = default_limits(params);
        Self::new(Some(d1), Some(d2), params.pattern.len())
    }

    /// Running count of accepted changes toward each pattern value.
    pub fn deviation(&self) -> &[usize] {
        &self.deviation
    }

    pub fn l1(&self) -> usize {
        self.deviation.iter().sum()
    }

    pub fn linf(&self) -> usize {
        self.deviation.iter().copied().max().unwrap_or(0)
    }

    /// Whether one more change toward value index `k` stays within budget.
    pub fn admits(&self, k: usize) -> bool {
        self.d1.is_none_or(|d1| self.l1() < d1) && self.d2.is_none_or(|d2| self.deviation[k] < d2)
    }

    fn record(&mut self, k: usize) {
        self.deviation[k] += 1;
    }
}

fn default_limits(params: &CodeParams) -> (usize, usize) {
    let d1 = params.entries().div_ceil(10);
    (d1, d1.div_ceil(2))
}

/// Budget limits, restart count and acceptance rule shared by both optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AoConfig {
    /// `None` lifts the corresponding limit.
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    pub restarts: usize,
    /// Scan every value of an entry and keep the best one instead of the first improvement.
    pub best_improvement: bool,
}

pub const DEFAULT_RESTARTS: usize = 20;

impl AoConfig {
    /// Default budget for `params`, 20 restarts, first-improvement acceptance.
    pub fn for_params(params: &CodeParams) -> Self {
        let (d1, d2) = default_limits(params);
        AoConfig {
            d1: Some(d1),
            d2: Some(d2),
            restarts: DEFAULT_RESTARTS,
            best_improvement: false,
        }
    }

    pub fn unlimited() -> Self {
        AoConfig {
            d1: None,
            d2: None,
            restarts: DEFAULT_RESTARTS,
            best_improvement: false,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn budget(&self, values: usize) -> SearchBudget {
        SearchBudget::new(self.d1, self.d2, values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoResult {
    pub matrix: PartitioningMatrix,
    /// Weighted count of the returned matrix.
    pub objective: f64,
    /// Objective of the random initialization followed by the objective after every accepted move.
    pub trace: Vec<f64>,
    /// Seed of the restart that produced `matrix`; rerunning one restart with it replays the run.
    pub seed: u64,
    /// Discretized value counts the search started from.
    pub initial_counts: Vec<usize>,
    /// Accepted changes toward each pattern value.
    pub deviation: Vec<usize>,
}

/// Seeds of the individual restarts derived from a master seed.
pub fn restart_seeds(seed: u64, restarts: usize) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    (0..restarts)
        .map(|r| if r == 0 { seed } else { rng.next_u64() })
        .collect()
}

/// Lowest objective wins; ties keep the earlier restart.
pub fn best_of(results: Vec<AoResult>) -> Option<AoResult> {
    results
        .into_iter()
        .reduce(|best, r| if r.objective < best.objective { r } else { best })
}

fn check_distribution(params: &CodeParams, p: &EdgeDistribution) -> Result<(), AoError> {
    if p.len() != params.pattern.len() {
        return Err(AoError::Distribution {
            expected: params.pattern.len(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Anything the sweep can score: the current matrix is edited in place by the sweep.
trait LocalObjective {
    /// Objective restricted to what a change of `(i, j)` can affect, under the current matrix.
    fn local(&mut self, p: &PartitioningMatrix, i: usize, j: usize) -> f64;
    /// Called after `(i, j)` changed from `old`.
    fn changed(&mut self, _p: &PartitioningMatrix, _i: usize, _j: usize, _old: u32) {}
    fn total(&self, p: &PartitioningMatrix) -> f64;
}

fn sweep_to_fixpoint<O: LocalObjective>(
    params: &CodeParams,
    p: &mut PartitioningMatrix,
    objective: &mut O,
    budget: &mut SearchBudget,
    best_improvement: bool,
) -> Vec<f64> {
    let mut current = objective.total(p);
    let mut trace = vec![current];
    loop {
        let mut changed = false;
        for i in 0..params.gamma {
            for j in 0..params.kappa {
                let mut n = objective.local(p, i, j);
                let mut best: Option<(usize, f64)> = None;
                for (k, &v) in params.pattern.iter().enumerate() {
                    let old = p.get(i, j);
                    if v == old || !budget.admits(k) {
                        continue;
                    }
                    p.set(i, j, v);
                    objective.changed(p, i, j, old);
                    let t = objective.local(p, i, j);
                    let better = if best_improvement {
                        t < best.map_or(n, |b| b.1)
                    } else {
                        t < n
                    };
                    if better && !best_improvement {
                        budget.record(k);
                        current += t - n;
                        trace.push(current);
                        n = t;
                        changed = true;
                        continue;
                    }
                    if better {
                        best = Some((k, t));
                    }
                    p.set(i, j, old);
                    objective.changed(p, i, j, v);
                }
                if let Some((k, t)) = best {
                    let old = p.get(i, j);
                    p.set(i, j, params.pattern[k]);
                    objective.changed(p, i, j, old);
                    budget.record(k);
                    current += t - n;
                    trace.push(current);
                    changed = true;
                }
            }
        }
        if !changed {
            return trace;
        }
    }
}

/// Candidate lists shared by every restart of the cycle optimizer.
#[derive(Debug, Clone)]
pub struct CycleSearch {
    params: CodeParams,
    cycle6_weight: f64,
    lists6: CandidateLists,
    lists8: CandidateLists,
}

struct CycleObjective<'a> {
    search: &'a CycleSearch,
}

fn active_weight(lists: &CandidateLists, idx: &[u32], p: &PartitioningMatrix) -> usize {
    idx.iter()
        .filter(|&&c| {
            lists.candidates[c as usize]
                .cells()
                .map(|(i, j, s)| s * p.get(i, j) as i64)
                .sum::<i64>()
                == 0
        })
        .count()
}

impl LocalObjective for CycleObjective<'_> {
    fn local(&mut self, p: &PartitioningMatrix, i: usize, j: usize) -> f64 {
        let s = self.search;
        let n6 = active_weight(&s.lists6, s.lists6.through(i, j), p);
        let n8 = active_weight(&s.lists8, s.lists8.through(i, j), p);
        s.cycle6_weight * n6 as f64 + n8 as f64
    }

    fn total(&self, p: &PartitioningMatrix) -> f64 {
        let (n6, n8) = self.search.counts(p);
        self.search.cycle6_weight * n6 as f64 + n8 as f64
    }
}

impl CycleSearch {
    pub fn new(params: &CodeParams, cycle6_weight: f64) -> Self {
        CycleSearch {
            params: params.clone(),
            cycle6_weight,
            lists6: enumerate_cycle6(params.gamma, params.kappa),
            lists8: enumerate_cycle8(params.gamma, params.kappa),
        }
    }

    /// Active cycle-6 and cycle-8 candidates of `p`.
    pub fn counts(&self, p: &PartitioningMatrix) -> (usize, usize) {
        let all6: Vec<u32> = (0..self.lists6.len() as u32).collect();
        let all8: Vec<u32> = (0..self.lists8.len() as u32).collect();
        (
            active_weight(&self.lists6, &all6, p),
            active_weight(&self.lists8, &all8, p),
        )
    }

    pub fn objective(&self, p: &PartitioningMatrix) -> f64 {
        CycleObjective { search: self }.total(p)
    }

    /// One restart: random placement from `seed`, then sweeps to a fixpoint.
    pub fn run(&self, p: &EdgeDistribution, config: &AoConfig, seed: u64) -> Result<AoResult, AoError> {
        check_distribution(&self.params, p)?;
        let u = discretize_distribution(p, self.params.entries());
        let mut matrix = random_placement(&self.params, &u, &mut rng_from_seed(seed));
        let mut budget = config.budget(u.len());
        let mut obj = CycleObjective { search: self };
        let trace = sweep_to_fixpoint(&self.params, &mut matrix, &mut obj, &mut budget, config.best_improvement);
        Ok(AoResult {
            objective: self.objective(&matrix),
            matrix,
            trace,
            seed,
            initial_counts: u,
            deviation: budget.deviation,
        })
    }
}

/// Cycle-based optimizer: minimizes `w·n₆ + n₈` over active protograph candidates, best of
/// `config.restarts` seeded restarts.
pub fn ao_cycles(
    params: &CodeParams,
    p: &EdgeDistribution,
    cycle6_weight: f64,
    config: &AoConfig,
    seed: u64,
) -> Result<AoResult, AoError> {
    if config.restarts == 0 {
        return Err(AoError::NoRestarts);
    }
    let search = CycleSearch::new(params, cycle6_weight);
    let runs = restart_seeds(seed, config.restarts)
        .into_iter()
        .map(|s| search.run(p, config, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(best_of(runs).expect("at least one restart"))
}

/// Default object weights: each object scaled by the inverse of its count in an all-equal
/// matrix, so that every object type carries comparable weight.
pub fn default_object_weights(params: &CodeParams) -> [f64; 4] {
    let flat = PartitioningMatrix::filled(params.gamma, params.kappa, 0);
    let c = ObjectTables::new(&flat, params.memory).totals();
    [c.t212, c.t213, c.t222, c.t313].map(|x| if x == 0 { 0.0 } else { 1.0 / x as f64 })
}

/// Object-based optimizer state for one parameter set.
#[derive(Debug, Clone)]
pub struct ObjectSearch {
    params: CodeParams,
    weights: [f64; 4],
}

struct ObjectObjective {
    tables: ObjectTables,
    weights: [f64; 4],
}

impl LocalObjective for ObjectObjective {
    fn local(&mut self, _p: &PartitioningMatrix, _i: usize, _j: usize) -> f64 {
        self.tables.totals().weighted(self.weights)
    }

    fn changed(&mut self, p: &PartitioningMatrix, i: usize, j: usize, old: u32) {
        self.tables.update(p, i, j, old);
    }

    fn total(&self, _p: &PartitioningMatrix) -> f64 {
        self.tables.totals().weighted(self.weights)
    }
}

impl ObjectSearch {
    pub fn new(params: &CodeParams, weights: [f64; 4]) -> Self {
        ObjectSearch {
            params: params.clone(),
            weights,
        }
    }

    pub fn counts(&self, p: &PartitioningMatrix) -> ObjectCounts {
        ObjectTables::new(p, self.params.memory).totals()
    }

    pub fn objective(&self, p: &PartitioningMatrix) -> f64 {
        self.counts(p).weighted(self.weights)
    }

    pub fn run(&self, p: &EdgeDistribution, config: &AoConfig, seed: u64) -> Result<AoResult, AoError> {
        check_distribution(&self.params, p)?;
        let u = discretize_distribution(p, self.params.entries());
        let mut matrix = random_placement(&self.params, &u, &mut rng_from_seed(seed));
        let mut budget = config.budget(u.len());
        let mut obj = ObjectObjective {
            tables: ObjectTables::new(&matrix, self.params.memory),
            weights: self.weights,
        };
        let trace = sweep_to_fixpoint(&self.params, &mut matrix, &mut obj, &mut budget, config.best_improvement);
        Ok(AoResult {
            objective: self.objective(&matrix),
            matrix,
            trace,
            seed,
            initial_counts: u,
            deviation: budget.deviation,
        })
    }
}

/// Fine-grained optimizer: minimizes `w₁t₂₁₂ + w₂t₂₁₃ + w₃t₂₂₂ + w₄t₃₁₃` over protograph
/// object counts, best of `config.restarts` seeded restarts.
pub fn ao_objects(
    params: &CodeParams,
    p: &EdgeDistribution,
    weights: [f64; 4],
    config: &AoConfig,
    seed: u64,
) -> Result<AoResult, AoError> {
    if config.restarts == 0 {
        return Err(AoError::NoRestarts);
    }
    let search = ObjectSearch::new(params, weights);
    let runs = restart_seeds(seed, config.restarts)
        .into_iter()
        .map(|s| search.run(p, config, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(best_of(runs).expect("at least one restart"))
}

/// Objective minimized by [`exhaustive_partition_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchObjective {
    /// `w·n₆ + n₈` over active protograph candidates.
    Cycles { cycle6_weight: f64 },
    /// Active cycle-8 candidates of one structure.
    Cycle8Structure(u8),
    /// Weighted protograph object counts.
    Objects([f64; 4]),
}

/// Largest number of partitioning matrices [`exhaustive_partition_search`] visits.
pub const EXHAUSTIVE_LIMIT: f64 = 1e8;

/// Global minimizer over every partitioning matrix, visited in lexicographic order of the
/// row-major entries; the first matrix reaching the minimum is returned.
pub fn exhaustive_partition_search(
    params: &CodeParams,
    objective: SearchObjective,
) -> Result<(PartitioningMatrix, f64), AoError> {
    let k = params.pattern.len();
    let cells = params.entries();
    let size = libm::pow(k as f64, cells as f64);
    if size > EXHAUSTIVE_LIMIT {
        return Err(AoError::TooLarge(size));
    }
    let score: alloc::boxed::Box<dyn Fn(&PartitioningMatrix) -> f64> = match objective {
        SearchObjective::Cycles { cycle6_weight } => {
            let search = CycleSearch::new(params, cycle6_weight);
            alloc::boxed::Box::new(move |m| search.objective(m))
        }
        SearchObjective::Cycle8Structure(s) => {
            let lists = enumerate_cycle8(params.gamma, params.kappa);
            let idx: Vec<u32> = (0..lists.len() as u32)
                .filter(|&c| lists.candidates[c as usize].structure() == s)
                .collect();
            alloc::boxed::Box::new(move |m| active_weight(&lists, &idx, m) as f64)
        }
        SearchObjective::Objects(w) => {
            let memory = params.memory;
            alloc::boxed::Box::new(move |m| ObjectTables::new(m, memory).totals().weighted(w))
        }
    };
    let mut digits = vec![0usize; cells];
    let mut best: Option<(Vec<u32>, f64)> = None;
    loop {
        let entries: Vec<u32> = digits.iter().map(|&d| params.pattern[d]).collect();
        let m = PartitioningMatrix::from_raw(params.gamma, params.kappa, entries);
        let v = score(&m);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((m.entries().to_vec(), v));
        }
        // Increment with the last cell least significant.
        let mut pos = cells;
        loop {
            if pos == 0 {
                let (e, v) = best.expect("at least one matrix");
                return Ok((PartitioningMatrix::from_raw(params.gamma, params.kappa, e), v));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Targets of the lifting optimizer besides cycles-4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftTargets {
    /// Weights of partition-active cycle-6 and cycle-8 candidates.
    Cycles { w6: f64, w8: f64 },
    /// Weights of partition-active 2-1-2, 2-1-3, 2-2-2 and 3-1-3 objects; an object survives
    /// lifting when both of its fundamental cycles do.
    Objects([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpoConfig {
    /// Restarts from fresh random lifting matrices while lifted cycles-4 remain.
    pub max_restarts: usize,
    /// Cap on the number of object targets tracked.
    pub max_objects: usize,
}

impl Default for CpoConfig {
    fn default() -> Self {
        CpoConfig {
            max_restarts: 5,
            max_objects: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpoResult {
    pub lifting: LiftingMatrix,
    /// Partition-active cycles-4 that also survive lifting.
    pub cycles4: usize,
    /// Surviving targets per category: cycles-6 and cycles-8, or the four object types.
    pub surviving: Vec<usize>,
    /// Weighted surviving count after every accepted change, starting from the initialization.
    pub trace: Vec<f64>,
    /// True when a lifting without surviving cycles-4 was found.
    pub cycles4_free: bool,
    /// True when the object targets were capped at `max_objects`.
    pub truncated: bool,
}

/// A lifted target: one or two closed walks given as signed cell multiplicities.
#[derive(Debug, Clone)]
struct LiftItem {
    category: usize,
    weight: f64,
    cycles: Vec<Vec<(usize, i64)>>,
}

fn walk_cells(cells: impl Iterator<Item = (usize, usize, i64)>, kappa: usize) -> Vec<(usize, i64)> {
    let mut out: Vec<(usize, i64)> = Vec::new();
    for (i, j, s) in cells {
        let cell = i * kappa + j;
        match out.iter_mut().find(|x| x.0 == cell) {
            Some(x) => x.1 += s,
            None => out.push((cell, s)),
        }
    }
    out.retain(|x| x.1 != 0);
    out
}

fn lift_items(
    p: &PartitioningMatrix,
    params: &CodeParams,
    targets: LiftTargets,
    cap: usize,
) -> (Vec<LiftItem>, bool) {
    let kappa = params.kappa;
    let active = |lists: &CandidateLists, category: usize, weight: f64, out: &mut Vec<LiftItem>| {
        for c in &lists.candidates {
            if c.cells().map(|(i, j, s)| s * p.get(i, j) as i64).sum::<i64>() == 0 {
                out.push(LiftItem {
                    category,
                    weight,
                    cycles: vec![walk_cells(c.cells(), kappa)],
                });
            }
        }
    };
    let mut items = Vec::new();
    active(&enumerate_cycle4(params.gamma, kappa), 0, 0.0, &mut items);
    let mut truncated = false;
    match targets {
        LiftTargets::Cycles { w6, w8 } => {
            active(&enumerate_cycle6(params.gamma, kappa), 1, w6, &mut items);
            active(&enumerate_cycle8(params.gamma, kappa), 2, w8, &mut items);
        }
        LiftTargets::Objects(w) => {
            let lists = crate::topology::enumerate_paths(params.gamma, kappa);
            let mut by_pair: alloc::collections::BTreeMap<(u16, u16, i64), [Vec<&Path>; 3]> =
                alloc::collections::BTreeMap::new();
            for path in &lists.paths {
                by_pair
                    .entry((path.j1, path.j2, path.partition_sum(p)))
                    .or_default()[path.kind as usize - 1]
                    .push(path);
            }
            let cycle = |a: &Path, b: &Path| {
                let cells = a.cells().into_iter().chain(b.cells().into_iter().map(|(i, j, s)| (i, j, -s)));
                walk_cells(cells, kappa)
            };
            let mut push = |category: usize, a: &Path, b: &Path, c: &Path, items: &mut Vec<LiftItem>| {
                if items.len() >= cap {
                    truncated = true;
                    return;
                }
                items.push(LiftItem {
                    category,
                    weight: w[category - 1],
                    cycles: vec![cycle(a, b), cycle(a, c)],
                });
            };
            for [t1, t2, t3] in by_pair.values() {
                for a in t1 {
                    for (x, b) in t2.iter().enumerate() {
                        for c in &t2[x + 1..] {
                            if b.rows[0] != c.rows[0] {
                                push(1, a, b, c, &mut items);
                            }
                        }
                        for c in t3 {
                            push(2, a, b, c, &mut items);
                        }
                    }
                    for (x, b) in t3.iter().enumerate() {
                        for c in &t3[x + 1..] {
                            if b.rows[0] != c.rows[0] {
                                push(4, a, b, c, &mut items);
                            }
                        }
                    }
                }
                for (x, a) in t2.iter().enumerate() {
                    for (y, b) in t2.iter().enumerate().skip(x + 1) {
                        for c in &t2[y + 1..] {
                            let rows = [a.rows[0], b.rows[0], c.rows[0]];
                            if rows[0] != rows[1] && rows[0] != rows[2] && rows[1] != rows[2] {
                                push(3, a, b, c, &mut items);
                            }
                        }
                    }
                }
            }
        }
    }
    // Cycles-4 dominate every other target.
    let rest: f64 = items.iter().map(|x| x.weight).sum();
    for item in items.iter_mut().filter(|x| x.category == 0) {
        item.weight = rest + 1.0;
    }
    (items, truncated)
}

struct LiftState<'a> {
    items: &'a [LiftItem],
    by_cell: Vec<Vec<(u32, u8, i64)>>,
    sums: Vec<Vec<i64>>,
    z: i64,
}

impl<'a> LiftState<'a> {
    fn new(items: &'a [LiftItem], cells: usize, l: &LiftingMatrix) -> Self {
        let z = l.circulant() as i64;
        let mut by_cell = vec![Vec::new(); cells];
        let mut sums = Vec::with_capacity(items.len());
        for (n, item) in items.iter().enumerate() {
            let mut s = Vec::with_capacity(item.cycles.len());
            for (c, cyc) in item.cycles.iter().enumerate() {
                let mut acc = 0i64;
                for &(cell, coef) in cyc {
                    by_cell[cell].push((n as u32, c as u8, coef));
                    acc += coef * l.entries()[cell] as i64;
                }
                s.push(acc.rem_euclid(z));
            }
            sums.push(s);
        }
        LiftState { items, by_cell, sums, z }
    }

    fn alive(&self, n: usize) -> bool {
        self.sums[n].iter().all(|&s| s == 0)
    }

    fn total(&self) -> f64 {
        (0..self.items.len())
            .filter(|&n| self.alive(n))
            .map(|n| self.items[n].weight)
            .sum()
    }

    /// Change of the weighted total if the cell's exponent moved by `delta`.
    fn gain(&self, cell: usize, delta: i64) -> f64 {
        let refs = &self.by_cell[cell];
        let mut out = 0.0;
        let mut k = 0;
        while k < refs.len() {
            let n = refs[k].0 as usize;
            let mut shifted = self.sums[n].clone();
            while k < refs.len() && refs[k].0 as usize == n {
                let (_, c, coef) = refs[k];
                shifted[c as usize] = (shifted[c as usize] + coef * delta).rem_euclid(self.z);
                k += 1;
            }
            let before = self.alive(n);
            let after = shifted.iter().all(|&s| s == 0);
            if before != after {
                out += if after { self.items[n].weight } else { -self.items[n].weight };
            }
        }
        out
    }

    fn apply(&mut self, cell: usize, delta: i64) {
        for &(n, c, coef) in &self.by_cell[cell] {
            let s = &mut self.sums[n as usize][c as usize];
            *s = (*s + coef * delta).rem_euclid(self.z);
        }
    }

    fn surviving(&self, categories: usize) -> Vec<usize> {
        let mut out = vec![0; categories];
        for n in (0..self.items.len()).filter(|&n| self.alive(n)) {
            out[self.items[n].category] += 1;
        }
        out
    }
}

/// Greedy coordinate descent over lifting exponents.
///
/// Each step scans every entry and every alternative exponent, and applies the single change
/// with the largest drop of the weighted surviving count; it stops when no change helps. While
/// cycles-4 survive, the search restarts from a fresh random matrix up to `max_restarts` times
/// and keeps the best result.
pub fn cpo_lift(
    p: &PartitioningMatrix,
    params: &CodeParams,
    targets: LiftTargets,
    config: &CpoConfig,
    seed: u64,
) -> CpoResult {
    let (items, truncated) = lift_items(p, params, targets, config.max_objects);
    let categories = match targets {
        LiftTargets::Cycles { .. } => 3,
        LiftTargets::Objects(_) => 5,
    };
    let z = params.circulant;
    let cells = params.entries();
    let mut rng = rng_from_seed(seed);
    let mut best: Option<CpoResult> = None;
    for _ in 0..config.max_restarts.max(1) {
        let entries: Vec<u32> = (0..cells).map(|_| rng.random_range(0..z as u32)).collect();
        let mut l = LiftingMatrix::from_raw(params.gamma, params.kappa, z, entries);
        let mut state = LiftState::new(&items, cells, &l);
        let mut current = state.total();
        let mut trace = vec![current];
        loop {
            let mut step: Option<(usize, u32, f64)> = None;
            for cell in 0..cells {
                let now = l.entries()[cell] as i64;
                for v in 0..z as i64 {
                    if v == now {
                        continue;
                    }
                    let g = state.gain(cell, v - now);
                    if g < 0.0 && step.is_none_or(|s| g < s.2) {
                        step = Some((cell, v as u32, g));
                    }
                }
            }
            let Some((cell, v, g)) = step else { break };
            let now = l.entries()[cell] as i64;
            state.apply(cell, v as i64 - now);
            l.set(cell / params.kappa, cell % params.kappa, v);
            current += g;
            trace.push(current);
        }
        let surviving = state.surviving(categories);
        let result = CpoResult {
            lifting: l,
            cycles4: surviving[0],
            surviving: surviving[1..].to_vec(),
            trace,
            cycles4_free: surviving[0] == 0,
            truncated,
        };
        let better = best.as_ref().is_none_or(|b| {
            (result.cycles4, *result.trace.last().unwrap()) < (b.cycles4, *b.trace.last().unwrap())
        });
        if better {
            best = Some(result);
        }
        if best.as_ref().is_some_and(|b| b.cycles4_free) {
            break;
        }
    }
    best.expect("at least one restart")
}
