//! Cycle candidates, paths and exact counts in the protograph and the lifted Tanner graph.
//!
//! A cycle candidate of length `2g` is a closed walk `(j₁, i₁, j₂, i₂, …, j_g, i_g)` in the all-one
//! base matrix: columns are VNs, rows are CNs, and cyclically consecutive columns (and rows)
//! differ. Each geometric walk is stored once, canonicalized over rotations and reflections.
//! Candidates are generated from templates: every walk on an abstract `R×C` grid that uses all
//! rows and columns, mapped order-preservingly onto every choice of `R` rows and `C` columns.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::model::{CodeParams, LiftingMatrix, PartitioningMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("cell ({row}, {col}) is outside the matrix")]
    Index { row: usize, col: usize },
    #[error("walk does not close: alternating partition sum is {0}")]
    NotACandidate(i64),
    #[error("{0} partitioning matrices exceed the enumeration limit")]
    TooLarge(f64),
    #[error("cycle length {0} is not supported (use 4, 6 or 8)")]
    Length(usize),
    #[error("matrix is {rows}x{cols}, expected {gamma}x{kappa}")]
    Shape {
        rows: usize,
        cols: usize,
        gamma: usize,
        kappa: usize,
    },
}

/// A closed alternating walk through the base matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleCandidate {
    cols: [u16; 4],
    rows: [u16; 4],
    g: u8,
    structure: u8,
    symmetry: u8,
}

impl CycleCandidate {
    /// Builds a candidate from its column and row sequences, checking the walk rules.
    pub fn new(cols: &[usize], rows: &[usize]) -> Option<Self> {
        let g = cols.len();
        if !(2..=4).contains(&g) || rows.len() != g {
            return None;
        }
        for k in 0..g {
            if cols[k] == cols[(k + 1) % g] || rows[k] == rows[(k + 1) % g] {
                return None;
            }
        }
        let mut c = [0u16; 4];
        let mut r = [0u16; 4];
        for k in 0..g {
            c[k] = cols[k] as u16;
            r[k] = rows[k] as u16;
        }
        let distinct = |xs: &[u16]| {
            let mut v = xs.to_vec();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        let structure = if g == 4 {
            structure_of(distinct(&r[..g]), distinct(&c[..g]))
        } else {
            0
        };
        let symmetry = walk_symmetry(&c[..g], &r[..g]) as u8;
        Some(CycleCandidate {
            cols: c,
            rows: r,
            g: g as u8,
            structure,
            symmetry,
        })
    }

    /// Number of VNs `g`; the cycle length is `2g`.
    pub fn half_len(&self) -> usize {
        self.g as usize
    }

    pub fn length(&self) -> usize {
        2 * self.g as usize
    }

    pub fn cols(&self) -> &[u16] {
        &self.cols[..self.g as usize]
    }

    pub fn rows(&self) -> &[u16] {
        &self.rows[..self.g as usize]
    }

    /// Cycle-8 structure S1..S6 by footprint, zero for shorter cycles.
    pub fn structure(&self) -> u8 {
        self.structure
    }

    /// Number of rotations and reflections that map the walk onto itself.
    pub fn symmetry(&self) -> usize {
        self.symmetry as usize
    }

    /// The `2g` cells visited, `(row, col, sign)`: `+1` for `(i_k, j_k)`, `−1` for `(i_k, j_{k+1})`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        let g = self.g as usize;
        (0..g).flat_map(move |k| {
            let i = self.rows[k] as usize;
            [
                (i, self.cols[k] as usize, 1),
                (i, self.cols[(k + 1) % g] as usize, -1),
            ]
        })
    }

    /// True when the walk visits cell `(i, j)`.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells().any(|(r, c, _)| r == i && c == j)
    }

    fn check_bounds(&self, gamma: usize, kappa: usize) -> Result<(), TopologyError> {
        for (i, j, _) in self.cells() {
            if i >= gamma || j >= kappa {
                return Err(TopologyError::Index { row: i, col: j });
            }
        }
        Ok(())
    }
}

fn structure_of(rows: usize, cols: usize) -> u8 {
    match (rows.min(cols), rows.max(cols)) {
        (2, 2) => 1,
        (2, 3) => 2,
        (3, 3) => 3,
        (2, 4) => 4,
        (3, 4) => 5,
        (4, 4) => 6,
        _ => 0,
    }
}

/// All rotations and reflections of a walk, as `(cols, rows)` pairs.
fn walk_images(cols: &[u16], rows: &[u16]) -> Vec<(Vec<u16>, Vec<u16>)> {
    let g = cols.len();
    let mut out = Vec::with_capacity(2 * g);
    for r in 0..g {
        let c: Vec<u16> = (0..g).map(|k| cols[(k + r) % g]).collect();
        let w: Vec<u16> = (0..g).map(|k| rows[(k + r) % g]).collect();
        // Reversal: j1 i_g j_g i_{g-1} … j2 i1.
        let cr: Vec<u16> = (0..g).map(|k| c[(g - k) % g]).collect();
        let wr: Vec<u16> = (0..g).map(|k| w[g - 1 - k]).collect();
        out.push((c, w));
        out.push((cr, wr));
    }
    out
}

fn walk_symmetry(cols: &[u16], rows: &[u16]) -> usize {
    walk_images(cols, rows)
        .into_iter()
        .filter(|(c, r)| c == cols && r == rows)
        .count()
}

fn is_canonical(cols: &[u16], rows: &[u16]) -> bool {
    walk_images(cols, rows)
        .into_iter()
        .all(|(c, r)| (cols, rows) <= (&c[..], &r[..]))
}

/// Canonical walks of `g` VNs on an `r×c` grid using every row and column.
fn templates(g: usize, r: usize, c: usize) -> Vec<CycleCandidate> {
    let mut out = Vec::new();
    let mut cols = vec![0u16; g];
    let mut rows = vec![0u16; g];
    let total_c = c.pow(g as u32);
    let total_r = r.pow(g as u32);
    for xc in 0..total_c {
        let mut x = xc;
        for k in 0..g {
            cols[k] = (x % c) as u16;
            x /= c;
        }
        if (0..g).any(|k| cols[k] == cols[(k + 1) % g]) || !covers(&cols, c) {
            continue;
        }
        for xr in 0..total_r {
            let mut y = xr;
            for k in 0..g {
                rows[k] = (y % r) as u16;
                y /= r;
            }
            if (0..g).any(|k| rows[k] == rows[(k + 1) % g]) || !covers(&rows, r) {
                continue;
            }
            if is_canonical(&cols, &rows) {
                let cs: Vec<usize> = cols.iter().map(|&x| x as usize).collect();
                let rs: Vec<usize> = rows.iter().map(|&x| x as usize).collect();
                out.push(CycleCandidate::new(&cs, &rs).expect("walk rules checked"));
            }
        }
    }
    out
}

fn covers(xs: &[u16], n: usize) -> bool {
    (0..n as u16).all(|v| xs.contains(&v))
}

/// Increasing `k`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut t = k;
        loop {
            if t == 0 {
                return out;
            }
            t -= 1;
            if cur[t] < n - k + t {
                cur[t] += 1;
                for s in t + 1..k {
                    cur[s] = cur[s - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Calls `f` on every candidate of `g` VNs in a γ×κ base matrix.
pub fn for_each_candidate(gamma: usize, kappa: usize, g: usize, mut f: impl FnMut(&CycleCandidate)) {
    for r in 2..=g.min(gamma) {
        for c in 2..=g.min(kappa) {
            let tpl = templates(g, r, c);
            if tpl.is_empty() {
                continue;
            }
            let row_sets = subsets(gamma, r);
            let col_sets = subsets(kappa, c);
            for rs in &row_sets {
                for cs in &col_sets {
                    for t in &tpl {
                        let mut cand = *t;
                        for k in 0..g {
                            cand.cols[k] = cs[t.cols[k] as usize] as u16;
                            cand.rows[k] = rs[t.rows[k] as usize] as u16;
                        }
                        f(&cand);
                    }
                }
            }
        }
    }
}

/// Candidates of one length with, for every cell, the indices of candidates through it.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLists {
    pub gamma: usize,
    pub kappa: usize,
    pub candidates: Vec<CycleCandidate>,
    by_cell: Vec<Vec<u32>>,
}

impl CandidateLists {
    fn build(gamma: usize, kappa: usize, g: usize) -> Self {
        let mut candidates = Vec::new();
        for_each_candidate(gamma, kappa, g, |c| candidates.push(*c));
        let mut by_cell = vec![Vec::new(); gamma * kappa];
        for (idx, c) in candidates.iter().enumerate() {
            let mut cells: Vec<usize> = c.cells().map(|(i, j, _)| i * kappa + j).collect();
            cells.sort_unstable();
            cells.dedup();
            for cell in cells {
                by_cell[cell].push(idx as u32);
            }
        }
        CandidateLists {
            gamma,
            kappa,
            candidates,
            by_cell,
        }
    }

    /// Indices of candidates through cell `(i, j)`.
    pub fn through(&self, i: usize, j: usize) -> &[u32] {
        &self.by_cell[i * self.kappa + j]
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Candidate counts per structure tag (index 0 holds untagged candidates).
    pub fn structure_totals(&self) -> [usize; 7] {
        let mut out = [0; 7];
        for c in &self.candidates {
            out[c.structure as usize] += 1;
        }
        out
    }
}

pub fn enumerate_cycle4(gamma: usize, kappa: usize) -> CandidateLists {
    CandidateLists::build(gamma, kappa, 2)
}

pub fn enumerate_cycle6(gamma: usize, kappa: usize) -> CandidateLists {
    CandidateLists::build(gamma, kappa, 3)
}

pub fn enumerate_cycle8(gamma: usize, kappa: usize) -> CandidateLists {
    CandidateLists::build(gamma, kappa, 4)
}

/// `Σ P(i_k, j_k) − Σ P(i_k, j_{k+1})`.
pub fn alternating_sum(c: &CycleCandidate, p: &PartitioningMatrix) -> Result<i64, TopologyError> {
    c.check_bounds(p.gamma(), p.kappa())?;
    Ok(raw_sum(c, |i, j| p.get(i, j) as i64))
}

fn raw_sum(c: &CycleCandidate, value: impl Fn(usize, usize) -> i64) -> i64 {
    c.cells().map(|(i, j, s)| s * value(i, j)).sum()
}

/// The candidate survives partitioning.
pub fn check_partition_condition(c: &CycleCandidate, p: &PartitioningMatrix) -> Result<bool, TopologyError> {
    Ok(alternating_sum(c, p)? == 0)
}

/// The candidate closes after lifting: alternating sum of exponents is zero modulo z.
pub fn check_lifting_condition(c: &CycleCandidate, l: &LiftingMatrix) -> Result<bool, TopologyError> {
    c.check_bounds(l.gamma(), l.kappa())?;
    let z = l.circulant() as i64;
    Ok(raw_sum(c, |i, j| l.get(i, j) as i64).rem_euclid(z) == 0)
}

/// Replica offset of each VN visited by the walk, starting from zero.
fn replica_offsets(c: &CycleCandidate, value: impl Fn(usize, usize) -> i64) -> ([i64; 4], i64) {
    let g = c.half_len();
    let mut out = [0i64; 4];
    let mut r = 0;
    for k in 0..g {
        out[k] = r;
        let i = c.rows[k] as usize;
        r += value(i, c.cols[k] as usize) - value(i, c.cols[(k + 1) % g] as usize);
    }
    (out, r)
}

/// Spread `max − min` of the replica offsets of the VNs along the walk.
pub fn candidate_span(c: &CycleCandidate, p: &PartitioningMatrix) -> Result<usize, TopologyError> {
    c.check_bounds(p.gamma(), p.kappa())?;
    let (offsets, closing) = replica_offsets(c, |i, j| p.get(i, j) as i64);
    if closing != 0 {
        return Err(TopologyError::NotACandidate(closing));
    }
    Ok(span(&offsets[..c.half_len()]))
}

fn span(xs: &[i64]) -> usize {
    let lo = xs.iter().copied().min().unwrap_or(0);
    let hi = xs.iter().copied().max().unwrap_or(0);
    (hi - lo) as usize
}

/// True when the lifted walk visits no VN or CN twice.
fn lifted_walk_is_simple(c: &CycleCandidate, p: &PartitioningMatrix, l: &LiftingMatrix) -> bool {
    let g = c.half_len();
    let z = l.circulant() as i64;
    let mut vns = [(0i64, 0usize, 0i64); 4];
    let mut cns = [(0i64, 0usize, 0i64); 4];
    let (mut r, mut s) = (0i64, 0i64);
    for k in 0..g {
        let (i, j, jn) = (c.rows[k] as usize, c.cols[k] as usize, c.cols[(k + 1) % g] as usize);
        vns[k] = (r, j, s);
        cns[k] = (r + p.get(i, j) as i64, i, (s - l.get(i, j) as i64).rem_euclid(z));
        r += p.get(i, j) as i64 - p.get(i, jn) as i64;
        s = (s - l.get(i, j) as i64 + l.get(i, jn) as i64).rem_euclid(z);
    }
    for x in 0..g {
        for y in x + 1..g {
            if vns[x] == vns[y] || cns[x] == cns[y] {
                return false;
            }
        }
    }
    true
}

/// Number of lifted cycles a candidate produces in an SC code with `replicas` replicas.
///
/// Each placement of the walk's first VN (a replica index that keeps every visited VN inside the
/// coupled chain, and one of `z` lift indices) yields a cycle; placements that trace the same
/// cycle from another starting point of a self-symmetric walk are merged.
fn lifted_multiplicity(
    c: &CycleCandidate,
    p: &PartitioningMatrix,
    l: &LiftingMatrix,
    replicas: usize,
) -> u64 {
    let (offsets, closing) = replica_offsets(c, |i, j| p.get(i, j) as i64);
    if closing != 0 {
        return 0;
    }
    let z = l.circulant() as i64;
    if raw_sum(c, |i, j| l.get(i, j) as i64).rem_euclid(z) != 0 {
        return 0;
    }
    if !lifted_walk_is_simple(c, p, l) {
        return 0;
    }
    let delta = span(&offsets[..c.half_len()]);
    let placements = replicas.saturating_sub(delta) as u64 * z as u64;
    placements / c.symmetry() as u64
}

fn check_shapes(p: &PartitioningMatrix, l: &LiftingMatrix) -> Result<(), TopologyError> {
    if p.gamma() != l.gamma() || p.kappa() != l.kappa() {
        return Err(TopologyError::Shape {
            rows: l.gamma(),
            cols: l.kappa(),
            gamma: p.gamma(),
            kappa: p.kappa(),
        });
    }
    Ok(())
}

/// Number of cycles of the given length in the lifted Tanner graph.
pub fn count_cycles_tanner(
    p: &PartitioningMatrix,
    l: &LiftingMatrix,
    params: &CodeParams,
    length: usize,
) -> Result<u64, TopologyError> {
    check_shapes(p, l)?;
    if !matches!(length, 4 | 6 | 8) {
        return Err(TopologyError::Length(length));
    }
    let mut total = 0u64;
    for_each_candidate(p.gamma(), p.kappa(), length / 2, |c| {
        total += lifted_multiplicity(c, p, l, params.replicas);
    });
    Ok(total)
}

/// Number of candidates of the given length that satisfy the partition condition.
pub fn count_active_candidates(p: &PartitioningMatrix, length: usize) -> Result<u64, TopologyError> {
    if !matches!(length, 4 | 6 | 8) {
        return Err(TopologyError::Length(length));
    }
    let mut total = 0u64;
    for_each_candidate(p.gamma(), p.kappa(), length / 2, |c| {
        if raw_sum(c, |i, j| p.get(i, j) as i64) == 0 {
            total += 1;
        }
    });
    Ok(total)
}

/// A type-`kind` path from column `j1` to column `j2` with `kind` CNs.
///
/// Rows are `(first, middle, last)`: the CN next to `j1`, the central CN of a type-3 path, and
/// the CN next to `j2`. Interior columns are the VNs strictly inside the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub kind: u8,
    pub j1: u16,
    pub j2: u16,
    pub rows: [u16; 3],
    pub interior: [u16; 2],
}

impl Path {
    /// Cells along the path, `(row, col, sign)`, in traversal order from `j1`.
    pub fn cells(&self) -> Vec<(usize, usize, i64)> {
        let (j1, j2) = (self.j1 as usize, self.j2 as usize);
        let [a, m, b] = self.rows.map(|x| x as usize);
        let [v2, v3] = self.interior.map(|x| x as usize);
        match self.kind {
            1 => vec![(a, j1, 1), (a, j2, -1)],
            2 => vec![(a, j1, 1), (a, v2, -1), (b, v2, 1), (b, j2, -1)],
            _ => vec![(a, j1, 1), (a, v2, -1), (m, v2, 1), (m, v3, -1), (b, v3, 1), (b, j2, -1)],
        }
    }

    /// Alternating partition sum `L(𝒫)`.
    pub fn partition_sum(&self, p: &PartitioningMatrix) -> i64 {
        self.cells().iter().map(|&(i, j, s)| s * p.get(i, j) as i64).sum()
    }
}

/// Type-1, type-2 and type-3 paths between every column pair `j1 < j2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLists {
    pub gamma: usize,
    pub kappa: usize,
    pub paths: Vec<Path>,
}

impl PathLists {
    /// `ℒ₁(i, j1, j2)`.
    pub fn type1(&self, i: usize, j1: usize, j2: usize) -> impl Iterator<Item = &Path> {
        self.select(1, i, 0, j1, j2)
    }

    /// `ℒ₂(i1, i2, j1, j2)`.
    pub fn type2(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> impl Iterator<Item = &Path> {
        self.select(2, i1, i2, j1, j2)
    }

    /// `ℒ₃(i3, i4, j1, j2)`.
    pub fn type3(&self, i3: usize, i4: usize, j1: usize, j2: usize) -> impl Iterator<Item = &Path> {
        self.select(3, i3, i4, j1, j2)
    }

    fn select(&self, kind: u8, a: usize, b: usize, j1: usize, j2: usize) -> impl Iterator<Item = &Path> {
        self.paths.iter().filter(move |p| {
            p.kind == kind
                && p.j1 as usize == j1
                && p.j2 as usize == j2
                && p.rows[0] as usize == a
                && (kind == 1 || p.rows[2] as usize == b)
        })
    }
}

/// Calls `f` on every path between `j1 < j2`.
fn for_each_path(gamma: usize, kappa: usize, j1: usize, j2: usize, mut f: impl FnMut(Path)) {
    let (c1, c2) = (j1 as u16, j2 as u16);
    for i in 0..gamma {
        f(Path {
            kind: 1,
            j1: c1,
            j2: c2,
            rows: [i as u16, 0, i as u16],
            interior: [0, 0],
        });
    }
    for i1 in 0..gamma {
        for i2 in (0..gamma).filter(|&x| x != i1) {
            for v in (0..kappa).filter(|&v| v != j1 && v != j2) {
                f(Path {
                    kind: 2,
                    j1: c1,
                    j2: c2,
                    rows: [i1 as u16, 0, i2 as u16],
                    interior: [v as u16, 0],
                });
            }
        }
    }
    for i3 in 0..gamma {
        for i4 in 0..gamma {
            for m in (0..gamma).filter(|&m| m != i3 && m != i4) {
                for v2 in (0..kappa).filter(|&v| v != j1 && v != j2) {
                    for v3 in (0..kappa).filter(|&v| v != j1 && v != j2 && v != v2) {
                        f(Path {
                            kind: 3,
                            j1: c1,
                            j2: c2,
                            rows: [i3 as u16, m as u16, i4 as u16],
                            interior: [v2 as u16, v3 as u16],
                        });
                    }
                }
            }
        }
    }
}

pub fn enumerate_paths(gamma: usize, kappa: usize) -> PathLists {
    let mut paths = Vec::new();
    for j1 in 0..kappa {
        for j2 in j1 + 1..kappa {
            for_each_path(gamma, kappa, j1, j2, |p| paths.push(p));
        }
    }
    PathLists { gamma, kappa, paths }
}

/// Counts of the four concatenated-cycle objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObjectCounts {
    pub t212: u64,
    pub t213: u64,
    pub t222: u64,
    pub t313: u64,
}

impl ObjectCounts {
    pub fn weighted(&self, w: [f64; 4]) -> f64 {
        w[0] * self.t212 as f64 + w[1] * self.t213 as f64 + w[2] * self.t222 as f64 + w[3] * self.t313 as f64
    }

    fn add(&mut self, o: &ObjectCounts) {
        self.t212 += o.t212;
        self.t213 += o.t213;
        self.t222 += o.t222;
        self.t313 += o.t313;
    }

    fn sub(&mut self, o: &ObjectCounts) {
        self.t212 -= o.t212;
        self.t213 -= o.t213;
        self.t222 -= o.t222;
        self.t313 -= o.t313;
    }
}

/// Path counts `v_{k,l}` by end rows and alternating sum for one column pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCountTable {
    gamma: usize,
    memory: usize,
    /// `v1[i][l]`.
    v1: Vec<u32>,
    /// `v2[(i1·γ + i2)][l]`.
    v2: Vec<u32>,
    /// `v3[(i3·γ + i4)][l]`.
    v3: Vec<u32>,
}

impl PathCountTable {
    fn width(&self) -> usize {
        6 * self.memory + 1
    }

    fn new(gamma: usize, memory: usize) -> Self {
        let w = 6 * memory + 1;
        PathCountTable {
            gamma,
            memory,
            v1: vec![0; gamma * w],
            v2: vec![0; gamma * gamma * w],
            v3: vec![0; gamma * gamma * w],
        }
    }

    /// Count of type-`kind` paths with end rows `(a, b)` and alternating sum `l`.
    pub fn get(&self, kind: usize, a: usize, b: usize, l: i64) -> u32 {
        let off = 3 * self.memory as i64;
        if l < -off || l > off {
            return 0;
        }
        let w = self.width();
        let x = (l + off) as usize;
        match kind {
            1 => self.v1[a * w + x],
            2 => self.v2[(a * self.gamma + b) * w + x],
            _ => self.v3[(a * self.gamma + b) * w + x],
        }
    }

    fn slot(&self, kind: u8, rows: [u16; 3], l: i64) -> usize {
        let x = (l + 3 * self.memory as i64) as usize;
        let w = self.width();
        match kind {
            1 => rows[0] as usize * w + x,
            _ => (rows[0] as usize * self.gamma + rows[2] as usize) * w + x,
        }
    }

    fn bump(&mut self, kind: u8, rows: [u16; 3], l: i64, up: bool) {
        let s = self.slot(kind, rows, l);
        let t = match kind {
            1 => &mut self.v1[s],
            2 => &mut self.v2[s],
            _ => &mut self.v3[s],
        };
        if up {
            *t += 1;
        } else {
            *t -= 1;
        }
    }

    /// Rebuilds every count for the pair `(j1, j2)`.
    fn fill(&mut self, p: &PartitioningMatrix, j1: usize, j2: usize) {
        self.v1.iter_mut().for_each(|x| *x = 0);
        self.v2.iter_mut().for_each(|x| *x = 0);
        self.v3.iter_mut().for_each(|x| *x = 0);
        let (g, k) = (p.gamma(), p.kappa());
        let w = self.width();
        let off = 3 * self.memory as i64;
        let val = |i: usize, j: usize| p.get(i, j) as i64;
        for i in 0..g {
            let l = val(i, j1) - val(i, j2);
            self.v1[i * w + (l + off) as usize] += 1;
        }
        let interior: Vec<usize> = (0..k).filter(|&v| v != j1 && v != j2).collect();
        for i1 in 0..g {
            for i2 in (0..g).filter(|&x| x != i1) {
                let base = (i1 * g + i2) * w;
                for &v in &interior {
                    let l = val(i1, j1) - val(i1, v) + val(i2, v) - val(i2, j2);
                    self.v2[base + (l + off) as usize] += 1;
                }
            }
        }
        for &v2 in &interior {
            for &v3 in &interior {
                if v2 == v3 {
                    continue;
                }
                for m in 0..g {
                    let mid = val(m, v2) - val(m, v3);
                    for i3 in (0..g).filter(|&x| x != m) {
                        let head = val(i3, j1) - val(i3, v2) + mid;
                        for i4 in (0..g).filter(|&x| x != m) {
                            let l = head + val(i4, v3) - val(i4, j2);
                            self.v3[(i3 * g + i4) * w + (l + off) as usize] += 1;
                        }
                    }
                }
            }
        }
    }

    /// Object counts for this pair over the index sets of the fine-grained optimizer.
    fn objects(&self) -> ObjectCounts {
        let g = self.gamma;
        let w = self.width();
        let mut out = ObjectCounts::default();
        let mut b = vec![0u64; g];
        let mut a3 = vec![0u64; g];
        for x in 0..w {
            let v1: u64 = (0..g).map(|i| self.v1[i * w + x] as u64).sum();
            let mut v2_total = 0u64;
            let mut v3_total = 0u64;
            for i in 0..g {
                b[i] = (0..g).map(|k| self.v2[(i * g + k) * w + x] as u64).sum();
                a3[i] = (0..g).map(|k| self.v3[(i * g + k) * w + x] as u64).sum();
                v2_total += b[i];
                v3_total += a3[i];
            }
            let (e2b, e3b) = elementary(&b);
            let (e2a, _) = elementary(&a3);
            out.t212 += v1 * e2b;
            out.t213 += v1 * v2_total * v3_total;
            out.t222 += e3b;
            out.t313 += v1 * e2a;
        }
        out
    }
}

/// Second and third elementary symmetric sums.
fn elementary(x: &[u64]) -> (u64, u64) {
    let (mut e1, mut e2, mut e3) = (0u64, 0u64, 0u64);
    for &v in x {
        e3 += e2 * v;
        e2 += e1 * v;
        e1 += v;
    }
    (e2, e3)
}

/// Per-pair path tables and object counts for a partitioning matrix, with cell updates.
#[derive(Debug, Clone)]
pub struct ObjectTables {
    gamma: usize,
    kappa: usize,
    pairs: Vec<(usize, usize)>,
    tables: Vec<PathCountTable>,
    per_pair: Vec<ObjectCounts>,
    totals: ObjectCounts,
}

impl ObjectTables {
    pub fn new(p: &PartitioningMatrix, memory: usize) -> Self {
        let (g, k) = (p.gamma(), p.kappa());
        let mut pairs = Vec::new();
        for j1 in 0..k {
            for j2 in j1 + 1..k {
                pairs.push((j1, j2));
            }
        }
        let mut tables = Vec::with_capacity(pairs.len());
        let mut per_pair = Vec::with_capacity(pairs.len());
        let mut totals = ObjectCounts::default();
        for &(j1, j2) in &pairs {
            let mut t = PathCountTable::new(g, memory);
            t.fill(p, j1, j2);
            let o = t.objects();
            totals.add(&o);
            per_pair.push(o);
            tables.push(t);
        }
        ObjectTables {
            gamma: g,
            kappa: k,
            pairs,
            tables,
            per_pair,
            totals,
        }
    }

    pub fn totals(&self) -> ObjectCounts {
        self.totals
    }

    pub fn table(&self, j1: usize, j2: usize) -> Option<&PathCountTable> {
        self.pairs.iter().position(|&x| x == (j1, j2)).map(|k| &self.tables[k])
    }

    /// Updates all tables after `p(i, j)` changed from `old` to its current value.
    pub fn update(&mut self, p: &PartitioningMatrix, i: usize, j: usize, old: u32) {
        let g = self.gamma;
        let new = p.get(i, j);
        if new == old {
            return;
        }
        let val_old = |r: usize, c: usize| {
            if r == i && c == j {
                old as i64
            } else {
                p.get(r, c) as i64
            }
        };
        let val_new = |r: usize, c: usize| p.get(r, c) as i64;
        for k in 0..self.pairs.len() {
            let (j1, j2) = self.pairs[k];
            let table = &mut self.tables[k];
            if j == j1 || j == j2 {
                table.fill(p, j1, j2);
            } else {
                // Cell (i, j) is interior: only paths through it move.
                let mut touched: Vec<Path> = Vec::new();
                for other in (0..g).filter(|&x| x != i) {
                    for (a, b) in [(i, other), (other, i)] {
                        touched.push(Path {
                            kind: 2,
                            j1: j1 as u16,
                            j2: j2 as u16,
                            rows: [a as u16, 0, b as u16],
                            interior: [j as u16, 0],
                        });
                    }
                }
                for v in (0..self.kappa).filter(|&v| v != j1 && v != j2 && v != j) {
                    for r1 in 0..g {
                        for r2 in 0..g {
                            for m in (0..g).filter(|&m| m != r1 && m != r2) {
                                // j as the first interior VN, entered from row r1 or left via m.
                                if r1 == i || m == i {
                                    touched.push(Path {
                                        kind: 3,
                                        j1: j1 as u16,
                                        j2: j2 as u16,
                                        rows: [r1 as u16, m as u16, r2 as u16],
                                        interior: [j as u16, v as u16],
                                    });
                                }
                                // j as the second interior VN.
                                if m == i || r2 == i {
                                    touched.push(Path {
                                        kind: 3,
                                        j1: j1 as u16,
                                        j2: j2 as u16,
                                        rows: [r1 as u16, m as u16, r2 as u16],
                                        interior: [v as u16, j as u16],
                                    });
                                }
                            }
                        }
                    }
                }
                for path in touched {
                    let cells = path.cells();
                    let before: i64 = cells.iter().map(|&(r, c, s)| s * val_old(r, c)).sum();
                    let after: i64 = cells.iter().map(|&(r, c, s)| s * val_new(r, c)).sum();
                    if before != after {
                        table.bump(path.kind, path.rows, before, false);
                        table.bump(path.kind, path.rows, after, true);
                    }
                }
            }
            let o = table.objects();
            self.totals.sub(&self.per_pair[k]);
            self.totals.add(&o);
            self.per_pair[k] = o;
        }
    }
}

/// A lifted node relative to the object's first endpoint: `(replica offset, is_cn, index, lift)`.
type LiftedNode = (i64, bool, u16, i64);

/// Lift data of a path needed in lifted mode: VN offset range and the interior lifted nodes.
#[derive(Debug, Clone)]
struct LiftedPath {
    first_row: u16,
    lo: i64,
    hi: i64,
    nodes: Vec<LiftedNode>,
}

/// Three paths form an object only when their interiors are node-disjoint in the lifted graph.
fn disjoint(paths: &[&LiftedPath]) -> bool {
    for (x, a) in paths.iter().enumerate() {
        for b in &paths[x + 1..] {
            if a.nodes.iter().any(|n| b.nodes.contains(n)) {
                return false;
            }
        }
    }
    true
}

/// Concatenated-cycle counts.
///
/// Without `lifted`, returns the protograph counts: sums of products of path counts sharing an
/// alternating sum, over the index sets `ℐ₂₁₂ … ℐ₃₁₃`. With `lifted = (L, replicas)`, a path
/// triple counts only when all three paths also share their lift sum modulo z, and it contributes
/// `z · max(0, replicas − Δ)` where `Δ` is the spread of replica offsets over the object's VNs.
/// Triples whose paths meet in an interior lifted VN or CN do not form the object and are skipped.
pub fn count_objects(
    p: &PartitioningMatrix,
    params: &CodeParams,
    lifted: Option<(&LiftingMatrix, usize)>,
) -> Result<ObjectCounts, TopologyError> {
    if p.gamma() != params.gamma || p.kappa() != params.kappa {
        return Err(TopologyError::Shape {
            rows: p.gamma(),
            cols: p.kappa(),
            gamma: params.gamma,
            kappa: params.kappa,
        });
    }
    match lifted {
        None => Ok(ObjectTables::new(p, params.memory).totals()),
        Some((l, replicas)) => {
            check_shapes(p, l)?;
            Ok(count_objects_lifted(p, l, replicas))
        }
    }
}

fn count_objects_lifted(p: &PartitioningMatrix, l: &LiftingMatrix, replicas: usize) -> ObjectCounts {
    let (g, k) = (p.gamma(), p.kappa());
    let z = l.circulant() as i64;
    let mut out = ObjectCounts::default();
    let weight = |paths: &[&LiftedPath]| -> u64 {
        if !disjoint(paths) {
            return 0;
        }
        let lo = paths.iter().map(|x| x.lo).min().unwrap();
        let hi = paths.iter().map(|x| x.hi).max().unwrap();
        replicas.saturating_sub((hi - lo) as usize) as u64 * z as u64
    };
    for j1 in 0..k {
        for j2 in j1 + 1..k {
            // Bucket paths by (kind, partition sum, lift sum).
            let mut buckets: alloc::collections::BTreeMap<(u8, i64, i64), Vec<LiftedPath>> =
                alloc::collections::BTreeMap::new();
            for_each_path(g, k, j1, j2, |path| {
                let mut r = 0i64;
                let mut s = 0i64;
                let (mut lo, mut hi) = (0i64, 0i64);
                let mut nodes = Vec::with_capacity(5);
                let cells = path.cells();
                for (step, pair) in cells.chunks(2).enumerate() {
                    let (i, ja, _) = pair[0];
                    let (_, jb, _) = pair[1];
                    nodes.push((
                        r + p.get(i, ja) as i64,
                        true,
                        i as u16,
                        (s - l.get(i, ja) as i64).rem_euclid(z),
                    ));
                    r += p.get(i, ja) as i64 - p.get(i, jb) as i64;
                    s = (s + l.get(i, jb) as i64 - l.get(i, ja) as i64).rem_euclid(z);
                    lo = lo.min(r);
                    hi = hi.max(r);
                    if step + 1 < cells.len() / 2 {
                        nodes.push((r, false, jb as u16, s));
                    }
                }
                buckets.entry((path.kind, r, s)).or_default().push(LiftedPath {
                    first_row: path.rows[0],
                    lo,
                    hi,
                    nodes,
                });
            });
            let empty: Vec<LiftedPath> = Vec::new();
            let keys: Vec<(i64, i64)> = buckets.keys().map(|&(_, r, s)| (r, s)).collect();
            let mut seen = Vec::new();
            for key in keys {
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                let t1 = buckets.get(&(1, key.0, key.1)).unwrap_or(&empty);
                let t2 = buckets.get(&(2, key.0, key.1)).unwrap_or(&empty);
                let t3 = buckets.get(&(3, key.0, key.1)).unwrap_or(&empty);
                for a in t1 {
                    for (x, b) in t2.iter().enumerate() {
                        for c in &t2[x + 1..] {
                            if b.first_row != c.first_row {
                                out.t212 += weight(&[a, b, c]);
                            }
                        }
                        for c in t3 {
                            out.t213 += weight(&[a, b, c]);
                        }
                    }
                    for (x, b) in t3.iter().enumerate() {
                        for c in &t3[x + 1..] {
                            if b.first_row != c.first_row {
                                out.t313 += weight(&[a, b, c]);
                            }
                        }
                    }
                }
                for (x, a) in t2.iter().enumerate() {
                    for (y, b) in t2.iter().enumerate().skip(x + 1) {
                        if a.first_row == b.first_row {
                            continue;
                        }
                        for c in &t2[y + 1..] {
                            if c.first_row != a.first_row && c.first_row != b.first_row {
                                out.t222 += weight(&[a, b, c]);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Quantity counted by [`brute_force_expected_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountTarget {
    /// Active cycle candidates of length 4, 6 or 8.
    Cycles(usize),
    /// Active cycle-8 candidates of one structure.
    Cycle8Structure(u8),
}

/// Largest number of partitioning matrices [`brute_force_expected_count`] enumerates.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Expected number of active targets when every entry is drawn independently from `p`,
/// computed by enumerating every partitioning matrix.
pub fn brute_force_expected_count(
    gamma: usize,
    kappa: usize,
    a: &[u32],
    p: &[f64],
    target: CountTarget,
) -> Result<f64, TopologyError> {
    let k = a.len();
    let cells = gamma * kappa;
    let size = libm::pow(k as f64, cells as f64);
    if size > BRUTE_FORCE_LIMIT {
        return Err(TopologyError::TooLarge(size));
    }
    let (g, structure) = match target {
        CountTarget::Cycles(len @ (4 | 6 | 8)) => (len / 2, None),
        CountTarget::Cycles(len) => return Err(TopologyError::Length(len)),
        CountTarget::Cycle8Structure(s) => (4, Some(s)),
    };
    let mut cands = Vec::new();
    for_each_candidate(gamma, kappa, g, |c| {
        if structure.is_none_or(|s| s == c.structure()) {
            cands.push(*c);
        }
    });
    let mut digits = vec![0usize; cells];
    let mut expected = 0.0;
    for _ in 0..size as u64 {
        let weight: f64 = digits.iter().map(|&d| p[d]).product();
        let value = |i: usize, j: usize| a[digits[i * kappa + j]] as i64;
        let active = cands.iter().filter(|c| raw_sum(c, value) == 0).count();
        expected += weight * active as f64;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(expected)
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::math::binom;
    use crate::model::{full_pattern, rng_from_seed};
    use rand::Rng;

    fn matrix(rows: &[&[u32]]) -> PartitioningMatrix {
        let k = rows[0].len();
        PartitioningMatrix::from_raw(rows.len(), k, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    /// Closed walks with distinct consecutive rows/cols, canonicalized, by direct search over
    /// the whole γ×κ grid.
    fn generic_count(gamma: usize, kappa: usize, g: usize) -> usize {
        let mut seen = alloc::collections::BTreeSet::new();
        let total = (gamma * kappa).pow(g as u32);
        for x in 0..total {
            let mut y = x;
            let mut cols = vec![0u16; g];
            let mut rows = vec![0u16; g];
            for k in 0..g {
                cols[k] = (y % kappa) as u16;
                y /= kappa;
                rows[k] = (y % gamma) as u16;
                y /= gamma;
            }
            if (0..g).any(|k| cols[k] == cols[(k + 1) % g] || rows[k] == rows[(k + 1) % g]) {
                continue;
            }
            let best = walk_images(&cols, &rows).into_iter().min().unwrap();
            seen.insert(best);
        }
        seen.len()
    }

    #[test]
    fn cycle6_totals() {
        assert_eq!(enumerate_cycle6(3, 3).len(), 6);
        assert_eq!(enumerate_cycle6(3, 7).len(), 210);
        assert_eq!(enumerate_cycle6(2, 9).len(), 0);
        assert_eq!(enumerate_cycle6(4, 4).len(), generic_count(4, 4, 3));
    }

    #[test]
    fn cycle8_structure_totals() {
        for (gamma, kappa) in [(2, 2), (3, 4), (4, 4), (4, 6), (5, 5)] {
            let t = enumerate_cycle8(gamma, kappa).structure_totals();
            let (g, k) = (gamma, kappa);
            let expect = [
                0.0,
                binom(g, 2) * binom(k, 2),
                3.0 * binom(g, 2) * binom(k, 3) + 3.0 * binom(g, 3) * binom(k, 2),
                18.0 * binom(g, 3) * binom(k, 3),
                6.0 * binom(g, 2) * binom(k, 4) + 6.0 * binom(g, 4) * binom(k, 2),
                36.0 * binom(g, 3) * binom(k, 4) + 36.0 * binom(g, 4) * binom(k, 3),
                72.0 * binom(g, 4) * binom(k, 4),
            ];
            for s in 0..7 {
                assert_eq!(t[s] as f64, expect[s], "{gamma}x{kappa} S{s}");
            }
        }
        assert_eq!(enumerate_cycle8(3, 4).structure_totals()[5], 36);
        assert_eq!(enumerate_cycle8(2, 2).len(), 1);
        assert_eq!(enumerate_cycle8(4, 4).len(), generic_count(4, 4, 4));
    }

    #[test]
    fn per_cell_lists() {
        let lists = enumerate_cycle6(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                for &idx in lists.through(i, j) {
                    assert!(lists.candidates[idx as usize].contains(i, j));
                }
                let direct = lists.candidates.iter().filter(|c| c.contains(i, j)).count();
                assert_eq!(lists.through(i, j).len(), direct);
            }
        }
    }

    #[test]
    fn partition_condition_examples() {
        let c = CycleCandidate::new(&[0, 1, 2], &[0, 1, 2]).unwrap();
        // Cells: (0,0)+ (0,1)- (1,1)+ (1,2)- (2,2)+ (2,0)-.
        let same = PartitioningMatrix::filled(3, 3, 2);
        assert!(check_partition_condition(&c, &same).unwrap());
        let m = matrix(&[&[0, 1, 9], &[9, 1, 1], &[1, 9, 2]]);
        assert!(check_partition_condition(&c, &m).unwrap());
        let m = matrix(&[&[0, 0, 9], &[9, 0, 0], &[1, 9, 0]]);
        assert_eq!(alternating_sum(&c, &m).unwrap(), -1);
        let small = PartitioningMatrix::filled(2, 2, 0);
        assert_eq!(
            alternating_sum(&c, &small),
            Err(TopologyError::Index { row: 1, col: 2 })
        );
    }

    #[test]
    fn lifting_condition_examples() {
        let c = CycleCandidate::new(&[0, 1], &[0, 1]).unwrap();
        assert!(check_lifting_condition(&c, &LiftingMatrix::zeros(2, 2, 7)).unwrap());
        // + cells (0,0),(1,1); - cells (0,1),(1,0).
        let l = LiftingMatrix::new(2, 2, 7, &[vec![2, 6], vec![6, 3]]).unwrap();
        assert!(check_lifting_condition(&c, &l).unwrap());
        let l = LiftingMatrix::new(2, 2, 7, &[vec![2, 5], vec![6, 3]]).unwrap();
        assert!(!check_lifting_condition(&c, &l).unwrap());
    }

    #[test]
    fn span_examples() {
        let c = CycleCandidate::new(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(candidate_span(&c, &PartitioningMatrix::filled(2, 2, 3)).unwrap(), 0);
        assert_eq!(candidate_span(&c, &matrix(&[&[0, 1], &[0, 1]])).unwrap(), 1);
        assert_eq!(
            candidate_span(&c, &matrix(&[&[0, 1], &[1, 0]])),
            Err(TopologyError::NotACandidate(-2))
        );
    }

    /// Lifted Tanner graph built explicitly; cycles counted by depth-first search from the
    /// smallest VN, each cycle found twice (once per direction).
    fn dfs_cycle_counts(p: &PartitioningMatrix, l: &LiftingMatrix, replicas: usize, memory: usize) -> [u64; 5] {
        let (g, k, z) = (p.gamma(), p.kappa(), l.circulant());
        let nv = replicas * k * z;
        let nc = (replicas + memory) * g * z;
        let mut vadj = vec![Vec::new(); nv];
        let mut cadj = vec![Vec::new(); nc];
        for r in 0..replicas {
            for j in 0..k {
                for i in 0..g {
                    let t = r + p.get(i, j) as usize;
                    for u in 0..z {
                        let col = (u + l.get(i, j) as usize) % z;
                        let v = (r * k + j) * z + col;
                        let c = (t * g + i) * z + u;
                        vadj[v].push(c);
                        cadj[c].push(v);
                    }
                }
            }
        }
        #[allow(clippy::too_many_arguments)]
        fn dfs(
            start: usize,
            v: usize,
            depth: usize,
            vadj: &[Vec<usize>],
            cadj: &[Vec<usize>],
            ov: &mut [bool],
            oc: &mut [bool],
            counts: &mut [u64; 5],
        ) {
            for &c in &vadj[v] {
                if oc[c] || depth + 2 > 8 {
                    continue;
                }
                oc[c] = true;
                for &w in &cadj[c] {
                    if w == start && depth + 2 >= 4 {
                        counts[(depth + 2) / 2] += 1;
                        continue;
                    }
                    if w <= start || ov[w] || depth + 2 >= 8 {
                        continue;
                    }
                    ov[w] = true;
                    dfs(start, w, depth + 2, vadj, cadj, ov, oc, counts);
                    ov[w] = false;
                }
                oc[c] = false;
            }
        }
        let mut counts = [0u64; 5];
        let mut ov = vec![false; nv];
        let mut oc = vec![false; nc];
        for v0 in 0..nv {
            ov[v0] = true;
            dfs(v0, v0, 0, &vadj, &cadj, &mut ov, &mut oc, &mut counts);
            ov[v0] = false;
        }
        counts.map(|x| x / 2)
    }

    #[test]
    fn tanner_counts_match_explicit_graph() {
        let mut rng = rng_from_seed(7);
        for trial in 0..12 {
            let (gamma, kappa, memory) = [(2, 3, 1), (3, 3, 2), (3, 4, 1), (2, 4, 2)][trial % 4];
            let z = [2, 3, 4][trial % 3];
            let replicas = 2 + trial % 3;
            let params = CodeParams::full_memory(gamma, kappa, memory, z, replicas).unwrap();
            let p = PartitioningMatrix::from_raw(
                gamma,
                kappa,
                (0..gamma * kappa).map(|_| rng.random_range(0..=memory as u32)).collect(),
            );
            let l = LiftingMatrix::from_raw(
                gamma,
                kappa,
                z,
                (0..gamma * kappa).map(|_| rng.random_range(0..z as u32)).collect(),
            );
            let dfs = dfs_cycle_counts(&p, &l, replicas, memory);
            for len in [4, 6, 8] {
                let ours = count_cycles_tanner(&p, &l, &params, len).unwrap();
                assert_eq!(ours, dfs[len / 2], "trial {trial} len {len}");
            }
        }
    }

    #[test]
    fn tanner_trivial_lifting() {
        let params = CodeParams::new(3, 3, vec![0], 1, 1).unwrap();
        let p = PartitioningMatrix::filled(3, 3, 0);
        let l = LiftingMatrix::zeros(3, 3, 1);
        assert_eq!(count_cycles_tanner(&p, &l, &params, 6).unwrap(), 6);
    }

    #[test]
    fn single_replica_counts_zero_span_candidates() {
        let mut rng = rng_from_seed(3);
        let params = CodeParams::full_memory(3, 5, 2, 5, 1).unwrap();
        let p = PartitioningMatrix::from_raw(3, 5, (0..15).map(|_| rng.random_range(0..3)).collect());
        let l = LiftingMatrix::from_raw(3, 5, 5, (0..15).map(|_| rng.random_range(0..5)).collect());
        for len in [4, 6, 8] {
            let mut expect = 0;
            for_each_candidate(3, 5, len / 2, |c| {
                if raw_sum(c, |i, j| p.get(i, j) as i64) == 0
                    && check_lifting_condition(c, &l).unwrap()
                    && candidate_span(c, &p).unwrap() == 0
                    && lifted_walk_is_simple(c, &p, &l)
                {
                    expect += 5 / c.symmetry() as u64;
                }
            });
            assert_eq!(count_cycles_tanner(&p, &l, &params, len).unwrap(), expect);
        }
    }

    #[test]
    fn path_list_sizes() {
        let lists = enumerate_paths(3, 5);
        assert_eq!(lists.type1(1, 0, 3).count(), 1);
        assert_eq!(lists.type2(0, 2, 1, 4).count(), 3);
        let lists = enumerate_paths(4, 6);
        assert_eq!(lists.type3(0, 1, 2, 5).count(), 2 * 4 * 3);
        assert_eq!(lists.type3(2, 2, 0, 1).count(), 3 * 4 * 3);
        for path in lists.type3(0, 1, 2, 5) {
            let cols = [path.j1, path.interior[0], path.interior[1], path.j2];
            let mut sorted = cols.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 4);
        }
    }

    #[test]
    fn tables_agree_with_path_lists() {
        let mut rng = rng_from_seed(11);
        let p = PartitioningMatrix::from_raw(3, 5, (0..15).map(|_| rng.random_range(0..4)).collect());
        let tables = ObjectTables::new(&p, 3);
        let lists = enumerate_paths(3, 5);
        for j1 in 0..5 {
            for j2 in j1 + 1..5 {
                let t = tables.table(j1, j2).unwrap();
                for a in 0..3 {
                    for b in 0..3 {
                        for l in -9..=9 {
                            let c1 = if a == b { lists.type1(a, j1, j2).filter(|x| x.partition_sum(&p) == l).count() } else { 0 };
                            let c2 = lists.type2(a, b, j1, j2).filter(|x| x.partition_sum(&p) == l).count();
                            let c3 = lists.type3(a, b, j1, j2).filter(|x| x.partition_sum(&p) == l).count();
                            if a == b {
                                assert_eq!(t.get(1, a, 0, l) as usize, c1);
                            }
                            assert_eq!(t.get(2, a, b, l) as usize, c2);
                            assert_eq!(t.get(3, a, b, l) as usize, c3);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn incremental_tables_match_rebuild() {
        let mut rng = rng_from_seed(5);
        let mut p = PartitioningMatrix::from_raw(4, 6, (0..24).map(|_| rng.random_range(0..3)).collect());
        let mut tables = ObjectTables::new(&p, 2);
        for _ in 0..30 {
            let (i, j) = (rng.random_range(0..4), rng.random_range(0..6));
            let old = p.get(i, j);
            p.set(i, j, rng.random_range(0..3));
            tables.update(&p, i, j, old);
            assert_eq!(tables.totals(), ObjectTables::new(&p, 2).totals());
        }
    }

    #[test]
    fn two_rows_have_no_222_objects() {
        let params = CodeParams::full_memory(2, 5, 1, 1, 1).unwrap();
        let p = PartitioningMatrix::filled(2, 5, 0);
        let c = count_objects(&p, &params, None).unwrap();
        assert_eq!(c.t222, 0);
    }

    #[test]
    fn lifted_mode_is_bounded_by_protograph() {
        let params = CodeParams::full_memory(3, 5, 2, 1, 1).unwrap();
        let l = LiftingMatrix::zeros(3, 5, 1);
        // With equal entries and z = 1 each row is a single lifted CN, and three rows cannot
        // host the five distinct CNs of a 2-1-2 object.
        let p = PartitioningMatrix::filled(3, 5, 1);
        let proto = count_objects(&p, &params, None).unwrap();
        let lifted = count_objects(&p, &params, Some((&l, 1))).unwrap();
        assert!(proto.t212 > 0 && proto.t313 > 0);
        assert_eq!(lifted.t212, 0);
        assert!(lifted.t222 <= proto.t222);
        let mut rng = rng_from_seed(2);
        let p = PartitioningMatrix::from_raw(3, 5, (0..15).map(|_| rng.random_range(0..3)).collect());
        let proto = count_objects(&p, &params, None).unwrap();
        let lifted = count_objects(&p, &params, Some((&l, 1))).unwrap();
        assert!(lifted.t212 <= proto.t212 && lifted.t313 <= proto.t313);
    }

    #[test]
    fn brute_force_examples() {
        let a = [0u32, 1];
        let p = [0.5, 0.5];
        let six = brute_force_expected_count(3, 3, &a, &p, CountTarget::Cycles(6)).unwrap();
        assert!(libm::fabs(six - 6.0 * crate::grade::p6(&a, &p)) < 1e-12);
        let all = brute_force_expected_count(2, 3, &[0], &[1.0], CountTarget::Cycles(8)).unwrap();
        assert_eq!(all, enumerate_cycle8(2, 3).len() as f64);
        let eight = brute_force_expected_count(2, 3, &a, &[0.3, 0.7], CountTarget::Cycles(8)).unwrap();
        assert!(libm::fabs(eight - crate::grade::n8(&a, &[0.3, 0.7], 2, 3)) < 1e-12);
        assert!(matches!(
            brute_force_expected_count(4, 8, &full_pattern(2), &[0.2, 0.3, 0.5], CountTarget::Cycles(6)),
            Err(TopologyError::TooLarge(_))
        ));
    }

    #[test]
    fn relabeling_twos_as_fours_never_adds_six_cycles() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let entries: Vec<u32> = (0..12).map(|_| rng.random_range(0..3)).collect();
            let p = PartitioningMatrix::from_raw(3, 4, entries.clone());
            let q = PartitioningMatrix::from_raw(3, 4, entries.iter().map(|&x| if x == 2 { 4 } else { x }).collect());
            assert!(count_active_candidates(&q, 6).unwrap() <= count_active_candidates(&p, 6).unwrap());
        }
    }
}
