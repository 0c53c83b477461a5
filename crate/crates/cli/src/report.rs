//! JSON reports emitted by the commands.

use scgrade_core::ao::CpoResult;
use scgrade_core::grade::GradeResult;
use scgrade_core::topology::ObjectCounts;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct GradeReport {
    pub pattern: Vec<u32>,
    pub distribution: Vec<f64>,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub iters: usize,
    pub converged: bool,
    pub stop: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<RankedPattern>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedPattern {
    pub pattern: Vec<u32>,
    pub objective: f64,
}

impl GradeReport {
    pub fn new(pattern: &[u32], r: &GradeResult, ranking: Option<Vec<(Vec<u32>, f64)>>) -> Self {
        GradeReport {
            pattern: pattern.to_vec(),
            distribution: r.distribution.probs().to_vec(),
            objective_initial: r.objective_initial,
            objective_final: r.objective_final,
            iters: r.iters,
            converged: r.converged(),
            stop: format!("{:?}", r.stop).to_lowercase(),
            ranking: ranking.map(|v| {
                v.into_iter()
                    .map(|(pattern, objective)| RankedPattern { pattern, objective })
                    .collect()
            }),
        }
    }
}

/// Cycle and object counts; object fields are absent when not computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub cycles4: u64,
    pub cycles6: u64,
    pub cycles8: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t212: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t213: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t222: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t313: Option<u64>,
}

impl Counts {
    pub fn set_objects(&mut self, o: ObjectCounts) {
        self.t212 = Some(o.t212);
        self.t213 = Some(o.t213);
        self.t222 = Some(o.t222);
        self.t313 = Some(o.t313);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub gamma: usize,
    pub kappa: usize,
    pub memory: usize,
    pub circulant: usize,
    pub replicas: usize,
    pub protograph: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifted: Option<Counts>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub cycles4: usize,
    pub surviving: Vec<usize>,
    pub trace: Vec<f64>,
    pub cycles4_free: bool,
    pub truncated: bool,
}

impl From<&CpoResult> for LiftReport {
    fn from(r: &CpoResult) -> Self {
        LiftReport {
            cycles4: r.cycles4,
            surviving: r.surviving.clone(),
            trace: r.trace.clone(),
            cycles4_free: r.cycles4_free,
            truncated: r.truncated,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructReport {
    pub seed: u64,
    pub restart_seed: u64,
    pub pattern: Vec<u32>,
    pub distribution: Vec<f64>,
    pub initial_counts: Vec<usize>,
    pub deviation: Vec<usize>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub protograph: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifted: Option<Counts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftReport>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Violation {
    pub row: usize,
    pub col: usize,
    pub value: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub pattern: Vec<u32>,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub objective: f64,
    pub rows: Vec<Vec<u32>>,
}
