//! Synthetic cluster logs with injected failures.
//!
//! A [`ScenarioSpec`] describes a small Spark/HDFS-shaped cluster, its event
//! rate and an optional failure. [`generate`] turns it into a labeled
//! structured corpus: per-node event streams merged by virtual time, with
//! failure records injected in four stages (detection, interleaving,
//! recovery, cleanup) or, for interference, wherever the Gilbert-Elliott
//! channel drops a communication event.
//!
//! Everything is driven by the spec seed. Each node, the failure injector
//! and the interference channel draw from separate generator streams, so a
//! failure run and its no-failure baseline share the same normal traffic up
//! to the failure onset.

mod ge;
mod openstack;
mod scenario;
pub mod templates;
mod text;

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::labels_from_windows;
use crate::ingest::{window, LogRecord, LogWindow};

pub use ge::{ge_step, GeState, GilbertElliott, GilbertElliottParams};
pub use openstack::{openstack_baseline, openstack_shape, OPENSTACK_WINDOWS};
pub use scenario::generate;
pub use text::{natural_corpus, templated_corpus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct SpecError {
    /// Dotted path of the offending spec field.
    pub field: String,
    pub message: String,
}

impl SpecError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Master,
    Worker,
    NameNode,
    DataNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    /// Machine the node runs on; defaults to the node id. Nodes sharing a
    /// host fail together in combined scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<String>,
}

impl NodeSpec {
    pub fn new(id: &str, role: Role, host: &str) -> Self {
        NodeSpec {
            id: id.into(),
            role,
            host: Some(host.into()),
        }
    }

    pub fn host(&self) -> &str {
        self.host.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadProfile {
    /// Mean events per virtual second, per node.
    pub event_rate: f64,
}

impl Default for WorkloadProfile {
    fn default() -> Self {
        WorkloadProfile { event_rate: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    ComputeNode,
    StorageNode,
    Interference,
    Combined,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::ComputeNode => "compute-node",
            FailureKind::StorageNode => "storage-node",
            FailureKind::Interference => "interference",
            FailureKind::Combined => "combined",
        })
    }
}

/// Durations (virtual seconds) and record counts of the failure stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StagePlan {
    pub detection_secs: f64,
    pub interleaving_secs: f64,
    pub recovery_secs: f64,
    pub cleanup_secs: f64,
    pub detection_records: usize,
    pub interleaving_records: usize,
    pub recovery_records: usize,
    /// Storage failures only: records from surviving data nodes during
    /// recovery.
    pub peer_records: usize,
    pub cleanup_records: usize,
    /// Upper bound of the recovery attempt counter.
    pub max_attempts: u32,
}

impl Default for StagePlan {
    fn default() -> Self {
        StagePlan {
            detection_secs: 1.0,
            interleaving_secs: 2.0,
            recovery_secs: 3.0,
            cleanup_secs: 1.5,
            detection_records: 10,
            interleaving_records: 3,
            recovery_records: 12,
            peer_records: 6,
            cleanup_records: 6,
            max_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureSpec {
    pub kind: FailureKind,
    /// Node id, or host name for combined failures.
    pub target: String,
    /// Virtual time of the failure.
    pub onset: f64,
    /// Channel parameters for interference; the default channel is used
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge_params: Option<GilbertElliottParams>,
    /// Multiplier on stage record counts.
    #[serde(default = "one")]
    pub intensity: f64,
    #[serde(default)]
    pub stages: StagePlan,
}

/// Length of a training run relative to the scenario it serves.
pub const BASELINE_SPAN: f64 = 4.0;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    /// Virtual seconds of activity.
    pub duration: f64,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub workload: WorkloadProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureSpec>,
}

impl ScenarioSpec {
    /// One master/name-node machine and three worker/data-node machines,
    /// four minutes of activity, no failure.
    pub fn cluster(seed: u64) -> Self {
        let mut nodes = vec![
            NodeSpec::new("spark-master", Role::Master, "master"),
            NodeSpec::new("namenode", Role::NameNode, "master"),
        ];
        for i in 1..=3 {
            let host = format!("node{i}");
            nodes.push(NodeSpec::new(&format!("worker-{i}"), Role::Worker, &host));
            nodes.push(NodeSpec::new(
                &format!("datanode-{i}"),
                Role::DataNode,
                &host,
            ));
        }
        ScenarioSpec {
            seed,
            duration: 240.0,
            nodes,
            workload: WorkloadProfile::default(),
            failure: None,
        }
    }

    /// [`ScenarioSpec::cluster`] with a failure of `kind` on the third
    /// machine halfway through the run.
    pub fn with_default_failure(seed: u64, kind: FailureKind) -> Self {
        let mut spec = ScenarioSpec::cluster(seed);
        let target = match kind {
            FailureKind::ComputeNode => "worker-3",
            FailureKind::StorageNode => "datanode-3",
            FailureKind::Interference | FailureKind::Combined => "node3",
        };
        let onset = match kind {
            FailureKind::Interference => spec.duration * 0.25,
            _ => spec.duration * 0.5,
        };
        spec.failure = Some(FailureSpec {
            kind,
            target: target.into(),
            onset,
            ge_params: (kind == FailureKind::Interference).then(GilbertElliottParams::default),
            intensity: 1.0,
            stages: StagePlan::default(),
        });
        spec
    }

    /// The same cluster and workload without the failure, on a different
    /// seed and [`BASELINE_SPAN`] times as long: the normal run a model is
    /// trained on.
    pub fn baseline(&self) -> Self {
        ScenarioSpec {
            seed: splitmix64(self.seed ^ 0xBA5E_11AE),
            duration: self.duration * BASELINE_SPAN,
            failure: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SpecError::new(
                "duration",
                "must be a positive number of seconds",
            ));
        }
        if self.nodes.is_empty() {
            return Err(SpecError::new("nodes", "roster is empty"));
        }
        let mut ids = HashSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.trim().is_empty() {
                return Err(SpecError::new(format!("nodes[{i}].id"), "is empty"));
            }
            if !ids.insert(n.id.as_str()) {
                return Err(SpecError::new(
                    format!("nodes[{i}].id"),
                    format!("duplicate node id {:?}", n.id),
                ));
            }
        }
        let rate = self.workload.event_rate;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SpecError::new("workload.event_rate", "must be positive"));
        }
        if let Some(f) = &self.failure {
            self.validate_failure(f)?;
        }
        Ok(())
    }

    fn count(&self, role: Role) -> usize {
        self.nodes.iter().filter(|n| n.role == role).count()
    }

    fn validate_failure(&self, f: &FailureSpec) -> Result<(), SpecError> {
        if !(f.onset.is_finite() && f.onset >= 0.0 && f.onset < self.duration) {
            return Err(SpecError::new(
                "failure.onset",
                format!("{} is outside the run [0, {})", f.onset, self.duration),
            ));
        }
        if !(f.intensity.is_finite() && f.intensity > 0.0) {
            return Err(SpecError::new("failure.intensity", "must be positive"));
        }
        let st = &f.stages;
        for (name, v) in [
            ("detection_secs", st.detection_secs),
            ("interleaving_secs", st.interleaving_secs),
            ("recovery_secs", st.recovery_secs),
            ("cleanup_secs", st.cleanup_secs),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpecError::new(
                    format!("failure.stages.{name}"),
                    "must be positive",
                ));
            }
        }
        if st.max_attempts == 0 {
            return Err(SpecError::new(
                "failure.stages.max_attempts",
                "must be at least 1",
            ));
        }
        let compute_ok = self.count(Role::Master) >= 1 && self.count(Role::Worker) >= 1;
        let storage_ok = self.count(Role::NameNode) >= 1 && self.count(Role::DataNode) >= 2;
        let target_node = self.nodes.iter().find(|n| n.id == f.target);
        let on_host = |role: Role| {
            self.nodes
                .iter()
                .any(|n| n.role == role && (n.host() == f.target || n.id == f.target))
        };
        match f.kind {
            FailureKind::ComputeNode => {
                if !compute_ok {
                    return Err(SpecError::new(
                        "nodes",
                        "compute-node failures need at least one master and one worker",
                    ));
                }
                if target_node.map(|n| n.role) != Some(Role::Worker) {
                    return Err(SpecError::new(
                        "failure.target",
                        format!("{:?} is not a worker node", f.target),
                    ));
                }
            }
            FailureKind::StorageNode => {
                if !storage_ok {
                    return Err(SpecError::new(
                        "nodes",
                        "storage-node failures need a name-node and at least two data-nodes",
                    ));
                }
                if target_node.map(|n| n.role) != Some(Role::DataNode) {
                    return Err(SpecError::new(
                        "failure.target",
                        format!("{:?} is not a data-node", f.target),
                    ));
                }
            }
            FailureKind::Combined => {
                if !(compute_ok && storage_ok) {
                    return Err(SpecError::new(
                        "nodes",
                        "combined failures need a master, a worker, a name-node and two data-nodes",
                    ));
                }
                if !(on_host(Role::Worker) && on_host(Role::DataNode)) {
                    return Err(SpecError::new(
                        "failure.target",
                        format!("{:?} does not host both a worker and a data-node", f.target),
                    ));
                }
            }
            FailureKind::Interference => {
                if target_node.is_none() && !self.nodes.iter().any(|n| n.host() == f.target) {
                    return Err(SpecError::new(
                        "failure.target",
                        format!("no node or host named {:?}", f.target),
                    ));
                }
            }
        }
        if let Some(ge) = &f.ge_params {
            ge.validate()
                .map_err(|m| SpecError::new("failure.ge_params", m))?;
        }
        Ok(())
    }
}

/// Failure stage a truth region belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "S1")]
    Detection,
    #[serde(rename = "S2")]
    Interleaving,
    #[serde(rename = "S3")]
    Recovery,
    #[serde(rename = "S4")]
    Cleanup,
    #[serde(rename = "interference")]
    Degradation,
    /// A failed operation outside the staged scenarios.
    #[serde(rename = "fault")]
    Fault,
}

/// Byte span `[start, end)` of the corpus produced during a failure stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRegion {
    pub start: u64,
    pub end: u64,
    pub stage: Stage,
}

impl TruthRegion {
    /// Indices of the windows whose spans intersect this region.
    pub fn window_range(&self, windows: &[LogWindow]) -> Option<(usize, usize)> {
        let hits: Vec<usize> = windows
            .iter()
            .filter(|w| w.span.0 < self.end && self.start < w.span.1)
            .map(|w| w.index)
            .collect();
        Some((*hits.first()?, *hits.last()?))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledCorpus {
    pub records: Vec<LogRecord>,
    pub truth_regions: Vec<TruthRegion>,
}

impl LabeledCorpus {
    /// Assigns offsets and lengths for the structured serialization.
    pub(crate) fn from_unplaced(mut records: Vec<LogRecord>, truth: Vec<TruthRegion>) -> Self {
        let mut offset = 0;
        for r in &mut records {
            r.offset = offset;
            r.len = r.to_structured_line().len() as u64 + 1;
            offset += r.len;
        }
        LabeledCorpus {
            records,
            truth_regions: truth,
        }
    }

    /// The corpus in structured (JSON lines) form.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            out.extend_from_slice(r.to_structured_line().as_bytes());
            out.push(b'\n');
        }
        out
    }

    pub fn byte_len(&self) -> u64 {
        self.records.last().map_or(0, LogRecord::end)
    }

    pub fn windows(&self, target_bytes: u64) -> Vec<LogWindow> {
        window(self.records.iter().cloned(), target_bytes).collect()
    }

    /// Per-window ground truth at `target_bytes`.
    pub fn window_labels(&self, target_bytes: u64) -> Vec<bool> {
        labels_from_windows(&self.windows(target_bytes))
    }

    pub fn anomalous_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_anomalous()).count()
    }

    /// The truth file: a JSON list of `{start, end, stage}` objects.
    pub fn truth_json(&self) -> String {
        serde_json::to_string_pretty(&self.truth_regions).expect("regions serialize")
    }
}

/// Bijective 64-bit mixer used to derive independent seeds.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for stream `stream`, item `index`, of a run seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(
        splitmix64(seed) ^ splitmix64(stream.wrapping_mul(0x1000_0000_01B3) ^ index),
    ))
}
