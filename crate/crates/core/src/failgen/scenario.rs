use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::templates::{self, pick, render, RenderCtx, Template};
use super::{
    ge_step, stream_rng, FailureKind, FailureSpec, GeState, LabeledCorpus, Role, ScenarioSpec,
    SpecError, Stage, TruthRegion,
};
use crate::ingest::{Label, LogRecord, Timestamp};

const NODE_STREAM: u64 = 1;
const FAILURE_STREAM: u64 = 2;
const CHANNEL_STREAM: u64 = 3;
const DEGRADED_STREAM: u64 = 4;

struct Event {
    ts: f64,
    node: usize,
    level: &'static str,
    msg: String,
    stage: Option<Stage>,
    comm: bool,
}

struct Roster<'a> {
    spec: &'a ScenarioSpec,
    /// IP per node index, shared by nodes on one host.
    ips: Vec<String>,
}

impl<'a> Roster<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        let mut hosts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut order = Vec::new();
        for n in &spec.nodes {
            if !hosts.contains_key(n.host()) {
                hosts.insert(n.host(), order.len());
                order.push(n.host());
            }
        }
        let ips = spec
            .nodes
            .iter()
            .map(|n| format!("10.0.0.{}", 11 + hosts[n.host()]))
            .collect();
        Roster { spec, ips }
    }

    fn first(&self, role: Role) -> Option<usize> {
        self.spec.nodes.iter().position(|n| n.role == role)
    }

    /// Distinct IPs of nodes matching `keep`.
    fn ips_where(&self, keep: impl Fn(usize) -> bool) -> Vec<String> {
        let mut ips: Vec<String> = (0..self.ips.len())
            .filter(|&i| keep(i))
            .map(|i| self.ips[i].clone())
            .collect();
        ips.sort();
        ips.dedup();
        ips
    }

    fn on_target(&self, i: usize, target: &str) -> bool {
        let n = &self.spec.nodes[i];
        n.id == target || n.host() == target
    }

    fn target_ip(&self, target: &str) -> String {
        (0..self.ips.len())
            .find(|&i| self.on_target(i, target))
            .map(|i| self.ips[i].clone())
            .unwrap_or_default()
    }
}

/// Generates the corpus described by `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<LabeledCorpus, SpecError> {
    spec.validate()?;
    let roster = Roster::new(spec);
    let mut events = normal_events(spec, &roster);
    let mut stages = Vec::new();
    if let Some(f) = &spec.failure {
        match f.kind {
            FailureKind::ComputeNode | FailureKind::StorageNode | FailureKind::Combined => {
                stages = stage_intervals(f);
                events.extend(staged_failure(spec.seed, f, &roster, &stages));
            }
            FailureKind::Interference => {
                let extra = interference(spec.seed, f, &roster, &events);
                events.extend(extra);
            }
        }
    }
    events.sort_by(|a, b| a.ts.total_cmp(&b.ts).then(a.node.cmp(&b.node)));
    Ok(assemble(spec, events, &stages))
}

fn silenced(spec: &ScenarioSpec, roster: &Roster<'_>, i: usize) -> bool {
    let Some(f) = &spec.failure else {
        return false;
    };
    match f.kind {
        FailureKind::ComputeNode | FailureKind::StorageNode => spec.nodes[i].id == f.target,
        FailureKind::Combined => roster.on_target(i, &f.target),
        FailureKind::Interference => false,
    }
}

fn normal_events(spec: &ScenarioSpec, roster: &Roster<'_>) -> Vec<Event> {
    let gap = Exp::new(spec.workload.event_rate).expect("validated rate");
    let mut events = Vec::new();
    for (i, node) in spec.nodes.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, NODE_STREAM, i as u64);
        let stop = match &spec.failure {
            Some(f) if silenced(spec, roster, i) => f.onset,
            _ => spec.duration,
        };
        let own = &roster.ips[i];
        let peers = roster.ips_where(|j| roster.ips[j] != *own);
        let ctx = RenderCtx {
            ip: own,
            peer_ips: &peers,
            target_ip: own,
            attempt: 1,
            max_attempts: 1,
        };
        let pool = templates::normal_pool(node.role);
        let mut ts = 0.0;
        loop {
            ts += gap.sample(&mut rng);
            if ts >= stop {
                break;
            }
            let tmpl = pick(pool, &mut rng);
            events.push(Event {
                ts,
                node: i,
                level: tmpl.level,
                msg: render(tmpl.text, &mut rng, &ctx),
                stage: None,
                comm: tmpl.comm,
            });
        }
    }
    events
}

fn scaled(count: usize, intensity: f64) -> usize {
    ((count as f64 * intensity).round() as usize).max(1)
}

/// Stage pools for one failing subsystem.
struct Pools {
    emitter: usize,
    detection: &'static [Template],
    interleaved: &'static [Template],
    recovery: &'static [Template],
    cleanup: &'static [Template],
}

/// `(stage, from, to)` in virtual seconds, back to back from the onset.
fn stage_intervals(f: &FailureSpec) -> Vec<(Stage, f64, f64)> {
    let st = &f.stages;
    let mut t = f.onset;
    [
        (Stage::Detection, st.detection_secs),
        (Stage::Interleaving, st.interleaving_secs),
        (Stage::Recovery, st.recovery_secs),
        (Stage::Cleanup, st.cleanup_secs),
    ]
    .into_iter()
    .map(|(stage, secs)| {
        let from = t;
        t += secs;
        (stage, from, t)
    })
    .collect()
}

fn staged_failure(
    seed: u64,
    f: &FailureSpec,
    roster: &Roster<'_>,
    stages: &[(Stage, f64, f64)],
) -> Vec<Event> {
    let mut rng = stream_rng(seed, FAILURE_STREAM, 0);
    let target_ip = roster.target_ip(&f.target);
    let survivors = roster.ips_where(|j| roster.ips[j] != target_ip);
    let mut subsystems = Vec::new();
    if matches!(f.kind, FailureKind::ComputeNode | FailureKind::Combined) {
        subsystems.push(Pools {
            emitter: roster.first(Role::Master).expect("validated roster"),
            detection: templates::COMPUTE_DETECTION,
            interleaved: templates::COMPUTE_INTERLEAVED,
            recovery: templates::COMPUTE_RECOVERY,
            cleanup: templates::COMPUTE_CLEANUP,
        });
    }
    if matches!(f.kind, FailureKind::StorageNode | FailureKind::Combined) {
        subsystems.push(Pools {
            emitter: roster.first(Role::NameNode).expect("validated roster"),
            detection: templates::STORAGE_DETECTION,
            interleaved: templates::STORAGE_INTERLEAVED,
            recovery: templates::STORAGE_RECOVERY,
            cleanup: templates::STORAGE_CLEANUP,
        });
    }

    let st = &f.stages;
    let (s3, s4) = (stages[2].1, stages[2].2);
    let mut events = Vec::new();
    for pools in &subsystems {
        let ctx = |attempt| RenderCtx {
            ip: &roster.ips[pools.emitter],
            peer_ips: &survivors,
            target_ip: &target_ip,
            attempt,
            max_attempts: st.max_attempts,
        };
        let plan = [
            (pools.detection, st.detection_records),
            (pools.interleaved, st.interleaving_records),
            (pools.recovery, st.recovery_records),
            (pools.cleanup, st.cleanup_records),
        ];
        for (&(stage, from, to), (pool, count)) in stages.iter().zip(plan) {
            let mut times: Vec<f64> = (0..scaled(count, f.intensity))
                .map(|_| rng.random_range(from..to))
                .collect();
            times.sort_by(f64::total_cmp);
            for (k, ts) in times.into_iter().enumerate() {
                let tmpl = pick(pool, &mut rng);
                let attempt = k as u32 % st.max_attempts + 1;
                events.push(Event {
                    ts,
                    node: pools.emitter,
                    level: tmpl.level,
                    msg: render(tmpl.text, &mut rng, &ctx(attempt)),
                    stage: Some(stage),
                    comm: false,
                });
            }
        }
    }

    if matches!(f.kind, FailureKind::StorageNode | FailureKind::Combined) {
        let peers: Vec<usize> = (0..roster.spec.nodes.len())
            .filter(|&i| roster.spec.nodes[i].role == Role::DataNode && roster.ips[i] != target_ip)
            .collect();
        let from = s3 + 0.3 * st.recovery_secs;
        let mut times: Vec<f64> = (0..scaled(st.peer_records, f.intensity))
            .map(|_| rng.random_range(from..s4))
            .collect();
        times.sort_by(f64::total_cmp);
        for (k, ts) in times.into_iter().enumerate() {
            let node = peers[rng.random_range(0..peers.len())];
            let tmpl = pick(templates::STORAGE_PEER, &mut rng);
            let ctx = RenderCtx {
                ip: &roster.ips[node],
                peer_ips: &survivors,
                target_ip: &target_ip,
                attempt: k as u32 % st.max_attempts + 1,
                max_attempts: st.max_attempts,
            };
            events.push(Event {
                ts,
                node,
                level: tmpl.level,
                msg: render(tmpl.text, &mut rng, &ctx),
                stage: Some(Stage::Recovery),
                comm: false,
            });
        }
    }
    events
}

/// One channel step per communication event of the target after onset.
///
/// The channel has its own stream and every step draws the same number of
/// uniforms, and each degraded record is rendered from a generator keyed by
/// the event index. Raising `e_bad` therefore only adds degraded records.
fn interference(seed: u64, f: &FailureSpec, roster: &Roster<'_>, normal: &[Event]) -> Vec<Event> {
    let params = f.ge_params.unwrap_or_default();
    let mut channel = stream_rng(seed, CHANNEL_STREAM, 0);
    let escalation_node = roster.first(Role::Master);
    let mut comm: Vec<&Event> = normal
        .iter()
        .filter(|e| e.comm && e.ts >= f.onset && roster.on_target(e.node, &f.target))
        .collect();
    comm.sort_by(|a, b| a.ts.total_cmp(&b.ts).then(a.node.cmp(&b.node)));

    let mut state = GeState::Good;
    let mut streak = 0u32;
    let mut out = Vec::new();
    for (j, ev) in comm.into_iter().enumerate() {
        let (next, error) = ge_step(state, &params, &mut channel);
        state = next;
        if !error {
            streak = 0;
            continue;
        }
        streak += 1;
        let mut rng: ChaCha8Rng = stream_rng(seed, DEGRADED_STREAM, j as u64);
        let own = &roster.ips[ev.node];
        let peers = roster.ips_where(|i| roster.ips[i] != *own);
        let ctx = RenderCtx {
            ip: own,
            peer_ips: &peers,
            target_ip: own,
            attempt: streak,
            max_attempts: 3,
        };
        let pool = match roster.spec.nodes[ev.node].role {
            Role::DataNode | Role::NameNode => templates::DEGRADED_DATANODE,
            Role::Worker | Role::Master => templates::DEGRADED_WORKER,
        };
        let tmpl = pick(pool, &mut rng);
        let delay = rng.random_range(0.001..0.2);
        out.push(Event {
            ts: ev.ts + delay,
            node: ev.node,
            level: tmpl.level,
            msg: render(tmpl.text, &mut rng, &ctx),
            stage: Some(Stage::Degradation),
            comm: false,
        });
        if streak.is_multiple_of(3) {
            let node = escalation_node.unwrap_or(ev.node);
            let tmpl = pick(templates::DEGRADED_ESCALATION, &mut rng);
            let ctx = RenderCtx {
                ip: &roster.ips[node],
                peer_ips: std::slice::from_ref(own),
                ..ctx
            };
            out.push(Event {
                ts: ev.ts + delay + rng.random_range(0.001..0.1),
                node,
                level: tmpl.level,
                msg: render(tmpl.text, &mut rng, &ctx),
                stage: Some(Stage::Degradation),
                comm: false,
            });
        }
    }
    out
}

/// Truth regions: each failure stage covers every record logged during it,
/// healthy-node traffic included; each degraded record is its own region.
fn assemble(
    spec: &ScenarioSpec,
    events: Vec<Event>,
    stages: &[(Stage, f64, f64)],
) -> LabeledCorpus {
    let meta: Vec<(f64, Option<Stage>)> = events.iter().map(|e| (e.ts, e.stage)).collect();
    let records: Vec<LogRecord> = events
        .into_iter()
        .map(|e| LogRecord {
            offset: 0,
            len: 0,
            raw: e.msg,
            ts: Some(Timestamp::Seconds((e.ts * 1000.0).round() / 1000.0)),
            node: Some(spec.nodes[e.node].id.clone()),
            level: Some(e.level.to_owned()),
            session: None,
            label: Some(if e.stage.is_some() {
                Label::Anomalous
            } else {
                Label::Normal
            }),
        })
        .collect();
    let mut corpus = LabeledCorpus::from_unplaced(records, Vec::new());

    let mut truth = Vec::new();
    let mut spans: Vec<Option<(u64, u64)>> = vec![None; stages.len()];
    for (r, &(ts, stage)) in corpus.records.iter().zip(&meta) {
        if stage == Some(Stage::Degradation) {
            truth.push(TruthRegion {
                start: r.offset,
                end: r.end(),
                stage: Stage::Degradation,
            });
        }
        if let Some(k) = stages
            .iter()
            .position(|&(_, from, to)| from <= ts && ts < to)
        {
            let span = spans[k].get_or_insert((r.offset, r.end()));
            span.1 = r.end();
        }
    }
    truth.extend(
        stages
            .iter()
            .zip(spans)
            .filter_map(|(&(stage, _, _), span)| {
                span.map(|(start, end)| TruthRegion { start, end, stage })
            }),
    );
    truth.sort_by_key(|t| t.start);
    corpus.truth_regions = truth;
    corpus
}
