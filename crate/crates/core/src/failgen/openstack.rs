//! Cloud-controller corpus with the shape of the OpenStack case study: 52
//! windows of 4096 bytes, instance spawn failures in windows 24 to 27 and a
//! burst of rare but legitimate maintenance messages in window 17.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::templates::{render, RenderCtx};
use super::{stream_rng, LabeledCorpus, Stage, TruthRegion};
use crate::ingest::{Label, LogRecord, Timestamp, DEFAULT_WINDOW_BYTES};

pub const OPENSTACK_WINDOWS: usize = 52;
const FAULT_WINDOWS: std::ops::RangeInclusive<usize> = 24..=27;
const RARE_WINDOW: usize = 17;
const TENANT: &str = "54fadb412c4e40cdbaed9335e4c35a9e";

const LIFECYCLE: &[&str] = &[
    "[instance: {inst}] Attempting claim: memory {n} MB, disk {n} GB, vcpus {n} CPU",
    "[instance: {inst}] Total memory: {n} MB, used: {n}.00 MB",
    "[instance: {inst}] Claim successful",
    "[instance: {inst}] Creating image",
    "[instance: {inst}] VM Started (Lifecycle Event)",
    "[instance: {inst}] VM Resumed (Lifecycle Event)",
    "[instance: {inst}] During sync_power_state the instance has a pending task (spawning). Skip.",
    "[instance: {inst}] Took {secs} seconds to spawn the instance on the hypervisor.",
    "[instance: {inst}] Took {secs} seconds to build instance.",
    "[instance: {inst}] Terminating instance",
    "[instance: {inst}] Instance destroyed successfully.",
    "[instance: {inst}] Deleting instance files /var/lib/nova/instances/{inst}_del",
    "[instance: {inst}] Deletion of /var/lib/nova/instances/{inst}_del complete",
    "[instance: {inst}] Took {secs} seconds to destroy the instance on the hypervisor.",
];

const BACKGROUND: &[&str] = &[
    "{ip} \"GET /v2/{tenant}/servers/detail HTTP/1.1\" status: 200 len: {n} time: {secs}",
    "{ip} \"GET /v2/{tenant}/os-services HTTP/1.1\" status: 200 len: {n} time: {secs}",
    "Auditing locally available compute resources for node cp-{n}.cluster",
    "Final resource view: name=cp-{n}.cluster phys_ram={n}MB used_ram={n}MB phys_disk={n}GB used_disk={n}GB total_vcpus={n} used_vcpus={n} pci_stats=[]",
    "Compute_service record updated for cp-{n}.cluster",
    "image {uuid} at (/var/lib/nova/instances/_base/{hex}): checking",
    "Active base files: /var/lib/nova/instances/_base/{hex}",
];

const RARE: &[&str] = &[
    "Running instance usage audit for host cp-{n}.cluster from {n}-{n}-{n} to {n}-{n}-{n}. {n} instances.",
    "[instance: {inst}] Rebuilding instance",
    "[instance: {inst}] Attaching volume {uuid} to /dev/vdb",
    "[instance: {inst}] Detaching volume {uuid} from mountpoint /dev/vdb",
    "Unable to find a valid cached image for {uuid}, fetching from glance",
    "Rescheduling periodic task _heal_instance_info_cache after {n} skipped runs",
];

const SPAWN_FAILURE: &[&str] = &[
    "[instance: {inst}] Attempting claim: memory {n} MB, disk {n} GB, vcpus {n} CPU",
    "[instance: {inst}] Claim successful",
    "[instance: {inst}] Creating image",
    "[instance: {inst}] Instance failed to spawn",
    "[instance: {inst}] Failed to allocate network(s): VirtualInterfaceCreateException: Virtual Interface creation failed",
    "[instance: {inst}] Build of instance {inst} aborted: Failed to allocate the network(s), not rescheduling.",
    "[instance: {inst}] Setting instance vm_state to ERROR",
    "[instance: {inst}] Deallocating network for instance",
];

/// Training odds of a rare message in place of a background one. The
/// scored corpus carries rare messages only in its maintenance window.
const RARE_ODDS: f64 = 0.004;
const BACKGROUND_SHARE: f64 = 0.35;
const CONCURRENT_SESSIONS: usize = 3;
const FAULT_SESSIONS: usize = 2;
const RARE_BURST: usize = 10;

struct Session {
    inst: String,
    host: u32,
    step: usize,
}

/// Record source: interleaved instance lifecycles over background chatter.
struct Cloud {
    rng: ChaCha8Rng,
    clock: f64,
    gap: Exp<f64>,
    sessions: Vec<Session>,
    ips: Vec<String>,
    rare_odds: f64,
}

impl Cloud {
    fn new(rng: ChaCha8Rng, rare_odds: f64) -> Self {
        let mut cloud = Cloud {
            rng,
            clock: 0.0,
            gap: Exp::new(5.0).expect("positive rate"),
            sessions: Vec::new(),
            ips: (1..=4).map(|i| format!("10.11.10.{i}")).collect(),
            rare_odds,
        };
        for _ in 0..CONCURRENT_SESSIONS {
            let s = cloud.new_session();
            cloud.sessions.push(s);
        }
        cloud
    }

    fn new_session(&mut self) -> Session {
        Session {
            inst: super::templates::uuid(&mut self.rng),
            host: self.rng.random_range(1..=3),
            step: 0,
        }
    }

    fn fill(&mut self, text: &str, inst: &str) -> String {
        let text = text.replace("{inst}", inst).replace("{tenant}", TENANT);
        let ctx = RenderCtx {
            ip: &self.ips[0],
            peer_ips: &self.ips,
            target_ip: &self.ips[0],
            attempt: 1,
            max_attempts: 1,
        };
        render(&text, &mut self.rng, &ctx)
    }

    fn record(
        &mut self,
        node: String,
        level: &str,
        msg: String,
        session: Option<String>,
        label: Label,
    ) -> LogRecord {
        self.clock += self.gap.sample(&mut self.rng);
        LogRecord {
            offset: 0,
            len: 0,
            raw: msg,
            ts: Some(Timestamp::Seconds((self.clock * 1000.0).round() / 1000.0)),
            node: Some(node),
            level: Some(level.to_owned()),
            session,
            label: Some(label),
        }
    }

    fn rare(&mut self) -> LogRecord {
        let text = RARE[self.rng.random_range(0..RARE.len())];
        let inst = super::templates::uuid(&mut self.rng);
        let host = self.rng.random_range(1..=3);
        let msg = self.fill(text, &inst);
        let session = text.contains("{inst}").then_some(inst);
        self.record(
            format!("nova-compute.cp-{host}"),
            "INFO",
            msg,
            session,
            Label::Normal,
        )
    }

    fn next_normal(&mut self) -> LogRecord {
        if self.rng.random_bool(BACKGROUND_SHARE) {
            if self.rng.random_bool(self.rare_odds) {
                return self.rare();
            }
            let text = BACKGROUND[self.rng.random_range(0..BACKGROUND.len())];
            let msg = self.fill(text, "");
            let node = if text.contains("HTTP") {
                "nova-api"
            } else {
                "nova-compute.cp-1"
            };
            return self.record(node.into(), "INFO", msg, None, Label::Normal);
        }
        let k = self.rng.random_range(0..self.sessions.len());
        let (inst, host, step) = {
            let s = &self.sessions[k];
            (s.inst.clone(), s.host, s.step)
        };
        let msg = self.fill(LIFECYCLE[step], &inst);
        if step + 1 == LIFECYCLE.len() {
            self.sessions[k] = self.new_session();
        } else {
            self.sessions[k].step += 1;
        }
        self.record(
            format!("nova-compute.cp-{host}"),
            "INFO",
            msg,
            Some(inst),
            Label::Normal,
        )
    }

    fn spawn_failure(&mut self) -> Vec<LogRecord> {
        let inst = super::templates::uuid(&mut self.rng);
        let host = self.rng.random_range(1..=3);
        SPAWN_FAILURE
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let msg = self.fill(text, &inst);
                let level = if i >= 3 { "ERROR" } else { "INFO" };
                self.record(
                    format!("nova-compute.cp-{host}"),
                    level,
                    msg,
                    Some(inst.clone()),
                    Label::Anomalous,
                )
            })
            .collect()
    }
}

/// Appends records while tracking greedy window boundaries.
struct Layout {
    records: Vec<LogRecord>,
    filled: u64,
    window: usize,
}

impl Layout {
    fn push(&mut self, mut r: LogRecord) {
        r.offset = self.records.last().map_or(0, LogRecord::end);
        r.len = r.to_structured_line().len() as u64 + 1;
        self.filled += r.len;
        if self.filled >= DEFAULT_WINDOW_BYTES {
            self.filled = 0;
            self.window += 1;
        }
        self.records.push(r);
    }
}

/// The case-study corpus: exactly [`OPENSTACK_WINDOWS`] windows at the
/// default window size.
pub fn openstack_shape(seed: u64) -> LabeledCorpus {
    let mut cloud = Cloud::new(stream_rng(seed, 20, 0), 0.0);
    let mut layout = Layout {
        records: Vec::new(),
        filled: 0,
        window: 0,
    };
    let mut truth = Vec::new();
    let mut injected = usize::MAX;
    while layout.window < OPENSTACK_WINDOWS {
        let w = layout.window;
        if layout.filled == 0 && injected != w {
            if FAULT_WINDOWS.contains(&w) {
                let start = layout.records.last().map_or(0, LogRecord::end);
                for _ in 0..FAULT_SESSIONS {
                    for r in cloud.spawn_failure() {
                        layout.push(r);
                    }
                }
                let end = layout.records.last().map_or(0, LogRecord::end);
                truth.push(TruthRegion {
                    start,
                    end,
                    stage: Stage::Fault,
                });
            } else if w == RARE_WINDOW {
                for _ in 0..RARE_BURST {
                    let r = cloud.rare();
                    layout.push(r);
                }
            }
            injected = w;
            continue;
        }
        let r = cloud.next_normal();
        layout.push(r);
    }
    LabeledCorpus {
        records: layout.records,
        truth_regions: truth,
    }
}

/// Failure-free training counterpart of [`openstack_shape`].
pub fn openstack_baseline(seed: u64, records: usize) -> LabeledCorpus {
    let mut cloud = Cloud::new(stream_rng(seed, 21, 0), RARE_ODDS);
    let records = (0..records).map(|_| cloud.next_normal()).collect();
    LabeledCorpus::from_unplaced(records, Vec::new())
}
