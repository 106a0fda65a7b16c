//! Log template pools and the renderer that fills their dynamic fields.
//!
//! Templates are written in the style of Spark and HDFS daemon logs but are
//! original text. `{field}` markers are replaced with generated values; the
//! default mask rules collapse every field back into a placeholder, so each
//! template masks to a fixed token sequence.

use rand::Rng;

use super::Role;

#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub text: &'static str,
    pub weight: f64,
    pub level: &'static str,
    /// Emitted when a node talks to a peer; subject to interference.
    pub comm: bool,
}

const fn t(text: &'static str, weight: f64) -> Template {
    Template {
        text,
        weight,
        level: "INFO",
        comm: false,
    }
}

const fn comm(text: &'static str, weight: f64) -> Template {
    Template {
        text,
        weight,
        level: "INFO",
        comm: true,
    }
}

const fn warn(text: &'static str) -> Template {
    Template {
        text,
        weight: 1.0,
        level: "WARN",
        comm: false,
    }
}

const fn error(text: &'static str) -> Template {
    Template {
        text,
        weight: 1.0,
        level: "ERROR",
        comm: false,
    }
}

pub const MASTER: &[Template] = &[
    t("Starting task {task} in stage {stage} (TID {tid}, {peer_ip}, executor {exec}, partition {n}, PROCESS_LOCAL, {bytes} bytes)", 5.0),
    t("Finished task {task} in stage {stage} (TID {tid}) in {ms} ms on {peer_ip} (executor {exec}) ({n}/{n})", 5.0),
    t("Submitting {n} missing tasks from ResultStage {n} (MapPartitionsRDD[{n}] at map at Job.scala:{n})", 1.0),
    t("Added broadcast_{n}_piece0 in memory on {peer_ip}:{port} (size: {kb} KB, free: {mb} MB)", 1.0),
    t("Asked to send map output locations for shuffle {n} to {peer_ip}:{port}", 1.0),
    t("Job {n} finished: collect at Job.scala:{n}, took {secs} s", 0.5),
    t("Registering RDD {n} (map at Job.scala:{n}) as input to shuffle {n}", 0.5),
];

pub const WORKER: &[Template] = &[
    t("Running task {task} in stage {stage} (TID {tid})", 4.0),
    t("Finished task {task} in stage {stage} (TID {tid}). {bytes} bytes result sent to driver", 4.0),
    comm("Getting {n} (size {kb} KB) non-empty blocks including {n} local blocks and {n} remote blocks", 2.0),
    comm("Started {n} remote fetches in {ms} ms", 2.0),
    t("Block rdd_{n}_{n} stored as values in memory (estimated size {kb} KB, free {mb} MB)", 1.0),
    t("Reading broadcast variable {n} took {ms} ms", 1.0),
];

pub const NAMENODE: &[Template] = &[
    t("BLOCK* allocate {blk}, replicas={peer_ip}:{port}, {peer_ip}:{port}, {peer_ip}:{port} for {path}", 3.0),
    t("BLOCK* addStoredBlock: blockMap updated: {peer_ip}:{port} is added to {blk} size {bytes}", 3.0),
    t("DIR* completeFile: {path} is closed by DFSClient_NONMAPREDUCE_{n}_{n}", 1.0),
    t("Number of transactions: {n} Total time for transactions(ms): {n} Number of syncs: {n} SyncTimes(ms): {n}", 1.0),
];

pub const DATANODE: &[Template] = &[
    comm("Receiving {bp}:{blk} src: /{peer_ip}:{port} dest: /{ip}:{port}", 3.0),
    comm("Received {bp}:{blk} size {bytes} from /{peer_ip}:{port}", 3.0),
    t("PacketResponder: {bp}:{blk}, type=LAST_IN_PIPELINE terminating", 3.0),
    comm("src: /{peer_ip}:{port}, dest: /{ip}:{port}, bytes: {bytes}, op: HDFS_WRITE, cliID: DFSClient_NONMAPREDUCE_{n}_{n}, offset: 0, srvID: {uuid}, blockid: {bp}:{blk}, duration(ns): {n}", 1.0),
    t("Successfully sent block report {hex}, containing {n} storage report(s), of which we sent {n}. The reports had {n} total blocks and used {n} RPC(s). This took {n} msec to generate and {n} msecs for RPC and NN processing.", 0.5),
];

pub fn normal_pool(role: Role) -> &'static [Template] {
    match role {
        Role::Master => MASTER,
        Role::Worker => WORKER,
        Role::NameNode => NAMENODE,
        Role::DataNode => DATANODE,
    }
}

// Compute-node failure, logged by the master.
pub const COMPUTE_DETECTION: &[Template] = &[
    error("Lost executor {exec} on {target_ip}: Remote RPC client disassociated. Likely due to containers exceeding thresholds, or network issues."),
    warn("Lost task {task} in stage {stage} (TID {tid}, {target_ip}, executor {exec}): ExecutorLostFailure (executor {exec} exited caused by one of the running tasks) Reason: Remote RPC client disassociated."),
    warn("Executor lost: {exec} (epoch {n})"),
    t("Trying to remove executor {exec} from BlockManagerMaster.", 1.0),
    warn("Removing worker {worker} on {target_ip}:{port}"),
    warn("Telling app of lost worker: {worker}"),
];

pub const COMPUTE_INTERLEAVED: &[Template] = &[
    t("Resubmitted ShuffleMapTask({n}, {n}), so marking it as still running.", 1.0),
    warn("Lost task {task} in stage {stage} (TID {tid}, {target_ip}, executor {exec}): ExecutorLostFailure (executor {exec} exited caused by one of the running tasks) Reason: Remote RPC client disassociated."),
];

pub const COMPUTE_RECOVERY: &[Template] = &[
    warn("Failed to connect to {target_ip}:{port}, attempt {attempt} of {max}"),
    t("Retrying connection to worker {worker} in {n} seconds (attempt {attempt})", 1.0),
    error("Connection refused: {target_ip}:{port}"),
    t("Resubmitting ShuffleMapStage {n} (map at Job.scala:{n}) and ResultStage {n} (collect at Job.scala:{n}) due to fetch failure", 1.0),
    t("Resubmitting failed stages", 1.0),
];

pub const COMPUTE_CLEANUP: &[Template] = &[
    t("Removing block manager BlockManagerId({exec}, {target_ip}, {port}, None)", 1.0),
    t("Cleared state for lost executor {exec}; {n} tasks reassigned to remaining executors", 1.0),
    t("Removed broadcast_{n}_piece0 on {target_ip}:{port} in memory (size: {kb} KB, free: {mb} MB)", 1.0),
    t("Cleaned shuffle {n}", 1.0),
];

// Storage-node failure, logged by the name node unless noted.
pub const STORAGE_DETECTION: &[Template] = &[
    warn("Lost heartbeat from DatanodeRegistration({target_ip}:{port}, datanodeUuid={uuid}, infoPort={port}), marking node dead"),
    t("BLOCK* removeDeadDatanode: lost heartbeat from {target_ip}:{port}, removeBlocksFromBlockMap true", 1.0),
    t("Removing a node: /default-rack/{target_ip}:{port}", 1.0),
    warn("BLOCK* {n} blocks on {target_ip}:{port} are now under-replicated"),
];

pub const STORAGE_INTERLEAVED: &[Template] = &[t(
    "BLOCK* neededReplications = {n}, pendingReplications = {n}.",
    1.0,
)];

pub const STORAGE_RECOVERY: &[Template] = &[
    t("BLOCK* ask {peer_ip}:{port} to replicate {blk} to datanode(s) {peer_ip}:{port} (attempt {attempt})", 1.0),
    warn("PendingReplicationMonitor timed out {blk}, re-queueing (attempt {attempt} of {max})"),
];

/// Logged by surviving data nodes that still try to reach the dead one.
pub const STORAGE_PEER: &[Template] = &[
    warn("Exception in createBlockOutputStream {bp}:{blk}: java.net.ConnectException: Connection refused to /{target_ip}:{port}"),
    warn("Abandoning {bp}:{blk}"),
    warn("Excluding datanode DatanodeInfoWithStorage[{target_ip}:{port},DS-{uuid},DISK]"),
    warn("Slow BlockReceiver write packet to mirror took {ms}ms (threshold=300ms), retry {attempt}"),
];

pub const STORAGE_CLEANUP: &[Template] = &[
    t(
        "BLOCK* processOverReplicatedBlock: re-replication of {n} blocks complete",
        1.0,
    ),
    t("Number of under-replicated blocks = 0", 1.0),
    t("Decommission of dead node {target_ip}:{port} complete", 1.0),
];

// Interference: one record per failed communication event, plus an
// escalation on the master after repeated failures.
pub const DEGRADED_WORKER: &[Template] = &[
    warn("Failed to fetch remote block shuffle_{n}_{n}_{n} from BlockManagerId({exec}, {peer_ip}, {port}, None) (failed attempt {attempt})"),
    t("Retrying fetch ({attempt}/3) for 1 outstanding blocks after 5000 ms", 1.0),
];

pub const DEGRADED_DATANODE: &[Template] = &[
    warn("Timeout waiting for ack from /{peer_ip}:{port}, retrying packet {n}"),
    warn("Slow flushOrSync took {ms}ms (threshold=300ms), isSync:false, flushTotalNanos={n}ns"),
];

pub const DEGRADED_ESCALATION: &[Template] = &[
    warn("Lost task {task} in stage {stage} (TID {tid}, {peer_ip}, executor {exec}): FetchFailed(BlockManagerId({exec}, {peer_ip}, {port}, None), shuffleId={n}, mapId={n}, reduceId={n})"),
    t("Resubmitting failed stages", 1.0),
];

/// Values the renderer cannot invent on its own.
#[derive(Debug, Clone, Default)]
pub struct RenderCtx<'a> {
    pub ip: &'a str,
    pub peer_ips: &'a [String],
    pub target_ip: &'a str,
    pub attempt: u32,
    pub max_attempts: u32,
}

pub fn pick<'t, R: Rng + ?Sized>(pool: &'t [Template], rng: &mut R) -> &'t Template {
    let total: f64 = pool.iter().map(|t| t.weight).sum();
    let mut x = rng.random::<f64>() * total;
    for tmpl in pool {
        if x < tmpl.weight {
            return tmpl;
        }
        x -= tmpl.weight;
    }
    pool.last().expect("non-empty pool")
}

fn hex_digits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).unwrap())
        .collect()
}

pub fn uuid<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!(
        "{}-{}-{}-{}-{}",
        hex_digits(rng, 8),
        hex_digits(rng, 4),
        hex_digits(rng, 4),
        hex_digits(rng, 4),
        hex_digits(rng, 12)
    )
}

fn field<R: Rng + ?Sized>(name: &str, rng: &mut R, ctx: &RenderCtx<'_>) -> String {
    match name {
        "n" => rng.random_range(0..1000u32).to_string(),
        "task" => format!("{}.0", rng.random_range(0..400u32)),
        "stage" => format!("{}.0", rng.random_range(0..30u32)),
        "tid" => rng.random_range(0..20_000u32).to_string(),
        "exec" => rng.random_range(0..12u32).to_string(),
        "ms" => rng.random_range(1..3000u32).to_string(),
        "secs" => format!("{:.3}", rng.random_range(0.01..30.0f64)),
        "bytes" => rng.random_range(500..200_000u32).to_string(),
        "kb" => format!("{:.1}", rng.random_range(0.5..900.0f64)),
        "mb" => format!("{:.1}", rng.random_range(100.0..4000.0f64)),
        "port" => rng.random_range(30_000..61_000u32).to_string(),
        "blk" => format!(
            "blk_10737{:05}_{}",
            rng.random_range(0..100_000u32),
            rng.random_range(1000..9999u32)
        ),
        "bp" => format!(
            "BP-{}-10.0.0.1-{}",
            rng.random_range(100_000_000..999_999_999u32),
            rng.random_range(1_500_000_000..1_700_000_000u64)
        ),
        "path" => {
            const JOBS: [&str; 4] = ["wordcount", "pagerank", "terasort", "closure"];
            format!(
                "/user/spark/{}/out/part-{:05}",
                JOBS[rng.random_range(0..JOBS.len())],
                rng.random_range(0..2000u32)
            )
        }
        "uuid" => uuid(rng),
        "hex" => format!("0x{}", hex_digits(rng, 12)),
        "worker" => format!(
            "worker-20210{}{:02}-{}-{}",
            rng.random_range(1..10u32),
            rng.random_range(1..29u32),
            ctx.target_ip,
            rng.random_range(30_000..61_000u32)
        ),
        "ip" => ctx.ip.to_owned(),
        "peer_ip" => {
            if ctx.peer_ips.is_empty() {
                ctx.ip.to_owned()
            } else {
                ctx.peer_ips[rng.random_range(0..ctx.peer_ips.len())].clone()
            }
        }
        "target_ip" => ctx.target_ip.to_owned(),
        "attempt" => ctx.attempt.to_string(),
        "max" => ctx.max_attempts.to_string(),
        other => panic!("template field {{{other}}} has no generator"),
    }
}

/// Fills every `{field}` of `text`.
pub fn render<R: Rng + ?Sized>(text: &str, rng: &mut R, ctx: &RenderCtx<'_>) -> String {
    let mut out = String::with_capacity(text.len() + 32);
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .map(|c| open + c)
            .expect("unterminated template field");
        out.push_str(&field(&rest[open + 1..close], rng, ctx));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    out
}
