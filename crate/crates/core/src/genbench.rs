//! Synthetic model generators and the benchmark harness.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{check, CheckError, ExplorationConfig};
use crate::model::{Bounds, FlowNode, NodeKind, Process, ProcessModel, SequenceFlow};

const MIN_REPETITIONS: usize = 10;

/// Incrementally lays out a single-process model.
struct Builder {
    process: Process,
    model: ProcessModel,
}

impl Builder {
    fn new(process_id: &str) -> Self {
        Builder {
            process: Process::new(process_id),
            model: ProcessModel::default(),
        }
    }

    fn node(&mut self, id: String, kind: NodeKind, name: Option<String>, cx: f64, cy: f64) -> String {
        let (w, h) = kind.default_size();
        self.model.diagram.insert(id.clone(), Bounds::centered(cx, cy, w, h));
        let mut node = FlowNode::new(id.clone(), kind);
        node.name = name;
        self.process.flow_nodes.push(node);
        id
    }

    fn flow(&mut self, id: String, source: &str, target: &str) {
        self.process.sequence_flows.push(SequenceFlow {
            id,
            source: source.to_string(),
            target: target.to_string(),
        });
    }

    fn finish(mut self) -> ProcessModel {
        self.process.relink();
        self.model.processes.push(self.process);
        self.model
    }
}

/// start → parallel split → `branches` chains of `length` tasks →
/// parallel join → end.
///
/// # Panics
/// If either parameter is zero.
pub fn generate_parallel(branches: usize, length: usize) -> ProcessModel {
    assert!(branches >= 1 && length >= 1, "branches and length must be at least 1");
    let mut b = Builder::new("Process_parallel");
    let row = |i: usize| 100.0 + 120.0 * i as f64;
    let mid = (row(0) + row(branches - 1)) / 2.0;

    let start = b.node("start".into(), NodeKind::NoneStartEvent, None, 100.0, mid);
    let split = b.node("split".into(), NodeKind::ParallelGateway, None, 200.0, mid);
    let join_x = 320.0 + 150.0 * length as f64;
    let join = b.node("join".into(), NodeKind::ParallelGateway, None, join_x, mid);
    let end = b.node("end".into(), NodeKind::NoneEndEvent, None, join_x + 100.0, mid);
    b.flow("flow_start_split".into(), &start, &split);

    for branch in 1..=branches {
        let y = row(branch - 1);
        let mut previous = split.clone();
        for step in 1..=length {
            let task = b.node(
                format!("task_{branch}_{step}"),
                NodeKind::Task,
                Some(format!("Task {branch}.{step}")),
                320.0 + 150.0 * (step - 1) as f64,
                y,
            );
            b.flow(format!("flow_{branch}_{step}"), &previous, &task);
            previous = task;
        }
        b.flow(format!("flow_{branch}_join"), &previous, &join);
    }
    b.flow("flow_join_end".into(), &join, &end);
    b.finish()
}

/// The block kinds, repeated cyclically by [`generate_blocks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Exclusive split and merge around two single-task branches.
    ExclusiveChoice,
    /// Parallel split and join around two single-task branches.
    ParallelPair,
    /// Three tasks in sequence.
    Sequence,
}

impl Block {
    pub fn nth(index: usize) -> Block {
        match index % 3 {
            0 => Block::ExclusiveChoice,
            1 => Block::ParallelPair,
            _ => Block::Sequence,
        }
    }
}

/// start → `count` blocks in the cyclic order exclusive, parallel,
/// sequence → end.
///
/// # Panics
/// If `count` is zero.
pub fn generate_blocks(count: usize) -> ProcessModel {
    assert!(count >= 1, "block count must be at least 1");
    let mut b = Builder::new("Process_blocks");
    let y = 200.0;
    let mut x = 100.0;
    let mut previous = b.node("start".into(), NodeKind::NoneStartEvent, None, x, y);

    for i in 1..=count {
        let block = Block::nth(i - 1);
        let entry_flow = format!("flow_{i}");
        match block {
            Block::ExclusiveChoice | Block::ParallelPair => {
                let kind = if block == Block::ExclusiveChoice {
                    NodeKind::ExclusiveGateway
                } else {
                    NodeKind::ParallelGateway
                };
                let split = b.node(format!("block{i}_split"), kind.clone(), None, x + 100.0, y);
                let upper = b.node(
                    format!("block{i}_task_a"),
                    NodeKind::Task,
                    Some(format!("Block {i} A")),
                    x + 200.0,
                    y - 60.0,
                );
                let lower = b.node(
                    format!("block{i}_task_b"),
                    NodeKind::Task,
                    Some(format!("Block {i} B")),
                    x + 200.0,
                    y + 60.0,
                );
                let join = b.node(format!("block{i}_join"), kind, None, x + 300.0, y);
                b.flow(entry_flow, &previous, &split);
                b.flow(format!("block{i}_flow_a_in"), &split, &upper);
                b.flow(format!("block{i}_flow_b_in"), &split, &lower);
                b.flow(format!("block{i}_flow_a_out"), &upper, &join);
                b.flow(format!("block{i}_flow_b_out"), &lower, &join);
                previous = join;
                x += 300.0;
            }
            Block::Sequence => {
                let mut incoming = entry_flow;
                for (n, label) in ["a", "b", "c"].iter().enumerate() {
                    let task = b.node(
                        format!("block{i}_task_{label}"),
                        NodeKind::Task,
                        Some(format!("Block {i} {}", label.to_uppercase())),
                        x + 150.0 * (n + 1) as f64,
                        y,
                    );
                    b.flow(incoming, &previous, &task);
                    previous = task;
                    incoming = format!("block{i}_flow_{label}");
                }
                x += 450.0;
            }
        }
    }
    let end = b.node("end".into(), NodeKind::NoneEndEvent, None, x + 120.0, y);
    b.flow(format!("flow_{}", count + 1), &previous, &end);
    b.finish()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum BenchParams {
    Blocks { blocks: usize },
    Parallel { branches: usize, length: usize },
    File,
}

impl fmt::Display for BenchParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchParams::Blocks { blocks } => write!(f, "k={blocks}"),
            BenchParams::Parallel { branches, length } => write!(f, "n={branches} m={length}"),
            BenchParams::File => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub params: BenchParams,
    pub model: ProcessModel,
}

impl BenchCase {
    pub fn parallel(branches: usize, length: usize) -> Self {
        BenchCase {
            name: format!("parallel_{branches}_{length}"),
            params: BenchParams::Parallel { branches, length },
            model: generate_parallel(branches, length),
        }
    }

    pub fn blocks(count: usize) -> Self {
        BenchCase {
            name: format!("blocks_{count:03}"),
            params: BenchParams::Blocks { blocks: count },
            model: generate_blocks(count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub name: String,
    pub params: BenchParams,
    pub states: usize,
    pub mean_ms: f64,
    pub runs: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("at least {MIN_REPETITIONS} repetitions are required, got {0}")]
    TooFewRepetitions(usize),
    #[error("{name}: {source}")]
    Check { name: String, source: CheckError },
}

/// Times `repetitions` full checks (all properties) of every case.
///
/// A failing case yields an error entry; the remaining cases still run.
pub fn run_benchmark(
    cases: &[BenchCase],
    repetitions: usize,
) -> Result<Vec<Result<BenchRecord, BenchError>>, BenchError> {
    run_benchmark_with(cases, repetitions, &ExplorationConfig::default())
}

/// Like [`run_benchmark`] with an explicit exploration config.
pub fn run_benchmark_with(
    cases: &[BenchCase],
    repetitions: usize,
    config: &ExplorationConfig,
) -> Result<Vec<Result<BenchRecord, BenchError>>, BenchError> {
    if repetitions < MIN_REPETITIONS {
        return Err(BenchError::TooFewRepetitions(repetitions));
    }
    Ok(cases.iter().map(|case| bench_case(case, repetitions, config)).collect())
}

fn bench_case(case: &BenchCase, repetitions: usize, config: &ExplorationConfig) -> Result<BenchRecord, BenchError> {
    let mut states = 0;
    let mut total = 0.0;
    for run in 0..repetitions {
        let started = Instant::now();
        let result = check(&case.model, config).map_err(|source| BenchError::Check {
            name: case.name.clone(),
            source,
        })?;
        total += started.elapsed().as_secs_f64() * 1000.0;
        if run == 0 {
            states = result.state_count;
        }
    }
    Ok(BenchRecord {
        name: case.name.clone(),
        params: case.params.clone(),
        states,
        mean_ms: (total / repetitions as f64).max(f64::MIN_POSITIVE),
        runs: repetitions,
    })
}

/// Writes records as CSV with columns `name,params,states,mean_ms,runs`.
pub fn write_csv<W: Write>(records: &[BenchRecord], writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["name", "params", "states", "mean_ms", "runs"])?;
    for r in records {
        out.write_record([
            r.name.clone(),
            r.params.to_string(),
            r.states.to_string(),
            format!("{:.3}", r.mean_ms),
            r.runs.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
