use std::time::Instant;

use log::{debug, info, warn};
use rechain::model::{
    num_connections, satisfies_demand, validate_scheme, DemandMatrix, NetworkShape,
};
use rechain::scheduler::{
    apply_demand_change, random_scheme_for_demand, reconfigure_static, SchedulerError,
};
use rechain::state::SchedulerState;
use rechain::traffic::{
    demand_from_traffic_static, load_trace_csv, static_phases, synthetic_trace,
    DynamicDemandGenerator, TraceEvent,
};
use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, TaskMode};
use crate::BenchError;

/// One static reconfiguration from phase `t` to phase `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub t: usize,
    pub num_conn_t: u64,
    pub num_conn_t1: u64,
    pub num_rearr: u64,
    pub rr: f64,
    pub wall_ns: u64,
    pub max_chain_len: usize,
    pub mean_chain_len: f64,
    /// `chain_hist[len]` scheduling calls whose chain had length `len`.
    pub chain_hist: Vec<u64>,
    /// Connections that could not be scheduled.
    pub residual: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRun {
    pub load: f64,
    pub records: Vec<PhaseRecord>,
}

impl StaticRun {
    pub fn total_rearr(&self) -> u64 {
        self.records.iter().map(|r| r.num_rearr).sum()
    }

    pub fn total_wall_ns(&self) -> u64 {
        self.records.iter().map(|r| r.wall_ns).sum()
    }

    pub fn max_chain_len(&self) -> usize {
        self.records.iter().map(|r| r.max_chain_len).max().unwrap_or(0)
    }

    /// Histogram summed over all phases.
    pub fn chain_hist(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for r in &self.records {
            if out.len() < r.chain_hist.len() {
                out.resize(r.chain_hist.len(), 0);
            }
            for (o, v) in out.iter_mut().zip(&r.chain_hist) {
                *o += v;
            }
        }
        out
    }
}

/// Events for the configured traffic source, long enough for `duration`.
pub fn trace_for(cfg: &BenchConfig, racks: usize, duration: f64) -> Result<Vec<TraceEvent>, BenchError> {
    if let Some(path) = &cfg.traffic.trace {
        let events = load_trace_csv(path)?;
        if let Some(e) = events.iter().find(|e| e.src >= racks || e.dst >= racks) {
            return Err(BenchError::Config(format!(
                "trace references rack {} but the network has {racks}",
                e.src.max(e.dst)
            )));
        }
        return Ok(events);
    }
    let mut params = cfg.traffic.params.clone();
    params.racks = racks;
    params.duration = duration;
    Ok(synthetic_trace(cfg.traffic.model, &params, cfg.seed)?)
}

/// Demand matrices for every static phase at `load`.
pub fn static_demands(cfg: &BenchConfig, shape: &NetworkShape, load: f64) -> Result<Vec<DemandMatrix>, BenchError> {
    let events = trace_for(cfg, shape.m(), cfg.static_duration())?;
    let mut phases = static_phases(&events, shape.m(), cfg.window, cfg.step);
    phases.truncate(cfg.phases);
    if phases.len() < 2 {
        return Err(BenchError::Config(format!(
            "trace yields {} phases, at least two are needed",
            phases.len()
        )));
    }
    phases
        .iter()
        .map(|tr| Ok(demand_from_traffic_static(tr, shape, load)?))
        .collect()
}

fn check_scheme(shape: &NetworkShape, st: &SchedulerState, d: &DemandMatrix, complete: bool) -> Result<(), BenchError> {
    let violations = validate_scheme(shape, st.scheme())?;
    if !violations.is_empty() {
        return Err(BenchError::Runtime(format!("scheme violates capacities: {violations:?}")));
    }
    if complete && !satisfies_demand(st.scheme(), d)? {
        return Err(BenchError::Runtime("scheme does not meet its demand".into()));
    }
    Ok(())
}

/// Runs the static phase sequence for each configured load.
pub fn run_static_bench(cfg: &BenchConfig) -> Result<Vec<StaticRun>, BenchError> {
    cfg.validate()?;
    cfg.loads
        .iter()
        .map(|&load| {
            let shape = cfg.shape.build()?;
            let demands = static_demands(cfg, &shape, load)?;
            run_static_phases(cfg, &shape, &demands, load)
        })
        .collect()
}

/// Reconfigures through `demands` and records every transition.
pub fn run_static_phases(
    cfg: &BenchConfig,
    shape: &NetworkShape,
    demands: &[DemandMatrix],
    load: f64,
) -> Result<StaticRun, BenchError> {
    let sched = cfg.scheduler();
    let mut st = SchedulerState::new(shape.clone(), cfg.seed);
    // The first phase is built from an empty network and not recorded.
    let first = reconfigure_static(&mut st, &demands[0], &sched)?;
    if !first.is_complete() {
        warn!("initial build left {} pairs short", first.residual.len());
    }
    let mut records = Vec::with_capacity(demands.len() - 1);
    for t in 0..demands.len() - 1 {
        if cfg.mode == TaskMode::Discontinuous {
            let seed = cfg.seed.wrapping_add(t as u64 + 1);
            let x = random_scheme_for_demand(shape, &demands[t], seed)?;
            st = SchedulerState::rebuild_from_scratch(shape, &demands[t], &x)?;
            st.reseed(seed);
        }
        let res = reconfigure_static(&mut st, &demands[t + 1], &sched)?;
        check_scheme(shape, &st, &demands[t + 1], res.is_complete())?;
        let lengths: Vec<usize> = res.chain_lengths().collect();
        let max_chain_len = lengths.iter().copied().max().unwrap_or(0);
        let mut chain_hist = vec![0u64; if lengths.is_empty() { 0 } else { max_chain_len + 1 }];
        for &l in &lengths {
            chain_hist[l] += 1;
        }
        let residual: u64 = res.residual.iter().map(|r| r.2 as u64).sum();
        if residual > 0 {
            warn!("phase {t} at load {load}: {residual} connections unscheduled");
        }
        let record = PhaseRecord {
            t,
            num_conn_t: num_connections(&demands[t]),
            num_conn_t1: num_connections(&demands[t + 1]),
            num_rearr: res.num_rearr,
            rr: res.rewiring_ratio,
            wall_ns: res.wall_ns(),
            max_chain_len,
            mean_chain_len: if lengths.is_empty() {
                0.0
            } else {
                lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
            },
            chain_hist,
            residual,
        };
        debug!("{record:?}");
        records.push(record);
    }
    info!("static load {load}: {} reconfigurations", records.len());
    Ok(StaticRun { load, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicSummary {
    pub load: f64,
    /// Measured demand changes (after the warm-up).
    pub ops: u64,
    pub adds: u64,
    pub removes: u64,
    pub failed_adds: u64,
    /// Scheme modifications issued by measured changes.
    pub modifications: u64,
    /// Rearrangements per change, two per modification.
    pub rearr_per_op: f64,
    pub mean_ns_per_op: f64,
    pub max_chain_len: usize,
    pub events: u64,
    pub skipped_events: u64,
}

/// Streams atomic demand changes through the scheduler at `load`.
pub fn run_dynamic_load(cfg: &BenchConfig, load: f64) -> Result<DynamicSummary, BenchError> {
    let shape = cfg.shape.build()?;
    let events = trace_for(cfg, shape.m(), cfg.warmup + cfg.duration)?;
    let sched = cfg.scheduler();
    let mut st = SchedulerState::new(shape.clone(), cfg.seed);
    let mut gen = DynamicDemandGenerator::new(&shape, load, cfg.dynamic_window)?;
    let mut s = DynamicSummary {
        load,
        ops: 0,
        adds: 0,
        removes: 0,
        failed_adds: 0,
        modifications: 0,
        rearr_per_op: 0.0,
        mean_ns_per_op: 0.0,
        max_chain_len: 0,
        events: 0,
        skipped_events: 0,
    };
    let mut total_ns = 0u128;
    for ev in events {
        let measured = ev.t >= cfg.warmup;
        if measured {
            s.events += 1;
        }
        for change in gen.observe(ev) {
            let started = Instant::now();
            let out = apply_demand_change(&mut st, change, &sched);
            let ns = started.elapsed().as_nanos();
            let mods = match out {
                Ok(o) => {
                    if let Some(len) = o.search.and_then(|x| x.chain_length) {
                        if measured {
                            s.max_chain_len = s.max_chain_len.max(len);
                        }
                    }
                    o.mods.len() as u64
                }
                Err(SchedulerError::Unschedulable(j, k)) => {
                    gen.reject_add(j, k);
                    if measured {
                        s.failed_adds += 1;
                    }
                    0
                }
                Err(e) => return Err(e.into()),
            };
            if measured {
                s.ops += 1;
                total_ns += ns;
                s.modifications += mods;
                match change.kind {
                    rechain::model::ModKind::Add => s.adds += 1,
                    rechain::model::ModKind::Remove => s.removes += 1,
                }
            }
        }
    }
    s.skipped_events = gen.skipped;
    if s.ops > 0 {
        s.rearr_per_op = 2.0 * s.modifications as f64 / s.ops as f64;
        s.mean_ns_per_op = total_ns as f64 / s.ops as f64;
    }
    check_scheme(&shape, &st, st.demand(), false)?;
    if !satisfies_demand(st.scheme(), st.demand())? {
        return Err(BenchError::Runtime("dynamic run ended with unmet demand".into()));
    }
    info!("dynamic load {load}: {s:?}");
    Ok(s)
}

pub fn run_dynamic_bench(cfg: &BenchConfig) -> Result<Vec<DynamicSummary>, BenchError> {
    cfg.validate()?;
    cfg.loads.iter().map(|&l| run_dynamic_load(cfg, l)).collect()
}
