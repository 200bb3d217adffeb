//! Demand generation from traffic.
//!
//! Candidate connections between `L_j` and `L_k` are ranked by
//! `(max(Tr[j][k], Tr[k][j]) + 1) / r` for the `r`-th connection of the pair,
//! so heavy pairs get several connections before light pairs get their first.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DemandMatrix, ModKind, ModelError, NetworkShape};
use crate::scheduler::DemandChange;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("target load {0} is outside (0, 1]")]
    BadLoad(f64),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: time {t} is earlier than the previous event at {prev}")]
    NonMonotone { line: u64, t: f64, prev: f64 },
    #[error("invalid synthetic trace parameters: {0}")]
    BadParams(String),
    #[error("unknown traffic model {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Traffic volume between ordered rack pairs over some time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    m: usize,
    data: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![0.0; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.data[src * self.m + dst]
    }

    /// Adds `volume` to `src -> dst`. Self traffic is ignored.
    pub fn add(&mut self, src: usize, dst: usize, volume: f64) {
        if src != dst {
            let cell = &mut self.data[src * self.m + dst];
            *cell = (*cell + volume).max(0.0);
        }
    }

    pub fn pair_volume(&self, j: usize, k: usize) -> f64 {
        self.get(j, k).max(self.get(k, j))
    }

    /// Weight of the `rank`-th connection between `L_j` and `L_k` (1-based).
    pub fn connection_weight(&self, j: usize, k: usize, rank: u32) -> f64 {
        (self.pair_volume(j, k) + 1.0) / rank as f64
    }

    pub fn from_events<'a>(m: usize, events: impl IntoIterator<Item = &'a TraceEvent>) -> Self {
        let mut tr = Self::zeros(m);
        for e in events {
            if e.src < m && e.dst < m {
                tr.add(e.src, e.dst, e.volume);
            }
        }
        tr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Seconds since the start of the trace.
    pub t: f64,
    pub src: usize,
    pub dst: usize,
    /// Bytes.
    pub volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    weight: f64,
    j: usize,
    k: usize,
    rank: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    /// Highest weight first; ties go to the lexicographically smallest
    /// `(j, k, rank)`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| (other.j, other.k, other.rank).cmp(&(self.j, self.k, self.rank)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adds connections in weight order while the demand stays feasible and the
/// load stays at or below `target_load`.
pub fn demand_from_traffic_static(
    tr: &TrafficMatrix,
    shape: &NetworkShape,
    target_load: f64,
) -> Result<DemandMatrix, TrafficError> {
    if !(target_load > 0.0 && target_load <= 1.0) {
        return Err(TrafficError::BadLoad(target_load));
    }
    let m = shape.m();
    if tr.m() != m {
        return Err(ModelError::DimensionMismatch(format!(
            "traffic has {} racks, shape has {m}",
            tr.m()
        ))
        .into());
    }
    let budget = target_load * shape.total_capacity() as f64 + 1e-9;
    let mut d = DemandMatrix::zeros(m);
    let mut row = vec![0u64; m];
    let mut total = 0u64;
    let mut heap = BinaryHeap::new();
    for j in 0..m {
        for k in j + 1..m {
            heap.push(Candidate {
                weight: tr.connection_weight(j, k, 1),
                j,
                k,
                rank: 1,
            });
        }
    }
    while let Some(c) = heap.pop() {
        if (total + 2) as f64 > budget {
            break;
        }
        // Rows only grow, so a pair that does not fit now never will.
        if row[c.j] + 1 > shape.port_capacity(c.j) || row[c.k] + 1 > shape.port_capacity(c.k) {
            continue;
        }
        d.set(c.j, c.k, c.rank);
        row[c.j] += 1;
        row[c.k] += 1;
        total += 2;
        heap.push(Candidate {
            weight: tr.connection_weight(c.j, c.k, c.rank + 1),
            rank: c.rank + 1,
            ..c
        });
    }
    Ok(d)
}

/// Traffic matrices over `[t - window, t)` for `t = window, window + step, ...`
/// up to the last event.
pub fn static_phases(events: &[TraceEvent], m: usize, window: f64, step: f64) -> Vec<TrafficMatrix> {
    let Some(last) = events.last() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut end = window;
    loop {
        let start = end - window;
        let lo = events.partition_point(|e| e.t < start);
        let hi = events.partition_point(|e| e.t < end);
        out.push(TrafficMatrix::from_events(m, &events[lo..hi]));
        if end > last.t {
            break;
        }
        end += step;
    }
    out
}

/// Turns a stream of trace events into atomic demand changes.
///
/// Traffic is aggregated over a sliding window. Each low-level switch may
/// carry at most `floor(load * port_capacity)` connections. For every event
/// the generator adds as many connections for the event's pair as fit,
/// removing strictly lower-weight connections on saturated switches to make
/// room.
#[derive(Debug, Clone)]
pub struct DynamicDemandGenerator {
    window: f64,
    tr: TrafficMatrix,
    recent: VecDeque<TraceEvent>,
    demand: DemandMatrix,
    row: Vec<u64>,
    budget: Vec<u64>,
    last_t: f64,
    /// Events dropped as malformed.
    pub skipped: u64,
}

impl DynamicDemandGenerator {
    pub fn new(shape: &NetworkShape, load: f64, window: f64) -> Result<Self, TrafficError> {
        if !(load > 0.0 && load <= 1.0) {
            return Err(TrafficError::BadLoad(load));
        }
        if !positive(window) {
            return Err(TrafficError::BadParams(format!("window {window} must be positive")));
        }
        let m = shape.m();
        Ok(Self {
            window,
            tr: TrafficMatrix::zeros(m),
            recent: VecDeque::new(),
            demand: DemandMatrix::zeros(m),
            row: vec![0; m],
            budget: (0..m)
                .map(|j| (load * shape.port_capacity(j) as f64 + 1e-9).floor() as u64)
                .collect(),
            last_t: f64::NEG_INFINITY,
            skipped: 0,
        })
    }

    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn traffic(&self) -> &TrafficMatrix {
        &self.tr
    }

    pub fn row_budget(&self, j: usize) -> u64 {
        self.budget[j]
    }

    /// Undoes an emitted `Add` that the scheduler could not place.
    pub fn reject_add(&mut self, j: usize, k: usize) {
        let v = self.demand.get(j, k);
        if v > 0 {
            self.apply(DemandChange::remove(j, k));
        }
    }

    fn apply(&mut self, change: DemandChange) {
        let (j, k) = (change.j, change.k);
        let v = self.demand.get(j, k);
        match change.kind {
            ModKind::Add => {
                self.demand.set(j, k, v + 1);
                self.row[j] += 1;
                self.row[k] += 1;
            }
            ModKind::Remove => {
                self.demand.set(j, k, v - 1);
                self.row[j] -= 1;
                self.row[k] -= 1;
            }
        }
    }

    fn advance(&mut self, t: f64) {
        // Per-second granularity: an event leaves the window once the whole
        // second it falls in is older than the window.
        let now = t.floor();
        while let Some(e) = self.recent.front() {
            if e.t.floor() > now - self.window {
                break;
            }
            let e = self.recent.pop_front().unwrap();
            self.tr.add(e.src, e.dst, -e.volume);
        }
    }

    fn has_room(&self, j: usize) -> bool {
        self.row[j] < self.budget[j]
    }

    /// Weight of the lowest-ranked existing connection of a pair.
    fn last_weight(&self, j: usize, k: usize) -> f64 {
        self.tr.connection_weight(j, k, self.demand.get(j, k))
    }

    /// The lowest-weight connection at `s` other than to `partner` whose
    /// weight is strictly below `limit`.
    fn victim(&self, s: usize, partner: usize, limit: f64) -> Option<(usize, usize)> {
        let mut best: Option<(f64, (usize, usize))> = None;
        for x in 0..self.demand.m() {
            if x == s || x == partner || self.demand.get(s, x) == 0 {
                continue;
            }
            let w = self.last_weight(s, x);
            if w >= limit {
                continue;
            }
            let key = (s.min(x), s.max(x));
            let better = match best {
                None => true,
                Some((bw, bk)) => w < bw || (w == bw && key < bk),
            };
            if better {
                best = Some((w, key));
            }
        }
        best.map(|(_, key)| key)
    }

    /// Feeds one event and returns the resulting demand changes in order.
    pub fn observe(&mut self, event: TraceEvent) -> Vec<DemandChange> {
        let m = self.demand.m();
        if event.src == event.dst
            || event.src >= m
            || event.dst >= m
            || !non_negative(event.volume)
            || event.t < self.last_t
        {
            self.skipped += 1;
            return Vec::new();
        }
        self.last_t = event.t;
        self.advance(event.t);
        self.tr.add(event.src, event.dst, event.volume);
        self.recent.push_back(event);

        let (j, k) = (event.src.min(event.dst), event.src.max(event.dst));
        let mut out = Vec::new();
        loop {
            if self.has_room(j) && self.has_room(k) {
                let c = DemandChange::add(j, k);
                self.apply(c);
                out.push(c);
                continue;
            }
            let weight = self.tr.connection_weight(j, k, self.demand.get(j, k) + 1);
            let mut victims = Vec::new();
            let mut stuck = false;
            for (s, partner) in [(j, k), (k, j)] {
                if self.has_room(s) {
                    continue;
                }
                match self.victim(s, partner, weight) {
                    Some(v) => victims.push(v),
                    None => stuck = true,
                }
            }
            if stuck {
                break;
            }
            for (a, b) in victims {
                let c = DemandChange::remove(a, b);
                self.apply(c);
                out.push(c);
            }
            let c = DemandChange::add(j, k);
            self.apply(c);
            out.push(c);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficModel {
    /// Every ordered pair in turn, equal volumes.
    Uniform,
    /// Pair popularity proportional to the product of per-rack weights.
    Gravity,
    /// A few hot pairs carry a fixed share of the volume.
    Hotspot,
    /// Each rack talks to one peer; the pairing changes periodically.
    ShiftingPermutation,
}

impl std::str::FromStr for TrafficModel {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gravity" => Ok(Self::Gravity),
            "hotspot" => Ok(Self::Hotspot),
            "shifting-permutation" => Ok(Self::ShiftingPermutation),
            other => Err(TrafficError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub racks: usize,
    /// Trace length in seconds.
    pub duration: f64,
    pub events_per_second: f64,
    /// Mean event volume in bytes.
    pub mean_volume: f64,
    /// Gravity: shape of the per-rack weight distribution; larger is more skewed.
    pub skew: f64,
    /// Gravity: seconds between weight re-draws of one random rack; 0 disables drift.
    pub drift_period: f64,
    pub hot_pairs: usize,
    /// Hotspot: share of the total volume carried by the hot pairs.
    pub hot_fraction: f64,
    /// Shifting permutation: seconds between pairing changes.
    pub shift_period: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            racks: 32,
            duration: 3600.0,
            events_per_second: 2.0,
            mean_volume: 1e6,
            skew: 1.5,
            drift_period: 30.0,
            hot_pairs: 1,
            hot_fraction: 0.5,
            shift_period: 600.0,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<(), TrafficError> {
        let bad = |s: &str| Err(TrafficError::BadParams(s.to_string()));
        if self.racks < 2 {
            return bad("racks must be at least 2");
        }
        if !non_negative(self.duration) || !positive(self.events_per_second) {
            return bad("duration must be non-negative and the event rate positive");
        }
        if !non_negative(self.mean_volume) || !non_negative(self.skew) || !non_negative(self.drift_period) {
            return bad("volume, skew and drift period must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.hot_fraction) {
            return bad("hot_fraction must lie in [0, 1]");
        }
        if self.hot_pairs > self.racks * (self.racks - 1) {
            return bad("more hot pairs than ordered rack pairs");
        }
        if !positive(self.shift_period) {
            return bad("shift_period must be positive");
        }
        Ok(())
    }
}

/// False for NaN.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn non_negative(x: f64) -> bool {
    x >= 0.0
}

fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    -u.ln() * mean
}

fn derangement(rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
    // A random rotation of a random order never maps a rack to itself.
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let shift = rng.gen_range(1..m);
    let mut p = vec![0; m];
    for (pos, &r) in order.iter().enumerate() {
        p[r] = order[(pos + shift) % m];
    }
    p
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Deterministic synthetic trace for `(model, params, seed)`.
pub fn synthetic_trace(
    model: TrafficModel,
    params: &SyntheticParams,
    seed: u64,
) -> Result<Vec<TraceEvent>, TrafficError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.racks;
    let count = (params.duration * params.events_per_second).floor() as usize;
    let at = |idx: usize| idx as f64 / params.events_per_second;
    let mut events = Vec::with_capacity(count);

    match model {
        TrafficModel::Uniform => {
            let mut pairs: Vec<(usize, usize)> = (0..m)
                .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
                .collect();
            pairs.shuffle(&mut rng);
            for idx in 0..count {
                let (src, dst) = pairs[idx % pairs.len()];
                events.push(TraceEvent {
                    t: at(idx),
                    src,
                    dst,
                    volume: params.mean_volume,
                });
            }
        }
        TrafficModel::Gravity => {
            let draw = |rng: &mut ChaCha8Rng| {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                u.powf(-params.skew)
            };
            let mut w: Vec<f64> = (0..m).map(|_| draw(&mut rng)).collect();
            let mut next_drift = params.drift_period;
            for idx in 0..count {
                let t = at(idx);
                while params.drift_period > 0.0 && t >= next_drift {
                    let r = rng.gen_range(0..m);
                    w[r] = draw(&mut rng);
                    next_drift += params.drift_period;
                }
                let src = pick_weighted(&mut rng, &w);
                let mut dst = pick_weighted(&mut rng, &w);
                while dst == src {
                    dst = pick_weighted(&mut rng, &w);
                }
                events.push(TraceEvent {
                    t,
                    src,
                    dst,
                    volume: exponential(&mut rng, params.mean_volume),
                });
            }
        }
        TrafficModel::Hotspot => {
            let mut pairs: Vec<(usize, usize)> = (0..m)
                .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
                .collect();
            pairs.shuffle(&mut rng);
            let (hot, cold) = pairs.split_at(params.hot_pairs);
            for idx in 0..count {
                let use_hot = !hot.is_empty() && (cold.is_empty() || rng.gen_bool(params.hot_fraction));
                let (src, dst) = if use_hot {
                    hot[rng.gen_range(0..hot.len())]
                } else {
                    cold[rng.gen_range(0..cold.len())]
                };
                events.push(TraceEvent {
                    t: at(idx),
                    src,
                    dst,
                    volume: params.mean_volume,
                });
            }
        }
        TrafficModel::ShiftingPermutation => {
            let mut perm = derangement(&mut rng, m);
            let mut next_shift = params.shift_period;
            for idx in 0..count {
                let t = at(idx);
                while t >= next_shift {
                    perm = derangement(&mut rng, m);
                    next_shift += params.shift_period;
                }
                let src = rng.gen_range(0..m);
                events.push(TraceEvent {
                    t,
                    src,
                    dst: perm[src],
                    volume: exponential(&mut rng, params.mean_volume),
                });
            }
        }
    }
    Ok(events)
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T, TrafficError> {
    let raw = rec.get(idx).ok_or_else(|| TrafficError::Parse {
        line,
        message: format!("missing {name} column"),
    })?;
    raw.trim().parse().map_err(|_| TrafficError::Parse {
        line,
        message: format!("bad {name} value {raw:?}"),
    })
}

/// Reads `t,src,dst,volume` rows. A leading header row is skipped.
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceEvent>, TrafficError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut events = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != 4 {
            return Err(TrafficError::Parse {
                line,
                message: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        let t: f64 = parse_field(&rec, 0, "t", line)?;
        let src: usize = parse_field(&rec, 1, "src", line)?;
        let dst: usize = parse_field(&rec, 2, "dst", line)?;
        let volume: f64 = parse_field(&rec, 3, "volume", line)?;
        if !t.is_finite() || !volume.is_finite() || volume < 0.0 {
            return Err(TrafficError::Parse {
                line,
                message: "t and volume must be finite, volume non-negative".into(),
            });
        }
        if src == dst {
            return Err(TrafficError::Parse {
                line,
                message: format!("source and destination are both {src}"),
            });
        }
        if t < prev {
            return Err(TrafficError::NonMonotone { line, t, prev });
        }
        prev = t;
        events.push(TraceEvent { t, src, dst, volume });
    }
    Ok(events)
}

pub fn load_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceEvent>, TrafficError> {
    read_trace_csv(std::fs::File::open(path)?)
}

/// Writes events with a `t,src,dst,volume` header.
pub fn write_trace_csv<W: Write>(out: W, events: &[TraceEvent]) -> Result<(), TrafficError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "src", "dst", "volume"])?;
    for e in events {
        w.write_record([
            e.t.to_string(),
            e.src.to_string(),
            e.dst.to_string(),
            e.volume.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, src: usize, dst: usize, volume: f64) -> TraceEvent {
        TraceEvent { t, src, dst, volume }
    }

    #[test]
    fn weight_formula() {
        let mut tr = TrafficMatrix::zeros(2);
        tr.add(0, 1, 5.0);
        tr.add(1, 0, 1.0);
        assert_eq!(tr.connection_weight(0, 1, 2), 3.0);
        assert_eq!(tr.connection_weight(1, 0, 1), 6.0);
    }

    #[test]
    fn zero_traffic_fills_in_index_order() {
        let shape = NetworkShape::uniform(4, 1, 2).unwrap();
        // Total capacity 8; load 0.25 allows one connection.
        let d = demand_from_traffic_static(&TrafficMatrix::zeros(4), &shape, 0.25).unwrap();
        assert_eq!(d.total(), 2);
        assert_eq!(d.get(0, 1), 1);
        let d = demand_from_traffic_static(&TrafficMatrix::zeros(4), &shape, 1.0).unwrap();
        assert!(d.is_feasible(&shape));
    }

    #[test]
    fn heavy_pair_gets_connections_first() {
        let shape = NetworkShape::uniform(3, 2, 2).unwrap();
        let mut tr = TrafficMatrix::zeros(3);
        tr.add(1, 2, 10.0);
        tr.add(0, 1, 1.0);
        // Weights: (1,2): 11, 5.5, 3.67, 2.75; (0,1): 2, 1; (0,2): 1, 0.5.
        let d = demand_from_traffic_static(&tr, &shape, 1.0).unwrap();
        assert_eq!(d.get(1, 2), 4);
        assert!(d.is_feasible(&shape));
    }

    #[test]
    fn bad_load_rejected() {
        let shape = NetworkShape::uniform(3, 1, 2).unwrap();
        assert!(demand_from_traffic_static(&TrafficMatrix::zeros(3), &shape, 0.0).is_err());
        assert!(demand_from_traffic_static(&TrafficMatrix::zeros(3), &shape, 1.5).is_err());
    }

    #[test]
    fn phases_cover_trace() {
        let events: Vec<_> = (0..10).map(|t| ev(t as f64 * 100.0, 0, 1, 1.0)).collect();
        let phases = static_phases(&events, 2, 300.0, 200.0);
        assert_eq!(phases[0].get(0, 1), 3.0);
        assert_eq!(phases.len(), 5);
        assert!(static_phases(&[], 2, 300.0, 200.0).is_empty());
    }

    #[test]
    fn single_event_with_room_only_adds() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, 1.0, 600.0).unwrap();
        let out = gen.observe(ev(0.0, 0, 1, 10.0));
        assert!(!out.is_empty());
        assert!(out.iter().all(|c| c.kind == ModKind::Add && (c.j, c.k) == (0, 1)));
        assert!(gen.demand().is_feasible(&shape));
        assert_eq!(gen.demand().get(0, 1), 4);
    }

    #[test]
    fn saturated_row_swaps_out_lowest_weight() {
        // Budget of two connections per switch.
        let shape = NetworkShape::uniform(4, 1, 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, 1.0, 600.0).unwrap();
        gen.observe(ev(0.0, 0, 1, 100.0));
        assert_eq!(gen.demand().get(0, 1), 2);
        // Row 0 is full. A light pair cannot displace anything.
        assert!(gen.observe(ev(1.0, 0, 2, 1.0)).is_empty());
        // (0,2) now carries 251: rank-1 weight 252 beats (0,1)'s rank-2
        // weight 50.5, and rank 2 at 126 still beats (0,1)'s rank-1 weight
        // 101, so the second swap happens too.
        let out = gen.observe(ev(2.0, 0, 2, 250.0));
        assert_eq!(
            out,
            vec![
                DemandChange::remove(0, 1),
                DemandChange::add(0, 2),
                DemandChange::remove(0, 1),
                DemandChange::add(0, 2),
            ]
        );
        assert_eq!(gen.demand().get(0, 2), 2);
    }

    #[test]
    fn exactly_one_swap() {
        let shape = NetworkShape::uniform(4, 1, 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, 1.0, 600.0).unwrap();
        gen.observe(ev(0.0, 0, 1, 100.0));
        // Weight of (0,2) rank 1: 61 > 50.5; rank 2: 30.5 < 101.
        let out = gen.observe(ev(1.0, 0, 2, 60.0));
        assert_eq!(out, vec![DemandChange::remove(0, 1), DemandChange::add(0, 2)]);
    }

    #[test]
    fn window_expires_traffic() {
        let shape = NetworkShape::uniform(3, 1, 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, 1.0, 10.0).unwrap();
        gen.observe(ev(0.0, 0, 1, 5.0));
        gen.observe(ev(5.0, 1, 2, 1.0));
        assert_eq!(gen.traffic().get(0, 1), 5.0);
        gen.observe(ev(10.0, 1, 2, 1.0));
        assert_eq!(gen.traffic().get(0, 1), 0.0);
        assert_eq!(gen.traffic().get(1, 2), 2.0);
    }

    #[test]
    fn malformed_events_are_counted() {
        let shape = NetworkShape::uniform(3, 1, 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, 1.0, 10.0).unwrap();
        assert!(gen.observe(ev(0.0, 1, 1, 5.0)).is_empty());
        assert!(gen.observe(ev(0.0, 1, 7, 5.0)).is_empty());
        gen.observe(ev(3.0, 0, 1, 5.0));
        assert!(gen.observe(ev(2.0, 0, 1, 5.0)).is_empty());
        assert_eq!(gen.skipped, 3);
    }

    #[test]
    fn uniform_two_racks_alternates() {
        let p = SyntheticParams {
            racks: 2,
            duration: 10.0,
            events_per_second: 1.0,
            ..Default::default()
        };
        let ev = synthetic_trace(TrafficModel::Uniform, &p, 3).unwrap();
        assert_eq!(ev.len(), 10);
        for w in ev.windows(2) {
            assert_eq!((w[0].src, w[0].dst), (w[1].dst, w[1].src));
            assert_eq!(w[0].volume, w[1].volume);
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let p = SyntheticParams {
            racks: 8,
            duration: 200.0,
            drift_period: 20.0,
            ..Default::default()
        };
        for model in [
            TrafficModel::Uniform,
            TrafficModel::Gravity,
            TrafficModel::Hotspot,
            TrafficModel::ShiftingPermutation,
        ] {
            let a = synthetic_trace(model, &p, 42).unwrap();
            let b = synthetic_trace(model, &p, 42).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|e| e.src != e.dst && e.src < 8 && e.dst < 8));
            assert!(a.windows(2).all(|w| w[0].t <= w[1].t));
        }
    }

    #[test]
    fn hotspot_share() {
        let p = SyntheticParams {
            racks: 6,
            duration: 20_000.0,
            hot_pairs: 1,
            hot_fraction: 0.3,
            ..Default::default()
        };
        let ev = synthetic_trace(TrafficModel::Hotspot, &p, 1).unwrap();
        let tr = TrafficMatrix::from_events(6, &ev);
        let total: f64 = ev.iter().map(|e| e.volume).sum();
        let hot = (0..6)
            .flat_map(|a| (0..6).map(move |b| (a, b)))
            .map(|(a, b)| tr.get(a, b))
            .fold(0.0, f64::max);
        assert!((hot / total - 0.3).abs() < 0.05);
    }

    #[test]
    fn unknown_model() {
        assert!("zipf".parse::<TrafficModel>().is_err());
        assert_eq!("shifting-permutation".parse::<TrafficModel>().unwrap(), TrafficModel::ShiftingPermutation);
    }

    #[test]
    fn csv_parsing() {
        assert!(read_trace_csv("".as_bytes()).unwrap().is_empty());
        let ok = "t,src,dst,volume\n0,0,1,5\n1.5,2,0,7\n2,1,2,0\n";
        let ev = read_trace_csv(ok.as_bytes()).unwrap();
        assert_eq!(ev.len(), 3);
        assert_eq!(ev[1], TraceEvent { t: 1.5, src: 2, dst: 0, volume: 7.0 });

        let same = "0,0,1,5\n1,3,3,2\n";
        match read_trace_csv(same.as_bytes()) {
            Err(TrafficError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let back = "5,0,1,5\n1,1,2,2\n";
        assert!(matches!(
            read_trace_csv(back.as_bytes()),
            Err(TrafficError::NonMonotone { line: 2, .. })
        ));
        let junk = "0,0,1,5\n1,x,2,2\n";
        assert!(matches!(read_trace_csv(junk.as_bytes()), Err(TrafficError::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let p = SyntheticParams {
            racks: 5,
            duration: 30.0,
            ..Default::default()
        };
        let ev = synthetic_trace(TrafficModel::Gravity, &p, 9).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &ev).unwrap();
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), ev);
    }
}
