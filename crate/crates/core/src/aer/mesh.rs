//! Discrete-event simulation of address events crossing a chip mesh.
//!
//! Events are routed dimension-order: the row coordinate is resolved
//! first, then the column. Every directed link is a FIFO server that
//! emits at most one event per `1 / e_pp` seconds (a token bucket of depth
//! one refilled at `e_pp`). A single global queue ordered by
//! `(time, sequence)` drives the loop, so runs are bit-reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use super::{AddressEvent, BoardSpec, ChipCoord, MeshCapacity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteOptions {
    /// Stop processing at this time; events still in the mesh are
    /// reported as in flight. `None` drains the mesh.
    pub horizon: Option<f64>,
    /// Sliding window for the per-link throughput check, seconds.
    pub window: f64,
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions {
            horizon: None,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshStats {
    pub injected: u64,
    pub delivered: u64,
    pub in_flight: u64,
    /// Highest fraction of time any link spent serving events.
    pub max_link_util: f64,
    pub mean_latency_s: f64,
    pub max_latency_s: f64,
    /// Largest number of events held at one link (waiting + in service).
    pub max_queue: u64,
    pub window_s: f64,
    /// Most departures any link made inside one window.
    pub max_window_departures: u64,
    /// Departures a link can make in one window at full rate.
    pub window_limit: u64,
    pub span_s: f64,
    pub closed_form_eps: f64,
    pub capacity: MeshCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub event: AddressEvent,
    pub t_delivered: f64,
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRun {
    pub stats: MeshStats,
    pub deliveries: Vec<Delivery>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    North,
    South,
    East,
    West,
}

impl Dir {
    fn index(self) -> usize {
        self as usize
    }
}

/// An event arriving at a chip's router.
#[derive(Debug, Clone, Copy)]
struct Arrival {
    t: f64,
    seq: u64,
    event: usize,
    at: ChipCoord,
    hops: usize,
    /// Link the event just left, if any.
    via: Option<usize>,
}

impl PartialEq for Arrival {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Default, Clone)]
struct Link {
    busy_until: f64,
    /// Completion times of events queued or in service.
    pending: VecDeque<f64>,
    completed: u64,
    /// Departure times inside the current window.
    recent: VecDeque<f64>,
}

/// Next hop under row-first dimension-order routing.
fn next_hop(at: ChipCoord, dest: ChipCoord) -> Option<(Dir, ChipCoord)> {
    use std::cmp::Ordering::*;
    match (at.row.cmp(&dest.row), at.col.cmp(&dest.col)) {
        (Less, _) => Some((Dir::South, ChipCoord::new(at.row + 1, at.col))),
        (Greater, _) => Some((Dir::North, ChipCoord::new(at.row - 1, at.col))),
        (Equal, Less) => Some((Dir::East, ChipCoord::new(at.row, at.col + 1))),
        (Equal, Greater) => Some((Dir::West, ChipCoord::new(at.row, at.col - 1))),
        (Equal, Equal) => None,
    }
}

fn check_coord(spec: &BoardSpec, c: ChipCoord) -> Result<()> {
    if c.row >= spec.mesh_rows || c.col >= spec.mesh_cols {
        return Err(Error::OutOfMesh {
            row: c.row,
            col: c.col,
            rows: spec.mesh_rows,
            cols: spec.mesh_cols,
        });
    }
    Ok(())
}

/// Routes time-sorted `events` through the mesh.
pub fn route_events(
    spec: &BoardSpec,
    events: &[AddressEvent],
    opts: &RouteOptions,
) -> Result<MeshRun> {
    spec.validate()?;
    if !(opts.window > 0.0) {
        return Err(Error::param("window_s", "must be > 0"));
    }
    for e in events {
        check_coord(spec, e.source_chip)?;
        check_coord(spec, e.dest_chip)?;
    }
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::Unsorted { what: "events" });
    }

    let service = 1.0 / spec.e_pp;
    let horizon = opts.horizon.unwrap_or(f64::INFINITY);
    let mut links = vec![Link::default(); spec.n_ch * 4];
    let link_id = |c: ChipCoord, d: Dir| (c.row * spec.mesh_cols + c.col) * 4 + d.index();

    let mut heap: BinaryHeap<Arrival> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut next_injection = 0usize;
    let mut injected = 0u64;
    let mut deliveries = Vec::new();
    let mut latency_sum = 0.0;
    let mut max_latency: f64 = 0.0;
    let mut max_queue = 0u64;
    let mut max_window = 0u64;
    let mut now = events.first().map_or(0.0, |e| e.t);
    let start = now;

    loop {
        // injections win ties against in-mesh arrivals at the same instant
        let take_injection = match (events.get(next_injection), heap.peek()) {
            (Some(e), Some(a)) => e.t <= a.t,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let arrival = if take_injection {
            let e = &events[next_injection];
            if e.t > horizon {
                next_injection = events.len();
                continue;
            }
            let a = Arrival {
                t: e.t,
                seq,
                event: next_injection,
                at: e.source_chip,
                hops: 0,
                via: None,
            };
            seq += 1;
            next_injection += 1;
            injected += 1;
            a
        } else {
            if heap.peek().is_some_and(|a: &Arrival| a.t > horizon) {
                break;
            }
            heap.pop().expect("peeked")
        };
        now = arrival.t;

        if let Some(id) = arrival.via {
            let link = &mut links[id];
            link.completed += 1;
            link.recent.push_back(arrival.t);
            while link
                .recent
                .front()
                .is_some_and(|&d| d < arrival.t - opts.window)
            {
                link.recent.pop_front();
            }
            max_window = max_window.max(link.recent.len() as u64);
        }

        let event = &events[arrival.event];
        match next_hop(arrival.at, event.dest_chip) {
            None => {
                let latency = arrival.t - event.t;
                latency_sum += latency;
                max_latency = max_latency.max(latency);
                deliveries.push(Delivery {
                    event: *event,
                    t_delivered: arrival.t,
                    hops: arrival.hops,
                });
            }
            Some((dir, to)) => {
                let id = link_id(arrival.at, dir);
                let link = &mut links[id];
                while link.pending.front().is_some_and(|&f| f <= arrival.t) {
                    link.pending.pop_front();
                }
                let begin = link.busy_until.max(arrival.t);
                let finish = begin + service;
                link.busy_until = finish;
                link.pending.push_back(finish);
                max_queue = max_queue.max(link.pending.len() as u64);
                heap.push(Arrival {
                    t: finish,
                    seq,
                    event: arrival.event,
                    at: to,
                    hops: arrival.hops + 1,
                    via: Some(id),
                });
                seq += 1;
            }
        }
    }

    let end = if horizon.is_finite() { horizon } else { now };
    let span = end - start;
    let max_link_util = if span > 0.0 {
        links
            .iter()
            .map(|l| l.completed as f64 * service / span)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let delivered = deliveries.len() as u64;
    let stats = MeshStats {
        injected,
        delivered,
        in_flight: heap.len() as u64,
        max_link_util,
        mean_latency_s: if delivered > 0 {
            latency_sum / delivered as f64
        } else {
            0.0
        },
        max_latency_s: max_latency,
        max_queue,
        window_s: opts.window,
        max_window_departures: max_window,
        window_limit: (opts.window * spec.e_pp * (1.0 + 1e-9)).floor() as u64 + 1,
        span_s: span,
        closed_form_eps: super::board_traffic(spec.n_ch as f64, spec.e_pp),
        capacity: spec.edge_aware_capacity(),
    };
    Ok(MeshRun { stats, deliveries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, src: (usize, usize), dst: (usize, usize)) -> AddressEvent {
        AddressEvent {
            t,
            source_chip: ChipCoord::new(src.0, src.1),
            source_neuron: 0,
            dest_chip: ChipCoord::new(dst.0, dst.1),
            dest_neuron: 1,
        }
    }

    #[test]
    fn local_event_is_immediate() {
        let spec = BoardSpec::default();
        let run =
            route_events(&spec, &[ev(1e-3, (4, 4), (4, 4))], &RouteOptions::default()).unwrap();
        assert_eq!(run.stats.delivered, 1);
        assert_eq!(run.deliveries[0].hops, 0);
        assert_eq!(run.deliveries[0].t_delivered, 1e-3);
        assert_eq!(run.stats.mean_latency_s, 0.0);
    }

    #[test]
    fn uncontended_latency_is_hop_count() {
        let spec = BoardSpec::default();
        let run =
            route_events(&spec, &[ev(0.0, (0, 0), (3, 5))], &RouteOptions::default()).unwrap();
        let d = run.deliveries[0];
        assert_eq!(d.hops, 8);
        assert!((d.t_delivered - 8.0 / spec.e_pp).abs() < 1e-20);
    }

    #[test]
    fn row_first_order() {
        let mut at = ChipCoord::new(0, 0);
        let dest = ChipCoord::new(2, 2);
        let mut path = vec![];
        while let Some((d, n)) = next_hop(at, dest) {
            path.push(d);
            at = n;
        }
        assert_eq!(path, [Dir::South, Dir::South, Dir::East, Dir::East]);
    }

    #[test]
    fn contention_serializes() {
        let spec = BoardSpec::default();
        let events: Vec<_> = (0..3).map(|_| ev(0.0, (0, 0), (0, 1))).collect();
        let run = route_events(&spec, &events, &RouteOptions::default()).unwrap();
        let times: Vec<f64> = run
            .deliveries
            .iter()
            .map(|d| d.t_delivered * spec.e_pp)
            .collect();
        for (k, t) in times.iter().enumerate() {
            assert!((t - (k + 1) as f64).abs() < 1e-9);
        }
        assert_eq!(run.stats.max_queue, 3);
    }

    #[test]
    fn horizon_conserves_events() {
        let spec = BoardSpec::default();
        let events: Vec<_> = (0..10)
            .map(|k| ev(k as f64 * 1e-9, (0, 0), (9, 9)))
            .collect();
        let opts = RouteOptions {
            horizon: Some(5e-8),
            ..RouteOptions::default()
        };
        let s = route_events(&spec, &events, &opts).unwrap().stats;
        assert!(s.in_flight > 0);
        assert_eq!(s.injected, s.delivered + s.in_flight);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = BoardSpec::default();
        assert!(matches!(
            route_events(&spec, &[ev(0.0, (0, 0), (10, 0))], &RouteOptions::default()),
            Err(Error::OutOfMesh { row: 10, .. })
        ));
        let unsorted = [ev(1.0, (0, 0), (1, 1)), ev(0.5, (0, 0), (1, 1))];
        assert!(route_events(&spec, &unsorted, &RouteOptions::default()).is_err());
    }
}
