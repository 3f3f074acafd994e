use proptest::prelude::*;

use memsim_core::aer::{route_events, AddressEvent, BoardSpec, ChipCoord, RouteOptions};
use memsim_core::dpi::weighted_trace;
use memsim_core::{DpiParams, DpiState, MemristorParams, MemristorState, SpikeWaveform};

fn card() -> MemristorParams {
    MemristorParams::default()
}

proptest! {
    #[test]
    fn drift_stays_in_window(
        frac in 0.0f64..=1.0,
        steps in prop::collection::vec((-10.0f64..10.0, 1e-9f64..1e-2), 1..50),
    ) {
        let p = card();
        let mut s = MemristorState::new(p.g_min + frac * (p.g_max - p.g_min), &p).unwrap();
        for (v, dt) in steps {
            let next = s.step(&p, v, dt).unwrap();
            prop_assert!(next.g >= p.g_min && next.g <= p.g_max);
            if p.is_subthreshold(v) {
                prop_assert_eq!(next, s);
            } else if v > 0.0 {
                prop_assert!(next.g >= s.g);
            } else {
                prop_assert!(next.g <= s.g);
            }
            s = next;
        }
    }

    #[test]
    fn decay_is_a_semigroup(i0 in 1e-15f64..1e-6, a in 0.0f64..0.1, b in 0.0f64..0.1) {
        let p = DpiParams::default();
        let s = DpiState { i_syn: i0, t: 0.0 };
        let two = s.decay(&p, a).unwrap().decay(&p, b).unwrap();
        let one = s.decay(&p, a + b).unwrap();
        prop_assert!((two.i_syn - one.i_syn).abs() <= 1e-12 * one.i_syn);
        prop_assert!(one.i_syn <= i0 && one.i_syn >= 0.0);
    }

    #[test]
    fn pulse_stays_between_start_and_target(i0 in 0.0f64..2e-8, g in 0.0f64..=1.0) {
        let p = DpiParams::default();
        let target = g * p.steady_state();
        let out = DpiState { i_syn: i0, t: 0.0 }.on_spike(&p, g).unwrap().i_syn;
        prop_assert!(out >= i0.min(target) && out <= i0.max(target));
    }

    #[test]
    fn trace_is_time_invariant(
        t0 in 0usize..50,
        shift in 1usize..50,
        g in 0.05f64..=1.0,
    ) {
        let p = DpiParams::default();
        let dt = 1e-4;
        let base = weighted_trace(&p, &[(t0 as f64 * dt, g)], 0.02, dt).unwrap();
        let moved = weighted_trace(&p, &[((t0 + shift) as f64 * dt, g)], 0.02, dt).unwrap();
        for k in 0..base.len() - shift {
            let (a, b) = (base[k].1, moved[k + shift].1);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-30), "k={} {} vs {}", k, a, b);
        }
    }

    #[test]
    fn trace_is_linear_in_weight(g in 0.01f64..=0.5, t1 in 0.0f64..0.01) {
        let p = DpiParams::default();
        let one = weighted_trace(&p, &[(t1, g)], 0.03, 1e-4).unwrap();
        let two = weighted_trace(&p, &[(t1, 2.0 * g)], 0.03, 1e-4).unwrap();
        for (a, b) in one.iter().zip(&two) {
            prop_assert!((2.0 * a.1 - b.1).abs() <= 1e-12 * b.1.abs());
        }
    }

    #[test]
    fn waveform_lookup_is_bounded(
        mut offsets in prop::collection::btree_set(1u32..10_000, 1..8),
        levels in prop::collection::vec(-3.0f64..3.0, 8),
        probe in -1e-6f64..2e-5,
    ) {
        offsets.insert(0);
        let mut bp: Vec<(f64, f64)> = offsets
            .iter()
            .zip(&levels)
            .map(|(&t, &v)| (t as f64 * 1e-9, v))
            .collect();
        let last = bp.len() - 1;
        bp[last].1 = 0.0;
        let w = SpikeWaveform::new(bp.clone(), 0.0).unwrap();
        let lo = bp.iter().map(|b| b.1).fold(0.0, f64::min);
        let hi = bp.iter().map(|b| b.1).fold(0.0, f64::max);
        let v = w.voltage(probe);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        for &(t, level) in &bp {
            prop_assert_eq!(w.voltage(t), level);
        }
        prop_assert_eq!(w.inverted().inverted(), w.clone());
        prop_assert_eq!(w.inverted().voltage(probe), -v);
    }

    #[test]
    fn mesh_routes_conserve_and_take_shortest_paths(
        raw in prop::collection::vec((0u32..1000, 0usize..4, 0usize..4, 0usize..4, 0usize..4), 1..80),
        cut in 0.0f64..2e-7,
    ) {
        let spec = BoardSpec::for_chips(16, 1e8);
        let mut events: Vec<AddressEvent> = raw
            .iter()
            .map(|&(t, a, b, c, d)| AddressEvent {
                t: t as f64 * 1e-10,
                source_chip: ChipCoord::new(a, b),
                source_neuron: 0,
                dest_chip: ChipCoord::new(c, d),
                dest_neuron: 0,
            })
            .collect();
        events.sort_by(|x, y| x.t.total_cmp(&y.t));
        let full = route_events(&spec, &events, &RouteOptions::default()).unwrap();
        prop_assert_eq!(full.stats.delivered, events.len() as u64);
        for d in &full.deliveries {
            prop_assert_eq!(d.hops, d.event.source_chip.hops_to(&d.event.dest_chip));
            prop_assert!(d.t_delivered - d.event.t >= d.hops as f64 / spec.e_pp * (1.0 - 1e-9));
        }
        let opts = RouteOptions { horizon: Some(cut), ..RouteOptions::default() };
        let s = route_events(&spec, &events, &opts).unwrap().stats;
        prop_assert_eq!(s.injected, s.delivered + s.in_flight);
        prop_assert!(s.max_window_departures <= s.window_limit);
    }
}
