//! Reference stepper written directly from the model definition, sharing no
//! code with the production engine beyond the input types. It keeps a full
//! copy of the network after every event and recomputes each coupling from
//! scratch, trading speed for obviousness.

#![allow(dead_code)]

use tremor_core::model::{MarketEvent, ModelParams, Modes, Normalization, Sidedness, Universe};

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub r_cum: Vec<f64>,
    pub released: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveStep {
    pub ret: f64,
    pub transfer: f64,
    pub n_star: usize,
}

fn passes(r: f64, r_c: f64, sidedness: Sidedness) -> bool {
    match sidedness {
        Sidedness::TwoSided => r.abs() > r_c,
        Sidedness::OneSidedLiteral => r > r_c,
    }
}

/// Steps `events` with local news `etas`, starting from zero stress with all
/// release times at the first event's time.
pub fn naive_run(
    universe: &Universe,
    events: &[MarketEvent],
    params: &ModelParams,
    modes: Modes,
    etas: &[f64],
) -> Vec<NaiveStep> {
    let n = universe.len();
    let caps: Vec<f64> = universe.exchanges().iter().map(|e| e.capitalization).collect();
    let start = Snapshot {
        r_cum: vec![0.0; n],
        released: vec![events[0].utc_time; n],
    };
    // history[k] is the network after k events
    let mut history = vec![start];
    let mut out = Vec::with_capacity(events.len());
    for (k, ev) in events.iter().enumerate() {
        // what the event may see: the network after the last strictly earlier event
        let seen = events[..k].iter().rposition(|e| e.utc_time < ev.utc_time).map_or(0, |p| p + 1);
        let visible = history[seen].clone();
        let i = ev.exchange;

        let mut fired = Vec::new();
        for j in 0..n {
            if j != i && passes(visible.r_cum[j], params.r_c, modes.sidedness) {
                fired.push(j);
            }
        }
        let divisor = match modes.normalization {
            Normalization::Contributors => fired.len() as f64,
            Normalization::AllOthers => (n - 1) as f64,
        };
        let mut transfer = 0.0;
        for &j in &fired {
            let alpha = 1.0 - (-caps[j] / (caps[i] * params.gamma)).exp();
            let mut lag = ev.utc_time - visible.released[j];
            while lag >= 24.0 {
                lag -= 24.0;
            }
            let beta = (-lag / params.tau).exp();
            transfer += alpha * beta * visible.r_cum[j] / divisor;
        }
        let ret = transfer + etas[k];

        let mut next = history[k].clone();
        for &j in &fired {
            next.r_cum[j] = 0.0;
        }
        next.r_cum[i] = if passes(next.r_cum[i], params.r_c, modes.sidedness) {
            ret
        } else {
            next.r_cum[i] + ret
        };
        next.released[i] = ev.utc_time;
        history.push(next);
        out.push(NaiveStep {
            ret,
            transfer,
            n_star: fired.len(),
        });
    }
    out
}
