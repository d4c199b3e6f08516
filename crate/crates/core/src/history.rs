//! Solver-agnostic run recording: subsampled space-time frames, receiver
//! time series and full-field snapshots.

use crate::{Error, Result};

/// What to record during a run.
#[derive(Debug, Clone)]
pub struct RecordSpec {
    /// Times at which to capture full (U, V, S) snapshots, s.
    pub snapshot_times: Vec<f64>,
    /// Receiver positions, m; sampled every step.
    pub receivers: Vec<f64>,
    /// Keep every `stride`-th step in the frame record; `None` picks the
    /// smallest stride that stays within [`RecordSpec::max_frames`].
    pub stride: Option<usize>,
    /// Frame budget used when `stride` is `None`.
    pub max_frames: usize,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            snapshot_times: Vec::new(),
            receivers: Vec::new(),
            stride: None,
            max_frames: 600,
        }
    }
}

/// Fields at one instant. Displacement-only solvers leave `v` and `s` empty.
#[derive(Debug, Clone)]
pub struct Frame {
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

/// Per-step samples at one receiver node.
#[derive(Debug, Clone)]
pub struct ReceiverTrace {
    /// Requested position, m.
    pub x: f64,
    /// Grid node actually sampled.
    pub node: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Recorded output of one run, shared by all solvers.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    pub xs: Vec<f64>,
    /// Solver time step, s.
    pub dt: f64,
    /// Frame subsampling stride, steps.
    pub stride: usize,
    /// Uniformly spaced frames, `stride * dt` apart, starting at the
    /// initial state.
    pub frames: Vec<Frame>,
    pub snapshots: Vec<Frame>,
    /// Times of the per-step receiver samples.
    pub receiver_times: Vec<f64>,
    pub receivers: Vec<ReceiverTrace>,
}

impl FieldHistory {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    /// Spacing of the frame record in time.
    pub fn frame_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn frame_times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    /// Receiver whose node is closest to `x`, if any was requested.
    pub fn receiver_at(&self, x: f64) -> Option<&ReceiverTrace> {
        self.receivers
            .iter()
            .min_by(|a, b| (a.x - x).abs().partial_cmp(&(b.x - x).abs()).unwrap())
    }

    /// Frame closest in time to `t`.
    pub fn frame_at(&self, t: f64) -> Option<&Frame> {
        self.frames
            .iter()
            .min_by(|a, b| (a.time - t).abs().partial_cmp(&(b.time - t).abs()).unwrap())
    }
}

/// Incremental builder fed once per step (including the initial state).
pub struct Recorder {
    xs: Vec<f64>,
    dt: f64,
    stride: usize,
    step: usize,
    frames: Vec<Frame>,
    snapshots: Vec<Frame>,
    pending_snapshots: Vec<f64>,
    next_snapshot: usize,
    receiver_times: Vec<f64>,
    receivers: Vec<ReceiverTrace>,
}

impl Recorder {
    pub fn new(xs: &[f64], dt: f64, n_steps: usize, spec: &RecordSpec) -> Result<Self> {
        if xs.len() < 2 || dt <= 0.0 {
            return Err(Error::InvalidConfig("recorder needs a grid and a positive dt".into()));
        }
        let length = *xs.last().unwrap();
        let dx = xs[1] - xs[0];
        let mut receivers = Vec::with_capacity(spec.receivers.len());
        for &x in &spec.receivers {
            if !(0.0..=length).contains(&x) {
                return Err(Error::InvalidConfig(format!(
                    "receiver at {x} m lies outside the domain [0, {length}]"
                )));
            }
            receivers.push(ReceiverTrace {
                x,
                node: (x / dx).round() as usize,
                u: Vec::new(),
                v: Vec::new(),
            });
        }
        let mut pending = spec.snapshot_times.clone();
        pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let stride = spec
            .stride
            .unwrap_or_else(|| 1.max((n_steps + spec.max_frames) / spec.max_frames.max(1)));
        Ok(Recorder {
            xs: xs.to_vec(),
            dt,
            stride,
            step: 0,
            frames: Vec::new(),
            snapshots: Vec::new(),
            pending_snapshots: pending,
            next_snapshot: 0,
            receiver_times: Vec::new(),
            receivers,
        })
    }

    /// Record the state at `time`; `v` and `s` may be empty for
    /// displacement-only solvers.
    pub fn push(&mut self, time: f64, u: &[f64], v: &[f64], s: &[f64]) {
        if self.step % self.stride == 0 {
            self.frames.push(Frame { time, u: u.to_vec(), v: v.to_vec(), s: s.to_vec() });
        }
        // capture each requested snapshot at the first step within dt/2 of it
        while self.next_snapshot < self.pending_snapshots.len()
            && time + 0.5 * self.dt >= self.pending_snapshots[self.next_snapshot]
        {
            self.snapshots.push(Frame { time, u: u.to_vec(), v: v.to_vec(), s: s.to_vec() });
            self.next_snapshot += 1;
        }
        self.receiver_times.push(time);
        for r in &mut self.receivers {
            r.u.push(u.get(r.node).copied().unwrap_or(0.0));
            r.v.push(v.get(r.node).copied().unwrap_or(0.0));
        }
        self.step += 1;
    }

    pub fn finish(self) -> FieldHistory {
        FieldHistory {
            xs: self.xs,
            dt: self.dt,
            stride: self.stride,
            frames: self.frames,
            snapshots: self.snapshots,
            receiver_times: self.receiver_times,
            receivers: self.receivers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, length: f64) -> Vec<f64> {
        (0..=n).map(|m| length * m as f64 / n as f64).collect()
    }

    #[test]
    fn stride_respects_frame_budget() {
        let xs = grid(10, 1.0);
        let spec = RecordSpec { max_frames: 4, ..Default::default() };
        let mut rec = Recorder::new(&xs, 0.1, 10, &spec).unwrap();
        let u = vec![0.0; 11];
        for n in 0..=10 {
            rec.push(0.1 * n as f64, &u, &[], &[]);
        }
        let hist = rec.finish();
        assert!(hist.frames.len() <= 4);
        assert_eq!(hist.receiver_times.len(), 11);
        // frames remain uniformly spaced
        let ft = hist.frame_times();
        for w in ft.windows(2) {
            assert!((w[1] - w[0] - hist.frame_dt()).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshots_capture_nearest_step() {
        let xs = grid(4, 1.0);
        let spec = RecordSpec {
            snapshot_times: vec![0.25, 0.62],
            ..Default::default()
        };
        let mut rec = Recorder::new(&xs, 0.1, 10, &spec).unwrap();
        for n in 0..=10 {
            let u = vec![n as f64; 5];
            rec.push(0.1 * n as f64, &u, &[], &[]);
        }
        let hist = rec.finish();
        assert_eq!(hist.snapshots.len(), 2);
        assert!((hist.snapshots[0].time - 0.2).abs() < 1e-12);
        assert!((hist.snapshots[1].time - 0.6).abs() < 1e-12);
    }

    #[test]
    fn receivers_sample_the_nearest_node() {
        let xs = grid(10, 10.0);
        let spec = RecordSpec { receivers: vec![3.2, 7.0], ..Default::default() };
        let mut rec = Recorder::new(&xs, 0.5, 2, &spec).unwrap();
        let u: Vec<f64> = (0..=10).map(|m| m as f64).collect();
        rec.push(0.0, &u, &u, &[]);
        let hist = rec.finish();
        let r = hist.receiver_at(3.0).unwrap();
        assert_eq!(r.node, 3);
        assert_eq!(r.u[0], 3.0);
        assert_eq!(hist.receiver_at(7.2).unwrap().node, 7);
    }

    #[test]
    fn receiver_outside_domain_rejected() {
        let xs = grid(10, 10.0);
        let spec = RecordSpec { receivers: vec![11.0], ..Default::default() };
        assert!(Recorder::new(&xs, 0.5, 2, &spec).is_err());
    }
}
