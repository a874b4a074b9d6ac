//! Ring buffer for the fixed-point elevation record.

use crate::error::Error;

/// Uniformly-sampled elevation history at the measuring point, holding the
/// most recent `capacity` samples.
#[derive(Debug, Clone)]
pub struct ElevationBuffer {
    samples: Vec<f64>,
    head: usize,
    len: usize,
    dt: f64,
    /// Timestamp of the most recent sample.
    last_t: Option<f64>,
}

/// Frozen, contiguous snapshot of a full or partial record.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationRecord {
    /// Samples ordered oldest to newest.
    pub samples: Vec<f64>,
    /// Sample interval Δt (s).
    pub dt: f64,
    /// Timestamp of the oldest sample.
    pub t_start: f64,
}

impl ElevationRecord {
    /// Record duration T = J·Δt.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Timestamp of the newest sample.
    pub fn t_end(&self) -> f64 {
        self.t_start + (self.samples.len().saturating_sub(1)) as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let mean = self.mean();
        self.samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / self.samples.len() as f64
    }
}

impl ElevationBuffer {
    /// Buffer spanning `duration` seconds at interval `dt`; duration must be
    /// a positive integer multiple of `dt`.
    pub fn new(duration: f64, dt: f64) -> Result<Self, Error> {
        if !(dt > 0.0) || !(duration > 0.0) {
            return Err(Error::InvalidParameter(
                "buffer duration and dt must be > 0".into(),
            ));
        }
        let ratio = duration / dt;
        let capacity = ratio.round() as usize;
        if capacity == 0 || (ratio - capacity as f64).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "duration {duration} is not an integer multiple of dt {dt}"
            )));
        }
        Ok(Self {
            samples: vec![0.0; capacity],
            head: 0,
            len: 0,
            dt,
            last_t: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.samples.len()
    }

    /// Seconds of history currently held (≤ the configured duration).
    pub fn duration_held(&self) -> f64 {
        self.len as f64 * self.dt
    }

    /// Push one sample; its timestamp must advance by exactly Δt from the
    /// previous one (the first sample sets the clock).
    pub fn push(&mut self, elevation: f64, t: f64) -> Result<(), Error> {
        if let Some(last) = self.last_t {
            let expected = last + self.dt;
            if (t - expected).abs() > 1e-9 {
                return Err(Error::NonUniformSample { expected, got: t });
            }
        }
        self.samples[self.head] = elevation;
        self.head = (self.head + 1) % self.samples.len();
        if self.len < self.samples.len() {
            self.len += 1;
        }
        self.last_t = Some(t);
        Ok(())
    }

    /// Contiguous snapshot of everything currently held.
    pub fn snapshot(&self) -> ElevationRecord {
        let cap = self.samples.len();
        let mut out = Vec::with_capacity(self.len);
        let start = (self.head + cap - self.len) % cap;
        for i in 0..self.len {
            out.push(self.samples[(start + i) % cap]);
        }
        let t_start = match self.last_t {
            Some(last) => last - (self.len.saturating_sub(1)) as f64 * self.dt,
            None => 0.0,
        };
        ElevationRecord {
            samples: out,
            dt: self.dt,
            t_start,
        }
    }
}
