//! Ring buffer of uniformly sampled outputs with interpolated reads.

/// Distance from an integer sample index below which a read snaps to it.
const SNAP: f64 = 1e-9;

/// Samples `y_0, y_1, …` taken every `dt`, sample `i` at time `i·dt`.
///
/// Reads before the first sample return the zero history; reads between
/// samples interpolate linearly.
#[derive(Clone, Debug)]
pub struct DelayLine {
    dt: f64,
    buf: Vec<f64>,
    /// Number of samples pushed so far.
    count: usize,
}

impl DelayLine {
    /// A line able to serve delays up to `max_delay`.
    pub fn new(dt: f64, max_delay: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "sampling step must be positive");
        let span = (max_delay.max(0.0) / dt).ceil() as usize;
        Self {
            dt,
            buf: vec![0.0; 2 * span + 2],
            count: 0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// Number of samples pushed so far.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn push(&mut self, y: f64) {
        let cap = self.buf.len();
        self.buf[self.count % cap] = y;
        self.count += 1;
    }

    /// Sample `i`, zero for negative indices.
    ///
    /// Panics if the sample has not been pushed yet or was overwritten.
    pub fn sample(&self, i: i64) -> f64 {
        if i < 0 {
            return 0.0;
        }
        let i = i as usize;
        assert!(i < self.count, "sample {i} not yet recorded");
        assert!(
            i + self.buf.len() >= self.count,
            "sample {i} dropped from the delay line"
        );
        self.buf[i % self.buf.len()]
    }

    /// Value at time `t`.
    pub fn at(&self, t: f64) -> f64 {
        let pos = t / self.dt;
        let nearest = pos.round();
        if (pos - nearest).abs() < SNAP {
            return self.sample(nearest as i64);
        }
        let lo = pos.floor();
        let frac = pos - lo;
        let lo = lo as i64;
        (1.0 - frac) * self.sample(lo) + frac * self.sample(lo + 1)
    }

    /// `∫ y² dt` over the last `duration` of samples, by the rectangle rule.
    pub fn recent_energy(&self, duration: f64) -> f64 {
        let k = ((duration / self.dt).round() as usize).min(self.count);
        (self.count - k..self.count)
            .map(|i| self.sample(i as i64).powi(2))
            .sum::<f64>()
            * self.dt
    }
}
