use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source for the crawler, in seconds. Injected so that recovery
/// timings and pacing can be tested without wall-clock waits.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
    /// Blocks (or advances simulated time) until `t`. Never moves time backwards.
    fn sleep_until(&self, t: f64);
}

/// Monotone simulated clock; `sleep_until` jumps forward instantly.
#[derive(Debug, Default)]
pub struct SimClock {
    now: Mutex<f64>,
}

impl SimClock {
    pub fn new(start: f64) -> Self {
        SimClock {
            now: Mutex::new(start),
        }
    }

    pub fn set(&self, t: f64) {
        let mut now = self.now.lock().unwrap();
        if t > *now {
            *now = t;
        }
    }
}

impl Clock for SimClock {
    fn now(&self) -> f64 {
        *self.now.lock().unwrap()
    }

    fn sleep_until(&self, t: f64) {
        self.set(t);
    }
}

/// Wall clock measured from construction, offset by `start`.
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
    start: f64,
}

impl SystemClock {
    pub fn new() -> Self {
        let start = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        SystemClock {
            origin: Instant::now(),
            start,
        }
    }

    pub fn starting_at(start: f64) -> Self {
        SystemClock {
            origin: Instant::now(),
            start,
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.start + self.origin.elapsed().as_secs_f64()
    }

    fn sleep_until(&self, t: f64) {
        let wait = t - self.now();
        if wait > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_clock_is_monotone() {
        let c = SimClock::new(5.0);
        c.sleep_until(10.0);
        assert_eq!(c.now(), 10.0);
        c.sleep_until(3.0);
        assert_eq!(c.now(), 10.0);
    }

    #[test]
    fn system_clock_advances() {
        let c = SystemClock::starting_at(0.0);
        let t0 = c.now();
        c.sleep_until(t0 + 0.01);
        assert!(c.now() >= t0 + 0.01);
    }
}
