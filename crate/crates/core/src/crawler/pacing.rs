use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacingKind {
    NoDelay,
    RandomSleep {
        min_s: f64,
        max_s: f64,
    },
    /// Query back-to-back until blocked, then probe for unblocking at the given interval.
    BurstUntilBlocked {
        resume_probe_interval_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacingPolicy {
    pub kind: PacingKind,
    #[serde(default = "default_cooldown")]
    pub cooldown_after_throttle_s: f64,
}

fn default_cooldown() -> f64 {
    60.0
}

impl Default for PacingPolicy {
    fn default() -> Self {
        PacingPolicy {
            kind: PacingKind::NoDelay,
            cooldown_after_throttle_s: default_cooldown(),
        }
    }
}

impl PacingPolicy {
    pub fn random_sleep(min_s: f64, max_s: f64) -> Self {
        PacingPolicy {
            kind: PacingKind::RandomSleep { min_s, max_s },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.cooldown_after_throttle_s) {
            return Err("cooldown_after_throttle_s must be a non-negative number".into());
        }
        match self.kind {
            PacingKind::NoDelay => Ok(()),
            PacingKind::RandomSleep { min_s, max_s }
                if ok(min_s) && ok(max_s) && min_s <= max_s =>
            {
                Ok(())
            }
            PacingKind::RandomSleep { .. } => Err("random sleep needs 0 <= min_s <= max_s".into()),
            PacingKind::BurstUntilBlocked {
                resume_probe_interval_s,
            } if ok(resume_probe_interval_s) => Ok(()),
            PacingKind::BurstUntilBlocked { .. } => {
                Err("resume_probe_interval_s must be non-negative".into())
            }
        }
    }
}

/// Delay, in seconds, to insert before an engine's next request from the same worker.
pub fn schedule_delay<R: Rng + ?Sized>(policy: &PacingPolicy, rng: &mut R) -> f64 {
    match policy.kind {
        PacingKind::NoDelay | PacingKind::BurstUntilBlocked { .. } => 0.0,
        PacingKind::RandomSleep { min_s, max_s } if min_s >= max_s => min_s,
        PacingKind::RandomSleep { min_s, max_s } => rng.gen_range(min_s..=max_s),
    }
}
