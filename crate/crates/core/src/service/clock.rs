use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always returns the same instant.
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// Settable clock for tests.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        let mut t = self.0.lock().unwrap();
        *t += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

/// Source of rater tokens.
pub trait TokenSource: Send + Sync {
    fn next_token(&self) -> String;
}

/// Random v4 UUIDs from the OS generator.
pub struct RandomTokens;

impl TokenSource for RandomTokens {
    fn next_token(&self) -> String {
        uuid::Uuid::new_v4().simple().to_string()
    }
}

/// Reproducible 128-bit hex tokens, for simulations.
pub struct SeededTokens(Mutex<ChaCha8Rng>);

impl SeededTokens {
    pub fn new(seed: u64) -> Self {
        Self(Mutex::new(ChaCha8Rng::seed_from_u64(seed)))
    }
}

impl TokenSource for SeededTokens {
    fn next_token(&self) -> String {
        let v: u128 = self.0.lock().unwrap().random();
        format!("{v:032x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_tokens_repeat() {
        let a = SeededTokens::new(7);
        let b = SeededTokens::new(7);
        let ta: Vec<String> = (0..5).map(|_| a.next_token()).collect();
        let tb: Vec<String> = (0..5).map(|_| b.next_token()).collect();
        assert_eq!(ta, tb);
        assert_eq!(ta[0].len(), 32);
        assert_ne!(ta[0], ta[1]);
    }

    #[test]
    fn random_tokens_differ() {
        assert_ne!(RandomTokens.next_token(), RandomTokens.next_token());
    }
}
