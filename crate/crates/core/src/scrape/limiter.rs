//! Per-host token-bucket rate limiter: each request consumes one token,
//! refilled at a fixed rate per host.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::clock::Clock;

struct Bucket {
    tokens: f64,
    last_refill_ms: u64,
}

/// Token buckets keyed by host. `0 <= tokens <= capacity` holds at every
/// observation point.
pub struct RateLimiter {
    refill_rps: f64,
    capacity: f64,
    clock: Arc<dyn Clock>,
    buckets: Mutex<HashMap<String, Bucket>>,
}

impl RateLimiter {
    pub fn new(refill_rps: f64, capacity: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(refill_rps > 0.0, "refill rate must be positive");
        assert!(capacity >= 1.0, "capacity must hold at least one token");
        RateLimiter {
            refill_rps,
            capacity,
            clock,
            buckets: Mutex::new(HashMap::new()),
        }
    }

    /// Block (via the clock) until a token is available for `host`, then
    /// take it.
    pub fn acquire(&self, host: &str) {
        loop {
            let wait_ms = {
                let mut buckets = self.buckets.lock().expect("limiter lock");
                let now = self.clock.now_ms();
                let bucket = buckets.entry(host.to_string()).or_insert(Bucket {
                    tokens: self.capacity,
                    last_refill_ms: now,
                });
                let elapsed_ms = now.saturating_sub(bucket.last_refill_ms);
                bucket.tokens = (bucket.tokens + elapsed_ms as f64 / 1000.0 * self.refill_rps)
                    .min(self.capacity);
                bucket.last_refill_ms = now;
                if bucket.tokens >= 1.0 {
                    bucket.tokens -= 1.0;
                    return;
                }
                let deficit = 1.0 - bucket.tokens;
                ((deficit * 1000.0 / self.refill_rps).ceil() as u64).max(1)
            };
            self.clock.sleep_ms(wait_ms);
        }
    }

    /// Current token count for a host, for assertions.
    pub fn tokens(&self, host: &str) -> Option<f64> {
        self.buckets
            .lock()
            .expect("limiter lock")
            .get(host)
            .map(|b| b.tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scrape::clock::ManualClock;

    #[test]
    fn burst_up_to_capacity_then_paced() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::new(2.0, 2.0, clock.clone());
        // two tokens available immediately
        limiter.acquire("h");
        limiter.acquire("h");
        assert_eq!(clock.now_ms(), 0);
        // third must wait for a refill: 1 token at 2/s = 500 ms
        limiter.acquire("h");
        assert_eq!(clock.now_ms(), 500);
        limiter.acquire("h");
        assert_eq!(clock.now_ms(), 1000);
    }

    #[test]
    fn tokens_never_exceed_capacity() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::new(2.0, 2.0, clock.clone());
        limiter.acquire("h");
        clock.advance(60_000);
        limiter.acquire("h");
        let tokens = limiter.tokens("h").unwrap();
        assert!((0.0..=2.0).contains(&tokens), "tokens={tokens}");
    }

    #[test]
    fn hosts_have_independent_buckets() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::new(1.0, 1.0, clock.clone());
        limiter.acquire("a");
        limiter.acquire("b");
        assert_eq!(clock.now_ms(), 0);
        limiter.acquire("a");
        assert_eq!(clock.now_ms(), 1000);
    }
}
