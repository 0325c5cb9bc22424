//! Retrying, rate-limited GET on top of a [`Transport`].

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use thiserror::Error;

use super::transport::{Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("network error fetching {url} after {attempts} attempts: {reason}")]
    Network {
        url: String,
        attempts: u32,
        reason: String,
    },
    #[error("HTTP {status} from {url}")]
    Http { url: String, status: u16 },
    #[error("rate limited by {url} after {attempts} attempts")]
    RateLimited { url: String, attempts: u32 },
    #[error("no recorded response for {url}")]
    NotRecorded { url: String },
}

/// Exponential backoff: `base`, `2 * base`, `4 * base`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; for offline transports.
    pub fn immediate() -> Self {
        RetryPolicy {
            base_delay: Duration::ZERO,
            ..Self::default()
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
    }
}

/// Caps concurrent requests and spaces out request starts.
#[derive(Debug)]
pub struct Politeness {
    max_in_flight: usize,
    min_interval: Duration,
    state: Mutex<LimiterState>,
    freed: Condvar,
}

#[derive(Debug, Default)]
struct LimiterState {
    in_flight: usize,
    next_start: Option<Instant>,
}

static GLOBAL: Lazy<Arc<Politeness>> =
    Lazy::new(|| Arc::new(Politeness::new(2, Duration::from_millis(500))));

impl Politeness {
    pub fn new(max_in_flight: usize, min_interval: Duration) -> Self {
        Politeness {
            max_in_flight: max_in_flight.max(1),
            min_interval,
            state: Mutex::new(LimiterState::default()),
            freed: Condvar::new(),
        }
    }

    /// The process-wide limiter for live archive traffic: 2 requests in
    /// flight, 500 ms between starts.
    pub fn global() -> Arc<Politeness> {
        GLOBAL.clone()
    }

    pub fn unlimited() -> Arc<Politeness> {
        Arc::new(Politeness::new(usize::MAX, Duration::ZERO))
    }

    /// Blocks until a request may start. The returned permit releases the
    /// slot on drop.
    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().unwrap();
        while state.in_flight >= self.max_in_flight {
            state = self.freed.wait(state).unwrap();
        }
        let now = Instant::now();
        let start = state.next_start.map_or(now, |t| t.max(now));
        state.next_start = Some(start + self.min_interval);
        state.in_flight += 1;
        drop(state);

        let wait = start.saturating_duration_since(Instant::now());
        if !wait.is_zero() {
            thread::sleep(wait);
        }
        Permit { limiter: self }
    }
}

pub struct Permit<'a> {
    limiter: &'a Politeness,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.limiter.state.lock().unwrap();
        state.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

/// A GET client shared by the CDX lookup and replay-page fetches.
#[derive(Clone)]
pub struct Fetcher {
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    limiter: Arc<Politeness>,
}

impl Fetcher {
    pub fn new(
        transport: Arc<dyn Transport>,
        retry: RetryPolicy,
        limiter: Arc<Politeness>,
    ) -> Self {
        Fetcher {
            transport,
            retry,
            limiter,
        }
    }

    /// Live settings: default backoff and the global politeness limiter.
    pub fn live(transport: Arc<dyn Transport>) -> Self {
        Self::new(transport, RetryPolicy::default(), Politeness::global())
    }

    /// No waiting at all; for recorded fixtures.
    pub fn offline(transport: Arc<dyn Transport>) -> Self {
        Self::new(transport, RetryPolicy::immediate(), Politeness::unlimited())
    }

    /// GETs `url`, returning the body of a 200 response. 5xx responses,
    /// 429s and transport failures are retried with backoff.
    pub fn fetch(&self, url: &str) -> Result<String, FetchError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.limiter.acquire();
                self.transport.get(url)
            };
            let failure = match outcome {
                Ok(resp) if resp.status == 200 => return Ok(resp.body),
                Ok(resp) if resp.status == 429 => Retryable::RateLimited,
                Ok(resp) if resp.status >= 500 => Retryable::Status(resp.status),
                Ok(resp) => {
                    return Err(FetchError::Http {
                        url: url.to_owned(),
                        status: resp.status,
                    })
                }
                Err(TransportError::NotRecorded(u)) => {
                    return Err(FetchError::NotRecorded { url: u })
                }
                Err(e) => Retryable::Transport(e),
            };

            let retry = attempt - 1;
            if retry >= self.retry.max_retries {
                return Err(match failure {
                    Retryable::RateLimited => FetchError::RateLimited {
                        url: url.to_owned(),
                        attempts: attempt,
                    },
                    other => FetchError::Network {
                        url: url.to_owned(),
                        attempts: attempt,
                        reason: other.to_string(),
                    },
                });
            }
            let delay = self.retry.delay(retry);
            log::warn!("{url}: {failure}; retry {} in {delay:?}", retry + 1);
            if !delay.is_zero() {
                thread::sleep(delay);
            }
        }
    }
}

enum Retryable {
    RateLimited,
    Status(u16),
    Transport(TransportError),
}

impl std::fmt::Display for Retryable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Retryable::RateLimited => f.write_str("HTTP 429"),
            Retryable::Status(s) => write!(f, "HTTP {s}"),
            Retryable::Transport(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::transport::HttpResponse;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Replays a fixed script of outcomes, one per call.
    struct Scripted {
        script: Vec<Result<HttpResponse, TransportError>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(script: Vec<Result<HttpResponse, TransportError>>) -> Arc<Self> {
            Arc::new(Scripted {
                script,
                calls: AtomicUsize::new(0),
            })
        }
    }

    impl Transport for Scripted {
        fn get(&self, _url: &str) -> Result<HttpResponse, TransportError> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            self.script[i.min(self.script.len() - 1)].clone()
        }
    }

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        let delays: Vec<_> = (0..3).map(|r| p.delay(r).as_secs()).collect();
        assert_eq!(delays, [1, 2, 4]);
    }

    #[test]
    fn recovers_after_three_503s() {
        let t = Scripted::new(vec![
            Ok(HttpResponse::status(503)),
            Ok(HttpResponse::status(503)),
            Ok(HttpResponse::status(503)),
            Ok(HttpResponse::ok("body")),
        ]);
        let f = Fetcher::offline(t.clone());
        assert_eq!(f.fetch("http://x").unwrap(), "body");
        assert_eq!(t.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let t = Scripted::new(vec![Ok(HttpResponse::status(502))]);
        let err = Fetcher::offline(t.clone()).fetch("http://x").unwrap_err();
        assert!(
            matches!(err, FetchError::Network { attempts: 4, .. }),
            "{err:?}"
        );
        assert_eq!(t.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn timeouts_are_retried() {
        let t = Scripted::new(vec![
            Err(TransportError::Timeout("slow".into())),
            Ok(HttpResponse::ok("late")),
        ]);
        assert_eq!(Fetcher::offline(t).fetch("http://x").unwrap(), "late");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = Scripted::new(vec![Ok(HttpResponse::status(404))]);
        let err = Fetcher::offline(t.clone()).fetch("http://x").unwrap_err();
        assert_eq!(
            err,
            FetchError::Http {
                url: "http://x".into(),
                status: 404
            }
        );
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn persistent_429_is_rate_limited() {
        let t = Scripted::new(vec![Ok(HttpResponse::status(429))]);
        let err = Fetcher::offline(t).fetch("http://x").unwrap_err();
        assert!(matches!(err, FetchError::RateLimited { attempts: 4, .. }));
    }

    #[test]
    fn limiter_spaces_request_starts() {
        let limiter = Politeness::new(2, Duration::from_millis(20));
        let begin = Instant::now();
        for _ in 0..4 {
            drop(limiter.acquire());
        }
        // starts at 0, 20, 40, 60 ms
        assert!(begin.elapsed() >= Duration::from_millis(60));
    }

    #[test]
    fn limiter_caps_concurrency() {
        let limiter = Arc::new(Politeness::new(2, Duration::ZERO));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        thread::scope(|s| {
            for _ in 0..8 {
                let (limiter, live, peak) = (limiter.clone(), live.clone(), peak.clone());
                s.spawn(move || {
                    let _p = limiter.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                    live.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
