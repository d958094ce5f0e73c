use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use super::Element;
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Default)]
struct Counters {
    messages: AtomicU64,
    bytes: AtomicU64,
}

/// Shared view of the transport counters.
#[derive(Debug, Clone, Default)]
pub struct TransportStats(Arc<Counters>);

impl TransportStats {
    pub fn messages(&self) -> u64 {
        self.0.messages.load(Ordering::SeqCst)
    }

    pub fn bytes(&self) -> u64 {
        self.0.bytes.load(Ordering::SeqCst)
    }
}

/// In-process interconnect among `n` ranks: one FIFO channel per ordered
/// pair `(from, to)`.
pub struct Transport;

impl Transport {
    pub fn new<T: Element>(n: usize) -> (Vec<Endpoint<T>>, TransportStats) {
        Transport::with_timeout(n, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout<T: Element>(n: usize, timeout: Duration) -> (Vec<Endpoint<T>>, TransportStats) {
        assert!(n >= 1, "transport needs at least one rank");
        let stats = TransportStats::default();
        let mut senders: Vec<Vec<Option<Sender<Vec<T>>>>> =
            (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        let mut receivers: Vec<Vec<Option<Receiver<Vec<T>>>>> =
            (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    let (tx, rx) = channel();
                    senders[from][to] = Some(tx);
                    receivers[to][from] = Some(rx);
                }
            }
        }
        let endpoints = senders
            .into_iter()
            .zip(receivers)
            .enumerate()
            .map(|(rank, (tx, rx))| Endpoint {
                rank,
                world: n,
                tx,
                rx,
                stats: stats.clone(),
                timeout,
            })
            .collect();
        (endpoints, stats)
    }
}

/// One rank's view of the transport.
pub struct Endpoint<T> {
    rank: usize,
    world: usize,
    tx: Vec<Option<Sender<Vec<T>>>>,
    rx: Vec<Option<Receiver<Vec<T>>>>,
    stats: TransportStats,
    timeout: Duration,
}

impl<T: Element> Endpoint<T> {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn world(&self) -> usize {
        self.world
    }

    pub fn stats(&self) -> &TransportStats {
        &self.stats
    }

    pub fn send(&self, to: usize, payload: Vec<T>) -> Result<()> {
        let link = self
            .tx
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Protocol(format!("rank {} has no link to {to}", self.rank)))?;
        let bytes = (payload.len() * T::BYTES) as u64;
        link.send(payload)
            .map_err(|_| Error::Protocol(format!("rank {to} hung up (send from {})", self.rank)))?;
        self.stats.0.messages.fetch_add(1, Ordering::SeqCst);
        self.stats.0.bytes.fetch_add(bytes, Ordering::SeqCst);
        Ok(())
    }

    pub fn recv(&self, from: usize) -> Result<Vec<T>> {
        let link = self
            .rx
            .get(from)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Protocol(format!("rank {} has no link from {from}", self.rank)))?;
        link.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => {
                Error::Timeout(format!("rank {} waiting on rank {from}", self.rank))
            }
            RecvTimeoutError::Disconnected => {
                Error::Protocol(format!("rank {from} hung up (recv at {})", self.rank))
            }
        })
    }
}

/// Runs `f` on `n` freshly connected ranks, one thread each, and returns the
/// per-rank results in rank order together with the transport counters.
pub fn spmd<T, R, F>(n: usize, f: F) -> (Vec<Result<R>>, TransportStats)
where
    T: Element,
    R: Send,
    F: Fn(Endpoint<T>) -> Result<R> + Sync,
{
    let (endpoints, stats) = Transport::new::<T>(n);
    let f = &f;
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .map(|ep| s.spawn(move || f(ep)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    (results, stats)
}
