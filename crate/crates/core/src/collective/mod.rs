//! Gradient and parameter aggregation among worker contexts.
//!
//! Workers talk only through a [`Transport`]: one FIFO link per ordered
//! pair of ranks, with message and byte counters. On top of it sit the
//! three aggregation strategies: ring all-reduce, a central parameter
//! server and pairwise gossip averaging.

mod gossip;
mod ps;
mod ring;
mod transport;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gossip::{gossip_exchange, gossip_finalize, gossip_finalize_distributed, gossip_partner, gossip_round};
pub use ps::{parameter_server_round, ps_serve_round, ps_worker_exchange};
pub use ring::{ring_all_reduce, ChunkLayout};
pub use transport::{spmd, Endpoint, Transport, TransportStats, DEFAULT_TIMEOUT};

/// Element type carried by the collectives.
///
/// Floats average exactly as `(a + b) / 2`. Integers split a pair total
/// into `floor(s/2)` and `s - floor(s/2)`, so pairwise averaging conserves
/// the global sum exactly.
pub trait Element: Copy + Send + Sync + PartialEq + fmt::Debug + 'static {
    const BYTES: usize;

    fn zero() -> Self;

    fn add(self, rhs: Self) -> Self;

    /// Averaged values for the lower- and higher-ranked member of a pair.
    fn pair_mean(lower: Self, higher: Self) -> (Self, Self);

    fn div_count(self, n: usize) -> Self;
}

macro_rules! float_element {
    ($t:ty) => {
        impl Element for $t {
            const BYTES: usize = std::mem::size_of::<$t>();

            fn zero() -> Self {
                0.0
            }

            fn add(self, rhs: Self) -> Self {
                self + rhs
            }

            fn pair_mean(lower: Self, higher: Self) -> (Self, Self) {
                let m = (lower + higher) / 2.0;
                (m, m)
            }

            fn div_count(self, n: usize) -> Self {
                self / n as $t
            }
        }
    };
}

macro_rules! int_element {
    ($t:ty) => {
        impl Element for $t {
            const BYTES: usize = std::mem::size_of::<$t>();

            fn zero() -> Self {
                0
            }

            fn add(self, rhs: Self) -> Self {
                self + rhs
            }

            fn pair_mean(lower: Self, higher: Self) -> (Self, Self) {
                let s = lower + higher;
                let lo = s.div_euclid(2);
                (lo, s - lo)
            }

            fn div_count(self, n: usize) -> Self {
                self.div_euclid(n as $t)
            }
        }
    };
}

float_element!(f32);
float_element!(f64);
int_element!(i32);
int_element!(i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum StrategyKind {
    #[serde(rename = "ps")]
    ParameterServer,
    #[default]
    #[serde(rename = "allreduce")]
    RingAllReduce,
    #[serde(rename = "gossip")]
    Gossip,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::ParameterServer => "ps",
            StrategyKind::RingAllReduce => "allreduce",
            StrategyKind::Gossip => "gossip",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "allreduce" => Ok(StrategyKind::RingAllReduce),
            "ps" => Ok(StrategyKind::ParameterServer),
            "gossip" => Ok(StrategyKind::Gossip),
            other => Err(Error::Config(format!(
                "strategy must be one of allreduce, ps, gossip; got {other:?}"
            ))),
        }
    }
}

/// Elementwise `acc += x`, ascending index.
pub fn accumulate<T: Element>(acc: &mut [T], x: &[T]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a = a.add(v);
    }
}
