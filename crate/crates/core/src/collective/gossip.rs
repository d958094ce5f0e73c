use super::{accumulate, Element, Endpoint};
use crate::error::{Error, Result};

/// Partner of `rank` in the deterministic ring matching for `round`.
///
/// Even rounds pair `(0,1), (2,3), ...`; odd rounds pair
/// `(1,2), (3,4), ..., (N-1,0)`. With odd `N` one rank sits out each round.
pub fn gossip_partner(rank: usize, n: usize, round: usize) -> Option<usize> {
    if n < 2 {
        return None;
    }
    if round % 2 == 0 {
        let p = rank ^ 1;
        (p < n).then_some(p)
    } else if rank % 2 == 1 {
        if rank + 1 < n {
            Some(rank + 1)
        } else {
            // rank == n - 1 with even n closes the ring
            Some(0)
        }
    } else if rank > 0 {
        Some(rank - 1)
    } else if (n - 1) % 2 == 1 {
        Some(n - 1)
    } else {
        None
    }
}

/// Reference gossip round over all worker vectors at once.
pub fn gossip_round<T: Element>(vectors: &mut [Vec<T>], round: usize) {
    let n = vectors.len();
    for lo in 0..n {
        let Some(hi) = gossip_partner(lo, n, round) else {
            continue;
        };
        // each pair is handled once, by its lower rank
        if hi < lo {
            continue;
        }
        let (left, right) = vectors.split_at_mut(hi);
        for (x, y) in left[lo].iter_mut().zip(right[0].iter_mut()) {
            let (m_lo, m_hi) = T::pair_mean(*x, *y);
            *x = m_lo;
            *y = m_hi;
        }
    }
}

/// Distributed gossip round: exchange with this round's partner and keep
/// this rank's half of the pair mean.
pub fn gossip_exchange<T: Element>(ep: &Endpoint<T>, data: &mut [T], round: usize) -> Result<()> {
    let Some(partner) = gossip_partner(ep.rank(), ep.world(), round) else {
        return Ok(());
    };
    ep.send(partner, data.to_vec())?;
    let theirs = ep.recv(partner)?;
    if theirs.len() != data.len() {
        return Err(Error::Protocol(format!(
            "gossip partner {partner} sent {} elements, expected {}",
            theirs.len(),
            data.len()
        )));
    }
    let lower = ep.rank() < partner;
    for (x, y) in data.iter_mut().zip(theirs) {
        *x = if lower {
            T::pair_mean(*x, y).0
        } else {
            T::pair_mean(y, *x).1
        };
    }
    Ok(())
}

/// Installs the exact global mean (ascending-rank accumulation) on every
/// vector.
pub fn gossip_finalize<T: Element>(vectors: &mut [Vec<T>]) {
    let n = vectors.len();
    if n <= 1 {
        return;
    }
    let mut acc = vec![T::zero(); vectors[0].len()];
    for v in vectors.iter() {
        accumulate(&mut acc, v);
    }
    let mean: Vec<T> = acc.into_iter().map(|x| x.div_count(n)).collect();
    for v in vectors.iter_mut() {
        v.copy_from_slice(&mean);
    }
}

/// Distributed finalize: gather at rank 0, average, broadcast.
pub fn gossip_finalize_distributed<T: Element>(ep: &Endpoint<T>, data: &mut [T]) -> Result<()> {
    let n = ep.world();
    if n == 1 {
        return Ok(());
    }
    if ep.rank() == 0 {
        let mut all = vec![data.to_vec()];
        for r in 1..n {
            let v = ep.recv(r)?;
            if v.len() != data.len() {
                return Err(Error::Protocol(format!(
                    "rank {r} sent {} elements to finalize, expected {}",
                    v.len(),
                    data.len()
                )));
            }
            all.push(v);
        }
        gossip_finalize(&mut all);
        data.copy_from_slice(&all[0]);
        for r in 1..n {
            ep.send(r, data.to_vec())?;
        }
    } else {
        ep.send(0, data.to_vec())?;
        let mean = ep.recv(0)?;
        data.copy_from_slice(&mean);
    }
    Ok(())
}
