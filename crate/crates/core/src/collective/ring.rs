use super::{Element, Endpoint};
use crate::error::{Error, Result};

/// Partition of `len` elements into `parts` contiguous chunks; the first
/// `len % parts` chunks hold one extra element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkLayout {
    offsets: Vec<usize>,
}

impl ChunkLayout {
    pub fn new(len: usize, parts: usize) -> Self {
        let base = len / parts;
        let extra = len % parts;
        let mut offsets = Vec::with_capacity(parts + 1);
        let mut at = 0;
        offsets.push(0);
        for i in 0..parts {
            at += base + usize::from(i < extra);
            offsets.push(at);
        }
        ChunkLayout { offsets }
    }

    pub fn range(&self, chunk: usize) -> std::ops::Range<usize> {
        self.offsets[chunk]..self.offsets[chunk + 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// In-place ring all-reduce (sum). Must be called by every rank of the
/// endpoint's world with equally long vectors.
///
/// Reduce-scatter: at step `s` rank `r` sends chunk `(r - s) mod N` to
/// `r + 1` and adds the incoming chunk `(r - s - 1) mod N` from `r - 1`.
/// All-gather then circulates the finished chunks for another `N - 1`
/// steps. Each rank sends `2(N - 1)` messages.
pub fn ring_all_reduce<T: Element>(ep: &Endpoint<T>, data: &mut [T]) -> Result<()> {
    let n = ep.world();
    if n == 1 {
        return Ok(());
    }
    let r = ep.rank();
    let next = (r + 1) % n;
    let prev = (r + n - 1) % n;
    let layout = ChunkLayout::new(data.len(), n);

    for s in 0..n - 1 {
        let send = (r + n - s) % n;
        let recv = (r + 2 * n - s - 1) % n;
        ep.send(next, data[layout.range(send)].to_vec())?;
        let incoming = ep.recv(prev)?;
        let dst = &mut data[layout.range(recv)];
        check_len(incoming.len(), dst.len(), prev, r)?;
        for (d, v) in dst.iter_mut().zip(incoming) {
            *d = v.add(*d);
        }
    }
    // rank r now owns the full sum of chunk (r + 1) mod N
    for s in 0..n - 1 {
        let send = (r + 1 + n - s) % n;
        let recv = (r + n - s) % n;
        ep.send(next, data[layout.range(send)].to_vec())?;
        let incoming = ep.recv(prev)?;
        let dst = &mut data[layout.range(recv)];
        check_len(incoming.len(), dst.len(), prev, r)?;
        dst.copy_from_slice(&incoming);
    }
    Ok(())
}

fn check_len(got: usize, want: usize, from: usize, at: usize) -> Result<()> {
    if got != want {
        return Err(Error::Protocol(format!(
            "rank {at} expected a {want}-element chunk from rank {from}, got {got}; \
             vector lengths differ across workers"
        )));
    }
    Ok(())
}
