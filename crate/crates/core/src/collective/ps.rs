use super::{accumulate, Element, Endpoint};
use crate::error::{Error, Result};

/// Reference (single-context) parameter-server round: average the worker
/// gradients in ascending rank order, apply `step` to the server copy and
/// return the parameters every worker receives.
pub fn parameter_server_round<T, F>(
    server_params: &mut [T],
    worker_grads: &[Vec<T>],
    mut step: F,
) -> Result<Vec<T>>
where
    T: Element,
    F: FnMut(&mut [T], &[T]) -> Result<()>,
{
    let mean = mean_ascending(worker_grads, server_params.len())?;
    step(server_params, &mean)?;
    Ok(server_params.to_vec())
}

fn mean_ascending<T: Element>(vectors: &[Vec<T>], len: usize) -> Result<Vec<T>> {
    if vectors.is_empty() {
        return Err(Error::Protocol("no worker reports".into()));
    }
    let mut acc = vec![T::zero(); len];
    for (rank, v) in vectors.iter().enumerate() {
        if v.len() != len {
            return Err(Error::Protocol(format!(
                "worker {rank} reported {} elements, expected {len}",
                v.len()
            )));
        }
        accumulate(&mut acc, v);
    }
    let n = vectors.len();
    Ok(acc.into_iter().map(|x| x.div_count(n)).collect())
}

/// Server side of one synchronous round. The server is the endpoint's last
/// rank; workers are ranks `0..world-1`. Receives one report per worker
/// (ascending rank), averages, applies `step` to `params` and broadcasts.
pub fn ps_serve_round<T, F>(ep: &Endpoint<T>, params: &mut [T], step: F) -> Result<()>
where
    T: Element,
    F: FnOnce(&mut [T], &[T]) -> Result<()>,
{
    let workers = ep.world() - 1;
    let reports = (0..workers)
        .map(|w| ep.recv(w))
        .collect::<Result<Vec<_>>>()?;
    let mean = mean_ascending(&reports, params.len())?;
    step(params, &mean)?;
    for w in 0..workers {
        ep.send(w, params.to_vec())?;
    }
    Ok(())
}

/// Worker side: report `update` to the server and install the broadcast
/// parameters into `params`.
pub fn ps_worker_exchange<T: Element>(ep: &Endpoint<T>, update: Vec<T>, params: &mut [T]) -> Result<()> {
    let server = ep.world() - 1;
    ep.send(server, update)?;
    let fresh = ep.recv(server)?;
    if fresh.len() != params.len() {
        return Err(Error::Protocol(format!(
            "server broadcast {} elements, expected {}",
            fresh.len(),
            params.len()
        )));
    }
    params.copy_from_slice(&fresh);
    Ok(())
}
