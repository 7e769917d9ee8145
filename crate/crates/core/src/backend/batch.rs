use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{BackendError, CompletionBackend, GenerationParams, RawCompletion};

/// Issues `requests` over at most `parallelism` workers.
///
/// Results come back in input order. Requests are handed out in index
/// order; after the first failure no new request starts, in-flight ones
/// finish, and the lowest failing index is reported. That is the same
/// error a sequential run would hit.
pub fn complete_batch<B: CompletionBackend + ?Sized>(
    backend: &B,
    requests: &[(String, GenerationParams)],
    parallelism: usize,
) -> Result<Vec<RawCompletion>, BackendError> {
    if parallelism == 0 {
        return Err(BackendError::InvalidParams(
            "parallelism must be at least 1".into(),
        ));
    }
    if requests.is_empty() {
        return Ok(Vec::new());
    }

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<RawCompletion, BackendError>>>> =
        Mutex::new(vec![None; requests.len()]);

    let workers = parallelism.min(requests.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= requests.len() {
                    break;
                }
                let (prompt, params) = &requests[idx];
                let result = backend.complete(prompt, params);
                if result.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                slots.lock().expect("batch slots poisoned")[idx] = Some(result);
            });
        }
    });

    let slots = slots.into_inner().expect("batch slots poisoned");
    let mut out = Vec::with_capacity(requests.len());
    for (index, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(c)) => out.push(c),
            Some(Err(e)) => {
                return Err(BackendError::Batch {
                    index,
                    source: Box::new(e),
                })
            }
            // Only reachable past the first failure, which returned above.
            None => unreachable!("request {index} neither ran nor follows a failure"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{record_fixture, ReplayBackend, StubBackend};

    fn requests(n: usize) -> Vec<(String, GenerationParams)> {
        (0..n)
            .map(|i| (format!("Source: line {i}\n"), GenerationParams::new("m")))
            .collect()
    }

    fn fixture(reqs: &[(String, GenerationParams)]) -> ReplayBackend {
        let stub = StubBackend::default();
        let dir = tempfile::tempdir().unwrap();
        let res: Vec<_> = reqs
            .iter()
            .map(|(p, q)| stub.complete(p, q).unwrap())
            .collect();
        let entries = record_fixture(reqs, &res, &dir.path().join("f.jsonl")).unwrap();
        ReplayBackend::new(entries)
    }

    #[test]
    fn parallel_matches_sequential() {
        let reqs = requests(10);
        let replay = fixture(&reqs);
        let seq = complete_batch(&replay, &reqs, 1).unwrap();
        let par = complete_batch(&replay, &reqs, 4).unwrap();
        assert_eq!(seq, par);
        let one_by_one: Vec<_> = reqs
            .iter()
            .map(|(p, q)| replay.complete(p, q).unwrap())
            .collect();
        assert_eq!(seq, one_by_one);
    }

    #[test]
    fn empty_batch() {
        let replay = ReplayBackend::new(vec![]);
        assert!(complete_batch(&replay, &[], 3).unwrap().is_empty());
        assert!(complete_batch(&replay, &[], 0).is_err());
    }

    #[test]
    fn miss_reports_index() {
        let mut reqs = requests(10);
        let replay = fixture(&reqs);
        reqs[5].0 = "Source: not recorded\n".into();
        // sequential oracle
        let first_miss = reqs
            .iter()
            .position(|(p, q)| replay.complete(p, q).is_err())
            .unwrap();
        assert_eq!(first_miss, 5);
        for par in [1, 4, 16] {
            match complete_batch(&replay, &reqs, par) {
                Err(BackendError::Batch { index, source }) => {
                    assert_eq!(index, first_miss);
                    assert!(matches!(*source, BackendError::ReplayMiss { .. }));
                }
                other => panic!("expected batch error, got {other:?}"),
            }
        }
    }
}
