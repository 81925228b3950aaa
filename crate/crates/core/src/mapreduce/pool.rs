//! Fixed-size worker pool over a shared task queue. Workers are
//! shared-nothing: they see only the queue and the result sink, and all of
//! them are joined before results are returned.

/// Results of a pool run: per-task outputs restored to task-index order plus
/// a per-worker count of tasks processed.
pub struct PoolRun<R> {
    pub results: Vec<R>,
    pub per_worker: Vec<u64>,
}

/// Run `f` over every task on `workers` threads pulling from a shared
/// queue. Output order is by task index, independent of scheduling.
pub fn run_indexed<T, R, F>(workers: usize, tasks: Vec<T>, f: F) -> PoolRun<R>
where
    T: Send,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    assert!(workers >= 1, "pool requires at least one worker");
    let total = tasks.len();
    let (task_tx, task_rx) = crossbeam_channel::unbounded::<(usize, T)>();
    let (result_tx, result_rx) = crossbeam_channel::unbounded::<(usize, usize, R)>();
    for task in tasks.into_iter().enumerate() {
        task_tx.send(task).expect("queue open");
    }
    drop(task_tx);

    std::thread::scope(|scope| {
        for worker_id in 0..workers {
            let task_rx = task_rx.clone();
            let result_tx = result_tx.clone();
            let f = &f;
            scope.spawn(move || {
                while let Ok((index, task)) = task_rx.recv() {
                    let result = f(&task);
                    result_tx
                        .send((index, worker_id, result))
                        .expect("sink open");
                }
            });
        }
        drop(task_rx);
        drop(result_tx);
    });

    // the scope joined every worker, so the sink is complete
    let mut slots: Vec<Option<R>> = (0..total).map(|_| None).collect();
    let mut per_worker = vec![0u64; workers];
    while let Ok((index, worker_id, result)) = result_rx.try_recv() {
        per_worker[worker_id] += 1;
        slots[index] = Some(result);
    }
    let results = slots
        .into_iter()
        .map(|slot| slot.expect("every task produced a result"))
        .collect();
    PoolRun {
        results,
        per_worker,
    }
}
