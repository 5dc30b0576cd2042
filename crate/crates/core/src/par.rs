//! Block-indexed map with per-worker scratch state. Results always come
//! back in block order, so any reduction over them is thread-count
//! independent.

/// Maps `f(scratch, block)` over `0..blocks` on up to `threads` workers
/// (`0` = all available). Each worker builds its own scratch with `init`.
#[cfg(feature = "parallel")]
pub fn map_blocks<S, T, I, F>(blocks: usize, threads: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    if threads == 1 || blocks <= 1 {
        return sequential(blocks, init, f);
    }
    let run = || (0..blocks).into_par_iter().map_init(&init, |s, b| f(s, b)).collect();
    if threads == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => sequential(blocks, init, f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_blocks<S, T, I, F>(blocks: usize, _threads: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    sequential(blocks, init, f)
}

/// Single-threaded reference path.
pub fn sequential<S, T, I, F>(blocks: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, usize) -> T,
{
    let mut s = init();
    (0..blocks).map(|b| f(&mut s, b)).collect()
}
