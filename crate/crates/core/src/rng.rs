//! Counter-style random streams.
//!
//! Every Monte Carlo routine splits its work into fixed-size chunks and gives
//! each chunk its own ChaCha stream. Results therefore depend only on the seed,
//! never on how many worker threads happen to run the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// Samples per work chunk.
pub const CHUNK: usize = 4096;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a; stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
    path: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, index: u64) -> Self {
        SeedStream {
            seed: self.seed,
            path: splitmix(self.path ^ splitmix(index.wrapping_add(1))),
        }
    }

    pub fn named(&self, label: &str) -> Self {
        self.child(hash_label(label))
    }

    pub fn rng(&self) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Runs `work(rng, start, count)` over `total` samples split into chunks of
/// `chunk` and returns the per-chunk results in chunk order.
pub fn chunked<T, F>(stream: &SeedStream, total: usize, chunk: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, usize, usize) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = total.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let count = chunk.min(total - start);
            let mut rng = stream.child(c as u64).rng();
            work(&mut rng, start, count)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = SeedStream::new(7);
        let a: Vec<u64> = (0..4).map(|_| 0).scan(s.rng(), |r, _| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(s.rng(), |r, _| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        assert_ne!(s.child(0).rng().next_u64(), s.child(1).rng().next_u64());
        assert_ne!(s.named("a").rng().next_u64(), s.named("b").rng().next_u64());
        assert_ne!(SeedStream::new(8).rng().next_u64(), s.rng().next_u64());
    }

    #[test]
    fn chunk_results_do_not_depend_on_thread_count() {
        let s = SeedStream::new(11);
        let run = || {
            chunked(&s, 10_000, 1000, |rng, _, n| (0..n).map(|_| normal(rng)).sum::<f64>())
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(one, three);
    }
}
