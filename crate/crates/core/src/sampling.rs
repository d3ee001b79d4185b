//! Seeded low-discrepancy sample points: a Halton sequence with a random
//! Cranley–Patterson shift drawn from a ChaCha stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::Interval;
use crate::operators::Sample;

const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        // skip the first point, which sits on the lower corner before shifting
        Halton { shift, index: 1 }
    }

    /// Next point of the unit cube.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| (radical_inverse(i, PRIMES[d]) + s).fract())
            .collect()
    }
}

/// `n` points inside `bounds`, each interval shrunk by `margin` of its extent.
pub fn interior_points(bounds: &[Interval], n: usize, margin: f64, seed: u64) -> Vec<Vec<f64>> {
    let boxes: Vec<Interval> = bounds.iter().map(|b| b.shrink(margin)).collect();
    let mut h = Halton::new(bounds.len(), seed);
    (0..n)
        .map(|_| h.next_unit().iter().zip(&boxes).map(|(u, b)| b.lo + u * b.extent()).collect())
        .collect()
}

/// `n` space-time samples inside the shrunk spatial box and time interval.
pub fn interior_samples(bounds: &[Interval], time: Interval, n: usize, margin: f64, seed: u64) -> Vec<Sample> {
    let mut all = bounds.to_vec();
    all.push(time);
    interior_points(&all, n, margin, seed)
        .into_iter()
        .map(|mut p| {
            let t = p.pop().expect("time coordinate");
            Sample { x: p, t }
        })
        .collect()
}
