//! Biased randomized insertion order.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Aabb;
use crate::Point3;

const HILBERT_BITS: u32 = 10;

/// A permutation of point indices split into rounds. Round `r` covers
/// `order[rounds[r]..rounds[r + 1]]` (the last round runs to the end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionOrder {
    pub order: Vec<usize>,
    pub rounds: Vec<usize>,
}

impl InsertionOrder {
    pub fn round_sizes(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.rounds.len());
        for (r, &start) in self.rounds.iter().enumerate() {
            let end = self.rounds.get(r + 1).copied().unwrap_or(self.order.len());
            s.push(end - start);
        }
        s
    }
}

/// Each point survives into an earlier round with probability ½ per coin
/// flip, so round sizes grow by a factor of about two and the final round
/// holds about half the points. Inside a round points follow a 3D Hilbert
/// curve over the global bounding box.
pub fn brio_sort(points: &[Point3], seed: u64) -> InsertionOrder {
    let n = points.len();
    if n == 0 {
        return InsertionOrder {
            order: Vec::new(),
            rounds: Vec::new(),
        };
    }
    let max_level = (usize::BITS - n.leading_zeros()).saturating_sub(1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = vec![0usize; n];
    for l in level.iter_mut() {
        while *l < max_level && rng.random::<bool>() {
            *l += 1;
        }
    }
    let bb = Aabb::from_points(points);
    let keys: Vec<u64> = points.iter().map(|p| hilbert_key_of(*p, &bb)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Highest level first; Hilbert key then index inside a round.
    order.sort_by_key(|&i| (std::cmp::Reverse(level[i]), keys[i], i));
    let mut rounds = Vec::new();
    let mut prev = usize::MAX;
    for (pos, &i) in order.iter().enumerate() {
        if level[i] != prev {
            rounds.push(pos);
            prev = level[i];
        }
    }
    InsertionOrder { order, rounds }
}

fn hilbert_key_of(p: Point3, bb: &Aabb<f64>) -> u64 {
    let side = (1u32 << HILBERT_BITS) - 1;
    let mut c = [0u32; 3];
    for k in 0..3 {
        let ext = bb.max[k] - bb.min[k];
        let t = if ext > 0.0 { (p[k] - bb.min[k]) / ext } else { 0.0 };
        c[k] = (t.clamp(0.0, 1.0) * side as f64).round() as u32;
    }
    hilbert_key(c, HILBERT_BITS)
}

/// Position along the 3D Hilbert curve of the integer cell `x`, using
/// Skilling's transpose algorithm.
pub fn hilbert_key(mut x: [u32; 3], bits: u32) -> u64 {
    let m = 1u32 << (bits - 1);
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    for i in 1..3 {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    q = m;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }
    let mut key = 0u64;
    for b in (0..bits).rev() {
        for v in x {
            key = (key << 1) | ((v >> b) & 1) as u64;
        }
    }
    key
}
