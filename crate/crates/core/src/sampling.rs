//! Sobol low-discrepancy points and the box/ball samplers used to build
//! training sets.
//!
//! The generator follows the Joe-Kuo construction (`new-joe-kuo-6.21201`
//! direction numbers) in Gray-code order with 32-bit resolution. The leading
//! all-zeros point is always skipped, so the first point returned is the
//! all-0.5 point.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// `(s, a, m_1..m_s)` per dimension; dimension 1 is the van der Corput sequence.
const JOE_KUO: &[(u32, u32, &[u32])] = &[
    (0, 0, &[]),
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

const BITS: usize = 32;

/// Highest supported dimension.
pub const MAX_SOBOL_DIMENSION: usize = JOE_KUO.len();

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let (s, a, m) = JOE_KUO[dim];
    let mut v = [0u32; BITS];
    if s == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for i in s..BITS {
        let mut x = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[i - k];
            }
        }
        v[i] = x;
    }
    v
}

#[derive(Debug, Clone)]
pub struct SobolGenerator {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    /// Index of the last emitted point in the unskipped sequence.
    counter: u64,
}

impl SobolGenerator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIMENSION {
            return Err(Error::SobolDimension {
                requested: dim,
                max: MAX_SOBOL_DIMENSION,
            });
        }
        Ok(Self {
            directions: (0..dim).map(direction_numbers).collect(),
            state: vec![0; dim],
            counter: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    fn advance(&mut self) {
        self.counter += 1;
        let c = self.counter.trailing_zeros() as usize;
        assert!(c < BITS, "sobol sequence exhausted");
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x ^= v[c];
        }
    }

    pub fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.advance();
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.advance();
        self.state
            .iter()
            .map(|&x| x as f64 / (1u64 << BITS) as f64)
            .collect()
    }
}

/// `n` Sobol points in `[0,1)^d` after skipping the zero point and `skip` more.
pub fn sobol_points(d: usize, n: usize, skip: usize) -> Result<Vec<Vec<f64>>> {
    let mut gen = SobolGenerator::new(d)?;
    gen.skip(skip);
    Ok((0..n).map(|_| gen.next_point()).collect())
}

/// Box `K = center + [-a, a]^n` and ball `B = {||g||_2 <= delta}` sampling
/// parameters with draw counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub box_half_width: f64,
    pub ball_radius: f64,
    pub box_draws: usize,
    pub ball_draws: usize,
}

impl SampleSpec {
    pub fn new(box_half_width: f64, ball_radius: f64, box_draws: usize, ball_draws: usize) -> Result<Self> {
        let spec = Self {
            box_half_width,
            ball_radius,
            box_draws,
            ball_draws,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_half_width > 0.0 && self.ball_radius > 0.0) {
            return Err(Error::InvalidConfig(
                "box half-width and ball radius must be positive".into(),
            ));
        }
        if self.box_draws == 0 || self.ball_draws == 0 {
            return Err(Error::InvalidConfig("draw counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// `m` Sobol points mapped affinely onto `center + [-a, a]^n`.
pub fn sample_box(center: &[f64], a: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sobol_points(center.len(), m, 0)?
        .into_iter()
        .map(|s| {
            s.iter()
                .zip(center)
                .map(|(si, ci)| ci + a * (2.0 * si - 1.0))
                .collect()
        })
        .collect())
}

/// `m` Sobol-driven points in the `dim`-dimensional ball of radius `delta`.
///
/// The first `dim` coordinates of a `(dim+1)`-dimensional Sobol point give a
/// direction `2s - 1` (normalized; the zero direction maps to `e_1`), the last
/// coordinate `r` gives the radius `delta * r^(1/dim)`.
pub fn sample_ball(dim: usize, delta: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sobol_points(dim + 1, m, 0)?
        .into_iter()
        .map(|s| {
            let mut dir: Vec<f64> = s[..dim].iter().map(|si| 2.0 * si - 1.0).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                dir.iter_mut().for_each(|x| *x = 0.0);
                dir[0] = 1.0;
            } else {
                dir.iter_mut().for_each(|x| *x /= norm);
            }
            let radius = delta * s[dim].powf(1.0 / dim as f64);
            dir.into_iter().map(|x| x * radius).collect()
        })
        .collect())
}

/// Uniform pseudo-random point of `center + [-a, a]^n`.
pub fn random_box<R: Rng + ?Sized>(rng: &mut R, center: &[f64], a: f64) -> Vec<f64> {
    center.iter().map(|c| c + a * rng.random_range(-1.0..1.0)).collect()
}

/// Uniform pseudo-random point of the `dim`-ball of radius `delta`.
pub fn random_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, delta: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let radius = delta * u.powf(1.0 / dim as f64);
    dir.into_iter().map(|x| x / norm * radius).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Non-recursive construction of the Gray-code point `k`: XOR of the
    /// direction numbers selected by the bits of `k ^ (k >> 1)`.
    fn gray_point(dim: usize, k: u64) -> Vec<f64> {
        let g = k ^ (k >> 1);
        (0..dim)
            .map(|d| {
                let v = direction_numbers(d);
                let mut x = 0u32;
                for (bit, vb) in v.iter().enumerate() {
                    if (g >> bit) & 1 == 1 {
                        x ^= vb;
                    }
                }
                x as f64 / 4294967296.0
            })
            .collect()
    }

    #[test]
    fn first_points_one_dimension() {
        let p = sobol_points(1, 3, 0).unwrap();
        assert_eq!(p, vec![vec![0.5], vec![0.75], vec![0.25]]);
    }

    #[test]
    fn first_points_two_dimensions() {
        let p = sobol_points(2, 4, 0).unwrap();
        assert_eq!(p[0], vec![0.5, 0.5]);
        assert_eq!(p[1], vec![0.75, 0.25]);
        assert_eq!(p[2], vec![0.25, 0.75]);
        assert_eq!(p[3], vec![0.375, 0.375]);
    }

    #[test]
    fn recursive_matches_direct_construction() {
        let d = MAX_SOBOL_DIMENSION;
        let pts = sobol_points(d, 300, 0).unwrap();
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(p, &gray_point(d, k as u64 + 1));
        }
    }

    #[test]
    fn skip_offsets_sequence() {
        let all = sobol_points(3, 10, 0).unwrap();
        let tail = sobol_points(3, 5, 5).unwrap();
        assert_eq!(&all[5..], &tail[..]);
    }

    #[test]
    fn dyadic_equidistribution() {
        // the first 2^k points including zero fill each dyadic interval once;
        // the 2^k - 1 nonzero ones miss exactly the interval containing 0
        let k = 6;
        let n = (1usize << k) - 1;
        let pts = sobol_points(MAX_SOBOL_DIMENSION, n, 0).unwrap();
        for d in 0..MAX_SOBOL_DIMENSION {
            let mut hits = vec![0; 1 << k];
            for p in &pts {
                hits[(p[d] * (1 << k) as f64) as usize] += 1;
            }
            assert_eq!(hits[0], 0, "dim {d}");
            assert!(hits[1..].iter().all(|&h| h == 1), "dim {d}");
        }
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(SobolGenerator::new(0).is_err());
        assert!(SobolGenerator::new(MAX_SOBOL_DIMENSION + 1).is_err());
        assert!(SobolGenerator::new(9).is_ok());
    }

    #[test]
    fn box_samples() {
        let first = sample_box(&[0.0; 4], 1.0, 1).unwrap();
        assert_eq!(first[0], vec![0.0; 4]);
        let c = [0.3, -0.1, 0.2, 0.9];
        for p in sample_box(&c, 1e-300, 20).unwrap() {
            for (x, ci) in p.iter().zip(&c) {
                assert_eq!(x, ci);
            }
        }
        for p in sample_box(&c, 0.05, 1000).unwrap() {
            for (x, ci) in p.iter().zip(&c) {
                assert!(*x >= ci - 0.05 && *x <= ci + 0.05);
            }
        }
    }

    #[test]
    fn ball_samples_respect_radius() {
        for &delta in &[1e-30, 0.005, 0.1, 1.0] {
            for g in sample_ball(4, delta, 500).unwrap() {
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(n <= delta * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ball_radius_law() {
        // uniform-in-ball radius has mean delta * n / (n + 1)
        let delta = 0.3;
        let n = 4;
        let m = 4096;
        let mean: f64 = sample_ball(n, delta, m)
            .unwrap()
            .iter()
            .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum::<f64>()
            / m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mc: f64 = (0..m)
            .map(|_| {
                // rejection from the cube, independent of both samplers
                loop {
                    let p: Vec<f64> = (0..n).map(|_| rng.random_range(-delta..delta)).collect();
                    let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if r <= delta {
                        break r;
                    }
                }
            })
            .sum::<f64>()
            / m as f64;
        let exact = delta * n as f64 / (n as f64 + 1.0);
        assert!((mean - exact).abs() / exact < 0.02);
        assert!((mc - exact).abs() / exact < 0.02);
    }

    #[test]
    fn random_samplers_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = random_ball(&mut rng, 9, 0.01);
            assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.01 * (1.0 + 1e-12));
            let u = random_box(&mut rng, &[1.0, 2.0], 0.5);
            assert!(u[0] >= 0.5 && u[0] <= 1.5 && u[1] >= 1.5 && u[1] <= 2.5);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SampleSpec::new(0.05, 0.005, 10, 50).is_ok());
        assert!(SampleSpec::new(0.0, 0.005, 10, 50).is_err());
        assert!(SampleSpec::new(0.05, 0.005, 0, 50).is_err());
    }
}
