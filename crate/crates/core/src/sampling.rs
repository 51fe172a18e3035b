//! Acceptance-rejection sampling from the product of enclosing disks.
//!
//! Proposals are drawn in fixed-size batches; batch `i` of stream `s` always
//! uses the ChaCha stream `(s, i)` of the run seed, so results do not depend
//! on how batches are scheduled across threads.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::Point;

pub const BATCH_PROPOSALS: u64 = 1 << 16;

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Points = 0,
    TorusParameters = 1,
    Multipliers = 2,
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) | index);
    rng
}

pub fn uniform_in_disk<R: Rng>(rng: &mut R, center: Complex64, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    center + Complex64::from_polar(r, TAU * rng.random::<f64>())
}

pub fn uniform_on_circle<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, TAU * rng.random::<f64>())
}

pub struct Sampler<'a> {
    spec: &'a DomainSpec,
    disks: Vec<(Complex64, f64)>,
    box_volume: f64,
    seed: u64,
}

/// Per-batch outcome of [`Sampler::fold_batches`].
pub struct BatchFold<A> {
    pub acc: A,
    pub proposals: u64,
    pub accepted: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a DomainSpec, seed: u64, truncation: Option<f64>) -> Result<Self> {
        let disks = spec.enclosure(truncation)?;
        let box_volume = spec.enclosure_volume(truncation)?;
        Ok(Sampler {
            spec,
            disks,
            box_volume,
            seed,
        })
    }

    pub fn box_volume(&self) -> f64 {
        self.box_volume
    }

    fn batch_count(total: u64) -> u64 {
        total.div_ceil(BATCH_PROPOSALS)
    }

    fn batch_size(total: u64, index: u64) -> u64 {
        (total - index * BATCH_PROPOSALS).min(BATCH_PROPOSALS)
    }

    /// Runs batch `index` with `proposals` proposals, calling `visit` on
    /// every accepted point.
    pub fn run_batch(&self, index: u64, proposals: u64, mut visit: impl FnMut(&[Complex64])) -> u64 {
        let mut rng = stream_rng(self.seed, Stream::Points, index);
        let mut z = vec![Complex64::new(0.0, 0.0); self.disks.len()];
        let mut accepted = 0;
        for _ in 0..proposals {
            for (zj, &(center, radius)) in z.iter_mut().zip(&self.disks) {
                *zj = uniform_in_disk(&mut rng, center, radius);
            }
            if self.spec.contains(&z) {
                accepted += 1;
                visit(&z);
            }
        }
        accepted
    }

    /// Folds accepted points of `total` proposals into one accumulator per
    /// batch, in parallel. Results come back in batch order.
    pub fn fold_batches<A, I, V>(&self, total: u64, init: I, visit: V) -> Vec<BatchFold<A>>
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, &[Complex64]) + Sync,
    {
        (0..Self::batch_count(total))
            .into_par_iter()
            .map(|index| {
                let proposals = Self::batch_size(total, index);
                let mut acc = init();
                let accepted = self.run_batch(index, proposals, |z| visit(&mut acc, z));
                BatchFold {
                    acc,
                    proposals,
                    accepted,
                }
            })
            .collect()
    }
}

pub(crate) fn check_rate(accepted: u64, proposals: u64) -> Result<()> {
    let degenerate = accepted == 0 || (proposals >= 100_000 && (accepted as f64) < 1e-6 * proposals as f64);
    if degenerate {
        Err(Error::DegenerateSampling { accepted, proposals })
    } else {
        Ok(())
    }
}

/// Accepted points plus the hit-or-miss volume estimate.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<Point>,
    pub proposals: u64,
    pub accepted: u64,
    pub box_volume: f64,
    pub volume: f64,
    pub volume_std_error: f64,
}

impl Samples {
    fn new(points: Vec<Point>, proposals: u64, accepted: u64, box_volume: f64) -> Self {
        let p = accepted as f64 / proposals as f64;
        Samples {
            points,
            proposals,
            accepted,
            box_volume,
            volume: box_volume * p,
            volume_std_error: box_volume * (p * (1.0 - p) / proposals as f64).sqrt(),
        }
    }
}

/// `count` proposals from the enclosure; every accepted point is kept.
pub fn sample_uniform(
    spec: &DomainSpec,
    seed: u64,
    count: u64,
    truncation: Option<f64>,
) -> Result<Samples> {
    let sampler = Sampler::new(spec, seed, truncation)?;
    let batches = sampler.fold_batches(count, Vec::new, |pts: &mut Vec<Point>, z| pts.push(z.to_vec()));
    let accepted = batches.iter().map(|b| b.accepted).sum();
    check_rate(accepted, count)?;
    let points = batches.into_iter().flat_map(|b| b.acc).collect();
    Ok(Samples::new(points, count, accepted, sampler.box_volume))
}

/// Draws whole batches until at least `target` points are accepted, then
/// keeps the first `target` in batch order.
pub fn sample_accepted(
    spec: &DomainSpec,
    seed: u64,
    target: usize,
    truncation: Option<f64>,
) -> Result<Samples> {
    const CHUNK: u64 = 16;
    let sampler = Sampler::new(spec, seed, truncation)?;
    let mut points: Vec<Point> = Vec::with_capacity(target);
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    let mut next = 0u64;
    while points.len() < target {
        let chunk: Vec<(Vec<Point>, u64)> = (next..next + CHUNK)
            .into_par_iter()
            .map(|index| {
                let mut pts = Vec::new();
                let acc = sampler.run_batch(index, BATCH_PROPOSALS, |z| pts.push(z.to_vec()));
                (pts, acc)
            })
            .collect();
        next += CHUNK;
        for (pts, acc) in chunk {
            proposals += BATCH_PROPOSALS;
            accepted += acc;
            points.extend(pts);
        }
        if proposals >= 100_000 {
            check_rate(accepted, proposals)?;
        }
    }
    points.truncate(target);
    Ok(Samples::new(points, proposals, accepted, sampler.box_volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CoordBound;
    use std::f64::consts::PI;

    #[test]
    fn polydisk_volume() {
        let spec = DomainSpec::polydisk(vec![1.0, 1.0]).unwrap();
        let s = sample_uniform(&spec, 3, 1_000_000, None).unwrap();
        // Enclosure equals the domain: every proposal accepted.
        assert_eq!(s.accepted, 1_000_000);
        assert!((s.volume - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn ball_volume_within_four_standard_errors() {
        let spec = DomainSpec::ball(2, 1.0).unwrap();
        let s = sample_uniform(&spec, 11, 1_000_000, None).unwrap();
        let exact = PI * PI / 2.0;
        assert!((s.volume - exact).abs() <= 4.0 * s.volume_std_error, "{} vs {exact}", s.volume);
        assert!(s.points.iter().all(|z| spec.contains(z)));
    }

    #[test]
    fn punctured_ball_samples_match_ball() {
        let ball = DomainSpec::ball(2, 1.0).unwrap();
        let punct = DomainSpec::punctured_ball(1.0, vec![Complex64::new(0.3, 0.1), Complex64::new(0.0, 0.2)]).unwrap();
        let a = sample_uniform(&ball, 5, 200_000, None).unwrap();
        let b = sample_uniform(&punct, 5, 200_000, None).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn deterministic_under_thread_count() {
        let spec = DomainSpec::quasi_circular_cubic();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_accepted(&spec, 9, 5_000, None).unwrap());
        let b = four.install(|| sample_accepted(&spec, 9, 5_000, None).unwrap());
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 5_000);
    }

    #[test]
    fn degenerate_spec_detected() {
        let spec = DomainSpec::predicate(
            "empty",
            vec![CoordBound::Disk { center: Complex64::new(0.0, 0.0), radius: 1.0 }],
            |_| false,
        )
        .unwrap();
        assert!(matches!(
            sample_uniform(&spec, 0, 100_000, None),
            Err(Error::DegenerateSampling { accepted: 0, .. })
        ));
    }

    #[test]
    fn unbounded_needs_truncation() {
        let spec = DomainSpec::exp_profile(0).unwrap();
        assert!(matches!(
            sample_uniform(&spec, 0, 1000, None),
            Err(Error::TruncationRequired { coordinate: 1 })
        ));
        assert!(sample_uniform(&spec, 0, 100_000, Some(8.0)).is_ok());
    }
}
