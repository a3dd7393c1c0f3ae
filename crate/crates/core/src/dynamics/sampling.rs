use std::collections::HashSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{periodic_points, DynamicsError};
use crate::algebra::{RationalMap, SpherePoint};
use crate::par;

/// Backward steps discarded before recording.
pub const BURN_IN: usize = 50;
/// Pitch of the deduplication grid for Julia clouds.
pub const CLOUD_GRID: f64 = 1e-4;

const START_RETRIES: u64 = 5;
const CLOUD_ROUNDS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntropySample {
    pub points: Vec<SpherePoint>,
    pub burn_in: usize,
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicEstimates {
    pub chi: f64,
    pub chi_stderr: f64,
    pub log_deg: f64,
    pub hd_mu_estimate: f64,
}

fn step(f: &RationalMap, z: SpherePoint, rng: &mut ChaCha8Rng) -> Result<SpherePoint, DynamicsError> {
    let pre = f.preimages(z).map_err(|_| DynamicsError::PreimageSolveFailed)?;
    if pre.is_empty() {
        return Err(DynamicsError::PreimageSolveFailed);
    }
    Ok(pre[rng.gen_range(0..pre.len())])
}

/// Random backward orbit of length `size` from `start`, after `burn_in`
/// discarded steps.
pub fn backward_sample_from(
    f: &RationalMap,
    start: SpherePoint,
    size: usize,
    burn_in: usize,
    seed: u64,
) -> Result<MaxEntropySample, DynamicsError> {
    if f.degree() < 2 {
        return Err(DynamicsError::DegreeTooLow(f.degree()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = start;
    for _ in 0..burn_in {
        z = step(f, z, &mut rng)?;
    }
    let mut points = Vec::with_capacity(size);
    for _ in 0..size {
        z = step(f, z, &mut rng)?;
        points.push(z);
    }
    Ok(MaxEntropySample { points, burn_in, count: size, seed })
}

// A start is rejected when the chain collapses onto one point, which is
// what happens for points of an exceptional orbit.
fn collapsed(sample: &MaxEntropySample) -> bool {
    let tail = &sample.points[sample.points.len().saturating_sub(8)..];
    tail.len() > 1 && tail.iter().all(|p| p.chordal_distance(&tail[0]) < 1e-12)
}

/// Backward-orbit sample of the measure of maximal entropy.
pub fn backward_sample(f: &RationalMap, size: usize, seed: u64) -> Result<MaxEntropySample, DynamicsError> {
    let mut last = None;
    for attempt in 0..START_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let start = SpherePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let mut sample = backward_sample_from(f, start, size, BURN_IN, rng.gen())?;
        sample.seed = seed;
        if !collapsed(&sample) {
            return Ok(sample);
        }
        last = Some(sample);
    }
    last.ok_or(DynamicsError::EmptySample)
}

/// Mean of the log spherical derivative over the sample, with a batch-means
/// standard error.
pub fn lyapunov_exponent(f: &RationalMap, sample: &MaxEntropySample) -> Result<ErgodicEstimates, DynamicsError> {
    if sample.points.is_empty() {
        return Err(DynamicsError::EmptySample);
    }
    let logs: Vec<f64> = par::map_slice(&sample.points, |p| f.spherical_derivative(*p).ln());
    if logs.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::DerivativeSingular);
    }
    let n = logs.len();
    let chi = logs.iter().sum::<f64>() / n as f64;
    let chi_stderr = if n >= 40 {
        let batches = 20;
        let len = n / batches;
        let means: Vec<f64> =
            (0..batches).map(|b| logs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64).collect();
        let mean = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    } else if n > 1 {
        let var = logs.iter().map(|v| (v - chi).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let log_deg = (f.degree() as f64).ln();
    Ok(ErgodicEstimates { chi, chi_stderr, log_deg, hd_mu_estimate: log_deg / chi })
}

fn grid_key(p: &SpherePoint) -> (bool, i64, i64) {
    match *p {
        SpherePoint::Infinity => (true, 0, 0),
        SpherePoint::Finite(z) if z.norm() <= 1.0 => {
            (false, (z.re / CLOUD_GRID).floor() as i64, (z.im / CLOUD_GRID).floor() as i64)
        }
        SpherePoint::Finite(z) => {
            let w = z.inv();
            (true, (w.re / CLOUD_GRID).floor() as i64, (w.im / CLOUD_GRID).floor() as i64)
        }
    }
}

/// Points of the Julia set from backward orbits of the repelling fixed
/// points, deduplicated on a grid of pitch [`CLOUD_GRID`]. Thin Julia sets
/// may saturate the grid and yield fewer than `size` points.
pub fn julia_cloud(f: &RationalMap, size: usize, seed: u64) -> Result<Vec<SpherePoint>, DynamicsError> {
    let mut starts: Vec<SpherePoint> =
        periodic_points(f, 1)?.into_iter().filter(|o| o.is_repelling()).map(|o| o.points[0]).collect();
    if starts.is_empty() {
        starts.push(SpherePoint::new(0.3141, 0.2718));
    }
    let chains = starts.len().max(4);
    let chunk = size.div_ceil(chains).max(1);
    let mut seen = HashSet::new();
    let mut cloud = Vec::with_capacity(size);
    for round in 0..CLOUD_ROUNDS {
        let runs = par::map_range(chains, |i| {
            let s = seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add((round * chains + i) as u64);
            backward_sample_from(f, starts[i % starts.len()], chunk, BURN_IN, s)
        });
        let before = cloud.len();
        for run in runs {
            for p in run?.points {
                if cloud.len() < size && seen.insert(grid_key(&p)) {
                    cloud.push(p);
                }
            }
        }
        if cloud.len() >= size || cloud.len() == before {
            break;
        }
    }
    Ok(cloud)
}

/// Writes `re,im` lines; the point at infinity is written as `inf,inf`.
pub fn write_cloud_csv<W: Write>(points: &[SpherePoint], mut out: W) -> io::Result<()> {
    for p in points {
        match p {
            SpherePoint::Finite(z) => writeln!(out, "{},{}", z.re, z.im)?,
            SpherePoint::Infinity => writeln!(out, "inf,inf")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_map;

    #[test]
    fn square_sample_on_unit_circle() {
        let f = parse_map("z^2").unwrap();
        let s = backward_sample(&f, 1000, 7).unwrap();
        assert_eq!(s.count, 1000);
        assert!(s.points.iter().all(|p| (p.finite().unwrap().norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn chebyshev_sample_on_interval() {
        let f = parse_map("z^2-2").unwrap();
        let s = backward_sample(&f, 1000, 3).unwrap();
        for p in &s.points {
            let z = p.finite().unwrap();
            assert!(z.im.abs() < 1e-6 && z.re.abs() <= 2.0 + 1e-6);
        }
    }

    #[test]
    fn reproducible() {
        let f = parse_map("z^2+0.25*z-1").unwrap();
        assert_eq!(backward_sample(&f, 200, 11).unwrap(), backward_sample(&f, 200, 11).unwrap());
    }

    #[test]
    fn lyapunov_of_square() {
        let f = parse_map("z^2").unwrap();
        let s = backward_sample(&f, 2000, 1).unwrap();
        let e = lyapunov_exponent(&f, &s).unwrap();
        assert!((e.chi - 2f64.ln()).abs() < 1e-9);
        assert!(e.chi_stderr >= 0.0);
    }

    #[test]
    fn cloud_is_deduplicated() {
        let f = parse_map("z^2+1").unwrap();
        let c = julia_cloud(&f, 3000, 5).unwrap();
        assert!(c.len() > 1000);
        let keys: HashSet<_> = c.iter().map(grid_key).collect();
        assert_eq!(keys.len(), c.len());
        assert!(c.iter().any(|p| p.finite().unwrap().im > 0.1));
    }

    #[test]
    fn csv_format() {
        let mut buf = Vec::new();
        write_cloud_csv(&[SpherePoint::new(0.5, -1.0), SpherePoint::Infinity], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.5,-1\ninf,inf\n");
    }
}
