//! Pixel-wise vector quantization of a multispectral image with k-means++.
//!
//! Centers are fitted on a regular subsample (every `stride`-th row and
//! column), then every pixel is labelled with its nearest center in
//! Euclidean band space. Assignment runs in parallel; every reduction
//! (cluster sums, SSE, D^2 totals) is accumulated sequentially in sample
//! order, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::{RasterGrid, INDEX_NODATA};
use crate::rng::{tags, Stream};
use crate::spectral::BandVector;

use super::vnir::VnirImage;
use super::MappingError;

pub const MAX_ITERATIONS: usize = 100;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Converged cluster centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub centers: Vec<BandVector>,
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
}

/// Per-pixel cluster index (1 band, nodata = [`INDEX_NODATA`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMap {
    pub grid: RasterGrid,
    pub k: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = dist2(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_count(samples: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = samples.iter().collect();
    sorted.sort_by(|a, b| a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    sorted.dedup();
    sorted.len()
}

/// k-means++ seeding followed by Lloyd iterations on `samples`.
pub fn kmeans_plus_plus(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterSet, MappingError> {
    if k == 0 {
        return Err(MappingError::InvalidParameter("k must be at least 1".into()));
    }
    let distinct = distinct_count(samples);
    if k > distinct {
        return Err(MappingError::TooFewSamples { k, distinct });
    }
    let mut rng = Stream::derived(seed, tags::KMEANS, 0);
    let n = samples.len();

    let mut centers: Vec<Vec<f64>> = vec![samples[rng.below(n)].clone()];
    let mut d2: Vec<f64> = samples.par_iter().map(|s| dist2(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if d > 0.0 && acc > target {
                pick = Some(i);
                break;
            }
        }
        // Rounding can leave `target` at the very top of the cumulative sum.
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("k <= distinct samples"));
        let c = samples[pick].clone();
        d2.par_iter_mut().zip(samples.par_iter()).for_each(|(d, s)| *d = d.min(dist2(s, &c)));
        centers.push(c);
    }

    let dim = samples[0].len();
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = samples.par_iter().map(|s| nearest(s, &centers)).collect();
        sse_history.push(assigned.iter().map(|a| a.1).sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &(j, _)) in samples.iter().zip(&assigned) {
            counts[j] += 1;
            sums[j].iter_mut().zip(s).for_each(|(a, v)| *a += v);
        }
        let mut spread: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            if counts[j] > 0 {
                next.push(sums[j].iter().map(|v| v / counts[j] as f64).collect::<Vec<_>>());
            } else {
                // Empty cluster: move it onto the sample farthest from its
                // current center.
                let far = (0..n).fold(0, |best, i| if spread[i] > spread[best] { i } else { best });
                spread[far] = 0.0;
                next.push(samples[far].clone());
            }
        }
        let movement = centers.iter().zip(&next).map(|(a, b)| dist2(a, b).sqrt()).fold(0.0, f64::max);
        centers = next;
        if movement < CONVERGENCE_TOLERANCE {
            break;
        }
    }

    Ok(ClusterSet { centers: centers.into_iter().map(BandVector).collect(), k, seed, iterations, sse_history })
}

/// Subsample used for fitting: pixels whose row and column are both
/// multiples of `stride`, skipping nodata.
pub fn subsample(image: &VnirImage, stride: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for r in (0..image.height()).step_by(stride) {
        for c in (0..image.width()).step_by(stride) {
            if let Some(p) = image.pixel(r, c) {
                out.push(p);
            }
        }
    }
    out
}

/// Labels every pixel with its nearest center.
pub fn assign_pixels(image: &VnirImage, clusters: &ClusterSet) -> ClassMap {
    let centers: Vec<Vec<f64>> = clusters.centers.iter().map(|c| c.0.clone()).collect();
    let (w, h) = (image.width(), image.height());
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|r| {
            let centers = &centers;
            (0..w).map(move |c| match image.pixel(r, c) {
                Some(p) => nearest(&p, centers).0 as f64,
                None => INDEX_NODATA,
            })
        })
        .collect();
    ClassMap { grid: RasterGrid::new(image.grid.transform, 1, data, Some(INDEX_NODATA)).expect("image dimensions"), k: clusters.k }
}

pub fn quantize_vnir(image: &VnirImage, k: usize, subsample_stride: usize, seed: u64) -> Result<(ClusterSet, ClassMap), MappingError> {
    if subsample_stride == 0 {
        return Err(MappingError::InvalidParameter("subsample stride must be at least 1".into()));
    }
    if k >= INDEX_NODATA as usize {
        return Err(MappingError::InvalidParameter(format!("k = {k} does not fit a 16-bit class map")));
    }
    let samples = subsample(image, subsample_stride);
    let clusters = kmeans_plus_plus(&samples, k, seed)?;
    let classes = assign_pixels(image, &clusters);
    Ok((clusters, classes))
}
