//! Heat and wave trace signatures over the normalized Laplacian spectrum.

use crate::graph::Graph;
use crate::scalar::{count, real, Scalar};

use super::spectrum::normalized_laplacian_spectrum;
use super::DescriptorError;

/// Number of timestamps in both signatures.
pub const SIGNATURE_LEN: usize = 250;

/// Heat trace `h_t = sum_j exp(-t * lambda_j)` sampled on the heat grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSignature<S> {
    pub values: Vec<S>,
}

/// Real part of the wave trace `w_t = sum_j exp(-i t lambda_j)`, i.e.
/// `sum_j cos(t * lambda_j)`, sampled on the wave grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveSignature<S> {
    pub values: Vec<S>,
}

/// 250 log-spaced timestamps in `[1e-2, 1e2]`, endpoints included.
pub fn heat_timestamps<S: Scalar>() -> Vec<S> {
    let ten = real::<S>(10.0);
    (0..SIGNATURE_LEN)
        .map(|k| {
            let exp = -2.0 + 4.0 * k as f64 / (SIGNATURE_LEN - 1) as f64;
            ten.powf(real::<S>(exp))
        })
        .collect()
}

/// 250 equally spaced timestamps in `[0, 2*pi)`.
pub fn wave_timestamps<S: Scalar>() -> Vec<S> {
    let step = (S::PI() + S::PI()) / count::<S>(SIGNATURE_LEN);
    (0..SIGNATURE_LEN).map(|k| step * count::<S>(k)).collect()
}

pub fn netlsd_heat<S: Scalar>(g: &Graph) -> Result<HeatSignature<S>, DescriptorError> {
    let spectrum = normalized_laplacian_spectrum::<S>(g)?;
    let values = heat_timestamps::<S>()
        .into_iter()
        .map(|t| spectrum.iter().map(|&lambda| (-t * lambda).exp()).sum())
        .collect();
    Ok(HeatSignature { values })
}

pub fn netlsd_wave<S: Scalar>(g: &Graph) -> Result<WaveSignature<S>, DescriptorError> {
    let spectrum = normalized_laplacian_spectrum::<S>(g)?;
    let values = wave_timestamps::<S>()
        .into_iter()
        .map(|t| spectrum.iter().map(|&lambda| (t * lambda).cos()).sum())
        .collect();
    Ok(WaveSignature { values })
}

/// Euclidean distance between two equally long signature vectors.
pub(crate) fn euclidean<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}
