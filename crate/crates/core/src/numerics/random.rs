use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};

/// A seeded, single-owner random stream.
///
/// Backed by ChaCha20: the 64-bit `seed` expands to the cipher key and
/// `stream_id` selects the 64-bit nonce, so distinct stream ids under one
/// seed never share keystream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent stream for a sub-task of this one (same stream id,
    /// re-keyed by `purpose`).
    pub fn substream(&self, purpose: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(purpose.wrapping_add(0x5851_f42d_4c95_7f2d)));
        RngStream::new(key, self.stream_id)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn sample_uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

#[inline]
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One draw from `Ga(shape, rate)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_gamma_params(shape, rate)?;
    Ok(sample_log_standard_gamma(shape, rng).exp() / rate)
}

/// Log of one draw from `Ga(shape, 1)`. Stays finite for tiny shapes, where
/// the draw itself underflows.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    check_gamma_params(shape, 1.0)?;
    Ok(sample_log_standard_gamma(shape, rng))
}

fn check_gamma_params(shape: f64, rate: f64) -> Result<()> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(domain("sample_gamma", format!("shape must be positive, got {shape}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(domain("sample_gamma", format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

fn sample_log_standard_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        // Ga(a) = Ga(a + 1) · U^(1/a)
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u = sample_uniform_open(rng);
        return boosted.ln() + u.ln() / shape;
    }
    marsaglia_tsang(shape, rng).ln()
}

/// Marsaglia & Tsang (2000) squeeze/rejection sampler for `shape >= 1`.
fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = sample_uniform_open(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from `Dirichlet(concentration)` as normalized gamma variates.
///
/// Normalization happens in log space so that small concentrations, whose
/// gamma draws underflow, still produce a valid simplex.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(domain("sample_dirichlet", "empty concentration vector"));
    }
    if let Some(&bad) = concentration.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(domain("sample_dirichlet", format!("concentration must be positive, got {bad}")));
    }
    let mut out: Vec<f64> = concentration
        .iter()
        .map(|&a| sample_log_standard_gamma(a, rng))
        .collect();
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in out.iter_mut() {
        *v /= total;
    }
    Ok(out)
}

/// Draws a 0-based index with probability proportional to `exp(log_weights[i])`.
pub fn sample_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let mut buf = log_weights.to_vec();
    categorical_in_place(&mut buf, rng)
}

/// As [`sample_categorical`], but reuses `buf` as scratch space: on return it
/// holds the unnormalized weights `exp(v - max v)`.
pub fn categorical_in_place<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) -> Result<usize> {
    if buf.is_empty() {
        return Err(domain("sample_categorical", "empty weight vector"));
    }
    let mut max = f64::NEG_INFINITY;
    for &v in buf.iter() {
        if v.is_nan() || v == f64::INFINITY {
            return Err(domain("sample_categorical", format!("invalid log weight {v}")));
        }
        max = max.max(v);
    }
    if max == f64::NEG_INFINITY {
        return Err(domain("sample_categorical", "all log weights are -inf"));
    }
    let mut total = 0.0;
    for v in buf.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let target = sample_uniform_open(rng) * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in buf.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    // rounding left `target` just past the accumulated total
    Ok(last_positive)
}
