use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::error::{Error, Result};

/// Seeded random source keyed by `(seed, stream)`.
///
/// Backed by ChaCha8, whose output is specified bit-for-bit, so equal keys give
/// equal draw sequences on every platform. Distinct streams of the same seed
/// are independent, which lets one trial seed fan out into separate sources
/// (instance, sketches, graph, power-method start) that do not perturb each
/// other.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

/// `rows x cols` matrix of i.i.d. standard normal entries.
///
/// Consumes exactly `rows * cols` normal draws, filled in row-major order.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "gaussian matrix shape {rows}x{cols} is empty"
        )));
    }
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::new(rows, cols, data)
}
