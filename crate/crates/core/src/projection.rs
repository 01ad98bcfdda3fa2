//! Random-projection binarizer: `bits` Gaussian hyperplanes through the
//! origin, regenerated from `(seed, bits, input_dim)`.

use crate::error::{validation, Result};
use crate::feature::BinaryCode;
use crate::rng::NormalStream;

pub const DEFAULT_BITS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDictionary {
    seed: u64,
    bits: usize,
    input_dim: usize,
    /// Row-major, `bits x input_dim`.
    rows: Vec<f32>,
}

impl ProjectionDictionary {
    /// Row `i`, component `j` is the `(i * input_dim + j)`-th normal variate
    /// of [`NormalStream::from_seed`]`(seed)`, rounded to f32.
    pub fn new(seed: u64, bits: usize, input_dim: usize) -> Result<Self> {
        if bits == 0 || !bits.is_multiple_of(8) {
            return Err(validation(format!(
                "projection bits must be a positive multiple of 8, got {bits}"
            )));
        }
        if input_dim == 0 {
            return Err(validation("projection input_dim must be positive"));
        }
        let mut normals = NormalStream::from_seed(seed);
        let rows = (0..bits * input_dim)
            .map(|_| normals.next_normal() as f32)
            .collect();
        Ok(Self {
            seed,
            bits,
            input_dim,
            rows,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// Bit `i` is set iff `row_i . descriptor > 0`; an exact zero gives 0.
    pub fn binarize(&self, descriptor: &[f32]) -> Result<BinaryCode> {
        if descriptor.len() != self.input_dim {
            return Err(validation(format!(
                "descriptor has {} components, projection expects {}",
                descriptor.len(),
                self.input_dim
            )));
        }
        let mut code = BinaryCode::zeros(self.bits);
        for i in 0..self.bits {
            let dot: f64 = self
                .row(i)
                .iter()
                .zip(descriptor)
                .map(|(&r, &x)| r as f64 * x as f64)
                .sum();
            if dot > 0.0 {
                code.set(i, true);
            }
        }
        Ok(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_descriptor_gives_zero_code() {
        let dict = ProjectionDictionary::new(1, 128, 32).unwrap();
        let code = dict.binarize(&[0.0; 32]).unwrap();
        assert_eq!(code.count_ones(), 0);
        assert_eq!(code.as_bytes().len(), 16);
    }

    #[test]
    fn regeneration_is_identical() {
        let a = ProjectionDictionary::new(99, 64, 10).unwrap();
        let b = ProjectionDictionary::new(99, 64, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ProjectionDictionary::new(100, 64, 10).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ProjectionDictionary::new(0, 12, 4).is_err());
        assert!(ProjectionDictionary::new(0, 16, 0).is_err());
        let d = ProjectionDictionary::new(0, 16, 4).unwrap();
        assert!(d.binarize(&[1.0; 5]).is_err());
    }

    #[test]
    fn negation_flips_every_nonzero_bit() {
        let d = ProjectionDictionary::new(5, 128, 16).unwrap();
        let x: Vec<f32> = (0..16).map(|i| (i as f32 - 7.5) * 0.1).collect();
        let neg: Vec<f32> = x.iter().map(|v| -v).collect();
        let a = d.binarize(&x).unwrap();
        let b = d.binarize(&neg).unwrap();
        assert_eq!(a.hamming(&b), 128);
    }
}
