use super::LatticeShape;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// In-place unnormalized d-dimensional FFT over a row-major cube of side
/// `side`, in standard FFT ordering (index 0 is frequency/position 0).
///
/// `inverse` selects the `exp(+2 pi i ...)` kernel; no `1/N` factor is applied.
pub fn fft_nd(buf: &mut [Complex64], side: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(side)
    } else {
        planner.plan_fft_forward(side)
    };
    fft_nd_with(buf, side, dim, plan.as_ref());
}

fn fft_nd_with(buf: &mut [Complex64], side: usize, dim: usize, plan: &dyn Fft<f64>) {
    assert_eq!(buf.len(), side.pow(dim as u32), "buffer is not a full cube");
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for start in (0..buf.len()).step_by(block) {
            for inner in 0..stride {
                let base = start + inner;
                if stride == 1 {
                    plan.process_with_scratch(&mut buf[base..base + side], &mut scratch);
                    continue;
                }
                for (q, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + q * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (q, v) in line.iter().enumerate() {
                    buf[base + q * stride] = *v;
                }
            }
        }
    }
}

/// Discrete Fourier transform on `V_n` with kernel
/// `exp(-2 pi i <j,k> / (2n+1))`, indices in `[-n, n]`.
///
/// The inverse carries the `1/|V_n|` factor so `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct Dft {
    shape: LatticeShape,
    perm: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(shape: LatticeShape) -> Self {
        let side = shape.side();
        let perm = (0..shape.site_count())
            .map(|m| {
                let idx = shape.index(m);
                idx.coords().iter().fold(0usize, |acc, &c| {
                    acc * side + (c.rem_euclid(side as i64)) as usize
                })
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            shape,
            perm,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn forward(&self, field: &[Complex64]) -> Vec<Complex64> {
        self.run(field, false)
    }

    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let scale = 1.0 / self.shape.site_count() as f64;
        let mut out = self.run(spectrum, true);
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    pub fn forward_real(&self, field: &[f64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&c)
    }

    /// Writes the real part of `inverse(multiplier * forward(field))` into
    /// `out`. With `multiplier` the transform of a real even filter this is
    /// the circular convolution of `field` with that filter.
    pub fn multiply_spectrum(
        &self,
        field: &[f64],
        multiplier: &[f64],
        buf: &mut Vec<Complex64>,
        out: &mut [f64],
    ) {
        let n = self.shape.site_count();
        assert_eq!(field.len(), n);
        assert_eq!(multiplier.len(), n);
        buf.clear();
        buf.resize(n, Complex64::new(0.0, 0.0));
        for (m, &x) in field.iter().enumerate() {
            buf[self.perm[m]] = Complex64::new(x, 0.0);
        }
        let side = self.shape.side();
        let dim = self.shape.dim();
        fft_nd_with(buf, side, dim, self.forward.as_ref());
        for (m, &g) in multiplier.iter().enumerate() {
            buf[self.perm[m]] *= g;
        }
        fft_nd_with(buf, side, dim, self.inverse.as_ref());
        let scale = 1.0 / n as f64;
        for (m, o) in out.iter_mut().enumerate() {
            *o = buf[self.perm[m]].re * scale;
        }
    }

    fn run(&self, input: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let n = self.shape.site_count();
        assert_eq!(input.len(), n, "field does not cover V_n");
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, &x) in input.iter().enumerate() {
            buf[self.perm[m]] = x;
        }
        let plan = if inverse { &self.inverse } else { &self.forward };
        fft_nd_with(&mut buf, self.shape.side(), self.shape.dim(), plan.as_ref());
        (0..n).map(|m| buf[self.perm[m]]).collect()
    }
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dft({})", self.shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::cube_indices;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn naive_dft(shape: &LatticeShape, x: &[Complex64]) -> Vec<Complex64> {
        let idx = cube_indices(shape);
        let side = shape.side() as f64;
        idx.iter()
            .map(|k| {
                idx.iter()
                    .zip(x)
                    .map(|(j, &v)| {
                        let dot: i64 = j.coords().iter().zip(k.coords()).map(|(a, b)| a * b).sum();
                        v * Complex64::from_polar(1.0, -2.0 * PI * dot as f64 / side)
                    })
                    .sum()
            })
            .collect()
    }

    fn random_field(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn delta_gives_flat_spectrum() {
        let shape = LatticeShape::new(2, 2).unwrap();
        let dft = Dft::new(shape);
        let mut x = vec![Complex64::new(0.0, 0.0); shape.site_count()];
        x[shape.flat(&crate::lattice::TorusIndex::origin(2))] = Complex64::new(1.0, 0.0);
        for v in dft.forward(&x) {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_field_is_pure_dc() {
        let shape = LatticeShape::new(1, 3).unwrap();
        let dft = Dft::new(shape);
        let spec = dft.forward_real(&[2.5; 7]);
        let zero = shape.flat(&crate::lattice::TorusIndex::origin(1));
        for (m, v) in spec.iter().enumerate() {
            let want = if m == zero { 2.5 * 7.0 } else { 0.0 };
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_on_small_cubes() {
        for (d, n) in [(1, 0), (1, 4), (1, 40), (2, 1), (2, 4), (3, 1)] {
            let shape = LatticeShape::new(d, n).unwrap();
            if shape.site_count() > 81 {
                continue;
            }
            let dft = Dft::new(shape);
            let x = random_field(shape.site_count(), (d * 100 + n) as u64);
            let fast = dft.forward(&x);
            let slow = naive_dft(&shape, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10, "d={d} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for (d, n) in [(1, 7), (2, 5), (3, 3)] {
            let shape = LatticeShape::new(d, n).unwrap();
            let dft = Dft::new(shape);
            let x = random_field(shape.site_count(), 9);
            let back = dft.inverse(&dft.forward(&x));
            let norm: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err / norm < 1e-12);
        }
    }
}
