//! Real FFT convolution with a fixed kernel.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

/// Convolves signals against one kernel whose spectrum is computed once.
///
/// The transform length is a power of two. With [`Convolver::linear`] it
/// covers the whole linear convolution; with [`Convolver::valid`] it only
/// covers the signal, so outputs at indices `< kernel_len − 1` wrap around
/// and must be discarded.
pub(crate) struct Convolver {
    len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Convolver {
    pub fn linear(kernel: &[f64], signal_len: usize) -> Self {
        Self::with_len(kernel, (kernel.len() + signal_len - 1).next_power_of_two())
    }

    pub fn valid(kernel: &[f64], signal_len: usize) -> Self {
        assert!(kernel.len() <= signal_len, "kernel longer than signal");
        Self::with_len(kernel, signal_len.next_power_of_two())
    }

    fn with_len(kernel: &[f64], len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut buf = forward.make_input_vec();
        buf[..kernel.len()].copy_from_slice(kernel);
        let mut spectrum = forward.make_output_vec();
        forward
            .process(&mut buf, &mut spectrum)
            .expect("buffer sizes come from the plan");
        let scale = 1.0 / len as f64;
        spectrum.iter_mut().for_each(|c| *c *= scale);
        Self {
            len,
            spectrum,
            forward,
            inverse,
        }
    }

    /// Circular convolution of `signal` (zero-padded) with the kernel; the
    /// returned vector has the transform length.
    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        assert!(signal.len() <= self.len, "signal longer than the transform");
        let mut buf = self.forward.make_input_vec();
        buf[..signal.len()].copy_from_slice(signal);
        let mut freq = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut freq)
            .expect("buffer sizes come from the plan");
        for (f, k) in freq.iter_mut().zip(&self.spectrum) {
            *f *= k;
        }
        // The DC and Nyquist bins of a real signal's spectrum are real.
        freq[0].im = 0.0;
        if let Some(last) = freq.last_mut() {
            last.im = 0.0;
        }
        self.inverse
            .process(&mut freq, &mut buf)
            .expect("buffer sizes come from the plan");
        buf
    }
}

/// Direct evaluation of `y[n] = Σ_j kernel[j]·signal[n−j]` for `n` in `range`.
pub(crate) fn direct(kernel: &[f64], signal: &[f64], range: std::ops::Range<usize>) -> Vec<f64> {
    range
        .map(|n| {
            let jmax = n.min(kernel.len() - 1);
            (0..=jmax).map(|j| kernel[j] * signal[n - j]).sum()
        })
        .collect()
}
