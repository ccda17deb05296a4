use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::fragment::{Domain, Fragment};
use crate::error::{Error, Result};

/// Per-row one-sided DFT magnitude `|X_k|`, `k = 0..=q/2` (unnormalized).
pub fn to_frequency_domain(frag: &Fragment) -> Result<Fragment> {
    if frag.domain == Domain::Frequency {
        return Err(Error::invalid("fragment is already in the frequency domain"));
    }
    let q = frag.cols;
    let bins = q / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(q);
    let mut buf = vec![Complex64::new(0.0, 0.0); q];
    let mut data = Vec::with_capacity(frag.rows * bins);
    for r in 0..frag.rows {
        for (b, &v) in buf.iter_mut().zip(frag.row(r)) {
            *b = Complex64::new(v as f64, 0.0);
        }
        fft.process(&mut buf);
        data.extend(buf[..bins].iter().map(|c| c.norm() as f32));
    }
    Ok(frag.with_data(data, bins, Domain::Frequency))
}

/// Time-domain energy implied by one-sided amplitudes of a length-`q` signal
/// (Parseval): `(|X_0|² + 2 Σ |X_k|² + |X_{q/2}|²) / q`, the last term only for even `q`.
pub fn spectral_energy(amplitudes: &[f64], q: usize) -> f64 {
    let last = amplitudes.len() - 1;
    let total: f64 = amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let weight = if k == 0 || (q.is_multiple_of(2) && k == last) { 1.0 } else { 2.0 };
            weight * a * a
        })
        .sum();
    total / q as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::ClassId;

    fn frag(rows: usize, data: Vec<f32>) -> Fragment {
        let cols = data.len() / rows;
        Fragment {
            data,
            rows,
            cols,
            subject_id: "s".into(),
            class: ClassId::HC,
            second_index: 1,
            window_index: 1,
            domain: Domain::Time,
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let f = to_frequency_domain(&frag(2, vec![0.0; 20])).unwrap();
        assert_eq!((f.rows, f.cols), (2, 6));
        assert!(f.data.iter().all(|&v| v == 0.0));
        assert!(to_frequency_domain(&f).is_err());
    }

    #[test]
    fn odd_length_bins() {
        let f = to_frequency_domain(&frag(1, vec![1.0; 7])).unwrap();
        assert_eq!(f.cols, 4);
        assert!((f.data[0] - 7.0).abs() < 1e-6);
    }
}
