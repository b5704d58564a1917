//! Windowed-sinc sample-rate conversion.

use super::{DspError, Waveform};

/// Lobes of the sinc kernel on each side, measured at the cutoff.
const KERNEL_LOBES: f64 = 32.0;

/// Resample to `target_rate` with a Hann-windowed sinc kernel whose cutoff
/// sits at the lower of the two Nyquist frequencies. Output length is
/// `ceil(n * target / source)`, preserving duration to within one sample
/// period. Equal rates return the input unchanged.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform, DspError> {
    if target_rate == 0 {
        return Err(DspError::ConfigError("target rate must be positive".into()));
    }
    if w.sample_rate == target_rate {
        return Ok(w.clone());
    }
    let n = w.samples.len();
    let out_len = ((n as u64 * target_rate as u64).div_ceil(w.sample_rate as u64)) as usize;
    if n == 0 {
        return Ok(Waveform::new(Vec::new(), target_rate));
    }

    let ratio = target_rate as f64 / w.sample_rate as f64;
    // Cutoff in cycles per input sample; 0.5 for upsampling, scaled down
    // for decimation so the kernel also acts as the anti-alias filter.
    let fc = 0.5 * ratio.min(1.0);
    let half_width = (KERNEL_LOBES / (2.0 * fc)).ceil();
    let step = w.sample_rate as f64 / target_rate as f64;

    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let center = m as f64 * step;
        let lo = ((center - half_width).ceil().max(0.0)) as usize;
        let hi = ((center + half_width).floor()).min((n - 1) as f64) as usize;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (k, &x) in w.samples.iter().enumerate().take(hi + 1).skip(lo) {
            let u = k as f64 - center;
            let weight = 2.0 * fc * sinc(2.0 * fc * u) * hann(u / half_width);
            acc += weight * x;
            norm += weight;
        }
        // Unity DC gain per output sample; also compensates edge truncation.
        out.push(if norm.abs() > 1e-12 { acc / norm } else { 0.0 });
    }

    Ok(Waveform::new(out, target_rate))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn hann(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * u).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn sine(freq: f64, rate: u32, secs: f64) -> Waveform {
        let n = (rate as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin() * 0.8)
            .collect();
        Waveform::new(samples, rate)
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    /// Frequency of the strongest FFT bin.
    fn dominant_freq(w: &Waveform) -> (f64, f64) {
        let n = 8192.min(w.len());
        let mut buf: Vec<Complex<f64>> = w.samples[..n]
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (best, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        let bin_width = w.sample_rate as f64 / n as f64;
        (best as f64 * bin_width, bin_width)
    }

    #[test]
    fn identity_when_rates_match() {
        let w = sine(440.0, 16000, 0.5);
        let r = resample(&w, 16000).unwrap();
        assert_eq!(r.samples, w.samples);
    }

    #[test]
    fn output_length_follows_rate_ratio() {
        let w = Waveform::new(vec![0.0; 32000], 32000);
        let r = resample(&w, 16000).unwrap();
        assert!((r.len() as i64 - 16000).abs() <= 1, "len = {}", r.len());
        assert_eq!(r.sample_rate, 16000);
    }

    #[test]
    fn tone_survives_downsampling() {
        let w = sine(440.0, 48000, 1.0);
        let r = resample(&w, 16000).unwrap();
        let (freq, bin_width) = dominant_freq(&r);
        assert!(
            (freq - 440.0).abs() <= bin_width,
            "dominant {freq} Hz, bin width {bin_width}"
        );
    }

    #[test]
    fn tone_survives_upsampling() {
        let w = sine(440.0, 16000, 1.0);
        let r = resample(&w, 22050).unwrap();
        let (freq, bin_width) = dominant_freq(&r);
        assert!((freq - 440.0).abs() <= bin_width);
    }

    #[test]
    fn rms_preserved_within_five_percent() {
        let w = sine(440.0, 48000, 1.0);
        let r = resample(&w, 16000).unwrap();
        let (a, b) = (rms(&w.samples), rms(&r.samples));
        assert!((a - b).abs() / a < 0.05, "rms {a} vs {b}");
    }

    #[test]
    fn zero_target_rate_rejected() {
        let w = sine(440.0, 16000, 0.1);
        assert!(matches!(resample(&w, 0), Err(DspError::ConfigError(_))));
    }
}
