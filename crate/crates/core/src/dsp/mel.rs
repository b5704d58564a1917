//! Log-mel spectrograms and mel-cepstra.
//!
//! Framing is center-based with reflection padding: frame `t` is the
//! windowed segment around sample `t * hop`, so the frame count depends
//! only on signal length and hop.

use rustfft::{num_complex::Complex, FftPlanner};

use super::{frame_count, DspError, FeatureKind, FeatureMatrix, Waveform};

/// STFT / filterbank settings. Defaults match 16 kHz synthesis tooling:
/// 1024-point FFT, 1024 Hann window, hop 320 (50 fps), 80 mel bands over
/// 0–8000 Hz.
#[derive(Debug, Clone)]
pub struct MelConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub win: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 320,
            win: 1024,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
        }
    }
}

impl MelConfig {
    fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let nyquist = sample_rate as f64 / 2.0;
        if self.hop == 0 || self.n_fft == 0 || self.win == 0 || self.n_mels == 0 {
            return Err(DspError::ConfigError(
                "hop, n_fft, win and n_mels must be positive".into(),
            ));
        }
        if self.win > self.n_fft {
            return Err(DspError::ConfigError(format!(
                "win {} exceeds n_fft {}",
                self.win, self.n_fft
            )));
        }
        if self.fmax > nyquist {
            return Err(DspError::ConfigError(format!(
                "fmax {} exceeds Nyquist {}",
                self.fmax, nyquist
            )));
        }
        if self.fmin < 0.0 || self.fmin >= self.fmax {
            return Err(DspError::ConfigError(format!(
                "bad mel band [{}, {}]",
                self.fmin, self.fmax
            )));
        }
        if self.n_mels > self.n_fft / 2 + 1 {
            return Err(DspError::ConfigError(format!(
                "n_mels {} exceeds spectrum bins {}",
                self.n_mels,
                self.n_fft / 2 + 1
            )));
        }
        Ok(())
    }
}

/// Hz to mel (O'Shaughnessy).
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Mel to Hz, inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank evaluated at FFT bin frequencies.
/// Returns `n_mels` rows of `n_fft / 2 + 1` weights, each peaking at 1.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let bin_hz = sample_rate as f64 / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= left || f >= right {
                        0.0
                    } else if f <= center {
                        (f - left) / (center - left)
                    } else {
                        (right - f) / (right - center)
                    }
                })
                .collect()
        })
        .collect()
}

/// Log-mel magnitude spectrogram with `ceil(len / hop)` frames.
/// Entries are `ln(max(mel_magnitude, log_floor))`.
pub fn mel_spectrogram(w: &Waveform, cfg: &MelConfig) -> Result<FeatureMatrix, DspError> {
    cfg.validate(w.sample_rate)?;
    let n = w.samples.len();
    let t_frames = frame_count(n, cfg.hop);
    let n_bins = cfg.n_fft / 2 + 1;
    let filterbank = mel_filterbank(cfg.n_mels, cfg.n_fft, w.sample_rate, cfg.fmin, cfg.fmax);
    let window: Vec<f64> = (0..cfg.win)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / cfg.win as f64).cos())
        .collect();

    let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
    // Window sits centered in the FFT buffer when win < n_fft.
    let pad = (cfg.n_fft - cfg.win) / 2;

    let mut data = Vec::with_capacity(t_frames * cfg.n_mels);
    for t in 0..t_frames {
        let center = (t * cfg.hop) as isize;
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (i, w_i) in window.iter().enumerate() {
            let idx = center - (cfg.win / 2) as isize + i as isize;
            buf[pad + i] = Complex::new(reflect_sample(&w.samples, idx) * w_i, 0.0);
        }
        fft.process(&mut buf);
        let magnitudes: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm()).collect();
        for weights in &filterbank {
            let mel: f64 = weights.iter().zip(&magnitudes).map(|(w, m)| w * m).sum();
            data.push(mel.max(cfg.log_floor).ln());
        }
    }

    let frame_rate = w.sample_rate as f64 / cfg.hop as f64;
    Ok(FeatureMatrix::from_flat(
        data,
        cfg.n_mels,
        frame_rate,
        FeatureKind::MelSpectrogram,
        cfg.hop as u32,
    ))
}

/// Mirror indexing without edge repetition (librosa-style reflect).
fn reflect_sample(x: &[f64], idx: isize) -> f64 {
    let n = x.len() as isize;
    if n == 1 {
        return x[0];
    }
    let period = 2 * (n - 1);
    let mut i = idx.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    x[i as usize]
}

/// Orthonormal DCT-II.
pub fn dct_ii_orthonormal(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|k| {
            let sum: f64 = x
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    v * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()
                })
                .sum();
            sum * if k == 0 { norm0 } else { norm }
        })
        .collect()
}

/// Inverse of [`dct_ii_orthonormal`]. `n` is the output length; missing
/// high-order coefficients are treated as zero.
pub fn idct_orthonormal(coeffs: &[f64], n: usize) -> Vec<f64> {
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|j| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let scale = if k == 0 { norm0 } else { norm };
                    scale
                        * c
                        * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()
                })
                .sum()
        })
        .collect()
}

/// Per-frame orthonormal DCT-II of a log-mel spectrogram, truncated to
/// `n_coef` coefficients. Coefficient 0 is the energy term.
pub fn mel_cepstra(m: &FeatureMatrix, n_coef: usize) -> Result<FeatureMatrix, DspError> {
    if m.kind != FeatureKind::MelSpectrogram {
        return Err(DspError::ConfigError(format!(
            "mel_cepstra expects mel_spectrogram input, got {}",
            m.kind.name()
        )));
    }
    if n_coef == 0 || n_coef > m.dim() {
        return Err(DspError::ConfigError(format!(
            "n_coef {} out of range 1..={}",
            n_coef,
            m.dim()
        )));
    }
    let mut data = Vec::with_capacity(m.num_frames() * n_coef);
    for row in m.rows_iter() {
        let coeffs = dct_ii_orthonormal(row);
        data.extend_from_slice(&coeffs[..n_coef]);
    }
    Ok(FeatureMatrix::from_flat(
        data,
        n_coef,
        m.frame_rate,
        FeatureKind::MelCepstra,
        m.hop,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, n: usize, amp: f64) -> Waveform {
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect();
        Waveform::new(samples, rate)
    }

    #[test]
    fn one_second_gives_fifty_frames() {
        let w = tone(440.0, 16000, 16000, 0.5);
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        assert_eq!(m.num_frames(), 50);
        assert_eq!(m.dim(), 80);
        assert!((m.frame_rate - 50.0).abs() < 1e-12);
    }

    #[test]
    fn frame_count_law_odd_lengths() {
        let cfg = MelConfig::default();
        for n in [1usize, 319, 320, 321, 15999, 16001] {
            let w = Waveform::new(vec![0.1; n], 16000);
            let m = mel_spectrogram(&w, &cfg).unwrap();
            assert_eq!(m.num_frames(), n.div_ceil(320), "n = {n}");
        }
    }

    #[test]
    fn silence_hits_log_floor() {
        let w = Waveform::new(vec![0.0; 3200], 16000);
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let floor = 1e-10f64.ln();
        for &v in m.as_flat() {
            assert!((v - floor).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_tone_peaks_in_matching_band() {
        let cfg = MelConfig::default();
        let w = tone(1000.0, 16000, 16000, 0.8);
        let m = mel_spectrogram(&w, &cfg).unwrap();

        // Oracle: band edges from the mel scale directly.
        let mel_lo = hz_to_mel(cfg.fmin);
        let mel_hi = hz_to_mel(cfg.fmax);
        let edge =
            |i: usize| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64);
        for row in m.rows_iter() {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let (left, right) = (edge(argmax), edge(argmax + 2));
            assert!(
                left <= 1000.0 && 1000.0 <= right,
                "argmax band {argmax} covers [{left}, {right}]"
            );
        }
    }

    #[test]
    fn config_errors() {
        let w = tone(440.0, 16000, 1600, 0.5);
        let bad_fmax = MelConfig {
            fmax: 9000.0,
            ..Default::default()
        };
        assert!(matches!(
            mel_spectrogram(&w, &bad_fmax),
            Err(DspError::ConfigError(_))
        ));
        let bad_mels = MelConfig {
            n_fft: 64,
            win: 64,
            n_mels: 80,
            ..Default::default()
        };
        assert!(matches!(
            mel_spectrogram(&w, &bad_mels),
            Err(DspError::ConfigError(_))
        ));
    }

    #[test]
    fn dct_of_constant_is_energy_only() {
        let x = vec![2.5; 16];
        let c = dct_ii_orthonormal(&x);
        assert!((c[0] - 2.5 * 16f64.sqrt()).abs() < 1e-9);
        for &v in &c[1..] {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn dct_matches_naive_summation() {
        // Independent evaluation of the orthonormal DCT-II definition.
        let x = [0.3, -1.2, 0.7, 2.1];
        let n = x.len();
        let mut expected = vec![0.0; n];
        for (k, e) in expected.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (j, &v) in x.iter().enumerate() {
                sum += v * (std::f64::consts::PI / n as f64 * (j as f64 + 0.5) * k as f64).cos();
            }
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            *e = scale * sum;
        }
        let got = dct_ii_orthonormal(&x);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9);
        }
    }

    #[test]
    fn full_cepstra_round_trip() {
        let w = tone(700.0, 16000, 6400, 0.6);
        let mel = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        let cep = mel_cepstra(&mel, mel.dim()).unwrap();
        assert_eq!(cep.kind, FeatureKind::MelCepstra);
        for (mel_row, cep_row) in mel.rows_iter().zip(cep.rows_iter()) {
            let back = idct_orthonormal(cep_row, mel_row.len());
            for (a, b) in back.iter().zip(mel_row) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cepstra_requires_mel_input() {
        let m = FeatureMatrix::from_flat(vec![0.0; 8], 4, 50.0, FeatureKind::External, 0);
        assert!(matches!(mel_cepstra(&m, 2), Err(DspError::ConfigError(_))));
        let w = tone(440.0, 16000, 1600, 0.5);
        let mel = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        assert!(matches!(
            mel_cepstra(&mel, 81),
            Err(DspError::ConfigError(_))
        ));
    }

    #[test]
    fn empty_waveform_yields_empty_matrix() {
        let w = Waveform::new(Vec::new(), 16000);
        let m = mel_spectrogram(&w, &MelConfig::default()).unwrap();
        assert_eq!(m.num_frames(), 0);
    }
}
