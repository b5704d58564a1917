//! Fundamental-frequency estimation with a YIN-style cumulative
//! mean-normalized difference function.

use super::{frame_count, DspError, PitchTrack, Waveform};

/// First CMNDF dip below this value is taken as the period candidate.
const DIP_THRESHOLD: f64 = 0.15;
/// Frames quieter than this RMS are unvoiced outright.
const SILENCE_RMS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct PitchConfig {
    pub hop: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Minimum periodicity (1 - CMNDF minimum) for a frame to count as voiced.
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            hop: 320,
            fmin: 50.0,
            fmax: 600.0,
            voicing_threshold: 0.5,
        }
    }
}

/// One f0 estimate per hop. Frames whose periodicity falls below
/// `cfg.voicing_threshold` are marked unvoiced with `f0 = 0`.
pub fn extract_f0(w: &Waveform, cfg: &PitchConfig) -> Result<PitchTrack, DspError> {
    if cfg.hop == 0 {
        return Err(DspError::ConfigError("hop must be positive".into()));
    }
    if cfg.fmin <= 0.0 || cfg.fmax <= cfg.fmin || cfg.fmax > w.sample_rate as f64 / 2.0 {
        return Err(DspError::ConfigError(format!(
            "bad pitch band [{}, {}] at {} Hz",
            cfg.fmin, cfg.fmax, w.sample_rate
        )));
    }

    let sr = w.sample_rate as f64;
    let tau_min = ((sr / cfg.fmax).floor() as usize).max(2);
    let tau_max = (sr / cfg.fmin).ceil() as usize;
    let window = tau_max; // difference window; segment spans window + tau_max

    let t_frames = frame_count(w.samples.len(), cfg.hop);
    let mut f0 = Vec::with_capacity(t_frames);
    let mut voiced = Vec::with_capacity(t_frames);

    let mut segment = vec![0.0f64; window + tau_max];
    let mut diff = vec![0.0f64; tau_max + 1];
    let mut cmndf = vec![0.0f64; tau_max + 1];

    for t in 0..t_frames {
        let center = (t * cfg.hop) as isize;
        let start = center - (segment.len() / 2) as isize;
        for (i, s) in segment.iter_mut().enumerate() {
            let idx = start + i as isize;
            *s = if idx >= 0 && (idx as usize) < w.samples.len() {
                w.samples[idx as usize]
            } else {
                0.0
            };
        }

        let rms = (segment.iter().map(|x| x * x).sum::<f64>() / segment.len() as f64).sqrt();
        if rms < SILENCE_RMS {
            f0.push(0.0);
            voiced.push(false);
            continue;
        }

        difference_function(&segment, window, &mut diff);
        cumulative_mean_normalize(&diff, &mut cmndf);

        let tau = pick_period(&cmndf, tau_min, tau_max);
        let periodicity = (1.0 - cmndf[tau]).clamp(0.0, 1.0);
        if periodicity < cfg.voicing_threshold {
            f0.push(0.0);
            voiced.push(false);
        } else {
            let refined = parabolic_refine(&cmndf, tau, tau_min, tau_max);
            f0.push((sr / refined).clamp(cfg.fmin, cfg.fmax));
            voiced.push(true);
        }
    }

    Ok(PitchTrack {
        f0,
        voiced,
        frame_rate: sr / cfg.hop as f64,
        tracker: "yin",
    })
}

fn difference_function(segment: &[f64], window: usize, out: &mut [f64]) {
    for (tau, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..window {
            let d = segment[i] - segment[i + tau];
            acc += d * d;
        }
        *o = acc;
    }
}

fn cumulative_mean_normalize(diff: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut running = 0.0;
    for tau in 1..diff.len() {
        running += diff[tau];
        out[tau] = if running > 0.0 {
            diff[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
}

/// First dip below [`DIP_THRESHOLD`] (descended to its local minimum),
/// falling back to the global minimum of the search band.
fn pick_period(cmndf: &[f64], tau_min: usize, tau_max: usize) -> usize {
    let mut tau = tau_min;
    while tau <= tau_max {
        if cmndf[tau] < DIP_THRESHOLD {
            while tau < tau_max && cmndf[tau + 1] < cmndf[tau] {
                tau += 1;
            }
            return tau;
        }
        tau += 1;
    }
    (tau_min..=tau_max)
        .min_by(|&a, &b| cmndf[a].partial_cmp(&cmndf[b]).unwrap())
        .unwrap()
}

fn parabolic_refine(cmndf: &[f64], tau: usize, tau_min: usize, tau_max: usize) -> f64 {
    if tau <= tau_min || tau >= tau_max {
        return tau as f64;
    }
    let (a, b, c) = (cmndf[tau - 1], cmndf[tau], cmndf[tau + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-12 {
        return tau as f64;
    }
    let shift = 0.5 * (a - c) / denom;
    tau as f64 + shift.clamp(-1.0, 1.0)
}
