//! Shared fixtures: synthetic tone-complex corpora with manifests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use ppt_core::corpus::{save_manifest, Manifest, Split, UtteranceRecord};
use ppt_core::dsp::write_wav_i16;

pub const RATE: u32 = 16000;

/// Harmonic stack at a fundamental; per-class timbres for the synthetic
/// corpus come from the harmonic amplitude rolloff.
pub fn tone_complex(f0: f64, harmonic_amps: &[f64], rate: u32, n: usize) -> Vec<f64> {
    let norm: f64 = harmonic_amps.iter().sum();
    (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            harmonic_amps
                .iter()
                .enumerate()
                .map(|(h, &a)| a * (2.0 * std::f64::consts::PI * f0 * (h + 1) as f64 * t).sin())
                .sum::<f64>()
                * 0.6
                / norm
        })
        .collect()
}

pub struct DeskCorpus {
    pub audio_dir: PathBuf,
    pub manifest_path: PathBuf,
    /// Class label per utterance, aligned with `ids`.
    pub classes: Vec<usize>,
    pub ids: Vec<String>,
}

/// Three spectral classes at distinct fundamentals, `per_class`
/// utterances each, durations cycling between 1 and 3 seconds.
pub fn build_desk_corpus(root: &Path, per_class: usize) -> DeskCorpus {
    let audio_dir = root.join("audio");
    std::fs::create_dir_all(&audio_dir).unwrap();

    let class_specs: [(f64, &[f64]); 3] = [
        (155.0, &[1.0, 0.6, 0.3]),
        (285.0, &[1.0, 0.2]),
        (440.0, &[0.5, 1.0, 0.8, 0.2]),
    ];

    let mut records = Vec::new();
    let mut classes = Vec::new();
    let mut ids = Vec::new();
    for (class, &(f0, amps)) in class_specs.iter().enumerate() {
        for u in 0..per_class {
            let id = format!("c{class}_u{u:03}");
            let secs = 1.0 + (u % 5) as f64 * 0.5;
            let n = (secs * RATE as f64) as usize;
            let detune = (u % 3) as f64 - 1.0;
            let samples = tone_complex(f0 + detune, amps, RATE, n);
            let path = audio_dir.join(format!("{id}.wav"));
            write_wav_i16(&path, &samples, RATE).unwrap();

            records.push(UtteranceRecord {
                id: id.clone(),
                speaker: format!("spk_{class}_{}", u % 4),
                audio_path: path.to_string_lossy().into_owned(),
                duration_sec: secs,
                has_pitch: true,
                split: Split::Train,
            });
            classes.push(class);
            ids.push(id);
        }
    }

    let manifest_path = root.join("manifest.jsonl");
    save_manifest(&Manifest::new(records), &manifest_path).unwrap();
    DeskCorpus {
        audio_dir,
        manifest_path,
        classes,
        ids,
    }
}

/// Invocation of the compiled `ppt` binary.
pub fn ppt() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ppt"));
    cmd.env_remove("PPT_SEED");
    cmd
}

pub fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("failed to spawn ppt");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

pub fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output()
        .expect("failed to spawn ppt")
        .status
        .code()
        .expect("process killed by signal")
}
