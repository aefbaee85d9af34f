use pcgkit::corpus::synth::{synth_pcg, Murmur, SynthConfig};
use pcgkit::label::Label;
use pcgkit::pcgnet::LabeledCycle;
use pcgkit::pipeline::Preprocessor;

pub const CLASSES: [Murmur; 3] = [Murmur::None, Murmur::MildSystolic, Murmur::SevereHolosystolic];

pub fn synth_config(i: usize, murmur: Murmur, duration: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        bpm: 60.0 + (i % 7) as f64 * 5.0,
        murmur,
        snr_db: 25.0,
        duration,
        seed: seed * 1000 + i as u64,
        ..SynthConfig::default()
    }
}

/// `per_class` recordings of each severity class through the full preprocessing chain.
pub fn severity_cycles(per_class: usize, duration: f64, seed: u64) -> Vec<LabeledCycle> {
    let pre = Preprocessor::default();
    let mut out = Vec::new();
    for (c, &murmur) in CLASSES.iter().enumerate() {
        for j in 0..per_class {
            let i = c * per_class + j;
            let s = synth_pcg(&synth_config(i, murmur, duration, seed)).unwrap();
            let rec = s.recording.with_source(format!("rec{i:03}.wav"));
            for cycle in pre.cycles(&rec).unwrap() {
                out.push(LabeledCycle { cycle, label: s.label });
            }
        }
    }
    out
}

pub fn binary(data: &[LabeledCycle]) -> Vec<LabeledCycle> {
    data.iter()
        .map(|d| LabeledCycle { cycle: d.cycle.clone(), label: d.label.to_binary() })
        .collect()
}

pub fn count(data: &[LabeledCycle], label: Label) -> usize {
    data.iter().filter(|d| d.label == label).count()
}

/// `per_class` Normal and `per_class` Abnormal recordings (murmur alternating mild/severe).
pub fn binary_cycles(per_class: usize, duration: f64, seed: u64) -> Vec<LabeledCycle> {
    let pre = Preprocessor::default();
    let mut out = Vec::new();
    for i in 0..2 * per_class {
        let murmur = if i < per_class { Murmur::None } else { CLASSES[1 + i % 2] };
        let s = synth_pcg(&synth_config(i, murmur, duration, seed)).unwrap();
        let rec = s.recording.with_source(format!("bin{i:03}.wav"));
        for cycle in pre.cycles(&rec).unwrap() {
            out.push(LabeledCycle { cycle, label: s.label.to_binary() });
        }
    }
    out
}
