use pcgkit::corpus::synth::{synth_pcg, Murmur, SynthConfig};
use pcgkit::dsp::{remove_spikes, resample};
use pcgkit::segmentation::{segment, segment_detailed, HeartState, SegmentConfig, StateSequence};

fn conditioned(cfg: &SynthConfig) -> (pcgkit::dsp::Recording, StateSequence) {
    let s = synth_pcg(cfg).unwrap();
    let rec = remove_spikes(&resample(&s.recording, 1000.0).unwrap());
    // ground truth at 1 kHz
    let factor = s.recording.rate / 1000.0;
    let labels = (0..rec.samples.len())
        .map(|i| s.states.labels[((i as f64 * factor) as usize).min(s.states.labels.len() - 1)])
        .collect();
    (rec, StateSequence { labels, rate: 1000.0 })
}

fn hits(truth: &[usize], found: &[usize], tol: usize) -> usize {
    truth
        .iter()
        .filter(|&&t| found.iter().any(|&f| f.abs_diff(t) <= tol))
        .count()
}

#[test]
fn sixty_bpm_clean() {
    let cfg = SynthConfig { duration: 10.0, ..SynthConfig::default() };
    let (rec, truth) = conditioned(&cfg);
    let states = segment(&rec, &SegmentConfig::default()).unwrap();
    let s1 = states.s1_onsets();
    let cycles = s1.len().saturating_sub(1);
    assert!((9..=10).contains(&cycles), "{cycles} cycles, onsets {s1:?}");
    for st in [HeartState::S1, HeartState::S2] {
        let t = truth.onsets(st);
        let f = states.onsets(st);
        assert_eq!(hits(&t, &f, 50), t.len(), "{st:?}: truth {t:?} found {f:?}");
    }
}

#[test]
fn fast_rate_cycle_duration() {
    let cfg = SynthConfig { bpm: 120.0, duration: 10.0, seed: 3, ..SynthConfig::default() };
    let (rec, _) = conditioned(&cfg);
    let seg = segment_detailed(&rec, &SegmentConfig::default()).unwrap();
    let s1 = seg.states.s1_onsets();
    let durations: Vec<f64> = s1.windows(2).map(|w| (w[1] - w[0]) as f64 / 1000.0).collect();
    let mean = durations.iter().sum::<f64>() / durations.len() as f64;
    assert!((mean - 0.5).abs() <= 0.05, "mean {mean}, hr {}", seg.heart_rate_bpm);
}

#[test]
fn murmur_does_not_break_segmentation() {
    let cfg = SynthConfig {
        bpm: 75.0,
        murmur: Murmur::SevereHolosystolic,
        snr_db: 15.0,
        seed: 4,
        ..SynthConfig::default()
    };
    let (rec, truth) = conditioned(&cfg);
    let states = segment(&rec, &SegmentConfig::default()).unwrap();
    let t = truth.onsets(HeartState::S1);
    assert!(hits(&t, &states.s1_onsets(), 50) as f64 >= 0.9 * t.len() as f64);
}

#[test]
fn deterministic_and_bounded() {
    let cfg = SynthConfig { bpm: 90.0, snr_db: 10.0, seed: 8, ..SynthConfig::default() };
    let (rec, _) = conditioned(&cfg);
    let a = segment_detailed(&rec, &SegmentConfig::default()).unwrap();
    let b = segment_detailed(&rec, &SegmentConfig::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.states.is_cyclic_order());
    let runs = a.states.runs();
    for r in &runs[1..runs.len() - 1] {
        let bd = a.bounds[r.state.index()];
        let frames = r.len() / a.frame_step;
        assert_eq!(r.len() % a.frame_step, 0);
        assert!((bd.min..=bd.max).contains(&frames), "{r:?} {bd:?}");
    }
}
