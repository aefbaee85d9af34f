use super::envelope::{autocorrelation, block_mean, hilbert_envelope, homomorphic_envelope, standardize};
use super::{HeartState, StateSequence};
use crate::dsp::{design_bandpass, Recording};
use crate::error::{PcgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    /// Rate of the envelope features the decoder runs on, Hz.
    pub feature_rate: f64,
    pub s1_mean: f64,
    pub s1_sd: f64,
    pub s2_mean: f64,
    pub s2_sd: f64,
    pub systole_sd: f64,
    pub min_bpm: f64,
    pub max_bpm: f64,
    /// Duration bounds are mean +/- this many standard deviations.
    pub bound_sds: f64,
    /// Slope of the logistic emission on the normalized envelope.
    pub emission_gain: f64,
    /// Envelope level (in standard deviations) where sound and silence are equally likely.
    pub emission_center: f64,
    /// Return an all-diastole path for silent input instead of an error.
    pub allow_empty: bool,
    /// Band kept before the envelopes are taken, Hz. Suppresses murmur energy above the heart sounds.
    pub band: Option<(f64, f64)>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            feature_rate: 50.0,
            s1_mean: 0.122,
            s1_sd: 0.030,
            s2_mean: 0.092,
            s2_sd: 0.030,
            systole_sd: 0.025,
            min_bpm: 30.0,
            max_bpm: 200.0,
            bound_sds: 3.0,
            emission_gain: 3.0,
            emission_center: 0.0,
            allow_empty: false,
            band: Some((25.0, 150.0)),
        }
    }
}

/// Gaussian duration prior in feature frames, truncated to `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationBounds {
    pub mean: f64,
    pub sd: f64,
    pub min: usize,
    pub max: usize,
}

impl DurationBounds {
    fn new(mean_s: f64, sd_s: f64, frame_rate: f64, k: f64) -> Self {
        let mean = (mean_s * frame_rate).max(1.0);
        let sd = (sd_s * frame_rate).max(0.5);
        let min = ((mean - k * sd).round() as i64).max(1) as usize;
        let max = ((mean + k * sd).round() as usize).max(min);
        DurationBounds { mean, sd, min, max }
    }

    fn log_prob(&self, d: usize) -> f64 {
        let z = (d as f64 - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub states: StateSequence,
    /// Bounds per state, indexed by `HeartState::index`, in feature frames.
    pub bounds: [DurationBounds; 4],
    /// Samples per feature frame.
    pub frame_step: usize,
    pub heart_rate_bpm: f64,
    /// Estimated S1-onset to S2-onset interval, seconds.
    pub systolic_interval: f64,
}

pub fn segment(rec: &Recording, cfg: &SegmentConfig) -> Result<StateSequence> {
    segment_detailed(rec, cfg).map(|s| s.states)
}

fn argmax_in(r: &[f64], lo: usize, hi: usize) -> Option<usize> {
    (lo..=hi.min(r.len().saturating_sub(1))).max_by(|&a, &b| r[a].total_cmp(&r[b]))
}

pub fn segment_detailed(rec: &Recording, cfg: &SegmentConfig) -> Result<Segmentation> {
    rec.validate()?;
    let step = ((rec.rate / cfg.feature_rate).round() as usize).max(1);
    let fr = rec.rate / step as f64;

    let filtered;
    let samples = match cfg.band {
        Some((lo, hi)) => {
            // zero-phase: filter, then undo the N/2 delay
            let order = (((0.1 * rec.rate) as usize) / 2 * 2).max(2);
            let f = design_bandpass(lo, hi, rec.rate, order)?;
            let half = order / 2;
            let mut padded = rec.samples.clone();
            padded.extend(std::iter::repeat_n(0.0, half));
            filtered = f.apply(&padded)[half..].to_vec();
            &filtered
        }
        None => &rec.samples,
    };
    let hilbert = hilbert_envelope(samples);
    let homo = homomorphic_envelope(&hilbert, rec.rate);
    let homo_f = block_mean(&homo, step);
    let hilb_f = block_mean(&hilbert, step);

    let silent = || -> Result<Segmentation> {
        if cfg.allow_empty {
            Ok(Segmentation {
                states: StateSequence {
                    labels: vec![HeartState::Diastole; rec.samples.len()],
                    rate: rec.rate,
                },
                bounds: [DurationBounds::new(1.0, 0.1, fr, cfg.bound_sds); 4],
                frame_step: step,
                heart_rate_bpm: 0.0,
                systolic_interval: 0.0,
            })
        } else {
            Err(PcgError::NoCycles("recording has no envelope variation".into()))
        }
    };
    let (Some(zh), Some(zb)) = (standardize(&homo_f), standardize(&hilb_f)) else {
        return silent();
    };
    let feature: Vec<f64> = zh.iter().zip(&zb).map(|(a, b)| 0.5 * (a + b)).collect();

    // heart rate from the strongest autocorrelation peak in the allowed range
    let lag_lo = ((60.0 / cfg.max_bpm) * fr).floor() as usize;
    let lag_hi = ((60.0 / cfg.min_bpm) * fr).ceil() as usize;
    let ac = autocorrelation(&homo_f, lag_hi);
    let cycle_lag = argmax_in(&ac, lag_lo.max(1), lag_hi)
        .ok_or_else(|| PcgError::NoCycles("recording shorter than one heart cycle".into()))?;
    // the strongest peak can sit on twice the true period; the half-period
    // peak is decoded as a second hypothesis
    let mut lags = vec![cycle_lag];
    let (h_lo, h_hi) = ((0.4 * cycle_lag as f64) as usize, (0.6 * cycle_lag as f64).ceil() as usize);
    if let Some(h) = argmax_in(&ac, h_lo.max(lag_lo).max(1), h_hi) {
        if h >= lag_lo && h > h_lo && h < h_hi && ac[h] > 0.0 {
            lags.push(h);
        }
    }

    let k = cfg.bound_sds;
    let mut best: Option<(f64, Vec<HeartState>, [DurationBounds; 4], f64, f64)> = None;
    for lag in lags {
        let cycle = lag as f64 / fr;
        let sys_lo = (0.2 * fr).round() as usize;
        let sys_hi = ((cycle / 2.0) * fr).round() as usize;
        let systolic_interval = argmax_in(&ac, sys_lo, sys_hi.max(sys_lo)).unwrap_or(sys_lo) as f64 / fr;

        let systole_mean = (systolic_interval - cfg.s1_mean).max(1.0 / fr);
        let diastole_mean = (cycle - systolic_interval - cfg.s2_mean).max(1.0 / fr);
        let bounds = [
            DurationBounds::new(cfg.s1_mean, cfg.s1_sd, fr, k),
            DurationBounds::new(systole_mean, cfg.systole_sd, fr, k),
            DurationBounds::new(cfg.s2_mean, cfg.s2_sd, fr, k),
            DurationBounds::new(diastole_mean, 0.07 * diastole_mean + 0.006, fr, k),
        ];
        let min_cycle: usize = bounds.iter().map(|b| b.min).sum();
        if feature.len() < min_cycle {
            if best.is_none() && lag == cycle_lag {
                return Err(PcgError::NoCycles(format!(
                    "{} feature frames is shorter than one minimal cycle ({min_cycle})",
                    feature.len()
                )));
            }
            continue;
        }
        let (path, fit) = decode(&feature, &bounds, cfg);
        if best.as_ref().is_none_or(|b| fit > b.0) {
            best = Some((fit, path, bounds, cycle, systolic_interval));
        }
    }
    let (_, frames, bounds, cycle, systolic_interval) = best.expect("first hypothesis always decodes");

    let mut labels = Vec::with_capacity(rec.samples.len());
    for (t, &s) in frames.iter().enumerate() {
        let end = ((t + 1) * step).min(rec.samples.len());
        labels.extend(std::iter::repeat_n(s, end - t * step));
    }
    Ok(Segmentation {
        states: StateSequence {
            labels,
            rate: rec.rate,
        },
        bounds,
        frame_step: step,
        heart_rate_bpm: 60.0 / cycle,
        systolic_interval,
    })
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[derive(Clone, Copy)]
struct Back {
    duration: usize,
    from_start: bool,
}

/// Explicit-duration Viterbi over the cyclic four-state model.
///
/// The first and last runs may be truncated by the recording edges; they are
/// scored on emissions only and need not meet the minimum duration.
/// Returns the path and its emission log-likelihood.
fn decode(feature: &[f64], bounds: &[DurationBounds; 4], cfg: &SegmentConfig) -> (Vec<HeartState>, f64) {
    let t_len = feature.len();
    // cumulative emission log-likelihoods per state
    let mut cum = vec![vec![0.0; t_len + 1]; 4];
    for (t, &f) in feature.iter().enumerate() {
        let a = cfg.emission_gain * (f - cfg.emission_center);
        let sound = log_sigmoid(a);
        let quiet = log_sigmoid(-a);
        for (j, c) in cum.iter_mut().enumerate() {
            let e = if j % 2 == 0 { sound } else { quiet };
            c[t + 1] = c[t] + e;
        }
    }
    let emis = |j: usize, a: usize, b: usize| cum[j][b] - cum[j][a];
    let prev = |j: usize| (j + 3) % 4;

    let mut delta = vec![[f64::NEG_INFINITY; 4]; t_len + 1];
    let mut back = vec![[Back { duration: 0, from_start: true }; 4]; t_len + 1];
    for t in 1..=t_len {
        for j in 0..4 {
            let b = &bounds[j];
            let mut best = f64::NEG_INFINITY;
            let mut arg = Back { duration: 0, from_start: true };
            if t <= b.max {
                best = emis(j, 0, t);
                arg = Back { duration: t, from_start: true };
            }
            for d in b.min..=b.max.min(t - 1) {
                let p = delta[t - d][prev(j)];
                if p == f64::NEG_INFINITY {
                    continue;
                }
                let score = p + b.log_prob(d) + emis(j, t - d, t);
                if score > best {
                    best = score;
                    arg = Back { duration: d, from_start: false };
                }
            }
            delta[t][j] = best;
            back[t][j] = arg;
        }
    }

    // last run: truncated, scored on emissions only
    let mut best = (f64::NEG_INFINITY, 0, Back { duration: 0, from_start: true });
    for j in 0..4 {
        for d in 1..=bounds[j].max.min(t_len) {
            let (score, from_start) = if d == t_len {
                (emis(j, 0, t_len), true)
            } else {
                (delta[t_len - d][prev(j)] + emis(j, t_len - d, t_len), false)
            };
            if score > best.0 {
                best = (score, j, Back { duration: d, from_start });
            }
        }
    }

    let mut path = vec![HeartState::S1; t_len];
    let (_, mut j, mut link) = best;
    let mut t = t_len;
    loop {
        let start = t - link.duration;
        for s in &mut path[start..t] {
            *s = HeartState::ALL[j];
        }
        if link.from_start {
            break;
        }
        t = start;
        j = prev(j);
        link = back[t][j];
    }
    let fit = path.iter().enumerate().map(|(t, s)| emis(s.index(), t, t + 1)).sum();
    (path, fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_no_cycles_unless_allowed() {
        let rec = Recording::new(vec![0.0; 5000], 1000.0).unwrap();
        assert!(matches!(
            segment(&rec, &SegmentConfig::default()),
            Err(PcgError::NoCycles(_))
        ));
        let cfg = SegmentConfig {
            allow_empty: true,
            ..SegmentConfig::default()
        };
        let states = segment(&rec, &cfg).unwrap();
        assert!(states.s1_onsets().is_empty());
    }

    #[test]
    fn decoder_respects_bounds_on_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let feature: Vec<f64> = (0..400).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fr = 50.0;
        let bounds = [
            DurationBounds::new(0.12, 0.03, fr, 3.0),
            DurationBounds::new(0.2, 0.025, fr, 3.0),
            DurationBounds::new(0.09, 0.03, fr, 3.0),
            DurationBounds::new(0.5, 0.04, fr, 3.0),
        ];
        let (path, _) = decode(&feature, &bounds, &SegmentConfig::default());
        let seq = StateSequence { labels: path, rate: fr };
        let runs = seq.runs();
        assert!(seq.is_cyclic_order());
        for r in &runs[1..runs.len() - 1] {
            let b = bounds[r.state.index()];
            assert!((b.min..=b.max).contains(&r.len()), "{r:?} {b:?}");
        }
    }
}
