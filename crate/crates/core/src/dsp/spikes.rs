use crate::dsp::Recording;

const WINDOW_SECONDS: f64 = 0.5;
const SPIKE_RATIO: f64 = 3.0;

fn window_maa(x: &[f64], win: usize) -> Vec<f64> {
    x.chunks(win)
        .map(|w| w.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Iterative spike suppression over 500 ms windows.
///
/// While the loudest window's maximum absolute amplitude exceeds three times
/// the median over windows, the peak of that window is located and the samples
/// between the zero crossings bracketing it are set to zero.
pub fn remove_spikes(rec: &Recording) -> Recording {
    let win = ((WINDOW_SECONDS * rec.rate).round() as usize).max(1);
    let mut x = rec.samples.clone();
    // every pass zeroes at least the current peak sample
    for _ in 0..x.len() {
        let maa = window_maa(&x, win);
        let med = median(&maa);
        let (worst, &worst_maa) = maa
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one window");
        if worst_maa <= SPIKE_RATIO * med || worst_maa == 0.0 {
            break;
        }
        let start = worst * win;
        let end = (start + win).min(x.len());
        let peak = start
            + x[start..end]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .unwrap();
        // zero crossings: sign change between consecutive samples, searched within the window
        let mut lo = peak;
        while lo > start && x[lo - 1].signum() == x[peak].signum() && x[lo - 1] != 0.0 {
            lo -= 1;
        }
        let mut hi = peak;
        while hi + 1 < end && x[hi + 1].signum() == x[peak].signum() && x[hi + 1] != 0.0 {
            hi += 1;
        }
        for v in &mut x[lo..=hi] {
            *v = 0.0;
        }
    }
    rec.derive(x, rec.rate)
}
