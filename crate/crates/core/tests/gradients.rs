mod support;

use support::grad_suite;

#[test]
fn every_layer_matches_finite_differences() {
    for seed in 0..5 {
        for (name, report) in grad_suite::all(seed).unwrap() {
            assert!(report.checked > 0, "{name}");
            assert!(
                report.max_rel_err < grad_suite::TOL,
                "{name} seed {seed}: {report:?}"
            );
        }
    }
}
