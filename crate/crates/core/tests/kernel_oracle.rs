//! Brute-force reference for the kernel empirical-probability
//! estimator: explicitly sort candidates by (distance, self-last..
//! actually self-first, original index) per example and take the
//! weighted mean. The production path must agree bitwise on the
//! selected neighborhoods.

use probcal::cape::kernel_emp_probs;
use probcal::rng;
use rand::Rng;

fn brute_force(preds: &[f64], outcomes: &[u8], r: usize, sigma: f64) -> Vec<f64> {
    let n = preds.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut cand: Vec<(f64, bool, usize)> = (0..n)
            .map(|j| ((preds[j] - preds[i]).abs(), j != i, j))
            .collect();
        cand.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut w_sum = 0.0;
        let mut wy_sum = 0.0;
        for &(d, _, j) in cand.iter().take(r) {
            let w = (-d * d / (sigma * sigma)).exp();
            w_sum += w;
            wy_sum += w * outcomes[j] as f64;
        }
        out.push(wy_sum / w_sum);
    }
    out
}

#[test]
fn kernel_estimator_matches_brute_force_on_random_inputs() {
    let mut stream = rng::stream(11, "kernel-oracle");
    for case in 0..300 {
        let n = stream.gen_range(1..=40);
        let r = stream.gen_range(1..=n);
        let sigma = [0.01, 0.05, 0.3, 5.0][stream.gen_range(0..4)];
        // quantized predictions force heavy distance ties
        let levels = [1usize, 2, 5, 1000][stream.gen_range(0..4)];
        let preds: Vec<f64> = (0..n)
            .map(|_| (stream.gen::<f64>() * levels as f64).floor() / levels as f64)
            .collect();
        let outcomes: Vec<u8> = (0..n).map(|_| stream.gen::<bool>() as u8).collect();

        let fast = kernel_emp_probs(&preds, &outcomes, r, sigma).unwrap().0;
        let brute = brute_force(&preds, &outcomes, r, sigma);
        for (i, (a, b)) in fast.iter().zip(&brute).enumerate() {
            assert!(
                (a - b).abs() < 1e-12,
                "case {case} (n={n}, r={r}, sigma={sigma}, levels={levels}) example {i}: {a} vs {b}\npreds {preds:?}\nys {outcomes:?}"
            );
        }
    }
}
