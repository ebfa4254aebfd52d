// Temporary calibration: measured lower-tail exponents of ranked raw and
// effective channel norms for the exhaustive grouping at N = K = 4, the
// distribution of the norm-reduction factor, and the bounding-law check.

use mixsim::channel::{sample_channels, tail_exponent, tail_window_quantiles};
use mixsim::grouping::group_algorithm1;
use mixsim::streams::{StreamDomain, StreamFactory};

#[test]
#[ignore]
fn print_tail_exponents() {
    let n = 4usize;
    let k = 4usize;
    let samples = 1_000_000u64;
    let factory = StreamFactory::new(31337, StreamFactory::experiment_id("tailcal"));
    let mut h_by_rank: Vec<Vec<f64>> = vec![Vec::with_capacity(samples as usize); k];
    let mut g_by_rank: Vec<Vec<f64>> = vec![Vec::with_capacity(samples as usize); k];
    for t in 0..samples {
        let mut rng = factory.trial_rng(StreamDomain::Channels, t);
        let cs = sample_channels(n, k, &mut rng).unwrap();
        let grouping = group_algorithm1(&cs, 0.9).unwrap();
        for r in 0..k {
            let u = cs.ranked_user(r);
            h_by_rank[r].push(cs.norm_sq(u));
            g_by_rank[r].push(grouping.effective_channel(u).norm_sq());
        }
    }

    // Norm-reduction factor distribution per rank.
    for r in 0..k {
        let mut y: Vec<f64> = h_by_rank[r]
            .iter()
            .zip(&g_by_rank[r])
            .map(|(h, g)| g / h)
            .collect();
        y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| y[((y.len() as f64 * p) as usize).min(y.len() - 1)];
        println!(
            "rank {}: Y quantiles 0.1%={:.4} 1%={:.4} 10%={:.4} 50%={:.4} 90%={:.4}",
            r + 1,
            q(0.001),
            q(0.01),
            q(0.1),
            q(0.5),
            q(0.9)
        );
    }

    for (q_lo, q_hi) in [(5e-4, 2e-2), (2e-5, 1e-3), (5e-2, 3e-1)] {
        println!("== window quantiles ({}, {})", q_lo, q_hi);
        for r in 0..k {
            let hw = tail_window_quantiles(&h_by_rank[r], q_lo, q_hi);
            let gw = tail_window_quantiles(&g_by_rank[r], q_lo, q_hi);
            let he = tail_exponent(&h_by_rank[r], hw);
            let ge = tail_exponent(&g_by_rank[r], gw);
            println!(
                "rank {}: h {: >8?} (window {:.4}..{:.4})  g {: >8?} (window {:.4}..{:.4})",
                r + 1,
                he.map(|x| (x * 1000.0).round() / 1000.0),
                hw.0,
                hw.1,
                ge.map(|x| (x * 1000.0).round() / 1000.0),
                gw.0,
                gw.1,
            );
        }
    }

    // Bounding-law check: F_h(x) <= F_g(x) <= F_h(x / Y_th) on the
    // observable tail (Y_th = 0.1^3 for N_g up to 4).
    let y_th = 0.001f64;
    for r in 0..k {
        let mut h = h_by_rank[r].clone();
        let mut g = g_by_rank[r].clone();
        h.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |sorted: &[f64], x: f64| -> f64 {
            sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
        };
        let mut ok = true;
        for i in 1..=40 {
            let x = g[((g.len() / 1000) * i).min(g.len() - 1)];
            let fh = cdf(&h, x);
            let fg = cdf(&g, x);
            let fh_shift = cdf(&h, x / y_th);
            if !(fh <= fg + 1e-9 && fg <= fh_shift + 1e-9) {
                ok = false;
            }
        }
        println!("rank {}: sandwich bound holds on tail grid: {}", r + 1, ok);
    }
}
