//! Special functions and rank tests against independent references.

#![allow(clippy::excessive_precision)] // 40-digit reference values kept verbatim

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use supplygnn::stats::{
    chi_square_sf, kruskal_wallis, mann_whitney_exact_p, mann_whitney_u, mann_whitney_u_with, normal_sf, MwuMethod,
    SampleGroup,
};

fn g(v: &[f64]) -> SampleGroup {
    SampleGroup::new("g", v.to_vec()).unwrap()
}

#[test]
fn chi_square_tail_matches_statrs() {
    for df in 1..=12 {
        let dist = ChiSquared::new(df as f64).unwrap();
        for k in 1..400 {
            let x = k as f64 * 0.15;
            let ours = chi_square_sf(x, df as f64);
            let theirs = dist.sf(x);
            assert!(
                (ours - theirs).abs() <= 1e-12 + 1e-9 * theirs,
                "df {df} x {x}: {ours} vs {theirs}"
            );
        }
    }
}

#[test]
fn normal_tail_matches_statrs() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for k in -800..=800 {
        let z = k as f64 * 0.01;
        let (ours, theirs) = (normal_sf(z), n.sf(z));
        // statrs' erfc is good to ~1e-10; the high-precision table below is tighter
        assert!(
            (ours - theirs).abs() <= 1e-9 * theirs.max(1e-300),
            "z {z}: {ours} vs {theirs}"
        );
    }
}

/// Tail values computed with 40-digit arithmetic (mpmath erfc / gammainc).
#[test]
fn tails_match_high_precision_references() {
    let normal = [
        (0.71, 0.238_852_068_089_986_72),
        (1.5, 0.066_807_201_268_858_066),
        (3.0, 0.001_349_898_031_630_094_5),
        (6.0, 9.865_876_450_376_981e-10),
        (10.0, 7.619_853_024_160_526e-24),
    ];
    for (z, want) in normal {
        assert!((normal_sf(z) - want).abs() <= 1e-13 * want, "z {z}");
    }
    let chi = [
        (3.5, 1.0, 0.061_368_829_139_402_173),
        (20.0, 3.0, 1.697_424_355_528_264_3e-4),
        (100.0, 7.0, 1.078_797_967_170_288_3e-18),
        (0.01, 4.0, 0.999_987_541_588_645_72),
    ];
    for (x, df, want) in chi {
        assert!((chi_square_sf(x, df) - want).abs() <= 1e-13 * want, "x {x} df {df}");
    }
}

/// Number of rank subsets of size `na` from `1..=na+nb` whose U equals each
/// value, by the recurrence f(na, nb, u) = f(na-1, nb, u-nb) + f(na, nb-1, u).
fn u_counts(na: usize, nb: usize) -> Vec<f64> {
    let max = na * nb;
    let mut memo = vec![vec![Vec::<f64>::new(); nb + 1]; na + 1];
    for a in 0..=na {
        for b in 0..=nb {
            let mut f = vec![0.0; a * b + 1];
            if a == 0 || b == 0 {
                f[0] = 1.0;
            } else {
                for (u, slot) in f.iter_mut().enumerate() {
                    let take = if u >= b {
                        memo[a - 1][b].get(u - b).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    let skip = memo[a][b - 1].get(u).copied().unwrap_or(0.0);
                    *slot = take + skip;
                }
            }
            memo[a][b] = f;
        }
    }
    let out = memo[na][nb].clone();
    assert_eq!(out.len(), max + 1);
    out
}

#[test]
fn exact_enumeration_matches_recurrence() {
    for na in 1..=8 {
        for nb in 1..=8 {
            let counts = u_counts(na, nb);
            let total: f64 = counts.iter().sum();
            for u in 0..=na * nb {
                let lo = u.min(na * nb - u);
                let tail: f64 = counts[..=lo].iter().sum();
                let expected = (2.0 * tail / total).min(1.0);
                let got = mann_whitney_exact_p(na, nb, u as f64).unwrap();
                assert!((got - expected).abs() < 1e-12, "na {na} nb {nb} u {u}");
            }
        }
    }
}

#[test]
fn normal_approximation_matches_hand_formula() {
    let a = [1.0, 2.0, 2.0, 3.0, 5.0, 8.0, 8.0, 9.0, 11.0, 12.0];
    let b = [2.0, 4.0, 6.0, 7.0, 8.0, 10.0, 13.0, 14.0, 15.0, 15.0, 16.0];
    let r = mann_whitney_u(&g(&a), &g(&b)).unwrap();
    assert!(!r.exact);
    // direct U and tie-corrected variance
    let mut u = 0.0;
    for x in &a {
        for y in &b {
            u += if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    // ties in the pooled sample: 2 (x3: 2,2,2), 8 (x3), 15 (x2)
    let tie = (27.0 - 3.0) + (27.0 - 3.0) + (8.0 - 2.0);
    let var = na * nb / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
    let z = ((u - na * nb / 2.0).abs() - 0.5) / var.sqrt();
    let p = 2.0 * Normal::new(0.0, 1.0).unwrap().sf(z);
    assert_eq!(r.u_a, u);
    assert!((r.result.p_value - p).abs() < 1e-9);
}

#[test]
fn kruskal_wallis_reference_values() {
    let r = kruskal_wallis(&[g(&[1.0, 2.0]), g(&[3.0, 4.0]), g(&[5.0, 6.0])]).unwrap();
    assert!((r.statistic - 32.0 / 7.0).abs() < 1e-9);
    assert!((r.p_value - (-16.0f64 / 7.0).exp()).abs() < 1e-9);

    // tie-corrected: ranks by hand
    let groups = [g(&[1.0, 1.0, 2.0]), g(&[2.0, 3.0, 4.0]), g(&[4.0, 5.0, 6.0, 6.0])];
    // pooled ranks: 1,1 -> 1.5; 2,2 -> 3.5; 3 -> 5; 4,4 -> 6.5; 5 -> 8; 6,6 -> 9.5
    let sums = [1.5 + 1.5 + 3.5, 3.5 + 5.0 + 6.5, 6.5 + 8.0 + 9.5 + 9.5];
    let sizes = [3.0, 3.0, 4.0];
    let n: f64 = 10.0;
    let h0 = 12.0 / (n * (n + 1.0)) * sums.iter().zip(&sizes).map(|(s, k)| s * s / k).sum::<f64>() - 3.0 * (n + 1.0);
    let c = 1.0 - 4.0 * 6.0 / (n.powi(3) - n);
    let r = kruskal_wallis(&groups).unwrap();
    assert!((r.statistic - h0 / c).abs() < 1e-12);
    assert!((r.p_value - ChiSquared::new(2.0).unwrap().sf(h0 / c)).abs() < 1e-12);
}

#[test]
fn auto_method_switches_at_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
    let small = mann_whitney_u(&g(&draw(&mut rng, 8)), &g(&draw(&mut rng, 8))).unwrap();
    assert!(small.exact);
    let large = mann_whitney_u(&g(&draw(&mut rng, 9)), &g(&draw(&mut rng, 8))).unwrap();
    assert!(!large.exact);
    let tied = mann_whitney_u(&g(&[1.0, 1.0, 2.0]), &g(&[3.0, 4.0])).unwrap();
    assert!(!tied.exact);
    assert!(mann_whitney_u_with(&g(&[1.0, 1.0]), &g(&[2.0]), MwuMethod::Exact).is_err());
}
