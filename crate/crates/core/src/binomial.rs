//! Log-domain binomial probabilities.
//!
//! `|<J,m|z>|^2` is a binomial law over `k = J + m` with `n = 2J` trials and
//! success probability `|z|^2 / (1 + |z|^2)`. At `J` in the tens of thousands
//! both `C(n, k)` and `p^k` leave the double range long before their product
//! does, so the probability is evaluated in Loader's saddle-point form: the
//! Stirling remainders of `ln n!` plus the deviance term `bd0`, never forming
//! the large factorials themselves.

use std::f64::consts::PI;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln n! - [(n + 1/2) ln n - n + ln(2 pi)/2]` for n = 1..=15.
const STIRLING_REMAINDER: [f64; 15] = [
    0.081_061_466_795_327_258,
    0.041_340_695_955_409_294,
    0.027_677_925_684_998_339,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_192,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_770,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_530,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// Stirling-series remainder of `ln n!` for integer `n >= 1`.
pub fn stirling_remainder(n: u64) -> f64 {
    debug_assert!(n >= 1);
    if n <= 15 {
        return STIRLING_REMAINDER[(n - 1) as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `ln n!` assembled from the Stirling form; exact table below 16.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + 0.5 * LN_2PI + stirling_remainder(n)
}

/// Deviance `x ln(x / mean) + mean - x`, with `ln_mean` supplied so that
/// means below the subnormal range still work.
fn deviance(x: f64, mean: f64, ln_mean: f64) -> f64 {
    if mean > 0.0 && (x - mean).abs() < 0.1 * (x + mean) {
        let d = x - mean;
        let mut v = d / (x + mean);
        let mut s = d * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return s;
            }
            s = next;
        }
        s
    } else {
        x * (x.ln() - ln_mean) + mean - x
    }
}

/// Natural log of `C(n, k) p^k q^(n-k)` given `ln p` and `ln q` (with
/// `p + q = 1`). Returns `-inf` for impossible outcomes.
pub fn ln_binomial_pmf(k: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if ln_p == f64::NEG_INFINITY {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if ln_q == f64::NEG_INFINITY {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return n as f64 * ln_q;
    }
    if k == n {
        return n as f64 * ln_p;
    }
    let (nf, kf) = (n as f64, k as f64);
    let ln_n = nf.ln();
    let mean_k = (ln_n + ln_p).exp();
    let mean_rest = (ln_n + ln_q).exp();
    let lc = stirling_remainder(n)
        - stirling_remainder(k)
        - stirling_remainder(n - k)
        - deviance(kf, mean_k, ln_n + ln_p)
        - deviance(nf - kf, mean_rest, ln_n + ln_q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}
