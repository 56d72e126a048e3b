//! Normalization, correlation and significance.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Rescale to [0, 1]: `(x - min) / (max - min)`.
pub fn min_max_normalize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: xs.len() });
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::ConstantSeries);
    }
    Ok(xs.iter().map(|x| (x - lo) / (hi - lo)).collect())
}

fn centered(xs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = mean(xs);
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let ss = c.iter().map(|x| x * x).sum::<f64>();
    if ss == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((c, ss))
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: xs.len() });
    }
    Ok(())
}

/// Pearson product-moment correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let (xc, sx) = centered(xs)?;
    let (yc, sy) = centered(ys)?;
    let num: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
    Ok((num / libm::sqrt(sx * sy)).clamp(-1.0, 1.0))
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < 1e-15 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// P(|T| ≥ |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_tailed(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse CDF of Student's t by bisection.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-tailed p for a correlation coefficient via `t = r √((n−2)/(1−r²))`.
/// `|r| = 1` gives 0.
pub fn p_value_t(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if libm::fabs(r) >= 1.0 {
        return 0.0;
    }
    let t = r * libm::sqrt(df / (1.0 - r * r));
    student_t_two_tailed(t, df)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    TDist,
    /// Exact enumeration for n ≤ 8, otherwise `draws` random shuffles from a
    /// fixed seed.
    Permutation { draws: u64, seed: u64 },
}

impl PValueMethod {
    pub fn permutation() -> Self {
        PValueMethod::Permutation { draws: 100_000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub value: f64,
    /// Qualifying permutations and permutations examined, for the
    /// permutation method.
    pub counts: Option<(u64, u64)>,
}

/// Largest n for which every permutation is enumerated.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

fn qualifies(r: f64, r_obs: f64) -> bool {
    libm::fabs(r) >= libm::fabs(r_obs) - 1e-12
}

/// Heap's algorithm over index permutations; calls `f` once per ordering,
/// starting with the identity.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut c = alloc::vec![0usize; n];
    f(&idx);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            f(&idx);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Fraction of pairings of `ys` with `xs` whose |r| is at least the
/// observed |r|, the observed pairing included.
pub fn permutation_p_value(xs: &[f64], ys: &[f64], draws: u64, seed: u64) -> Result<PValue> {
    check_pair(xs, ys)?;
    let (xc, sx) = centered(xs)?;
    let (yc, sy) = centered(ys)?;
    let norm = libm::sqrt(sx * sy);
    let r_of = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| xc[i] * yc[j]).sum::<f64>() / norm;
    let identity: Vec<usize> = (0..xs.len()).collect();
    let r_obs = r_of(&identity);
    let (hits, total) = if xs.len() <= EXACT_PERMUTATION_MAX_N {
        let (mut hits, mut total) = (0u64, 0u64);
        for_each_permutation(xs.len(), |perm| {
            total += 1;
            if qualifies(r_of(perm), r_obs) {
                hits += 1;
            }
        });
        (hits, total)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = identity.clone();
        let mut hits = 1u64;
        for _ in 0..draws {
            perm.shuffle(&mut rng);
            if qualifies(r_of(&perm), r_obs) {
                hits += 1;
            }
        }
        (hits, draws + 1)
    };
    Ok(PValue { value: hits as f64 / total as f64, counts: Some((hits, total)) })
}

pub fn p_value(xs: &[f64], ys: &[f64], method: PValueMethod) -> Result<PValue> {
    match method {
        PValueMethod::TDist => {
            let r = pearson_r(xs, ys)?;
            Ok(PValue { value: p_value_t(r, xs.len()), counts: None })
        }
        PValueMethod::Permutation { draws, seed } => permutation_p_value(xs, ys, draws, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalize_examples() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(min_max_normalize(&[5.0, 5.0, 5.0]), Err(Error::ConstantSeries));
        assert!(min_max_normalize(&[1.0]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson_r(&xs, &xs.map(|x| 2.0 * x + 1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&xs, &xs.map(|x| -x)).unwrap() + 1.0).abs() < 1e-12);
        // Hand computation: centered x = (-1.5,-.5,.5,1.5), y = (-.5,-1.5,1.5,.5);
        // Σxy = 3, Σx² = Σy² = 5 → r = 0.6.
        assert!((pearson_r(&xs, &[2.0, 1.0, 4.0, 3.0]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(pearson_r(&xs, &[1.0, 1.0, 1.0, 1.0]), Err(Error::ConstantSeries));
        assert_eq!(pearson_r(&xs, &[1.0, 2.0]), Err(Error::LengthMismatch(4, 2)));
    }

    #[test]
    fn t_distribution_reference_values() {
        // t_{0.975, 2} = 4.302653 (standard table).
        assert!((student_t_quantile(0.975, 2.0) - 4.302652729).abs() < 1e-6);
        // df = 1 is Cauchy: P(|T| > 1) = 0.5.
        assert!((student_t_two_tailed(1.0, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(p_value_t(0.0, 10), 1.0);
        assert_eq!(p_value_t(1.0, 6), 0.0);
        let p = p_value_t(0.89, 6);
        assert!((p - 0.017).abs() < 0.001, "{p}");
    }

    #[test]
    fn permutation_exact_support() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [10.0, 20.0, 25.0, 40.0, 41.0, 90.0];
        let p = permutation_p_value(&xs, &xs, 0, 0).unwrap();
        assert_eq!(p.counts, Some((2, 720)));
        assert_eq!(p.value, 2.0 / 720.0);
        let q = permutation_p_value(&xs, &ys, 0, 0).unwrap();
        assert_eq!(q.counts.unwrap().1, 720);
    }

    #[test]
    fn zero_correlation_gives_one() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 0.0, 1.0];
        assert_eq!(pearson_r(&xs, &ys).unwrap(), 0.0);
        assert_eq!(permutation_p_value(&xs, &ys, 0, 0).unwrap().value, 1.0);
        assert_eq!(p_value(&xs, &ys, PValueMethod::TDist).unwrap().value, 1.0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64).collect();
        let a = permutation_p_value(&xs, &ys, 2000, 7).unwrap();
        let b = permutation_p_value(&xs, &ys, 2000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.unwrap().1, 2001);
    }
}
