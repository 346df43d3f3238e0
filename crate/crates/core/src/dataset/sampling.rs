use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

/// A sampling ratio in `(0, 1]`, held as an exact fraction so that
/// `floor(r * N)` never suffers from binary rounding (`0.29 * 100` is 29).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingRatio {
    numerator: u64,
    denominator: u64,
}

impl SamplingRatio {
    pub const ONE: Self = Self { numerator: 1, denominator: 1 };
    pub const DEFAULT: Self = Self { numerator: 1, denominator: 10 };

    pub fn new(numerator: u64, denominator: u64) -> Result<Self, DatasetError> {
        if denominator == 0 || numerator == 0 || numerator > denominator {
            return Err(DatasetError::InvalidRatio(format!("{numerator}/{denominator}")));
        }
        let g = gcd(numerator, denominator);
        Ok(Self { numerator: numerator / g, denominator: denominator / g })
    }

    /// `floor(r * n)`.
    pub fn sample_size(&self, n: usize) -> usize {
        (n as u128 * self.numerator as u128 / self.denominator as u128) as usize
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for SamplingRatio {
    type Err = DatasetError;

    /// Accepts decimals (`0.1`, `1`), fractions (`1/10`) and percentages (`10%`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || DatasetError::InvalidRatio(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n = n.trim().parse().map_err(|_| invalid())?;
            let d = d.trim().parse().map_err(|_| invalid())?;
            return Self::new(n, d).map_err(|_| invalid());
        }
        let (t, extra_scale) = match t.strip_suffix('%') {
            Some(p) => (p.trim(), 100u64),
            None => (t, 1),
        };
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 18
        {
            return Err(invalid());
        }
        let scale = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| invalid())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| invalid())? };
        let numerator = int.checked_mul(scale).and_then(|v| v.checked_add(frac_v)).ok_or_else(invalid)?;
        let denominator = scale.checked_mul(extra_scale).ok_or_else(invalid)?;
        Self::new(numerator, denominator).map_err(|_| invalid())
    }
}

impl fmt::Display for SamplingRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 1 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator)
        }
    }
}

/// Chooses `floor(r * n)` distinct indices from `0..n` uniformly at random,
/// returned in ascending order. The generator is ChaCha8 seeded with `seed`,
/// so results are identical across runs and platforms.
pub fn sample_indices(n: usize, ratio: SamplingRatio, seed: u64) -> Vec<usize> {
    let k = ratio.sample_size(n);
    if k == n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!("0.1".parse::<SamplingRatio>().unwrap(), SamplingRatio::DEFAULT);
        assert_eq!("1/10".parse::<SamplingRatio>().unwrap(), SamplingRatio::DEFAULT);
        assert_eq!("10%".parse::<SamplingRatio>().unwrap(), SamplingRatio::DEFAULT);
        assert_eq!("1".parse::<SamplingRatio>().unwrap(), SamplingRatio::ONE);
        assert_eq!("1.0".parse::<SamplingRatio>().unwrap(), SamplingRatio::ONE);
        assert_eq!(".5".parse::<SamplingRatio>().unwrap(), SamplingRatio::new(1, 2).unwrap());
        for bad in ["0", "0.0", "1.5", "-0.1", "abc", "", "1/0", "2/1", "."] {
            assert!(bad.parse::<SamplingRatio>().is_err(), "{bad}");
        }
    }

    #[test]
    fn floor_is_exact() {
        let r: SamplingRatio = "0.29".parse().unwrap();
        assert_eq!(r.sample_size(100), 29);
        assert_eq!(SamplingRatio::DEFAULT.sample_size(1000), 100);
        assert_eq!(SamplingRatio::DEFAULT.sample_size(9), 0);
        assert_eq!(format!("{}", SamplingRatio::DEFAULT), "1/10");
    }

    #[test]
    fn indices_distinct_sorted_deterministic() {
        let a = sample_indices(1000, SamplingRatio::DEFAULT, 42);
        assert_eq!(a.len(), 100);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|&i| i < 1000));
        assert_eq!(a, sample_indices(1000, SamplingRatio::DEFAULT, 42));
        assert_ne!(a, sample_indices(1000, SamplingRatio::DEFAULT, 43));
        assert_eq!(sample_indices(5, SamplingRatio::ONE, 1), vec![0, 1, 2, 3, 4]);
    }
}
