//! Fitness scalar abstraction.
//!
//! Every fitness-bearing type in the crate is generic over [`Fitness`], so the
//! same engine runs on exact integer weights (`i64`) or on floating-point
//! weights (`f64`). Integer types compare exactly; floating-point types
//! compare with a relative tolerance so rounding noise cannot flip the
//! neutral-move rule of gene-pool optimal mixing.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Num, NumCast, Signed};

/// Scalar type usable as a fitness or edge weight.
pub trait Fitness: Num + NumCast + Signed + Copy + PartialOrd + Sum + Debug + Display + Send + Sync + 'static {
    /// True when arithmetic on this type is exact (integers).
    const EXACT: bool;

    /// Relative tolerance used by [`Fitness::compare`] for inexact types.
    const RELATIVE_TOLERANCE: f64;

    /// Parse a weight token from an instance file.
    fn parse_token(token: &str) -> Option<Self>;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance-aware three-way comparison of two fitness values.
    fn compare(a: Self, b: Self) -> Ordering {
        if Self::EXACT {
            return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        }
        let (x, y) = (a.to_f64_lossy(), b.to_f64_lossy());
        let scale = x.abs().max(y.abs()).max(1.0);
        if (x - y).abs() <= Self::RELATIVE_TOLERANCE * scale {
            Ordering::Equal
        } else if x > y {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    fn fitness_eq(a: Self, b: Self) -> bool {
        Self::compare(a, b) == Ordering::Equal
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

macro_rules! exact_fitness {
    ($($t:ty),*) => {$(
        impl Fitness for $t {
            const EXACT: bool = true;
            const RELATIVE_TOLERANCE: f64 = 0.0;

            fn parse_token(token: &str) -> Option<Self> {
                token.parse().ok()
            }
        }
    )*};
}

exact_fitness!(i32, i64);

impl Fitness for f64 {
    const EXACT: bool = false;
    const RELATIVE_TOLERANCE: f64 = 1e-9;

    fn parse_token(token: &str) -> Option<Self> {
        token.parse().ok().filter(|w: &f64| w.is_finite())
    }
}

impl Fitness for f32 {
    const EXACT: bool = false;
    // 1e-9 is below f32 resolution.
    const RELATIVE_TOLERANCE: f64 = 1e-6;

    fn parse_token(token: &str) -> Option<Self> {
        token.parse().ok().filter(|w: &f32| w.is_finite())
    }
}
