use std::fmt;

use smallvec::SmallVec;

use super::mode::Mode;
use crate::error::{Error, Result};

/// Largest photon number a single monomial may carry.
pub const MAX_PHOTONS: usize = 8;

pub(crate) type ModeVec = SmallVec<[Mode; MAX_PHOTONS]>;

/// A product of creation operators acting on vacuum, stored as a sorted
/// multiset of modes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    modes: ModeVec,
}

/// Sorts a sequence of modes into a monomial.
pub fn normal_form<I: IntoIterator<Item = Mode>>(modes: I) -> Result<Monomial> {
    let mut modes: ModeVec = modes.into_iter().collect();
    if modes.is_empty() {
        return Err(Error::Capacity(
            "a monomial needs at least one photon".into(),
        ));
    }
    if modes.len() > MAX_PHOTONS {
        return Err(Error::Capacity(format!(
            "{} photons exceed the limit of {MAX_PHOTONS}",
            modes.len()
        )));
    }
    modes.sort_unstable();
    Ok(Monomial { modes })
}

impl Monomial {
    pub fn new<I: IntoIterator<Item = Mode>>(modes: I) -> Result<Self> {
        normal_form(modes)
    }

    /// Builds from modes already known to be sorted and within capacity.
    pub(crate) fn from_sorted(modes: ModeVec) -> Self {
        debug_assert!(modes.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(!modes.is_empty() && modes.len() <= MAX_PHOTONS);
        Monomial { modes }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn photon_number(&self) -> usize {
        self.modes.len()
    }

    /// Distinct modes paired with their occupation numbers.
    pub fn occupations(&self) -> impl Iterator<Item = (Mode, usize)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            let first = *self.modes.get(i)?;
            let start = i;
            while i < self.modes.len() && self.modes[i] == first {
                i += 1;
            }
            Some((first, i - start))
        })
    }

    /// Bosonic weight `Π n_m!`, the squared norm of the unit-coefficient
    /// monomial.
    pub fn weight(&self) -> f64 {
        self.occupations()
            .map(|(_, n)| (1..=n).product::<usize>() as f64)
            .product()
    }

    pub fn product(&self, other: &Monomial) -> Result<Monomial> {
        normal_form(self.modes.iter().chain(other.modes.iter()).copied())
    }

    pub fn contains(&self, mode: &Mode) -> bool {
        self.modes.binary_search(mode).is_ok()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (mode, n)) in self.occupations().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            if n > 1 {
                write!(f, "[{mode}]^{n}")?;
            } else {
                write!(f, "[{mode}]")?;
            }
        }
        Ok(())
    }
}
