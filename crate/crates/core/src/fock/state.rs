use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::mode::Mode;
use super::monomial::{ModeVec, Monomial, MAX_PHOTONS};
use crate::error::{Error, Result};

/// Amplitudes at or below this magnitude are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Largest number of distinct modes a state may occupy.
pub const MAX_MODES: usize = 32;

/// Image of one creation operator under a substitution: a list of
/// `(mode, coefficient)` pairs. An empty image annihilates the term.
pub type Image = SmallVec<[(Mode, Complex64); 4]>;

/// A superposition of creation-operator monomials acting on vacuum.
///
/// Coefficients multiply operator products, so the physical probability of a
/// term is `|c|² · Π n_m!`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhotonState {
    terms: Accumulator,
}

type Accumulator = FxHashMap<Monomial, Complex64>;

fn accumulate(terms: &mut Accumulator, key: Monomial, amp: Complex64) {
    *terms.entry(key).or_default() += amp;
}

impl PhotonState {
    /// The zero vector (no terms).
    pub fn empty() -> Self {
        PhotonState::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Complex64)>>(terms: I) -> Self {
        let mut map = Accumulator::default();
        for (mono, amp) in terms {
            accumulate(&mut map, mono, amp);
        }
        PhotonState { terms: map }.pruned()
    }

    /// One monomial with the given coefficient.
    pub fn monomial<I: IntoIterator<Item = Mode>>(modes: I, amp: Complex64) -> Result<Self> {
        Ok(PhotonState::from_terms([(Monomial::new(modes)?, amp)]))
    }

    /// Convenience for real-coefficient literals: `[(amp, [modes...]), ...]`.
    pub fn from_real<I, M>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, M)>,
        M: IntoIterator<Item = Mode>,
    {
        let mut out = Vec::new();
        for (amp, modes) in terms {
            out.push((Monomial::new(modes)?, Complex64::new(amp, 0.0)));
        }
        Ok(PhotonState::from_terms(out))
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, amp| amp.norm() > PRUNE_THRESHOLD);
        self
    }

    /// Terms in an unspecified order that is nonetheless reproducible: the
    /// same sequence of operations always yields the same order.
    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    /// Terms sorted by monomial.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &Complex64)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, mono: &Monomial) -> Complex64 {
        self.terms.get(mono).copied().unwrap_or_default()
    }

    pub fn add(&self, other: &PhotonState) -> PhotonState {
        let mut terms = self.terms.clone();
        for (mono, amp) in &other.terms {
            accumulate(&mut terms, mono.clone(), *amp);
        }
        PhotonState { terms }.pruned()
    }

    pub fn sub(&self, other: &PhotonState) -> PhotonState {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> PhotonState {
        PhotonState {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * z)).collect(),
        }
        .pruned()
    }

    pub fn scale_real(&self, x: f64) -> PhotonState {
        self.scale(Complex64::new(x, 0.0))
    }

    /// Operator product of two states; creation operators commute so this is
    /// symmetric.
    pub fn tensor(&self, other: &PhotonState) -> Result<PhotonState> {
        let mut terms = Accumulator::default();
        for (m1, a1) in &self.terms {
            for (m2, a2) in &other.terms {
                accumulate(&mut terms, m1.product(m2)?, a1 * a2);
            }
        }
        let out = PhotonState { terms }.pruned();
        out.check_mode_capacity()?;
        Ok(out)
    }

    /// `⟨self|other⟩`, antilinear in the first argument.
    pub fn inner_product(&self, other: &PhotonState) -> Complex64 {
        let (small, large, flip) = if self.terms.len() <= other.terms.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (mono, a) in &small.terms {
            if let Some(b) = large.terms.get(mono) {
                let (s, t) = if flip { (b, a) } else { (a, b) };
                acc += s.conj() * t * mono.weight();
            }
        }
        acc
    }

    pub fn squared_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, a)| a.norm_sqr() * m.weight())
            .sum()
    }

    /// `‖self − other‖²` under the bosonic inner product.
    pub fn distance_squared(&self, other: &PhotonState) -> f64 {
        self.sub(other).squared_norm()
    }

    /// Distinct modes appearing anywhere in the state.
    pub fn support(&self) -> BTreeSet<Mode> {
        self.terms
            .keys()
            .flat_map(|m| m.modes().iter().copied())
            .collect()
    }

    pub fn check_mode_capacity(&self) -> Result<()> {
        let mut seen: SmallVec<[Mode; MAX_MODES]> = SmallVec::new();
        for mono in self.terms.keys() {
            for mode in mono.modes() {
                if !seen.contains(mode) {
                    if seen.len() == MAX_MODES {
                        return Err(Error::Capacity(format!(
                            "state occupies more than {MAX_MODES} distinct modes"
                        )));
                    }
                    seen.push(*mode);
                }
            }
        }
        Ok(())
    }

    /// Photon numbers present across the terms.
    pub fn photon_numbers(&self) -> BTreeSet<usize> {
        self.terms.keys().map(Monomial::photon_number).collect()
    }

    /// Replaces every creation operator by its image and expands the
    /// products. `image` returns `None` to leave a mode untouched.
    pub fn substitute<F>(&self, mut image: F) -> Result<PhotonState>
    where
        F: FnMut(&Mode) -> Result<Option<Image>>,
    {
        // Work on small integer mode indices; each distinct mode's image is
        // looked up once.
        let mut interner = Interner::default();
        // Untouched modes get the identity image.
        let mut images: Vec<Option<IndexImage>> = Vec::new();
        let mut out: FxHashMap<Key, Complex64> = FxHashMap::default();
        for (mono, amp) in &self.terms {
            let mut slots: SmallVec<[u8; MAX_PHOTONS]> = SmallVec::new();
            for mode in mono.modes() {
                let i = interner.intern(*mode)?;
                if images.get(usize::from(i)).is_none_or(Option::is_none) {
                    let mapped = match image(mode)? {
                        Some(img) => img
                            .into_iter()
                            .map(|(m, c)| Ok((interner.intern(m)?, c)))
                            .collect::<Result<IndexImage>>()?,
                        None => smallvec::smallvec![(i, Complex64::new(1.0, 0.0))],
                    };
                    if images.len() <= usize::from(i) {
                        images.resize(usize::from(i) + 1, None);
                    }
                    images[usize::from(i)] = Some(mapped);
                }
                slots.push(i);
            }
            let factors: SmallVec<[&IndexImage; MAX_PHOTONS]> = slots
                .iter()
                .filter_map(|&i| images[usize::from(i)].as_ref())
                .collect();
            if factors.iter().any(|f| f.is_empty()) {
                continue;
            }
            expand_product(&factors, *amp, &mut out);
        }
        let mut terms = Accumulator::default();
        terms.reserve(out.len());
        for ((len, idx), amp) in out {
            if amp.norm() <= PRUNE_THRESHOLD {
                continue;
            }
            let mut modes: ModeVec = idx[..usize::from(len)]
                .iter()
                .map(|&i| interner.modes[usize::from(i)])
                .collect();
            modes.sort_unstable();
            terms.insert(Monomial::from_sorted(modes), amp);
        }
        Ok(PhotonState { terms })
    }

    /// Rewrites whole monomials. The callback returns the replacement terms
    /// (each with a multiplicative factor) for a given monomial.
    pub fn rewrite<F>(&self, mut f: F) -> Result<PhotonState>
    where
        F: FnMut(&Monomial) -> Result<Vec<(Monomial, Complex64)>>,
    {
        let mut out = Accumulator::default();
        for (mono, amp) in &self.terms {
            for (image, factor) in f(mono)? {
                accumulate(&mut out, image, amp * factor);
            }
        }
        Ok(PhotonState { terms: out }.pruned())
    }
}

type IndexImage = SmallVec<[(u8, Complex64); 4]>;

/// Photon count and sorted mode indices.
type Key = (u8, [u8; MAX_PHOTONS]);

#[derive(Default)]
struct Interner {
    modes: Vec<Mode>,
    index: FxHashMap<Mode, u8>,
}

impl Interner {
    fn intern(&mut self, mode: Mode) -> Result<u8> {
        if let Some(&i) = self.index.get(&mode) {
            return Ok(i);
        }
        let i = u8::try_from(self.modes.len())
            .map_err(|_| Error::Capacity("too many distinct modes in one substitution".into()))?;
        self.modes.push(mode);
        self.index.insert(mode, i);
        Ok(i)
    }
}

/// Odometer walk over one choice per factor.
fn expand_product(images: &[&IndexImage], amp: Complex64, out: &mut FxHashMap<Key, Complex64>) {
    let k = images.len();
    let mut idx = [0usize; MAX_PHOTONS];
    loop {
        let mut coeff = amp;
        let mut key = [u8::MAX; MAX_PHOTONS];
        for p in 0..k {
            let (mode, c) = images[p][idx[p]];
            coeff *= c;
            key[p] = mode;
        }
        key[..k].sort_unstable();
        *out.entry((k as u8, key)).or_default() += coeff;

        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < images[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

impl fmt::Display for PhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (mono, amp)) in self.sorted_terms().into_iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "({:+.6}{:+.6}i) {}", amp.re, amp.im, mono)?;
        }
        Ok(())
    }
}
