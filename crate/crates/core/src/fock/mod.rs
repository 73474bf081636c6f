//! Few-photon states written as polynomials in creation operators.

mod map;
mod mode;
mod monomial;
mod state;

pub use map::{apply_mode_map, ModeMap};
pub use mode::{path_label, FreqBand, Mode, Oam, PathLabel, Polarization, TimeTag, MAX_PATH_LEN};
pub use monomial::{normal_form, Monomial, MAX_PHOTONS};
pub use state::{Image, PhotonState, MAX_MODES, PRUNE_THRESHOLD};
