use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayString;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Longest path symbol a mode can carry.
pub const MAX_PATH_LEN: usize = 16;

pub type PathLabel = ArrayString<MAX_PATH_LEN>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
    Unset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Oam {
    Plus,
    Minus,
    Zero,
    Unset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeTag {
    Untagged,
    Th,
    Tv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FreqBand {
    Fundamental,
    Doubled,
}

/// A single optical mode: one creation operator's worth of labels.
///
/// The derived ordering compares path first, then polarization, OAM, time
/// tag and frequency band. Monomials are kept sorted under this ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub path: PathLabel,
    pub pol: Polarization,
    pub oam: Oam,
    pub tag: TimeTag,
    pub band: FreqBand,
}

impl Mode {
    /// Bare spatial mode with every other label unset.
    pub fn new(path: &str) -> Result<Self> {
        Ok(Mode {
            path: path_label(path)?,
            pol: Polarization::Unset,
            oam: Oam::Unset,
            tag: TimeTag::Untagged,
            band: FreqBand::Fundamental,
        })
    }

    pub fn polarized(path: &str, pol: Polarization) -> Result<Self> {
        Ok(Mode::new(path)?.with_pol(pol))
    }

    pub fn with_path(self, path: &str) -> Result<Self> {
        Ok(Mode {
            path: path_label(path)?,
            ..self
        })
    }

    pub fn with_pol(self, pol: Polarization) -> Self {
        Mode { pol, ..self }
    }

    pub fn with_oam(self, oam: Oam) -> Self {
        Mode { oam, ..self }
    }

    pub fn with_tag(self, tag: TimeTag) -> Self {
        Mode { tag, ..self }
    }

    pub fn with_band(self, band: FreqBand) -> Self {
        Mode { band, ..self }
    }

    pub fn path_str(&self) -> &str {
        self.path.as_str()
    }
}

pub fn path_label(path: &str) -> Result<PathLabel> {
    if path.is_empty() {
        return Err(Error::Parameter("empty path label".into()));
    }
    if path.contains(':') || path.contains('+') || path.chars().any(char::is_whitespace) {
        return Err(Error::Parameter(format!(
            "path label {path:?} contains a reserved character"
        )));
    }
    PathLabel::from(path).map_err(|_| {
        Error::Capacity(format!(
            "path label {path:?} is longer than {MAX_PATH_LEN} bytes"
        ))
    })
}

impl Polarization {
    pub fn symbol(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::Unset => "-",
        }
    }

    /// The orthogonal polarization; `Unset` maps to itself.
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::Unset => Polarization::Unset,
        }
    }
}

impl Oam {
    pub fn symbol(self) -> &'static str {
        match self {
            Oam::Plus => "+1",
            Oam::Minus => "-1",
            Oam::Zero => "0",
            Oam::Unset => "-",
        }
    }
}

impl TimeTag {
    pub fn symbol(self) -> &'static str {
        match self {
            TimeTag::Untagged => "-",
            TimeTag::Th => "th",
            TimeTag::Tv => "tv",
        }
    }
}

impl FreqBand {
    pub fn symbol(self) -> &'static str {
        match self {
            FreqBand::Fundamental => "f",
            FreqBand::Doubled => "2f",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.path,
            self.pol.symbol(),
            self.oam.symbol(),
            self.tag.symbol(),
            self.band.symbol()
        )
    }
}

fn bad_field(field: &str, value: &str) -> Error {
    Error::Parse {
        path: "mode".into(),
        message: format!("unknown {field} {value:?}"),
    }
}

impl FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            "-" | "" => Ok(Polarization::Unset),
            other => Err(bad_field("polarization", other)),
        }
    }
}

impl FromStr for Oam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+1" | "1" => Ok(Oam::Plus),
            "-1" => Ok(Oam::Minus),
            "0" => Ok(Oam::Zero),
            "-" | "" => Ok(Oam::Unset),
            other => Err(bad_field("oam value", other)),
        }
    }
}

impl FromStr for TimeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "th" => Ok(TimeTag::Th),
            "tv" => Ok(TimeTag::Tv),
            "-" | "" => Ok(TimeTag::Untagged),
            other => Err(bad_field("time tag", other)),
        }
    }
}

impl FromStr for FreqBand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "-" | "" => Ok(FreqBand::Fundamental),
            "2f" => Ok(FreqBand::Doubled),
            other => Err(bad_field("frequency band", other)),
        }
    }
}

/// Parses `path[:pol[:oam[:tag[:band]]]]`; omitted trailing fields take
/// their unset defaults.
impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split(':').collect();
        if fields.len() > 5 {
            return Err(Error::Parse {
                path: "mode".into(),
                message: format!("{s:?} has more than five fields"),
            });
        }
        let field = |i: usize| fields.get(i).copied().unwrap_or("");
        Ok(Mode {
            path: path_label(field(0)).map_err(|e| Error::Parse {
                path: "mode".into(),
                message: e.to_string(),
            })?,
            pol: field(1).parse()?,
            oam: field(2).parse()?,
            tag: field(3).parse()?,
            band: field(4).parse()?,
        })
    }
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! symbol_serde {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.serialize_str(self.symbol())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

symbol_serde!(Polarization, Oam, TimeTag, FreqBand);
