use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Visual,
    Auditory,
    Tactile,
}

impl Modality {
    /// Canonical order used everywhere output is produced.
    pub const ALL: [Modality; 3] = [Modality::Visual, Modality::Auditory, Modality::Tactile];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Auditory => "auditory",
            Modality::Tactile => "tactile",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Modality::Visual => "Visual",
            Modality::Auditory => "Auditory",
            Modality::Tactile => "Tactile",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "visual" => Ok(Modality::Visual),
            "auditory" => Ok(Modality::Auditory),
            "tactile" => Ok(Modality::Tactile),
            other => Err(Error::config("modality", format!("unknown modality `{other}`"))),
        }
    }
}

/// One value per modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerModality<T> {
    pub visual: T,
    pub auditory: T,
    pub tactile: T,
}

impl<T> PerModality<T> {
    pub fn get(&self, m: Modality) -> &T {
        match m {
            Modality::Visual => &self.visual,
            Modality::Auditory => &self.auditory,
            Modality::Tactile => &self.tactile,
        }
    }

    pub fn get_mut(&mut self, m: Modality) -> &mut T {
        match m {
            Modality::Visual => &mut self.visual,
            Modality::Auditory => &mut self.auditory,
            Modality::Tactile => &mut self.tactile,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Modality) -> T) -> Self {
        PerModality {
            visual: f(Modality::Visual),
            auditory: f(Modality::Auditory),
            tactile: f(Modality::Tactile),
        }
    }
}
