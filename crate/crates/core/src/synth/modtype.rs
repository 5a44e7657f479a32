use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The eleven modulation classes. Discriminants are the stored label ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModType {
    #[serde(rename = "BPSK")]
    Bpsk = 0,
    #[serde(rename = "QPSK")]
    Qpsk = 1,
    #[serde(rename = "8PSK")]
    Psk8 = 2,
    #[serde(rename = "QAM16")]
    Qam16 = 3,
    #[serde(rename = "QAM64")]
    Qam64 = 4,
    #[serde(rename = "BFSK")]
    Bfsk = 5,
    #[serde(rename = "CPFSK")]
    Cpfsk = 6,
    #[serde(rename = "PAM4")]
    Pam4 = 7,
    #[serde(rename = "WBFM")]
    Wbfm = 8,
    #[serde(rename = "AM-SSB")]
    AmSsb = 9,
    #[serde(rename = "AM-DSB")]
    AmDsb = 10,
}

pub const NUM_CLASSES: usize = 11;

impl ModType {
    pub const ALL: [ModType; NUM_CLASSES] = [
        ModType::Bpsk,
        ModType::Qpsk,
        ModType::Psk8,
        ModType::Qam16,
        ModType::Qam64,
        ModType::Bfsk,
        ModType::Cpfsk,
        ModType::Pam4,
        ModType::Wbfm,
        ModType::AmSsb,
        ModType::AmDsb,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<ModType> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModType::Bpsk => "BPSK",
            ModType::Qpsk => "QPSK",
            ModType::Psk8 => "8PSK",
            ModType::Qam16 => "QAM16",
            ModType::Qam64 => "QAM64",
            ModType::Bfsk => "BFSK",
            ModType::Cpfsk => "CPFSK",
            ModType::Pam4 => "PAM4",
            ModType::Wbfm => "WBFM",
            ModType::AmSsb => "AM-SSB",
            ModType::AmDsb => "AM-DSB",
        }
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModType::Wbfm | ModType::AmSsb | ModType::AmDsb)
    }
}

impl fmt::Display for ModType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown modulation {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_and_dense() {
        for (i, m) in ModType::ALL.iter().enumerate() {
            assert_eq!(m.id() as usize, i);
            assert_eq!(ModType::from_id(i as u8), Some(*m));
            assert_eq!(m.name().parse::<ModType>().unwrap(), *m);
        }
        assert_eq!(ModType::from_id(11), None);
        assert_eq!(ModType::ALL.iter().filter(|m| m.is_analog()).count(), 3);
    }

    #[test]
    fn serde_uses_display_names() {
        assert_eq!(serde_json::to_string(&ModType::Psk8).unwrap(), "\"8PSK\"");
        assert_eq!(serde_json::from_str::<ModType>("\"AM-SSB\"").unwrap(), ModType::AmSsb);
    }
}
