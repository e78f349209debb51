//! Shared domain vocabulary: macro actions, fork rolls, the fixed 6-action
//! space, food categories, environment classes, and trial outcomes.
//!
//! The action ordering here is load-bearing: prediction vectors, oracle
//! tables, and trial statistics all index actions by [`ActionId::ordinal`].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Fork-pitch strategy.
///
/// `VS` drives straight down with a vertical handle, `TV` tilts the handle so
/// the tines are vertical, `TA` approaches diagonally with angled tines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MacroAction {
    VS,
    TV,
    TA,
}

impl MacroAction {
    pub const ALL: [MacroAction; 3] = [MacroAction::VS, MacroAction::TV, MacroAction::TA];

    pub fn as_str(self) -> &'static str {
        match self {
            MacroAction::VS => "VS",
            MacroAction::TV => "TV",
            MacroAction::TA => "TA",
        }
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MacroAction {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VS" => Ok(MacroAction::VS),
            "TV" => Ok(MacroAction::TV),
            "TA" => Ok(MacroAction::TA),
            _ => Err(ParseEnumError::new("macro action", s, "VS|TV|TA")),
        }
    }
}

/// Fork roll about the approach axis, measured against the skewering axis.
/// 0° means the tines are parallel to the axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForkRoll {
    R0,
    R90,
}

impl ForkRoll {
    pub const ALL: [ForkRoll; 2] = [ForkRoll::R0, ForkRoll::R90];

    pub fn degrees(self) -> u32 {
        match self {
            ForkRoll::R0 => 0,
            ForkRoll::R90 => 90,
        }
    }
}

impl fmt::Display for ForkRoll {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

impl FromStr for ForkRoll {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(ForkRoll::R0),
            "90" => Ok(ForkRoll::R90),
            _ => Err(ParseEnumError::new("fork roll", s, "0|90")),
        }
    }
}

/// One of the six skewering actions: macro pitch x fork roll.
///
/// The canonical ordering (VS-0, VS-90, TV-0, TV-90, TA-0, TA-90) matches the
/// rate layout of prediction vectors and oracle tables everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId {
    pub macro_action: MacroAction,
    pub roll: ForkRoll,
}

impl ActionId {
    pub const COUNT: usize = 6;

    pub const ALL: [ActionId; 6] = [
        ActionId { macro_action: MacroAction::VS, roll: ForkRoll::R0 },
        ActionId { macro_action: MacroAction::VS, roll: ForkRoll::R90 },
        ActionId { macro_action: MacroAction::TV, roll: ForkRoll::R0 },
        ActionId { macro_action: MacroAction::TV, roll: ForkRoll::R90 },
        ActionId { macro_action: MacroAction::TA, roll: ForkRoll::R0 },
        ActionId { macro_action: MacroAction::TA, roll: ForkRoll::R90 },
    ];

    pub fn new(macro_action: MacroAction, roll: ForkRoll) -> Self {
        ActionId { macro_action, roll }
    }

    /// Index into the fixed 6-slot action order.
    pub fn ordinal(self) -> usize {
        let m = match self.macro_action {
            MacroAction::VS => 0,
            MacroAction::TV => 1,
            MacroAction::TA => 2,
        };
        let r = match self.roll {
            ForkRoll::R0 => 0,
            ForkRoll::R90 => 1,
        };
        m * 2 + r
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.macro_action, self.roll)
    }
}

impl FromStr for ActionId {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, r) = s
            .split_once('-')
            .ok_or_else(|| ParseEnumError::new("action", s, "VS-0|VS-90|TV-0|TV-90|TA-0|TA-90"))?;
        Ok(ActionId::new(m.parse()?, r.parse()?))
    }
}

/// Visual food category used by the synthetic world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FoodCategory {
    #[serde(rename = "long")]
    Long,
    #[serde(rename = "non-flat")]
    NonFlat,
    #[serde(rename = "flat")]
    Flat,
    #[serde(rename = "leafy")]
    Leafy,
}

impl FoodCategory {
    pub const COUNT: usize = 4;
    pub const ALL: [FoodCategory; 4] = [
        FoodCategory::Long,
        FoodCategory::NonFlat,
        FoodCategory::Flat,
        FoodCategory::Leafy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FoodCategory::Long => "long",
            FoodCategory::NonFlat => "non-flat",
            FoodCategory::Flat => "flat",
            FoodCategory::Leafy => "leafy",
        }
    }

    pub fn index(self) -> usize {
        match self {
            FoodCategory::Long => 0,
            FoodCategory::NonFlat => 1,
            FoodCategory::Flat => 2,
            FoodCategory::Leafy => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for FoodCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FoodCategory {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long" => Ok(FoodCategory::Long),
            "non-flat" => Ok(FoodCategory::NonFlat),
            "flat" => Ok(FoodCategory::Flat),
            "leafy" => Ok(FoodCategory::Leafy),
            _ => Err(ParseEnumError::new("category", s, "long|non-flat|flat|leafy")),
        }
    }
}

/// Surrounding-environment class of a food item on the plate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvClass {
    #[serde(rename = "ISO")]
    Iso,
    #[serde(rename = "WALL")]
    Wall,
    #[serde(rename = "STACK")]
    Stack,
}

impl EnvClass {
    pub const COUNT: usize = 3;
    pub const ALL: [EnvClass; 3] = [EnvClass::Iso, EnvClass::Wall, EnvClass::Stack];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvClass::Iso => "ISO",
            EnvClass::Wall => "WALL",
            EnvClass::Stack => "STACK",
        }
    }

    pub fn index(self) -> usize {
        match self {
            EnvClass::Iso => 0,
            EnvClass::Wall => 1,
            EnvClass::Stack => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// One-hot encoding in the fixed ISO, WALL, STACK order.
    pub fn one_hot(self) -> [f32; 3] {
        let mut v = [0.0f32; 3];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for EnvClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvClass {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ISO" => Ok(EnvClass::Iso),
            "WALL" => Ok(EnvClass::Wall),
            "STACK" => Ok(EnvClass::Stack),
            _ => Err(ParseEnumError::new("environment", s, "ISO|WALL|STACK")),
        }
    }
}

/// Result of a single bite-acquisition attempt.
///
/// `Discard` marks a misplaced trial (too few tines touched the item); such
/// records are kept in trial lists but excluded from all statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "success")]
    Success,
    #[serde(rename = "failure")]
    Failure,
    #[serde(rename = "discard")]
    Discard,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::Discard => "discard",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "success" => Ok(Outcome::Success),
            "failure" => Ok(Outcome::Failure),
            "discard" => Ok(Outcome::Discard),
            _ => Err(ParseEnumError::new("outcome", s, "success|failure|discard")),
        }
    }
}

/// Unknown token while parsing one of the domain enums.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} token `{token}` (expected {expected})")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub token: String,
    pub expected: &'static str,
}

impl ParseEnumError {
    fn new(kind: &'static str, token: &str, expected: &'static str) -> Self {
        ParseEnumError { kind, token: token.to_string(), expected }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_order_is_vs_tv_ta_with_roll_pairs() {
        let names: Vec<String> = ActionId::ALL.iter().map(|a| a.to_string()).collect();
        assert_eq!(names, ["VS-0", "VS-90", "TV-0", "TV-90", "TA-0", "TA-90"]);
        for (i, a) in ActionId::ALL.iter().enumerate() {
            assert_eq!(a.ordinal(), i);
            assert_eq!(ActionId::from_ordinal(i), Some(*a));
        }
    }

    #[test]
    fn enum_round_trips() {
        for a in ActionId::ALL {
            assert_eq!(a.to_string().parse::<ActionId>().unwrap(), a);
        }
        for c in FoodCategory::ALL {
            assert_eq!(c.to_string().parse::<FoodCategory>().unwrap(), c);
        }
        for e in EnvClass::ALL {
            assert_eq!(e.to_string().parse::<EnvClass>().unwrap(), e);
        }
    }

    #[test]
    fn unknown_token_is_rejected() {
        let err = "XX".parse::<MacroAction>().unwrap_err();
        assert!(err.to_string().contains("XX"));
        assert!("45".parse::<ForkRoll>().is_err());
        assert!("STACKED".parse::<EnvClass>().is_err());
    }

    #[test]
    fn one_hot_has_single_one() {
        for e in EnvClass::ALL {
            let v = e.one_hot();
            assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(v.iter().filter(|&&x| x == 0.0).count(), 2);
        }
    }
}
