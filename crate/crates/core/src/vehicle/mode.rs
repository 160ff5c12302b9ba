use core::fmt;

/// The six fixed-input subsystems the truck switches between.
///
/// The declaration order is the tie-breaking order used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DrivingMode {
    /// Constant velocity, engine torque balances resistance.
    Cruise,
    /// Neutral gear, engine idling and disengaged.
    EcoRoll,
    /// Engaged, no fuel, engine friction brakes.
    Coast,
    /// Engaged, full engine-brake torque on top of friction.
    EngineBrake,
    /// Engine torque on the optimal BSFC line.
    Accelerate,
    /// Constant velocity on a descent, partial engine-brake torque.
    Downhill,
}

impl DrivingMode {
    pub const ALL: [DrivingMode; 6] = [
        DrivingMode::Cruise,
        DrivingMode::EcoRoll,
        DrivingMode::Coast,
        DrivingMode::EngineBrake,
        DrivingMode::Accelerate,
        DrivingMode::Downhill,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DrivingMode::Cruise => "cruise",
            DrivingMode::EcoRoll => "eco_roll",
            DrivingMode::Coast => "coast",
            DrivingMode::EngineBrake => "engine_brake",
            DrivingMode::Accelerate => "accelerate",
            DrivingMode::Downhill => "downhill",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Modes with a nonzero fuel rate.
    pub fn burns_fuel(self) -> bool {
        matches!(
            self,
            DrivingMode::Cruise | DrivingMode::Accelerate | DrivingMode::EcoRoll
        )
    }
}

impl fmt::Display for DrivingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A driving mode together with the gear it runs in (0 = neutral).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeGear {
    pub mode: DrivingMode,
    pub gear: u8,
}

impl ModeGear {
    pub const ECO_ROLL: ModeGear = ModeGear {
        mode: DrivingMode::EcoRoll,
        gear: 0,
    };

    pub fn new(mode: DrivingMode, gear: u8) -> Self {
        Self { mode, gear }
    }

    /// Eco-roll runs in neutral; every other mode needs an engaged gear.
    pub fn is_consistent(self, n_gears: usize) -> bool {
        match self.mode {
            DrivingMode::EcoRoll => self.gear == 0,
            _ => self.gear >= 1 && (self.gear as usize) <= n_gears,
        }
    }

    /// Every consistent combination for a gearbox with `n_gears` gears, in
    /// tie-breaking order (mode first, then gear).
    pub fn all(n_gears: usize) -> impl Iterator<Item = ModeGear> {
        DrivingMode::ALL.into_iter().flat_map(move |mode| {
            let gears = if mode == DrivingMode::EcoRoll {
                0..=0
            } else {
                1..=n_gears as u8
            };
            gears.map(move |gear| ModeGear { mode, gear })
        })
    }
}

impl fmt::Display for ModeGear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.mode, self.gear)
    }
}
