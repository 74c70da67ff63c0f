use std::fmt;

use serde::{Deserialize, Serialize};

/// Classical reading of one measuring device.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeviceReading {
    pub id: u32,
    pub position: Vec<u32>,
    pub pointer: u32,
}

/// Macro-state descriptor: position and pointer value of every measuring
/// device, ordered by device id. Two labels are equal iff all readings are.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MacroLabel {
    pub devices: Vec<DeviceReading>,
}

impl MacroLabel {
    pub fn pointer_of(&self, device: u32) -> Option<u32> {
        self.devices.iter().find(|d| d.id == device).map(|d| d.pointer)
    }
}

impl fmt::Display for MacroLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .devices
            .iter()
            .map(|d| format!("k{}@{:?}:{}", d.id, d.position, d.pointer))
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}
