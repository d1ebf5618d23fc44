//! The 86-channel stream layout: one action-ID channel, seven joints with
//! eleven components each, and eight power-meter channels.

pub const CHANNEL_COUNT: usize = 86;
pub const JOINT_COUNT: usize = 7;
pub const JOINT_COMPONENTS: [&str; 11] = [
    "AccX", "AccY", "AccZ", "GyroX", "GyroY", "GyroZ", "q1", "q2", "q3", "q4", "temp",
];
pub const POWER_CHANNELS: [&str; 8] = [
    "current",
    "frequency",
    "phase_angle",
    "power",
    "power_factor",
    "reactive_power",
    "voltage",
    "import_energy",
];

/// Channel names in canonical order: action_id, then joints, then power.
pub fn channel_names() -> Vec<String> {
    let mut names = Vec::with_capacity(CHANNEL_COUNT);
    names.push("action_id".to_string());
    for joint in 0..JOINT_COUNT {
        for comp in JOINT_COMPONENTS {
            names.push(format!("sensor_id_{joint}_{comp}"));
        }
    }
    for p in POWER_CHANNELS {
        names.push(p.to_string());
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_86_channels() {
        let names = channel_names();
        assert_eq!(names.len(), CHANNEL_COUNT);
        assert_eq!(names[0], "action_id");
        assert_eq!(names[1], "sensor_id_0_AccX");
        assert_eq!(names[11], "sensor_id_0_temp");
        assert_eq!(names[85], "import_energy");
        // no duplicates
        let set: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), CHANNEL_COUNT);
    }
}
