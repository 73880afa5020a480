//! Versioned simulation fixtures, embedded as text.
//!
//! The model files are JSON documents for [`SimModel`](crate::fitness::SimModel);
//! parse them with any serde JSON reader.

/// Four binary genes, 16 configurations.
pub const TOY16_PARAMS: &str = include_str!("../fixtures/toy16.params");
pub const TOY16_MODEL: &str = include_str!("../fixtures/toy16.json");

/// Calibrated model over the `listing1-14` catalog: stock configuration at
/// 570 Mbit/s on a 1000 Mbit/s link.
pub const TOY_CAL_MODEL: &str = include_str!("../fixtures/toy-cal.json");

/// Embedded fixture by file name.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "toy16.json" => Some(TOY16_MODEL),
        "toy16.params" => Some(TOY16_PARAMS),
        "toy-cal.json" => Some(TOY_CAL_MODEL),
        _ => None,
    }
}
