//! Named split specs, also shipped as JSON under `presets/`.

use lakebench_core::gen::{presets, SplitSpec};

pub const DEFAULT_SEED: u64 = 20_240_611;

pub const NAMES: [&str; 5] = [
    "train",
    "ood_random",
    "ood_d6",
    "train_embedded10",
    "fixed10_dist",
];

pub fn by_name(name: &str, seed: u64) -> Option<SplitSpec> {
    let spec = match name {
        "train" => presets::training_mix(seed),
        "ood_random" => presets::ood_random(seed),
        "ood_d6" => presets::ood_far(seed),
        "train_embedded10" => presets::embedded_training(seed),
        "fixed10_dist" => presets::fixed10_by_distance(seed),
        _ => return None,
    };
    Some(spec)
}

/// The shipped JSON text for `name`.
pub fn shipped(name: &str) -> Option<&'static str> {
    Some(match name {
        "train" => include_str!("../presets/train.json"),
        "ood_random" => include_str!("../presets/ood_random.json"),
        "ood_d6" => include_str!("../presets/ood_d6.json"),
        "train_embedded10" => include_str!("../presets/train_embedded10.json"),
        "fixed10_dist" => include_str!("../presets/fixed10_dist.json"),
        _ => return None,
    })
}
