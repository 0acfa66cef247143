use crate::error::{Error, Result};

/// Recognized status labels with their access scores.
pub const STATUS_LABELS: [(&str, u8); 8] = [
    ("MONOPOLY", 5),
    ("DOMINANT", 4),
    ("SENIOR PARTNER", 3),
    ("JUNIOR PARTNER", 2),
    ("POWERLESS", 1),
    ("SELF-EXCLUSION", 1),
    ("IRRELEVANT", 1),
    ("DISCRIMINATED", 0),
];

/// Trim, uppercase and collapse internal whitespace.
pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_uppercase()
}

/// Access-to-power score, 0 (discriminated) to 5 (monopoly).
pub fn code_access(label: &str) -> Result<u8> {
    let norm = normalize_label(label);
    STATUS_LABELS
        .iter()
        .find(|(l, _)| *l == norm)
        .map(|&(_, s)| s)
        .ok_or_else(|| Error::UnknownStatus(label.to_string()))
}
