//! The default geographic roster.

/// Postal codes of the 48 contiguous states plus the District of Columbia,
/// in lexicographic order. Alaska and Hawaii are absent from the survey
/// coverage, so they are not part of the default roster.
pub const CONTIGUOUS_AND_DC: [&str; 49] = [
    "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "IA", "ID", "IL", "IN", "KS",
    "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ",
    "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT",
    "WA", "WI", "WV", "WY",
];

/// Default roster as owned strings.
pub fn default_roster() -> Vec<String> {
    CONTIGUOUS_AND_DC.iter().map(|s| s.to_string()).collect()
}
