//! JSON schemas for every JSON file the tool writes.

pub const SCHEMAS: &[(&str, &str)] = &[
    ("manifest", include_str!("../schemas/manifest.schema.json")),
    ("summary", include_str!("../schemas/summary.schema.json")),
    ("moments", include_str!("../schemas/moments.schema.json")),
    (
        "record_sidecar",
        include_str!("../schemas/record_sidecar.schema.json"),
    ),
    (
        "results_variance_curves",
        include_str!("../schemas/results_variance_curves.schema.json"),
    ),
    (
        "results_ramsey_sweep",
        include_str!("../schemas/results_ramsey_sweep.schema.json"),
    ),
    (
        "results_dualpath_sweep",
        include_str!("../schemas/results_dualpath_sweep.schema.json"),
    ),
    (
        "results_jpa_sweep",
        include_str!("../schemas/results_jpa_sweep.schema.json"),
    ),
    (
        "results_planck_calibration",
        include_str!("../schemas/results_planck_calibration.schema.json"),
    ),
    (
        "results_quadrature_check",
        include_str!("../schemas/results_quadrature_check.schema.json"),
    ),
];

pub fn get(name: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn file_name(name: &str) -> String {
    format!("{name}.schema.json")
}

/// Schema that governs a file written into a run directory.
pub fn for_artifact(file: &str, experiment: &str) -> Option<String> {
    match file {
        "manifest.json" => Some("manifest".into()),
        "summary.json" => Some("summary".into()),
        "moments.json" => Some("moments".into()),
        "results.json" => Some(format!("results_{experiment}")),
        f if f.starts_with("record_") && f.ends_with(".json") => Some("record_sidecar".into()),
        _ => None,
    }
}
