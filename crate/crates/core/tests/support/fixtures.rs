use std::path::PathBuf;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn read(name: &str, file: &str) -> String {
    std::fs::read_to_string(fixture_dir(name).join(file)).expect("fixture file")
}
