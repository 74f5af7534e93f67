//! Regenerate the scenario files under `scenarios/` from the built-in
//! corpus: `cargo run -p accord --example dump_scenarios`.

use std::fs;
use std::path::PathBuf;

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = root.join("scenarios");
    fs::create_dir_all(&dir).expect("create scenarios directory");
    for scenario in accord::corpus::all() {
        let path = dir.join(format!("{}.json", scenario.name));
        let json = serde_json::to_string_pretty(&scenario).expect("serialize scenario");
        fs::write(&path, json + "\n").expect("write scenario file");
        println!("wrote {}", path.display());
    }
}
