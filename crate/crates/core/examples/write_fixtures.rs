//! Regenerates the shipped synthetic fixtures.
//!
//! ```text
//! cargo run -p prospect-core --example write_fixtures -- fixtures
//! ```

use std::path::PathBuf;

use prospect_core::{store, synthetic};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture directory");
    let project = synthetic::reference_project();
    store::save(&project, dir.join("reference.prospect.json")).expect("write project");
    std::fs::write(
        dir.join("reference.alignment.json"),
        synthetic::reference_alignment().to_json(),
    )
    .expect("write alignment map");
    let _ = std::fs::remove_file(dir.join("reference.prospect.json.lock"));
}
