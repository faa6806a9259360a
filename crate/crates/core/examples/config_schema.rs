// Regenerates the published config schemas under schema/.
//
// $ cargo run --example config_schema

use std::fs;
use std::path::Path;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema");
    fs::create_dir_all(&dir)?;
    for (name, schema) in singular_plap::cli::config_schemas() {
        let path = dir.join(format!("{name}.schema.json"));
        fs::write(&path, serde_json::to_string_pretty(&schema)? + "\n")?;
        println!("{}", path.display());
    }
    Ok(())
}
