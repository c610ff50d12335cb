use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use qndm_core::harness::Runcard;

/// Writes `body` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    file.write_all(body.as_bytes())?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
    Ok(())
}

/// Writes `runcard.txt` with a leading UTC timestamp.
pub fn write_runcard(dir: &Path, card: Runcard) -> Result<()> {
    let mut stamped = Runcard::new();
    stamped.set("timestamp", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    for (k, v) in card.entries() {
        stamped.set(k.as_str(), v);
    }
    write_atomic(dir, "runcard.txt", &stamped.to_text())
}
