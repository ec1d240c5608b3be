//! Helpers shared by the acceptance target.

use std::path::PathBuf;
use std::process::Command;

/// Workspace root, two levels above this crate.
pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Path to the `wiretap` binary next to the running test executable,
/// building it with cargo when it is missing.
pub fn cli_binary() -> std::io::Result<PathBuf> {
    let exe = std::env::current_exe()?;
    let dir = exe
        .parent()
        .and_then(|d| d.parent())
        .ok_or_else(|| std::io::Error::other("test executable has no profile directory"))?;
    let bin = dir.join(format!("wiretap{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let status = Command::new(cargo)
            .args(["build", "-p", "wiretap-cli"])
            .current_dir(workspace_root())
            .status()?;
        if !status.success() || !bin.exists() {
            return Err(std::io::Error::other(format!("could not build {}", bin.display())));
        }
    }
    Ok(bin)
}
