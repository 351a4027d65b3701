//! One module per subcommand. Each writes its CSV outputs under the output
//! directory and finishes with the manifest.

pub mod eval;
pub mod gen_model;
pub mod inspect;
pub mod run;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use etc_core::operators::{OperatorConfig, DEFAULT_ROW_CAP, SV_FLOOR};
use etc_core::pomdp::POLICY_ENUMERATION_CAP;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub jobs: usize,
    pub tolerance: Option<f64>,
    pub unsafe_limits: bool,
    pub timing: bool,
}

impl Default for Globals {
    fn default() -> Self {
        Globals {
            seed: None,
            out: PathBuf::from("out"),
            jobs: 1,
            tolerance: None,
            unsafe_limits: false,
            timing: false,
        }
    }
}

impl Globals {
    pub fn operator_config(&self) -> OperatorConfig {
        OperatorConfig {
            sv_floor: SV_FLOOR,
            row_cap: if self.unsafe_limits {
                usize::MAX
            } else {
                DEFAULT_ROW_CAP
            },
        }
    }

    pub fn enumeration_cap(&self) -> u128 {
        if self.unsafe_limits {
            u128::MAX
        } else {
            POLICY_ENUMERATION_CAP
        }
    }

    pub fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
