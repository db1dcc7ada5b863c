//! File formats and the command implementations behind the `iegs` binary.

pub mod bench;
pub mod compare;
pub mod network;
pub mod result;
pub mod scenario;

use std::path::Path;

use crate::error::{Error, Result};

pub use bench::{bench_table, run_bench, run_method, BenchRow, MethodSpec};
pub use compare::{compare, CompareOptions, CompareReport};
pub use network::{load_network, write_network};
pub use result::{read_result, write_result};
pub use scenario::{load_scenario, write_scenario};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial file at `path`.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub(crate) fn parse_error(origin: &str, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    }
}
