use std::fs;
use std::io::Write;
use std::path::Path;

use specdens_core::verifiers::{write_jsonl, InequalityReport};

use crate::config::CliResult;

/// `count` log-spaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Writes `text` to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn jsonl(reports: &[InequalityReport]) -> String {
    let mut buf = Vec::new();
    write_jsonl(reports, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("reports are utf-8")
}

/// One stderr line; true when every report passed.
pub fn summarize(reports: &[InequalityReport]) -> bool {
    let failed = reports.iter().filter(|r| !r.pass).count();
    eprintln!("{} reports, {} passed, {} failed", reports.len(), reports.len() - failed, failed);
    failed == 0
}
