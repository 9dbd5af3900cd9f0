use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<u2reg::Error> for CliError {
    fn from(e: u2reg::Error) -> Self {
        use u2reg::Error as E;
        let code = match &e {
            E::InvalidArgument(_) | E::Parse(_) | E::UnknownStrategy { .. } => EXIT_INPUT,
            E::Consistency(_) | E::GrowthAudit(_) => EXIT_FAIL,
            E::Budget { .. }
            | E::StageBudget(_)
            | E::GrowthOverflow(_)
            | E::TargetUnreachable { .. }
            | E::WeakRegularization { .. } => EXIT_BUDGET,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Parses a JSON artifact; errors carry `path:line:column`.
pub fn parse_json<T: DeserializeOwned + Send>(path: &Path, text: &str) -> CliResult<T> {
    u2reg::json::from_str(text).map_err(|e| {
        // Validation failures after parsing carry no position.
        if e.line() == 0 {
            CliError::input(format!("{}: {e}", path.display()))
        } else {
            CliError::input(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        }
    })
}

pub fn read_json<T: DeserializeOwned + Send>(path: &Path) -> CliResult<T> {
    parse_json(path, &read_text(path)?)
}

pub fn to_json<T: Serialize + Sync>(value: &T) -> CliResult<String> {
    let mut s = u2reg::json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_FAIL,
        message: format!("serializing output: {e}"),
    })?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

/// CSV with a header row and LF line endings.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::input(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Shortest round-trip decimal, always with a `.` or exponent.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
