use std::process::ExitCode;

use harq_renewal::cli::{main_with, THREADS_ENV};

fn main() -> ExitCode {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v),
        Err(std::env::VarError::NotPresent) => None,
        Err(std::env::VarError::NotUnicode(v)) => Some(v.to_string_lossy().into_owned()),
    };
    ExitCode::from(main_with(std::env::args_os(), threads.as_deref()) as u8)
}
