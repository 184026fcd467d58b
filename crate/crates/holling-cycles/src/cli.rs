//! Command-line front end.

/// Parses `std::env` arguments and runs the requested command, returning
/// the process exit code.
pub fn run_from_env() -> i32 {
    eprintln!("not yet wired");
    1
}
