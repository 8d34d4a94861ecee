//! Command-line front end for the cyclic long-memory pipeline.
//!
//! Seven subcommands cover the full workflow: `simulate` a series,
//! `transform` it into multi-level filter coefficients, `estimate` the
//! spectral parameters from those coefficients, run a Monte Carlo study
//! (`mc`), print asymptotic constants (`asymptotics`), inspect a filter
//! (`filters info`), and produce exploratory diagnostics (`diagnose`).
//!
//! Conventions shared by all subcommands:
//! - runs are configured by flat `[section]` `key=value` files
//!   ([`config`]); unknown keys are rejected by name with exit code 2;
//! - every run that writes data artifacts also writes a `manifest.json`
//!   ([`manifest`]) recording the fully resolved configuration, and
//!   passing that manifest back as `--config` replays the run and
//!   reproduces the artifacts byte for byte;
//! - CSV artifacts use '.' decimals, '\n' line endings, a header row, and
//!   17-significant-digit reals ([`csvio`]);
//! - plots are deterministic SVG ([`svg`]);
//! - errors are emitted to stderr as a single JSON object; exit codes are
//!   0 (success), 1 (runtime failure), 2 (configuration or usage error).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub mod cmd;
pub mod config;
pub mod csvio;
pub mod manifest;
pub mod svg;

/// One failure, with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { exit_code: 2, kind: "config", message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit_code: 2, kind: "usage", message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { exit_code: 1, kind: "runtime", message: message.into() }
    }

    /// Machine-readable form for stderr.
    pub fn stderr_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message }
        })
        .to_string()
    }
}

impl From<cyclm::Error> for CliError {
    fn from(e: cyclm::Error) -> Self {
        match &e {
            cyclm::Error::Config(_) => CliError::config(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

pub const USAGE: &str = "\
cyclm — simulation, filter transforms, and moment estimation for cyclic
long-memory processes.

USAGE:
  cyclm simulate    --config <file> --out <dir>
  cyclm transform   --config <file> --out <dir>
  cyclm estimate    --config <file> --out <dir>
  cyclm mc          --config <file> --out <dir> [--svg]
  cyclm diagnose    --config <file> --out <dir> [--svg]
  cyclm asymptotics --filter <name> --c <x> --s0 <x> --alpha <x> [--out <dir>]
  cyclm filters info <name> [--c <x>] [--json]
  cyclm help

<file> may be a flat [section] key=value config or a manifest.json from an
earlier run; a manifest replays that run and reproduces its artifacts byte
for byte.  Exit codes: 0 success, 1 runtime failure, 2 bad configuration
or usage.  Errors go to stderr as a single JSON object.";

/// Parsed command-line flags: `--name value` pairs, bare `--switch`es, and
/// positional arguments, validated against fixed lists.
#[derive(Debug)]
pub struct Flags {
    values: BTreeMap<String, String>,
    switches: BTreeSet<String>,
    positional: Vec<String>,
}

impl Flags {
    pub fn parse(
        args: &[String],
        value_flags: &[&str],
        switch_flags: &[&str],
        max_positional: usize,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut switches = BTreeSet::new();
        let mut positional = Vec::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            if let Some(stripped) = arg.strip_prefix("--") {
                if switch_flags.contains(&stripped) {
                    switches.insert(stripped.to_string());
                } else if value_flags.contains(&stripped) {
                    let value = it.next().ok_or_else(|| {
                        CliError::usage(format!("flag --{stripped} needs a value"))
                    })?;
                    if values.insert(stripped.to_string(), value.clone()).is_some() {
                        return Err(CliError::usage(format!("flag --{stripped} given twice")));
                    }
                } else {
                    let mut known: Vec<String> =
                        value_flags.iter().map(|f| format!("--{f}")).collect();
                    known.extend(switch_flags.iter().map(|f| format!("--{f}")));
                    return Err(CliError::usage(format!(
                        "unknown flag {arg:?}; accepted flags: {}",
                        known.join(", ")
                    )));
                }
            } else {
                positional.push(arg.clone());
                if positional.len() > max_positional {
                    return Err(CliError::usage(format!("unexpected argument {arg:?}")));
                }
            }
        }
        Ok(Flags { values, switches, positional })
    }

    pub fn value(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn require(&self, name: &str) -> Result<&str, CliError> {
        self.value(name)
            .ok_or_else(|| CliError::usage(format!("missing required flag --{name}")))
    }

    pub fn switch(&self, name: &str) -> bool {
        self.switches.contains(name)
    }

    pub fn f64(&self, name: &str) -> Result<f64, CliError> {
        let text = self.require(name)?;
        text.parse()
            .map_err(|_| CliError::usage(format!("flag --{name}: {text:?} is not a number")))
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64, CliError> {
        match self.value(name) {
            Some(text) => text.parse().map_err(|_| {
                CliError::usage(format!("flag --{name}: {text:?} is not a number"))
            }),
            None => Ok(default),
        }
    }
}

/// Resolve `--config` (flat file or manifest) and `--out`, creating the
/// output directory.
fn config_and_out(flags: &Flags, command: &str) -> Result<(String, PathBuf), CliError> {
    let config_path = PathBuf::from(flags.require("config")?);
    let text = manifest::load_config_text(&config_path, command)?;
    let out = PathBuf::from(flags.require("out")?);
    std::fs::create_dir_all(&out).map_err(|e| {
        CliError::runtime(format!("cannot create output directory {}: {e}", out.display()))
    })?;
    Ok((text, out))
}

/// Run one invocation; returns the text to print on stdout.
pub fn run(args: &[String]) -> Result<String, CliError> {
    let Some(command) = args.first() else {
        return Err(CliError::usage(USAGE));
    };
    let rest = &args[1..];
    match command.as_str() {
        "simulate" => {
            let flags = Flags::parse(rest, &["config", "out"], &[], 0)?;
            let (text, out) = config_and_out(&flags, "simulate")?;
            cmd::simulate::run(&text, &out)
        }
        "transform" => {
            let flags = Flags::parse(rest, &["config", "out"], &[], 0)?;
            let (text, out) = config_and_out(&flags, "transform")?;
            cmd::transform::run(&text, &out)
        }
        "estimate" => {
            let flags = Flags::parse(rest, &["config", "out"], &[], 0)?;
            let (text, out) = config_and_out(&flags, "estimate")?;
            cmd::estimate::run(&text, &out)
        }
        "mc" => {
            let flags = Flags::parse(rest, &["config", "out"], &["svg"], 0)?;
            let (text, out) = config_and_out(&flags, "mc")?;
            cmd::mc::run(&text, &out, flags.switch("svg"))
        }
        "diagnose" => {
            let flags = Flags::parse(rest, &["config", "out"], &["svg"], 0)?;
            let (text, out) = config_and_out(&flags, "diagnose")?;
            cmd::diagnose::run(&text, &out, flags.switch("svg"))
        }
        "asymptotics" => {
            let flags =
                Flags::parse(rest, &["filter", "c", "s0", "alpha", "config", "out"], &[], 0)?;
            cmd::asymptotics::run(&flags)
        }
        "filters" => {
            let flags = Flags::parse(rest, &["c"], &["json"], 2)?;
            match flags.positional.as_slice() {
                [action, name] if action == "info" => {
                    cmd::filters_info::run(name, flags.f64_or("c", 1.0)?, flags.switch("json"))
                }
                _ => Err(CliError::usage(
                    "usage: cyclm filters info <shannon|meyer|mexican-hat[:sigma]> [--c <x>] [--json]",
                )),
            }
        }
        "help" | "--help" | "-h" => Ok(USAGE.to_string()),
        other => Err(CliError::usage(format!(
            "unknown command {other:?}\n\n{USAGE}"
        ))),
    }
}

/// Scatter-plot helper shared by `mc` and `diagnose`: render and write one
/// SVG artifact, recording it in the artifact list.
pub(crate) fn write_svg(
    dir: &Path,
    name: &str,
    points: &[(f64, f64)],
    style: &svg::SvgStyle,
    artifacts: &mut Vec<String>,
) -> Result<(), CliError> {
    csvio::write_text(&dir.join(name), &svg::emit_svg_scatter(points, style))?;
    artifacts.push(name.to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_values_switches_and_positionals() {
        let args: Vec<String> =
            ["info", "shannon", "--c", "2.5", "--json"].iter().map(|s| s.to_string()).collect();
        let flags = Flags::parse(&args, &["c"], &["json"], 2).unwrap();
        assert_eq!(flags.positional, vec!["info", "shannon"]);
        assert_eq!(flags.f64("c").unwrap(), 2.5);
        assert!(flags.switch("json"));
    }

    #[test]
    fn flags_reject_unknown_missing_and_duplicate() {
        let to_args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let err = Flags::parse(&to_args(&["--bogus"]), &["config"], &[], 0).unwrap_err();
        assert_eq!(err.exit_code, 2);
        assert!(err.message.contains("bogus"));

        let err = Flags::parse(&to_args(&["--config"]), &["config"], &[], 0).unwrap_err();
        assert!(err.message.contains("needs a value"));

        let err =
            Flags::parse(&to_args(&["--config", "a", "--config", "b"]), &["config"], &[], 0)
                .unwrap_err();
        assert!(err.message.contains("twice"));

        let err = Flags::parse(&to_args(&["stray"]), &["config"], &[], 0).unwrap_err();
        assert!(err.message.contains("stray"));
    }

    #[test]
    fn unknown_command_and_missing_command_exit_with_usage() {
        let err = run(&["frobnicate".to_string()]).unwrap_err();
        assert_eq!(err.exit_code, 2);
        assert!(err.message.contains("frobnicate"));
        let err = run(&[]).unwrap_err();
        assert_eq!(err.exit_code, 2);
        let help = run(&["help".to_string()]).unwrap();
        assert!(help.contains("cyclm"));
    }

    #[test]
    fn stderr_json_is_single_line_machine_readable() {
        let e = CliError::config("unknown key \"mj_cap\"");
        let text = e.stderr_json();
        assert!(!text.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["error"]["kind"], "config");
        assert!(v["error"]["message"].as_str().unwrap().contains("mj_cap"));
    }
}
