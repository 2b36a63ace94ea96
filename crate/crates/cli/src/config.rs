//! `--config` files and the `--describe` echo block.
//!
//! A config file holds `key=value` lines whose keys are long option names
//! (`rel_tol` and `rel-tol` are the same key). Entries for options that are
//! not on the command line are spliced into the argument list before clap
//! sees it, so flags always win over the file.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory};

use crate::args::Cli;
use crate::error::CliError;

/// Options that take no value.
const SWITCHES: [&str; 1] = ["describe"];

#[derive(Debug, Default)]
pub struct ConfigEntries {
    pub pairs: Vec<(String, String)>,
}

impl ConfigEntries {
    pub fn contains(&self, key: &str) -> bool {
        self.pairs.iter().any(|(k, _)| k == key)
    }
}

pub fn parse_config(text: &str, origin: &Path) -> Result<ConfigEntries, CliError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, found `{line}`",
                origin.display(),
                lineno + 1
            ))
        })?;
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(CliError::Usage(format!(
                "{}:{}: config files cannot include other config files",
                origin.display(),
                lineno + 1
            )));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(ConfigEntries { pairs })
}

/// Value of `--config` in the arguments following the subcommand name.
fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Long option names accepted by a subcommand.
fn known_keys(subcommand: &str) -> Option<Vec<String>> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand)?;
    Some(
        sub.get_arguments()
            .filter_map(|a| a.get_long().map(str::to_string))
            .collect(),
    )
}

/// Splices config entries into `argv`. Returns the new argument list and the
/// parsed entries.
pub fn merge_config(argv: Vec<OsString>) -> Result<(Vec<OsString>, ConfigEntries), CliError> {
    if argv.len() < 2 {
        return Ok((argv, ConfigEntries::default()));
    }
    let subcommand = argv[1].to_string_lossy().into_owned();
    let Some(keys) = known_keys(&subcommand) else {
        // let clap report the unknown subcommand or handle --help
        return Ok((argv, ConfigEntries::default()));
    };
    let Some(path) = find_config(&argv[2..]) else {
        return Ok((argv, ConfigEntries::default()));
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config(&text, path)?;

    let mut injected = Vec::new();
    for (k, v) in &entries.pairs {
        if !keys.iter().any(|known| known == k) {
            return Err(CliError::Usage(format!(
                "config key `{k}` is not an option of `{subcommand}`"
            )));
        }
        if given_on_command_line(&argv[2..], k) {
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" => injected.push(OsString::from(format!("--{k}"))),
                "false" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "config key `{k}` expects true or false, got `{v}`"
                    )))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{k}={v}")));
        }
    }
    let mut out = Vec::with_capacity(argv.len() + injected.len());
    out.extend_from_slice(&argv[..2]);
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok((out, entries))
}

fn given_on_command_line(user_args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    user_args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag.as_str() || s.starts_with(&prefix)
    })
}

/// One line per option of the subcommand: value and where it came from.
pub fn describe_block(
    subcommand: &str,
    matches: &ArgMatches,
    user_args: &[OsString],
    config: &ConfigEntries,
) -> String {
    let cmd = Cli::command();
    let mut out = format!("# landscape {subcommand}\n");
    let Some(sub) = cmd.find_subcommand(subcommand) else {
        return out;
    };
    for arg in sub.get_arguments() {
        let (Some(long), id) = (arg.get_long(), arg.get_id().as_str()) else {
            continue;
        };
        if matches!(long, "help" | "version") {
            continue;
        }
        let value = if !arg.get_action().takes_values() {
            matches.get_flag(id).to_string()
        } else if let Some(raw) = matches.get_raw(id) {
            raw.map(|v| v.to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join(",")
        } else {
            "unset".into()
        };
        let source = if given_on_command_line(user_args, long) {
            "command line"
        } else if config.contains(long) {
            "config"
        } else {
            match matches.value_source(id) {
                Some(ValueSource::DefaultValue) => "default",
                Some(_) => "command line",
                None => "unset",
            }
        };
        out.push_str(&format!("#   {long} = {value} ({source})\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = parse_config("# run\nxi = 3:1\n\nrel_tol=1e-7\n", Path::new("c")).unwrap();
        assert_eq!(
            c.pairs,
            vec![
                ("xi".to_string(), "3:1".to_string()),
                ("rel-tol".to_string(), "1e-7".to_string())
            ]
        );
        assert!(parse_config("xi", Path::new("c")).is_err());
        assert!(parse_config("config=x", Path::new("c")).is_err());
    }

    #[test]
    fn finds_config_flag() {
        let a: Vec<OsString> = ["--h", "2", "--config", "f.cfg"]
            .iter()
            .map(Into::into)
            .collect();
        assert_eq!(find_config(&a), Some("f.cfg".into()));
        let b: Vec<OsString> = ["--config=g.cfg"].iter().map(Into::into).collect();
        assert_eq!(find_config(&b), Some("g.cfg".into()));
    }
}
