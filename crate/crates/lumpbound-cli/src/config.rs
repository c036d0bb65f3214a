//! Flat `key = value` config files. Entries become flags inserted right after
//! the subcommand, so flags given on the command line win.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

pub struct Resolved {
    pub args: Vec<OsString>,
    pub config_path: Option<PathBuf>,
    pub config_keys: Vec<String>,
    /// `out` from the config file.
    pub config_out: Option<String>,
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected 'key = value'", i + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Locates `--config`, reads it and splices its entries into `argv`.
pub fn resolve(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Resolved, String> {
    let mut config_path = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            config_path = argv.get(i + 1).map(PathBuf::from);
            if config_path.is_none() {
                return Err("--config needs a path".into());
            }
            i += 1;
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        }
        i += 1;
    }
    let entries = match &config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            parse(&text)?
        }
        None => Vec::new(),
    };
    let mut args = argv;
    let mut sub = args
        .iter()
        .skip(1)
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .map(|p| p + 1);
    if sub.is_none() {
        if let Some((_, c)) = entries.iter().find(|(k, _)| k == "command") {
            args.insert(1, c.into());
            sub = Some(1);
        }
    }
    let mut extra: Vec<OsString> = Vec::new();
    let mut keys = Vec::new();
    let mut config_out = None;
    for (k, v) in &entries {
        match k.as_str() {
            "command" => continue,
            "config" => return Err("a config file cannot name another config file".into()),
            "out" => {
                config_out = Some(v.clone());
                continue;
            }
            _ => {}
        }
        keys.push(k.clone());
        match v.as_str() {
            "true" => extra.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                extra.push(format!("--{k}").into());
                extra.push(v.into());
            }
        }
    }
    if let Some(s) = sub {
        for (j, a) in extra.into_iter().enumerate() {
            args.insert(s + 1 + j, a);
        }
    }
    Ok(Resolved { args, config_path, config_keys: keys, config_out })
}

/// Every argument of the subcommand with its resolved value and origin, in
/// the config format so the manifest can be fed back with `--config`.
pub fn manifest(
    cmd: &Command,
    name: &str,
    m: &ArgMatches,
    user_args: &[OsString],
    config_keys: &[String],
    config_path: Option<&PathBuf>,
    out: &std::path::Path,
) -> String {
    let mut s = format!("# lumpbound {} run\ncommand = {name}\n", env!("CARGO_PKG_VERSION"));
    s += &format!("# config file: {}\n", config_path.map(|p| p.display().to_string()).unwrap_or_else(|| "none".into()));
    s += &format!("# output directory: {}\n", out.display());
    let Some(sc) = cmd.find_subcommand(name) else { return s };
    for arg in sc.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "help" | "config" | "out") {
            continue;
        }
        let Some(raw) = m.get_raw(id) else { continue };
        let value: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        let flag = format!("--{long}");
        let origin = match m.value_source(id) {
            Some(ValueSource::DefaultValue) => "default",
            _ if user_args.iter().any(|a| {
                let a = a.to_string_lossy();
                a == flag || a.starts_with(&format!("{flag}="))
            }) =>
            {
                "flag"
            }
            _ if config_keys.iter().any(|k| k == long) => "config",
            _ => "flag",
        };
        s += &format!("{long} = {}  # {origin}\n", value.join(","));
    }
    s
}
