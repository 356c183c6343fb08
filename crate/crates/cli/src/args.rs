//! Flag value parsers and config-file merging.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mrmul::matmul::{PartitionSchema, ShardKind};

/// Decimal number or `base^exponent`, e.g. `2^-7`.
pub fn real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b.trim().parse().map_err(|_| format!("invalid base in `{s}`"))?;
            let e: f64 = e.trim().parse().map_err(|_| format!("invalid exponent in `{s}`"))?;
            b.powf(e)
        }
        None => s.parse().map_err(|_| format!("invalid number `{s}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn density(s: &str) -> Result<f64, String> {
    let d = real(s)?;
    if (0.0..=1.0).contains(&d) {
        Ok(d)
    } else {
        Err(format!("density {d} outside [0, 1]"))
    }
}

pub fn workers(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("`{s}` is not a positive worker count")),
        Ok(n) => Ok(n),
    }
}

pub fn schema(s: &str) -> Result<PartitionSchema, String> {
    s.parse().map_err(|e: mrmul::Error| e.to_string())
}

pub fn shard(s: &str) -> Result<ShardKind, String> {
    s.parse().map_err(|e: mrmul::Error| e.to_string())
}

/// Reads `key=value` lines; `#` starts a comment line.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), n + 1);
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("{}:{}: empty key", path.display(), n + 1);
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Removes `--config PATH` from `args` and returns its path.
fn take_config(args: &mut Vec<String>) -> Result<Option<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(None);
    };
    let flag = args.remove(pos);
    match flag.strip_prefix("--config=") {
        Some(v) => Ok(Some(v.to_string())),
        None if pos < args.len() => Ok(Some(args.remove(pos))),
        None => bail!("--config needs a path"),
    }
}

fn has_flag(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    args.iter().any(|a| *a == long || a.starts_with(&format!("{long}=")))
}

/// Merges config-file values into `args` right after the subcommand name.
/// Flags given on the command line win. A key `true`/`false` toggles a
/// boolean switch.
pub fn merge_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = take_config(&mut args)? else {
        return Ok(args);
    };
    let pairs = read_config(Path::new(&path))?;
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 2) else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for (key, value) in pairs {
        if has_flag(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => injected.push(format!("--{key}={value}")),
        }
    }
    args.splice(sub..sub, injected);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_notation() {
        assert_eq!(real("2^-7").unwrap(), 1.0 / 128.0);
        assert_eq!(real("0.25").unwrap(), 0.25);
        assert_eq!(real("1e-8").unwrap(), 1e-8);
        assert!(real("2^x").is_err());
        assert!(density("2^1").is_err());
    }

    #[test]
    fn schema_and_shard_values() {
        assert_eq!(schema("2x3x4").unwrap(), PartitionSchema::new(2, 3, 4).unwrap());
        assert!(schema("0x1x1").is_err());
        assert_eq!(shard("rand").unwrap(), ShardKind::Rand);
        assert!(workers("0").is_err());
    }

    #[test]
    fn config_merges_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("mrmul-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("run.conf");
        std::fs::write(&cfg, "# defaults\nworkers = 3\nseed=9\n").unwrap();
        let args: Vec<String> = ["mrmul", "--config", cfg.to_str().unwrap(), "generate", "--seed", "2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let merged = merge_config(args).unwrap();
        assert_eq!(merged, vec!["mrmul", "generate", "--workers=3", "--seed", "2"]);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
