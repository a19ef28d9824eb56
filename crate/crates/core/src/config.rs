//! Flat `key=value` configuration.
//!
//! One or more assignments per line, separated by whitespace; `#` starts a
//! comment. Keys left out keep their [`SimConfig::default`] values.
//!
//! ```text
//! # greedy selection with SNR-driven buffers
//! policy=greedy buffer=dynamic-snr d1=2 d2=2
//! snr=0:16:2
//! ```

use std::str::FromStr;

use crate::protocol::{ConfigError, SimConfig};

pub const KEYS: &[&str] = &[
    "users",
    "relays",
    "chips",
    "symbols",
    "packets",
    "snr",
    "detector_relay",
    "detector_dest",
    "policy",
    "scheme",
    "buffer",
    "buffer_size",
    "j_min",
    "j_max",
    "d1",
    "d2",
    "d3",
    "gamma",
    "seed",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| ConfigError::new(key, format!("cannot parse `{raw}`: {e}")))
}

/// Parses an SNR grid: `a:b:step` (inclusive of `b`) or a single value.
pub fn parse_snr_grid(raw: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = raw.split(':').collect();
    let number = |s: &str| value::<f64>("snr", s.trim());
    match parts.as_slice() {
        [single] => Ok(vec![number(single)?]),
        [a, b, step] => {
            let (a, b, step) = (number(a)?, number(b)?, number(step)?);
            if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || b < a {
                return Err(ConfigError::new("snr", format!("`{raw}` is not an increasing a:b:step range")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(ConfigError::new("snr", format!("expected a:b:step or a single value, got `{raw}`"))),
    }
}

/// Applies one assignment to `config` without cross-field validation.
pub fn apply(config: &mut SimConfig, key: &str, raw: &str) -> Result<(), ConfigError> {
    match key {
        "users" => config.users = value(key, raw)?,
        "relays" => config.relays = value(key, raw)?,
        "chips" => config.chips = value(key, raw)?,
        "symbols" => config.symbols = value(key, raw)?,
        "packets" => config.packets = value(key, raw)?,
        "snr" => config.snr_db = parse_snr_grid(raw)?,
        "detector_relay" => config.relay_detector = value(key, raw)?,
        "detector_dest" => config.dest_detector = value(key, raw)?,
        "policy" => config.policy = raw.to_string(),
        "scheme" => config.scheme = raw.to_string(),
        "buffer" => config.buffer.mode = value(key, raw)?,
        "buffer_size" => config.buffer.size = value(key, raw)?,
        "j_min" => config.buffer.j_min = value(key, raw)?,
        "j_max" => config.buffer.j_max = value(key, raw)?,
        "d1" => config.buffer.d1 = value(key, raw)?,
        "d2" => config.buffer.d2 = value(key, raw)?,
        "d3" => config.buffer.d3 = value(key, raw)?,
        "gamma" => config.buffer.gamma = value(key, raw)?,
        "seed" => config.seed = value(key, raw)?,
        _ => return Err(ConfigError::new(key, format!("unknown key (known: {})", KEYS.join(", ")))),
    }
    Ok(())
}

/// Reads assignments on top of the defaults, without validating.
pub fn parse_unvalidated(text: &str) -> Result<SimConfig, ConfigError> {
    let mut config = SimConfig::default();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let (key, raw) = token.split_once('=').ok_or_else(|| ConfigError::new(token, "expected key=value"))?;
            apply(&mut config, key.trim(), raw.trim())?;
        }
    }
    Ok(config)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let config = parse_unvalidated(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buffer::BufferMode;

    #[test]
    fn empty_text_is_the_default_scenario() {
        let c = parse_config("").unwrap();
        assert_eq!((c.users, c.relays, c.chips, c.symbols, c.buffer.size), (3, 6, 16, 1000, 6));
        assert_eq!(c.snr_db, [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
    }

    #[test]
    fn zero_users_names_the_key() {
        assert_eq!(parse_config("users=0").unwrap_err().key, "users");
    }

    #[test]
    fn dynamic_greedy_line() {
        let c = parse_config("policy=greedy buffer=dynamic-snr d1=2 d2=2").unwrap();
        assert_eq!(c.policy, "greedy");
        assert_eq!(c.buffer.mode, BufferMode::DynamicSnr);
        assert_eq!((c.buffer.d1, c.buffer.d2), (2.0, 2));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# header\n\nseed=9   # trailing\n packets=4\n").unwrap();
        assert_eq!((c.seed, c.packets), (9, 4));
    }

    #[test]
    fn rejections_name_the_key() {
        for (text, key) in [
            ("colour=blue", "colour"),
            ("chips=-3", "chips"),
            ("relays=5 policy=fixed", "relays"),
            ("scheme=teleport", "scheme"),
            ("policy=psychic", "policy"),
            ("snr=4:0:2", "snr"),
            ("detector_relay=zf", "detector_relay"),
            ("users", "users"),
        ] {
            assert_eq!(parse_config(text).unwrap_err().key, key, "{text}");
        }
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_grid("0:4:2").unwrap(), [0.0, 2.0, 4.0]);
        assert_eq!(parse_snr_grid("0:0.3:0.1").unwrap().len(), 4);
        assert_eq!(parse_snr_grid("7.5").unwrap(), [7.5]);
    }
}
