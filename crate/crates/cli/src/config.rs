//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines and CRLF
//! endings are tolerated. Every key is mandatory and unknown keys are
//! rejected. Initial profiles are named presets: `zero`, `parabola`
//! (`x (l-x) / l^2`), or `sine:<m>` (`sin(m pi x / l)`).

use std::collections::BTreeMap;

use thiserror::Error;

use porobeam_core::model::{ParamError, PhysicalParams};
use porobeam_core::timestepper::{Profile, RunConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Raw `key -> (value, line)` pairs in file order.
pub(crate) fn parse_pairs(text: &str) -> Result<BTreeMap<String, (String, usize)>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim_end_matches('\r');
        let content = match content.find('#') {
            Some(pos) => &content[..pos],
            None => content,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "empty key or value".into(),
            });
        }
        if pairs.insert(key.clone(), (value, line)).is_some() {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(pairs)
}

fn take_f64(
    pairs: &mut BTreeMap<String, (String, usize)>,
    key: &'static str,
) -> Result<f64, ConfigError> {
    let (value, line) = pairs.remove(key).ok_or(ConfigError::MissingKey(key))?;
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("`{key}` is not a number: `{value}`"),
    })
}

fn take_usize(
    pairs: &mut BTreeMap<String, (String, usize)>,
    key: &'static str,
) -> Result<usize, ConfigError> {
    let (value, line) = pairs.remove(key).ok_or(ConfigError::MissingKey(key))?;
    value.parse::<usize>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("`{key}` is not a nonnegative integer: `{value}`"),
    })
}

fn take_profile(
    pairs: &mut BTreeMap<String, (String, usize)>,
    key: &'static str,
) -> Result<Profile, ConfigError> {
    let (value, line) = pairs.remove(key).ok_or(ConfigError::MissingKey(key))?;
    parse_profile(&value).ok_or_else(|| ConfigError::Parse {
        line,
        msg: format!("`{key}` must be zero, parabola, or sine:<m>; got `{value}`"),
    })
}

fn parse_profile(value: &str) -> Option<Profile> {
    match value {
        "zero" => Some(Profile::Zero),
        "parabola" => Some(Profile::Parabola),
        _ => {
            let m = value.strip_prefix("sine:")?.parse::<u32>().ok()?;
            (m >= 1).then_some(Profile::Sine(m))
        }
    }
}

fn profile_text(p: Profile) -> String {
    match p {
        Profile::Zero => "zero".into(),
        Profile::Parabola => "parabola".into(),
        Profile::Sine(m) => format!("sine:{m}"),
    }
}

/// Builds a validated [`RunConfig`] from pre-split pairs; every recognized
/// key must be present and nothing else may remain.
pub(crate) fn config_from_pairs(
    mut pairs: BTreeMap<String, (String, usize)>,
) -> Result<RunConfig, ConfigError> {
    let params = PhysicalParams {
        rho: take_f64(&mut pairs, "rho")?,
        mu: take_f64(&mut pairs, "mu")?,
        b: take_f64(&mut pairs, "b")?,
        j: take_f64(&mut pairs, "J")?,
        delta: take_f64(&mut pairs, "delta")?,
        xi: take_f64(&mut pairs, "xi")?,
        d: take_f64(&mut pairs, "d")?,
        alpha: take_f64(&mut pairs, "alpha")?,
        kappa: take_f64(&mut pairs, "kappa")?,
        k: take_f64(&mut pairs, "k")?,
        l: take_f64(&mut pairs, "l")?,
    }
    .validated()?;
    let cfg = RunConfig {
        params,
        s: take_usize(&mut pairs, "s")?,
        dt: take_f64(&mut pairs, "dt")?,
        t_final: take_f64(&mut pairs, "t_final")?,
        init_u0: take_profile(&mut pairs, "init_u0")?,
        init_u1: take_profile(&mut pairs, "init_u1")?,
        init_phi0: take_profile(&mut pairs, "init_phi0")?,
        init_phi1: take_profile(&mut pairs, "init_phi1")?,
        init_w0: take_profile(&mut pairs, "init_w0")?,
        output_every: take_usize(&mut pairs, "output_every")?,
    };
    if let Some((key, _)) = pairs.into_iter().next() {
        return Err(ConfigError::UnknownKey(key));
    }
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    config_from_pairs(parse_pairs(text)?)
}

/// Inverse of [`parse_config`]: emits every key in canonical order with
/// round-trip float formatting.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    for (key, value) in [
        ("rho", p.rho.to_string()),
        ("mu", p.mu.to_string()),
        ("b", p.b.to_string()),
        ("J", p.j.to_string()),
        ("delta", p.delta.to_string()),
        ("xi", p.xi.to_string()),
        ("d", p.d.to_string()),
        ("alpha", p.alpha.to_string()),
        ("kappa", p.kappa.to_string()),
        ("k", p.k.to_string()),
        ("l", p.l.to_string()),
        ("s", cfg.s.to_string()),
        ("dt", cfg.dt.to_string()),
        ("t_final", cfg.t_final.to_string()),
        ("init_u0", profile_text(cfg.init_u0)),
        ("init_u1", profile_text(cfg.init_u1)),
        ("init_phi0", profile_text(cfg.init_phi0)),
        ("init_phi1", profile_text(cfg.init_phi1)),
        ("init_w0", profile_text(cfg.init_w0)),
        ("output_every", cfg.output_every.to_string()),
    ] {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    }
    out
}

/// A `converge` configuration: the run base plus an optional `levels` key
/// (default 5).
pub fn parse_converge_config(text: &str) -> Result<(RunConfig, usize), ConfigError> {
    let mut pairs = parse_pairs(text)?;
    let levels = match pairs.remove("levels") {
        Some((value, line)) => value.parse::<usize>().map_err(|_| ConfigError::Parse {
            line,
            msg: format!("`levels` is not a nonnegative integer: `{value}`"),
        })?,
        None => 5,
    };
    Ok((config_from_pairs(pairs)?, levels))
}

/// One swept parameter and the values it takes, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    /// `(label, value)` pairs; labels keep the config's literal spelling
    /// for output paths.
    pub values: Vec<(String, f64)>,
}

/// A `sweep` configuration: the run base plus `sweep_key` (one of the
/// numeric run keys) and `sweep_values` (comma-separated numbers).
pub fn parse_sweep_config(text: &str) -> Result<(RunConfig, SweepSpec), ConfigError> {
    let mut pairs = parse_pairs(text)?;
    let (key, key_line) = pairs
        .remove("sweep_key")
        .ok_or(ConfigError::MissingKey("sweep_key"))?;
    const SWEEPABLE: [&str; 14] = [
        "rho", "mu", "b", "J", "delta", "xi", "d", "alpha", "kappa", "k", "l", "s", "dt",
        "t_final",
    ];
    if !SWEEPABLE.contains(&key.as_str()) {
        return Err(ConfigError::Parse {
            line: key_line,
            msg: format!("`sweep_key` must be one of {SWEEPABLE:?}, got `{key}`"),
        });
    }
    let (raw_values, values_line) = pairs
        .remove("sweep_values")
        .ok_or(ConfigError::MissingKey("sweep_values"))?;
    let mut values = Vec::new();
    for token in raw_values.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let value = token.parse::<f64>().map_err(|_| ConfigError::Parse {
            line: values_line,
            msg: format!("sweep value `{token}` is not a number"),
        })?;
        values.push((token.to_string(), value));
    }
    if values.is_empty() {
        return Err(ConfigError::Parse {
            line: values_line,
            msg: "sweep_values lists no values".into(),
        });
    }
    Ok((config_from_pairs(pairs)?, SweepSpec { key, values }))
}

/// Applies one swept value onto a base configuration.
pub fn apply_sweep_value(base: &RunConfig, key: &str, value: f64) -> Result<RunConfig, ConfigError> {
    let mut cfg = base.clone();
    let mut params = cfg.params;
    match key {
        "rho" => params.rho = value,
        "mu" => params.mu = value,
        "b" => params.b = value,
        "J" => params.j = value,
        "delta" => params.delta = value,
        "xi" => params.xi = value,
        "d" => params.d = value,
        "alpha" => params.alpha = value,
        "kappa" => params.kappa = value,
        "k" => params.k = value,
        "l" => params.l = value,
        "dt" => {
            cfg.dt = value;
            cfg.params = params;
            return Ok(cfg);
        }
        "t_final" => {
            cfg.t_final = value;
            cfg.params = params;
            return Ok(cfg);
        }
        "s" => {
            cfg.s = value as usize;
            cfg.params = params;
            return Ok(cfg);
        }
        other => return Err(ConfigError::UnknownKey(other.to_string())),
    }
    cfg.params = params.validated()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn demo_text() -> String {
        std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../configs/paper.cfg"
        ))
        .expect("shipped reference config")
    }

    #[test]
    fn shipped_reference_config_parses() {
        let cfg = parse_config(&demo_text()).unwrap();
        assert_eq!(cfg.s, 11);
        assert_eq!(cfg.dt, 1.0 / 22.0);
        assert_eq!(cfg.t_final, 25.0);
        assert_eq!(cfg.params.k, 1.0);
        assert_eq!(cfg.params.mu, 0.01);
        assert_eq!(cfg.init_w0, Profile::Parabola);
    }

    #[test]
    fn empty_document_reports_first_missing_key() {
        assert_eq!(
            parse_config("").unwrap_err(),
            ConfigError::MissingKey("rho")
        );
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{}\nwibble = 3\n", demo_text());
        assert_eq!(
            parse_config(&text).unwrap_err(),
            ConfigError::UnknownKey("wibble".into())
        );
    }

    #[test]
    fn duplicate_key_is_a_parse_error() {
        let text = format!("{}\nrho = 0.5\n", demo_text());
        assert!(matches!(
            parse_config(&text).unwrap_err(),
            ConfigError::Parse { .. }
        ));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let err = parse_config("rho 0.001\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 1,
                msg: "expected `key = value`, got `rho 0.001`".into()
            }
        );
    }

    #[test]
    fn crlf_and_comments_are_tolerated() {
        let text = demo_text().replace('\n', "\r\n");
        let text = format!("# leading comment\r\n{text}");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn invalid_params_surface_as_param_errors() {
        let text = demo_text().replace("mu = 0.01", "mu = -1");
        assert!(matches!(
            parse_config(&text).unwrap_err(),
            ConfigError::Params(_)
        ));
    }

    #[test]
    fn one_element_mesh_is_accepted_by_parse() {
        // s = 1 parses; the mesh build rejects it later.
        let text = demo_text().replace("s = 11", "s = 1");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.s, 1);
        assert!(porobeam_core::timestepper::run(&cfg).is_err());
    }

    #[test]
    fn sine_profiles_parse() {
        let text = demo_text().replace("init_w0 = parabola", "init_w0 = sine:3");
        assert_eq!(parse_config(&text).unwrap().init_w0, Profile::Sine(3));
        let bad = demo_text().replace("init_w0 = parabola", "init_w0 = sine:0");
        assert!(matches!(
            parse_config(&bad).unwrap_err(),
            ConfigError::Parse { .. }
        ));
    }

    #[test]
    fn serialize_round_trips_exactly() {
        let mut cfg = parse_config(&demo_text()).unwrap();
        cfg.init_phi1 = Profile::Sine(4);
        cfg.dt = 0.017;
        let text = serialize_config(&cfg);
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_config_extracts_grid() {
        let text = format!("{}\nsweep_key = k\nsweep_values = 0.5, 1, 2\n", demo_text());
        let (base, spec) = parse_sweep_config(&text).unwrap();
        assert_eq!(base.params.k, 1.0);
        assert_eq!(spec.key, "k");
        assert_eq!(
            spec.values,
            vec![
                ("0.5".to_string(), 0.5),
                ("1".to_string(), 1.0),
                ("2".to_string(), 2.0)
            ]
        );
        let swept = apply_sweep_value(&base, "k", 2.0).unwrap();
        assert_eq!(swept.params.k, 2.0);
    }

    #[test]
    fn sweep_rejects_non_numeric_keys() {
        let text = format!(
            "{}\nsweep_key = init_u0\nsweep_values = 1, 2\n",
            demo_text()
        );
        assert!(matches!(
            parse_sweep_config(&text).unwrap_err(),
            ConfigError::Parse { .. }
        ));
    }

    #[test]
    fn converge_levels_key_is_optional() {
        let (_, levels) = parse_converge_config(&demo_text()).unwrap();
        assert_eq!(levels, 5);
        let text = format!("{}\nlevels = 3\n", demo_text());
        let (_, levels) = parse_converge_config(&text).unwrap();
        assert_eq!(levels, 3);
    }
}
