//! Key-value experiment configuration: file loading and `--set` overrides.

use arraydpd_core::scenarios::{DpdMode, ScenarioConfig};

/// Apply one `key=value` pair to the config. Unknown keys and malformed
/// values are rejected with a message naming the key.
pub fn apply_kv(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .trim()
            .parse()
            .map_err(|_| format!("invalid value {value:?} for key {key:?}"))
    }
    match key {
        "m" => cfg.m = parse(key, value)?,
        "m_sweep" => {
            let mut vals = Vec::new();
            for part in value.split(',') {
                vals.push(parse::<usize>(key, part)?);
            }
            cfg.m_sweep = vals;
        }
        "q" => cfg.q = parse(key, value)?,
        "pa_order" => cfg.pa_order = parse(key, value)?,
        "drive" => cfg.drive = parse(key, value)?,
        "pa_spread" => cfg.pa_spread = parse(key, value)?,
        "rolloff" => cfg.rolloff = parse(key, value)?,
        "upsampling" => cfg.upsampling = parse(key, value)?,
        "span_symbols" => cfg.span_symbols = parse(key, value)?,
        "symbol_rate_hz" => cfg.symbol_rate_hz = parse(key, value)?,
        "modulation_order" => cfg.modulation_order = parse(key, value)?,
        "n_learn_symbols" => cfg.n_learn_symbols = parse(key, value)?,
        "learn_iterations" => cfg.learn_iterations = parse(key, value)?,
        "step_size" => cfg.step_size = parse(key, value)?,
        "n_eval_symbols" => cfg.n_eval_symbols = parse(key, value)?,
        "n_intended_draws" => cfg.n_intended_draws = parse(key, value)?,
        "n_victims" => cfg.n_victims = parse(key, value)?,
        "n_redraws" => cfg.n_redraws = parse(key, value)?,
        "base_seed" => cfg.base_seed = parse(key, value)?,
        "welch_segment" => cfg.welch_segment = parse(key, value)?,
        "dpd_mode" => {
            cfg.dpd_mode = match value.trim() {
                "off" => DpdMode::Off,
                "full" => DpdMode::Full,
                "reduced" => DpdMode::Reduced,
                other => return Err(format!("invalid dpd_mode {other:?}; expected off|full|reduced")),
            }
        }
        other => return Err(format!("unknown config key {other:?}")),
    }
    Ok(())
}

/// Parse a `key=value` config file; `#` starts a comment, blank lines are
/// skipped, errors carry the line number.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, String> {
    let mut cfg = ScenarioConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", lineno + 1))?;
        apply_kv(&mut cfg, key.trim(), value)
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
    }
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text)
}

/// Resolved config as key=value lines (the manifest's config section and a
/// valid input for `--config`).
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let sweep = cfg
        .m_sweep
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "m={}\nm_sweep={}\nq={}\npa_order={}\ndrive={}\npa_spread={}\nrolloff={}\n\
         upsampling={}\nspan_symbols={}\nsymbol_rate_hz={}\nmodulation_order={}\n\
         n_learn_symbols={}\nlearn_iterations={}\nstep_size={}\nn_eval_symbols={}\n\
         n_intended_draws={}\nn_victims={}\nn_redraws={}\ndpd_mode={}\nbase_seed={}\n\
         welch_segment={}\n",
        cfg.m,
        sweep,
        cfg.q,
        cfg.pa_order,
        cfg.drive,
        cfg.pa_spread,
        cfg.rolloff,
        cfg.upsampling,
        cfg.span_symbols,
        cfg.symbol_rate_hz,
        cfg.modulation_order,
        cfg.n_learn_symbols,
        cfg.learn_iterations,
        cfg.step_size,
        cfg.n_eval_symbols,
        cfg.n_intended_draws,
        cfg.n_victims,
        cfg.n_redraws,
        cfg.dpd_mode.label(),
        cfg.base_seed,
        cfg.welch_segment,
    )
}
