//! Pipeline configuration assembly: built-in defaults, then an optional
//! `key = value` config file, then command-line flags, in that order.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cytoseg_core::edf::FocusParams;
use cytoseg_core::pipeline::PipelineConfig;

/// Flag-level overrides collected by the `segment` command.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub prior_alpha: Option<f64>,
    pub h_maxima_h: Option<u8>,
    pub median_window: Option<usize>,
    pub min_clump_area: Option<usize>,
    pub min_nucleus_area: Option<usize>,
    pub nucleus_disc_radius: Option<f64>,
    pub drlse_iterations: Option<usize>,
}

/// Resolve the effective configuration.
pub fn resolve(config_file: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        apply_file(&mut cfg, &text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
    }
    if let Some(v) = overrides.prior_alpha {
        cfg.prior_alpha = v;
    }
    if let Some(v) = overrides.h_maxima_h {
        cfg.h_maxima_h = v;
    }
    if let Some(v) = overrides.median_window {
        cfg.median_window = v;
    }
    if let Some(v) = overrides.min_clump_area {
        cfg.min_clump_area = v;
    }
    if let Some(v) = overrides.min_nucleus_area {
        cfg.min_nucleus_area = v;
    }
    if let Some(v) = overrides.nucleus_disc_radius {
        cfg.nucleus_disc_radius = Some(v);
    }
    if let Some(v) = overrides.drlse_iterations {
        cfg.drlse.iterations = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_file(cfg: &mut PipelineConfig, text: &str) -> Result<()> {
    let mut focus_window = cfg.focus.window();
    let mut smooth_window = cfg.focus.smooth_window();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got {raw:?}", lineno + 1);
        };
        let key = key.trim();
        let value = value.trim();
        let ctx = |what: &str| format!("line {}: bad {what} value {value:?}", lineno + 1);
        match key {
            "median_window" => cfg.median_window = value.parse().with_context(|| ctx(key))?,
            "clahe_tile_rows" => cfg.clahe_tile_rows = value.parse().with_context(|| ctx(key))?,
            "clahe_tile_cols" => cfg.clahe_tile_cols = value.parse().with_context(|| ctx(key))?,
            "clahe_clip" => cfg.clahe_clip = value.parse().with_context(|| ctx(key))?,
            "h_maxima_h" => cfg.h_maxima_h = value.parse().with_context(|| ctx(key))?,
            "min_clump_area" => cfg.min_clump_area = value.parse().with_context(|| ctx(key))?,
            "min_nucleus_area" => cfg.min_nucleus_area = value.parse().with_context(|| ctx(key))?,
            "prior_alpha" => cfg.prior_alpha = value.parse().with_context(|| ctx(key))?,
            "nucleus_disc_radius" => {
                cfg.nucleus_disc_radius = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(value.parse().with_context(|| ctx(key))?)
                };
            }
            "drlse_mu" => cfg.drlse.mu = value.parse().with_context(|| ctx(key))?,
            "drlse_lambda" => cfg.drlse.lambda = value.parse().with_context(|| ctx(key))?,
            "drlse_balloon_alpha" => {
                cfg.drlse.balloon_alpha = value.parse().with_context(|| ctx(key))?
            }
            "drlse_epsilon" => cfg.drlse.epsilon = value.parse().with_context(|| ctx(key))?,
            "drlse_dt" => cfg.drlse.dt = value.parse().with_context(|| ctx(key))?,
            "drlse_iterations" => {
                cfg.drlse.iterations = value.parse().with_context(|| ctx(key))?
            }
            "drlse_c0" => cfg.drlse.c0 = value.parse().with_context(|| ctx(key))?,
            "drlse_sigma" => cfg.drlse.sigma = value.parse().with_context(|| ctx(key))?,
            "focus_window" => focus_window = value.parse().with_context(|| ctx(key))?,
            "smooth_window" => smooth_window = value.parse().with_context(|| ctx(key))?,
            other => bail!("line {}: unknown config key {other:?}", lineno + 1),
        }
    }
    cfg.focus = FocusParams::new(focus_window, smooth_window)?;
    Ok(())
}

/// Worker count: the `--jobs` flag, else `CYTOSEG_JOBS`, else all cores.
pub fn resolve_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("CYTOSEG_JOBS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .with_context(|| format!("CYTOSEG_JOBS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                bail!("CYTOSEG_JOBS must be positive");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}
