//! Tracker settings from defaults, a flat `key = value` file and flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use oasort::TrackerConfig;

/// Settings shared by `track` and `ablate`. Every option is also accepted as a
/// key in the `--config` file, spelled as the flag without its dashes.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` file applied before the flags; `#` starts a comment.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Weight of the occlusion term in first-stage scores, in [0, 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Horizontal Gaussian divisor (sigma_x = width / kx).
    #[arg(long)]
    pub kx: Option<f64>,
    /// Vertical Gaussian divisor (sigma_y = height / ky).
    #[arg(long)]
    pub ky: Option<f64>,
    /// Bottom-edge gap in pixels before one box counts as in front.
    #[arg(long)]
    pub occ_thresh: Option<f64>,
    #[arg(long)]
    pub high_thresh: Option<f64>,
    #[arg(long)]
    pub low_thresh: Option<f64>,
    /// Minimum association score for a match.
    #[arg(long)]
    pub gate: Option<f64>,
    #[arg(long)]
    pub max_age: Option<u32>,
    #[arg(long)]
    pub min_hits: Option<u32>,
    #[arg(long)]
    pub image_width: Option<u32>,
    #[arg(long)]
    pub image_height: Option<u32>,
    /// Disable the occlusion offset in the first stage.
    #[arg(long)]
    pub no_oao: bool,
    /// Disable momentum-weighted updates.
    #[arg(long)]
    pub no_bam: bool,
    /// Use raw instead of Gaussian-refined occlusion.
    #[arg(long)]
    pub no_gm: bool,
    /// Skip the low-score stage.
    #[arg(long)]
    pub no_byte: bool,
    /// Skip the lost-track stage.
    #[arg(long)]
    pub no_third: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<TrackerConfig> {
        let mut cfg = TrackerConfig::default();
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        let mut set = |key: &str, value: String| apply(&mut cfg, key, &value);
        let numbers: [(&str, Option<String>); 11] = [
            ("tau", self.tau.map(|v| v.to_string())),
            ("kx", self.kx.map(|v| v.to_string())),
            ("ky", self.ky.map(|v| v.to_string())),
            ("occ-thresh", self.occ_thresh.map(|v| v.to_string())),
            ("high-thresh", self.high_thresh.map(|v| v.to_string())),
            ("low-thresh", self.low_thresh.map(|v| v.to_string())),
            ("gate", self.gate.map(|v| v.to_string())),
            ("max-age", self.max_age.map(|v| v.to_string())),
            ("min-hits", self.min_hits.map(|v| v.to_string())),
            ("image-width", self.image_width.map(|v| v.to_string())),
            ("image-height", self.image_height.map(|v| v.to_string())),
        ];
        for (key, value) in numbers {
            if let Some(v) = value {
                set(key, v)?;
            }
        }
        let switches = [
            ("no-oao", self.no_oao),
            ("no-bam", self.no_bam),
            ("no-gm", self.no_gm),
            ("no-byte", self.no_byte),
            ("no-third", self.no_third),
        ];
        for (key, on) in switches {
            if on {
                set(key, "true".into())?;
            }
        }
        cfg.occlusion.use_gm = cfg.toggles.gm;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_file(cfg: &mut TrackerConfig, path: &Path) -> Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), n + 1);
        };
        apply(cfg, key.trim(), value.trim())
            .with_context(|| format!("{}:{}", path.display(), n + 1))?;
    }
    Ok(())
}

fn apply(cfg: &mut TrackerConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| anyhow::anyhow!("{key}: cannot parse {value:?}"))
    }
    let t = &mut cfg.toggles;
    match key {
        "tau" => cfg.tau = num(key, value)?,
        "kx" => cfg.occlusion.k_x = num(key, value)?,
        "ky" => cfg.occlusion.k_y = num(key, value)?,
        "occ-thresh" => cfg.occlusion.thre_occ = num(key, value)?,
        "high-thresh" => cfg.high_thresh = num(key, value)?,
        "low-thresh" => cfg.low_thresh = num(key, value)?,
        "gate" => cfg.gate = num(key, value)?,
        "max-age" => cfg.max_age = num(key, value)?,
        "min-hits" => cfg.min_hits = num(key, value)?,
        "image-width" => cfg.occlusion.image_width = num(key, value)?,
        "image-height" => cfg.occlusion.image_height = num(key, value)?,
        "no-oao" => t.oao = !num::<bool>(key, value)?,
        "no-bam" => t.bam = !num::<bool>(key, value)?,
        "no-gm" => t.gm = !num::<bool>(key, value)?,
        "no-byte" => t.byte_stage = !num::<bool>(key, value)?,
        "no-third" => t.third_stage = !num::<bool>(key, value)?,
        _ => bail!("unknown setting {key:?}"),
    }
    Ok(())
}

/// `cfg` in the config file format; reading it back yields `cfg`.
pub fn to_config_text(cfg: &TrackerConfig) -> String {
    let t = cfg.toggles;
    let o = cfg.occlusion;
    let mut out = String::new();
    let pairs: [(&str, String); 16] = [
        ("tau", cfg.tau.to_string()),
        ("kx", o.k_x.to_string()),
        ("ky", o.k_y.to_string()),
        ("occ-thresh", o.thre_occ.to_string()),
        ("high-thresh", cfg.high_thresh.to_string()),
        ("low-thresh", cfg.low_thresh.to_string()),
        ("gate", cfg.gate.to_string()),
        ("max-age", cfg.max_age.to_string()),
        ("min-hits", cfg.min_hits.to_string()),
        ("image-width", o.image_width.to_string()),
        ("image-height", o.image_height.to_string()),
        ("no-oao", (!t.oao).to_string()),
        ("no-bam", (!t.bam).to_string()),
        ("no-gm", (!t.gm).to_string()),
        ("no-byte", (!t.byte_stage).to_string()),
        ("no-third", (!t.third_stage).to_string()),
    ];
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
